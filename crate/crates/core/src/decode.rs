//! Receiving-side pipeline.
//!
//! A received stream goes through five stages, each exposed on its own:
//!
//! 1. [`correct_errors`]: zero-runs of one or two symbols with white on both
//!    sides become white.
//! 2. [`run_lengths`]: one entry per colour change.
//! 3. [`trim_quiet_zones`]: drop the white margins.
//! 4. [`split_merged_runs`]: separate the bar pairs that fuse at each digit
//!    boundary, recovering 36 runs from 33.
//! 5. [`threshold_classify`]: cut at the midpoint of the shortest and longest
//!    run to get 36 wide/narrow flags, which [`crate::code39::decode_card`]
//!    resolves to four digits.

use std::fmt;

use crate::code39::{self, CardCode, MatchResult, CARD_DIGITS, CARD_ELEMENTS, DIGIT_ELEMENTS};
use crate::scanline::{element_symbol, Symbol, SymbolStream};

/// Which correction rule runs before run-length extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Correction {
    Off,
    /// Short zero-runs between fives become fives.
    #[default]
    On,
    /// As `On`, and short five-runs between zeros also become zeros.
    Symmetric,
}

impl Correction {
    pub const ALL: [Correction; 3] = [Correction::On, Correction::Off, Correction::Symmetric];

    pub fn name(self) -> &'static str {
        match self {
            Correction::Off => "off",
            Correction::On => "on",
            Correction::Symmetric => "symmetric",
        }
    }
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Correction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(Correction::Off),
            "on" => Ok(Correction::On),
            "symmetric" => Ok(Correction::Symmetric),
            other => Err(format!(
                "unknown correction mode {other:?} (expected on, off or symmetric)"
            )),
        }
    }
}

/// Longest run the correction rule rewrites.
pub const CORRECTION_REACH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Run {
    pub symbol: Symbol,
    pub len: usize,
}

/// Run-length form of a stream. Lengths are positive and neighbours differ.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct RunArray(Vec<Run>);

impl RunArray {
    /// Normalises the input: zero-length runs are dropped and equal
    /// neighbours are merged.
    pub fn new(runs: Vec<Run>) -> Self {
        let mut out: Vec<Run> = Vec::with_capacity(runs.len());
        for run in runs.into_iter().filter(|r| r.len > 0) {
            match out.last_mut() {
                Some(last) if last.symbol == run.symbol => last.len += run.len,
                _ => out.push(run),
            }
        }
        Self(out)
    }

    pub fn runs(&self) -> &[Run] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.0.iter().map(|r| r.len).collect()
    }

    pub fn to_stream(&self) -> SymbolStream {
        self.0
            .iter()
            .flat_map(|r| std::iter::repeat_n(r.symbol, r.len))
            .collect::<Vec<_>>()
            .into()
    }
}

/// Thick (1) / thin (0) flags recovered from 36 runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitArray36(pub [bool; CARD_ELEMENTS]);

impl BitArray36 {
    pub fn bits(&self) -> &[bool; CARD_ELEMENTS] {
        &self.0
    }
}

impl fmt::Display for BitArray36 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FailureReason {
    None,
    BadRunCount,
    AmbiguousDigit,
}

impl FailureReason {
    pub fn name(self) -> &'static str {
        match self {
            FailureReason::None => "none",
            FailureReason::BadRunCount => "bad_run_count",
            FailureReason::AmbiguousDigit => "ambiguous_digit",
        }
    }
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeReport {
    /// Present iff `failure` is [`FailureReason::None`].
    pub card: Option<CardCode>,
    /// Empty when decoding stopped before digit matching.
    pub matches: Vec<MatchResult>,
    pub bits: Option<BitArray36>,
    pub threshold: Option<f64>,
    /// Runs left after trimming the margins, before boundary splitting.
    pub run_count_observed: usize,
    pub failure: FailureReason,
}

/// Column names for [`DecodeReport::to_record`].
pub const RECORD_HEADER: &str = "card,failure,runs,threshold,score1,score2,score3,score4";

impl DecodeReport {
    pub fn is_success(&self) -> bool {
        self.failure == FailureReason::None
    }

    /// Digits resolved by matching, even when strict mode rejected the card.
    pub fn resolved_digits(&self) -> Option<[u8; CARD_DIGITS]> {
        if self.matches.len() != CARD_DIGITS {
            return None;
        }
        Some(std::array::from_fn(|i| self.matches[i].digit))
    }

    /// Single comma-separated line; empty fields for stages never reached.
    pub fn to_record(&self) -> String {
        let card = self.card.map(|c| c.to_string()).unwrap_or_default();
        let threshold = self.threshold.map(|t| t.to_string()).unwrap_or_default();
        let mut scores: Vec<String> = self.matches.iter().map(|m| m.score.to_string()).collect();
        scores.resize(CARD_DIGITS, String::new());
        format!(
            "{card},{},{},{threshold},{}",
            self.failure,
            self.run_count_observed,
            scores.join(",")
        )
    }
}

/// Multi-line operator view: bit array, per-digit match lines, result.
impl fmt::Display for DecodeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "runs observed: {}", self.run_count_observed)?;
        if let Some(t) = self.threshold {
            writeln!(f, "threshold:     {t}")?;
        }
        if let Some(bits) = &self.bits {
            let groups: Vec<String> = bits
                .0
                .chunks(DIGIT_ELEMENTS)
                .map(|g| g.iter().map(|&b| if b { '1' } else { '0' }).collect())
                .collect();
            writeln!(f, "bit array:     {}", groups.join(" "))?;
            for (i, (group, m)) in groups.iter().zip(&self.matches).enumerate() {
                writeln!(
                    f,
                    "digit {}:       {group} -> {} ({}/9 matched{})",
                    i + 1,
                    m.digit,
                    m.score,
                    if m.ambiguous { ", ambiguous" } else { "" }
                )?;
            }
        }
        match self.card {
            Some(card) => write!(f, "result:        {card}"),
            None => write!(f, "result:        FAILED ({})", self.failure),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DecodeOptions {
    pub correction: Correction,
    /// Reject a card when any digit match is tied.
    pub strict: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        Self {
            correction: Correction::On,
            strict: true,
        }
    }
}

/// The receiving-side correction rule, one-directional.
pub fn correct_errors(s: &SymbolStream) -> SymbolStream {
    correct_errors_with(s, Correction::On)
}

/// Single pass over the run structure of the input. Every decision is made
/// against the original runs, so a rewrite never enables another one within
/// the same call.
pub fn correct_errors_with(s: &SymbolStream, mode: Correction) -> SymbolStream {
    if mode == Correction::Off {
        return s.clone();
    }
    let runs = run_lengths(s);
    let r = runs.runs();
    let mut out = Vec::with_capacity(s.len());
    for (i, run) in r.iter().enumerate() {
        let flanked = i > 0 && i + 1 < r.len();
        let rewrite = flanked
            && run.len <= CORRECTION_REACH
            && match run.symbol {
                Symbol::S0 => true,
                Symbol::S5 => mode == Correction::Symmetric,
            };
        // Alternation guarantees the neighbours carry the other symbol.
        let symbol = if rewrite {
            run.symbol.flipped()
        } else {
            run.symbol
        };
        out.extend(std::iter::repeat_n(symbol, run.len));
    }
    out.into()
}

pub fn run_lengths(s: &SymbolStream) -> RunArray {
    let mut runs: Vec<Run> = Vec::new();
    for &symbol in s.symbols() {
        match runs.last_mut() {
            Some(last) if last.symbol == symbol => last.len += 1,
            _ => runs.push(Run { symbol, len: 1 }),
        }
    }
    RunArray(runs)
}

pub fn trim_quiet_zones(r: &RunArray) -> RunArray {
    let mut runs = r.runs();
    if let Some((first, rest)) = runs.split_first() {
        if first.symbol == Symbol::S5 {
            runs = rest;
        }
    }
    if let Some((last, rest)) = runs.split_last() {
        if last.symbol == Symbol::S5 {
            runs = rest;
        }
    }
    RunArray(runs.to_vec())
}

/// Digit boundaries in a card, as the index of the left-hand element.
const BOUNDARIES: [usize; CARD_DIGITS - 1] = [8, 17, 26];

/// A boundary run counts as fused when it exceeds this many narrow widths.
const FUSED_FACTOR: f64 = 1.5;

/// Separates bar pairs fused at digit boundaries.
///
/// With `36 - k` runs for `k` in 1..=3, every choice of `k` fused boundaries
/// is tried; a choice is accepted when each run lands on an element of its
/// own colour and every fused run is longer than one narrow element. The
/// first accepted choice is split. Anything else is returned unchanged.
///
/// A fused pair is one of narrow+narrow, narrow+wide or wide+wide, judged
/// by the nearest sum of the narrow and wide widths estimated from the
/// unfused runs. Equal pairs split in half (the left part takes the odd
/// symbol). A mixed pair puts the wide part on the left exactly when the
/// left digit's other four bars hold fewer than two wide ones, since every
/// digit has two wide bars.
pub fn split_merged_runs(r: &RunArray) -> RunArray {
    let n = r.len();
    if n >= CARD_ELEMENTS || n + BOUNDARIES.len() < CARD_ELEMENTS {
        return r.clone();
    }
    let k = CARD_ELEMENTS - n;
    for fused in boundary_subsets(k) {
        if let Some(widths) = try_split(r.runs(), &fused) {
            let runs = widths
                .into_iter()
                .enumerate()
                .map(|(e, len)| Run {
                    symbol: element_symbol(e),
                    len,
                })
                .collect();
            return RunArray(runs);
        }
    }
    r.clone()
}

fn boundary_subsets(k: usize) -> Vec<[bool; 3]> {
    (0u8..8)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| std::array::from_fn(|b| m >> b & 1 == 1))
        .collect()
}

/// Element widths for one fusion hypothesis, or `None` if it does not fit.
fn try_split(runs: &[Run], fused: &[bool; 3]) -> Option<Vec<usize>> {
    // Map each run to the element it starts at.
    let mut starts = Vec::with_capacity(runs.len());
    let mut e = 0;
    for run in runs {
        if e >= CARD_ELEMENTS || run.symbol != element_symbol(e) {
            return None;
        }
        starts.push(e);
        e += match BOUNDARIES.iter().position(|&b| b == e) {
            Some(b) if fused[b] => 2,
            _ => 1,
        };
    }
    if e != CARD_ELEMENTS {
        return None;
    }
    let is_fused = |start: usize| {
        BOUNDARIES
            .iter()
            .position(|&b| b == start)
            .is_some_and(|b| fused[b])
    };

    let plain: Vec<usize> = runs
        .iter()
        .zip(&starts)
        .filter(|(_, &s)| !is_fused(s))
        .map(|(r, _)| r.len)
        .collect();
    let (narrow, wide) = width_estimates(&plain)?;
    let cut = (narrow + wide) / 2.0;

    let mut widths = Vec::with_capacity(CARD_ELEMENTS);
    for (run, &start) in runs.iter().zip(&starts) {
        if !is_fused(start) {
            widths.push(run.len);
            continue;
        }
        let len = run.len;
        if (len as f64) <= FUSED_FACTOR * narrow || len < 2 {
            return None;
        }
        let sums = [2.0 * narrow, narrow + wide, 2.0 * wide];
        let class = nearest(&sums, len as f64);
        let (left, right) = if class == 1 {
            // Bars 1, 3, 5, 7 of the left digit are already in `widths`.
            let digit_start = start + 1 - DIGIT_ELEMENTS;
            let wide_bars = (0..4)
                .filter(|i| widths[digit_start + 2 * i] as f64 > cut)
                .count();
            let wide_part =
                ((len as f64 * wide / (narrow + wide)).round() as usize).clamp(1, len - 1);
            if wide_bars < 2 {
                (wide_part, len - wide_part)
            } else {
                (len - wide_part, wide_part)
            }
        } else {
            (len.div_ceil(2), len / 2)
        };
        widths.push(left);
        widths.push(right);
    }
    Some(widths)
}

/// Median narrow and wide widths, split at the min/max midpoint.
fn width_estimates(lens: &[usize]) -> Option<(f64, f64)> {
    let min = *lens.iter().min()? as f64;
    let max = *lens.iter().max()? as f64;
    let mid = (min + max) / 2.0;
    let mut narrow: Vec<usize> = lens.iter().copied().filter(|&l| l as f64 <= mid).collect();
    let mut wide: Vec<usize> = lens.iter().copied().filter(|&l| l as f64 > mid).collect();
    let n = median(&mut narrow)?;
    // Without any wide run the margin between classes is unknown; fall back to the standard ratio.
    let w = median(&mut wide).unwrap_or(n * crate::scanline::ScanConfig::DEFAULT_WIDE_RATIO);
    Some((n, w))
}

fn median(v: &mut [usize]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_unstable();
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] + v[m]) as f64 / 2.0
    })
}

fn nearest(candidates: &[f64], x: f64) -> usize {
    candidates
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Wide iff strictly longer than `(min + max) / 2`.
pub fn threshold_classify(r: &RunArray) -> Result<(BitArray36, f64), FailureReason> {
    if r.len() != CARD_ELEMENTS {
        return Err(FailureReason::BadRunCount);
    }
    let lens = r.lengths();
    let min = lens.iter().copied().min().unwrap_or(0);
    let max = lens.iter().copied().max().unwrap_or(0);
    let threshold = (min + max) as f64 / 2.0;
    let bits = std::array::from_fn(|i| lens[i] as f64 > threshold);
    Ok((BitArray36(bits), threshold))
}

pub fn decode_stream(s: &SymbolStream, strict: bool) -> DecodeReport {
    decode_stream_with(
        s,
        &DecodeOptions {
            strict,
            ..DecodeOptions::default()
        },
    )
}

pub fn decode_stream_with(s: &SymbolStream, opts: &DecodeOptions) -> DecodeReport {
    let corrected = correct_errors_with(s, opts.correction);
    let trimmed = trim_quiet_zones(&run_lengths(&corrected));
    let run_count_observed = trimmed.len();
    let split = split_merged_runs(&trimmed);
    let (bits, threshold) = match threshold_classify(&split) {
        Ok(v) => v,
        Err(failure) => {
            return DecodeReport {
                card: None,
                matches: Vec::new(),
                bits: None,
                threshold: None,
                run_count_observed,
                failure,
            }
        }
    };
    let (card, matches) = code39::decode_card(bits.bits()).expect("36 flags always decode");
    let failure = if opts.strict && matches.iter().any(|m| m.ambiguous) {
        FailureReason::AmbiguousDigit
    } else {
        FailureReason::None
    };
    DecodeReport {
        card: (failure == FailureReason::None).then_some(card),
        matches: matches.to_vec(),
        bits: Some(bits),
        threshold: Some(threshold),
        run_count_observed,
        failure,
    }
}
