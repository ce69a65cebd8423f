//! Straight-line reference pipeline used as a test oracle.
//!
//! Works on plain `'0'`/`'5'` byte vectors and integer run lists and shares
//! no code with the library beyond the RNG crates, so that every stage can be
//! checked against an independent rendering of the same rules.

#![allow(dead_code)]

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TABLE: [&str; 10] = [
    "000110100",
    "100100001",
    "001100001",
    "101100000",
    "000110001",
    "100110000",
    "001110000",
    "000100101",
    "100100100",
    "001100100",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RefReport {
    pub card: Option<String>,
    pub digits: Vec<(u8, u8, bool)>,
    pub bits: Option<String>,
    pub threshold: Option<f64>,
    pub runs_observed: usize,
    pub failure: &'static str,
}

pub fn card_pattern(code: &str) -> String {
    code.bytes().map(|b| TABLE[(b - b'0') as usize]).collect()
}

/// Zero-jitter scan with round-half-up widths.
pub fn scan(code: &str, narrow: u32, ratio: f64, quiet: usize) -> Vec<u8> {
    let pattern = card_pattern(code);
    let mut out = vec![b'5'; quiet];
    for (i, c) in pattern.bytes().enumerate() {
        let mut w = narrow as f64;
        if c == b'1' {
            w *= ratio;
        }
        let w = ((w + 0.5).floor() as usize).max(1);
        let sym = if (i % 9) % 2 == 0 { b'0' } else { b'5' };
        for _ in 0..w {
            out.push(sym);
        }
    }
    out.extend(std::iter::repeat(b'5').take(quiet));
    out
}

pub fn flip_channel(s: &[u8], p: f64, seed: u64) -> Vec<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    s.iter()
        .map(|&c| {
            let u: f64 = rng.gen();
            match (u < p, c) {
                (true, b'0') => b'5',
                (true, _) => b'0',
                (false, c) => c,
            }
        })
        .collect()
}

/// Scans symbol by symbol, looking up each zero-run's extent in the input.
pub fn correct(s: &[u8], symmetric: bool) -> Vec<u8> {
    let mut out = s.to_vec();
    let n = s.len();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && s[j] == s[i] {
            j += 1;
        }
        let len = j - i;
        let left_other = i > 0 && s[i - 1] != s[i];
        let right_other = j < n && s[j] != s[i];
        let eligible = s[i] == b'0' || symmetric;
        if eligible && len <= 2 && left_other && right_other {
            let to = if s[i] == b'0' { b'5' } else { b'0' };
            for k in i..j {
                out[k] = to;
            }
        }
        i = j;
    }
    out
}

pub fn runs(s: &[u8]) -> Vec<(u8, usize)> {
    let mut out: Vec<(u8, usize)> = Vec::new();
    for &c in s {
        if let Some(last) = out.last_mut() {
            if last.0 == c {
                last.1 += 1;
                continue;
            }
        }
        out.push((c, 1));
    }
    out
}

pub fn trim(mut r: Vec<(u8, usize)>) -> Vec<(u8, usize)> {
    if r.first().map(|x| x.0) == Some(b'5') {
        r.remove(0);
    }
    if r.last().map(|x| x.0) == Some(b'5') {
        r.pop();
    }
    r
}

fn med(mut v: Vec<usize>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort();
    let n = v.len();
    if n % 2 == 1 {
        Some(v[n / 2] as f64)
    } else {
        Some((v[n / 2 - 1] + v[n / 2]) as f64 / 2.0)
    }
}

/// Only 33 alternating runs starting with a bar can be repaired: any other
/// run deficit leaves two bars on adjacent runs, which alternation forbids.
pub fn split(r: Vec<(u8, usize)>) -> Vec<(u8, usize)> {
    if r.len() != 33 || r[0].0 != b'0' {
        return r;
    }
    // Fused runs sit at run indices 8, 16 and 24.
    let fused = [8usize, 16, 24];
    let plain: Vec<usize> = r
        .iter()
        .enumerate()
        .filter(|(i, _)| !fused.contains(i))
        .map(|(_, x)| x.1)
        .collect();
    let lo = *plain.iter().min().unwrap() as f64;
    let hi = *plain.iter().max().unwrap() as f64;
    let mid = (lo + hi) / 2.0;
    let n = match med(plain.iter().copied().filter(|&l| l as f64 <= mid).collect()) {
        Some(n) => n,
        None => return r,
    };
    let w = med(plain.iter().copied().filter(|&l| l as f64 > mid).collect()).unwrap_or(n * 2.5);
    let cut = (n + w) / 2.0;

    let mut widths: Vec<usize> = Vec::new();
    for (i, &(_, len)) in r.iter().enumerate() {
        if !fused.contains(&i) {
            widths.push(len);
            continue;
        }
        if len as f64 <= 1.5 * n || len < 2 {
            return r;
        }
        let l = len as f64;
        let d = [(2.0 * n - l).abs(), (n + w - l).abs(), (2.0 * w - l).abs()];
        let mut class = 0;
        for c in 1..3 {
            if d[c] < d[class] {
                class = c;
            }
        }
        if class == 1 {
            let digit_start = widths.len() + 1 - 9;
            let mut wide_bars = 0;
            for b in [0, 2, 4, 6] {
                if widths[digit_start + b] as f64 > cut {
                    wide_bars += 1;
                }
            }
            let mut wide_part = (l * w / (n + w)).round() as usize;
            wide_part = wide_part.max(1).min(len - 1);
            if wide_bars < 2 {
                widths.push(wide_part);
                widths.push(len - wide_part);
            } else {
                widths.push(len - wide_part);
                widths.push(wide_part);
            }
        } else {
            widths.push((len + 1) / 2);
            widths.push(len / 2);
        }
    }
    widths
        .into_iter()
        .enumerate()
        .map(|(e, len)| (if (e % 9) % 2 == 0 { b'0' } else { b'5' }, len))
        .collect()
}

pub fn nearest(group: &str) -> (u8, u8, bool) {
    let scores: Vec<u8> = TABLE
        .iter()
        .map(|row| {
            row.bytes()
                .zip(group.bytes())
                .filter(|(a, b)| a == b)
                .count() as u8
        })
        .collect();
    let best = *scores.iter().max().unwrap();
    let winners: Vec<usize> = (0..10).filter(|&d| scores[d] == best).collect();
    (winners[0] as u8, best, winners.len() > 1)
}

pub fn decode(s: &[u8], correction: &str, strict: bool) -> RefReport {
    let corrected = match correction {
        "off" => s.to_vec(),
        "on" => correct(s, false),
        "symmetric" => correct(s, true),
        other => panic!("unknown correction {other}"),
    };
    let trimmed = trim(runs(&corrected));
    let runs_observed = trimmed.len();
    let elements = split(trimmed);
    if elements.len() != 36 {
        return RefReport {
            card: None,
            digits: vec![],
            bits: None,
            threshold: None,
            runs_observed,
            failure: "bad_run_count",
        };
    }
    let lo = elements.iter().map(|x| x.1).min().unwrap();
    let hi = elements.iter().map(|x| x.1).max().unwrap();
    let t = (lo + hi) as f64 / 2.0;
    let bits: String = elements
        .iter()
        .map(|x| if x.1 as f64 > t { '1' } else { '0' })
        .collect();
    let digits: Vec<(u8, u8, bool)> = (0..4).map(|g| nearest(&bits[9 * g..9 * g + 9])).collect();
    let ambiguous = digits.iter().any(|d| d.2);
    let failure = if strict && ambiguous {
        "ambiguous_digit"
    } else {
        "none"
    };
    RefReport {
        card: (failure == "none").then(|| digits.iter().map(|d| char::from(b'0' + d.0)).collect()),
        digits,
        bits: Some(bits),
        threshold: Some(t),
        runs_observed,
        failure,
    }
}

/// Card code, jitter seed, channel seed of trial `i`.
pub fn trial(base_seed: u64, i: u32) -> (String, u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(i as u64));
    let code: u16 = rng.gen_range(0..10_000);
    let scan_seed = rng.next_u64();
    let channel_seed = rng.next_u64();
    (format!("{code:04}"), scan_seed, channel_seed)
}

/// success rate, mean residual SER, mean wrong digits for one sweep row at
/// default geometry.
pub fn experiment_row(p: f64, correction: &str, trials: u32, base_seed: u64) -> (f64, f64, f64) {
    let mut ok = 0u32;
    let mut residual = 0.0;
    let mut wrong = 0u32;
    for i in 0..trials {
        let (code, _, channel_seed) = trial(base_seed, i);
        let clean = scan(&code, 8, 2.5, 24);
        let rx = flip_channel(&clean, p, channel_seed);
        let corrected = match correction {
            "off" => rx.clone(),
            "on" => correct(&rx, false),
            _ => correct(&rx, true),
        };
        let diff = corrected.iter().zip(&clean).filter(|(a, b)| a != b).count();
        residual += diff as f64 / clean.len() as f64;
        let report = decode(&rx, correction, true);
        if report.card.as_deref() == Some(code.as_str()) {
            ok += 1;
        }
        wrong += if report.digits.len() == 4 {
            report
                .digits
                .iter()
                .zip(code.bytes())
                .filter(|(d, c)| d.0 != c - b'0')
                .count() as u32
        } else {
            4
        };
    }
    let n = trials as f64;
    (ok as f64 / n, residual / n, wrong as f64 / n)
}
