//! Raw scanner output as the card slides past the IR head.
//!
//! Black bars absorb the beam and sample as [`Symbol::S0`]; white spaces and
//! the margins reflect it and sample as [`Symbol::S5`]. On the wire each
//! symbol is the ASCII character `'0'` or `'5'`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::code39::{Pattern36, DIGIT_ELEMENTS};
use crate::decode::{Run, RunArray};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    /// Black, absorbed.
    S0,
    /// White, reflected.
    S5,
}

impl Symbol {
    pub fn flipped(self) -> Self {
        match self {
            Symbol::S0 => Symbol::S5,
            Symbol::S5 => Symbol::S0,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Symbol::S0 => '0',
            Symbol::S5 => '5',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            '0' => Some(Symbol::S0),
            '5' => Some(Symbol::S5),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct SymbolStream(Vec<Symbol>);

impl SymbolStream {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Self(symbols)
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn into_symbols(self) -> Vec<Symbol> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Wire form: one line of `'0'`/`'5'` characters and a trailing newline.
    pub fn to_line(&self) -> String {
        let mut s = self.to_string();
        s.push('\n');
        s
    }
}

impl From<Vec<Symbol>> for SymbolStream {
    fn from(v: Vec<Symbol>) -> Self {
        Self(v)
    }
}

impl fmt::Display for SymbolStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|s| s.as_char()).collect();
        f.write_str(&s)
    }
}

/// Accepts the wire form; a single trailing `\n` or `\r\n` is ignored.
impl FromStr for SymbolStream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s
            .strip_suffix('\n')
            .map(|b| b.strip_suffix('\r').unwrap_or(b))
            .unwrap_or(s);
        body.chars()
            .enumerate()
            .map(|(i, c)| Symbol::from_char(c).ok_or(Error::InvalidSymbol(c, i)))
            .collect::<Result<Vec<_>, _>>()
            .map(SymbolStream)
    }
}

/// Scan geometry and motor-speed jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    narrow_units: u32,
    wide_ratio: f64,
    quiet_zone: u32,
    jitter_pct: f64,
    seed: u64,
}

impl ScanConfig {
    pub const DEFAULT_NARROW_UNITS: u32 = 8;
    pub const DEFAULT_WIDE_RATIO: f64 = 2.5;

    pub fn new(
        narrow_units: u32,
        wide_ratio: f64,
        quiet_zone: u32,
        jitter_pct: f64,
        seed: u64,
    ) -> Result<Self, Error> {
        if narrow_units < 1 {
            return Err(Error::InvalidScanConfig(
                "narrow_units must be at least 1".into(),
            ));
        }
        if !(wide_ratio.is_finite() && wide_ratio > 1.0) {
            return Err(Error::InvalidScanConfig(format!(
                "wide_ratio must be greater than 1, got {wide_ratio}"
            )));
        }
        if !(jitter_pct.is_finite() && jitter_pct >= 0.0) {
            return Err(Error::InvalidScanConfig(format!(
                "jitter must be non-negative, got {jitter_pct}"
            )));
        }
        let n = f64::from(narrow_units);
        if n * (1.0 + jitter_pct) >= n * wide_ratio * (1.0 - jitter_pct) {
            return Err(Error::InvalidScanConfig(format!(
                "jitter {jitter_pct} lets a narrow element reach a wide one at ratio {wide_ratio}"
            )));
        }
        Ok(Self {
            narrow_units,
            wide_ratio,
            quiet_zone,
            jitter_pct,
            seed,
        })
    }

    /// Defaults with a different narrow width; the quiet zone follows it.
    pub fn with_narrow_units(narrow_units: u32) -> Result<Self, Error> {
        Self::new(
            narrow_units,
            Self::DEFAULT_WIDE_RATIO,
            3 * narrow_units,
            0.0,
            0,
        )
    }

    pub fn narrow_units(&self) -> u32 {
        self.narrow_units
    }

    pub fn wide_ratio(&self) -> f64 {
        self.wide_ratio
    }

    pub fn quiet_zone(&self) -> u32 {
        self.quiet_zone
    }

    pub fn jitter_pct(&self) -> f64 {
        self.jitter_pct
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn element_width(&self, wide: bool, factor: f64) -> usize {
        let base = f64::from(self.narrow_units) * if wide { self.wide_ratio } else { 1.0 };
        (round_half_up(base * factor) as usize).max(1)
    }
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self::with_narrow_units(Self::DEFAULT_NARROW_UNITS).expect("default scan config is valid")
    }
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Bars are the odd positions of each nine-element group.
pub(crate) fn element_symbol(index: usize) -> Symbol {
    if (index % DIGIT_ELEMENTS).is_multiple_of(2) {
        Symbol::S0
    } else {
        Symbol::S5
    }
}

pub fn synthesize(pattern: &Pattern36, cfg: &ScanConfig) -> SymbolStream {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let quiet = cfg.quiet_zone as usize;
    let mut out =
        Vec::with_capacity(2 * quiet + pattern.elements().len() * cfg.narrow_units as usize * 2);
    out.extend(std::iter::repeat_n(Symbol::S5, quiet));
    for (i, &wide) in pattern.elements().iter().enumerate() {
        let factor = if cfg.jitter_pct > 0.0 {
            rng.gen_range((1.0 - cfg.jitter_pct)..=(1.0 + cfg.jitter_pct))
        } else {
            1.0
        };
        let width = cfg.element_width(wide, factor);
        out.extend(std::iter::repeat_n(element_symbol(i), width));
    }
    out.extend(std::iter::repeat_n(Symbol::S5, quiet));
    SymbolStream(out)
}

/// Runs that [`synthesize`] emits without jitter, quiet zones excluded.
/// Same-colour neighbours (bar 9 meeting bar 1 of the next digit) merge.
pub fn expected_run_lengths(pattern: &Pattern36, cfg: &ScanConfig) -> RunArray {
    let mut runs: Vec<Run> = Vec::new();
    for (i, &wide) in pattern.elements().iter().enumerate() {
        let symbol = element_symbol(i);
        let len = cfg.element_width(wide, 1.0);
        match runs.last_mut() {
            Some(last) if last.symbol == symbol => last.len += len,
            _ => runs.push(Run { symbol, len }),
        }
    }
    RunArray::new(runs)
}
