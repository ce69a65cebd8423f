//! Link model between scanner and logging system: each symbol flips
//! independently with a fixed probability.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scanline::SymbolStream;
use crate::Error;

/// Measured symbol error rate of the wired serial link.
pub const WIRED_FLIP_PROB: f64 = 0.005;
/// Measured symbol error rate of the 434 MHz wireless link.
pub const WIRELESS_FLIP_PROB: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelPreset {
    /// Noise-free.
    None,
    Wired,
    Wireless,
    Custom(f64),
}

impl ChannelPreset {
    pub fn custom(flip_prob: f64) -> Result<Self, Error> {
        check_probability(flip_prob)?;
        Ok(ChannelPreset::Custom(flip_prob))
    }

    pub fn flip_prob(self) -> f64 {
        match self {
            ChannelPreset::None => 0.0,
            ChannelPreset::Wired => WIRED_FLIP_PROB,
            ChannelPreset::Wireless => WIRELESS_FLIP_PROB,
            ChannelPreset::Custom(p) => p,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChannelPreset::None => "none",
            ChannelPreset::Wired => "wired",
            ChannelPreset::Wireless => "wireless",
            ChannelPreset::Custom(_) => "custom",
        }
    }
}

impl fmt::Display for ChannelPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelPreset::Custom(p) => write!(f, "custom({p})"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for ChannelPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(ChannelPreset::None),
            "wired" => Ok(ChannelPreset::Wired),
            "wireless" => Ok(ChannelPreset::Wireless),
            other => Err(format!(
                "unknown channel {other:?} (expected none, wired or wireless)"
            )),
        }
    }
}

/// Flip model. In burst mode every flip event also takes the following
/// symbol with probability one half, so events cover one or two symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub flip_prob: f64,
    pub burst: bool,
}

impl Channel {
    pub fn new(flip_prob: f64) -> Result<Self, Error> {
        check_probability(flip_prob)?;
        Ok(Self {
            flip_prob,
            burst: false,
        })
    }

    pub fn with_burst(mut self, burst: bool) -> Self {
        self.burst = burst;
        self
    }

    /// Positions this channel flips for a stream of `len` symbols. The same
    /// seed always yields the same mask.
    pub fn flip_mask(&self, len: usize, seed: u64) -> Vec<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mask = vec![false; len];
        let mut i = 0;
        while i < len {
            // One uniform draw per position couples masks across probabilities:
            // a flip at p is also a flip at every larger p for the same seed.
            let u: f64 = rng.gen();
            if u < self.flip_prob {
                mask[i] = true;
                if self.burst && i + 1 < len && rng.gen_bool(0.5) {
                    mask[i + 1] = true;
                    i += 1;
                }
            }
            i += 1;
        }
        mask
    }

    pub fn corrupt(&self, s: &SymbolStream, seed: u64) -> SymbolStream {
        let mask = self.flip_mask(s.len(), seed);
        apply_mask(s, &mask).expect("mask length matches stream")
    }
}

impl From<ChannelPreset> for Channel {
    fn from(p: ChannelPreset) -> Self {
        Self {
            flip_prob: p.flip_prob(),
            burst: false,
        }
    }
}

/// Independent flips with the preset's probability.
pub fn corrupt(s: &SymbolStream, preset: ChannelPreset, seed: u64) -> SymbolStream {
    Channel::from(preset).corrupt(s, seed)
}

/// XORs a realised flip mask into a stream. Applying the same mask twice is
/// the identity.
pub fn apply_mask(s: &SymbolStream, mask: &[bool]) -> Result<SymbolStream, Error> {
    if mask.len() != s.len() {
        return Err(Error::LengthMismatch(s.len(), mask.len()));
    }
    Ok(s.symbols()
        .iter()
        .zip(mask)
        .map(|(&sym, &flip)| if flip { sym.flipped() } else { sym })
        .collect::<Vec<_>>()
        .into())
}

/// Fraction of positions where the two streams differ; 0 for empty input.
pub fn measure_ser(a: &SymbolStream, b: &SymbolStream) -> Result<f64, Error> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let diff = a
        .symbols()
        .iter()
        .zip(b.symbols())
        .filter(|(x, y)| x != y)
        .count();
    Ok(diff as f64 / a.len() as f64)
}

fn check_probability(p: f64) -> Result<(), Error> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}
