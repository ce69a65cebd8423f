//! Seeded Monte Carlo sweep over channel error rates and correction modes.
//!
//! Trial `i` of every row draws from `ChaCha8Rng::seed_from_u64(base_seed + i)`:
//! first the card code (unless fixed), then the jitter seed, then the channel
//! seed. Rows sharing a trial index therefore see the same card and the same
//! per-symbol uniforms, which makes comparisons across rows paired.
//!
//! With the `parallel` feature trials run on rayon; results are gathered in
//! trial order and reduced sequentially, so output does not depend on the
//! execution mode or thread count.

use std::fmt;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{measure_ser, Channel};
use crate::code39::{encode_card, CardCode, CARD_DIGITS};
use crate::decode::{correct_errors_with, decode_stream_with, Correction, DecodeOptions};
use crate::scanline::{synthesize, ScanConfig};
use crate::Error;

pub const CSV_HEADER: &str = "flip_prob,correction,trials,success_rate,residual_ser,digit_errors";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub flip_probs: Vec<f64>,
    pub corrections: Vec<Correction>,
    pub trials: u32,
    pub scan: ScanConfig,
    pub base_seed: u64,
    /// Use this card in every trial instead of sampling.
    pub code: Option<CardCode>,
    pub strict: bool,
    pub burst: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            flip_probs: vec![0.0, 0.005, 0.02, 0.05],
            corrections: vec![Correction::On, Correction::Off],
            trials: 1000,
            scan: ScanConfig::default(),
            base_seed: 0,
            code: None,
            strict: true,
            burst: false,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.trials < 1 {
            return Err(Error::InvalidExperiment("trials must be at least 1".into()));
        }
        if self.flip_probs.is_empty() || self.corrections.is_empty() {
            return Err(Error::InvalidExperiment(
                "need at least one flip probability and one correction mode".into(),
            ));
        }
        if let Some(&p) = self.flip_probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRow {
    pub flip_prob: f64,
    pub correction: Correction,
    pub trials: u32,
    pub success_rate: f64,
    /// Mean SER of the corrected stream against the clean one.
    pub residual_ser: f64,
    /// Mean count of wrong digits per trial; 4 when no digits were resolved.
    pub digit_errors: f64,
}

impl ExperimentRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{:.6},{:.6},{:.6}",
            self.flip_prob,
            self.correction,
            self.trials,
            self.success_rate,
            self.residual_ser,
            self.digit_errors
        )
    }
}

impl fmt::Display for ExperimentRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialOutcome {
    pub code: CardCode,
    pub success: bool,
    pub residual_ser: f64,
    pub digit_errors: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential without the `parallel` feature.
    #[default]
    Parallel,
}

/// Seed of trial `index`.
pub fn trial_seed(base_seed: u64, index: u32) -> u64 {
    base_seed.wrapping_add(u64::from(index))
}

/// Card, jitter seed and channel seed for one trial.
pub fn trial_draws(spec: &ExperimentSpec, index: u32) -> (CardCode, u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(spec.base_seed, index));
    let sampled = rng.gen_range(0..10_000u16);
    let code = spec
        .code
        .unwrap_or_else(|| CardCode::from_number(sampled).expect("sampled below 10000"));
    let scan_seed = rng.next_u64();
    let channel_seed = rng.next_u64();
    (code, scan_seed, channel_seed)
}

pub fn run_trial(
    spec: &ExperimentSpec,
    flip_prob: f64,
    correction: Correction,
    index: u32,
) -> TrialOutcome {
    let (code, scan_seed, channel_seed) = trial_draws(spec, index);
    let clean = synthesize(&encode_card(code), &spec.scan.with_seed(scan_seed));
    let channel = Channel {
        flip_prob,
        burst: spec.burst,
    };
    let received = channel.corrupt(&clean, channel_seed);
    let corrected = correct_errors_with(&received, correction);
    let residual_ser = measure_ser(&corrected, &clean).expect("correction keeps length");
    let report = decode_stream_with(
        &received,
        &DecodeOptions {
            correction,
            strict: spec.strict,
        },
    );
    let digit_errors = match report.resolved_digits() {
        Some(digits) => digits
            .iter()
            .zip(code.digits())
            .filter(|(a, b)| **a != *b)
            .count() as u32,
        None => CARD_DIGITS as u32,
    };
    TrialOutcome {
        code,
        success: report.card == Some(code),
        residual_ser,
        digit_errors,
    }
}

fn run_row(
    spec: &ExperimentSpec,
    flip_prob: f64,
    correction: Correction,
    exec: Execution,
) -> ExperimentRow {
    let outcomes = collect_trials(spec.trials, exec, |i| {
        run_trial(spec, flip_prob, correction, i)
    });
    let n = f64::from(spec.trials);
    let successes = outcomes.iter().filter(|o| o.success).count();
    let residual: f64 = outcomes.iter().map(|o| o.residual_ser).sum();
    let digit_errors: u64 = outcomes.iter().map(|o| u64::from(o.digit_errors)).sum();
    ExperimentRow {
        flip_prob,
        correction,
        trials: spec.trials,
        success_rate: successes as f64 / n,
        residual_ser: residual / n,
        digit_errors: digit_errors as f64 / n,
    }
}

#[cfg(feature = "parallel")]
fn collect_trials<F>(trials: u32, exec: Execution, f: F) -> Vec<TrialOutcome>
where
    F: Fn(u32) -> TrialOutcome + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Parallel => (0..trials).into_par_iter().map(f).collect(),
        Execution::Sequential => (0..trials).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn collect_trials<F>(trials: u32, _exec: Execution, f: F) -> Vec<TrialOutcome>
where
    F: Fn(u32) -> TrialOutcome,
{
    (0..trials).map(f).collect()
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ExperimentRow>, Error> {
    run_experiment_with(spec, Execution::default())
}

/// One row per (flip probability, correction mode), in spec order.
pub fn run_experiment_with(
    spec: &ExperimentSpec,
    exec: Execution,
) -> Result<Vec<ExperimentRow>, Error> {
    spec.validate()?;
    let mut rows = Vec::with_capacity(spec.flip_probs.len() * spec.corrections.len());
    for &p in &spec.flip_probs {
        for &mode in &spec.corrections {
            rows.push(run_row(spec, p, mode, exec));
        }
    }
    Ok(rows)
}

/// Header line followed by one line per row, each newline-terminated.
pub fn to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

/// Fixed-width table of the same columns.
pub fn to_table(rows: &[ExperimentRow]) -> String {
    let mut out = format!(
        "{:>9}  {:>10}  {:>7}  {:>12}  {:>12}  {:>12}\n",
        "flip_prob", "correction", "trials", "success_rate", "residual_ser", "digit_errors"
    );
    for r in rows {
        out.push_str(&format!(
            "{:>9}  {:>10}  {:>7}  {:>12.6}  {:>12.6}  {:>12.6}\n",
            r.flip_prob,
            r.correction.name(),
            r.trials,
            r.success_rate,
            r.residual_ser,
            r.digit_errors
        ));
    }
    out
}
