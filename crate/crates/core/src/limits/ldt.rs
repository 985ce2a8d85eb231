use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::paths::{log_growth, require_finite_ref, StartDirection};
use crate::error::{CocycleError, Result};
use crate::io::{csv_line, ext_real};
use crate::model::{Cocycle, PathSampler};
use crate::rng::Domain;
use crate::stats::{least_squares, wilson, Z95};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdtParams {
    pub epsilon: f64,
    pub schedule: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub start: StartDirection,
}

impl Default for LdtParams {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            schedule: vec![100, 200, 400, 800, 1600],
            samples: 4000,
            seed: 11,
            start: StartDirection::Norm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdtRow {
    pub n: usize,
    pub count: usize,
    pub frequency: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

impl LdtRow {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.wilson_hi - self.wilson_lo)
    }
}

/// `freq(n) ≈ C exp(−c₀ n^{1/3})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LdtFit {
    pub c: f64,
    pub c0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdtReport {
    pub epsilon: f64,
    #[serde(with = "ext_real")]
    pub l1_ref: f64,
    pub samples: usize,
    pub seed: u64,
    pub start: StartDirection,
    pub rows: Vec<LdtRow>,
    pub fit: Option<LdtFit>,
}

impl LdtReport {
    pub fn schedule(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.n).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.frequency).collect()
    }

    /// Frequencies fall along the schedule up to at most one rise no larger
    /// than a Wilson half-width, and the last is below the first.
    pub fn is_decaying(&self) -> bool {
        let mut rises = 0;
        for w in self.rows.windows(2) {
            let rise = w[1].frequency - w[0].frequency;
            if rise > 0.0 {
                rises += 1;
                if rise > w[0].half_width().max(w[1].half_width()) {
                    return false;
                }
            }
        }
        let (first, last) = (self.rows.first(), self.rows.last());
        rises <= 1 && matches!((first, last), (Some(a), Some(b)) if b.frequency < a.frequency)
    }

    /// Columns `n, n_cbrt, count, samples, frequency, wilson_lo, wilson_hi, log_freq`.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(&["n", "n_cbrt", "count", "samples", "frequency", "wilson_lo", "wilson_hi", "log_freq"].map(String::from));
        for r in &self.rows {
            let log = if r.count > 0 { r.frequency.ln().to_string() } else { String::new() };
            out.push_str(&csv_line(&[
                r.n.to_string(),
                (r.n as f64).cbrt().to_string(),
                r.count.to_string(),
                self.samples.to_string(),
                r.frequency.to_string(),
                r.wilson_lo.to_string(),
                r.wilson_hi.to_string(),
                log,
            ]));
        }
        out
    }
}

/// Frequency of `|(1/n) log ‖Aⁿ‖ − L₁| > ε` over seeded paths for every `n`
/// of the schedule. Path `i` at schedule position `k` uses stream
/// `(k << 32) | i`.
pub fn ldt_experiment(c: &Cocycle, l1_ref: f64, p: &LdtParams) -> Result<LdtReport> {
    require_finite_ref(l1_ref)?;
    if p.schedule.is_empty() || p.schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CocycleError::Domain("schedule must be nonempty and strictly increasing".into()));
    }
    if p.schedule.iter().any(|&n| !(50..=100_000).contains(&n)) {
        return Err(CocycleError::Domain("schedule entries must lie in [50, 100000]".into()));
    }
    if !(p.epsilon > 0.0) || p.samples == 0 {
        return Err(CocycleError::Domain("epsilon and samples must be positive".into()));
    }
    let rows: Vec<LdtRow> = p
        .schedule
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let count = (0..p.samples as u64)
                .into_par_iter()
                .filter(|&i| {
                    let mut s = PathSampler::new(c, p.seed, Domain::Ldt, ((k as u64) << 32) | i);
                    let mean = log_growth(c, &mut s, n, p.start) / n as f64;
                    // -∞ deviates by more than any ε
                    !((mean - l1_ref).abs() <= p.epsilon)
                })
                .count();
            let (wilson_lo, wilson_hi) = wilson(count, p.samples, Z95);
            LdtRow {
                n,
                count,
                frequency: count as f64 / p.samples as f64,
                wilson_lo,
                wilson_hi,
            }
        })
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.count > 0)
        .map(|r| ((r.n as f64).cbrt(), r.frequency.ln()))
        .unzip();
    let fit = least_squares(&xs, &ys).map(|(a, b)| LdtFit { c: a.exp(), c0: -b });
    Ok(LdtReport {
        epsilon: p.epsilon,
        l1_ref,
        samples: p.samples,
        seed: p.seed,
        start: p.start,
        rows,
        fit,
    })
}
