use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::paths::{log_growth, require_finite_ref, StartDirection};
use crate::error::{CocycleError, Result};
use crate::io::{csv_line, ext_real, ext_real_vec, fmt_ext};
use crate::model::{Cocycle, PathSampler};
use crate::rng::Domain;
use crate::stats::{ks_standard_normal, mean_var};

/// Below this `σ` the normalization is meaningless.
pub const SIGMA_MIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    GordinLivsic,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltParams {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub start: StartDirection,
    pub ks_threshold: f64,
}

impl Default for CltParams {
    fn default() -> Self {
        Self {
            n: 1000,
            samples: 2000,
            seed: 0,
            start: StartDirection::Norm,
            ks_threshold: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(with = "ext_real")]
    pub mean: f64,
    #[serde(with = "ext_real")]
    pub std_dev: f64,
    #[serde(with = "ext_real")]
    pub min: f64,
    #[serde(with = "ext_real")]
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let (mean, var) = mean_var(xs);
        Self {
            mean,
            std_dev: var.sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub samples: usize,
    pub sigma_used: f64,
    pub sigma_source: SigmaSource,
    pub l1_ref: f64,
    pub ks: f64,
    pub ks_threshold: f64,
    pub pass: bool,
    pub summary: Summary,
    pub seed: u64,
    pub start: StartDirection,
    /// `(log ‖Aⁿ‖ − n L₁) / (σ √n)` per path, in stream order.
    #[serde(with = "ext_real_vec")]
    pub values: Vec<f64>,
}

impl CltReport {
    /// One `normalized_value` per line.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(&["sample".to_string(), "normalized_value".to_string()]);
        for (i, v) in self.values.iter().enumerate() {
            out.push_str(&csv_line(&[i.to_string(), fmt_ext(*v)]));
        }
        out
    }
}

/// `(log ‖Aⁿ‖ − n L₁) / √n` for `samples` seeded paths.
pub(crate) fn centred_growth(c: &Cocycle, l1_ref: f64, n: usize, samples: usize, seed: u64, domain: Domain, start: StartDirection) -> Vec<f64> {
    let root = (n as f64).sqrt();
    (0..samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut s = PathSampler::new(c, seed, domain, i);
            (log_growth(c, &mut s, n, start) - n as f64 * l1_ref) / root
        })
        .collect()
}

/// Kolmogorov–Smirnov distance of the normalized growth to `𝒩(0, 1)`.
pub fn clt_experiment(c: &Cocycle, l1_ref: f64, sigma: f64, source: SigmaSource, p: &CltParams) -> Result<CltReport> {
    require_finite_ref(l1_ref)?;
    if !(sigma > SIGMA_MIN) {
        return Err(CocycleError::DegenerateVariance {
            sigma2: sigma * sigma,
            threshold: SIGMA_MIN * SIGMA_MIN,
        });
    }
    if p.n == 0 || p.samples == 0 {
        return Err(CocycleError::Domain("n and samples must be positive".into()));
    }
    let values: Vec<f64> = centred_growth(c, l1_ref, p.n, p.samples, p.seed, Domain::Clt, p.start)
        .into_iter()
        .map(|v| v / sigma)
        .collect();
    let ks = ks_standard_normal(&values);
    Ok(CltReport {
        n: p.n,
        samples: p.samples,
        sigma_used: sigma,
        sigma_source: source,
        l1_ref,
        ks,
        ks_threshold: p.ks_threshold,
        pass: ks <= p.ks_threshold,
        summary: Summary::of(&values),
        seed: p.seed,
        start: p.start,
        values,
    })
}
