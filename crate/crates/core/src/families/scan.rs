use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::FamilySpec;
use crate::io::{csv_line, fmt_ext, fmt_opt};
use crate::lyapunov::{l1_monte_carlo, l1_series, L1Estimate};
use crate::model::{find_null_words, Word};
use crate::rng::derive_seed;
use crate::stationary::MeasureOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ScanMethod {
    Series { depth: usize, min_weight: f64 },
    McDirect { n: usize, samples: usize },
}

impl ScanMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ScanMethod::Series { .. } => "series",
            ScanMethod::McDirect { .. } => "mc_direct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanParams {
    pub method: ScanMethod,
    /// Longest block of the structural null-word pre-scan; 0 skips it.
    pub null_len: usize,
    /// Master seed; grid point `i` uses `derive_seed(seed, i)`.
    pub seed: u64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            method: ScanMethod::Series { depth: 30, min_weight: 0.0 },
            null_len: 6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    pub estimate: Option<L1Estimate>,
    pub error: Option<String>,
    /// Shortest null block found by the pre-scan.
    pub structural_null: Option<Word>,
    pub null_scan_error: Option<String>,
}

impl ScanRow {
    pub fn is_neg_inf(&self) -> bool {
        self.estimate.as_ref().is_some_and(L1Estimate::is_neg_inf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanCurve {
    pub method: ScanMethod,
    pub null_len: usize,
    pub seed: u64,
    pub rows: Vec<ScanRow>,
}

impl ScanCurve {
    pub fn structural_points(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| r.structural_null.is_some()).map(|r| r.t).collect()
    }

    /// Columns `t, l1, method, is_neg_inf, witness, tail_bound, std_error,
    /// structural_null, error`.
    pub fn to_csv(&self) -> String {
        let mut out = csv_line(
            &["t", "l1", "method", "is_neg_inf", "witness", "tail_bound", "std_error", "structural_null", "error"].map(String::from),
        );
        for r in &self.rows {
            let e = r.estimate.as_ref();
            out.push_str(&csv_line(&[
                r.t.to_string(),
                e.map(|e| fmt_ext(e.value)).unwrap_or_default(),
                self.method.name().to_string(),
                r.is_neg_inf().to_string(),
                e.and_then(|e| e.neg_inf_witness.as_ref()).map(|w| w.to_string()).unwrap_or_default(),
                e.map(|e| fmt_ext(e.slack())).unwrap_or_default(),
                fmt_opt(e.and_then(|e| e.std_error)),
                r.structural_null.as_ref().map(|w| w.to_string()).unwrap_or_default(),
                r.error.clone().or_else(|| r.null_scan_error.clone()).unwrap_or_default(),
            ]));
        }
        out
    }
}

fn scan_point(f: &FamilySpec, t: f64, index: usize, p: &ScanParams) -> ScanRow {
    let mut row = ScanRow {
        t,
        estimate: None,
        error: None,
        structural_null: None,
        null_scan_error: None,
    };
    let c = match f.cocycle_at(t) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    if p.null_len >= 2 {
        match find_null_words(&c, p.null_len) {
            Ok(words) => row.structural_null = words.into_iter().next(),
            Err(e) => row.null_scan_error = Some(e.to_string()),
        }
    }
    let est = match p.method {
        ScanMethod::Series { depth, min_weight } => Ok(l1_series(&c, MeasureOptions::pruned(depth, min_weight))),
        ScanMethod::McDirect { n, samples } => l1_monte_carlo(&c, n, samples, derive_seed(p.seed, index as u64)),
    };
    match est {
        Ok(e) => row.estimate = Some(e),
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// `t ↦ L₁(A_t)` over the grid, sorted by `t`, each point annotated by a
/// structural null-word scan.
pub fn scan(f: &FamilySpec, t_grid: &[f64], p: &ScanParams) -> ScanCurve {
    let mut ts = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    let rows = ts.par_iter().enumerate().map(|(i, &t)| scan_point(f, t, i, p)).collect();
    ScanCurve {
        method: p.method,
        null_len: p.null_len,
        seed: p.seed,
        rows,
    }
}
