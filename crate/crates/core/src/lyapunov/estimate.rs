use serde::{Deserialize, Serialize};

use crate::io::{csv_line, ext_real, ext_real_vec, fmt_ext, fmt_opt};
use crate::model::{invariant_arc, Cocycle, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Series,
    Furstenberg,
    McDirect,
    McInduced,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Furstenberg => "furstenberg",
            Method::McDirect => "mc_direct",
            Method::McInduced => "mc_induced",
        }
    }
}

/// One estimate of the top exponent `L₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Estimate {
    pub method: Method,
    #[serde(with = "ext_real")]
    pub value: f64,
    pub depth: Option<usize>,
    pub min_weight: Option<f64>,
    /// Path length (direct) or block count (induced).
    pub n: Option<usize>,
    pub samples: Option<usize>,
    /// How far the true value may lie above `value`.
    pub upper_tail_bound: f64,
    /// How far the true value may lie below `value`.
    pub lower_tail_bound: f64,
    /// The lower bound rests on the near-kernel constants and is not a proof.
    pub lower_bound_heuristic: bool,
    pub std_error: Option<f64>,
    pub neg_inf_witness: Option<Word>,
    /// `-∞` was seen numerically but the realized word failed the
    /// structural null test.
    pub suspected_neg_inf: bool,
    /// Contribution of each interior length, series only.
    #[serde(with = "ext_real_vec", default)]
    pub profile: Vec<f64>,
    pub terms: u64,
    pub seed: Option<u64>,
}

impl L1Estimate {
    pub(crate) fn blank(method: Method) -> Self {
        Self {
            method,
            value: f64::NAN,
            depth: None,
            min_weight: None,
            n: None,
            samples: None,
            upper_tail_bound: 0.0,
            lower_tail_bound: 0.0,
            lower_bound_heuristic: false,
            std_error: None,
            neg_inf_witness: None,
            suspected_neg_inf: false,
            profile: Vec::new(),
            terms: 0,
            seed: None,
        }
    }

    pub fn is_neg_inf(&self) -> bool {
        self.value == f64::NEG_INFINITY
    }

    /// Larger of the two truncation bounds.
    pub fn slack(&self) -> f64 {
        self.upper_tail_bound.max(self.lower_tail_bound)
    }

    /// `sqrt(se² + slack²)`.
    pub fn error(&self) -> f64 {
        let se = self.std_error.unwrap_or(0.0);
        se.hypot(self.slack())
    }

    pub fn csv_header() -> String {
        csv_line(
            &[
                "method", "value", "depth", "min_weight", "n", "samples", "upper_tail_bound", "lower_tail_bound",
                "lower_bound_heuristic", "std_error", "neg_inf_witness", "suspected_neg_inf", "terms", "seed",
            ]
            .map(String::from),
        )
    }

    pub fn csv_record(&self) -> String {
        csv_line(&[
            self.method.name().into(),
            fmt_ext(self.value),
            self.depth.map(|d| d.to_string()).unwrap_or_default(),
            fmt_opt(self.min_weight),
            self.n.map(|d| d.to_string()).unwrap_or_default(),
            self.samples.map(|d| d.to_string()).unwrap_or_default(),
            fmt_ext(self.upper_tail_bound),
            fmt_ext(self.lower_tail_bound),
            self.lower_bound_heuristic.to_string(),
            fmt_opt(self.std_error),
            self.neg_inf_witness.as_ref().map(|w| w.to_string()).unwrap_or_default(),
            self.suspected_neg_inf.to_string(),
            self.terms.to_string(),
            self.seed.map(|d| d.to_string()).unwrap_or_default(),
        ])
    }
}

/// `|a − b|` against `sqrt(err_a² + err_b²)`; equal infinities agree.
pub fn concordance(a: &L1Estimate, b: &L1Estimate) -> (f64, f64) {
    let diff = if a.value == b.value { 0.0 } else { (a.value - b.value).abs() };
    (diff, a.error().hypot(b.error()))
}

/// Shortest, then lexicographically smallest.
pub(crate) fn min_witness(a: Option<Word>, b: Option<Word>) -> Option<Word> {
    match (a, b) {
        (Some(x), Some(y)) => Some(if (y.len(), &y) < (x.len(), &x) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Lower bound for `log ‖A_l v‖` over singular `l` and reachable `v`.
/// Rigorous when an invariant arc keeps every direction away from the
/// kernels; otherwise `None` and callers fall back to observed steps.
pub(crate) fn certified_sing_floor(c: &Cocycle) -> Option<f64> {
    let cert = invariant_arc(c)?;
    let sin = cert.kernel_clearance.min(std::f64::consts::FRAC_PI_2).sin();
    c.singular()
        .iter()
        .map(|&l| c.letter(l).norm().ln() + sin.ln())
        .reduce(f64::min)
}
