//! Seeded growth of `log ‖Aⁿ(ω)‖` along sample paths.

use serde::{Deserialize, Serialize};

use crate::error::{CocycleError, Result};
use crate::linalg::{Mat2, ProjPoint};
use crate::model::{Cocycle, PathSampler};
use crate::stats::Accumulator;

/// What is measured along a path: the norm of the matrix product, or the
/// growth of one fixed starting direction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartDirection {
    #[default]
    Norm,
    Fixed { theta: f64 },
}

impl StartDirection {
    /// `"norm"` or an angle in radians.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "norm" => Some(StartDirection::Norm),
            t => t.parse::<f64>().ok().filter(|x| x.is_finite()).map(|theta| StartDirection::Fixed { theta }),
        }
    }
}

/// `log ‖A_{ωₙ} ⋯ A_{ω₁}‖` (or `log ‖⋯ v‖`) over the next `n` letters of the
/// sampler. The product is renormalized by its Frobenius norm after every
/// step; a singular step that lands within `null_tol` of the kernel returns
/// `-∞`.
pub fn log_growth(c: &Cocycle, s: &mut PathSampler, n: usize, start: StartDirection) -> f64 {
    let null_tol = c.tolerances().null_tol;
    let mut acc = Accumulator::new();
    match start {
        StartDirection::Norm => {
            let mut m = Mat2::identity();
            for _ in 0..n {
                let letter = c.letter(s.next_symbol());
                m = letter.mat() * m;
                let f = m.frobenius();
                if f == 0.0 || (letter.is_rank_one() && f <= null_tol * letter.norm()) {
                    return f64::NEG_INFINITY;
                }
                acc.add(f.ln());
                m = m.scaled(1.0 / f);
            }
            acc.add(m.norm().ln());
        }
        StartDirection::Fixed { theta } => {
            let mut x = ProjPoint::new(theta);
            for _ in 0..n {
                let letter = c.letter(s.next_symbol());
                let (y, v) = letter.act_normalized(x);
                if v == f64::NEG_INFINITY || (letter.is_rank_one() && v - letter.norm().ln() <= null_tol.ln()) {
                    return f64::NEG_INFINITY;
                }
                acc.add(v);
                x = y;
            }
        }
    }
    acc.value()
}

pub(crate) fn require_finite_ref(l1_ref: f64) -> Result<()> {
    if l1_ref.is_finite() {
        Ok(())
    } else {
        Err(CocycleError::Domain(format!("reference exponent must be finite, got {l1_ref}")))
    }
}
