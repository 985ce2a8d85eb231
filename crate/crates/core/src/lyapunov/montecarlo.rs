//! Renormalized path simulation, directly and through the first-return
//! (induced) cocycle on the singular cylinder.

use rayon::prelude::*;

use super::estimate::{min_witness, L1Estimate, Method};
use crate::error::Result;
use crate::linalg::ProjPoint;
use crate::model::{is_null_block, Cocycle, PathSampler, Word};
use crate::rng::Domain;
use crate::stats::{mean_se, Accumulator};

struct PathOutcome {
    value: f64,
    null: Option<Word>,
    suspected: bool,
}

/// One step from `x` by `l`; `None` when a singular letter lands in the
/// relative null zone.
fn step(c: &Cocycle, l: usize, x: ProjPoint, log_null: f64) -> (ProjPoint, Option<f64>) {
    let letter = c.letter(l);
    let (y, log_norm) = letter.act_normalized(x);
    if letter.is_rank_one() && log_norm - letter.norm().ln() <= log_null {
        (y, None)
    } else {
        (y, Some(log_norm))
    }
}

/// Mean of `(1/n) Σ log ‖A_{ω_t} x_{t−1}‖` over independent paths, each
/// started at the range of its first singular letter.
pub fn l1_monte_carlo(c: &Cocycle, n: usize, samples: usize, seed: u64) -> Result<L1Estimate> {
    let log_null = c.tolerances().null_tol.ln();
    let outcomes: Vec<Result<PathOutcome>> = (0..samples as u64)
        .into_par_iter()
        .map(|idx| {
            let mut sampler = PathSampler::new(c, seed, Domain::MonteCarlo, idx);
            let s = sampler.advance_to_singular()?;
            let mut x = c.range(s);
            let mut block = vec![s];
            let mut acc = Accumulator::new();
            for _ in 0..n {
                let l = sampler.next_symbol();
                block.push(l);
                let (y, log_norm) = step(c, l, x, log_null);
                match log_norm {
                    Some(v) => acc.add(v),
                    None => {
                        let w = Word::from_indices(&block);
                        let verified = is_null_block(c, &w);
                        return Ok(PathOutcome {
                            value: f64::NEG_INFINITY,
                            null: Some(w),
                            suspected: !verified,
                        });
                    }
                }
                if c.is_singular(l) {
                    block.clear();
                    block.push(l);
                }
                x = y;
            }
            Ok(PathOutcome {
                value: acc.value() / n as f64,
                null: None,
                suspected: false,
            })
        })
        .collect();
    finish(Method::McDirect, outcomes, 1.0, Some(n), samples, seed)
}

/// `q₀ · E[log ‖𝒞 r_{ω₀}‖]` over independent renewal blocks, where `𝒞` is
/// the product along one block.
pub fn l1_induced(c: &Cocycle, blocks: usize, seed: u64) -> Result<L1Estimate> {
    let log_null = c.tolerances().null_tol.ln();
    let outcomes: Vec<Result<PathOutcome>> = (0..blocks as u64)
        .into_par_iter()
        .map(|idx| {
            let mut sampler = PathSampler::new(c, seed, Domain::Induced, idx);
            let w = sampler.sample_block()?;
            let syms = w.symbols();
            let mut x = c.range(syms[0] as usize);
            let mut acc = Accumulator::new();
            for &l in &syms[1..] {
                let (y, log_norm) = step(c, l as usize, x, log_null);
                match log_norm {
                    Some(v) => acc.add(v),
                    None => {
                        let verified = is_null_block(c, &w);
                        return Ok(PathOutcome {
                            value: f64::NEG_INFINITY,
                            null: Some(w),
                            suspected: !verified,
                        });
                    }
                }
                x = y;
            }
            Ok(PathOutcome {
                value: acc.value(),
                null: None,
                suspected: false,
            })
        })
        .collect();
    finish(Method::McInduced, outcomes, c.sing_mass(), None, blocks, seed)
}

fn finish(method: Method, outcomes: Vec<Result<PathOutcome>>, scale: f64, n: Option<usize>, samples: usize, seed: u64) -> Result<L1Estimate> {
    let mut values = Vec::with_capacity(outcomes.len());
    let mut null = None;
    let mut suspected_only = true;
    for o in outcomes {
        let o = o?;
        if o.null.is_some() {
            suspected_only &= o.suspected;
            null = min_witness(null, o.null);
        }
        values.push(o.value);
    }
    let mut est = L1Estimate::blank(method);
    est.n = n;
    est.samples = Some(samples);
    est.seed = Some(seed);
    est.terms = samples as u64;
    if let Some(w) = null {
        est.value = f64::NEG_INFINITY;
        est.std_error = Some(0.0);
        est.suspected_neg_inf = suspected_only;
        est.neg_inf_witness = Some(w);
    } else {
        let (m, se) = mean_se(&values);
        est.value = scale * m;
        est.std_error = Some(scale * se);
    }
    Ok(est)
}
