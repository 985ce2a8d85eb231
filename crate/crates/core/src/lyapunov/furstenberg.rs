//! `L₁ = ∫ Ψ dη` over the atoms of a truncated stationary measure.

use rayon::prelude::*;

use super::estimate::{certified_sing_floor, min_witness, L1Estimate, Method};
use crate::error::{CocycleError, Result};
use crate::model::{is_null_block, Cocycle, Word};
use crate::stationary::{Atom, AtomicMeasure, MeasureKind};
use crate::stats::{compensated_sum, Accumulator};

/// `(sup Ψ(j, ·), inf Ψ(j, ·))` per column `j`, given a floor for the
/// singular steps.
fn psi_bounds(c: &Cocycle, sing_floor: f64) -> Vec<(f64, f64)> {
    (0..c.k())
        .map(|j| {
            let mut up = Accumulator::new();
            let mut lo = Accumulator::new();
            for i in 0..c.k() {
                let p = c.transition(i, j);
                if p == 0.0 {
                    continue;
                }
                let l = c.letter(i);
                up.add(p * l.norm().ln());
                lo.add(p * if l.is_rank_one() { sing_floor } else { l.min_singular().ln() });
            }
            (up.value(), lo.value())
        })
        .collect()
}

/// Weighted `Ψ` at one atom, a null witness if any, and the smallest finite
/// singular step seen.
fn atom_term(c: &Cocycle, a: &Atom, log_null: f64) -> (f64, Option<Word>, f64) {
    let j = a.symbol.unwrap_or(0);
    let x = a.point.unit();
    let mut acc = Accumulator::new();
    let mut null = None;
    let mut worst = f64::INFINITY;
    for i in 0..c.k() {
        let p = c.transition(i, j);
        if p == 0.0 {
            continue;
        }
        let m = c.letter(i).mat();
        let n = m.apply(x).norm();
        if c.is_singular(i) && (n / m.norm()).ln() <= log_null {
            let w = match a.symbol {
                Some(l) if c.is_singular(l) => Word::from_indices(&[l, i]),
                _ => a.witness.pushed(i),
            };
            null = min_witness(null, Some(w));
            acc.add(f64::NEG_INFINITY);
        } else {
            if c.is_singular(i) {
                worst = worst.min(n.ln());
            }
            acc.add(p * n.ln());
        }
    }
    (a.weight * acc.value(), null, worst)
}

/// `∫Ψ dm`; the missing mass is bounded by `sup Ψ` above and by a floor on
/// the singular steps below (heuristic without an invariant arc).
pub fn l1_furstenberg(c: &Cocycle, m: &AtomicMeasure) -> Result<L1Estimate> {
    m.check_cocycle(c)?;
    if m.kind == MeasureKind::Product {
        return Err(CocycleError::Domain("Ψ is integrated against η, not p × η".into()));
    }
    let log_null = c.tolerances().null_tol.ln();
    let chunks: Vec<(f64, Option<Word>, f64)> = m
        .atoms
        .par_chunks(4096)
        .map(|chunk| {
            let mut acc = Accumulator::new();
            let mut null = None;
            let mut worst = f64::INFINITY;
            for a in chunk {
                let (v, w, s) = atom_term(c, a, log_null);
                acc.add(v);
                null = min_witness(null, w);
                worst = worst.min(s);
            }
            (acc.value(), null, worst)
        })
        .collect();
    let mut null = None;
    for (_, w, _) in &chunks {
        null = min_witness(null, w.clone());
    }
    let certified = certified_sing_floor(c);
    let worst = chunks.iter().map(|c| c.2).fold(c.growth_constants().sing_range_lo, f64::min);
    let bounds = psi_bounds(c, certified.unwrap_or(worst));
    let (up, lo) = match m.kind {
        MeasureKind::Joint => (
            compensated_sum(m.symbol_tail.iter().zip(&bounds).map(|(t, b)| t * b.0)),
            compensated_sum(m.symbol_tail.iter().zip(&bounds).map(|(t, b)| t * b.1)),
        ),
        _ => (m.tail_mass * bounds[0].0, m.tail_mass * bounds[0].1),
    };
    let mut est = L1Estimate::blank(Method::Furstenberg);
    est.depth = Some(m.depth);
    est.min_weight = Some(m.min_weight);
    est.terms = m.atoms.len() as u64;
    est.lower_bound_heuristic = certified.is_none();
    if let Some(w) = null {
        est.value = f64::NEG_INFINITY;
        est.suspected_neg_inf = !is_null_block(c, &w);
        est.neg_inf_witness = Some(w);
    } else {
        est.value = compensated_sum(chunks.iter().map(|c| c.0));
        est.upper_tail_bound = up.max(0.0);
        est.lower_tail_bound = (-lo).max(0.0);
    }
    Ok(est)
}
