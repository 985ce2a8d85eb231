//! Null words, forward-invariant arcs and near-kernel arcs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::spec::Cocycle;
use super::words::Word;
use crate::error::{CocycleError, Result};
use crate::linalg::{ProjPoint, Vec2};

/// Closed arc of the projective line: angles `start + [0, len]` mod π.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjArc {
    pub start: f64,
    pub len: f64,
}

impl ProjArc {
    pub fn point(x: ProjPoint) -> Self {
        Self { start: x.theta(), len: 0.0 }
    }

    pub fn new(start: f64, len: f64) -> Self {
        Self {
            start: ProjPoint::new(start).theta(),
            len: len.clamp(0.0, PI),
        }
    }

    pub fn end(&self) -> ProjPoint {
        ProjPoint::new(self.start + self.len)
    }

    /// Offset of `x` from the start, in `[0, π)`.
    pub fn offset(&self, x: ProjPoint) -> f64 {
        (x.theta() - self.start).rem_euclid(PI)
    }

    pub fn contains(&self, x: ProjPoint) -> bool {
        self.offset(x) <= self.len
    }

    /// Smallest arc containing both.
    pub fn hull(&self, other: &ProjArc) -> ProjArc {
        let o = (other.start - self.start).rem_euclid(PI);
        let a = ProjArc::new(self.start, self.len.max(o + other.len));
        let o2 = (self.start - other.start).rem_euclid(PI);
        let b = ProjArc::new(other.start, other.len.max(o2 + self.len));
        if a.len <= b.len {
            a
        } else {
            b
        }
    }

    pub fn widened(&self, delta: f64) -> ProjArc {
        ProjArc::new(self.start - delta, self.len + 2.0 * delta)
    }

    pub fn overlaps(&self, other: &ProjArc) -> bool {
        self.contains(ProjPoint::new(other.start)) || other.contains(ProjPoint::new(self.start))
    }
}

/// A forward-invariant arc that holds every singular range and no singular
/// kernel. Its existence rules out null words of every length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcCertificate {
    pub arc: ProjArc,
    pub delta: f64,
    /// Smallest distance from the arc to a singular kernel.
    pub kernel_clearance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullScan {
    pub max_len: usize,
    pub words: Vec<Word>,
    /// Present when the absence of null words holds at every length.
    pub certificate: Option<ArcCertificate>,
}

impl NullScan {
    pub fn is_null_free(&self) -> bool {
        self.words.is_empty()
    }
}

/// Exhaustive search is refused beyond this many interior strings.
pub const NULL_SEARCH_BUDGET: u64 = 1 << 26;

fn log_ratio(c: &Cocycle, letter: usize, v: Vec2) -> (Vec2, f64) {
    let l = c.letter(letter);
    let w = l.mat().apply(v);
    let n = w.norm();
    (w.scale(1.0 / n), (n / l.norm()).ln())
}

/// Relative size `‖A_{ω_n} ⋯ A_{ω₁} r_{ω₀}‖ / Π‖A_{ω_i}‖` of a block, in logs.
pub fn block_log_ratio(c: &Cocycle, w: &Word) -> f64 {
    let Some(s) = w.first() else { return 0.0 };
    let mut v = c.range(s).unit();
    let mut acc = 0.0;
    for &sym in &w.symbols()[1..] {
        let (next, lr) = log_ratio(c, sym as usize, v);
        acc += lr;
        if !lr.is_finite() {
            return f64::NEG_INFINITY;
        }
        v = next;
    }
    acc
}

fn word_probability(c: &Cocycle, w: &Word) -> f64 {
    w.symbols()
        .windows(2)
        .map(|p| c.transition(p[1] as usize, p[0] as usize))
        .product()
}

/// `log(‖A_l v‖ / ‖A_l‖)` for the final letter `l` of `w`, with `v` the unit
/// direction reached by the rest of the word from `r_{ω₀}`.
pub fn final_step_log_ratio(c: &Cocycle, w: &Word) -> f64 {
    let syms = w.symbols();
    let Some((&last, body)) = syms.split_last() else { return 0.0 };
    if body.is_empty() {
        return 0.0;
    }
    let mut v = c.range(body[0] as usize).unit();
    for &sym in &body[1..] {
        v = log_ratio(c, sym as usize, v).0;
    }
    log_ratio(c, last as usize, v).1
}

/// Whether `w` is a renewal block `(s, inv…, s′)` with positive probability
/// whose product kills `r_s`. Invertible letters never do, so only the last
/// step is tested against the relative null tolerance.
pub fn is_null_block(c: &Cocycle, w: &Word) -> bool {
    if w.len() < 2 || !w.is_renewal(c) || !c.is_singular(w.last().unwrap()) {
        return false;
    }
    word_probability(c, w) > 0.0 && final_step_log_ratio(c, w) <= c.tolerances().null_tol.ln()
}

/// All null renewal blocks with at most `max_len` multiplied letters,
/// ordered by length then lexicographically. An empty answer says nothing
/// about longer words.
pub fn find_null_words(c: &Cocycle, max_len: usize) -> Result<Vec<Word>> {
    if max_len < 2 {
        return Err(CocycleError::Domain("max_len must be at least 2".into()));
    }
    let inv = c.invertible().len() as f64;
    if inv.powi(max_len as i32 - 1) > NULL_SEARCH_BUDGET as f64 {
        return Err(CocycleError::BudgetExceeded { budget: NULL_SEARCH_BUDGET });
    }
    let log_tol = c.tolerances().null_tol.ln();
    let mut found = Vec::new();
    for &s in c.singular() {
        let mut prefix = vec![s];
        search(c, &mut prefix, c.range(s).unit(), max_len, log_tol, &mut found);
    }
    found.sort_by(|a: &Word, b: &Word| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(found)
}

fn search(c: &Cocycle, prefix: &mut Vec<usize>, v: Vec2, max_len: usize, log_tol: f64, out: &mut Vec<Word>) {
    let last = *prefix.last().unwrap();
    for &l in c.singular() {
        if c.transition(l, last) > 0.0 {
            let (_, lr) = log_ratio(c, l, v);
            if lr <= log_tol {
                let mut w = Word::from_indices(prefix);
                w.push(l);
                out.push(w);
            }
        }
    }
    if prefix.len() >= max_len {
        return;
    }
    for &j in c.invertible() {
        if c.transition(j, last) > 0.0 {
            let (next, _) = log_ratio(c, j, v);
            prefix.push(j);
            search(c, prefix, next, max_len, log_tol, out);
            prefix.pop();
        }
    }
}

fn image_arc(c: &Cocycle, j: usize, arc: &ProjArc) -> ProjArc {
    let l = c.letter(j);
    let a = l.act(ProjPoint::new(arc.start));
    if arc.len == 0.0 {
        return ProjArc::point(a);
    }
    let b = l.act(arc.end());
    ProjArc::new(a.theta(), (b.theta() - a.theta()).rem_euclid(PI))
}

/// Searches for a forward-invariant arc around the singular ranges.
pub fn invariant_arc(c: &Cocycle) -> Option<ArcCertificate> {
    let sing = c.singular();
    let mut arc = ProjArc::point(c.range(sing[0]));
    for &s in &sing[1..] {
        arc = arc.hull(&ProjArc::point(c.range(s)));
    }
    for _ in 0..100_000 {
        let mut next = arc;
        for &j in c.invertible() {
            next = next.hull(&image_arc(c, j, &arc));
        }
        if next.len > PI - 1e-6 {
            return None;
        }
        let grew = next.len - arc.len > 1e-15;
        arc = next;
        if !grew {
            break;
        }
    }
    for delta in [1e-9, 1e-7, 1e-5, 1e-3, 1e-2] {
        let wide = arc.widened(delta);
        if let Some(clearance) = verify_arc(c, &wide) {
            return Some(ArcCertificate {
                arc: wide,
                delta,
                kernel_clearance: clearance,
            });
        }
    }
    None
}

/// Returns the kernel clearance when the arc is verified invariant.
fn verify_arc(c: &Cocycle, arc: &ProjArc) -> Option<f64> {
    const MARGIN: f64 = 1e-12;
    if arc.len >= PI - 1e-6 {
        return None;
    }
    for &s in c.singular() {
        let o = arc.offset(c.range(s));
        if o < MARGIN || o > arc.len - MARGIN {
            return None;
        }
    }
    let mut clearance = f64::INFINITY;
    for &s in c.singular() {
        let k = c.kernel(s);
        let o = arc.offset(k);
        if o <= arc.len + MARGIN || PI - o <= MARGIN {
            return None;
        }
        clearance = clearance.min((o - arc.len).min(PI - o));
    }
    for &j in c.invertible() {
        let img = image_arc(c, j, arc);
        let o = arc.offset(ProjPoint::new(img.start));
        if o < MARGIN || o + img.len > arc.len - MARGIN {
            return None;
        }
    }
    Some(clearance)
}

/// Null-word scan up to `max_len`: a verified invariant arc settles every
/// length at once, otherwise the blocks are enumerated.
pub fn scan_null_words(c: &Cocycle, max_len: usize) -> Result<NullScan> {
    if let Some(cert) = invariant_arc(c) {
        return Ok(NullScan {
            max_len,
            words: Vec::new(),
            certificate: Some(cert),
        });
    }
    Ok(NullScan {
        max_len,
        words: find_null_words(c, max_len)?,
        certificate: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearKernelArcs {
    pub eps: f64,
    pub arcs: Vec<ProjArc>,
    pub total_length: f64,
    /// `total_length ≤ constant · eps`.
    pub constant: f64,
}

/// The set `{θ : ‖A_i u_θ‖ < eps}` for singular `i`, merged.
pub fn near_kernel_arcs(c: &Cocycle, eps: f64) -> Result<NearKernelArcs> {
    let min_sigma = c.singular().iter().map(|&s| c.letter(s).norm()).fold(f64::INFINITY, f64::min);
    if !(eps > 0.0 && eps < min_sigma) {
        return Err(CocycleError::Domain(format!("eps must lie in (0, {min_sigma})")));
    }
    let mut arcs: Vec<ProjArc> = c
        .singular()
        .iter()
        .map(|&s| {
            // ‖A u_θ‖ = σ₁ |sin(θ − k)|
            let half = (eps / c.letter(s).norm()).asin();
            ProjArc::new(c.kernel(s).theta() - half, 2.0 * half)
        })
        .collect();
    arcs.sort_by(|a, b| a.start.total_cmp(&b.start));
    let mut merged: Vec<ProjArc> = Vec::new();
    for a in arcs {
        match merged.iter_mut().find(|m| m.overlaps(&a)) {
            Some(m) => *m = m.hull(&a),
            None => merged.push(a),
        }
    }
    // wrap-around merge
    if merged.len() > 1 && merged[0].overlaps(merged.last().unwrap()) {
        let last = merged.pop().unwrap();
        merged[0] = merged[0].hull(&last);
    }
    let constant = c.singular().iter().map(|&s| PI / c.letter(s).norm()).sum();
    Ok(NearKernelArcs {
        eps,
        total_length: merged.iter().map(|a| a.len).sum(),
        arcs: merged,
        constant,
    })
}
