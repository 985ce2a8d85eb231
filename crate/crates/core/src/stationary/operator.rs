//! The Markov operators `𝒬 = 𝒬_inv + 𝒬_sing`, `𝒬̄`, and the numerical
//! checks built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::measure::{AtomicMeasure, MeasureKind};
use super::observable::Observable;
use crate::error::{CocycleError, Result};
use crate::io::ext_real;
use crate::linalg::ProjPoint;
use crate::model::{Cocycle, PathSampler};
use crate::rng::Domain;
use crate::stats::{compensated_sum, least_squares, mean_se};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Full,
    Inv,
    Sing,
}

fn column(c: &Cocycle, symbol: Option<usize>) -> Result<usize> {
    match symbol {
        Some(j) if j < c.k() => Ok(j),
        Some(j) => Err(CocycleError::Domain(format!("symbol {} out of range", j + 1))),
        None if c.is_bernoulli() => Ok(0),
        None => Err(CocycleError::Domain("Markov operators need the current symbol".into())),
    }
}

fn letters_of(c: &Cocycle, part: Part) -> Vec<usize> {
    match part {
        Part::Full => (0..c.k()).collect(),
        Part::Inv => c.invertible().to_vec(),
        Part::Sing => c.singular().to_vec(),
    }
}

/// `(𝒬φ)(j, x) = Σ_i p_ij φ(i, Â_i x)` restricted to `part`. For Bernoulli
/// cocycles `symbol` may be omitted.
pub fn apply_q(c: &Cocycle, phi: &Observable, part: Part, symbol: Option<usize>, x: ProjPoint) -> Result<f64> {
    let j = column(c, symbol)?;
    Ok(compensated_sum(letters_of(c, part).into_iter().filter_map(|i| {
        let p = c.transition(i, j);
        (p > 0.0).then(|| p * phi.eval(Some(i), c.letter(i).act(x)))
    })))
}

const PAR_DEPTH: usize = 8;

fn inv_rec(c: &Cocycle, phi: &Observable, n: usize, j: usize, x: ProjPoint) -> f64 {
    if n == 0 {
        return phi.eval(Some(j), x);
    }
    let terms = |i: usize| {
        let p = c.transition(i, j);
        if p > 0.0 {
            p * inv_rec(c, phi, n - 1, i, c.letter(i).act(x))
        } else {
            0.0
        }
    };
    if n >= PAR_DEPTH {
        let v: Vec<f64> = c.invertible().par_iter().map(|&i| terms(i)).collect();
        compensated_sum(v)
    } else {
        compensated_sum(c.invertible().iter().map(|&i| terms(i)))
    }
}

/// `(𝒬_invⁿφ)(j, x)` by summing the `|inv|ⁿ` invertible words.
pub fn inv_power(c: &Cocycle, phi: &Observable, n: usize, symbol: Option<usize>, x: ProjPoint) -> Result<f64> {
    let j = column(c, symbol)?;
    Ok(inv_rec(c, phi, n, j, x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QnOptions {
    /// Largest number of word terms summed exactly.
    pub budget: u64,
    pub mc_samples: usize,
    pub seed: u64,
    pub allow_mc: bool,
}

impl Default for QnOptions {
    fn default() -> Self {
        Self {
            budget: 1 << 22,
            mc_samples: 20_000,
            seed: 0,
            allow_mc: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QnValue {
    #[serde(with = "ext_real")]
    pub value: f64,
    /// Zero for exact evaluations.
    pub std_error: f64,
    pub exact: bool,
    /// Word terms summed (exact) or paths drawn (Monte Carlo).
    pub terms: u64,
}

fn qn_terms(c: &Cocycle, n: usize) -> u64 {
    let b = c.invertible().len() as u64;
    let mut total = 0u64;
    let mut pow = 1u64;
    for _ in 0..=n {
        total = total.saturating_add(pow.saturating_mul(1 + c.singular().len() as u64));
        pow = pow.saturating_mul(b);
    }
    total
}

/// `(𝒬ⁿφ)(j, x)` through `𝒬ⁿ = 𝒬_invⁿ + Σ_m 𝒬^{n-1-m} 𝒬_sing 𝒬_inv^m`.
/// The singular part only needs `𝒬_inv^m φ` at the singular ranges, so it
/// does not depend on `x`. Beyond the budget the value is estimated by
/// sampling `n` letters.
pub fn apply_qn(c: &Cocycle, phi: &Observable, n: usize, symbol: Option<usize>, x: ProjPoint, opts: &QnOptions) -> Result<QnValue> {
    let j = column(c, symbol)?;
    let terms = qn_terms(c, n);
    if terms <= opts.budget {
        let value = inv_rec(c, phi, n, j, x) + sing_constant(c, phi, n)[j];
        return Ok(QnValue {
            value,
            std_error: 0.0,
            exact: true,
            terms,
        });
    }
    if !opts.allow_mc {
        return Err(CocycleError::BudgetExceeded { budget: opts.budget });
    }
    monte_carlo_qn(c, phi, n, j, x, opts)
}

/// `T_n(j) = 𝒬ⁿφ(j, ·) − 𝒬_invⁿφ(j, ·)` for every `j`.
pub fn sing_constant(c: &Cocycle, phi: &Observable, n: usize) -> Vec<f64> {
    let k = c.k();
    let mut t = vec![0.0; k];
    for m in 0..n {
        let at_ranges: Vec<(usize, f64)> = c.singular().iter().map(|&s| (s, inv_rec(c, phi, m, s, c.range(s)))).collect();
        t = (0..k)
            .map(|j| {
                let sing = at_ranges.iter().filter_map(|&(s, v)| {
                    let p = c.transition(s, j);
                    (p > 0.0).then_some(p * v)
                });
                let carried = (0..k).filter_map(|l| {
                    let p = c.transition(l, j);
                    (p > 0.0).then_some(p * t[l])
                });
                compensated_sum(sing.chain(carried))
            })
            .collect();
    }
    t
}

fn monte_carlo_qn(c: &Cocycle, phi: &Observable, n: usize, j: usize, x: ProjPoint, opts: &QnOptions) -> Result<QnValue> {
    let samples: Vec<f64> = (0..opts.mc_samples as u64)
        .into_par_iter()
        .map(|idx| {
            let mut s = PathSampler::new(c, opts.seed, Domain::OperatorMc, idx);
            s.condition_on(j);
            let mut y = x;
            let mut last = j;
            for _ in 0..n {
                last = s.next_symbol();
                y = c.letter(last).act(y);
            }
            phi.eval(Some(last), y)
        })
        .collect();
    let (value, std_error) = mean_se(&samples);
    Ok(QnValue {
        value,
        std_error,
        exact: false,
        terms: opts.mc_samples as u64,
    })
}

/// Plain `n`-fold application of `𝒬`, summing all `kⁿ` words. Kept as an
/// independent check of [`apply_qn`].
pub fn apply_qn_direct(c: &Cocycle, phi: &Observable, n: usize, symbol: Option<usize>, x: ProjPoint) -> Result<f64> {
    fn rec(c: &Cocycle, phi: &Observable, n: usize, j: usize, x: ProjPoint) -> f64 {
        if n == 0 {
            return phi.eval(Some(j), x);
        }
        compensated_sum((0..c.k()).filter_map(|i| {
            let p = c.transition(i, j);
            (p > 0.0).then(|| p * rec(c, phi, n - 1, i, c.letter(i).act(x)))
        }))
    }
    let j = column(c, symbol)?;
    Ok(rec(c, phi, n, j, x))
}

fn require_bernoulli(c: &Cocycle, what: &str) -> Result<()> {
    if c.is_bernoulli() {
        Ok(())
    } else {
        Err(CocycleError::Domain(format!("{what} is defined for Bernoulli cocycles only")))
    }
}

/// `πφ(v̂) = Σ_i p_i φ(i, v̂)`.
pub fn pi(c: &Cocycle, phi: &Observable) -> Result<Observable> {
    require_bernoulli(c, "π")?;
    let p = c.initial_law().to_vec();
    let f = phi.clone();
    let mut o = Observable::projective(format!("pi({})", phi.name()), move |x| {
        compensated_sum(p.iter().enumerate().map(|(i, &pi)| pi * f.eval(Some(i), x)))
    });
    if let Some(b) = phi.sup_bound() {
        o = o.with_sup_bound(b);
    }
    Ok(o)
}

/// `𝒬̄φ(j, v̂) = Σ_i p_i φ(i, Â_j v̂)`.
pub fn q_bar(c: &Cocycle, phi: &Observable) -> Result<Observable> {
    require_bernoulli(c, "𝒬̄")?;
    let p = c.initial_law().to_vec();
    let letters = c.letters().to_vec();
    let f = phi.clone();
    let mut o = Observable::new(format!("qbar({})", phi.name()), move |j, x| {
        let y = letters[j.expect("𝒬̄φ needs a symbol")].act(x);
        compensated_sum(p.iter().enumerate().map(|(i, &pi)| pi * f.eval(Some(i), y)))
    });
    if let Some(b) = phi.sup_bound() {
        o = o.with_sup_bound(b);
    }
    Ok(o)
}

/// `𝒬φ` as an observable.
pub fn q_of(c: &Cocycle, phi: &Observable) -> Observable {
    let cc = c.clone();
    let f = phi.clone();
    let bernoulli = c.is_bernoulli();
    let mut o = if bernoulli {
        Observable::projective(format!("Q({})", phi.name()), move |x| apply_q(&cc, &f, Part::Full, None, x).unwrap())
    } else {
        Observable::new(format!("Q({})", phi.name()), move |j, x| apply_q(&cc, &f, Part::Full, j, x).unwrap())
    };
    if let Some(b) = phi.sup_bound() {
        o = o.with_sup_bound(b);
    }
    o
}

/// Uniform grid of `n` points on `P¹`.
pub fn grid(n: usize) -> Vec<ProjPoint> {
    (0..n).map(|i| ProjPoint::new(std::f64::consts::PI * i as f64 / n as f64)).collect()
}

fn grid_sup(c: &Cocycle, phi: &Observable) -> f64 {
    let pts = grid(256);
    let syms: Vec<Option<usize>> = if phi.is_symbol_independent() { vec![None] } else { (0..c.k()).map(Some).collect() };
    let mut sup = 0.0f64;
    for s in syms {
        for &x in &pts {
            sup = sup.max(phi.eval(s, x).abs());
        }
    }
    sup
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityRow {
    pub observable: String,
    #[serde(with = "ext_real")]
    pub integral: f64,
    #[serde(with = "ext_real")]
    pub integral_q: f64,
    #[serde(with = "ext_real")]
    pub discrepancy: f64,
    pub slack: f64,
    /// False when `‖φ‖∞` was estimated on a grid.
    pub sup_known: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub kind: MeasureKind,
    pub tail_mass: f64,
    pub rows: Vec<StationarityRow>,
}

impl StationarityReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Compares `∫𝒬φ dm` with `∫φ dm` (`𝒬̄` for product measures) against the
/// slack `2‖φ‖∞ · tail_mass + 1e-10`.
pub fn check_stationarity(c: &Cocycle, m: &AtomicMeasure, test_set: &[Observable]) -> Result<StationarityReport> {
    m.check_cocycle(c)?;
    let mut rows = Vec::with_capacity(test_set.len());
    for phi in test_set {
        let image = match m.kind {
            MeasureKind::Projective => {
                if !phi.is_symbol_independent() {
                    return Err(CocycleError::Domain(format!("{} depends on the symbol", phi.name())));
                }
                q_of(c, phi)
            }
            MeasureKind::Joint => q_of(c, phi),
            MeasureKind::Product => q_bar(c, phi)?,
        };
        let integral = m.integrate(phi);
        let integral_q = m.integrate(&image);
        let discrepancy = if integral == integral_q { 0.0 } else { (integral_q - integral).abs() };
        let (sup, sup_known) = match phi.sup_bound() {
            Some(b) => (b, true),
            None => (grid_sup(c, phi), false),
        };
        let slack = 2.0 * sup * m.tail_mass + 1e-10;
        rows.push(StationarityRow {
            observable: phi.name().to_string(),
            integral,
            integral_q,
            discrepancy,
            slack,
            sup_known,
            pass: discrepancy <= slack,
        });
    }
    Ok(StationarityReport {
        kind: m.kind,
        tail_mass: m.tail_mass,
        rows,
    })
}

/// Largest `|(π∘𝒬̄)φ − (𝒬∘π)φ|` over the points, each side summed in its
/// own order.
pub fn check_diagram(c: &Cocycle, phi: &Observable, points: &[ProjPoint]) -> Result<f64> {
    require_bernoulli(c, "the commuting diagram")?;
    let k = c.k();
    let p = c.initial_law();
    let mut gap = 0.0f64;
    for &x in points {
        // π(𝒬̄φ)(x) = Σ_j p_j Σ_i p_i φ(i, Â_j x)
        let lhs = compensated_sum((0..k).map(|j| {
            let y = c.letter(j).act(x);
            p[j] * compensated_sum((0..k).map(|i| p[i] * phi.eval(Some(i), y)))
        }));
        // 𝒬(πφ)(x) = Σ_j p_j πφ(Â_j x), with πφ(y) = Σ_i p_i φ(i, y)
        let pi_phi = |y: ProjPoint| compensated_sum((0..k).map(|i| p[i] * phi.eval(Some(i), y)));
        let rhs = compensated_sum((0..k).rev().map(|j| p[j] * pi_phi(c.letter(j).act(x))));
        if lhs != rhs {
            gap = gap.max((lhs - rhs).abs());
        }
    }
    Ok(gap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub ns: Vec<usize>,
    /// `max − min` of `𝒬ⁿφ` over the grid (and symbols).
    pub oscillation: Vec<f64>,
    pub exact: Vec<bool>,
    /// Fitted `(C, a)` in `osc(n) ≈ C e^{−a n}`.
    pub fit: Option<(f64, f64)>,
}

/// Oscillation of `𝒬ⁿφ` over a grid of `P¹`, with a fitted exponential rate.
pub fn ergodicity_decay(c: &Cocycle, phi: &Observable, ns: &[usize], grid_size: usize, opts: &QnOptions) -> Result<DecayCurve> {
    let pts = grid(grid_size);
    let syms: Vec<Option<usize>> = if c.is_bernoulli() { vec![None] } else { (0..c.k()).map(Some).collect() };
    let mut oscillation = Vec::with_capacity(ns.len());
    let mut exact = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut all_exact = true;
        for &s in &syms {
            let t = sing_constant(c, phi, n);
            for &x in &pts {
                let v = if qn_terms(c, n) <= opts.budget {
                    inv_power(c, phi, n, s, x)? + t[column(c, s)?]
                } else {
                    let q = apply_qn(c, phi, n, s, x, opts)?;
                    all_exact &= q.exact;
                    q.value
                };
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        oscillation.push(if hi == lo { 0.0 } else { hi - lo });
        exact.push(all_exact);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = ns
        .iter()
        .zip(&oscillation)
        .filter(|(_, &o)| o.is_finite() && o > 1e-300)
        .map(|(&n, &o)| (n as f64, o.ln()))
        .unzip();
    let fit = least_squares(&xs, &ys).map(|(a, b)| (a.exp(), -b));
    Ok(DecayCurve {
        ns: ns.to_vec(),
        oscillation,
        exact,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;
    use crate::model::CocycleSpec;

    fn rot07() -> Cocycle {
        Cocycle::new(CocycleSpec::bernoulli(
            vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7)],
            vec![0],
            vec![0.3, 0.7],
        ))
        .unwrap()
    }

    #[test]
    fn constants_are_fixed() {
        let c = rot07();
        let one = Observable::constant(1.0);
        let x = ProjPoint::new(0.4);
        assert_eq!(apply_q(&c, &one, Part::Full, None, x).unwrap(), 1.0);
        assert!((apply_q(&c, &one, Part::Inv, None, x).unwrap() - 0.7).abs() < 1e-15);
        assert!((inv_power(&c, &one, 3, None, x).unwrap() - 0.343).abs() < 1e-15);
    }

    #[test]
    fn decomposition_matches_direct_sum() {
        let c = rot07();
        let phi = Observable::projective("cos2", |x| (2.0 * x.theta()).cos()).with_sup_bound(1.0);
        for n in 0..8 {
            for &x in &grid(5) {
                let a = apply_qn(&c, &phi, n, None, x, &QnOptions::default()).unwrap();
                let b = apply_qn_direct(&c, &phi, n, None, x).unwrap();
                assert!(a.exact && (a.value - b).abs() < 1e-13, "n={n}");
            }
        }
    }

    #[test]
    fn markov_needs_symbol() {
        let c = Cocycle::new(CocycleSpec::markov(
            vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7)],
            vec![0],
            vec![vec![0.9, 0.2], vec![0.1, 0.8]],
        ))
        .unwrap();
        let one = Observable::constant(1.0);
        assert!(apply_q(&c, &one, Part::Full, None, ProjPoint::new(0.0)).is_err());
        let phi = Observable::new("mixed", |s, x| s.unwrap() as f64 + x.theta().sin());
        for j in 0..2 {
            let a = apply_qn(&c, &phi, 6, Some(j), ProjPoint::new(1.0), &QnOptions::default()).unwrap();
            let b = apply_qn_direct(&c, &phi, 6, Some(j), ProjPoint::new(1.0)).unwrap();
            assert!((a.value - b).abs() < 1e-13);
        }
    }

    #[test]
    fn monte_carlo_fallback_agrees() {
        let c = rot07();
        let phi = Observable::projective("cos2", |x| (2.0 * x.theta()).cos()).with_sup_bound(1.0);
        let x = ProjPoint::new(0.3);
        let exact = apply_qn_direct(&c, &phi, 10, None, x).unwrap();
        let opts = QnOptions {
            budget: 10,
            mc_samples: 40_000,
            seed: 5,
            allow_mc: true,
        };
        let mc = apply_qn(&c, &phi, 10, None, x, &opts).unwrap();
        assert!(!mc.exact && (mc.value - exact).abs() <= 4.0 * mc.std_error);
        let strict = QnOptions { allow_mc: false, ..opts };
        assert_eq!(apply_qn(&c, &phi, 10, None, x, &strict), Err(CocycleError::BudgetExceeded { budget: 10 }));
    }
}
