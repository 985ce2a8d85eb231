//! The asymptotic variance `σ²` of `log ‖Aⁿ‖`, from the Gordin–Livšic
//! coboundary and from sample paths.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clt::centred_growth;
use super::paths::{require_finite_ref, StartDirection};
use crate::error::{CocycleError, Result};
use crate::linalg::ProjPoint;
use crate::model::Cocycle;
use crate::rng::Domain;
use crate::stationary::{pi, AtomicMeasure, MeasureKind, Observable};
use crate::stats::{compensated_sum, mean_var, Accumulator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalVariance {
    pub sigma2: f64,
    pub std_error: f64,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
}

/// Sample variance of `(log ‖Aⁿ‖ − n L₁)/√n` over seeded paths, with the
/// standard error `sqrt((m₄ − s⁴)/samples)`.
pub fn variance_empirical(c: &Cocycle, n: usize, samples: usize, l1_ref: f64, seed: u64, start: StartDirection) -> Result<EmpiricalVariance> {
    require_finite_ref(l1_ref)?;
    if n == 0 || samples < 2 {
        return Err(CocycleError::Domain("need n ≥ 1 and at least two samples".into()));
    }
    let z = centred_growth(c, l1_ref, n, samples, seed, Domain::Variance, start);
    if z.iter().any(|v| !v.is_finite()) {
        return Err(CocycleError::Domain("a sample path hit a null word".into()));
    }
    let (mean, var) = mean_var(&z);
    let m4 = compensated_sum(z.iter().map(|v| (v - mean).powi(4))) / samples as f64;
    Ok(EmpiricalVariance {
        sigma2: var.max(0.0),
        std_error: ((m4 - var * var).max(0.0) / samples as f64).sqrt(),
        n,
        samples,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlOptions {
    /// Truncation level `N` in `max(φ, −N)`.
    pub n_trunc: f64,
    /// Target for the geometric tail `(1−q)^M ‖πφ̄‖∞`.
    pub gl_tol: f64,
    /// Word terms allowed per point evaluation.
    pub budget: u64,
    /// Extra truncation levels reported alongside `n_trunc`.
    pub sensitivity: Vec<f64>,
}

impl Default for GlOptions {
    fn default() -> Self {
        Self {
            n_trunc: 40.0,
            gl_tol: 1e-10,
            budget: 1 << 22,
            sensitivity: vec![20.0, 40.0, 80.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub n_trunc: f64,
    pub sigma2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlReport {
    pub sigma2: f64,
    /// `(Σ w g² − Σ w (𝒬̄g)²) / Σ w` before clamping.
    pub raw_sigma2: f64,
    pub clamped: bool,
    pub warning: Option<String>,
    pub n_trunc: f64,
    /// `∫ max(φ, −N) d(p × η)`, the centring constant.
    pub mean: f64,
    /// Number of powers `M + 1` of `𝒬` summed.
    pub series_len: usize,
    /// `max |φ̄ − (g − 𝒬̄g)|` over the atoms, with `𝒬̄g` evaluated afresh.
    pub coboundary_residual: f64,
    pub g_sup: f64,
    pub coboundary_ok: bool,
    pub atoms: usize,
    pub tail_mass: f64,
    pub terms: u64,
    pub sensitivity: Vec<SensitivityRow>,
}

/// Sums of `𝒬_inv^m f` at a point for `m = 0..=M`, by walking the
/// invertible words.
struct InvLevels<'a> {
    c: &'a Cocycle,
    len: usize,
    budget: u64,
}

impl InvLevels<'_> {
    fn at(&self, f: &dyn Fn(ProjPoint) -> f64, y: ProjPoint) -> Result<(Vec<f64>, u64)> {
        let mut levels = vec![Accumulator::new(); self.len];
        let mut stack = vec![(y, 1.0, 0usize)];
        let mut terms = 0u64;
        while let Some((x, w, m)) = stack.pop() {
            terms += 1;
            if terms > self.budget {
                return Err(CocycleError::BudgetExceeded { budget: self.budget });
            }
            levels[m].add(w * f(x));
            if m + 1 < self.len {
                for &i in self.c.invertible().iter().rev() {
                    stack.push((self.c.letter(i).act(x), w * self.c.initial(i), m + 1));
                }
            }
        }
        Ok((levels.iter().map(Accumulator::value).collect(), terms))
    }
}

struct Poisson<'a> {
    levels: InvLevels<'a>,
    phi: Observable,
    /// `πφ − mean`.
    psi: Box<dyn Fn(ProjPoint) -> f64 + Send + Sync>,
    mean: f64,
    /// `Σ_s p_s Σ_m (m+1) 𝒬_inv^m ψ(r_s)`.
    k: f64,
    terms: u64,
}

impl<'a> Poisson<'a> {
    /// `G = Σ_{n≤M} 𝒬ⁿψ`, using `𝒬ⁿ = 𝒬_invⁿ + T_n` where the constants
    /// `T_n` come from the singular ranges.
    fn new(c: &'a Cocycle, n_trunc: f64, opts: &GlOptions) -> Result<Self> {
        let phi = Observable::step_log_norm(c).truncated(n_trunc);
        let raw = pi(c, &phi)?;
        let inv_mass = 1.0 - c.sing_mass();
        let g = c.growth_constants();
        let bound = 2.0 * n_trunc.max(g.all_up.abs()).max(g.inv_lo.abs()).max(1.0);
        let len = if inv_mass <= 0.0 {
            1
        } else {
            let m = ((opts.gl_tol / bound).ln() / inv_mass.ln()).ceil();
            if !(m.is_finite() && m < 1e6) {
                return Err(CocycleError::BudgetExceeded { budget: opts.budget });
            }
            m.max(1.0) as usize + 1
        };
        let levels = InvLevels { c, len, budget: opts.budget };
        let mut terms = 0;
        let f0 = |x: ProjPoint| raw.eval(None, x);
        let mut ranges = Vec::new();
        for &s in c.singular() {
            let (lv, t) = levels.at(&f0, c.range(s))?;
            terms += t;
            ranges.push((s, lv));
        }
        // normalize by the mass the M-level renewal sum actually covers
        let covered = 1.0 - inv_mass.powi(len as i32);
        let mean = compensated_sum(ranges.iter().map(|(s, lv)| c.initial(*s) * compensated_sum(lv.iter().copied()))) / covered;
        let k = compensated_sum(ranges.iter().flat_map(|(s, lv)| {
            let p = c.initial(*s);
            lv.iter()
                .enumerate()
                .map(move |(m, v)| p * (m + 1) as f64 * (v - mean * inv_mass.powi(m as i32)))
        }));
        let psi = Box::new(move |x: ProjPoint| raw.eval(None, x) - mean);
        Ok(Self {
            levels,
            phi,
            psi,
            mean,
            k,
            terms,
        })
    }

    fn g_of(&self, y: ProjPoint) -> Result<(f64, u64)> {
        let (lv, t) = self.levels.at(&*self.psi, y)?;
        Ok((compensated_sum(lv) - self.k, t))
    }

    fn phi_bar(&self, i: usize, x: ProjPoint) -> f64 {
        self.phi.eval(Some(i), x) - self.mean
    }
}

struct AtomTerms {
    g2: f64,
    h2: f64,
    g_abs: f64,
    residual: f64,
    terms: u64,
}

fn product_measure(c: &Cocycle, m: &AtomicMeasure) -> Result<AtomicMeasure> {
    match m.kind {
        MeasureKind::Product => {
            m.check_cocycle(c)?;
            Ok(m.clone())
        }
        MeasureKind::Projective => m.product(c),
        MeasureKind::Joint => Err(CocycleError::Domain("the Gordin–Livšic variance is implemented for Bernoulli cocycles only".into())),
    }
}

fn sigma2_at<'a>(c: &'a Cocycle, pm: &AtomicMeasure, n_trunc: f64, opts: &GlOptions, coboundary: bool) -> Result<(Poisson<'a>, Vec<AtomTerms>)> {
    let pois = Poisson::new(c, n_trunc, opts)?;
    let k = c.k();
    let rows: Vec<Result<AtomTerms>> = pm
        .atoms
        .par_iter()
        .map(|a| {
            let i = a.symbol.expect("product atoms carry a symbol");
            let y = c.letter(i).act(a.point);
            let (h, mut terms) = pois.g_of(y)?;
            let g = pois.phi_bar(i, a.point) + h;
            let residual = if coboundary {
                // 𝒬̄g(i, x) = Σ_j p_j g(j, Â_i x), each g evaluated from scratch
                let mut acc = Accumulator::new();
                for j in 0..k {
                    let (gj, t) = pois.g_of(c.letter(j).act(y))?;
                    terms += t;
                    acc.add(c.initial(j) * (pois.phi_bar(j, y) + gj));
                }
                (pois.phi_bar(i, a.point) - (g - acc.value())).abs()
            } else {
                0.0
            };
            Ok(AtomTerms {
                g2: a.weight * g * g,
                h2: a.weight * h * h,
                g_abs: g.abs(),
                residual,
                terms,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((pois, rows))
}

/// `σ² = ‖g‖² − ‖𝒬̄g‖²` in `L²(p × η)` with `g = Σ_n 𝒬̄ⁿφ̄` and
/// `φ̄ = max(log ‖A_i v‖, −N) − ∫`, the norms taken over the atoms
/// normalized to unit mass. Bernoulli cocycles only.
pub fn variance_gl(c: &Cocycle, m: &AtomicMeasure, opts: &GlOptions) -> Result<GlReport> {
    if !c.is_bernoulli() {
        return Err(CocycleError::Domain("the Gordin–Livšic variance is implemented for Bernoulli cocycles only".into()));
    }
    let pm = product_measure(c, m)?;
    let (pois, rows) = sigma2_at(c, &pm, opts.n_trunc, opts, true)?;
    let mass = pm.total_mass();
    let raw = (compensated_sum(rows.iter().map(|r| r.g2)) - compensated_sum(rows.iter().map(|r| r.h2))) / mass;
    let g_sup = rows.iter().map(|r| r.g_abs).fold(0.0, f64::max);
    let residual = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let mut terms = pois.terms + rows.iter().map(|r| r.terms).sum::<u64>();

    let mut sensitivity = Vec::with_capacity(opts.sensitivity.len());
    for &n in &opts.sensitivity {
        let (p, rs) = sigma2_at(c, &pm, n, opts, false)?;
        terms += p.terms + rs.iter().map(|r| r.terms).sum::<u64>();
        let s = (compensated_sum(rs.iter().map(|r| r.g2)) - compensated_sum(rs.iter().map(|r| r.h2))) / mass;
        sensitivity.push(SensitivityRow { n_trunc: n, sigma2: s.max(0.0) });
    }

    let clamped = raw < 0.0;
    let warning = clamped.then(|| format!("σ² = {raw:e} < 0 clamped to 0"));
    Ok(GlReport {
        sigma2: raw.max(0.0),
        raw_sigma2: raw,
        clamped,
        warning,
        n_trunc: opts.n_trunc,
        mean: pois.mean,
        series_len: pois.levels.len,
        coboundary_residual: residual,
        g_sup,
        coboundary_ok: residual <= opts.gl_tol * (1.0 + g_sup),
        atoms: pm.len(),
        tail_mass: pm.tail_mass,
        terms,
        sensitivity,
    })
}
