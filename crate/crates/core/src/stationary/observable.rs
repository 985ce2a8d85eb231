use std::fmt;
use std::sync::Arc;

use crate::linalg::{Letter, ProjPoint};
use crate::model::Cocycle;

type ObsFn = dyn Fn(Option<usize>, ProjPoint) -> f64 + Send + Sync;

/// Extended-real function on `𝒜 × P¹` (or on `P¹` when symbol independent).
/// `-∞` is allowed, `+∞` is not.
#[derive(Clone)]
pub struct Observable {
    name: String,
    f: Arc<ObsFn>,
    sup_bound: Option<f64>,
    upper_bound: Option<f64>,
    symbol_independent: bool,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("name", &self.name)
            .field("sup_bound", &self.sup_bound)
            .field("symbol_independent", &self.symbol_independent)
            .finish()
    }
}

impl Observable {
    pub fn new(name: impl Into<String>, f: impl Fn(Option<usize>, ProjPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            sup_bound: None,
            upper_bound: None,
            symbol_independent: false,
        }
    }

    pub fn projective(name: impl Into<String>, f: impl Fn(ProjPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            symbol_independent: true,
            ..Self::new(name, move |_, x| f(x))
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::projective(format!("const({c})"), move |_| c).with_sup_bound(c.abs())
    }

    /// `θ(v̂)` itself, the angle in `[0, π)`.
    pub fn angle() -> Self {
        Self::projective("theta", |x| x.theta()).with_sup_bound(std::f64::consts::PI)
    }

    pub fn with_sup_bound(mut self, b: f64) -> Self {
        self.sup_bound = Some(b);
        self.upper_bound = Some(self.upper_bound.unwrap_or(b).min(b));
        self
    }

    pub fn with_upper_bound(mut self, b: f64) -> Self {
        self.upper_bound = Some(b);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `‖φ‖∞` when known.
    pub fn sup_bound(&self) -> Option<f64> {
        self.sup_bound
    }

    /// `sup φ` when known.
    pub fn upper_bound(&self) -> Option<f64> {
        self.upper_bound
    }

    pub fn is_symbol_independent(&self) -> bool {
        self.symbol_independent
    }

    pub fn eval(&self, symbol: Option<usize>, x: ProjPoint) -> f64 {
        let v = (self.f)(symbol, x);
        debug_assert!(v != f64::INFINITY, "observable {} returned +∞", self.name);
        v
    }

    /// Step observable `φ(i, v̂) = log ‖A_i v‖` for unit `v`.
    pub fn step_log_norm(c: &Cocycle) -> Self {
        let letters: Vec<Letter> = c.letters().to_vec();
        let up = letters.iter().map(|l| l.norm().ln()).fold(f64::NEG_INFINITY, f64::max);
        Self::new("log_norm", move |s, x| {
            letters[s.expect("step observable needs a symbol")].log_norm_at(x)
        })
        .with_upper_bound(up)
    }

    /// `Ψ(j, v̂) = Σ_i p_ij log ‖A_i v‖`; symbol independent for Bernoulli.
    pub fn furstenberg_psi(c: &Cocycle) -> Self {
        let letters: Vec<Letter> = c.letters().to_vec();
        let k = c.k();
        let trans: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| c.transition(i, j)).collect()).collect();
        let bernoulli = c.is_bernoulli();
        let f = move |s: Option<usize>, x: ProjPoint| {
            let j = if bernoulli { 0 } else { s.expect("Markov Ψ needs a symbol") };
            let mut acc = 0.0;
            for (i, l) in letters.iter().enumerate() {
                let p = trans[i][j];
                if p > 0.0 {
                    acc += p * l.log_norm_at(x);
                }
            }
            acc
        };
        let mut o = Self::new("psi", f);
        o.symbol_independent = bernoulli;
        o
    }

    /// Pointwise `max(φ, −n)`.
    pub fn truncated(&self, n: f64) -> Self {
        let inner = self.f.clone();
        let mut sup = self.upper_bound.map(|u| n.max(u.max(0.0)));
        if let Some(b) = self.sup_bound {
            sup = Some(sup.map_or(b, |s| s.min(b)));
        }
        Self {
            name: format!("max({}, -{n})", self.name),
            f: Arc::new(move |s, x| inner(s, x).max(-n)),
            sup_bound: sup,
            upper_bound: self.upper_bound,
            symbol_independent: self.symbol_independent,
        }
    }

    /// `φ − c`.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.f.clone();
        Self {
            name: format!("{} - {c}", self.name),
            f: Arc::new(move |s, x| inner(s, x) - c),
            sup_bound: self.sup_bound.map(|b| b + c.abs()),
            upper_bound: self.upper_bound.map(|u| u - c),
            symbol_independent: self.symbol_independent,
        }
    }
}
