use serde::{Deserialize, Serialize};

use crate::error::{CocycleError, Result};
use crate::linalg::Mat2;
use crate::model::{BaseLaw, Cocycle, CocycleSpec};

/// How the invertible letters move with `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    /// `A_t(j) = A_j R_t` for invertible `j`.
    Rotation,
    /// `A_t(1) = diag(1, 0)`, `A_t(2) = [[a − t, −1], [1, 0]]`, `p = (p, 1 − p)`.
    CraigSimon { a: f64, p: f64 },
    /// `A_t(i) = A_i + t C_i`, one slope per letter.
    Custom { slopes: Vec<Mat2> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub base: CocycleSpec,
    pub kind: FamilyKind,
    pub t_lo: f64,
    pub t_hi: f64,
    /// Smallest winding speed seen by the last verification.
    pub c0: Option<f64>,
}

/// `A_t(i) = A_i` for singular `i`, `A_j R_t` otherwise.
pub fn rotation_family(spec: &CocycleSpec, t: f64) -> CocycleSpec {
    let r = Mat2::rotation(t);
    let mut out = spec.clone();
    for (i, m) in out.matrices.iter_mut().enumerate() {
        if !spec.singular.contains(&i) {
            *m = *m * r;
        }
    }
    out
}

/// The two-letter Schrödinger limit family.
pub fn craig_simon(a: f64, t: f64, p: f64) -> CocycleSpec {
    CocycleSpec::bernoulli(vec![Mat2::diag(1.0, 0.0), Mat2::new(a - t, -1.0, 1.0, 0.0)], vec![0], vec![p, 1.0 - p])
}

fn affine(m: Mat2, c: Mat2, t: f64) -> Mat2 {
    Mat2::new(m.a + t * c.a, m.b + t * c.b, m.c + t * c.c, m.d + t * c.d)
}

impl FamilySpec {
    pub fn rotation(base: CocycleSpec, t_lo: f64, t_hi: f64) -> Self {
        Self {
            base,
            kind: FamilyKind::Rotation,
            t_lo,
            t_hi,
            c0: None,
        }
    }

    pub fn craig_simon(a: f64, p: f64, t_lo: f64, t_hi: f64) -> Self {
        Self {
            base: craig_simon(a, 0.0, p),
            kind: FamilyKind::CraigSimon { a, p },
            t_lo,
            t_hi,
            c0: None,
        }
    }

    pub fn custom(base: CocycleSpec, slopes: Vec<Mat2>, t_lo: f64, t_hi: f64) -> Self {
        Self {
            base,
            kind: FamilyKind::Custom { slopes },
            t_lo,
            t_hi,
            c0: None,
        }
    }

    /// Structural problems with the description itself.
    pub fn check(&self) -> Result<()> {
        if !(self.t_lo <= self.t_hi) {
            return Err(CocycleError::Domain("empty parameter interval".into()));
        }
        match &self.kind {
            FamilyKind::CraigSimon { p, .. } if !(*p > 0.0 && *p < 1.0) => Err(CocycleError::Domain(format!("p = {p} must lie in (0, 1)"))),
            FamilyKind::Custom { slopes } if slopes.len() != self.base.k() => {
                Err(CocycleError::InvalidSpec(format!("{} slopes for {} letters", slopes.len(), self.base.k())))
            }
            _ => Ok(()),
        }
    }

    pub fn at(&self, t: f64) -> CocycleSpec {
        match &self.kind {
            FamilyKind::Rotation => rotation_family(&self.base, t),
            FamilyKind::CraigSimon { a, p } => craig_simon(*a, t, *p),
            FamilyKind::Custom { slopes } => {
                let mut out = self.base.clone();
                for (m, c) in out.matrices.iter_mut().zip(slopes) {
                    *m = affine(*m, *c, t);
                }
                out
            }
        }
    }

    pub fn cocycle_at(&self, t: f64) -> Result<Cocycle> {
        Cocycle::new(self.at(t))
    }

    /// Letter `i` of `A_t`.
    pub fn letter(&self, t: f64, i: usize) -> Mat2 {
        match &self.kind {
            FamilyKind::Rotation if !self.base.singular.contains(&i) => self.base.matrices[i] * Mat2::rotation(t),
            FamilyKind::Rotation => self.base.matrices[i],
            FamilyKind::CraigSimon { a, .. } if i == 1 => Mat2::new(a - t, -1.0, 1.0, 0.0),
            FamilyKind::CraigSimon { .. } => Mat2::diag(1.0, 0.0),
            FamilyKind::Custom { slopes } => affine(self.base.matrices[i], slopes[i], t),
        }
    }

    pub fn singular(&self) -> &[usize] {
        &self.base.singular
    }

    pub fn invertible(&self) -> Vec<usize> {
        (0..self.base.k()).filter(|i| !self.base.singular.contains(i)).collect()
    }

    /// (A1): the singular letters do not move with `t`.
    pub fn singular_constant(&self) -> bool {
        match &self.kind {
            FamilyKind::Rotation | FamilyKind::CraigSimon { .. } => true,
            FamilyKind::Custom { slopes } => self.base.singular.iter().all(|&s| slopes[s] == Mat2::zero()),
        }
    }

    /// Validates `A_t` at `samples` evenly spaced parameters and checks the
    /// rank pattern stays that of the base.
    pub fn validate_interval(&self, samples: usize) -> Result<()> {
        self.check()?;
        let mut pattern = self.base.singular.clone();
        pattern.sort_unstable();
        for t in linspace(self.t_lo, self.t_hi, samples.max(1)) {
            let c = self.cocycle_at(t)?;
            if c.singular() != pattern.as_slice() {
                return Err(CocycleError::InvalidSpec(format!("rank pattern changes at t = {t}")));
            }
        }
        Ok(())
    }

    pub fn is_bernoulli(&self) -> bool {
        matches!(self.base.base, BaseLaw::Bernoulli { .. })
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive, computed as
/// `lo + (hi − lo)·i/(n − 1)` so that round grid values come out exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
    }
}
