//! Exact-size 2×2 linear algebra and the desingularized projective action.
//!
//! Points of the projective line are stored as an angle in `[0, π)`. A
//! rank-one matrix acts on the projective line as the constant map onto its
//! range, including at its own kernel; the corresponding log-norm at the
//! kernel is `-∞`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{CocycleError, Result};

/// Relative tolerance used to decide rank, applied against `‖A‖²`.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// `‖A v‖ ≤ KERNEL_SNAP · ‖A‖` for a unit `v` is treated as an exact kernel
/// hit. This only absorbs the rounding of the angle representation.
pub const KERNEL_SNAP: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn scale(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// `u_x v_y − u_y v_x`.
pub fn wedge(u: Vec2, v: Vec2) -> f64 {
    u.x * v.y - u.y * v.x
}

/// Real 2×2 matrix `[[a, b], [c, d]]`, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MatrixClass {
    Rank0,
    Rank1,
    InvertiblePosDet,
    InvertibleNegDet,
}

impl Mat2 {
    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn from_rows(rows: [f64; 4]) -> Self {
        Self::new(rows[0], rows[1], rows[2], rows[3])
    }

    pub fn to_rows(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub const fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 1.0)
    }

    pub const fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0)
    }

    pub const fn diag(x: f64, y: f64) -> Self {
        Self::new(x, 0.0, 0.0, y)
    }

    /// Counter-clockwise rotation by `t` radians.
    pub fn rotation(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        Self::new(c, -s, s, c)
    }

    /// Outer product `u vᵀ`.
    pub fn outer(u: Vec2, v: Vec2) -> Self {
        Self::new(u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y)
    }

    pub fn scaled(self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn is_finite(self) -> bool {
        self.to_rows().iter().all(|v| v.is_finite())
    }

    pub fn det(self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn transpose(self) -> Self {
        Self::new(self.a, self.c, self.b, self.d)
    }

    pub fn frobenius(self) -> f64 {
        self.a.hypot(self.b).hypot(self.c.hypot(self.d))
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        Vec2::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    /// Singular values `(σ₁, σ₂)` with `σ₁ ≥ σ₂ ≥ 0`.
    pub fn singular_values(self) -> (f64, f64) {
        let e = 0.5 * (self.a + self.d);
        let f = 0.5 * (self.a - self.d);
        let g = 0.5 * (self.c + self.b);
        let h = 0.5 * (self.c - self.b);
        let q = e.hypot(h);
        let r = f.hypot(g);
        (q + r, (q - r).abs())
    }

    /// Operator norm `σ₁`.
    pub fn norm(self) -> f64 {
        self.singular_values().0
    }

    pub fn inverse(self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    pub fn classify(self, rank_tol: f64) -> Result<MatrixClass> {
        if !self.is_finite() {
            return Err(CocycleError::InvalidMatrix);
        }
        let norm = self.norm();
        if norm <= rank_tol {
            return Ok(MatrixClass::Rank0);
        }
        let det = self.det();
        Ok(if det.abs() <= rank_tol * norm * norm {
            MatrixClass::Rank1
        } else if det > 0.0 {
            MatrixClass::InvertiblePosDet
        } else {
            MatrixClass::InvertibleNegDet
        })
    }

    /// Angle of the dominant right singular vector (eigenvector of `AᵀA`).
    fn dominant_right_angle(self) -> f64 {
        let p = self.a * self.a + self.c * self.c;
        let s = self.b * self.b + self.d * self.d;
        let r = self.a * self.b + self.c * self.d;
        0.5 * (2.0 * r).atan2(p - s)
    }

    /// Range and kernel directions of a rank-one matrix.
    pub fn range_kernel(self, rank_tol: f64) -> Result<(ProjPoint, ProjPoint)> {
        match self.classify(rank_tol)? {
            MatrixClass::Rank1 => {}
            other => return Err(CocycleError::RankError(other)),
        }
        let alpha = self.dominant_right_angle();
        let v1 = Vec2::new(alpha.cos(), alpha.sin());
        let range = ProjPoint::from_vector(self.apply(v1)).ok_or(CocycleError::ZeroMatrix)?;
        let kernel = ProjPoint::new(alpha + FRAC_PI_2);
        Ok((range, kernel))
    }

    /// Desingularized projective action.
    pub fn projective_action(self, x: ProjPoint) -> Result<ProjPoint> {
        Ok(Letter::new(self, DEFAULT_RANK_TOL)?.act(x))
    }

    /// Projective image of `x` together with `log ‖A v‖` for the unit
    /// representative `v` of `x`.
    pub fn apply_normalized(self, x: ProjPoint) -> Result<(ProjPoint, f64)> {
        Ok(Letter::new(self, DEFAULT_RANK_TOL)?.act_normalized(x))
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, m: Mat2) -> Mat2 {
        Mat2::new(
            self.a * m.a + self.b * m.c,
            self.a * m.b + self.b * m.d,
            self.c * m.a + self.d * m.c,
            self.c * m.b + self.d * m.d,
        )
    }
}

impl Mul<Vec2> for Mat2 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        self.apply(v)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

/// A line through the origin, stored as its angle in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProjPoint {
    theta: f64,
}

impl ProjPoint {
    /// Reduces any finite angle into `[0, π)`.
    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(PI);
        if t >= PI {
            t -= PI;
        }
        // folds -0.0 into +0.0
        Self { theta: t + 0.0 }
    }

    pub fn from_vector(v: Vec2) -> Option<Self> {
        if v.x == 0.0 && v.y == 0.0 || !v.is_finite() {
            return None;
        }
        Some(Self::new(v.y.atan2(v.x)))
    }

    pub fn theta(self) -> f64 {
        self.theta
    }

    pub fn unit(self) -> Vec2 {
        let (s, c) = self.theta.sin_cos();
        Vec2::new(c, s)
    }

    pub fn dist(self, other: ProjPoint) -> f64 {
        let d = (self.theta - other.theta).abs();
        d.min(PI - d)
    }

    /// Signed angle from `self` to `other`, in `(-π/2, π/2]`.
    pub fn signed_delta(self, other: ProjPoint) -> f64 {
        let mut d = other.theta - self.theta;
        if d > FRAC_PI_2 {
            d -= PI;
        } else if d <= -FRAC_PI_2 {
            d += PI;
        }
        d
    }

    pub fn total_cmp(&self, other: &ProjPoint) -> std::cmp::Ordering {
        self.theta.total_cmp(&other.theta)
    }
}

pub fn proj_dist(x: ProjPoint, y: ProjPoint) -> f64 {
    x.dist(y)
}

/// A classified matrix with its projective data precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Letter {
    mat: Mat2,
    class: MatrixClass,
    norm: f64,
    min_singular: f64,
    range: Option<ProjPoint>,
    kernel: Option<ProjPoint>,
}

impl Letter {
    pub fn new(mat: Mat2, rank_tol: f64) -> Result<Self> {
        let class = mat.classify(rank_tol)?;
        let (norm, min_singular) = mat.singular_values();
        let (range, kernel) = match class {
            MatrixClass::Rank0 => return Err(CocycleError::ZeroMatrix),
            MatrixClass::Rank1 => {
                let (r, k) = mat.range_kernel(rank_tol)?;
                (Some(r), Some(k))
            }
            _ => (None, None),
        };
        Ok(Self {
            mat,
            class,
            norm,
            min_singular,
            range,
            kernel,
        })
    }

    pub fn mat(&self) -> Mat2 {
        self.mat
    }

    pub fn class(&self) -> MatrixClass {
        self.class
    }

    pub fn is_rank_one(&self) -> bool {
        self.class == MatrixClass::Rank1
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn min_singular(&self) -> f64 {
        self.min_singular
    }

    pub fn range(&self) -> Option<ProjPoint> {
        self.range
    }

    pub fn kernel(&self) -> Option<ProjPoint> {
        self.kernel
    }

    pub fn act(&self, x: ProjPoint) -> ProjPoint {
        match self.range {
            Some(r) => r,
            // invertible: the image of a nonzero vector is nonzero
            None => ProjPoint::from_vector(self.mat.apply(x.unit())).unwrap_or(x),
        }
    }

    pub fn act_normalized(&self, x: ProjPoint) -> (ProjPoint, f64) {
        let w = self.mat.apply(x.unit());
        let n = w.norm();
        match self.range {
            Some(r) => {
                let log_norm = if n <= KERNEL_SNAP * self.norm {
                    f64::NEG_INFINITY
                } else {
                    n.ln()
                };
                (r, log_norm)
            }
            None => (ProjPoint::from_vector(w).unwrap_or(x), n.ln()),
        }
    }

    /// `log ‖A v‖` for the unit representative of `x`, with the kernel snap.
    pub fn log_norm_at(&self, x: ProjPoint) -> f64 {
        self.act_normalized(x).1
    }
}
