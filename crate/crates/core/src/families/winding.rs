use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{FamilyKind, FamilySpec};
use crate::error::{CocycleError, Result};
use crate::linalg::{wedge, Mat2, ProjPoint, Vec2};
use crate::model::Word;

/// Central difference step in `t`.
pub const FD_STEP: f64 = 1e-5;

/// Speeds at or below this count as zero.
pub const WINDING_TOL: f64 = 1e-9;

fn require_invertible(f: &FamilySpec, j: usize) -> Result<()> {
    if j < f.base.k() && !f.singular().contains(&j) {
        Ok(())
    } else {
        Err(CocycleError::Domain(format!("letter {} is not an invertible letter of the family", j + 1)))
    }
}

/// `(w ∧ w′) / ‖w‖²`, the angular speed of `w(t)`.
fn angular_speed(w: Vec2, dw: Vec2) -> f64 {
    wedge(w, dw) / w.dot(w)
}

/// `d/dt A_t(j) v` at `t`, by central differences.
fn fd_image_derivative(f: &FamilySpec, t: f64, j: usize, v: Vec2) -> Vec2 {
    let hi = f.letter(t + FD_STEP, j).apply(v);
    let lo = f.letter(t - FD_STEP, j).apply(v);
    (hi - lo).scale(0.5 / FD_STEP)
}

/// Speed of `t ↦ Â_t(j) x̂` by central differences, for any family.
pub fn winding_speed_fd(f: &FamilySpec, t: f64, j: usize, x: ProjPoint) -> Result<f64> {
    require_invertible(f, j)?;
    let v = x.unit();
    Ok(angular_speed(f.letter(t, j).apply(v), fd_image_derivative(f, t, j, v)))
}

/// Speed of `t ↦ Â_t(j) x̂`: closed form for the rotation and Craig–Simon
/// families, central differences for custom families.
pub fn winding_speed(f: &FamilySpec, t: f64, j: usize, x: ProjPoint) -> Result<f64> {
    require_invertible(f, j)?;
    let v = x.unit();
    match &f.kind {
        FamilyKind::Rotation => {
            let a = f.base.matrices[j];
            let w = (a * Mat2::rotation(t)).apply(v);
            Ok(a.det() * v.dot(v) / w.dot(w))
        }
        FamilyKind::CraigSimon { .. } => {
            let dw = Mat2::diag(-1.0, 0.0).apply(v);
            Ok(angular_speed(f.letter(t, j).apply(v), dw))
        }
        FamilyKind::Custom { .. } => winding_speed_fd(f, t, j, x),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindingReport {
    pub c0_hat: f64,
    pub pass: bool,
    /// Where the minimum is attained.
    pub t: f64,
    #[serde(with = "crate::io::one_based")]
    pub letter: usize,
    pub theta: f64,
    pub grid: (usize, usize),
}

/// `min` of the winding speed over the grids and the invertible letters;
/// passes when it exceeds [`WINDING_TOL`]. The minimum is stored in the
/// family.
pub fn verify_winding(f: &mut FamilySpec, t_grid: &[f64], x_grid: &[ProjPoint]) -> Result<WindingReport> {
    if t_grid.is_empty() || x_grid.is_empty() {
        return Err(CocycleError::Domain("winding grids must be nonempty".into()));
    }
    let inv = f.invertible();
    let fam = &*f;
    let per_t: Vec<Result<(f64, usize, f64)>> = t_grid
        .par_iter()
        .map(|&t| {
            let mut best = (f64::INFINITY, 0, 0.0);
            for &j in &inv {
                for &x in x_grid {
                    let s = winding_speed(fam, t, j, x)?;
                    if s < best.0 {
                        best = (s, j, x.theta());
                    }
                }
            }
            Ok(best)
        })
        .collect();
    let mut best = (f64::INFINITY, 0, 0.0, 0.0);
    for (r, &t) in per_t.into_iter().zip(t_grid) {
        let (s, j, theta) = r?;
        if s < best.0 {
            best = (s, j, theta, t);
        }
    }
    f.c0 = Some(best.0);
    Ok(WindingReport {
        c0_hat: best.0,
        pass: best.0 > WINDING_TOL,
        t: best.3,
        letter: best.1,
        theta: best.2,
        grid: (t_grid.len(), x_grid.len()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IteratedWinding {
    pub max_len: usize,
    pub c1_hat: f64,
    pub pass: bool,
    pub word: Word,
    pub t: f64,
    pub theta: f64,
}

fn product(f: &FamilySpec, t: f64, word: &[usize]) -> Mat2 {
    word.iter().fold(Mat2::identity(), |m, &i| f.letter(t, i) * m)
}

/// Smallest speed of `t ↦ Â_tⁿ(ω) x̂` over invertible words of length
/// `1..=max_len`, by central differences on the composed action.
pub fn iterated_winding(f: &FamilySpec, t_grid: &[f64], x_grid: &[ProjPoint], max_len: usize) -> Result<IteratedWinding> {
    if t_grid.is_empty() || x_grid.is_empty() || max_len == 0 {
        return Err(CocycleError::Domain("grids and max_len must be nonempty".into()));
    }
    let inv = f.invertible();
    let mut words: Vec<Vec<usize>> = inv.iter().map(|&j| vec![j]).collect();
    let mut all = words.clone();
    for _ in 1..max_len {
        words = words
            .iter()
            .flat_map(|w| inv.iter().map(move |&j| w.iter().copied().chain([j]).collect::<Vec<_>>()))
            .collect();
        all.extend(words.iter().cloned());
    }
    let per_t: Vec<(f64, usize, f64)> = t_grid
        .par_iter()
        .map(|&t| {
            let mut best = (f64::INFINITY, 0, 0.0);
            for (wi, w) in all.iter().enumerate() {
                let (m, hi, lo) = (product(f, t, w), product(f, t + FD_STEP, w), product(f, t - FD_STEP, w));
                for &x in x_grid {
                    let v = x.unit();
                    let dw = (hi.apply(v) - lo.apply(v)).scale(0.5 / FD_STEP);
                    let s = angular_speed(m.apply(v), dw);
                    if s < best.0 {
                        best = (s, wi, x.theta());
                    }
                }
            }
            best
        })
        .collect();
    let mut best = (f64::INFINITY, 0, 0.0, 0.0);
    for (r, &t) in per_t.into_iter().zip(t_grid) {
        if r.0 < best.0 {
            best = (r.0, r.1, r.2, t);
        }
    }
    Ok(IteratedWinding {
        max_len,
        c1_hat: best.0,
        pass: best.0 > WINDING_TOL,
        word: Word::from_indices(&all[best.1]),
        t: best.3,
        theta: best.2,
    })
}
