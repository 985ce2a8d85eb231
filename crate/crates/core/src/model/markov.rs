//! Primitivity and stationary vectors of left-stochastic matrices.
//!
//! `p[i][j]` is the probability of moving from state `j` to state `i`, so
//! columns sum to one and the stationary vector solves `P q = q`.

use nalgebra::{DMatrix, DVector};

use crate::error::{CocycleError, Result};

/// Wielandt's bound: a primitive `k×k` matrix has a strictly positive power
/// of exponent at most `(k−1)² + 1`.
pub fn wielandt_exponent(k: usize) -> usize {
    (k.saturating_sub(1)).pow(2) + 1
}

pub fn is_primitive(p: &[Vec<f64>]) -> bool {
    let k = p.len();
    if k == 0 {
        return false;
    }
    let support: Vec<Vec<bool>> = p.iter().map(|row| row.iter().map(|&v| v > 0.0).collect()).collect();
    let mut power = support.clone();
    for _ in 1..wielandt_exponent(k) {
        if power.iter().all(|row| row.iter().all(|&b| b)) {
            return true;
        }
        power = bool_mul(&power, &support);
    }
    power.iter().all(|row| row.iter().all(|&b| b))
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let k = a.len();
    (0..k)
        .map(|i| (0..k).map(|j| (0..k).any(|l| a[i][l] && b[l][j])).collect())
        .collect()
}

pub fn apply(p: &[Vec<f64>], q: &[f64]) -> Vec<f64> {
    p.iter().map(|row| row.iter().zip(q).map(|(a, b)| a * b).sum()).collect()
}

pub fn residual(p: &[Vec<f64>], q: &[f64]) -> f64 {
    apply(p, q)
        .iter()
        .zip(q)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Stationary probability vector of a primitive left-stochastic matrix.
pub fn stationary_vector(p: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = p.len();
    if k == 0 || p.iter().any(|row| row.len() != k) {
        return Err(CocycleError::InvalidSpec("transition matrix must be square".into()));
    }
    if !is_primitive(p) {
        return Err(CocycleError::Primitivity);
    }
    let mut q = vec![1.0 / k as f64; k];
    let warmup = wielandt_exponent(k);
    for it in 0..100_000 {
        let next = apply(p, &q);
        let total: f64 = next.iter().sum();
        let next: Vec<f64> = next.iter().map(|v| v / total).collect();
        let delta = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        q = next;
        if it >= warmup && delta <= 1e-15 {
            break;
        }
    }
    if residual(p, &q) > 1e-13 {
        q = solve_stationary(p).unwrap_or(q);
    }
    if residual(p, &q) > 1e-12 || q.iter().any(|&v| v <= 0.0) {
        return Err(CocycleError::Primitivity);
    }
    Ok(q)
}

/// Direct solve of `(P − I) q = 0`, `Σ q = 1`.
fn solve_stationary(p: &[Vec<f64>]) -> Option<Vec<f64>> {
    let k = p.len();
    let mut m = DMatrix::from_fn(k, k, |i, j| p[i][j] - if i == j { 1.0 } else { 0.0 });
    let mut rhs = DVector::zeros(k);
    for j in 0..k {
        m[(k - 1, j)] = 1.0;
    }
    rhs[k - 1] = 1.0;
    let sol = m.lu().solve(&rhs)?;
    Some(sol.iter().copied().collect())
}

/// `(I − B)^{-1}` for a substochastic block `B`, row-major.
pub fn fundamental_matrix(block: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = block.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - block[i][j]);
    let inv = m.try_inverse()?;
    Some((0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_chain() {
        let q = stationary_vector(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert!((q[0] - 0.5).abs() < 1e-15 && (q[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_chain() {
        let p = vec![vec![0.9, 0.2], vec![0.1, 0.8]];
        let q = stationary_vector(&p).unwrap();
        assert!((q[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((q[1] - 1.0 / 3.0).abs() < 1e-12);
        assert!(residual(&p, &q) <= 1e-12);
    }

    #[test]
    fn identity_is_not_primitive() {
        let p = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(stationary_vector(&p), Err(CocycleError::Primitivity));
        assert!(!is_primitive(&p));
    }

    #[test]
    fn periodic_chain_is_not_primitive() {
        let p = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(!is_primitive(&p));
    }

    #[test]
    fn wielandt_extremal_matrix_is_primitive() {
        // cycle 0→1→2→0 plus the chord 2→1; needs the full (k−1)²+1 = 5 power
        let p = vec![
            vec![0.0, 0.0, 0.5],
            vec![1.0, 0.0, 0.5],
            vec![0.0, 1.0, 0.0],
        ];
        assert!(is_primitive(&p));
        let q = stationary_vector(&p).unwrap();
        assert!(residual(&p, &q) <= 1e-12);
    }

    #[test]
    fn fundamental_matrix_of_geometric_block() {
        let n = fundamental_matrix(&[vec![0.7]]).unwrap();
        assert!((n[0][0] - 1.0 / 0.3).abs() < 1e-12);
    }
}
