//! Norms of products of rank-one matrices by telescoping:
//! `‖B_n ⋯ B_1 v‖ = ‖B_1 v‖ · Π_{l ≥ 2} ‖B_l r_{l−1}‖` with `r_l` the unit
//! range of `B_l`.

use crate::linalg::{Mat2, Vec2};

/// `a·b + c·d` with one rounding error on each product recovered by FMA.
fn dot2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let p = c * d;
    let e = c.mul_add(d, -p);
    a.mul_add(b, p) + e
}

fn apply(m: Mat2, v: Vec2) -> Vec2 {
    let [a, b, c, d] = m.to_rows();
    Vec2::new(dot2(a, v.x, b, v.y), dot2(c, v.x, d, v.y))
}

/// The column of larger norm, which spans the range of a rank-one matrix.
fn range_column(m: Mat2) -> Vec2 {
    let [a, b, c, d] = m.to_rows();
    let (c1, c2) = (Vec2::new(a, c), Vec2::new(b, d));
    if c1.norm() >= c2.norm() {
        c1
    } else {
        c2
    }
}

/// `log ‖B_n ⋯ B_1 v‖` from the step norms. Every `B_l` past the first
/// must have rank one; `-∞` when a step vanishes.
pub fn telescoped_log_norm(mats: &[Mat2], v: Vec2) -> f64 {
    let Some((first, rest)) = mats.split_first() else {
        return v.norm().ln();
    };
    let mut acc = apply(*first, v).norm().ln();
    let mut prev = *first;
    for &m in rest {
        let r = range_column(prev);
        acc += (apply(m, r).norm() / r.norm()).ln();
        prev = m;
    }
    acc
}

/// Step log-norms `log ‖B_l r_{l−1}‖` (with `r_0 = v/‖v‖`).
pub fn step_log_norms(mats: &[Mat2], v: Vec2) -> Vec<f64> {
    let mut out = Vec::with_capacity(mats.len());
    let mut r = v;
    for &m in mats {
        out.push((apply(m, r).norm() / r.norm()).ln());
        r = range_column(m);
    }
    out
}

fn mul(m: Mat2, n: Mat2) -> Mat2 {
    let [a, b, c, d] = m.to_rows();
    let [e, f, g, h] = n.to_rows();
    Mat2::new(dot2(a, e, b, g), dot2(a, f, b, h), dot2(c, e, d, g), dot2(c, f, d, h))
}

/// `log ‖B_n ⋯ B_1 v‖` from the explicit product.
pub fn direct_log_norm(mats: &[Mat2], v: Vec2) -> f64 {
    let prod = mats.iter().fold(Mat2::identity(), |acc, &m| mul(m, acc));
    apply(prod, v).norm().ln()
}
