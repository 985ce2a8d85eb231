//! Fixtures shared by the benchmarks.

use cocycle_core::{presets, Cocycle, Mat2, Vec2};

/// The rotation preset and one three-letter corpus spec.
pub fn fixtures() -> Vec<(&'static str, Cocycle)> {
    vec![
        ("rot07", Cocycle::new(presets::rot07()).unwrap()),
        ("star3", Cocycle::new(presets::random_star_corpus(1, 2024).remove(0)).unwrap()),
    ]
}

/// `len` rank-one matrices `u_i v_iᵀ` on a fixed angle pattern.
pub fn rank_one_chain(len: usize) -> (Vec<Mat2>, Vec2) {
    let mats = (0..len)
        .map(|i| {
            let a = 0.37 * i as f64 + 0.1;
            let b = 1.3 * i as f64 + 0.4;
            Mat2::outer(Vec2::new(a.cos(), a.sin()).scale(1.0 + 0.1 * i as f64), Vec2::new(b.cos(), b.sin()))
        })
        .collect();
    (mats, Vec2::new(0.6, 0.8))
}
