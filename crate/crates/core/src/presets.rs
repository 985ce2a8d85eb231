//! Named example cocycles and the seeded random corpus.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;

use crate::linalg::{Mat2, Vec2};
use crate::model::{invariant_arc, Cocycle, CocycleSpec};
use crate::rng::{stream_rng, Domain};

/// `A₁ = diag(1,0)`, `A₂ = 2·Id`, `p = (½, ½)`; `L₁ = ½ log 2`.
pub fn conformal() -> CocycleSpec {
    CocycleSpec::bernoulli(vec![Mat2::diag(1.0, 0.0), Mat2::identity().scaled(2.0)], vec![0], vec![0.5, 0.5])
}

/// `A₁ = diag(1,0)`, `A₂ = rot(0.7)`, `p = (0.3, 0.7)`.
pub fn rot07() -> CocycleSpec {
    CocycleSpec::bernoulli(vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7)], vec![0], vec![0.3, 0.7])
}

/// `A₂ = rot(π/2)` sends `e₁` to the kernel of `A₁`: the word `(1,2,1)` is null.
pub fn null_example() -> CocycleSpec {
    CocycleSpec::bernoulli(vec![Mat2::diag(1.0, 0.0), Mat2::rotation(FRAC_PI_2)], vec![0], vec![0.5, 0.5])
}

/// Markov base with `P = [[0.9, 0.2], [0.1, 0.8]]` over the rot(0.7) letters.
pub fn markov_example() -> CocycleSpec {
    CocycleSpec::markov(
        vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7)],
        vec![0],
        vec![vec![0.9, 0.2], vec![0.1, 0.8]],
    )
}

pub fn by_name(name: &str) -> Option<CocycleSpec> {
    match name {
        "conformal" => Some(conformal()),
        "rot07" => Some(rot07()),
        "null" => Some(null_example()),
        "markov" => Some(markov_example()),
        _ => None,
    }
}

pub const NAMES: [&str; 4] = ["conformal", "rot07", "null", "markov"];

fn positive_matrix<R: Rng>(rng: &mut R) -> Mat2 {
    loop {
        let m = Mat2::from_rows([
            rng.gen_range(0.2..1.5),
            rng.gen_range(0.2..1.5),
            rng.gen_range(0.2..1.5),
            rng.gen_range(0.2..1.5),
        ]);
        if m.det() > 0.1 * m.norm() * m.norm() {
            return m;
        }
    }
}

fn positive_rank_one<R: Rng>(rng: &mut R) -> Mat2 {
    let a: f64 = rng.gen_range(0.2..1.3);
    let b: f64 = rng.gen_range(0.2..1.3);
    let scale: f64 = rng.gen_range(0.5..1.5);
    Mat2::outer(Vec2::new(a.cos(), a.sin()), Vec2::new(b.cos(), b.sin()).scale(scale))
}

fn candidate<R: Rng>(rng: &mut R, two_singular: bool) -> CocycleSpec {
    if two_singular {
        let p1 = rng.gen_range(0.2..0.35);
        let p2 = rng.gen_range(0.2..0.35);
        CocycleSpec::bernoulli(
            vec![positive_rank_one(rng), positive_rank_one(rng), positive_matrix(rng)],
            vec![0, 1],
            vec![p1, p2, 1.0 - p1 - p2],
        )
    } else {
        let ps = rng.gen_range(0.45..0.6);
        let f = rng.gen_range(0.3..0.7);
        CocycleSpec::bernoulli(
            vec![positive_rank_one(rng), positive_matrix(rng), positive_matrix(rng)],
            vec![0],
            vec![ps, (1.0 - ps) * f, (1.0 - ps) * (1.0 - f)],
        )
    }
}

/// `count` three-letter Bernoulli specs in `ℳ*` with positive invertible
/// letters and one or two positive rank-one letters (alternating). Each
/// carries a forward-invariant arc, so none has a null word.
pub fn random_star_corpus(count: usize, seed: u64) -> Vec<CocycleSpec> {
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, Domain::Corpus, i as u64);
            loop {
                let spec = candidate(&mut rng, i % 2 == 1);
                if !spec.validate().in_m_star() {
                    continue;
                }
                if let Ok(c) = Cocycle::new(spec.clone()) {
                    if invariant_arc(&c).is_some() {
                        return spec;
                    }
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for name in NAMES {
            let spec = by_name(name).unwrap();
            assert!(spec.validate().is_usable(), "{name}");
        }
    }

    #[test]
    fn corpus_is_reproducible() {
        let a = random_star_corpus(4, 1);
        assert_eq!(a, random_star_corpus(4, 1));
        assert_ne!(a, random_star_corpus(4, 2));
        assert_eq!(a[0].singular.len(), 1);
        assert_eq!(a[1].singular.len(), 2);
    }
}
