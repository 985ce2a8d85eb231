use std::f64::consts::LN_2;

use cocycle_core::lyapunov::*;
use cocycle_core::model::{fiber_product, is_null_block};
use cocycle_core::presets;
use cocycle_core::stationary::{stationary_measure, MeasureOptions};
use cocycle_core::{Cocycle, CocycleSpec, Mat2, Vec2, Word};
use num::{BigRational, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cocycle(spec: CocycleSpec) -> Cocycle {
    Cocycle::new(spec).unwrap()
}

fn three_letter_markov() -> Cocycle {
    cocycle(CocycleSpec::markov(
        vec![Mat2::from_rows([1.0, 0.5, 0.0, 0.0]), Mat2::rotation(0.7), Mat2::from_rows([1.2, 0.3, -0.2, 0.9])],
        vec![0],
        vec![vec![0.3, 0.2, 0.4], vec![0.3, 0.5, 0.1], vec![0.4, 0.3, 0.5]],
    ))
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap()
}

/// `log ‖B_n ⋯ B_1 v‖` in exact rational arithmetic.
fn exact_log_norm(mats: &[Mat2], v: Vec2) -> f64 {
    let mut x = [exact(v.x), exact(v.y)];
    for m in mats {
        let [a, b, c, d] = m.to_rows().map(exact);
        x = [&a * &x[0] + &b * &x[1], &c * &x[0] + &d * &x[1]];
    }
    let n2 = &x[0] * &x[0] + &x[1] * &x[1];
    if n2.is_zero() {
        return f64::NEG_INFINITY;
    }
    // split off a power of two so the ratio converts without overflow
    let bits = n2.numer().bits() as i64 - n2.denom().bits() as i64;
    let scaled = if bits >= 0 {
        n2 / BigRational::from_integer(num::BigInt::from(1) << bits as usize)
    } else {
        n2 * BigRational::from_integer(num::BigInt::from(1) << (-bits) as usize)
    };
    0.5 * (scaled.to_f64().unwrap().ln() + bits as f64 * LN_2)
}

/// Blocks `(s, inv…, l)` with exactly `n` interior letters and their
/// probability `q_s p(ω)`.
fn blocks(c: &Cocycle, n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<usize>, f64)> = c.singular().iter().map(|&s| (vec![s], c.initial(s))).collect();
    while let Some((w, p)) = stack.pop() {
        let last = *w.last().unwrap();
        let interior = w.len() - 1;
        for i in 0..c.k() {
            let t = c.transition(i, last);
            if t == 0.0 {
                continue;
            }
            let mut v = w.clone();
            v.push(i);
            if c.is_singular(i) {
                if interior == n {
                    out.push((v, p * t));
                }
            } else if interior < n {
                stack.push((v, p * t));
            }
        }
    }
    out
}

#[test]
fn conformal_closed_form() {
    let c = cocycle(presets::conformal());
    let s = l1_series(&c, MeasureOptions::depth(40));
    assert!((s.value - 0.5 * LN_2).abs() < 1e-9, "{}", s.value);
    assert!(s.slack() < 1e-9);
    let m = stationary_measure(&c, MeasureOptions::depth(40));
    let f = l1_furstenberg(&c, &m).unwrap();
    assert!((f.value - 0.5 * LN_2).abs() < 1e-9);
}

#[test]
fn series_levels_match_enumeration() {
    for c in [three_letter_markov(), cocycle(presets::rot07()), cocycle(presets::random_star_corpus(2, 3)[1].clone())] {
        let depth = 6;
        let s = l1_series(&c, MeasureOptions::depth(depth));
        let mats: Vec<Mat2> = c.letters().iter().map(|l| l.mat()).collect();
        for n in 0..=depth {
            let oracle: f64 = blocks(&c, n)
                .iter()
                .map(|(w, p)| {
                    let prod = fiber_product(&mats, &Word::from_indices(w));
                    p * prod.apply(c.range(w[0]).unit()).norm().ln()
                })
                .sum();
            assert!((s.profile[n] - oracle).abs() < 1e-12, "level {n}: {} vs {oracle}", s.profile[n]);
        }
    }
}

#[test]
fn null_word_gives_minus_infinity() {
    let c = cocycle(presets::null_example());
    let witness = Word::from_indices(&[0, 1, 0]);
    let s = l1_series(&c, MeasureOptions::depth(10));
    assert!(s.is_neg_inf() && !s.suspected_neg_inf);
    assert_eq!(s.neg_inf_witness.as_ref(), Some(&witness));
    assert!(is_null_block(&c, &witness));
    let m = stationary_measure(&c, MeasureOptions::depth(10));
    let f = l1_furstenberg(&c, &m).unwrap();
    assert!(f.is_neg_inf());
    assert_eq!(f.neg_inf_witness.as_ref(), Some(&witness));
    let mc = l1_monte_carlo(&c, 50, 20, 1).unwrap();
    assert!(mc.is_neg_inf() && mc.neg_inf_witness.is_some() && !mc.suspected_neg_inf);
    let ind = l1_induced(&c, 200, 1).unwrap();
    assert!(ind.is_neg_inf());
}

#[test]
fn partial_sums_stay_within_bounds() {
    let c = cocycle(presets::rot07());
    let ests: Vec<L1Estimate> = [10, 20, 30].iter().map(|&d| l1_series(&c, MeasureOptions::depth(d))).collect();
    for a in &ests {
        for b in &ests {
            // both enclose the true value, so their intervals meet
            assert!(a.value - a.lower_tail_bound <= b.value + b.upper_tail_bound + 1e-15);
        }
    }
}

#[test]
fn rearrangement_identity() {
    let mut specs = vec![presets::rot07(), presets::markov_example()];
    specs.extend(presets::random_star_corpus(4, 17));
    for spec in specs {
        let c = cocycle(spec);
        let opts = MeasureOptions::pruned(25, 1e-12);
        let s = l1_series(&c, opts);
        let f = l1_furstenberg(&c, &stationary_measure(&c, opts)).unwrap();
        let (diff, _) = concordance(&s, &f);
        assert!(diff <= 1e-8 + s.slack() + f.slack(), "{diff} {} {}", s.slack(), f.slack());
    }
    let c = three_letter_markov();
    let opts = MeasureOptions::pruned(25, 1e-10);
    let s = l1_series(&c, opts);
    let f = l1_furstenberg(&c, &stationary_measure(&c, opts)).unwrap();
    assert!(concordance(&s, &f).0 <= 1e-8 + s.slack() + f.slack());
}

#[test]
fn monte_carlo_conformal() {
    let c = cocycle(presets::conformal());
    let mc = l1_monte_carlo(&c, 2000, 2000, 7).unwrap();
    assert!((mc.value - 0.5 * LN_2).abs() <= 3.0 * mc.std_error.unwrap());
    let ind = l1_induced(&c, 5000, 7).unwrap();
    assert!((ind.value - 0.5 * LN_2).abs() <= 3.0 * ind.std_error.unwrap());
    let one = l1_monte_carlo(&c, 1, 3, 7).unwrap();
    assert!(one.value.is_finite() && one.std_error.unwrap() > 0.1);
}

#[test]
fn estimators_agree_on_rotation_spec() {
    let c = cocycle(presets::rot07());
    let s = l1_series(&c, MeasureOptions::depth(30));
    for e in [l1_monte_carlo(&c, 2000, 2000, 3).unwrap(), l1_induced(&c, 5000, 3).unwrap()] {
        let (diff, err) = concordance(&s, &e);
        assert!(diff <= 3.0 * err, "{:?}: {diff} > 3·{err}", e.method);
    }
}

#[test]
fn monte_carlo_is_thread_independent() {
    let c = cocycle(presets::rot07());
    let a = l1_monte_carlo(&c, 300, 64, 9).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| l1_monte_carlo(&c, 300, 64, 9).unwrap());
    assert_eq!(a, b);
}

#[test]
fn prodnorm_telescoping_matches_exact_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let len = rng.gen_range(1..=15);
        let mats: Vec<Mat2> = (0..len)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.gen_range(0.0..std::f64::consts::PI), rng.gen_range(0.0..std::f64::consts::PI));
                let s: f64 = rng.gen_range(0.2..3.0);
                Mat2::outer(Vec2::new(a.cos(), a.sin()).scale(s), Vec2::new(b.cos(), b.sin()))
            })
            .collect();
        let v = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let t = telescoped_log_norm(&mats, v);
        let d = exact_log_norm(&mats, v);
        worst = worst.max((t - d).exp_m1().abs());
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn renormalized_steps_match_exact_product() {
    let c = cocycle(presets::random_star_corpus(1, 5)[0].clone());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let n = rng.gen_range(1..=30);
        let word: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c.k())).collect();
        let start = c.range(0);
        let mut x = start;
        let mut sum = 0.0;
        for &l in &word {
            let (y, s) = c.letter(l).act_normalized(x);
            sum += s;
            x = y;
        }
        let mats: Vec<Mat2> = word.iter().map(|&l| c.letter(l).mat()).collect();
        assert!((sum - exact_log_norm(&mats, start.unit())).abs() <= 1e-9);
    }
}

#[test]
fn estimate_serializes_sentinels() {
    let c = cocycle(presets::null_example());
    let s = l1_series(&c, MeasureOptions::depth(3));
    let json = serde_json::to_string(&s).unwrap();
    assert!(json.contains("\"value\":\"neg_inf\""));
    assert!(json.contains("\"neg_inf_witness\":[1,2,1]"));
    let back: L1Estimate = serde_json::from_str(&json).unwrap();
    assert_eq!(back, s);
    assert!(s.csv_record().starts_with("series,neg_inf,3,"));
}

#[test]
#[ignore]
fn corpus_report() {
    for (i, spec) in presets::random_star_corpus(10, 2024).into_iter().enumerate() {
        let c = cocycle(spec);
        let t = std::time::Instant::now();
        let s = l1_series(&c, MeasureOptions::pruned(30, 1e-12));
        let ts = t.elapsed();
        let mc = l1_monte_carlo(&c, 2000, 2000, 1).unwrap();
        let ind = l1_induced(&c, 5000, 1).unwrap();
        println!(
            "{i}: series {:.6} (+{:.1e}/-{:.1e}, {} terms, {:?}) mc {:.6}±{:.1e} ({:.2}σ) ind {:.6}±{:.1e} ({:.2}σ) {:?}",
            s.value,
            s.upper_tail_bound,
            s.lower_tail_bound,
            s.terms,
            ts,
            mc.value,
            mc.std_error.unwrap(),
            concordance(&s, &mc).0 / concordance(&s, &mc).1,
            ind.value,
            ind.std_error.unwrap(),
            concordance(&s, &ind).0 / concordance(&s, &ind).1,
            t.elapsed()
        );
    }
}
