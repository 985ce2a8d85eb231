use std::f64::consts::PI;

use cocycle_core::stationary::*;
use cocycle_core::{Cocycle, CocycleSpec, Mat2, ProjPoint, Word};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rot07() -> Cocycle {
    Cocycle::new(CocycleSpec::bernoulli(vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7)], vec![0], vec![0.3, 0.7])).unwrap()
}

fn conformal() -> Cocycle {
    Cocycle::new(CocycleSpec::bernoulli(
        vec![Mat2::diag(1.0, 0.0), Mat2::identity().scaled(2.0)],
        vec![0],
        vec![0.5, 0.5],
    ))
    .unwrap()
}

fn markov(p: [[f64; 2]; 2]) -> Cocycle {
    Cocycle::new(CocycleSpec::markov(
        vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7)],
        vec![0],
        p.iter().map(|r| r.to_vec()).collect(),
    ))
    .unwrap()
}

fn three_letter_markov() -> Cocycle {
    Cocycle::new(CocycleSpec::markov(
        vec![Mat2::from_rows([1.0, 0.5, 0.0, 0.0]), Mat2::rotation(0.7), Mat2::from_rows([1.2, 0.3, -0.2, 0.9])],
        vec![0],
        vec![vec![0.3, 0.2, 0.4], vec![0.3, 0.5, 0.1], vec![0.4, 0.3, 0.5]],
    ))
    .unwrap()
}

/// All positive-probability words `(s, inv…, last)` of exactly `n` interior
/// letters, with their probability `q_s p(ω)`.
fn brute_words(c: &Cocycle, n: usize) -> Vec<(Vec<usize>, f64)> {
    let mut out = Vec::new();
    for &s in c.singular() {
        let mut stack = vec![(vec![s], c.initial(s))];
        while let Some((w, p)) = stack.pop() {
            let inner = w.len() - 1;
            if inner == n {
                out.push((w, p));
                continue;
            }
            for i in 0..c.k() {
                let last_inner = inner + 1 == n;
                if c.is_singular(i) && !last_inner {
                    continue;
                }
                let t = c.transition(i, *w.last().unwrap());
                if t > 0.0 {
                    let mut v = w.clone();
                    v.push(i);
                    stack.push((v, p * t));
                }
            }
        }
    }
    out
}

#[test]
fn rotation_atoms_are_geometric() {
    let c = rot07();
    let m = stationary_measure(&c, MeasureOptions::depth(4));
    assert_eq!(m.kind, MeasureKind::Projective);
    assert_eq!(m.len(), 5);
    for (n, a) in m.atoms.iter().enumerate() {
        assert_eq!(a.witness.len(), n + 1);
        assert!((a.weight - 0.3 * 0.7f64.powi(n as i32)).abs() < 1e-15);
        assert!(a.point.dist(ProjPoint::new(0.7 * n as f64)) < 1e-12);
    }
    assert!((m.covered_mass - (1.0 - 0.7f64.powi(5))).abs() < 1e-14);
    assert!((m.covered_mass + m.tail_mass - 1.0).abs() < 1e-14);
}

#[test]
fn conformal_atoms_collapse() {
    let c = conformal();
    let m = stationary_measure(&c, MeasureOptions::depth(10));
    assert!(m.atoms.iter().all(|a| a.point.dist(ProjPoint::new(0.0)) < 1e-15));
    let merged = merge_atoms(&m, 1e-12);
    assert_eq!(merged.len(), 1);
    assert!((merged.atoms[0].weight - (1.0 - m.tail_mass)).abs() < 1e-14);
    assert_eq!(merged.atoms[0].witness, Word::from_indices(&[0]));
}

#[test]
fn merge_examples() {
    let c = rot07();
    let mut m = stationary_measure(&c, MeasureOptions::depth(1));
    m.atoms[0].point = ProjPoint::new(0.1);
    m.atoms[0].weight = 0.2;
    m.atoms[1].point = ProjPoint::new(0.1 + 1e-13);
    m.atoms[1].weight = 0.3;
    let merged = merge_atoms(&m, 1e-12);
    assert_eq!(merged.len(), 1);
    assert!((merged.atoms[0].weight - 0.5).abs() < 1e-15);
    let distinct = stationary_measure(&c, MeasureOptions::depth(3));
    assert_eq!(merge_atoms(&distinct, 0.0).atoms.len(), distinct.len());
    // wrap-around across θ = π
    m.atoms[0].point = ProjPoint::new(PI - 1e-14);
    m.atoms[1].point = ProjPoint::new(1e-14);
    assert_eq!(merge_atoms(&m, 1e-12).len(), 1);
}

#[test]
fn merging_preserves_mass() {
    let c = three_letter_markov();
    let m = stationary_measure(&c, MeasureOptions::depth(6));
    for tol in [0.0, 1e-3, 0.1, 1.0] {
        let merged = merge_atoms(&m, tol);
        assert!((merged.total_mass() - m.total_mass()).abs() < 1e-14);
    }
}

#[test]
fn markov_marginal_converges_to_q() {
    let c = markov([[0.5, 0.5], [0.5, 0.5]]);
    let m = stationary_measure(&c, MeasureOptions::depth(40));
    assert_eq!(m.kind, MeasureKind::Joint);
    for j in 0..2 {
        assert!((m.symbol_mass[j] - 0.5).abs() < 1e-10);
        assert!(m.symbol_mass[j] <= 0.5 + 1e-12);
    }
}

#[test]
fn markov_masses_match_enumeration() {
    let c = three_letter_markov();
    let depth = 5;
    let m = stationary_measure(&c, MeasureOptions::depth(depth));
    let mut per_symbol = [0.0; 3];
    for n in 1..=depth + 1 {
        for (w, p) in brute_words(&c, n) {
            per_symbol[*w.last().unwrap()] += p;
        }
    }
    for (j, expected) in per_symbol.iter().enumerate() {
        assert!((m.symbol_mass[j] - expected).abs() < 1e-14, "{j}");
        assert!((m.symbol_mass[j] + m.symbol_tail[j] - c.initial(j)).abs() < 1e-12);
    }
    assert!((m.covered_mass + m.tail_mass - 1.0).abs() < 1e-12);
    assert!((frontier_tail_mass(&c, MeasureOptions::depth(depth)) - m.tail_mass).abs() < 1e-13);
}

#[test]
fn pruning_accounts_for_all_mass() {
    for c in [rot07(), three_letter_markov(), markov([[0.9, 0.2], [0.1, 0.8]])] {
        let full = stationary_measure(&c, MeasureOptions::depth(12));
        let pruned = stationary_measure(&c, MeasureOptions::pruned(12, 1e-2));
        assert!(pruned.len() < full.len());
        assert!(pruned.pruned_mass > 0.0);
        assert!((pruned.covered_mass + pruned.tail_mass - 1.0).abs() < 1e-12);
        if !c.is_bernoulli() {
            for j in 0..c.k() {
                assert!((pruned.symbol_mass[j] + pruned.symbol_tail[j] - c.initial(j)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn witnesses_regenerate_points() {
    for c in [rot07(), three_letter_markov()] {
        let m = stationary_measure(&c, MeasureOptions::depth(8));
        assert!(m.witness_error(&c) <= 1e-10);
        for a in &m.atoms {
            let prod = cocycle_core::model::fiber_product(
                &c.letters().iter().map(|l| l.mat()).collect::<Vec<_>>(),
                &a.witness,
            );
            let r = c.range(a.witness.first().unwrap());
            let v = prod.apply(r.unit());
            assert!(ProjPoint::from_vector(v).unwrap().dist(a.point) <= 1e-10);
        }
    }
}

#[test]
fn measure_is_deterministic_under_parallelism() {
    let c = three_letter_markov();
    let a = stationary_measure(&c, MeasureOptions::depth(10));
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| stationary_measure(&c, MeasureOptions::depth(10)));
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn serialization_round_trip() {
    let c = three_letter_markov();
    let m = stationary_measure(&c, MeasureOptions::depth(3));
    let json = serde_json::to_string(&m).unwrap();
    let back: AtomicMeasure = serde_json::from_str(&json).unwrap();
    assert_eq!(back, m);
    let csv = m.to_csv();
    assert!(csv.starts_with("symbol,theta,weight,witness\n"));
    assert_eq!(csv.lines().count(), m.len() + 1);
    let first = csv.lines().nth(1).unwrap();
    assert!(first.starts_with("1,") || first.starts_with("2,") || first.starts_with("3,"));
}

#[test]
fn stationarity_within_tail_slack() {
    let c = rot07();
    let m = stationary_measure(&c, MeasureOptions::depth(20));
    let cos2 = Observable::projective("cos2", |x| (2.0 * x.theta()).cos()).with_sup_bound(1.0);
    let rep = check_stationarity(&c, &m, &[Observable::constant(1.0), cos2.clone()]).unwrap();
    assert!(rep.pass());
    assert_eq!(rep.rows[0].discrepancy, 0.0);
    assert!(rep.rows[1].discrepancy <= 2.0 * 0.7f64.powi(21) + 1e-10);

    let mut bad = m.clone();
    bad.atoms[0].weight *= 1.1;
    assert!(!check_stationarity(&c, &bad, &[cos2]).unwrap().pass());
}

#[test]
fn joint_and_product_stationarity() {
    let c = three_letter_markov();
    let m = stationary_measure(&c, MeasureOptions::pruned(60, 1e-8));
    assert!(m.tail_mass < 1e-2);
    let phi = Observable::new("mixed", |s, x| (s.unwrap() as f64 - 1.0) * (3.0 * x.theta()).sin() + x.theta().cos())
        .with_sup_bound(2.0);
    let rep = check_stationarity(&c, &m, std::slice::from_ref(&phi)).unwrap();
    assert!(rep.pass(), "{rep:?}");

    let b = rot07();
    let eta = stationary_measure(&b, MeasureOptions::depth(30));
    let prod = eta.product(&b).unwrap();
    assert_eq!(prod.kind, MeasureKind::Product);
    for j in 0..2 {
        let mass: f64 = prod.atoms.iter().filter(|a| a.symbol == Some(j)).map(|a| a.weight).sum();
        assert!(mass <= b.initial(j) + 1e-12);
    }
    let rep = check_stationarity(&b, &prod, &[phi]).unwrap();
    assert!(rep.pass(), "{rep:?}");
}

#[test]
fn mismatched_measure_is_rejected() {
    let m = stationary_measure(&rot07(), MeasureOptions::depth(3));
    assert!(check_stationarity(&conformal(), &m, &[Observable::constant(1.0)]).is_err());
}

fn random_observable(rng: &mut ChaCha8Rng) -> Observable {
    let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let bound = a.iter().chain(&b).map(|v| v.abs()).sum::<f64>();
    Observable::projective("trig", move |x| {
        let t = x.theta();
        (0..4).map(|m| a[m] * (2.0 * (m + 1) as f64 * t).cos() + b[m] * (2.0 * (m + 1) as f64 * t).sin()).sum()
    })
    .with_sup_bound(bound)
}

#[test]
fn inv_part_contracts_uniformly() {
    let c = rot07();
    let one = Observable::constant(1.0);
    let pts = grid(128);
    for n in 0..12 {
        let sup = pts.iter().map(|&x| inv_power(&c, &one, n, None, x).unwrap().abs()).fold(0.0, f64::max);
        assert!((sup - 0.7f64.powi(n as i32)).abs() < 1e-12);
    }
    let c = Cocycle::new(CocycleSpec::bernoulli(
        vec![Mat2::from_rows([1.0, 0.4, 0.0, 0.0]), Mat2::rotation(0.7), Mat2::from_rows([1.1, 0.2, 0.3, 0.8])],
        vec![0],
        vec![0.3, 0.4, 0.3],
    ))
    .unwrap();
    let pts = grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..50 {
        let phi = random_observable(&mut rng);
        for n in [1, 3, 6] {
            // sup of |φ| over every point the invertible words reach
            let mut reach = pts.clone();
            for _ in 0..n {
                reach = reach.iter().flat_map(|&x| [1, 2].map(|i| c.letter(i).act(x))).collect();
            }
            let sup_phi = reach.iter().map(|&x| phi.eval(None, x).abs()).fold(0.0, f64::max);
            let sup = pts.iter().map(|&x| inv_power(&c, &phi, n, None, x).unwrap().abs()).fold(0.0, f64::max);
            assert!(sup <= 0.7f64.powi(n as i32) * sup_phi + 1e-12);
        }
    }
}

#[test]
fn singular_part_is_constant() {
    let c = Cocycle::new(CocycleSpec::bernoulli(
        vec![Mat2::from_rows([1.0, 0.4, 0.0, 0.0]), Mat2::rotation(0.7), Mat2::from_rows([1.1, 0.2, 0.3, 0.8])],
        vec![0],
        vec![0.3, 0.4, 0.3],
    ))
    .unwrap();
    let pts = grid(128);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let phi = random_observable(&mut rng);
        let norm = phi.sup_bound().unwrap();
        let n = 6;
        let diffs: Vec<f64> = pts
            .iter()
            .map(|&x| apply_qn_direct(&c, &phi, n, None, x).unwrap() - inv_power(&c, &phi, n, None, x).unwrap())
            .collect();
        let spread = diffs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - diffs.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread <= 1e-10 * norm);
    }
}

#[test]
fn diagram_commutes() {
    let c = rot07();
    let phi = Observable::new("mixed", |s, x| (s.unwrap() as f64 + 1.0) * (2.0 * x.theta()).sin());
    assert!(check_diagram(&c, &phi, &grid(64)).unwrap() <= 1e-12);
    let sym = Observable::projective("cos", |x| x.theta().cos());
    for &x in &grid(16) {
        let q = apply_q(&c, &sym, Part::Full, None, x).unwrap();
        let pqb = pi(&c, &q_bar(&c, &sym).unwrap()).unwrap().eval(None, x);
        assert!((q - pqb).abs() < 1e-14);
    }
}

#[test]
fn oscillation_decays_geometrically() {
    let c = rot07();
    let phi = Observable::projective("lip", |x| (x.theta() - 1.0).abs().min(1.0));
    let ns: Vec<usize> = (1..=10).collect();
    let curve = ergodicity_decay(&c, &phi, &ns, 64, &QnOptions::default()).unwrap();
    for (i, &n) in ns.iter().enumerate() {
        assert!(curve.oscillation[i] <= 0.7f64.powi(n as i32) * 1.0 + 1e-12);
    }
    let (_, a) = curve.fit.unwrap();
    assert!(a >= -0.7f64.ln() - 0.05, "rate {a}");
}
