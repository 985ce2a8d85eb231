//! `L₁ = Σ_{s,l} Σ_n Σ_{ω ∈ ℬ_n(s,l)} q_s p(ω) log ‖Aⁿ(ω) r_s‖`, summed by
//! increasing interior length over an explicit word tree.

use rayon::prelude::*;

use super::estimate::{certified_sing_floor, min_witness, L1Estimate, Method};
use crate::linalg::Vec2;
use crate::model::{is_null_block, Cocycle, GrowthConstants, Word};
use crate::stationary::MeasureOptions;
use crate::stats::{compensated_sum, Accumulator};

const SPLIT_LEVEL: usize = 3;

struct Node {
    word: Vec<usize>,
    /// Unit direction of `M r_s`.
    v: Vec2,
    /// `log ‖M r_s‖`.
    log: f64,
    weight: f64,
}

struct Partial {
    levels: Vec<Accumulator>,
    upper: Accumulator,
    /// `Σ w (a + inv_lo·e)`; the final singular step is added at the end.
    lower: Accumulator,
    frontier_mass: Accumulator,
    worst_sing_step: f64,
    null: Option<Word>,
    terms: u64,
}

impl Partial {
    fn new(depth: usize) -> Self {
        Self {
            levels: vec![Accumulator::new(); depth + 1],
            upper: Accumulator::new(),
            lower: Accumulator::new(),
            frontier_mass: Accumulator::new(),
            worst_sing_step: f64::INFINITY,
            null: None,
            terms: 0,
        }
    }
}

struct Walker<'a> {
    c: &'a Cocycle,
    g: GrowthConstants,
    depth: usize,
    tau: f64,
    log_null: f64,
}

impl Walker<'_> {
    /// Bounds for every block extending a node that is not expanded. `j` is
    /// the node's last letter and `a` its log norm.
    fn frontier(&self, out: &mut Partial, j: usize, a: f64, w: f64) {
        let e = self.c.expected_extra_inv_steps(j);
        out.upper.add(w * (a + self.g.inv_up * e + self.g.sing_up));
        out.lower.add(w * (a + self.g.inv_lo * e));
        out.frontier_mass.add(w);
    }

    fn expand(&self, node: &mut Node, split: bool, tasks: &mut Vec<Node>, out: &mut Partial) {
        let c = self.c;
        let m = node.word.len() - 1;
        let last = *node.word.last().unwrap();
        for &l in c.singular() {
            let p = c.transition(l, last);
            if p == 0.0 {
                continue;
            }
            let a = c.letter(l).mat();
            let n = a.apply(node.v).norm();
            out.terms += 1;
            if (n / a.norm()).ln() <= self.log_null {
                let mut w = Word::from_indices(&node.word);
                w.push(l);
                out.levels[m].add(f64::NEG_INFINITY);
                out.null = min_witness(out.null.take(), Some(w));
            } else {
                out.worst_sing_step = out.worst_sing_step.min(n.ln());
                out.levels[m].add(node.weight * p * (node.log + n.ln()));
            }
        }
        for &i in c.invertible() {
            let p = c.transition(i, last);
            if p == 0.0 {
                continue;
            }
            let w = node.weight * p;
            let img = c.letter(i).mat().apply(node.v);
            let n = img.norm();
            let log = node.log + n.ln();
            if m + 1 > self.depth || w < self.tau {
                self.frontier(out, i, log, w);
                continue;
            }
            let mut child = Node {
                word: node.word.clone(),
                v: img.scale(1.0 / n),
                log,
                weight: w,
            };
            child.word.push(i);
            if split && m + 1 >= SPLIT_LEVEL {
                tasks.push(child);
            } else {
                self.expand(&mut child, split, tasks, out);
            }
        }
    }
}

/// Partial sum over renewal blocks of interior length `≤ depth`. Blocks
/// whose prefix weight falls below `min_weight` are bounded, not summed.
pub fn l1_series(c: &Cocycle, opts: MeasureOptions) -> L1Estimate {
    let walker = Walker {
        c,
        g: c.growth_constants(),
        depth: opts.depth,
        tau: opts.min_weight,
        log_null: c.tolerances().null_tol.ln(),
    };
    let mut head = Partial::new(opts.depth);
    let mut tasks = Vec::new();
    for &s in c.singular() {
        let w = c.initial(s);
        if w < opts.min_weight {
            walker.frontier(&mut head, s, 0.0, w);
            continue;
        }
        let mut root = Node {
            word: vec![s],
            v: c.range(s).unit(),
            log: 0.0,
            weight: w,
        };
        walker.expand(&mut root, true, &mut tasks, &mut head);
    }
    let parts: Vec<Partial> = tasks
        .into_par_iter()
        .map(|mut t| {
            let mut out = Partial::new(opts.depth);
            walker.expand(&mut t, false, &mut Vec::new(), &mut out);
            out
        })
        .collect();

    let all = || std::iter::once(&head).chain(&parts);
    let profile: Vec<f64> = (0..=opts.depth)
        .map(|m| compensated_sum(all().map(|p| p.levels[m].value())))
        .collect();
    let upper = compensated_sum(all().map(|p| p.upper.value()));
    let worst = all().map(|p| p.worst_sing_step).fold(walker.g.sing_range_lo, f64::min);
    let certified = certified_sing_floor(c);
    let floor = certified.unwrap_or(worst);
    let mass = compensated_sum(all().map(|p| p.frontier_mass.value()));
    let lower = compensated_sum(all().map(|p| p.lower.value())) + mass * floor;
    let mut null = head.null.clone();
    let mut terms = head.terms;
    for p in &parts {
        null = min_witness(null, p.null.clone());
        terms += p.terms;
    }

    let mut est = L1Estimate::blank(Method::Series);
    est.depth = Some(opts.depth);
    est.min_weight = Some(opts.min_weight);
    est.terms = terms;
    est.lower_bound_heuristic = certified.is_none();
    if let Some(w) = null {
        est.value = f64::NEG_INFINITY;
        est.suspected_neg_inf = !is_null_block(c, &w);
        est.neg_inf_witness = Some(w);
    } else {
        est.value = compensated_sum(profile.iter().copied());
        est.upper_tail_bound = upper.max(0.0);
        est.lower_tail_bound = (-lower).max(0.0);
    }
    est.profile = profile;
    est
}
