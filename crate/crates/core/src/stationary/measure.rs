//! The explicit atomic stationary measure.
//!
//! Bernoulli: `η = Σ_s Σ_m Σ_{ω ∈ ℬ_m(s)} p_s p(ω) δ_{Â^m(sω) r̂_s}` on `P¹`.
//! Markov: atoms `(l, Â^n(ω) r̂_s)` of weight `q_s p(ω)` for `ω ∈ ℬ_n(s, l)`
//! on `𝒜 × P¹`, so that the `l`-marginal is `q_l`.
//!
//! Subtrees whose node weight falls below `min_weight`, and everything past
//! `depth`, are left out; their mass is accounted exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::observable::Observable;
use crate::error::{CocycleError, Result};
use crate::io::{csv_line, one_based_opt};
use crate::linalg::ProjPoint;
use crate::model::{Cocycle, Word};
use crate::stats::compensated_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    /// `η` on `P¹` (Bernoulli).
    Projective,
    /// `Σ_j q_j δ_j × η_j` on `𝒜 × P¹` (Markov).
    Joint,
    /// `p × η` on `𝒜 × P¹` (Bernoulli).
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    #[serde(with = "one_based_opt")]
    pub symbol: Option<usize>,
    pub point: ProjPoint,
    pub weight: f64,
    pub witness: Word,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureOptions {
    /// Largest interior length of a renewal word.
    pub depth: usize,
    /// Prune subtrees whose node weight is below this.
    pub min_weight: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            depth: 20,
            min_weight: 0.0,
        }
    }
}

impl MeasureOptions {
    pub fn depth(depth: usize) -> Self {
        Self {
            depth,
            min_weight: 0.0,
        }
    }

    pub fn pruned(depth: usize, min_weight: f64) -> Self {
        Self { depth, min_weight }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub kind: MeasureKind,
    pub depth: usize,
    pub min_weight: f64,
    pub covered_mass: f64,
    pub tail_mass: f64,
    /// Part of `tail_mass` removed by `min_weight`.
    pub pruned_mass: f64,
    /// Per-symbol covered and missing mass (empty for `Projective`).
    pub symbol_mass: Vec<f64>,
    pub symbol_tail: Vec<f64>,
    pub fingerprint: u64,
    pub atoms: Vec<Atom>,
}

#[derive(Default)]
struct Partial {
    atoms: Vec<Atom>,
    pruned: Vec<f64>,
    depth_tail: Vec<f64>,
    sym_tail: Vec<f64>,
}

struct Task {
    word: Vec<usize>,
    point: ProjPoint,
    weight: f64,
    m: usize,
}

struct Builder<'a> {
    c: &'a Cocycle,
    depth: usize,
    tau: f64,
    markov: bool,
}

const SPLIT_LEVEL: usize = 3;

impl Builder<'_> {
    fn frontier(&self, out: &mut Partial, j: usize, w: f64, pruned: bool) {
        let c = self.c;
        let (mass, per_symbol) = if !self.markov {
            (w * c.continuation_mass(j), None)
        } else if c.is_singular(j) {
            let mut v = vec![0.0; c.k()];
            v[j] = 1.0;
            (w, Some(v))
        } else {
            let mut v = c.block_symbol_masses(j);
            v[j] += 1.0;
            (w * (c.continuation_mass(j) + 1.0), Some(v))
        };
        if pruned {
            out.pruned.push(mass);
        } else {
            out.depth_tail.push(mass);
        }
        if let Some(v) = per_symbol {
            for (t, x) in out.sym_tail.iter_mut().zip(v) {
                *t += w * x;
            }
        }
    }

    fn atom(&self, out: &mut Partial, word: &[usize], point: ProjPoint, weight: f64) {
        out.atoms.push(Atom {
            symbol: if self.markov { word.last().copied() } else { None },
            point,
            weight,
            witness: Word::from_indices(word),
        });
    }

    /// Children of the prefix `word` (anchor plus `m` invertible letters).
    fn expand(&self, word: &mut Vec<usize>, point: ProjPoint, weight: f64, m: usize, split: bool, tasks: &mut Vec<Task>, out: &mut Partial) {
        let c = self.c;
        let last = *word.last().unwrap();
        for i in 0..c.k() {
            let p = c.transition(i, last);
            if p == 0.0 {
                continue;
            }
            let w = weight * p;
            if c.is_singular(i) {
                if !self.markov {
                    continue;
                }
                word.push(i);
                if m <= self.depth {
                    self.atom(out, word, c.range(i), w);
                } else {
                    self.frontier(out, i, w, false);
                }
                word.pop();
                continue;
            }
            let beyond = if self.markov { m > self.depth } else { m + 1 > self.depth };
            if beyond {
                self.frontier(out, i, w, false);
            } else if w < self.tau {
                self.frontier(out, i, w, true);
            } else {
                let next = c.letter(i).act(point);
                word.push(i);
                self.atom(out, word, next, w);
                if split && m + 1 >= SPLIT_LEVEL {
                    tasks.push(Task {
                        word: word.clone(),
                        point: next,
                        weight: w,
                        m: m + 1,
                    });
                } else {
                    self.expand(word, next, w, m + 1, split, tasks, out);
                }
                word.pop();
            }
        }
    }

    fn empty(&self) -> Partial {
        Partial {
            sym_tail: vec![0.0; self.c.k()],
            ..Partial::default()
        }
    }

    fn build(&self) -> Partial {
        let c = self.c;
        let mut head = self.empty();
        let mut tasks = Vec::new();
        for &s in c.singular() {
            let w = c.initial(s);
            if w < self.tau {
                if self.markov {
                    head.pruned.push(w * c.continuation_mass(s));
                    for (t, x) in head.sym_tail.iter_mut().zip(c.block_symbol_masses(s)) {
                        *t += w * x;
                    }
                } else {
                    head.pruned.push(w * c.continuation_mass(s));
                }
                continue;
            }
            if !self.markov {
                self.atom(&mut head, &[s], c.range(s), w);
            }
            self.expand(&mut vec![s], c.range(s), w, 0, true, &mut tasks, &mut head);
        }
        let parts: Vec<Partial> = tasks
            .par_iter()
            .map(|t| {
                let mut out = self.empty();
                let mut word = t.word.clone();
                self.expand(&mut word, t.point, t.weight, t.m, false, &mut Vec::new(), &mut out);
                out
            })
            .collect();
        for p in parts {
            head.atoms.extend(p.atoms);
            head.pruned.extend(p.pruned);
            head.depth_tail.extend(p.depth_tail);
            for (t, x) in head.sym_tail.iter_mut().zip(p.sym_tail) {
                *t += x;
            }
        }
        head
    }
}

/// Builds the truncated stationary measure: projective for Bernoulli
/// cocycles, joint for Markov ones.
pub fn stationary_measure(c: &Cocycle, opts: MeasureOptions) -> AtomicMeasure {
    let markov = !c.is_bernoulli();
    let b = Builder {
        c,
        depth: opts.depth,
        tau: opts.min_weight,
        markov,
    };
    let part = b.build();
    let covered_mass = compensated_sum(part.atoms.iter().map(|a| a.weight));
    let pruned_mass = compensated_sum(part.pruned.iter().copied());
    let depth_tail = compensated_sum(part.depth_tail.iter().copied());
    let k = c.k();
    let (tail_mass, symbol_tail, symbol_mass) = if markov {
        let mut mass = vec![0.0; k];
        for a in &part.atoms {
            mass[a.symbol.unwrap()] += a.weight;
        }
        if opts.min_weight == 0.0 {
            let rem = c.symbol_remainder(opts.depth);
            (compensated_sum(rem.iter().copied()), rem, mass)
        } else {
            (pruned_mass + depth_tail, part.sym_tail, mass)
        }
    } else {
        let tail = if opts.min_weight == 0.0 {
            (1.0 - c.sing_mass()).powi(opts.depth as i32 + 1)
        } else {
            pruned_mass + depth_tail
        };
        (tail, Vec::new(), Vec::new())
    };
    AtomicMeasure {
        kind: if markov { MeasureKind::Joint } else { MeasureKind::Projective },
        depth: opts.depth,
        min_weight: opts.min_weight,
        covered_mass,
        tail_mass,
        pruned_mass,
        symbol_mass,
        symbol_tail,
        fingerprint: c.fingerprint(),
        atoms: part.atoms,
    }
}

/// Sum of the excluded subtree masses, computed from the tree frontier
/// rather than from closed forms.
pub fn frontier_tail_mass(c: &Cocycle, opts: MeasureOptions) -> f64 {
    let b = Builder {
        c,
        depth: opts.depth,
        tau: opts.min_weight,
        markov: !c.is_bernoulli(),
    };
    let part = b.build();
    compensated_sum(part.pruned.iter().chain(&part.depth_tail).copied())
}

impl AtomicMeasure {
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.atoms.iter().map(|a| a.weight))
    }

    pub fn check_cocycle(&self, c: &Cocycle) -> Result<()> {
        if self.fingerprint != c.fingerprint() {
            return Err(CocycleError::MeasureMismatch);
        }
        Ok(())
    }

    /// `∫ φ dm`; `-∞` as soon as a positively weighted atom evaluates to it.
    pub fn integrate(&self, phi: &Observable) -> f64 {
        let chunks: Vec<f64> = self
            .atoms
            .par_chunks(4096)
            .map(|chunk| compensated_sum(chunk.iter().map(|a| a.weight * phi.eval(a.symbol, a.point))))
            .collect();
        compensated_sum(chunks)
    }

    /// Largest `proj_dist` between an atom and the point regenerated from
    /// its witness.
    pub fn witness_error(&self, c: &Cocycle) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let syms = a.witness.symbols();
                let start = c.range(syms[0] as usize);
                let p = syms[1..].iter().fold(start, |x, &s| c.letter(s as usize).act(x));
                p.dist(a.point)
            })
            .fold(0.0, f64::max)
    }

    /// `p × η` from a Bernoulli projective measure.
    pub fn product(&self, c: &Cocycle) -> Result<AtomicMeasure> {
        if self.kind != MeasureKind::Projective || !c.is_bernoulli() {
            return Err(CocycleError::Domain("p × η needs a Bernoulli projective measure".into()));
        }
        self.check_cocycle(c)?;
        let k = c.k();
        let mut atoms = Vec::with_capacity(self.atoms.len() * k);
        for a in &self.atoms {
            for i in 0..k {
                atoms.push(Atom {
                    symbol: Some(i),
                    point: a.point,
                    weight: c.initial(i) * a.weight,
                    witness: a.witness.clone(),
                });
            }
        }
        let symbol_mass = (0..k).map(|i| c.initial(i) * self.covered_mass).collect();
        let symbol_tail = (0..k).map(|i| c.initial(i) * self.tail_mass).collect();
        Ok(AtomicMeasure {
            kind: MeasureKind::Product,
            covered_mass: compensated_sum(atoms.iter().map(|a| a.weight)),
            atoms,
            symbol_mass,
            symbol_tail,
            ..self.clone_header()
        })
    }

    fn clone_header(&self) -> AtomicMeasure {
        AtomicMeasure {
            kind: self.kind,
            depth: self.depth,
            min_weight: self.min_weight,
            covered_mass: self.covered_mass,
            tail_mass: self.tail_mass,
            pruned_mass: self.pruned_mass,
            symbol_mass: self.symbol_mass.clone(),
            symbol_tail: self.symbol_tail.clone(),
            fingerprint: self.fingerprint,
            atoms: Vec::new(),
        }
    }

    /// Coalesces atoms of the same symbol lying within `merge_tol` of their
    /// neighbour (single linkage along `P¹`). The merged atom keeps the
    /// lexicographically smallest witness and that witness's point.
    pub fn merged(&self, merge_tol: f64) -> AtomicMeasure {
        let mut order: Vec<usize> = (0..self.atoms.len()).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (&self.atoms[a], &self.atoms[b]);
            x.symbol.cmp(&y.symbol).then(x.point.total_cmp(&y.point)).then(a.cmp(&b))
        });
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        for &i in &order {
            let a = &self.atoms[i];
            match clusters.last_mut() {
                Some(cl) => {
                    let prev = &self.atoms[*cl.last().unwrap()];
                    if prev.symbol == a.symbol && prev.point.dist(a.point) <= merge_tol {
                        cl.push(i);
                    } else {
                        clusters.push(vec![i]);
                    }
                }
                None => clusters.push(vec![i]),
            }
        }
        // wrap-around at θ = π within one symbol
        let mut i = 0;
        while i + 1 < clusters.len() {
            let sym = self.atoms[clusters[i][0]].symbol;
            let mut j = i;
            while j + 1 < clusters.len() && self.atoms[clusters[j + 1][0]].symbol == sym {
                j += 1;
            }
            if j > i {
                let first = &self.atoms[clusters[i][0]];
                let last = &self.atoms[*clusters[j].last().unwrap()];
                if first.point.dist(last.point) <= merge_tol {
                    let tail = clusters.remove(j);
                    clusters[i].extend(tail);
                    j -= 1;
                }
            }
            i = j + 1;
        }
        let atoms = clusters
            .iter()
            .map(|cl| {
                let best = *cl.iter().min_by(|&&a, &&b| self.atoms[a].witness.cmp(&self.atoms[b].witness)).unwrap();
                let mut members = cl.clone();
                members.sort_unstable();
                Atom {
                    symbol: self.atoms[best].symbol,
                    point: self.atoms[best].point,
                    weight: compensated_sum(members.iter().map(|&m| self.atoms[m].weight)),
                    witness: self.atoms[best].witness.clone(),
                }
            })
            .collect();
        AtomicMeasure {
            atoms,
            ..self.clone_header()
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = csv_line(&["symbol".into(), "theta".into(), "weight".into(), "witness".into()]);
        for a in &self.atoms {
            out.push_str(&csv_line(&[
                a.symbol.map(|s| (s + 1).to_string()).unwrap_or_default(),
                format!("{}", a.point.theta()),
                format!("{}", a.weight),
                a.witness.to_string(),
            ]));
        }
        out
    }
}

/// Merges the atoms of `m` (see [`AtomicMeasure::merged`]).
pub fn merge_atoms(m: &AtomicMeasure, merge_tol: f64) -> AtomicMeasure {
    m.merged(merge_tol)
}
