//! Seeded symbolic paths and renewal blocks.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::spec::Cocycle;
use super::words::Word;
use crate::error::{CocycleError, Result};
use crate::rng::{stream_rng, Domain};

/// Draws letters of the base shift from one deterministic stream.
pub struct PathSampler<'a> {
    c: &'a Cocycle,
    rng: ChaCha8Rng,
    prev: Option<usize>,
    draws: u64,
}

fn pick(cum: &[f64], u: f64) -> usize {
    cum.partition_point(|&c| c <= u).min(cum.len() - 1)
}

impl<'a> PathSampler<'a> {
    pub fn new(c: &'a Cocycle, seed: u64, domain: Domain, index: u64) -> Self {
        Self {
            c,
            rng: stream_rng(seed, domain, index),
            prev: None,
            draws: 0,
        }
    }

    pub fn cocycle(&self) -> &'a Cocycle {
        self.c
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn previous(&self) -> Option<usize> {
        self.prev
    }

    /// Next letter: the stationary law for the first draw, then the
    /// transition column of the previous letter.
    pub fn next_symbol(&mut self) -> usize {
        let u: f64 = self.rng.gen();
        let s = match self.prev {
            None => pick(self.c.cum_initial(), u),
            Some(j) => pick(self.c.cum_transition(j), u),
        };
        self.prev = Some(s);
        self.draws += 1;
        s
    }

    /// Forces the next draws to continue from `s`.
    pub fn condition_on(&mut self, s: usize) {
        self.prev = Some(s);
    }

    /// Start symbol of a block: `q_s / q₀` over the singular letters.
    pub fn draw_singular_start(&mut self) -> usize {
        let u: f64 = self.rng.gen();
        let s = pick(self.c.cum_sing_start(), u);
        self.prev = Some(s);
        self.draws += 1;
        s
    }

    pub fn sample_path(&mut self, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.next_symbol()).collect()
    }

    /// Draws until a singular letter appears and returns it.
    pub fn advance_to_singular(&mut self) -> Result<usize> {
        let cap = self.c.tolerances().block_cap;
        for _ in 0..cap {
            let s = self.next_symbol();
            if self.c.is_singular(s) {
                return Ok(s);
            }
        }
        Err(CocycleError::BlockCapExceeded { cap })
    }

    /// One renewal block `(s, inv…, s′)`. Consecutive calls chain: each
    /// block starts where the previous one ended. A fresh sampler starts
    /// from `q_s / q₀`.
    pub fn sample_block(&mut self) -> Result<Word> {
        let cap = self.c.tolerances().block_cap;
        if (1.0 / self.c.sing_mass()) > cap as f64 {
            return Err(CocycleError::BlockCapExceeded { cap });
        }
        let s = match self.prev {
            Some(p) if self.c.is_singular(p) => p,
            _ => self.draw_singular_start(),
        };
        let mut w = Word::from_indices(&[s]);
        for _ in 0..cap {
            let x = self.next_symbol();
            w.push(x);
            if self.c.is_singular(x) {
                return Ok(w);
            }
        }
        Err(CocycleError::BlockCapExceeded { cap })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;
    use crate::model::spec::{CocycleSpec, Tolerances};

    fn rot07() -> Cocycle {
        Cocycle::new(CocycleSpec::bernoulli(
            vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7)],
            vec![0],
            vec![0.3, 0.7],
        ))
        .unwrap()
    }

    #[test]
    fn bernoulli_frequency() {
        let c = rot07();
        let mut s = PathSampler::new(&c, 42, Domain::Path, 0);
        let n = 100_000;
        let ones = s.sample_path(n).iter().filter(|&&x| x == 0).count();
        let freq = ones as f64 / n as f64;
        assert!((freq - 0.3).abs() <= 3.0 * (0.21f64 / n as f64).sqrt());
    }

    #[test]
    fn markov_occupation() {
        let c = Cocycle::new(CocycleSpec::markov(
            vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7)],
            vec![0],
            vec![vec![0.9, 0.2], vec![0.1, 0.8]],
        ))
        .unwrap();
        let n = 200_000;
        let path = PathSampler::new(&c, 7, Domain::Path, 0).sample_path(n);
        let freq = path.iter().filter(|&&x| x == 0).count() as f64 / n as f64;
        // autocorrelated: variance inflation (1 + λ)/(1 − λ) with λ = 0.7
        let se = (2.0 / 9.0 / n as f64 * 1.7 / 0.3).sqrt();
        assert!((freq - 2.0 / 3.0).abs() <= 3.0 * se, "{freq}");
    }

    #[test]
    fn identical_streams_repeat() {
        let c = rot07();
        let a = PathSampler::new(&c, 1, Domain::Path, 5).sample_path(64);
        let b = PathSampler::new(&c, 1, Domain::Path, 5).sample_path(64);
        let d = PathSampler::new(&c, 1, Domain::Path, 6).sample_path(64);
        assert_eq!(a, b);
        assert_ne!(a, d);
    }

    #[test]
    fn blocks_are_renewal_words() {
        let c = rot07();
        let mut s = PathSampler::new(&c, 3, Domain::Block, 0);
        let mut prev_end = None;
        for _ in 0..200 {
            let w = s.sample_block().unwrap();
            assert!(w.is_renewal(&c) && c.is_singular(w.last().unwrap()));
            if let Some(e) = prev_end {
                assert_eq!(w.first(), Some(e));
            }
            prev_end = w.last();
        }
    }

    #[test]
    fn long_blocks_hit_the_cap() {
        let spec = CocycleSpec::bernoulli(
            vec![Mat2::rotation(0.7), Mat2::diag(1.0, 0.0)],
            vec![1],
            vec![1.0 - 1e-9, 1e-9],
        );
        assert!(!spec.validate().is_usable());
        // bypass validation to reach the sampler guard
        let relaxed = Tolerances {
            block_cap: u64::MAX,
            ..Tolerances::default()
        };
        let c = Cocycle::with_tolerances(spec, relaxed).unwrap();
        let mut strict = c.clone();
        strict.set_block_cap(1_000_000);
        let mut s = PathSampler::new(&strict, 1, Domain::Block, 0);
        assert_eq!(s.sample_block(), Err(CocycleError::BlockCapExceeded { cap: 1_000_000 }));
    }

    #[test]
    fn block_concatenation_matches_paths() {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let c = Cocycle::new(CocycleSpec::bernoulli(
            vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7), Mat2::rotation(0.2)],
            vec![0],
            vec![0.3, 0.5, 0.2],
        ))
        .unwrap();
        let n = 60_000;
        let path = PathSampler::new(&c, 11, Domain::Path, 0).sample_path(n);
        let mut blocks = PathSampler::new(&c, 11, Domain::Block, 0);
        let mut joined = Vec::with_capacity(n + 64);
        joined.push(blocks.draw_singular_start());
        while joined.len() < n {
            let w = blocks.sample_block().unwrap();
            joined.extend(w.symbols()[1..].iter().map(|&x| x as usize));
        }
        joined.truncate(n);
        let count = |xs: &[usize]| {
            let mut h = vec![0.0; 27];
            for w in xs.windows(3) {
                h[w[0] * 9 + w[1] * 3 + w[2]] += 1.0;
            }
            h
        };
        let (a, b) = (count(&path), count(&joined));
        let (na, nb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        let mut stat = 0.0;
        let mut cells = 0;
        for i in 0..27 {
            let tot = a[i] + b[i];
            if tot > 0.0 {
                let ea = tot * na / (na + nb);
                let eb = tot * nb / (na + nb);
                stat += (a[i] - ea).powi(2) / ea + (b[i] - eb).powi(2) / eb;
                cells += 1;
            }
        }
        let p = 1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat);
        assert!(p > 0.001, "p = {p}");
    }
}
