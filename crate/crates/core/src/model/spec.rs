use serde::{Deserialize, Serialize};

use super::markov;
use crate::error::{CocycleError, Result};
use crate::linalg::{Letter, Mat2, MatrixClass, ProjPoint, DEFAULT_RANK_TOL};

/// Letter law of the base shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseLaw {
    /// i.i.d. letters with law `p`.
    Bernoulli { p: Vec<f64> },
    /// Markov letters: `transition[i][j]` is the probability of `j → i`
    /// (columns sum to one). `stationary` is computed when absent.
    Markov {
        transition: Vec<Vec<f64>>,
        stationary: Option<Vec<f64>>,
    },
}

/// Unvalidated cocycle description. Symbols are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleSpec {
    pub matrices: Vec<Mat2>,
    pub singular: Vec<usize>,
    pub base: BaseLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub rank_tol: f64,
    /// Relative threshold for declaring a word product null.
    pub null_tol: f64,
    /// Maximum draws allowed inside one renewal block.
    pub block_cap: u64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            null_tol: 1e-12,
            block_cap: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Advisory checks are reported but never block a computation.
    pub advisory: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    fn push(&mut self, name: &str, passed: bool, advisory: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            advisory,
            detail: detail.into(),
        });
    }

    pub fn is_usable(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.advisory)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed && !c.advisory)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn in_m_star(&self) -> bool {
        self.check("in_m_star").is_some_and(|c| c.passed)
    }
}

const SUM_TOL: f64 = 1e-12;

impl CocycleSpec {
    pub fn bernoulli(matrices: Vec<Mat2>, singular: Vec<usize>, p: Vec<f64>) -> Self {
        Self {
            matrices,
            singular,
            base: BaseLaw::Bernoulli { p },
        }
    }

    pub fn markov(matrices: Vec<Mat2>, singular: Vec<usize>, transition: Vec<Vec<f64>>) -> Self {
        Self {
            matrices,
            singular,
            base: BaseLaw::Markov {
                transition,
                stationary: None,
            },
        }
    }

    pub fn k(&self) -> usize {
        self.matrices.len()
    }

    pub fn validate(&self) -> ValidationReport {
        self.validate_with(&Tolerances::default())
    }

    pub fn validate_with(&self, tol: &Tolerances) -> ValidationReport {
        let mut report = ValidationReport::default();
        let k = self.k();

        let mut alphabet_ok = (2..=255).contains(&k);
        let mut detail = format!("k = {k}");
        let mut is_sing = vec![false; k];
        for &s in &self.singular {
            if s >= k || is_sing[s] {
                alphabet_ok = false;
                detail = format!("singular symbol {} is out of range or repeated", s + 1);
            } else {
                is_sing[s] = true;
            }
        }
        let n_sing = is_sing.iter().filter(|&&b| b).count();
        if n_sing == 0 || n_sing == k {
            alphabet_ok = false;
            detail = "both the singular and the invertible parts must be nonempty".into();
        }
        report.push("alphabet", alphabet_ok, false, detail);

        let finite = self.matrices.iter().all(|m| m.is_finite());
        report.push("finite_entries", finite, false, if finite { "ok" } else { "non-finite matrix entry" });

        let mut letters_ok = alphabet_ok && finite;
        if finite {
            for (i, m) in self.matrices.iter().enumerate() {
                let class = m.classify(tol.rank_tol).unwrap_or(MatrixClass::Rank0);
                let want = if is_sing.get(i).copied().unwrap_or(false) {
                    MatrixClass::Rank1
                } else {
                    MatrixClass::InvertiblePosDet
                };
                let ok = class == want;
                letters_ok &= ok;
                let detail = if ok {
                    format!("letter {} is {:?}", i + 1, class)
                } else if class == MatrixClass::InvertibleNegDet {
                    format!("letter {} has det {} < 0", i + 1, m.det())
                } else {
                    format!("letter {} is {:?}, expected {:?}", i + 1, class, want)
                };
                report.push(&format!("letter_{}", i + 1), ok, false, detail);
            }
        }

        let mut initial: Option<Vec<f64>> = None;
        match &self.base {
            BaseLaw::Bernoulli { p } => {
                let ok = p.len() == k && p.iter().all(|&v| v > 0.0 && v.is_finite()) && (p.iter().sum::<f64>() - 1.0).abs() <= SUM_TOL;
                report.push(
                    "probabilities",
                    ok,
                    false,
                    format!("len {} sum {:.17}", p.len(), p.iter().sum::<f64>()),
                );
                if ok {
                    initial = Some(p.clone());
                }
            }
            BaseLaw::Markov { transition, stationary } => {
                let square = transition.len() == k && transition.iter().all(|r| r.len() == k);
                let stochastic = square
                    && transition.iter().flatten().all(|&v| (0.0..=1.0).contains(&v))
                    && (0..k).all(|j| (transition.iter().map(|r| r[j]).sum::<f64>() - 1.0).abs() <= SUM_TOL);
                report.push("left_stochastic", stochastic, false, if stochastic { "columns sum to 1" } else { "P is not a k×k left-stochastic matrix" });
                let primitive = stochastic && markov::is_primitive(transition);
                report.push("primitive", primitive, false, if primitive { "ok" } else { "P is not primitive" });
                if primitive {
                    let q = match stationary {
                        Some(q) => Ok(q.clone()),
                        None => markov::stationary_vector(transition),
                    };
                    match q {
                        Ok(q) => {
                            let res = if q.len() == k { markov::residual(transition, &q) } else { f64::INFINITY };
                            let ok = res <= SUM_TOL && q.iter().all(|&v| v > 0.0) && (q.iter().sum::<f64>() - 1.0).abs() <= SUM_TOL;
                            report.push("stationary_vector", ok, false, format!("‖Pq − q‖∞ = {res:e}"));
                            if ok {
                                initial = Some(q);
                            }
                        }
                        Err(e) => report.push("stationary_vector", false, false, e.to_string()),
                    }
                    let inv: Vec<usize> = (0..k).filter(|&i| !is_sing[i]).collect();
                    let block: Vec<Vec<f64>> = inv.iter().map(|&i| inv.iter().map(|&j| transition[i][j]).collect()).collect();
                    let mixing = markov::is_primitive(&block);
                    report.push("inv_subshift_mixing", mixing, true, if mixing { "ok" } else { "invertible subshift is not topologically mixing" });
                }
            }
        }

        if let Some(q) = &initial {
            let q0: f64 = (0..k).filter(|&i| is_sing[i]).map(|i| q[i]).sum();
            let expected = 1.0 / q0;
            let ok = expected <= tol.block_cap as f64;
            report.push(
                "block_length",
                ok,
                false,
                format!("expected renewal block length {expected:.6e} (cap {})", tol.block_cap),
            );
        }

        if letters_ok {
            let letters: Vec<Letter> = self.matrices.iter().map(|&m| Letter::new(m, tol.rank_tol).unwrap()).collect();
            let mut star = true;
            let mut worst = (f64::INFINITY, 0, 0);
            for i in (0..k).filter(|&i| is_sing[i]) {
                for j in (0..k).filter(|&j| is_sing[j]) {
                    let d = letters[i].range().unwrap().dist(letters[j].kernel().unwrap());
                    if d < worst.0 {
                        worst = (d, i, j);
                    }
                    star &= d > tol.rank_tol;
                }
            }
            report.push(
                "in_m_star",
                star,
                true,
                format!("min dist(r_{}, k_{}) = {:e}", worst.1 + 1, worst.2 + 1, worst.0),
            );
        }
        report
    }
}

/// Growth constants used by tail bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthConstants {
    /// `max_{j inv} log ‖A_j‖`.
    pub inv_up: f64,
    /// `min_{j inv} log σ_min(A_j)`.
    pub inv_lo: f64,
    /// `max_{l sing} log ‖A_l‖`.
    pub sing_up: f64,
    /// `min_{i,l sing} log ‖A_i r_l‖`; may be `-∞`.
    pub sing_range_lo: f64,
    /// `max_i log ‖A_i‖` over the whole alphabet.
    pub all_up: f64,
}

/// A validated cocycle together with its precomputed letter data.
#[derive(Debug, Clone)]
pub struct Cocycle {
    spec: CocycleSpec,
    tol: Tolerances,
    letters: Vec<Letter>,
    is_sing: Vec<bool>,
    singular: Vec<usize>,
    invertible: Vec<usize>,
    /// `trans[i][j]`: probability of letter `i` after letter `j`.
    trans: Vec<Vec<f64>>,
    initial: Vec<f64>,
    bernoulli: bool,
    sing_mass: f64,
    /// `1 + Σ_{i inv} colsum_i((I − P_inv)^{-1}) p_ij`, indexed by symbol.
    continuation: Vec<f64>,
    fundamental: Vec<Vec<f64>>,
    cum_initial: Vec<f64>,
    cum_trans: Vec<Vec<f64>>,
    cum_sing_start: Vec<f64>,
    fingerprint: u64,
    report: ValidationReport,
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

impl Cocycle {
    pub fn new(spec: CocycleSpec) -> Result<Self> {
        Self::with_tolerances(spec, Tolerances::default())
    }

    pub fn with_tolerances(spec: CocycleSpec, tol: Tolerances) -> Result<Self> {
        let report = spec.validate_with(&tol);
        if !report.is_usable() {
            let msg: Vec<String> = report.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
            if report.check("primitive").is_some_and(|c| !c.passed) {
                return Err(CocycleError::Primitivity);
            }
            return Err(CocycleError::InvalidSpec(msg.join("; ")));
        }
        let k = spec.k();
        let letters: Vec<Letter> = spec
            .matrices
            .iter()
            .map(|&m| Letter::new(m, tol.rank_tol))
            .collect::<Result<_>>()?;
        let mut is_sing = vec![false; k];
        for &s in &spec.singular {
            is_sing[s] = true;
        }
        let singular: Vec<usize> = (0..k).filter(|&i| is_sing[i]).collect();
        let invertible: Vec<usize> = (0..k).filter(|&i| !is_sing[i]).collect();
        let (trans, initial, bernoulli) = match &spec.base {
            BaseLaw::Bernoulli { p } => ((0..k).map(|i| vec![p[i]; k]).collect::<Vec<_>>(), p.clone(), true),
            BaseLaw::Markov { transition, stationary } => {
                let q = match stationary {
                    Some(q) => q.clone(),
                    None => markov::stationary_vector(transition)?,
                };
                (transition.clone(), q, false)
            }
        };
        let sing_mass = singular.iter().map(|&s| initial[s]).sum();
        let block: Vec<Vec<f64>> = invertible
            .iter()
            .map(|&i| invertible.iter().map(|&j| trans[i][j]).collect())
            .collect();
        let fundamental = markov::fundamental_matrix(&block)
            .ok_or_else(|| CocycleError::InvalidSpec("invertible block has spectral radius 1".into()))?;
        let colsum: Vec<f64> = (0..invertible.len())
            .map(|b| fundamental.iter().map(|row| row[b]).sum())
            .collect();
        let continuation = (0..k)
            .map(|j| 1.0 + invertible.iter().zip(&colsum).map(|(&i, c)| c * trans[i][j]).sum::<f64>())
            .collect();
        let cum_initial = cumulative(&initial);
        let cum_trans = (0..k)
            .map(|j| cumulative(&(0..k).map(|i| trans[i][j]).collect::<Vec<_>>()))
            .collect();
        let cum_sing_start = cumulative(
            &(0..k)
                .map(|i| if is_sing[i] { initial[i] / sing_mass } else { 0.0 })
                .collect::<Vec<_>>(),
        );
        let fingerprint = fingerprint(&spec);
        Ok(Self {
            spec,
            tol,
            letters,
            is_sing,
            singular,
            invertible,
            trans,
            initial,
            bernoulli,
            sing_mass,
            continuation,
            fundamental,
            cum_initial,
            cum_trans,
            cum_sing_start,
            fingerprint,
            report,
        })
    }

    pub fn spec(&self) -> &CocycleSpec {
        &self.spec
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Overrides the per-block draw cap used by samplers.
    pub fn set_block_cap(&mut self, cap: u64) {
        self.tol.block_cap = cap;
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.report
    }

    pub fn k(&self) -> usize {
        self.letters.len()
    }

    pub fn letter(&self, i: usize) -> &Letter {
        &self.letters[i]
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn singular(&self) -> &[usize] {
        &self.singular
    }

    pub fn invertible(&self) -> &[usize] {
        &self.invertible
    }

    pub fn is_singular(&self, i: usize) -> bool {
        self.is_sing[i]
    }

    pub fn is_bernoulli(&self) -> bool {
        self.bernoulli
    }

    /// Probability of letter `i` following letter `j`.
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.trans[i][j]
    }

    /// Stationary letter law (`p` for Bernoulli, `q` for Markov).
    pub fn initial(&self, i: usize) -> f64 {
        self.initial[i]
    }

    pub fn initial_law(&self) -> &[f64] {
        &self.initial
    }

    /// Mass of the singular letters, `q₀ = Σ_{s sing} q_s`.
    pub fn sing_mass(&self) -> f64 {
        self.sing_mass
    }

    pub fn range(&self, s: usize) -> ProjPoint {
        self.letters[s].range().expect("singular letter has a range")
    }

    pub fn kernel(&self, s: usize) -> ProjPoint {
        self.letters[s].kernel().expect("singular letter has a kernel")
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Expected number of invertible letters drawn after letter `j` before
    /// the next singular letter.
    pub fn expected_extra_inv_steps(&self, j: usize) -> f64 {
        self.continuation[j] - 1.0
    }

    /// `1 +` [`Self::expected_extra_inv_steps`]. For an invertible `j` this
    /// is the expected number of invertible visits counting `j` itself.
    pub fn continuation_mass(&self, j: usize) -> f64 {
        self.continuation[j]
    }

    /// Expected visits to each symbol during the rest of a renewal block,
    /// given that the next letter is drawn from column `j` of the transition
    /// matrix. Singular entries count the terminal letter.
    pub fn block_symbol_masses(&self, j: usize) -> Vec<f64> {
        let inv = &self.invertible;
        let u: Vec<f64> = inv.iter().map(|&i| self.trans[i][j]).collect();
        let visits: Vec<f64> = self
            .fundamental
            .iter()
            .map(|row| row.iter().zip(&u).map(|(a, b)| a * b).sum())
            .collect();
        let mut out = vec![0.0; self.k()];
        for (b, &i) in inv.iter().enumerate() {
            out[i] = visits[b];
        }
        for &l in &self.singular {
            out[l] = self.trans[l][j] + inv.iter().zip(&visits).map(|(&i, v)| self.trans[l][i] * v).sum::<f64>();
        }
        out
    }

    /// Per-symbol remainder `Σ_{s sing} q_s Σ_{n > depth+1} Σ_{ω∈ℬ_n(s,j)} p(ω)`,
    /// i.e. `P_{j,inv} P_inv^depth (I − P_inv)^{-1} P_{inv,sing} q_sing`.
    pub fn symbol_remainder(&self, depth: usize) -> Vec<f64> {
        let inv = &self.invertible;
        let mut u: Vec<f64> = inv
            .iter()
            .map(|&i| self.singular.iter().map(|&s| self.trans[i][s] * self.initial[s]).sum())
            .collect();
        // (I − P_inv)^{-1} u
        u = self.fundamental.iter().map(|row| row.iter().zip(&u).map(|(a, b)| a * b).sum()).collect();
        for _ in 0..depth {
            u = inv
                .iter()
                .map(|&i| inv.iter().zip(&u).map(|(&j, v)| self.trans[i][j] * v).sum())
                .collect();
        }
        (0..self.k())
            .map(|j| inv.iter().zip(&u).map(|(&i, v)| self.trans[j][i] * v).sum())
            .collect()
    }

    pub fn growth_constants(&self) -> GrowthConstants {
        let inv_up = self.invertible.iter().map(|&j| self.letters[j].norm().ln()).fold(f64::NEG_INFINITY, f64::max);
        let inv_lo = self.invertible.iter().map(|&j| self.letters[j].min_singular().ln()).fold(f64::INFINITY, f64::min);
        let sing_up = self.singular.iter().map(|&s| self.letters[s].norm().ln()).fold(f64::NEG_INFINITY, f64::max);
        let mut sing_range_lo = f64::INFINITY;
        for &i in &self.singular {
            for &l in &self.singular {
                sing_range_lo = sing_range_lo.min(self.letters[i].log_norm_at(self.range(l)));
            }
        }
        GrowthConstants {
            inv_up,
            inv_lo,
            sing_up,
            sing_range_lo,
            all_up: inv_up.max(sing_up),
        }
    }

    pub(crate) fn cum_initial(&self) -> &[f64] {
        &self.cum_initial
    }

    pub(crate) fn cum_transition(&self, j: usize) -> &[f64] {
        &self.cum_trans[j]
    }

    pub(crate) fn cum_sing_start(&self) -> &[f64] {
        &self.cum_sing_start
    }
}

fn fingerprint(spec: &CocycleSpec) -> u64 {
    // FNV-1a over the bit patterns
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    for m in &spec.matrices {
        for v in m.to_rows() {
            eat(v.to_bits());
        }
    }
    for &s in &spec.singular {
        eat(s as u64);
    }
    match &spec.base {
        BaseLaw::Bernoulli { p } => p.iter().for_each(|v| eat(v.to_bits())),
        BaseLaw::Markov { transition, .. } => {
            eat(u64::MAX);
            transition.iter().flatten().for_each(|v| eat(v.to_bits()))
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot07() -> CocycleSpec {
        CocycleSpec::bernoulli(vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7)], vec![0], vec![0.3, 0.7])
    }

    #[test]
    fn valid_bernoulli_spec_passes() {
        let report = rot07().validate();
        assert!(report.is_usable(), "{report:?}");
        assert!(report.in_m_star());
    }

    #[test]
    fn negative_determinant_is_rejected() {
        let mut spec = rot07();
        spec.matrices[1] = Mat2::diag(1.0, -1.0);
        let report = spec.validate();
        assert!(!report.is_usable());
        let failure = report.failures().next().unwrap();
        assert_eq!(failure.name, "letter_2");
        assert!(failure.detail.contains("det"));
    }

    #[test]
    fn reducible_markov_chain_is_rejected() {
        let spec = CocycleSpec::markov(
            vec![Mat2::diag(1.0, 0.0), Mat2::rotation(0.7)],
            vec![0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let report = spec.validate();
        assert!(!report.is_usable());
        assert!(!report.check("primitive").unwrap().passed);
        assert_eq!(Cocycle::new(spec).unwrap_err(), CocycleError::Primitivity);
    }

    #[test]
    fn long_blocks_are_rejected() {
        let spec = CocycleSpec::bernoulli(
            vec![Mat2::rotation(0.7), Mat2::diag(1.0, 0.0)],
            vec![1],
            vec![1.0 - 1e-9, 1e-9],
        );
        let report = spec.validate();
        assert!(report.check("probabilities").unwrap().passed);
        assert!(!report.check("block_length").unwrap().passed);
    }

    #[test]
    fn probabilities_must_sum_to_one() {
        let mut spec = rot07();
        spec.base = BaseLaw::Bernoulli { p: vec![0.3, 0.69] };
        assert!(!spec.validate().is_usable());
    }

    #[test]
    fn m_star_flag_detects_range_in_kernel() {
        // range of A_1 is e_2, its own kernel
        let spec = CocycleSpec::bernoulli(
            vec![Mat2::new(0.0, 0.0, 1.0, 0.0), Mat2::rotation(0.7)],
            vec![0],
            vec![0.5, 0.5],
        );
        let report = spec.validate();
        assert!(report.is_usable());
        assert!(!report.in_m_star());
    }

    #[test]
    fn markov_remainder_matches_geometric_case() {
        // Bernoulli seen as Markov: remainder beyond depth D is (1 − q)^{D+1}
        let c = Cocycle::new(rot07()).unwrap();
        let rem: f64 = c.symbol_remainder(4).iter().sum();
        assert!((rem - 0.7f64.powi(5)).abs() < 1e-14);
        assert!((c.expected_extra_inv_steps(1) - 0.7 / 0.3).abs() < 1e-12);
    }
}
