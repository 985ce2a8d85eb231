//! `RunConfig`: the TOML file driving one run.
//!
//! ```toml
//! [cocycle]
//! preset = "rot07"               # or the explicit keys below
//! matrices = [[1, 0, 0, 0], [0.76, -0.64, 0.64, 0.76]]   # row-major a b c d
//! singular = [1]                 # 1-based
//! p = [0.3, 0.7]                 # Bernoulli law, or
//! # transition = [[0.9, 0.2], [0.1, 0.8]]   # transition[i][j] = P(j → i)
//!
//! [run]
//! seed = 7
//! depth = 30
//!
//! [family]
//! kind = "craig_simon"
//! a = 0.0
//! ```

use std::path::{Path, PathBuf};

use cocycle_core::families::{FamilyKind, FamilySpec, ScanMethod};
use cocycle_core::limits::{SigmaSource, StartDirection};
use cocycle_core::model::Tolerances;
use cocycle_core::{presets, CocycleSpec, Mat2};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<CocycleSection>,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocycleSection {
    /// One of `conformal`, `rot07`, `null`, `markov`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    /// TOML file holding a `[cocycle]` table, relative to this config.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<[f64; 4]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub singular: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_cap: Option<u64>,
}

macro_rules! run_section {
    ($($(#[$doc:meta])* $name:ident : $ty:ty = $default:expr;)*) => {
        /// Command parameters. Every key is optional; `RunSection::get_*`
        /// supplies the default.
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct RunSection {
            $($(#[$doc])* #[serde(default, skip_serializing_if = "Option::is_none")] pub $name: Option<$ty>,)*
        }

        impl RunSection {
            $(pub fn $name(&self) -> $ty { self.$name.clone().unwrap_or_else(|| $default) })*
        }

        /// `(key, default)` for every `[run]` key.
        pub fn run_defaults() -> Vec<(&'static str, String)> {
            vec![$((stringify!($name), format!("{:?}", { let d: $ty = $default; d })),)*]
        }
    };
}

run_section! {
    seed: u64 = 0;
    /// Renewal depth for series, measure and Furstenberg.
    depth: usize = 30;
    min_weight: f64 = 0.0;
    /// Any of `series`, `furstenberg`, `mc_direct`, `mc_induced`.
    methods: Vec<String> = vec!["series".into(), "furstenberg".into(), "mc_direct".into(), "mc_induced".into()];
    mc_n: usize = 2000;
    mc_samples: usize = 2000;
    blocks: usize = 5000;
    /// Reference exponent for ldt/clt/variance; the series value when absent.
    l1_ref: f64 = f64::NAN;
    epsilon: f64 = 0.05;
    schedule: Vec<usize> = vec![100, 200, 400, 800, 1600];
    ldt_samples: usize = 4000;
    clt_n: usize = 1000;
    clt_samples: usize = 2000;
    ks_threshold: f64 = 0.05;
    /// `gordin_livsic` or `empirical`.
    sigma_source: String = "gordin_livsic".into();
    emp_n: usize = 2000;
    emp_samples: usize = 4000;
    /// `norm`, or a start angle in radians.
    start: String = "norm".into();
    n_trunc: f64 = 40.0;
    gl_tol: f64 = 1e-10;
    gl_budget: u64 = 1 << 22;
    sensitivity: Vec<f64> = vec![20.0, 40.0, 80.0];
    /// Largest allowed relative gap between the two variance estimates.
    gap_tol: f64 = 0.15;
    merge_tol: f64 = 1e-12;
    /// Multiplies the first atom's weight before the stationarity check.
    perturb_first_weight: f64 = 1.0;
    decay_ns: Vec<usize> = vec![0, 1, 2, 4, 8, 12];
    decay_grid: usize = 64;
    max_len: usize = 6;
    near_kernel_eps: f64 = 1e-3;
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySection {
    /// `rotation`, `craig_simon` or `custom`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Custom only: `A_t(i) = A_i + t·slopes[i]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slopes: Option<Vec<[f64; 4]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// `series` or `mc_direct`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub null_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winding_t: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winding_x: Option<usize>,
    /// Longest invertible word for the iterated winding check; 0 skips it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterate_len: Option<usize>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| usage(format!("config: {e}")))
    }

    /// Reads the file and inlines any `[cocycle] file = …` reference.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(sec) = &cfg.cocycle {
            if let Some(file) = &sec.file {
                let full = path.parent().unwrap_or(Path::new(".")).join(file);
                let text = std::fs::read_to_string(&full).map_err(|e| usage(format!("{}: {e}", full.display())))?;
                #[derive(Deserialize)]
                struct Outer {
                    cocycle: CocycleSection,
                }
                let inner: Outer = toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", full.display())))?;
                if inner.cocycle.file.is_some() {
                    return Err(usage("nested cocycle files are not supported"));
                }
                cfg.cocycle = Some(inner.cocycle);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig serializes")
    }

    pub fn spec(&self) -> Result<CocycleSpec, CliError> {
        self.cocycle.as_ref().ok_or_else(|| usage("missing [cocycle] section"))?.spec()
    }

    pub fn tolerances(&self) -> Tolerances {
        let mut t = Tolerances::default();
        if let Some(c) = &self.cocycle {
            t.rank_tol = c.rank_tol.unwrap_or(t.rank_tol);
            t.null_tol = c.null_tol.unwrap_or(t.null_tol);
            t.block_cap = c.block_cap.unwrap_or(t.block_cap);
        }
        t
    }

    pub fn start(&self) -> Result<StartDirection, CliError> {
        let s = self.run.start();
        StartDirection::parse(&s).ok_or_else(|| usage(format!("start = {s:?} is neither \"norm\" nor an angle")))
    }

    pub fn sigma_source(&self) -> Result<SigmaSource, CliError> {
        match self.run.sigma_source().as_str() {
            "gordin_livsic" => Ok(SigmaSource::GordinLivsic),
            "empirical" => Ok(SigmaSource::Empirical),
            s => Err(usage(format!("sigma_source = {s:?} must be gordin_livsic or empirical"))),
        }
    }

    pub fn family(&self) -> Result<(FamilySpec, &FamilySection), CliError> {
        let f = self.family.as_ref().ok_or_else(|| usage("missing [family] section"))?;
        let spec = match f.kind.as_str() {
            "rotation" => FamilySpec::rotation(self.spec()?, f.t_lo.unwrap_or(-std::f64::consts::PI), f.t_hi.unwrap_or(std::f64::consts::PI)),
            "craig_simon" => {
                let a = f.a.unwrap_or(0.0);
                FamilySpec::craig_simon(a, f.p.unwrap_or(0.5), f.t_lo.unwrap_or(a - 2.5), f.t_hi.unwrap_or(a + 2.5))
            }
            "custom" => {
                let slopes = f.slopes.as_ref().ok_or_else(|| usage("custom family needs slopes"))?;
                FamilySpec::custom(self.spec()?, slopes.iter().map(|&r| Mat2::from_rows(r)).collect(), f.t_lo.unwrap_or(-1.0), f.t_hi.unwrap_or(1.0))
            }
            k => return Err(usage(format!("unknown family kind {k:?}"))),
        };
        spec.check()?;
        if let FamilyKind::Custom { .. } = spec.kind {
            spec.validate_interval(16)?;
        }
        Ok((spec, f))
    }
}

impl FamilySection {
    pub fn points(&self) -> usize {
        self.points.unwrap_or(101)
    }

    pub fn null_len(&self) -> usize {
        self.null_len.unwrap_or(6)
    }

    pub fn method(&self, run: &RunSection) -> Result<ScanMethod, CliError> {
        match self.method.as_deref().unwrap_or("series") {
            "series" => Ok(ScanMethod::Series {
                depth: run.depth(),
                min_weight: run.min_weight(),
            }),
            "mc_direct" => Ok(ScanMethod::McDirect {
                n: run.mc_n(),
                samples: run.mc_samples(),
            }),
            m => Err(usage(format!("scan method {m:?} must be series or mc_direct"))),
        }
    }
}

impl CocycleSection {
    pub fn spec(&self) -> Result<CocycleSpec, CliError> {
        if let Some(name) = &self.preset {
            if self.matrices.is_some() || self.p.is_some() || self.transition.is_some() || self.singular.is_some() {
                return Err(usage("preset excludes matrices/singular/p/transition"));
            }
            return presets::by_name(name).ok_or_else(|| usage(format!("unknown preset {name:?}; known: {}", presets::NAMES.join(", "))));
        }
        let matrices: Vec<Mat2> = self
            .matrices
            .as_ref()
            .ok_or_else(|| usage("[cocycle] needs preset or matrices"))?
            .iter()
            .map(|&r| Mat2::from_rows(r))
            .collect();
        let singular = self
            .singular
            .as_ref()
            .ok_or_else(|| usage("[cocycle] needs singular"))?
            .iter()
            .map(|&s| s.checked_sub(1).ok_or_else(|| usage("singular symbols are 1-based")))
            .collect::<Result<Vec<_>, _>>()?;
        match (&self.p, &self.transition) {
            (Some(p), None) => Ok(CocycleSpec::bernoulli(matrices, singular, p.clone())),
            (None, Some(t)) => Ok(CocycleSpec::markov(matrices, singular, t.clone())),
            _ => Err(usage("[cocycle] needs exactly one of p and transition")),
        }
    }
}
