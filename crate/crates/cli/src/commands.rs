use std::f64::consts::PI;

use cocycle_core::families::{iterated_winding, linspace, scan, verify_winding, FamilyKind, ScanParams};
use cocycle_core::io::{csv_line, fmt_ext};
use cocycle_core::limits::{
    clt_experiment, ldt_experiment, variance_empirical, variance_gl, CltParams, GlOptions, LdtParams, SigmaSource,
};
use cocycle_core::lyapunov::{concordance, l1_furstenberg, l1_induced, l1_monte_carlo, l1_series, L1Estimate};
use cocycle_core::model::{invariant_arc, near_kernel_arcs, scan_null_words};
use cocycle_core::stationary::{
    check_stationarity, ergodicity_decay, frontier_tail_mass, grid, stationary_measure, MeasureOptions, QnOptions,
};
use cocycle_core::{Cocycle, Observable};
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::report::RunReport;
use crate::{exit, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Validate,
    L1,
    Measure,
    Ldt,
    Clt,
    Variance,
    Scan,
    Nullwords,
    Diagnose,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::L1 => "l1",
            Command::Measure => "measure",
            Command::Ldt => "ldt",
            Command::Clt => "clt",
            Command::Variance => "variance",
            Command::Scan => "scan",
            Command::Nullwords => "nullwords",
            Command::Diagnose => "diagnose",
        }
    }
}

pub struct Outcome {
    pub report: RunReport,
    pub csv: String,
    pub exit: i32,
}

/// Runs one command. Errors before any result exists come back as `Err`;
/// the caller maps them to exit code 2.
pub fn run_command(cmd: Command, cfg: &RunConfig, config_text: &str) -> Result<Outcome, CliError> {
    let mut report = RunReport::new(cmd.name(), cfg, config_text);
    let (csv, forced_exit) = match cmd {
        Command::Validate => validate(cfg, &mut report)?,
        Command::L1 => (l1(cfg, &mut report)?, None),
        Command::Measure => (measure(cfg, &mut report)?, None),
        Command::Ldt => (ldt(cfg, &mut report)?, None),
        Command::Clt => (clt(cfg, &mut report)?, None),
        Command::Variance => (variance(cfg, &mut report)?, None),
        Command::Scan => (scan_cmd(cfg, &mut report)?, None),
        Command::Nullwords => (nullwords(cfg, &mut report)?, None),
        Command::Diagnose => (diagnose(cfg, &mut report)?, None),
    };
    let exit = forced_exit.unwrap_or(if report.gating_failures().next().is_some() { exit::CHECK_FAILED } else { exit::OK });
    Ok(Outcome { report, csv, exit })
}

fn cocycle(cfg: &RunConfig) -> Result<Cocycle, CliError> {
    Ok(Cocycle::with_tolerances(cfg.spec()?, cfg.tolerances())?)
}

fn measure_opts(cfg: &RunConfig) -> MeasureOptions {
    MeasureOptions::pruned(cfg.run.depth(), cfg.run.min_weight())
}

/// `[run] l1_ref`, else the series value at the configured depth.
fn l1_ref(cfg: &RunConfig, c: &Cocycle, report: &mut RunReport) -> f64 {
    let r = cfg.run.l1_ref();
    if r.is_finite() {
        return r;
    }
    let est = l1_series(c, measure_opts(cfg));
    if est.lower_bound_heuristic {
        report.warn("reference exponent uses a heuristic lower tail bound");
    }
    est.value
}

fn estimate_warnings(report: &mut RunReport, e: &L1Estimate) {
    if e.lower_bound_heuristic {
        report.warn(format!("{}: lower tail bound is heuristic", e.method.name()));
    }
    if e.suspected_neg_inf {
        report.warn(format!("{}: -inf seen numerically without a structural null word", e.method.name()));
    }
}

fn validate(cfg: &RunConfig, report: &mut RunReport) -> Result<(String, Option<i32>), CliError> {
    let spec = cfg.spec()?;
    let v = spec.validate_with(&cfg.tolerances());
    let mut csv = csv_line(&["check", "passed", "advisory", "detail"].map(String::from));
    for c in &v.checks {
        report.check(&c.name, c.passed, !c.advisory, &c.detail);
        csv.push_str(&csv_line(&[c.name.clone(), c.passed.to_string(), c.advisory.to_string(), c.detail.clone()]));
    }
    let usable = v.is_usable();
    let error = if usable {
        None
    } else {
        Cocycle::with_tolerances(spec, cfg.tolerances()).err().map(|e| e.to_string())
    };
    report.set_result(&json!({ "usable": usable, "in_m_star": v.in_m_star(), "error": error, "validation": v }));
    Ok((csv, (!usable).then_some(exit::USAGE)))
}

fn l1(cfg: &RunConfig, report: &mut RunReport) -> Result<String, CliError> {
    let c = cocycle(cfg)?;
    let opts = measure_opts(cfg);
    let seed = cfg.run.seed();
    let mut ests: Vec<L1Estimate> = Vec::new();
    for m in cfg.run.methods() {
        let e = match m.as_str() {
            "series" => l1_series(&c, opts),
            "furstenberg" => l1_furstenberg(&c, &stationary_measure(&c, opts))?,
            "mc_direct" => l1_monte_carlo(&c, cfg.run.mc_n(), cfg.run.mc_samples(), seed)?,
            "mc_induced" => l1_induced(&c, cfg.run.blocks(), seed)?,
            other => return Err(CliError::Usage(format!("unknown method {other:?}"))),
        };
        estimate_warnings(report, &e);
        ests.push(e);
    }
    let tail = frontier_tail_mass(&c, opts);
    if tail > 0.01 {
        report.warn(format!("low coverage: renewal words up to depth {} miss mass {tail:.3e}", opts.depth));
    }
    #[derive(Serialize)]
    struct Gap {
        a: &'static str,
        b: &'static str,
        #[serde(with = "cocycle_core::io::ext_real")]
        diff: f64,
        combined_error: f64,
        pass: bool,
    }
    let mut gaps = Vec::new();
    for i in 0..ests.len() {
        for j in i + 1..ests.len() {
            let (diff, err) = concordance(&ests[i], &ests[j]);
            let pass = diff <= 3.0 * err + 1e-8;
            let (a, b) = (ests[i].method.name(), ests[j].method.name());
            report.check(format!("concordance_{a}_{b}"), pass, true, format!("|diff| = {} vs 3·{err:.3e} + 1e-8", fmt_ext(diff)));
            gaps.push(Gap {
                a,
                b,
                diff,
                combined_error: err,
                pass,
            });
        }
    }
    report.set_result(&json!({ "estimates": ests, "gaps": gaps, "frontier_tail_mass": tail }));
    let mut csv = L1Estimate::csv_header();
    for e in &ests {
        csv.push_str(&e.csv_record());
    }
    Ok(csv)
}

/// Smooth projective test functions, each bounded by 1.
fn test_set() -> Vec<Observable> {
    vec![
        Observable::constant(1.0).with_sup_bound(1.0),
        Observable::projective("cos2", |x| (2.0 * x.theta()).cos()).with_sup_bound(1.0),
        Observable::projective("sin2", |x| (2.0 * x.theta()).sin()).with_sup_bound(1.0),
        Observable::projective("cos4", |x| (4.0 * x.theta()).cos()).with_sup_bound(1.0),
        Observable::projective("bump", |x| (-(x.theta() - PI / 3.0).powi(2) * 8.0).exp()).with_sup_bound(1.0),
    ]
}

fn measure(cfg: &RunConfig, report: &mut RunReport) -> Result<String, CliError> {
    let c = cocycle(cfg)?;
    let opts = measure_opts(cfg);
    let mut m = stationary_measure(&c, opts);
    let perturb = cfg.run.perturb_first_weight();
    if perturb != 1.0 {
        if let Some(a) = m.atoms.first_mut() {
            a.weight *= perturb;
        }
        report.warn(format!("first atom weight multiplied by {perturb}"));
    }
    let mass = m.total_mass();
    let mass_gap = (mass - m.covered_mass).abs();
    report.check("atom_mass", mass_gap <= 1e-12, true, format!("|Σw − covered_mass| = {mass_gap:.3e}"));
    if c.is_bernoulli() && opts.min_weight == 0.0 {
        let expected = 1.0 - (1.0 - c.sing_mass()).powi(opts.depth as i32 + 1);
        let gap = (m.covered_mass - expected).abs();
        report.check("covered_mass", gap <= 1e-12, true, format!("covered {} vs 1 − (1−q)^(N+1) = {expected}", m.covered_mass));
    }
    let stat = check_stationarity(&c, &m, &test_set())?;
    for r in &stat.rows {
        report.check(
            format!("stationarity_{}", r.observable),
            r.pass,
            true,
            format!("|∫𝒬φ − ∫φ| = {} vs slack {:.3e}", fmt_ext(r.discrepancy), r.slack),
        );
    }
    let merged = m.merged(cfg.run.merge_tol());
    let phi = &test_set()[1];
    let qn = QnOptions {
        seed: cfg.run.seed(),
        ..QnOptions::default()
    };
    let decay = ergodicity_decay(&c, phi, &cfg.run.decay_ns(), cfg.run.decay_grid(), &qn)?;
    if c.is_bernoulli() {
        let r = 1.0 - c.sing_mass();
        let worst = decay
            .ns
            .iter()
            .zip(&decay.oscillation)
            .map(|(&n, &o)| o - 2.0 * r.powi(n as i32))
            .fold(f64::NEG_INFINITY, f64::max);
        report.check("uniform_ergodicity", worst <= 1e-12, true, format!("max osc(𝒬ⁿφ) − 2(1−q)ⁿ = {worst:.3e}"));
    }
    if decay.exact.iter().any(|e| !e) {
        report.warn("some decay points used Monte Carlo");
    }
    report.set_result(&json!({
        "atoms": m.len(),
        "merged_atoms": merged.len(),
        "covered_mass": m.covered_mass,
        "tail_mass": m.tail_mass,
        "pruned_mass": m.pruned_mass,
        "total_mass": mass,
        "symbol_mass": m.symbol_mass,
        "symbol_tail": m.symbol_tail,
        "stationarity": stat,
        "decay": decay,
        "measure": merged,
    }));
    Ok(merged.to_csv())
}

fn ldt(cfg: &RunConfig, report: &mut RunReport) -> Result<String, CliError> {
    let c = cocycle(cfg)?;
    let r = l1_ref(cfg, &c, report);
    let p = LdtParams {
        epsilon: cfg.run.epsilon(),
        schedule: cfg.run.schedule(),
        samples: cfg.run.ldt_samples(),
        seed: cfg.run.seed(),
        start: cfg.start()?,
    };
    let rep = ldt_experiment(&c, r, &p)?;
    let freqs = rep.frequencies();
    if freqs.iter().all(|&f| f == 0.0) {
        report.check("decay", true, true, "every frequency is zero");
    } else {
        report.check("decay", rep.is_decaying(), true, format!("frequencies {freqs:?}"));
        match rep.fit {
            Some(f) => report.check("rate_positive", f.c0 > 0.0, true, format!("fitted c0 = {}", f.c0)),
            None => report.check("rate_positive", false, true, "too few nonzero frequencies to fit"),
        }
    }
    let csv = rep.to_csv();
    report.set_result(&rep);
    Ok(csv)
}

fn gl(cfg: &RunConfig, c: &Cocycle) -> Result<cocycle_core::limits::GlReport, CliError> {
    let m = stationary_measure(c, measure_opts(cfg));
    let opts = GlOptions {
        n_trunc: cfg.run.n_trunc(),
        gl_tol: cfg.run.gl_tol(),
        budget: cfg.run.gl_budget(),
        sensitivity: cfg.run.sensitivity(),
    };
    Ok(variance_gl(c, &m, &opts)?)
}

fn gl_warnings(report: &mut RunReport, g: &cocycle_core::limits::GlReport) {
    if g.clamped {
        report.warn(format!("σ² clamped from {}", g.raw_sigma2));
    }
    if let Some(w) = &g.warning {
        report.warn(w.clone());
    }
}

fn clt(cfg: &RunConfig, report: &mut RunReport) -> Result<String, CliError> {
    let c = cocycle(cfg)?;
    let r = l1_ref(cfg, &c, report);
    let start = cfg.start()?;
    let source = cfg.sigma_source()?;
    let sigma2 = match source {
        SigmaSource::GordinLivsic => {
            let g = gl(cfg, &c)?;
            gl_warnings(report, &g);
            g.sigma2
        }
        SigmaSource::Empirical => variance_empirical(&c, cfg.run.emp_n(), cfg.run.emp_samples(), r, cfg.run.seed(), start)?.sigma2,
    };
    let p = CltParams {
        n: cfg.run.clt_n(),
        samples: cfg.run.clt_samples(),
        seed: cfg.run.seed(),
        start,
        ks_threshold: cfg.run.ks_threshold(),
    };
    let rep = clt_experiment(&c, r, sigma2.max(0.0).sqrt(), source, &p)?;
    report.check("ks", rep.pass, true, format!("KS = {:.4} vs {}", rep.ks, rep.ks_threshold));
    let csv = rep.to_csv();
    report.set_result(&json!({ "sigma2": sigma2, "clt": rep }));
    Ok(csv)
}

fn variance(cfg: &RunConfig, report: &mut RunReport) -> Result<String, CliError> {
    let c = cocycle(cfg)?;
    let r = l1_ref(cfg, &c, report);
    let emp = variance_empirical(&c, cfg.run.emp_n(), cfg.run.emp_samples(), r, cfg.run.seed(), cfg.start()?)?;
    let mut csv = csv_line(&["source", "sigma2", "std_error", "n_trunc"].map(String::from));
    csv.push_str(&csv_line(&["empirical".into(), fmt_ext(emp.sigma2), fmt_ext(emp.std_error), String::new()]));
    let g = if c.is_bernoulli() {
        let g = gl(cfg, &c)?;
        gl_warnings(report, &g);
        report.check("coboundary", g.coboundary_ok, true, format!("residual {:.3e}", g.coboundary_residual));
        csv.push_str(&csv_line(&["gordin_livsic".into(), fmt_ext(g.sigma2), String::new(), fmt_ext(g.n_trunc)]));
        for s in &g.sensitivity {
            csv.push_str(&csv_line(&["gordin_livsic".into(), fmt_ext(s.sigma2), String::new(), fmt_ext(s.n_trunc)]));
        }
        Some(g)
    } else {
        report.warn("Gordin–Livšic variance needs a Bernoulli base; only the empirical value is reported");
        None
    };
    let gap = g.as_ref().map(|g| (g.sigma2 - emp.sigma2).abs() / emp.sigma2.abs().max(f64::MIN_POSITIVE));
    if let Some(gap) = gap {
        report.check("relative_gap", gap <= cfg.run.gap_tol(), true, format!("|σ²_GL − σ²_emp| / σ²_emp = {gap:.4} vs {}", cfg.run.gap_tol()));
    }
    report.set_result(&json!({ "l1_ref": r, "empirical": emp, "gordin_livsic": g, "relative_gap": gap }));
    Ok(csv)
}

fn scan_cmd(cfg: &RunConfig, report: &mut RunReport) -> Result<String, CliError> {
    let (mut f, sec) = cfg.family()?;
    let points = sec.points();
    if points == 0 {
        return Err(CliError::Usage("[family] points must be positive".into()));
    }
    let t_grid = linspace(f.t_lo, f.t_hi, points);
    let params = ScanParams {
        method: sec.method(&cfg.run)?,
        null_len: sec.null_len(),
        seed: cfg.run.seed(),
    };
    let curve = scan(&f, &t_grid, &params);
    for row in &curve.rows {
        if let Some(e) = &row.error {
            report.warn(format!("t = {}: {e}", row.t));
        }
        if let Some(e) = &row.estimate {
            if e.suspected_neg_inf {
                report.warn(format!("t = {}: suspected -inf", row.t));
            }
        }
    }
    let gating = !matches!(f.kind, FamilyKind::CraigSimon { .. });
    let wt = linspace(f.t_lo, f.t_hi, sec.winding_t.unwrap_or(64));
    let wx = grid(sec.winding_x.unwrap_or(64));
    let winding = verify_winding(&mut f, &wt, &wx)?;
    report.check(
        "winding",
        winding.pass,
        gating,
        format!("c0_hat = {} at t = {}, letter {}, θ = {}", winding.c0_hat, winding.t, winding.letter + 1, winding.theta),
    );
    let iterated = match sec.iterate_len.unwrap_or(0) {
        0 => None,
        len => {
            let it = iterated_winding(&f, &wt, &wx, len)?;
            report.check("iterated_winding", it.pass, false, format!("c1_hat = {} for word {}", it.c1_hat, it.word));
            Some(it)
        }
    };
    let csv = curve.to_csv();
    report.set_result(&json!({
        "structural_points": curve.structural_points(),
        "winding": winding,
        "iterated_winding": iterated,
        "family": f,
        "curve": curve,
    }));
    Ok(csv)
}

fn nullwords(cfg: &RunConfig, report: &mut RunReport) -> Result<String, CliError> {
    let c = cocycle(cfg)?;
    let ns = scan_null_words(&c, cfg.run.max_len())?;
    let arcs = near_kernel_arcs(&c, cfg.run.near_kernel_eps())?;
    report.check("null_free", ns.is_null_free(), false, format!("{} null words up to length {}", ns.words.len(), ns.max_len + 1));
    let mut csv = csv_line(&["word".into(), "length".into()]);
    for w in &ns.words {
        csv.push_str(&csv_line(&[w.to_string(), w.len().to_string()]));
    }
    report.set_result(&json!({ "scan": ns, "near_kernel": arcs }));
    Ok(csv)
}

fn diagnose(cfg: &RunConfig, report: &mut RunReport) -> Result<String, CliError> {
    let c = cocycle(cfg)?;
    for ch in &c.validation().checks {
        report.check(&ch.name, ch.passed, !ch.advisory, &ch.detail);
    }
    let opts = measure_opts(cfg);
    let ns = scan_null_words(&c, cfg.run.max_len())?;
    let series = l1_series(&c, opts);
    estimate_warnings(report, &series);
    let tail = frontier_tail_mass(&c, opts);
    let g = c.growth_constants();
    let block_len = 1.0 / c.initial_law().iter().zip(0..).filter(|(_, i)| c.is_singular(*i)).map(|(q, _)| q).sum::<f64>();
    let rows: Vec<(&str, String)> = vec![
        ("k", c.k().to_string()),
        ("bernoulli", c.is_bernoulli().to_string()),
        ("expected_block_length", fmt_ext(block_len)),
        ("inv_up", fmt_ext(g.inv_up)),
        ("inv_lo", fmt_ext(g.inv_lo)),
        ("sing_up", fmt_ext(g.sing_up)),
        ("sing_range_lo", fmt_ext(g.sing_range_lo)),
        ("all_up", fmt_ext(g.all_up)),
        ("frontier_tail_mass", fmt_ext(tail)),
        ("null_words", ns.words.len().to_string()),
        ("arc_certificate", ns.certificate.is_some().to_string()),
        ("l1_series", fmt_ext(series.value)),
    ];
    let mut csv = csv_line(&["quantity".into(), "value".into()]);
    for (k, v) in &rows {
        csv.push_str(&csv_line(&[k.to_string(), v.clone()]));
    }
    report.set_result(&json!({
        "growth_constants": g,
        "expected_block_length": block_len,
        "frontier_tail_mass": tail,
        "arc_certificate": invariant_arc(&c),
        "null_scan": ns,
        "l1_series": series,
    }));
    Ok(csv)
}
