use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use cocycle_cli::report::{write_outputs, Format};
use cocycle_cli::{exit, run_command, Command, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Both,
}

/// Lyapunov exponents and limit laws of 2×2 cocycles with singular letters.
#[derive(Debug, Parser)]
#[command(name = "cocycle", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    format: FormatArg,
    /// Fixed output label instead of the unix time.
    #[arg(long)]
    label: Option<String>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    ExitCode::from(run(args) as u8)
}

fn run(args: Args) -> i32 {
    if let Some(n) = args.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return exit::USAGE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return exit::USAGE;
        }
    };
    let mut cfg = match RunConfig::load(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    };
    if let Some(s) = args.seed {
        cfg.run.seed = Some(s);
    }
    let label = args.label.unwrap_or_else(|| {
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0).to_string()
    });
    let format = match args.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
        FormatArg::Both => Format::Both,
    };
    let started = Instant::now();
    let outcome = match run_command(args.command, &cfg, &text) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    };
    eprintln!("{}: {:.3} s", args.command.name(), started.elapsed().as_secs_f64());
    for w in &outcome.report.warnings {
        eprintln!("warning: {w}");
    }
    for c in &outcome.report.checks {
        let tag = if c.pass { "PASS" } else if c.gating { "FAIL" } else { "note" };
        eprintln!("{tag} {}: {}", c.name, c.detail);
    }
    match write_outputs(&args.out, &label, &outcome.report, &outcome.csv, format) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return exit::USAGE;
        }
    }
    outcome.exit
}
