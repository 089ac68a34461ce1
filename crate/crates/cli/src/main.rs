//! Command-line runner for inverse-inequality scaling experiments.
//!
//! One experiment per invocation; batch runs are shell loops over configs,
//! which keeps every run independently reproducible. Exit codes: `0` when
//! the run completed and the verdict passed, `1` for usage or configuration
//! errors, `2` for runtime failures (including incomplete runs) and failed
//! verdicts, so CI can gate on the distinction.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;
use invineq::{
    parse_config, run_scaling_experiment, write_artifacts, Kind, RunOptions, ScalingReport,
};

const EXIT_PASS: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_FAILURE: u8 = 2;

/// Empirical verification of inverse inequalities on kernel trial spaces:
/// runs one scaling experiment and writes report.csv, report.json, and
/// loglog.dat.
#[derive(Debug, Parser)]
#[command(name = "invineq", version, about)]
struct Cli {
    /// Experiment kind; must match the `kind` key in the config file.
    /// One of: bernstein, nikolskii, stability, native-inverse, sampling,
    /// gn-check, manifold-bernstein, manifold-nikolskii, equivalence,
    /// poincare.
    #[arg(value_name = "KIND")]
    kind: String,

    /// Configuration file: flat `key = value` lines with `#` comments
    /// (schema in docs/config.md).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory for the reports (default: the config's `out` key,
    /// falling back to the current directory).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the config's random seed.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,

    /// Worker thread count (default: one per core). Reports are
    /// byte-identical regardless of this setting.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,

    /// Additionally write per-level node sets, kernel Gram matrices, and
    /// extremizer vectors next to the reports.
    #[arg(long)]
    dump_grams: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(cli))
}

fn run(cli: Cli) -> u8 {
    let kind = match Kind::parse(&cli.kind) {
        Some(k) => k,
        None => {
            let valid: Vec<&str> = Kind::ALL.iter().map(|k| k.label()).collect();
            eprintln!(
                "unknown experiment kind `{}`; valid kinds: {}",
                cli.kind,
                valid.join(", ")
            );
            return EXIT_USAGE;
        }
    };

    let text = match fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read config `{}`: {}", cli.config.display(), e);
            return EXIT_USAGE;
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", e);
            return if e.is_usage() { EXIT_USAGE } else { EXIT_FAILURE };
        }
    };
    if cfg.kind != kind {
        eprintln!(
            "experiment kind mismatch: the command line says `{}` but the config says `{}`",
            kind.label(),
            cfg.kind.label()
        );
        return EXIT_USAGE;
    }

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("--threads must be at least 1");
            return EXIT_USAGE;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot size the worker pool to {} threads: {}", n, e);
            return EXIT_FAILURE;
        }
    }

    let opts = RunOptions {
        seed: cli.seed,
        threads: cli.threads,
        dump_grams: cli.dump_grams,
    };
    let report = match run_scaling_experiment(&cfg, &opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}", e);
            return if e.is_usage() { EXIT_USAGE } else { EXIT_FAILURE };
        }
    };

    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = write_artifacts(&report, &out_dir) {
        eprintln!("cannot write reports into `{}`: {}", out_dir.display(), e);
        return EXIT_FAILURE;
    }

    print_summary(&report, &out_dir);
    if report.pass && !report.incomplete {
        EXIT_PASS
    } else {
        EXIT_FAILURE
    }
}

fn print_summary(report: &ScalingReport, out_dir: &std::path::Path) {
    println!("kind:    {}", report.kind.label());
    println!("seed:    {}", report.seed);
    if report.kind == Kind::Poincare {
        let held = report.poincare_rows.iter().filter(|r| r.holds).count();
        println!(
            "rows:    {} of {} inequality rows hold",
            held,
            report.poincare_rows.len()
        );
    } else {
        let ns: Vec<String> = report
            .levels
            .iter()
            .map(|o| o.summary.n.to_string())
            .collect();
        println!(
            "levels:  {} completed (N = {})",
            report.levels.len(),
            ns.join(", ")
        );
        match (report.fit, report.predicted_exponent) {
            (Some((slope, stderr)), Some(pred)) => println!(
                "fit:     slope {:+.4} (stderr {:.1e}) on log raw value vs log {}; predicted {:+.4}",
                slope, stderr, report.x_variable, pred
            ),
            (Some((slope, stderr)), None) => println!(
                "fit:     slope {:+.4} (stderr {:.1e}) on log raw value vs log {}",
                slope, stderr, report.x_variable
            ),
            _ => println!("fit:     none"),
        }
    }
    if report.incomplete {
        println!("status:  INCOMPLETE (a level failed; later levels were discarded)");
    }
    println!(
        "verdict: {}",
        if report.pass && !report.incomplete {
            "PASS"
        } else {
            "FAIL"
        }
    );
    for r in &report.reasons {
        println!("  - {}", r);
    }
    for n in &report.notes {
        println!("  note: {}", n);
    }
    println!(
        "reports: {}{}report.csv, report.json, loglog.dat",
        out_dir.display(),
        std::path::MAIN_SEPARATOR
    );
}
