use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nematoflow::config::{load_config, schema_text};
use nematoflow::simulate::{simulate, COMPATIBILITY_WARN};
use nematoflow::verify::{
    convergence, legendre_sweep, require_window, verify_identities, LegendreRow, Study, CONVERGENCE_CSV_HEADER,
    LEGENDRE_CSV_HEADER,
};
use nematoflow::Error;

const LEGENDRE_TOL: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "nematoflow", version, about = "Q-tensor nematic flow simulator and verification harness")]
struct Cli {
    /// Configuration file (`section.key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for randomized suites; overrides `scenario.seed` for `simulate`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Number of random samples for `verify-identities` and `legendre`.
    #[arg(long, global = true, value_name = "N")]
    samples: Option<usize>,
    /// Output directory (`simulate`) or file (other subcommands).
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Worker threads for field kernels.
    #[arg(long, global = true, env = "NEMATOFLOW_THREADS", value_name = "N")]
    threads: Option<usize>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the scenario described by `--config`.
    Simulate,
    /// Randomized checks of the pointwise tensor identities.
    VerifyIdentities,
    /// Strong Legendre bound for one set of elastic constants, or a random
    /// sweep when none are given.
    Legendre {
        #[arg(long = "l1", allow_negative_numbers = true)]
        l1: Option<f64>,
        #[arg(long = "l2", allow_negative_numbers = true)]
        l2: Option<f64>,
        #[arg(long = "l3", allow_negative_numbers = true)]
        l3: Option<f64>,
    },
    /// Manufactured-solution and time-step ladders with observed orders.
    Convergence {
        /// elliptic, stokes, stokes_constant_q, energy_dt or all.
        study: String,
    },
    /// Print every configuration key with its default.
    DumpConfigSchema,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    /// Checks ran but a tolerance was violated.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Check(_) => 2,
            Failure::Lib(e) => match e {
                Error::Config { .. } | Error::Invalid { .. } | Error::Io(_) => 1,
                Error::Contract(_) => 2,
                Error::NoConvergence { .. } => 3,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Check(m) => f.write_str(m),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

struct Ctx {
    quiet: bool,
}

impl Ctx {
    fn progress(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

/// Writes `text` to `path`, or to stdout without one.
fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, text)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn cmd_simulate(cli: &Cli, ctx: &Ctx) -> Result<(), Failure> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| Failure::Usage("simulate requires --config PATH".into()))?;
    let mut cfg = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.scenario.seed = seed;
    }
    if let Some(dir) = &cli.output {
        cfg.output.dir = dir.clone();
    }
    let summary = simulate(&cfg, |line| {
        if line.starts_with("warning") {
            eprintln!("{line}");
        } else if line.starts_with("compatibility_residual") {
            if !ctx.quiet {
                println!("{line}");
            }
        } else {
            ctx.progress(line);
        }
    })?;
    if !ctx.quiet {
        println!("max_drift = {:e}", summary.max_drift);
        println!("wrote {} and {} field dumps", summary.csv.display(), summary.dumps.len());
        if summary.compatibility_residual > COMPATIBILITY_WARN {
            println!("note: initial data outside the compatible class");
        }
    }
    Ok(())
}

fn cmd_verify_identities(cli: &Cli) -> Result<(), Failure> {
    let seed = cli.seed.unwrap_or(42);
    let samples = cli.samples.unwrap_or(10_000);
    let report = verify_identities(seed, samples);
    let mut text = format!("seed = {seed}, samples = {samples}\n");
    for c in &report.checks {
        let status = if c.passed() { "ok" } else { "FAIL" };
        text.push_str(&format!("{:<18} worst = {:<24e} tol = {:e}  {status}\n", c.name, c.worst, c.tol));
    }
    emit(cli.output.as_deref(), &text)?;
    if !report.passed() {
        return Err(Failure::Check("tensor identity check failed".into()));
    }
    Ok(())
}

fn cmd_legendre(cli: &Cli, l: [Option<f64>; 3]) -> Result<(), Failure> {
    let single = if l.iter().any(Option::is_some) {
        let d = nematoflow::MaterialParams::default();
        Some([l[0].unwrap_or(d.l1), l[1].unwrap_or(d.l2), l[2].unwrap_or(d.l3)])
    } else if let Some(path) = cli.config.as_deref() {
        let m = load_config(path)?.material;
        Some([m.l1, m.l2, m.l3])
    } else {
        None
    };
    let rows = match single {
        Some([l1, l2, l3]) => vec![LegendreRow::for_constants(l1, l2, l3)?],
        None => legendre_sweep(cli.seed.unwrap_or(42), cli.samples.unwrap_or(200))?,
    };
    let text = if single.is_some() {
        let r = rows[0];
        format!(
            "L1 = {:?}, L2 = {:?}, L3 = {:?}\nlegendre_min = {:?}\nbound = {:?}\nmargin = {:?}\n",
            r.l1, r.l2, r.l3, r.min_eig, r.bound, r.margin
        )
    } else {
        let mut s = format!("{LEGENDRE_CSV_HEADER}\n");
        for r in &rows {
            s.push_str(&r.csv());
            s.push('\n');
        }
        s
    };
    emit(cli.output.as_deref(), &text)?;
    let worst = rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    if worst < -LEGENDRE_TOL {
        return Err(Failure::Check(format!("Legendre margin {worst:e} below -{LEGENDRE_TOL:e}")));
    }
    Ok(())
}

fn cmd_convergence(cli: &Cli, ctx: &Ctx, study: &str) -> Result<(), Failure> {
    let studies: Vec<Study> = if study == "all" {
        Study::ALL.to_vec()
    } else {
        let s = Study::from_name(study).ok_or_else(|| {
            let names: Vec<&str> = Study::ALL.iter().map(Study::name).collect();
            Failure::Usage(format!("unknown study `{study}` (expected one of {}, all)", names.join(", ")))
        })?;
        vec![s]
    };
    let mut text = String::new();
    let mut failed = Vec::new();
    for s in studies {
        ctx.progress(&format!("running {} ladder", s.name()));
        let report = convergence(s)?;
        if study == "all" {
            text.push_str(&format!("# {}\n", s.name()));
        }
        text.push_str(CONVERGENCE_CSV_HEADER);
        text.push('\n');
        for r in &report.rows {
            text.push_str(&r.csv());
            text.push('\n');
        }
        if let Err(e) = require_window(&report) {
            failed.push(e.to_string());
        }
    }
    emit(cli.output.as_deref(), &text)?;
    if !failed.is_empty() {
        return Err(Failure::Check(failed.join("; ")));
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let ctx = Ctx { quiet: cli.quiet };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        nematoflow::init_threads(n);
    }
    match &cli.command {
        Command::Simulate => cmd_simulate(cli, &ctx),
        Command::VerifyIdentities => cmd_verify_identities(cli),
        Command::Legendre { l1, l2, l3 } => cmd_legendre(cli, [*l1, *l2, *l3]),
        Command::Convergence { study } => cmd_convergence(cli, &ctx, study),
        Command::DumpConfigSchema => emit(cli.output.as_deref(), &schema_text()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
