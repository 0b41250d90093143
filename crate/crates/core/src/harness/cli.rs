//! Command-line interface. `main` in the binary only calls [`main_with_args`].

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use super::config::{ConfigFile, ExperimentConfig, Kind, Route, DEFAULT_OUT, OUT_ENV};
use super::manifest::ResultManifest;
use super::{report, run, verify};
use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "sexratio", version, about = "Family stopping rules: simulation, exact laws and limit theorems")]
pub struct Cli {
    /// TOML file with experiment settings; flags override its keys.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $SEXRATIO_OUT, else ./sexratio-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: all cores]. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Master seed [default: 42].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a batch and write its running ratios.
    Simulate(SimulateArgs),
    /// Exact law of a rule and the closed-form constants.
    Exact(ExactArgs),
    /// Chi-squared, stable, Laplace and square-root scaling checks.
    Limitcheck(LimitArgs),
    /// Tail exponent of the square-root rule over a grid of c.
    Kappa(KappaArgs),
    /// Large-deviations rate against exact probabilities.
    Ldp(LdpArgs),
    /// Non-termination probability of the doubling rule.
    Chi(ChiArgs),
    /// Re-check hashes and summarise every result under a directory.
    Report(ReportArgs),
    /// Run all acceptance criteria.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Rule, e.g. pboys:2, pboysmore:1, sqrt:1, doubling [default: pboysmore:1].
    #[arg(long)]
    pub strategy: Option<String>,
    /// Families [default: 100000].
    #[arg(long)]
    pub n: Option<u64>,
    /// Steps after which a family is censored [default: 1000000].
    #[arg(long)]
    pub cap: Option<u64>,
    /// walk, sampler or auto [default: auto].
    #[arg(long, value_enum)]
    pub route: Option<Route>,
    /// Write every stride-th prefix to the CSV [default: 1000].
    #[arg(long)]
    pub stride: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    /// Rule whose law to tabulate: pboys:p, pboysmore:p or doubling [default: pboysmore:1].
    #[arg(long)]
    pub pmf: Option<String>,
    /// Last support point [default: 20].
    #[arg(long)]
    pub jmax: Option<u64>,
    /// Series terms for the doubling constant [default: 1000000].
    #[arg(long)]
    pub terms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    /// Boys ahead at the stop [default: 1].
    #[arg(long)]
    pub p: Option<u32>,
    /// Families per replicate [default: 500].
    #[arg(long)]
    pub n: Option<u64>,
    /// Replicates [default: 1000].
    #[arg(long)]
    pub reps: Option<u64>,
    /// Square-root boundary constant [default: 1].
    #[arg(long)]
    pub c: Option<f64>,
    /// Laplace arguments [default: 0.5,1,2].
    #[arg(long, value_delimiter = ',')]
    pub s: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// Boundary constants [default: 0.01, 0.1..3.0 by 0.1, 6].
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    /// Constants at which to fit the simulated tail [default: none].
    #[arg(long, value_delimiter = ',')]
    pub mc_c: Option<Vec<f64>>,
    /// Families per tail fit [default: 100000].
    #[arg(long)]
    pub mc_families: Option<u64>,
    /// Censoring cap of the tail fits [default: 1000000].
    #[arg(long)]
    pub cap: Option<u64>,
}

#[derive(Debug, Args)]
pub struct LdpArgs {
    #[arg(long)]
    pub p: Option<u32>,
    /// Average family size bound [default: 1].
    #[arg(long)]
    pub c: Option<f64>,
    /// Family counts [default: 64..512 by 32].
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct ChiArgs {
    /// Families [default: 1000000].
    #[arg(long)]
    pub n: Option<u64>,
    /// Censoring cap [default: 10000000].
    #[arg(long)]
    pub cap: Option<u64>,
    /// Series terms [default: 1000000].
    #[arg(long)]
    pub terms: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Results directory [default: the output directory].
    pub dir: Option<PathBuf>,
    /// Print the report as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Minutes available; below 5 the suite runs reduced.
    #[arg(long, default_value_t = 15.0)]
    pub budget: f64,
}

fn flags(cli: &Cli) -> (Option<Kind>, ConfigFile) {
    let mut f = ConfigFile { seed: cli.seed, out_dir: cli.out.clone(), ..Default::default() };
    let kind = match &cli.command {
        Command::Simulate(a) => {
            (f.strategy, f.n, f.cap, f.route, f.stride) = (a.strategy.clone(), a.n, a.cap, a.route, a.stride);
            Kind::Ratio
        }
        Command::Exact(a) => {
            (f.strategy, f.jmax, f.terms) = (a.pmf.clone(), a.jmax, a.terms);
            Kind::Exact
        }
        Command::Limitcheck(a) => {
            (f.p, f.n, f.reps, f.c, f.s_values) = (a.p, a.n, a.reps, a.c, a.s.clone());
            Kind::Limit
        }
        Command::Kappa(a) => {
            (f.c_grid, f.mc_c, f.mc_families, f.cap) = (a.c_grid.clone(), a.mc_c.clone(), a.mc_families, a.cap);
            Kind::Kappa
        }
        Command::Ldp(a) => {
            (f.p, f.c, f.n_grid) = (a.p, a.c, a.n_grid.clone());
            Kind::Ldp
        }
        Command::Chi(a) => {
            (f.n, f.cap, f.terms) = (a.n, a.cap, a.terms);
            Kind::Chi
        }
        Command::Report(_) | Command::VerifyAll(_) => return (None, f),
    };
    (Some(kind), f)
}

fn out_dir(cli: &Cli, file: &ConfigFile) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| file.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn summary(m: &ResultManifest, dir: &std::path::Path) -> String {
    let mut s = format!("{} -> {} [{}]\n", m.command, dir.display(), &m.content_hash[..12]);
    for c in &m.checks {
        s += &format!("  {}  {}  value={:.6e}  {}\n", if c.pass { "PASS" } else { "FAIL" }, c.claim, c.value, c.condition);
    }
    s
}

/// Runs the parsed command and returns what to print.
pub fn execute(cli: &Cli) -> Result<String> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        // A second call in one process fails harmlessly; the first pool stays.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let (kind, overrides) = flags(cli);
    match (&cli.command, kind) {
        (_, Some(kind)) => {
            let cfg = ExperimentConfig::resolve(kind, file, overrides)?;
            let m = run(&cfg)?;
            Ok(summary(&m, &cfg.out_dir.join(kind.command())))
        }
        (Command::Report(a), _) => {
            let dir = a.dir.clone().unwrap_or_else(|| out_dir(cli, &file));
            let r = report::report(&dir)?;
            if a.json {
                Ok(serde_json::to_string_pretty(&r)? + "\n")
            } else {
                Ok(r.to_string())
            }
        }
        (Command::VerifyAll(a), _) => {
            if !(a.budget > 0.0) {
                return Err(Error::Usage("--budget must be positive".into()));
            }
            let dir = out_dir(cli, &file).join("verify-all");
            let results = verify::verify_all(&dir, a.budget, cli.seed.or(file.seed).unwrap_or(42))?;
            let text: String = results.iter().map(|r| r.line() + "\n").collect();
            let failed: Vec<String> = results.iter().filter(|r| !r.pass).map(|r| format!("C{}", r.id)).collect();
            if failed.is_empty() {
                Ok(text)
            } else {
                print!("{text}");
                Err(Error::Quality(format!("criteria failed: {}", failed.join(", "))))
            }
        }
        _ => unreachable!("every experiment command maps to a kind"),
    }
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => 2,
        Error::Integrity(_) => 3,
        Error::Quality(_) => 4,
        _ => 1,
    }
}

/// Parses `args`, runs, prints, and returns the exit code. Failures print
/// `{"error": {"kind": ..., "message": ...}}` to stdout.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = Error::Usage(e.to_string().trim().to_string());
            println!("{}", json!({ "error": { "kind": err.kind(), "message": err.to_string() } }));
            return exit_code(&err);
        }
    };
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(e) => {
            println!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            exit_code(&e)
        }
    }
}
