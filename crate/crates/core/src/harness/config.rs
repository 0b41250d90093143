//! Experiment configuration: a TOML file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::strategy::StrategySpec;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SEXRATIO_OUT";
/// Output directory when neither a flag, the config file nor the
/// environment names one.
pub const DEFAULT_OUT: &str = "sexratio-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Ratio,
    Limit,
    Kappa,
    Ldp,
    Exact,
    Chi,
}

impl Kind {
    /// Subcommand that runs this kind.
    pub fn command(self) -> &'static str {
        match self {
            Kind::Ratio => "simulate",
            Kind::Limit => "limitcheck",
            Kind::Kappa => "kappa",
            Kind::Ldp => "ldp",
            Kind::Exact => "exact",
            Kind::Chi => "chi",
        }
    }
}

/// How `simulate` draws families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    /// Step-by-step walk for every rule.
    Walk,
    /// Distributional sampler; only for pboys, pboysmore and doubling.
    Sampler,
    /// Sampler where one exists, walk otherwise.
    Auto,
}

/// Every setting a config file may hold. Unset fields fall back to the
/// per-command defaults in [`ExperimentConfig::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub strategy: Option<String>,
    pub n: Option<u64>,
    pub reps: Option<u64>,
    pub seed: Option<u64>,
    pub cap: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub route: Option<Route>,
    pub p: Option<u32>,
    pub c: Option<f64>,
    pub jmax: Option<u64>,
    pub terms: Option<u64>,
    pub stride: Option<u64>,
    pub c_grid: Option<Vec<f64>>,
    pub mc_c: Option<Vec<f64>>,
    pub mc_families: Option<u64>,
    pub n_grid: Option<Vec<u64>>,
    pub s_values: Option<Vec<f64>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("bad config: {e}")))
    }

    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigFile { $($f: self.$f.or(base.$f)),* } };
        }
        pick!(strategy, n, reps, seed, cap, out_dir, route, p, c, jmax, terms, stride, c_grid, mc_c, mc_families, n_grid, s_values)
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub strategy: String,
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
    pub cap: u64,
    pub out_dir: PathBuf,
    pub route: Route,
    pub p: u32,
    pub c: f64,
    pub jmax: u64,
    pub terms: u64,
    pub stride: u64,
    pub c_grid: Vec<f64>,
    pub mc_c: Vec<f64>,
    pub mc_families: u64,
    pub n_grid: Vec<u64>,
    pub s_values: Vec<f64>,
}

/// The c grid of the kappa command: 0.01, 0.1 to 3.0 in steps of 0.1, and 6.
pub fn default_c_grid() -> Vec<f64> {
    let mut g = vec![0.01];
    g.extend((1..=30).map(|i| i as f64 / 10.0));
    g.push(6.0);
    g
}

impl ExperimentConfig {
    /// Defaults for `kind`, then the file, then the flags.
    pub fn resolve(kind: Kind, file: ConfigFile, flags: ConfigFile) -> Result<Self> {
        let merged = flags.over(file);
        let (strategy, n, reps, cap) = match kind {
            Kind::Ratio => ("pboysmore:1", 100_000, 1, 1_000_000),
            Kind::Limit => ("pboysmore:1", 500, 1000, 1_000_000),
            Kind::Kappa => ("sqrt:1", 0, 0, 1_000_000),
            Kind::Ldp => ("pboysmore:1", 0, 0, 0),
            Kind::Exact => ("pboysmore:1", 0, 0, 0),
            Kind::Chi => ("doubling", 1_000_000, 1, 10_000_000),
        };
        let out_dir = merged
            .out_dir
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let cfg = ExperimentConfig {
            kind,
            strategy: merged.strategy.unwrap_or_else(|| strategy.to_string()),
            n: merged.n.unwrap_or(n),
            reps: merged.reps.unwrap_or(reps),
            seed: merged.seed.unwrap_or(42),
            cap: merged.cap.unwrap_or(cap),
            out_dir,
            route: merged.route.unwrap_or(Route::Auto),
            p: merged.p.unwrap_or(1),
            c: merged.c.unwrap_or(1.0),
            jmax: merged.jmax.unwrap_or(20),
            terms: merged.terms.unwrap_or(1_000_000),
            stride: merged.stride.unwrap_or(1000),
            c_grid: merged.c_grid.unwrap_or_else(default_c_grid),
            mc_c: merged.mc_c.unwrap_or_default(),
            mc_families: merged.mc_families.unwrap_or(100_000),
            n_grid: merged.n_grid.unwrap_or_else(|| crate::ldp::n_grid(64, 512, 32)),
            s_values: merged.s_values.unwrap_or_else(|| vec![0.5, 1.0, 2.0]),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn spec(&self) -> Result<StrategySpec> {
        let spec: StrategySpec = self.strategy.parse()?;
        spec.validate()?;
        Ok(spec)
    }

    /// Invalid settings are usage errors.
    pub fn validate(&self) -> Result<()> {
        let usage = |e: Error| Error::Usage(e.to_string());
        self.spec().map_err(usage)?;
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::Usage(what.to_string())) };
        match self.kind {
            Kind::Ratio => {
                need(self.n >= 1, "n must be at least 1")?;
                need(self.cap >= 1, "cap must be at least 1")?;
            }
            Kind::Limit => {
                need(self.n >= 100 && self.reps >= 100, "limitcheck needs n >= 100 and reps >= 100")?;
                need(self.p >= 1, "p must be at least 1")?;
            }
            Kind::Kappa => need(!self.c_grid.is_empty(), "c_grid must not be empty")?,
            Kind::Ldp => need(self.p >= 1 && self.c > 0.0, "ldp needs p >= 1 and c > 0")?,
            Kind::Exact => need(self.jmax >= 1 && self.terms >= 1000, "exact needs jmax >= 1 and terms >= 1000")?,
            Kind::Chi => need(self.n >= 1 && self.cap >= 1 && self.terms >= 1000, "chi needs n, cap >= 1 and terms >= 1000")?,
        }
        Ok(())
    }
}
