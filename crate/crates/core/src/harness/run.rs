//! Command bodies: compute, write artifacts, record checks.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use super::config::{ExperimentConfig, Kind, Route};
use super::manifest::{ArtifactWriter, Check, ResultManifest};
use crate::engine::{simulate_batch, FamilyBatch};
use crate::error::{Error, Result};
use crate::exact::{self, enumerate_paths_oracle, ExactConstants, Pmf};
use crate::gof::{ks_one_sample, ks_two_sample};
use crate::kappa::{kappa_grid, lambda0, tail_exponent_mc, write_kappa_csv, TailFitOptions};
use crate::ldp::{eta, eta_prime, rate_fit};
use crate::limits::{
    chi2_1_cdf, chi2_1_quantile, chi2_limit_samples, laplace_limit_check, ratio_series, sqrt_strategy_scaled_deviation,
    stable_cdf, stable_limit_samples,
};
use crate::numeric::median;
use crate::sampler::{sample_batch, SqrtHybrid};
use crate::strategy::StrategySpec;

/// Runs one experiment into `out_dir/<command>` and returns its manifest.
///
/// Quality failures still write a manifest, flagged partial, before the
/// error is returned.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultManifest> {
    cfg.validate()?;
    let command = cfg.kind.command();
    let mut w = ArtifactWriter::create(&cfg.out_dir.join(command))?;
    let outcome = match cfg.kind {
        Kind::Ratio => simulate(cfg, &mut w),
        Kind::Exact => exact_cmd(cfg, &mut w),
        Kind::Limit => limitcheck(cfg, &mut w),
        Kind::Kappa => kappa_cmd(cfg, &mut w),
        Kind::Ldp => ldp_cmd(cfg, &mut w),
        Kind::Chi => chi_cmd(cfg, &mut w),
    };
    match outcome {
        Ok(()) => w.finish(command, cfg, None),
        Err(e @ Error::Quality(_)) => {
            w.finish(command, cfg, Some(&e))?;
            Err(e)
        }
        Err(e) => Err(e),
    }
}

fn has_sampler(spec: &StrategySpec) -> bool {
    matches!(spec, StrategySpec::PBoys(_) | StrategySpec::PBoysMore(_) | StrategySpec::Doubling)
}

fn draw_batch(cfg: &ExperimentConfig, spec: &StrategySpec) -> Result<FamilyBatch> {
    match cfg.route {
        Route::Walk => simulate_batch(spec, cfg.n, cfg.seed, cfg.cap),
        Route::Sampler => sample_batch(spec, cfg.n, cfg.seed, cfg.cap),
        Route::Auto if has_sampler(spec) => sample_batch(spec, cfg.n, cfg.seed, cfg.cap),
        Route::Auto => simulate_batch(spec, cfg.n, cfg.seed, cfg.cap),
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}

#[derive(Serialize)]
struct BatchSummary {
    strategy: String,
    route: String,
    families: u64,
    retained: u64,
    censored: u64,
    mean_girls: f64,
    mean_boys: f64,
    r: Option<f64>,
    f: Option<f64>,
    bar_r: Option<f64>,
    bar_f: Option<f64>,
}

fn simulate(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<()> {
    let spec = cfg.spec()?;
    let batch = draw_batch(cfg, &spec)?;
    let series = ratio_series(&batch)?;
    w.censored = batch.censored();
    w.text("ratio_series.csv", |out| series.write_csv(out, cfg.stride))?;
    let kept: Vec<_> = batch.outcomes.iter().filter(|o| !o.censored).collect();
    let last = *series.last().expect("non-empty series");
    let k = kept.len() as f64;
    w.json(
        "summary.json",
        &BatchSummary {
            strategy: spec.to_string(),
            route: batch.manifest.route.clone(),
            families: cfg.n,
            retained: kept.len() as u64,
            censored: batch.censored(),
            mean_girls: kept.iter().map(|o| o.girls as f64).sum::<f64>() / k,
            mean_boys: kept.iter().map(|o| o.boys as f64).sum::<f64>() / k,
            r: last.r,
            f: last.f,
            bar_r: last.bar_r,
            bar_f: last.bar_f,
        },
    )?;
    w.json("seeds.json", &batch.manifest)?;
    let fractions: Vec<f64> = kept.iter().map(|o| o.girls as f64 / o.tau as f64).collect();
    let ratios: Vec<f64> = kept.iter().filter(|o| o.boys > 0).map(|o| o.girls as f64 / o.boys as f64).collect();
    let consts = ExactConstants::get();
    let mut against = |claim: &str, values: &[f64], target: f64| {
        let (mean, se) = mean_and_se(values);
        w.checks.push(Check::within(claim, mean, target, (4.0 * se).max(1e-12), "simulation"));
    };
    match spec {
        StrategySpec::PBoys(1) => against("averaged girls fraction -> 1 - log 2", &fractions, consts.first_boy_fraction.value),
        StrategySpec::PBoysMore(1) => {
            against("averaged girls fraction -> 1 - pi/4", &fractions, consts.one_more_fraction.value);
            against("averaged girls-to-boys ratio -> 2 log 2 - 1", &ratios, consts.one_more_ratio.value);
        }
        _ => {}
    }
    if let StrategySpec::PBoys(p) = spec {
        let girls: Vec<f64> = kept.iter().map(|o| o.girls as f64).collect();
        against("mean girls per family -> p", &girls, p as f64);
    }
    let identity = series
        .points
        .iter()
        .filter_map(|pt| Some((pt.f? - pt.r? / (1.0 + pt.r?)).abs()))
        .fold(0.0, f64::max);
    w.checks.push(Check::holds("F_n = R_n / (1 + R_n) on every prefix", identity, identity == 0.0, "max gap = 0", "simulation"));
    if let Some(r) = last.r {
        w.checks.push(Check::holds("|R_n - 1| at the last n", (r - 1.0).abs(), true, "reported", "simulation"));
    }
    Ok(())
}

fn pmf_for(spec: &StrategySpec, jmax: u64) -> Result<Pmf> {
    match *spec {
        StrategySpec::PBoys(p) => exact::pmf_girls_p_boys(p, jmax),
        StrategySpec::PBoysMore(p) => exact::pmf_girls_p_boys_more(p, jmax),
        StrategySpec::Doubling => exact::pmf_chi(jmax),
        _ => Err(Error::Usage(format!("no closed-form law for {spec}; use pboys, pboysmore or doubling"))),
    }
}

/// Largest enumeration the exact command runs as a cross-check.
const EXACT_CHECK_LEN: u32 = 20;

fn exact_cmd(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<()> {
    let spec = cfg.spec()?;
    let pmf = pmf_for(&spec, cfg.jmax)?;
    w.text("pmf.csv", |out| pmf.write_csv(out))?;
    let chi = exact::prob_chi_infinite(cfg.terms)?;
    #[derive(Serialize)]
    struct Constants {
        constants: ExactConstants,
        chi_series: exact::ChiInfinity,
    }
    w.json("constants.json", &Constants { constants: ExactConstants::get(), chi_series: chi })?;

    let e = enumerate_paths_oracle(&spec, EXACT_CHECK_LEN)?;
    let mut worst = 0.0f64;
    let mut compared = 0u32;
    for (j, mass, _) in pmf.rows() {
        let (exact, len) = match spec {
            StrategySpec::PBoys(p) => (e.girls_mass(j as u32), j + p as u64),
            StrategySpec::PBoysMore(p) => (e.girls_mass(j as u32), 2 * j + p as u64),
            _ => (e.tau_mass(j as u32), j),
        };
        if len <= EXACT_CHECK_LEN as u64 {
            worst = worst.max((mass - exact.to_f64()).abs());
            compared += 1;
        }
    }
    w.checks.push(Check::holds(
        &format!("pmf equals path enumeration on {compared} support points"),
        worst,
        worst == 0.0,
        "max gap = 0",
        "closed form vs enumeration",
    ));
    w.checks.push(Check::below("pmf normalization error", pmf.normalization_error(), 1e-12, "closed form"));
    Ok(())
}

fn limitcheck(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<()> {
    let (p, n, reps, seed) = (cfg.p, cfg.n, cfg.reps, cfg.seed);
    let chi = chi2_limit_samples(p, n, reps, seed)?;
    w.text("chi2_samples.csv", |out| write_column(out, "scaled_deviation", &chi))?;
    let chi_fit = ks_one_sample(&chi, chi2_1_cdf)?;
    let chi_median = chi2_1_quantile(0.5)?;
    w.checks.push(Check::below("KS distance of np(1-R_n)/2 to chi-squared(1)", chi_fit.d, 0.08, "simulation"));
    w.checks.push(Check::within("median of np(1-R_n)/2", median(&chi), chi_median, 0.05, "simulation"));

    let stable = stable_limit_samples(p, n, reps, seed.wrapping_add(1))?;
    w.text("stable_samples.csv", |out| write_column(out, "scaled_girls", &stable))?;
    let pf = p as f64;
    let stable_fit = ks_one_sample(&stable, |x| if x > 0.0 { stable_cdf(pf, x).unwrap_or(0.0) } else { 0.0 })?;
    w.checks.push(Check::below("KS distance of n^-2 sum X to the stable law", stable_fit.d, 0.06, "simulation"));

    let ns = [100u64, 1000, 10_000];
    let mut rows = Vec::new();
    for &s in &cfg.s_values {
        let gaps: Vec<f64> = ns.iter().map(|&m| laplace_limit_check(p, Complex64::new(s, 0.0), m)).collect::<Result<_>>()?;
        let decreasing = gaps.windows(2).all(|g| g[1] < g[0]);
        w.checks.push(Check::holds(
            &format!("Laplace gap at s = {s}, n = 10^4; decreasing in n"),
            gaps[2],
            gaps[2] < 1e-3 && (decreasing || s == 0.0),
            "value < 0.001 and strictly decreasing",
            "direct evaluation",
        ));
        rows.extend(ns.iter().zip(&gaps).map(|(&m, &g)| (s, m, g)));
    }
    w.text("laplace.csv", |out| {
        writeln!(out, "s,n,gap")?;
        for (s, m, g) in &rows {
            writeln!(out, "{s},{m},{g:e}")?;
        }
        Ok(())
    })?;

    let kappa = lambda0(cfg.c)?.kappa;
    let sampler = SqrtHybrid::new(cfg.c)?;
    let a = sqrt_strategy_scaled_deviation(&sampler, kappa, n, reps, seed.wrapping_add(2))?;
    let b = sqrt_strategy_scaled_deviation(&sampler, kappa, 2 * n, reps, seed.wrapping_add(3))?;
    w.censored = a.censored + b.censored;
    w.text("sqrt_scaling_n.csv", |out| a.write_csv(out))?;
    w.text("sqrt_scaling_2n.csv", |out| b.write_csv(out))?;
    let sqrt_fit = ks_two_sample(&a.deviations(), &b.deviations())?;
    w.checks.push(Check::below("KS distance between scaled square-root deviations at n and 2n", sqrt_fit.d, 0.05, "simulation"));
    let worst_identity = a.replicates.iter().chain(&b.replicates).map(|r| r.identity_gap).fold(0.0, f64::max);
    w.checks.push(Check::below("scaled deviation equals its (U, V, Z) expression", worst_identity, 1e-12, "simulation"));

    #[derive(Serialize)]
    struct Fits {
        chi2: crate::gof::GofResult,
        stable: crate::gof::GofResult,
        sqrt_two_sample: crate::gof::GofResult,
        kappa: f64,
    }
    w.json("gof.json", &Fits { chi2: chi_fit, stable: stable_fit, sqrt_two_sample: sqrt_fit, kappa })
}

fn write_column(out: &mut Vec<u8>, name: &str, values: &[f64]) -> std::io::Result<()> {
    writeln!(out, "rep,{name}")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{i},{v:e}")?;
    }
    Ok(())
}

fn kappa_cmd(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<()> {
    let rows = kappa_grid(&cfg.c_grid)?;
    w.text("kappa.csv", |out| write_kappa_csv(&rows, out))?;
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| a.c.total_cmp(&b.c));
    let decreasing = sorted.windows(2).all(|r| r[1].kappa < r[0].kappa);
    w.checks.push(Check::holds("kappa strictly decreasing in c", rows.len() as f64, decreasing, "on the whole grid", "solver"));
    let worst = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    w.checks.push(Check::below("max residual |D_(-lambda0)(-c)|", worst, 1e-10, "solver"));
    let inside = rows.iter().all(|r| r.kappa > 0.0 && r.kappa < 0.5);
    w.checks.push(Check::holds("kappa in (0, 1/2)", rows.len() as f64, inside, "on the whole grid", "solver"));

    if !cfg.mc_c.is_empty() {
        let mut fits = Vec::new();
        for (i, &c) in cfg.mc_c.iter().enumerate() {
            let solver = lambda0(c)?.kappa;
            let fit = tail_exponent_mc(c, cfg.mc_families, cfg.cap, cfg.seed.wrapping_add(i as u64), &TailFitOptions::default())?;
            w.censored += fit.censored;
            w.checks.push(Check::holds(
                &format!("simulated tail exponent at c = {c} covers the solver value"),
                fit.kappa_hat,
                fit.covers(solver) && fit.ci_half_width() <= 0.05,
                &format!("{solver:.5} in [ci_low, ci_high], half-width <= 0.05"),
                "simulation vs solver",
            ));
            fits.push((solver, fit));
        }
        w.text("kappa_mc.csv", |out| {
            writeln!(out, "c,kappa_solver,kappa_hat,ci_low,ci_high,families,cap,censored")?;
            for (s, f) in &fits {
                writeln!(out, "{},{s:e},{:e},{:e},{:e},{},{},{}", f.c, f.kappa_hat, f.ci_low, f.ci_high, f.families, f.cap, f.censored)?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn ldp_cmd(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<()> {
    let fit = rate_fit(cfg.p, cfg.c, &cfg.n_grid)?;
    w.text("ldp.csv", |out| fit.write_csv(out))?;
    w.json("ldp.json", &fit)?;
    w.checks.push(Check::below("relative error of the fitted rate against -log rho", fit.relative_error(), 0.01, "exact DP"));
    let slope = eta_prime(cfg.p, cfg.c, fit.z_hat)?.abs();
    w.checks.push(Check::below("|eta'(z_hat)|", slope, 1e-8, "closed form"));
    let gap = ((-eta(cfg.p, cfg.c, fit.z_hat)?).exp() - fit.rho).abs();
    w.checks.push(Check::below("|exp(-eta(z_hat)) - rho|", gap, 1e-12, "closed form"));
    Ok(())
}

/// Result of the doubling-rule non-termination comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ChiReport {
    pub series_value: f64,
    pub series_bound: f64,
    pub series_terms: u64,
    pub mc_value: f64,
    pub mc_se: f64,
    pub families: u64,
    pub cap: u64,
    /// `(expression, value, |value - mc|)` for each candidate closed form.
    pub candidates: Vec<(String, f64, f64)>,
    /// The candidate the series and the simulation agree with.
    pub matches: String,
}

pub fn chi_report(families: u64, cap: u64, terms: u64, seed: u64) -> Result<ChiReport> {
    let series = exact::prob_chi_infinite(terms)?;
    let batch = sample_batch(&StrategySpec::Doubling, families, seed, cap)?;
    let mc = batch.censored() as f64 / families as f64;
    let consts = ExactConstants::get();
    let candidates: Vec<(String, f64, f64)> = [consts.chi_infinity, consts.chi_infinity_rejected]
        .iter()
        .map(|k| (k.expression.split(',').next().unwrap_or(k.expression).to_string(), k.value, (k.value - mc).abs()))
        .collect();
    let best = candidates.iter().min_by(|a, b| a.2.total_cmp(&b.2)).expect("two candidates");
    let series_best = candidates
        .iter()
        .min_by(|a, b| (a.1 - series.value).abs().total_cmp(&(b.1 - series.value).abs()))
        .expect("two candidates");
    let matches = if best.0 == series_best.0 { best.0.clone() } else { "undecided".to_string() };
    Ok(ChiReport {
        series_value: series.value,
        series_bound: series.bound,
        series_terms: terms,
        mc_value: mc,
        mc_se: (mc * (1.0 - mc) / families as f64).sqrt(),
        families,
        cap,
        candidates,
        matches,
    })
}

fn chi_cmd(cfg: &ExperimentConfig, w: &mut ArtifactWriter) -> Result<()> {
    let r = chi_report(cfg.n, cfg.cap, cfg.terms, cfg.seed)?;
    w.censored = (r.mc_value * cfg.n as f64).round() as u64;
    w.json("chi.json", &r)?;
    w.checks.push(Check::within("capped simulation of P[chi = inf] vs series", r.mc_value, r.series_value, 0.01, "simulation vs series"));
    w.checks.push(Check::holds(&format!("closed form matching both: {}", r.matches), r.series_value, r.matches != "undecided", "series and simulation pick the same form", "series"));
    Ok(())
}
