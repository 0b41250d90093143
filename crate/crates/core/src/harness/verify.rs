//! The ten acceptance criteria, runnable from the command line.
//!
//! A reduced run divides family and replicate counts by ten where the
//! criterion states no minimum, keeping every tolerance unchanged.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{ArtifactWriter, Check};
use super::run::chi_report;
use crate::engine::simulate_batch;
use crate::error::{Error, Result};
use crate::exact::{self, enumerate_paths_oracle, Dyadic, ExactConstants};
use crate::gof::{ks_one_sample, ks_two_sample};
use crate::kappa::{kappa_grid, lambda0, tail_exponent_mc, TailFitOptions};
use crate::ldp::{eta, eta_prime, exact_prob_sum_le, n_grid, rate_fit, saddle_z};
use crate::limits::{
    chi2_1_cdf, chi2_1_quantile, chi2_limit_samples, laplace_limit_check, ratio_series, replicate_seed,
    sqrt_strategy_scaled_deviation, stable_cdf, stable_density, stable_limit_samples,
};
use crate::numeric::{median, quantile};
use crate::quad::integrate_half_line;
use crate::sampler::{sample_batch, SqrtHybrid};
use crate::strategy::StrategySpec;

/// Budget, in minutes, below which the suite runs reduced.
pub const FULL_SUITE_MINUTES: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scale {
    pub reduced: bool,
}

impl Scale {
    pub const FULL: Scale = Scale { reduced: false };
    pub const REDUCED: Scale = Scale { reduced: true };

    pub fn for_budget(minutes: f64) -> Self {
        Scale { reduced: minutes < FULL_SUITE_MINUTES }
    }

    /// `full`, or a tenth of it but at least `min` when reduced.
    pub fn count(self, full: u64, min: u64) -> u64 {
        if self.reduced {
            (full / 10).max(min)
        } else {
            full
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub pass: bool,
    pub reduced: bool,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl CriterionResult {
    /// One line: id, verdict, title and each check's value and condition.
    pub fn line(&self) -> String {
        let parts: Vec<String> = self
            .checks
            .iter()
            .map(|c| format!("{}={:.4e} [{}]{}", c.claim, c.value, c.condition, if c.pass { "" } else { " FAILED" }))
            .collect();
        format!(
            "C{:<2} {} {}{} ({:.1}s): {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.title,
            if self.reduced { " [reduced]" } else { "" },
            self.seconds,
            parts.join("; ")
        )
    }
}

fn finish(id: u8, title: &str, scale: Scale, start: Instant, checks: Vec<Check>) -> CriterionResult {
    CriterionResult {
        id,
        title: title.into(),
        pass: !checks.is_empty() && checks.iter().all(|c| c.pass),
        reduced: scale.reduced,
        checks,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Exact pmfs against path enumeration up to length 20.
pub fn c1_exact_pmfs(scale: Scale) -> Result<CriterionResult> {
    let start = Instant::now();
    const LEN: u64 = 20;
    let mut checks = Vec::new();
    let mut compare = |label: String, spec: StrategySpec, f: &dyn Fn(u64) -> (u64, Option<Dyadic>, f64), by_tau: bool| -> Result<()> {
        let e = enumerate_paths_oracle(&spec, LEN as u32)?;
        let (mut bad, mut points) = (0u32, 0u32);
        for j in 0..=LEN {
            let (len, exact, float) = f(j);
            if len > LEN {
                continue;
            }
            let oracle = if by_tau { e.tau_mass(j as u32) } else { e.girls_mass(j as u32) };
            points += 1;
            if exact != Some(oracle) || float != oracle.to_f64() {
                bad += 1;
            }
        }
        checks.push(Check::holds(&label, bad as f64, bad == 0 && points > 0, &format!("0 mismatches over {points} points"), "enumeration"));
        Ok(())
    };
    for p in 1..=3u32 {
        let pmf = exact::pmf_girls_p_boys(p, LEN)?;
        compare(format!("pboys:{p}"), StrategySpec::PBoys(p), &|j| (j + p as u64, exact::exact_girls_p_boys(p, j), pmf.mass(j)), false)?;
    }
    for p in 1..=2u32 {
        let pmf = exact::pmf_girls_p_boys_more(p, LEN)?;
        compare(
            format!("pboysmore:{p}"),
            StrategySpec::PBoysMore(p),
            &|j| (2 * j + p as u64, exact::exact_girls_p_boys_more(p, j), pmf.mass(j)),
            false,
        )?;
    }
    let pmf = exact::pmf_chi(LEN)?;
    compare("doubling".into(), StrategySpec::Doubling, &|k| (if k == 0 { LEN + 1 } else { k }, exact::exact_chi(k), pmf.mass(k)), true)?;
    Ok(finish(1, "exact pmfs equal path enumeration", scale, start, checks))
}

/// Averaged fractions and ratios against their closed forms.
pub fn c2_constants(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let start = Instant::now();
    let n = scale.count(1_000_000, 100_000);
    let consts = ExactConstants::get();
    let first = simulate_batch(&StrategySpec::PBoys(1), n, seed, crate::engine::DEFAULT_CAP)?;
    let more = sample_batch(&StrategySpec::PBoysMore(1), n, seed.wrapping_add(1), u64::MAX)?;
    let s1 = ratio_series(&first)?;
    let s2 = ratio_series(&more)?;
    let f1 = s1.last().and_then(|p| p.bar_f).unwrap_or(f64::NAN);
    let f2 = s2.last().and_then(|p| p.bar_f).unwrap_or(f64::NAN);
    let r2 = s2.last().and_then(|p| p.bar_r).unwrap_or(f64::NAN);
    let checks = vec![
        Check::within("barF first boy", f1, consts.first_boy_fraction.value, 0.005, "simulation"),
        Check::within("barF one more", f2, consts.one_more_fraction.value, 0.005, "simulation"),
        Check::within("barR one more", r2, consts.one_more_ratio.value, 0.005, "simulation"),
    ];
    Ok(finish(2, &format!("averaged constants at n = {n}"), scale, start, checks))
}

/// Almost sure convergence of `R_n` with shrinkage across decades.
pub fn c3_convergence(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let start = Instant::now();
    let top = scale.count(1_000_000, 100_000);
    let points = [top / 100, top / 10, top];
    let reps = scale.count(9, 5);
    let mut checks = Vec::new();
    let shrinks = |meds: &[f64]| meds.windows(2).all(|w| w[1] < w[0]);

    // Each replicate yields |R_n - 1| at the three checkpoints.
    let run = |spec: StrategySpec, salt: u64| -> Result<Vec<[f64; 3]>> {
        (0..reps)
            .into_par_iter()
            .map(|r| {
                let b = sample_batch(&spec, top, replicate_seed(seed ^ salt, r), u64::MAX)?;
                let s = ratio_series(&b)?;
                let mut out = [0.0; 3];
                for (o, &n) in out.iter_mut().zip(&points) {
                    *o = (s.at(n).and_then(|p| p.r).ok_or_else(|| Error::Quality("undefined ratio".into()))? - 1.0).abs();
                }
                Ok(out)
            })
            .collect()
    };
    let medians = |runs: &[[f64; 3]]| -> Vec<f64> { (0..3).map(|i| median(&runs.iter().map(|r| r[i]).collect::<Vec<_>>())).collect() };

    let two = run(StrategySpec::PBoys(2), 0x11)?;
    let worst = two.iter().map(|r| r[2]).fold(0.0, f64::max);
    checks.push(Check::below("pboys:2 max |R_n - 1|", worst, 0.01, "simulation"));
    let m = medians(&two);
    checks.push(Check::holds("pboys:2 median shrinks", m[2], shrinks(&m), "strictly decreasing medians", "simulation"));

    let one = run(StrategySpec::PBoysMore(1), 0x22)?;
    let worst = one.iter().map(|r| r[2]).fold(0.0, f64::max);
    checks.push(Check::below("pboysmore:1 max |R_n - 1|", worst, 0.001, "simulation"));
    let bulk = chi2_1_quantile(0.999)?;
    let scaled = one.iter().map(|r| 0.5 * top as f64 * r[2]).fold(0.0, f64::max);
    checks.push(Check::below("pboysmore:1 max n(1 - R_n)/2", scaled, bulk, "simulation"));
    let m = medians(&one);
    checks.push(Check::holds("pboysmore:1 median shrinks", m[2], shrinks(&m), "strictly decreasing medians", "simulation"));

    let kappa = lambda0(1.0)?.kappa;
    let sampler = SqrtHybrid::new(1.0)?;
    let reference = sqrt_strategy_scaled_deviation(&sampler, kappa, 1000, scale.count(2000, 200), seed ^ 0x33)?;
    let mut sorted = reference.deviations();
    sorted.sort_by(f64::total_cmp);
    let q = quantile(&sorted, 0.999);
    let sq: Vec<(f64, [f64; 3])> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let draws = sampler.batch(top, replicate_seed(seed ^ 0x44, r), 0);
            let (mut tau, mut surplus, mut out, mut next) = (0.0, 0.0, [0.0; 3], 0);
            for (i, d) in draws.iter().enumerate() {
                tau += d.tau;
                surplus += d.surplus;
                if i as u64 + 1 == points[next] {
                    out[next] = 2.0 * surplus / (tau + surplus);
                    next += 1;
                }
            }
            (draws.iter().filter(|d| d.censored).count() as f64, out)
        })
        .collect();
    if sq.iter().any(|r| r.0 > 0.0) {
        return Err(Error::Quality("censored square-root families in the convergence check".into()));
    }
    let scaled = sq.iter().map(|r| (top as f64).powf(1.0 / (2.0 * kappa)) * r.1[2]).fold(0.0, f64::max);
    checks.push(Check::below("sqrt:1 max n^(1/(2 kappa)) |R_n - 1| vs 99.9% quantile at n = 1000", scaled, q, "simulation"));
    let m = medians(&sq.iter().map(|r| r.1).collect::<Vec<_>>());
    checks.push(Check::holds("sqrt:1 median shrinks", m[2], shrinks(&m), "strictly decreasing medians", "simulation"));
    Ok(finish(3, &format!("R_n -> 1 over n in {points:?}, {reps} replicates"), scale, start, checks))
}

pub fn c4_chi2(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let start = Instant::now();
    let samples = chi2_limit_samples(1, 500, 1000, seed)?;
    let fit = ks_one_sample(&samples, chi2_1_cdf)?;
    let checks = vec![
        Check::below("KS D", fit.d, 0.08, "simulation"),
        Check::within("median", median(&samples), chi2_1_quantile(0.5)?, 0.05, "simulation"),
    ];
    Ok(finish(4, "np(1 - R_n)/2 -> chi-squared(1)", scale, start, checks))
}

pub fn c5_laplace(scale: Scale) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut checks = Vec::new();
    for s in [0.5, 1.0, 2.0] {
        let gaps: Vec<f64> = [100, 1000, 10_000].iter().map(|&n| laplace_limit_check(1, Complex64::new(s, 0.0), n)).collect::<Result<_>>()?;
        checks.push(Check::below(&format!("gap s={s} n=1e4"), gaps[2], 1e-3, "direct evaluation"));
        checks.push(Check::holds(&format!("gap s={s} decreasing"), gaps[0], gaps[1] < gaps[0] && gaps[2] < gaps[1], "strict", "direct evaluation"));
    }
    Ok(finish(5, "f(exp(-s/n^2))^n -> exp(-sqrt s)", scale, start, checks))
}

pub fn c6_stable(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let start = Instant::now();
    let samples = stable_limit_samples(1, 500, 2000, seed)?;
    let fit = ks_one_sample(&samples, |x| if x > 0.0 { stable_cdf(1.0, x).unwrap_or(0.0) } else { 0.0 })?;
    let density = |x: f64| if x > 0.0 { stable_density(1.0, x).unwrap_or(0.0) } else { 0.0 };
    let total = integrate_half_line(density, 1e-12)?;
    let lt = integrate_half_line(|x| (-x).exp() * density(x), 1e-12)?;
    let checks = vec![
        Check::below("KS D", fit.d, 0.06, "simulation"),
        Check::within("normalization", total, 1.0, 1e-6, "quadrature"),
        Check::within("Laplace transform at s = 1", lt, (-1f64).exp(), 1e-6, "quadrature"),
    ];
    Ok(finish(6, "n^-2 sum X -> stable law", scale, start, checks))
}

pub fn c7_kappa(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let start = Instant::now();
    let grid: Vec<f64> = (1..=30).map(|i| i as f64 / 10.0).collect();
    let rows = kappa_grid(&grid)?;
    let mut checks = vec![
        Check::holds("strictly decreasing on 0.1..3.0", rows.len() as f64, rows.windows(2).all(|r| r[1].kappa < r[0].kappa), "strict", "solver"),
        Check::below("max residual", rows.iter().map(|r| r.residual).fold(0.0, f64::max), 1e-10, "solver"),
    ];
    let small = lambda0(0.01)?;
    let large = lambda0(6.0)?;
    checks.push(Check::holds("kappa(0.01)", small.kappa, small.kappa > 0.45, "value > 0.45", "solver"));
    checks.push(Check::below("kappa(6)", large.kappa, 0.05, "solver"));
    let families = scale.count(100_000, 20_000);
    for (i, c) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let solver = lambda0(c)?.kappa;
        let fit = tail_exponent_mc(c, families, 1_000_000, seed.wrapping_add(i as u64), &TailFitOptions::default())?;
        checks.push(Check::holds(
            &format!("tail fit c={c}"),
            fit.kappa_hat,
            fit.covers(solver) && fit.ci_half_width() <= 0.05,
            &format!("CI [{:.4}, {:.4}] covers {solver:.4}, half-width <= 0.05", fit.ci_low, fit.ci_high),
            "simulation vs solver",
        ));
    }
    Ok(finish(7, &format!("kappa solver; tail fits with {families} families"), scale, start, checks))
}

pub fn c8_ldp(scale: Scale) -> Result<CriterionResult> {
    let start = Instant::now();
    let fit = rate_fit(1, 1.0, &n_grid(64, 512, 32))?;
    let z = saddle_z(1, 1.0)?;
    let mut checks = vec![
        Check::below("relative rate error", fit.relative_error(), 0.01, "exact DP"),
        Check::below("|eta'(z_hat)|", eta_prime(1, 1.0, z)?.abs(), 1e-8, "closed form"),
        Check::below("|exp(-eta(z_hat)) - rho|", ((-eta(1, 1.0, z)?).exp() - fit.rho).abs(), 1e-12, "closed form"),
    ];
    let mut mismatches = 0;
    for n in 1..=3u64 {
        let m = n; // c = 1
        let e = enumerate_paths_oracle(&StrategySpec::PBoysMore(n as u32), (n + 2 * m) as u32)?;
        let exact = (0..=m as u32).try_fold(Dyadic::ZERO, |a, j| a.checked_add(e.girls_mass(j)));
        if exact.map(|d| d.to_f64()) != Some(exact_prob_sum_le(1, 1.0, n)?.prob) {
            mismatches += 1;
        }
    }
    checks.push(Check::holds("DP vs enumeration, n <= 3", mismatches as f64, mismatches == 0, "0 mismatches", "enumeration"));
    Ok(finish(8, "large deviations rate", scale, start, checks))
}

pub fn c9_chi(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let start = Instant::now();
    let families = scale.count(1_000_000, 100_000);
    let r = chi_report(families, 10_000_000, 1_000_000, seed)?;
    let checks = vec![
        Check::within("simulation vs series", r.mc_value, r.series_value, 0.01, "simulation vs series"),
        Check::holds(&format!("matching form {}", r.matches), r.series_value, r.matches != "undecided", "series and simulation agree", "series"),
    ];
    Ok(finish(9, "doubling non-termination", scale, start, checks))
}

pub fn c10_sqrt_scaling(scale: Scale, seed: u64) -> Result<CriterionResult> {
    let start = Instant::now();
    let kappa = lambda0(1.0)?.kappa;
    let sampler = SqrtHybrid::new(1.0)?;
    let a = sqrt_strategy_scaled_deviation(&sampler, kappa, 500, 2000, seed)?;
    let b = sqrt_strategy_scaled_deviation(&sampler, kappa, 1000, 2000, seed.wrapping_add(1))?;
    let fit = ks_two_sample(&a.deviations(), &b.deviations())?;
    let checks = vec![Check::below("two-sample KS D", fit.d, 0.05, "simulation")];
    Ok(finish(10, "n^(1/(2 kappa))(1 - R_n) stabilizes", scale, start, checks))
}

/// Runs every criterion; a criterion that errors counts as failed.
pub fn run_all(scale: Scale, seed: u64) -> Vec<CriterionResult> {
    type Job = Box<dyn Fn() -> Result<CriterionResult>>;
    let jobs: Vec<(u8, Job)> = vec![
        (1, Box::new(move || c1_exact_pmfs(scale))),
        (2, Box::new(move || c2_constants(scale, seed))),
        (3, Box::new(move || c3_convergence(scale, seed.wrapping_add(1)))),
        (4, Box::new(move || c4_chi2(scale, seed.wrapping_add(2)))),
        (5, Box::new(move || c5_laplace(scale))),
        (6, Box::new(move || c6_stable(scale, seed.wrapping_add(3)))),
        (7, Box::new(move || c7_kappa(scale, seed.wrapping_add(4)))),
        (8, Box::new(move || c8_ldp(scale))),
        (9, Box::new(move || c9_chi(scale, seed.wrapping_add(5)))),
        (10, Box::new(move || c10_sqrt_scaling(scale, seed.wrapping_add(6)))),
    ];
    jobs.into_iter()
        .map(|(id, job)| {
            let start = Instant::now();
            job().unwrap_or_else(|e| CriterionResult {
                id,
                title: "error".into(),
                pass: false,
                reduced: scale.reduced,
                checks: vec![Check::holds(&format!("{}: {e}", e.kind()), f64::NAN, false, "no error", "run")],
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Runs the suite into `dir` and writes `verify.json`, `verify.txt` and a manifest.
pub fn verify_all(dir: &Path, budget_minutes: f64, seed: u64) -> Result<Vec<CriterionResult>> {
    let scale = Scale::for_budget(budget_minutes);
    let results = run_all(scale, seed);
    let mut w = ArtifactWriter::create(dir)?;
    w.json("verify.json", &results)?;
    w.text("verify.txt", |out| {
        use std::io::Write;
        for r in &results {
            writeln!(out, "{}", r.line())?;
        }
        Ok(())
    })?;
    w.checks = results
        .iter()
        .map(|r| Check::holds(&format!("criterion {}: {}", r.id, r.title), r.id as f64, r.pass, if scale.reduced { "reduced" } else { "full" }, "verify-all"))
        .collect();
    #[derive(Serialize)]
    struct Echo {
        budget_minutes: f64,
        seed: u64,
        scale: Scale,
    }
    w.finish("verify-all", &Echo { budget_minutes, seed, scale }, None)?;
    Ok(results)
}
