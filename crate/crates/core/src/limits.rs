//! Ratio statistics over batches and the limit laws they obey.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use libm::{erf, erfc};

use crate::engine::FamilyBatch;
use crate::error::{Error, Result};
use crate::exact::pgf_f_complement;
use crate::rng::splitmix64;
use crate::sampler::{sample_batch, SqrtHybrid};
use crate::strategy::StrategySpec;

/// Running ratios after the first `n` families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub n: u64,
    /// Total girls over total boys; `None` while no boy has been born.
    pub r: Option<f64>,
    /// Total girls over total children.
    pub f: Option<f64>,
    /// Average of per-family girls-to-boys ratios; `None` once a family has no boys.
    pub bar_r: Option<f64>,
    pub bar_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub points: Vec<RatioPoint>,
    /// Censored families skipped when forming the series.
    pub censored_excluded: u64,
}

impl RatioSeries {
    /// Point after `n` retained families (1-based).
    pub fn at(&self, n: u64) -> Option<&RatioPoint> {
        n.checked_sub(1).and_then(|i| self.points.get(i as usize))
    }

    pub fn last(&self) -> Option<&RatioPoint> {
        self.points.last()
    }

    /// CSV export of every `stride`-th point plus the last one.
    pub fn write_csv<W: Write>(&self, mut out: W, stride: u64) -> std::io::Result<()> {
        writeln!(out, "n,r,f,bar_r,bar_f")?;
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |v| format!("{v:e}"));
        let stride = stride.max(1);
        let len = self.points.len() as u64;
        for p in &self.points {
            if p.n % stride == 0 || p.n == len {
                writeln!(out, "{},{},{},{},{}", p.n, fmt(p.r), fmt(p.f), fmt(p.bar_r), fmt(p.bar_f))?;
            }
        }
        Ok(())
    }
}

/// Running `R_n`, `F_n` and their per-family averages in one pass.
pub fn ratio_series(batch: &FamilyBatch) -> Result<RatioSeries> {
    if batch.is_empty() {
        return Err(Error::Parameter("empty batch".into()));
    }
    let mut points = Vec::with_capacity(batch.len());
    let (mut girls, mut boys) = (0u128, 0u128);
    let (mut sum_r, mut sum_f) = (0.0f64, 0.0f64);
    let mut all_have_boys = true;
    let mut censored = 0;
    for o in &batch.outcomes {
        if o.censored {
            censored += 1;
            continue;
        }
        girls += o.girls as u128;
        boys += o.boys as u128;
        if o.boys == 0 {
            all_have_boys = false;
        } else {
            sum_r += o.girls as f64 / o.boys as f64;
        }
        sum_f += o.girls as f64 / o.tau as f64;
        let n = points.len() as u64 + 1;
        let r = (boys > 0).then(|| girls as f64 / boys as f64);
        points.push(RatioPoint {
            n,
            r,
            f: r.map(|r| r / (1.0 + r)),
            bar_r: all_have_boys.then(|| sum_r / n as f64),
            bar_f: Some(sum_f / n as f64),
        });
    }
    if points.is_empty() {
        return Err(Error::Quality("every family in the batch is censored".into()));
    }
    Ok(RatioSeries { points, censored_excluded: censored })
}

/// One-sided stable density of index 1/2 with scale `p`.
pub fn stable_density(p: f64, x: f64) -> Result<f64> {
    check_stable(p, x)?;
    Ok(p / (2.0 * (std::f64::consts::PI * x * x * x).sqrt()) * (-p * p / (4.0 * x)).exp())
}

pub fn stable_cdf(p: f64, x: f64) -> Result<f64> {
    check_stable(p, x)?;
    Ok(erfc(p / (2.0 * x.sqrt())))
}

fn check_stable(p: f64, x: f64) -> Result<()> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::Parameter(format!("stable scale must be positive, got {p}")));
    }
    if !(x > 0.0) {
        return Err(Error::Domain(format!("stable law lives on x > 0, got {x}")));
    }
    Ok(())
}

/// Chi-squared cdf with one degree of freedom.
pub fn chi2_1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erf((0.5 * x).sqrt())
    }
}

/// Quantile of chi-squared with one degree of freedom, by bisection on the cdf.
pub fn chi2_1_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("quantile level must lie in (0, 1), got {q}")));
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while chi2_1_cdf(hi) < q {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi2_1_cdf(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Master seed of replicate `r`.
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    splitmix64(seed ^ splitmix64(r.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

fn check_reps(n: u64, reps: u64, min_n: u64) -> Result<()> {
    if n < min_n || reps < 100 {
        return Err(Error::Parameter(format!("need n >= {min_n} and reps >= 100, got n = {n}, reps = {reps}")));
    }
    Ok(())
}

/// Total girls of each of `reps` independent batches of `n` families
/// following `pboysmore:p`.
pub fn girls_totals_p_boys_more(p: u32, n: u64, reps: u64, seed: u64) -> Result<Vec<f64>> {
    let spec = StrategySpec::PBoysMore(p);
    spec.validate()?;
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let batch = sample_batch(&spec, n, replicate_seed(seed, r), u64::MAX)?;
            if batch.censored() > 0 {
                return Err(Error::Quality(format!("replicate {r}: family size overflowed u64")));
            }
            Ok(batch.outcomes.iter().map(|o| o.girls as f64).sum())
        })
        .collect()
}

/// Replicates of `np(1 - R_n)/2`, which tends to chi-squared with one degree
/// of freedom under `pboysmore:p`.
pub fn chi2_limit_samples(p: u32, n: u64, reps: u64, seed: u64) -> Result<Vec<f64>> {
    check_reps(n, reps, 100)?;
    let np = n as f64 * p as f64;
    // 1 - R_n = np / (sum X + np) exactly, since every family ends p boys up.
    Ok(girls_totals_p_boys_more(p, n, reps, seed)?
        .into_iter()
        .map(|x| 0.5 * np * np / (x + np))
        .collect())
}

/// Replicates of `n^-2 sum X_k` under `pboysmore:p`, which tends to the
/// stable law with scale `p`.
pub fn stable_limit_samples(p: u32, n: u64, reps: u64, seed: u64) -> Result<Vec<f64>> {
    check_reps(n, reps, 100)?;
    let n2 = (n as f64) * (n as f64);
    Ok(girls_totals_p_boys_more(p, n, reps, seed)?.into_iter().map(|x| x / n2).collect())
}

/// `exp(u) - 1` without cancellation near zero.
fn expm1_complex(u: Complex64) -> Complex64 {
    if u.norm() < 1e-3 {
        // Horner on u (1 + u/2 (1 + u/3 (1 + ...))).
        let mut acc = Complex64::new(1.0, 0.0);
        for k in (2..=8).rev() {
            acc = 1.0 + u / k as f64 * acc;
        }
        u * acc
    } else {
        u.exp() - 1.0
    }
}

/// `|f(exp(-s/n^2))^(pn) - exp(-p sqrt(s))|`.
pub fn laplace_limit_check(p: u32, s: Complex64, n: u64) -> Result<f64> {
    if s.re < 0.0 || !s.re.is_finite() || !s.im.is_finite() {
        return Err(Error::Domain(format!("need Re s >= 0, got {s}")));
    }
    if p == 0 || n == 0 {
        return Err(Error::Parameter("p and n must be at least 1".into()));
    }
    let nn = n as f64;
    let w = -expm1_complex(-s / (nn * nn));
    let lhs = (pgf_f_complement(w).ln() * (p as f64 * nn)).exp();
    let rhs = (-(p as f64) * s.sqrt()).exp();
    Ok((lhs - rhs).norm())
}

/// The pair `(U_n, V_n)` for the square-root rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledSums {
    /// `n^(-1/kappa) sum tau_k`.
    pub u: f64,
    /// `n^(-1/(2 kappa)) sum sqrt(tau_k)`.
    pub v: f64,
    pub kappa: f64,
}

/// One replicate of the square-root rule at `n` families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtReplicate {
    /// `n^(1/(2 kappa)) (1 - R_n)`.
    pub deviation: f64,
    pub sums: ScaledSums,
    /// `n^(-1/(2 kappa)) sum (ceil(c sqrt tau) - c sqrt tau)`.
    pub z: f64,
    /// `2 c V_n / U_n`.
    pub ratio_stat: f64,
    /// Relative gap between `deviation` and its expression through `U_n`, `V_n`, `Z_n`.
    pub identity_gap: f64,
    /// Deviation rescaled with `kappa - 0.01` and `kappa + 0.01`.
    pub deviation_kappa_minus: f64,
    pub deviation_kappa_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqrtScaling {
    pub c: f64,
    pub kappa: f64,
    pub n: u64,
    pub replicates: Vec<SqrtReplicate>,
    pub censored: u64,
    pub families: u64,
}

impl SqrtScaling {
    pub fn deviations(&self) -> Vec<f64> {
        self.replicates.iter().map(|r| r.deviation).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "rep,deviation,u,v,z,ratio_stat,identity_gap,deviation_kappa_minus,deviation_kappa_plus")?;
        for (i, r) in self.replicates.iter().enumerate() {
            writeln!(
                out,
                "{i},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.deviation, r.sums.u, r.sums.v, r.z, r.ratio_stat, r.identity_gap, r.deviation_kappa_minus, r.deviation_kappa_plus
            )?;
        }
        Ok(())
    }
}

/// Largest censored share tolerated by [`sqrt_strategy_scaled_deviation`].
pub const MAX_CENSORED_SHARE: f64 = 1e-3;

/// Replicates of `n^(1/(2 kappa)) (1 - R_n)` under `sqrt:c`, drawn with
/// `sampler`.
pub fn sqrt_strategy_scaled_deviation(sampler: &SqrtHybrid, kappa: f64, n: u64, reps: u64, seed: u64) -> Result<SqrtScaling> {
    check_reps(n, reps, 1)?;
    if !(kappa > 0.01 && kappa < 0.5) {
        return Err(Error::Parameter(format!("kappa must lie in (0.01, 0.5), got {kappa}")));
    }
    let c = sampler.c;
    let nn = n as f64;
    let scale = |k: f64| nn.powf(1.0 / (2.0 * k));
    let runs: Vec<(SqrtReplicate, u64)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let draws = sampler.batch(n, replicate_seed(seed, r), 0);
            let (mut tau, mut root, mut ceil, mut frac, mut cens) = (0.0, 0.0, 0.0, 0.0, 0u64);
            for d in draws.iter() {
                if d.censored {
                    cens += 1;
                    continue;
                }
                tau += d.tau;
                root += d.tau.sqrt();
                ceil += d.surplus;
                frac += d.surplus - c * d.tau.sqrt();
            }
            // 1 - R_n = 2 sum surplus / (sum tau + sum surplus).
            let one_minus_r = 2.0 * ceil / (tau + ceil);
            let h = scale(kappa);
            let u = tau / (h * h);
            let v = root / h;
            let z = frac / h;
            let deviation = h * one_minus_r;
            let via = (2.0 * c * v + 2.0 * z) / (u + c * v / h + z / h);
            let rep = SqrtReplicate {
                deviation,
                sums: ScaledSums { u, v, kappa },
                z,
                ratio_stat: 2.0 * c * v / u,
                identity_gap: ((deviation - via) / deviation).abs(),
                deviation_kappa_minus: scale(kappa - 0.01) * one_minus_r,
                deviation_kappa_plus: scale(kappa + 0.01) * one_minus_r,
            };
            (rep, cens)
        })
        .collect();
    let censored: u64 = runs.iter().map(|r| r.1).sum();
    let families = n * reps;
    if censored as f64 > MAX_CENSORED_SHARE * families as f64 {
        return Err(Error::Quality(format!("{censored} of {families} families censored")));
    }
    Ok(SqrtScaling { c, kappa, n, replicates: runs.into_iter().map(|r| r.0).collect(), censored, families })
}
