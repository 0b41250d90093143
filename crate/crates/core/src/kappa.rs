//! Tail exponent of the square-root rule.
//!
//! `P[tau > k] ~ alpha k^(-kappa)` with `kappa(c) = -lambda0(c) / 2`, where
//! `lambda0(c)` is the largest zero in `(-1, 0)` of `lambda -> D_(-lambda)(-c)`.
//! The transform's numerator `e^(-c^2/4) D_(-lambda)(0)` is positive on the
//! whole interval, so its poles are exactly these zeros.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::simulate_batch;
use crate::error::{Error, Result};
use crate::numeric::{least_squares, quantile};
use crate::pcf::{parabolic_cylinder_d, MAX_ARG};
use crate::rng::RngStream;
use crate::strategy::StrategySpec;

/// Resolution of the downward sign scan.
pub const SCAN_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub c: f64,
    pub lambda0: f64,
    pub kappa: f64,
    /// `|D_(-lambda0)(-c)|`.
    pub residual: f64,
    /// Width of the final bisection bracket.
    pub bracket_width: f64,
    /// Smallest value of `e^(-c^2/4) D_(-lambda)(0)` seen on the scanned range.
    pub prefactor_min: f64,
}

fn denominator(lambda: f64, c: f64) -> Result<f64> {
    parabolic_cylinder_d(-lambda, -c)
}

/// Largest zero of `lambda -> D_(-lambda)(-c)` in `(-1, 0)`.
///
/// Scans down from `0` in steps of [`SCAN_STEP`] for the first sign change,
/// so no other zero exists in `(lambda0, 0)` at that resolution, then
/// bisects to adjacent floating-point numbers.
pub fn lambda0(c: f64) -> Result<KappaResult> {
    if !(c.is_finite() && c > 0.0 && c <= MAX_ARG) {
        return Err(Error::Parameter(format!("c must lie in (0, {MAX_ARG}], got {c}")));
    }
    let prefactor = |lambda: f64| -> Result<f64> { Ok((-0.25 * c * c).exp() * parabolic_cylinder_d(-lambda, 0.0)?) };
    let mut hi = 0.0;
    let mut f_hi = denominator(hi, c)?;
    let mut prefactor_min = prefactor(hi)?;
    let steps = (1.0 / SCAN_STEP).round() as usize;
    let mut bracket = None;
    let mut samples = Vec::new();
    for i in 1..=steps {
        let lo = -(i as f64) * SCAN_STEP;
        let f_lo = denominator(lo, c)?;
        prefactor_min = prefactor_min.min(prefactor(lo)?);
        if i % 100 == 0 {
            samples.push((lo, f_lo));
        }
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            bracket = Some((lo, f_lo, hi, f_hi));
            break;
        }
        hi = lo;
        f_hi = f_lo;
    }
    let Some((mut lo, mut f_lo, mut hi, mut f_hi)) = bracket else {
        return Err(Error::Solver(format!("no sign change of D_(-lambda)(-{c}) on (-1, 0); samples {samples:?}")));
    };
    if !(prefactor_min > 0.0) {
        return Err(Error::Solver(format!("transform numerator vanishes on the bracket for c={c}")));
    }
    while f_lo != 0.0 && f_hi != 0.0 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = denominator(mid, c)?;
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    let (root, residual) = if f_lo.abs() <= f_hi.abs() { (lo, f_lo.abs()) } else { (hi, f_hi.abs()) };
    if !(-1.0 < root && root < 0.0) {
        return Err(Error::Solver(format!("root {root} for c={c} escaped (-1, 0)")));
    }
    Ok(KappaResult {
        c,
        lambda0: root,
        kappa: -0.5 * root,
        residual,
        bracket_width: hi - lo,
        prefactor_min,
    })
}

/// `kappa` on a grid of `c` values.
pub fn kappa_grid(cs: &[f64]) -> Result<Vec<KappaResult>> {
    cs.iter().map(|&c| lambda0(c)).collect()
}

/// CSV with columns `c,lambda0,kappa,residual`.
pub fn write_kappa_csv<W: Write>(rows: &[KappaResult], mut out: W) -> std::io::Result<()> {
    writeln!(out, "c,lambda0,kappa,residual")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e},{:e}", r.c, r.lambda0, r.kappa, r.residual)?;
    }
    Ok(())
}

/// Monte Carlo estimate of the tail exponent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub c: f64,
    pub families: u64,
    pub cap: u64,
    pub censored: u64,
    pub kappa_hat: f64,
    /// Percentile bootstrap interval for `kappa_hat`.
    pub ci_low: f64,
    pub ci_high: f64,
    /// `exp(intercept)` of the log-log fit.
    pub alpha_hat: f64,
    /// `(k, P[tau > k])` at the fitted points.
    pub survival: Vec<(u64, f64)>,
}

impl TailFit {
    pub fn ci_half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }

    /// True if `kappa` lies within the bootstrap interval.
    pub fn covers(&self, kappa: f64) -> bool {
        self.ci_low <= kappa && kappa <= self.ci_high
    }
}

/// Settings of [`tail_exponent_mc`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFitOptions {
    pub k_low: f64,
    pub k_high: f64,
    pub points: usize,
    pub bootstrap: usize,
    /// Two-sided coverage of the interval.
    pub level: f64,
    /// Fewest families that must survive past `k_high`.
    pub min_tail: u64,
}

impl Default for TailFitOptions {
    fn default() -> Self {
        Self { k_low: 1e3, k_high: 1e5, points: 21, bootstrap: 200, level: 0.95, min_tail: 100 }
    }
}

fn fit_loglog(ks: &[f64], surv: &[f64]) -> (f64, f64) {
    let x: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let y: Vec<f64> = surv.iter().map(|s| s.ln()).collect();
    let beta = least_squares(&[x, vec![1.0; ks.len()]], &y).expect("distinct abscissae");
    (-beta[0], beta[1].exp())
}

/// Fits `ln P[tau > k]` against `ln k` on log-spaced `k` for the square-root
/// rule. Censored families count as surviving past every `k < cap`.
pub fn tail_exponent_mc(c: f64, families: u64, cap: u64, seed: u64, opts: &TailFitOptions) -> Result<TailFit> {
    if families < 1000 {
        return Err(Error::Parameter("use at least 1000 families".into()));
    }
    if (cap as f64) <= opts.k_high || opts.points < 3 || opts.k_low <= 0.0 || opts.k_high <= opts.k_low {
        return Err(Error::Parameter("need 0 < k_low < k_high < cap and at least 3 points".into()));
    }
    let spec = StrategySpec::SqrtBoundary(c);
    let batch = simulate_batch(&spec, families, seed, cap)?;
    let ratio = opts.k_high / opts.k_low;
    let ks: Vec<u64> = (0..opts.points)
        .map(|i| (opts.k_low * ratio.powf(i as f64 / (opts.points - 1) as f64)).round() as u64)
        .collect();
    // bin[i] = number of grid points strictly below tau_i, so family i survives past ks[..bin].
    let bins: Vec<usize> = batch.outcomes.iter().map(|o| ks.partition_point(|&k| k < o.tau)).collect();
    let survival_of = |counts: &[u64]| -> Vec<f64> {
        let mut above = vec![0u64; ks.len()];
        let mut acc = 0;
        for j in (0..ks.len()).rev() {
            acc += counts[j + 1];
            above[j] = acc;
        }
        above.iter().map(|&a| a as f64 / families as f64).collect()
    };
    let mut counts = vec![0u64; ks.len() + 1];
    for &b in &bins {
        counts[b] += 1;
    }
    let surv = survival_of(&counts);
    let tail = (surv[ks.len() - 1] * families as f64).round() as u64;
    if tail < opts.min_tail {
        return Err(Error::Quality(format!(
            "only {tail} of {families} families survive past k = {}; need {}",
            opts.k_high, opts.min_tail
        )));
    }
    let kf: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
    let (kappa_hat, alpha_hat) = fit_loglog(&kf, &surv);

    let mut rng = RngStream::new(seed, u64::MAX).aux();
    let mut boot = Vec::with_capacity(opts.bootstrap);
    let n = bins.len();
    for _ in 0..opts.bootstrap {
        let mut counts = vec![0u64; ks.len() + 1];
        for _ in 0..n {
            counts[bins[rng.random_range(0..n)]] += 1;
        }
        let s = survival_of(&counts);
        if s.iter().all(|&v| v > 0.0) {
            boot.push(fit_loglog(&kf, &s).0);
        }
    }
    boot.sort_by(f64::total_cmp);
    let tail_prob = 0.5 * (1.0 - opts.level);
    Ok(TailFit {
        c,
        families,
        cap,
        censored: batch.censored(),
        kappa_hat,
        ci_low: quantile(&boot, tail_prob),
        ci_high: quantile(&boot, 1.0 - tail_prob),
        alpha_hat,
        survival: ks.iter().copied().zip(surv).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `(c, lambda0)` from 30-digit root finding on `D_(-lambda)(-c)`.
    const REFERENCE: &[(f64, f64)] = &[
        (0.01, -0.99204068),
        (0.1, -0.92215708),
        (0.5, -0.64883549),
        (1.0, -0.38823829),
        (2.0, -0.09727460),
        (3.0, -0.01160570),
    ];

    #[test]
    fn roots_match_reference() {
        for &(c, want) in REFERENCE {
            let r = lambda0(c).unwrap();
            assert!((r.lambda0 - want).abs() < 1e-8, "c={c}: {} vs {want}", r.lambda0);
            assert!(r.residual < 1e-10, "c={c}: residual {}", r.residual);
            assert!(r.prefactor_min > 0.0);
            assert!(r.bracket_width < 1e-15);
            assert_eq!(r.kappa, -0.5 * r.lambda0);
        }
    }

    #[test]
    fn kappa_is_decreasing_with_correct_limits() {
        let grid: Vec<f64> = (1..=30).map(|i| i as f64 / 10.0).collect();
        let rows = kappa_grid(&grid).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].kappa < w[0].kappa, "c={} -> {}", w[0].c, w[1].c);
        }
        for r in &rows {
            assert!(r.kappa > 0.0 && r.kappa < 0.5);
            assert!(r.residual < 1e-10);
        }
        assert!(lambda0(0.01).unwrap().kappa > 0.45);
        let k6 = lambda0(6.0).unwrap();
        assert!(k6.kappa < 0.05 && k6.kappa > 0.0 && k6.residual < 1e-10, "{k6:?}");
    }

    #[test]
    fn rejects_bad_c() {
        assert!(lambda0(0.0).is_err());
        assert!(lambda0(-1.0).is_err());
        assert!(lambda0(f64::NAN).is_err());
    }

    #[test]
    fn csv_grid() {
        let mut buf = Vec::new();
        write_kappa_csv(&kappa_grid(&[1.0]).unwrap(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("c,lambda0,kappa,residual\n1,"));
    }

    #[test]
    fn loglog_fit_recovers_a_power_law() {
        let ks: Vec<f64> = (0..21).map(|i| 1e3 * 100f64.powf(i as f64 / 20.0)).collect();
        let s: Vec<f64> = ks.iter().map(|k| 0.7 * k.powf(-0.3)).collect();
        let (kappa, alpha) = fit_loglog(&ks, &s);
        assert!((kappa - 0.3).abs() < 1e-12 && (alpha - 0.7).abs() < 1e-10);
    }

    #[test]
    fn small_tail_fit_is_sane() {
        let opts = TailFitOptions { k_low: 100.0, k_high: 1e4, ..Default::default() };
        let fit = tail_exponent_mc(1.0, 20_000, 100_000, 3, &opts).unwrap();
        for w in fit.survival.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
        assert!(fit.ci_low <= fit.kappa_hat && fit.kappa_hat <= fit.ci_high);
        assert!((fit.kappa_hat - 0.194).abs() < 0.05, "{fit:?}");
        let strict = TailFitOptions { min_tail: 1_000_000, ..opts };
        assert!(matches!(tail_exponent_mc(1.0, 20_000, 100_000, 3, &strict), Err(Error::Quality(_))));
    }
}
