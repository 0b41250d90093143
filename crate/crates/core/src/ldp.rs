//! Large deviations of the pooled girls count under "p boys more".
//!
//! `P[X_1 + ... + X_n <= c n]` decays like `rho(p, c)^n` up to a factor
//! polynomial in `n`, with
//! `rho = ((p+2c)/(2(p+c)))^p ((p+2c)^2/(4c(p+c)))^c = exp(-eta(z_hat))`,
//! `eta(z) = -p ln f(z) + c ln z` and saddle point `z_hat = 4c(p+c)/(p+2c)^2`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::pmf_girls_p_boys_more;
use crate::numeric::{least_squares, CompensatedSum};

fn check_pc(p: u32, c: f64) -> Result<()> {
    if p == 0 {
        return Err(Error::Parameter("p must be at least 1".into()));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Parameter(format!("c must be positive, got {c}")));
    }
    Ok(())
}

/// `ln rho(p, c)`.
pub fn ln_rho(p: u32, c: f64) -> Result<f64> {
    check_pc(p, c)?;
    let p = p as f64;
    Ok(p * ((p + 2.0 * c) / (2.0 * (p + c))).ln() + c * ((p + 2.0 * c).powi(2) / (4.0 * c * (p + c))).ln())
}

pub fn rho(p: u32, c: f64) -> Result<f64> {
    Ok(ln_rho(p, c)?.exp())
}

pub fn saddle_z(p: u32, c: f64) -> Result<f64> {
    check_pc(p, c)?;
    let p = p as f64;
    Ok(4.0 * c * (p + c) / (p + 2.0 * c).powi(2))
}

/// `eta(z) = -p ln f(z) + c ln z` for `0 < z < 1`.
pub fn eta(p: u32, c: f64, z: f64) -> Result<f64> {
    check_pc(p, c)?;
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::Domain(format!("eta needs 0 < z < 1, got {z}")));
    }
    // f(z) = 1 / (1 + sqrt(1 - z)) on the real segment.
    Ok(p as f64 * (1.0 - z).sqrt().ln_1p() + c * z.ln())
}

/// `eta'(z)`.
pub fn eta_prime(p: u32, c: f64, z: f64) -> Result<f64> {
    check_pc(p, c)?;
    if !(z > 0.0 && z < 1.0) {
        return Err(Error::Domain(format!("eta needs 0 < z < 1, got {z}")));
    }
    let r = (1.0 - z).sqrt();
    Ok(-(p as f64) / (2.0 * r * (1.0 + r)) + c / z)
}

/// `P[X_1 + ... + X_n <= c n]`, with its logarithm for when it underflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumProb {
    pub n: u64,
    pub prob: f64,
    pub ln_prob: f64,
}

/// Vector of masses times `2^exponent`.
struct Scaled {
    v: Vec<f64>,
    exponent: i64,
}

impl Scaled {
    fn renormalize(&mut self) {
        let max = self.v.iter().fold(0.0f64, |m, &x| m.max(x));
        if max > 0.0 {
            // Rescale by an exact power of two so dyadic values stay exact.
            let shift = max.log2().floor() as i64;
            let factor = (-(shift as f64)).exp2();
            for x in &mut self.v {
                *x *= factor;
            }
            self.exponent += shift;
        }
    }

    fn convolve(&self, other: &Scaled, len: usize) -> Scaled {
        let mut v = vec![0.0; len];
        for (i, &a) in self.v.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.v[..len - i].iter().enumerate() {
                v[i + j] += a * b;
            }
        }
        let mut out = Scaled { v, exponent: self.exponent + other.exponent };
        out.renormalize();
        out
    }
}

/// Exact event probability by convolving `n` copies of the girls law,
/// truncated at `floor(c n)` (mass above the threshold can never return).
pub fn exact_prob_sum_le(p: u32, c: f64, n: u64) -> Result<SumProb> {
    check_pc(p, c)?;
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let m = (c * n as f64).floor() as u64;
    if m >= 1 << 14 {
        return Err(Error::Resource(format!("convolution of size n={n}, cn={m} is too large")));
    }
    let len = m as usize + 1;
    let pmf = pmf_girls_p_boys_more(p, m)?;
    let mut base = Scaled { v: pmf.masses, exponent: 0 };
    base.renormalize();
    // Binary powering of the truncated law.
    let mut acc: Option<Scaled> = None;
    let mut k = n;
    loop {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => Scaled { v: base.v.clone(), exponent: base.exponent },
                Some(a) => a.convolve(&base, len),
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = base.convolve(&base, len);
    }
    let acc = acc.expect("n >= 1");
    let scaled = acc.v.iter().copied().collect::<CompensatedSum>().value();
    let ln_prob = scaled.ln() + acc.exponent as f64 * std::f64::consts::LN_2;
    let prob = if acc.exponent > -1000 { scaled * (acc.exponent as f64).exp2() } else { ln_prob.exp() };
    Ok(SumProb { n, prob, ln_prob })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: u64,
    pub prob: f64,
    pub ln_prob: f64,
    /// `-ln P_n / n`.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpResult {
    pub p: u32,
    pub c: f64,
    pub rho: f64,
    pub z_hat: f64,
    /// `-ln rho`, the rate the fit should recover.
    pub target_rate: f64,
    pub exact_probs: Vec<RatePoint>,
    /// Coefficient of `n` in the fit of `-ln P_n` on `(n, ln n, 1)`.
    pub fitted_rate: f64,
    /// Coefficient of `ln n` in the same fit.
    pub log_coefficient: f64,
    /// Slope of a plain straight-line fit of `-ln P_n` on `n`.
    pub linear_slope: f64,
    /// Residuals of the three-term fit.
    pub residuals: Vec<f64>,
}

impl LdpResult {
    pub fn relative_error(&self) -> f64 {
        (self.fitted_rate - self.target_rate).abs() / self.target_rate
    }

    /// CSV with columns `n,prob,ln_prob,rate`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,prob,ln_prob,rate")?;
        for r in &self.exact_probs {
            writeln!(out, "{},{:e},{:e},{:e}", r.n, r.prob, r.ln_prob, r.rate)?;
        }
        Ok(())
    }
}

/// Fits the decay rate of `P_n` over `n_grid`.
///
/// `-ln P_n = n (-ln rho) + b ln n + O(1)`: the saddle-point prefactor
/// contributes a `ln n` term. A straight line through `-ln P_n` absorbs
/// that term into its slope, so the rate is read off a fit on
/// `(n, ln n, 1)`; the straight-line slope is reported alongside.
pub fn rate_fit(p: u32, c: f64, n_grid: &[u64]) -> Result<LdpResult> {
    check_pc(p, c)?;
    if n_grid.len() < 4 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("n_grid must be strictly increasing with at least 4 points".into()));
    }
    let mut exact_probs = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let s = exact_prob_sum_le(p, c, n)?;
        exact_probs.push(RatePoint { n, prob: s.prob, ln_prob: s.ln_prob, rate: -s.ln_prob / n as f64 });
    }
    let ns: Vec<f64> = n_grid.iter().map(|&n| n as f64).collect();
    let logs: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let ones = vec![1.0; ns.len()];
    let y: Vec<f64> = exact_probs.iter().map(|r| -r.ln_prob).collect();
    let three = least_squares(&[ns.clone(), logs.clone(), ones.clone()], &y)
        .ok_or_else(|| Error::Solver("singular rate regression".into()))?;
    let line = least_squares(&[ns.clone(), ones], &y).ok_or_else(|| Error::Solver("singular rate regression".into()))?;
    let residuals = (0..ns.len()).map(|i| y[i] - (three[0] * ns[i] + three[1] * logs[i] + three[2])).collect();
    Ok(LdpResult {
        p,
        c,
        rho: rho(p, c)?,
        z_hat: saddle_z(p, c)?,
        target_rate: -ln_rho(p, c)?,
        exact_probs,
        fitted_rate: three[0],
        log_coefficient: three[1],
        linear_slope: line[0],
        residuals,
    })
}

/// `from, from + step, ..., to`.
pub fn n_grid(from: u64, to: u64, step: u64) -> Vec<u64> {
    (from..=to).step_by(step.max(1) as usize).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::enumerate_paths_oracle;
    use crate::strategy::StrategySpec;

    #[test]
    fn closed_forms() {
        assert!((rho(1, 1.0).unwrap() - 27.0 / 32.0).abs() < 1e-15);
        assert!((saddle_z(1, 1.0).unwrap() - 8.0 / 9.0).abs() < 1e-15);
        for p in 1..=3 {
            let mut prev = 0.0;
            for c in [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1000.0] {
                let r = rho(p, c).unwrap();
                assert!(r > 0.0 && r < 1.0 && r > prev, "p={p} c={c}");
                prev = r;
                let z = saddle_z(p, c).unwrap();
                assert!(z > 0.0 && z < 1.0);
                assert!(((-eta(p, c, z).unwrap()).exp() - r).abs() < 1e-12);
            }
            // 1 - rho is about p^2 / (4c) for large c.
            assert!(1.0 - prev < 3e-3);
        }
        assert!(eta(1, 1.0, 1.0).is_err());
        assert!(rho(0, 1.0).is_err());
    }

    #[test]
    fn saddle_is_stationary_and_a_real_maximum() {
        for (p, c) in [(1u32, 1.0), (2, 0.5), (3, 4.0)] {
            let z = saddle_z(p, c).unwrap();
            let h = 1e-6;
            let e = |x: f64| eta(p, c, x).unwrap();
            let d1 = (e(z + h) - e(z - h)) / (2.0 * h);
            assert!(d1.abs() < 1e-8, "p={p} c={c}: {d1}");
            assert!(eta_prime(p, c, z).unwrap().abs() < 1e-12);
            let off = 0.5 * z;
            let numeric = (e(off + h) - e(off - h)) / (2.0 * h);
            assert!((eta_prime(p, c, off).unwrap() - numeric).abs() < 1e-7);
            // On the real segment the saddle is a maximum: z^(-c) f(z)^p is
            // minimised there, which is the Chernoff bound's optimal point.
            let d2 = (e(z + 1e-4) - 2.0 * e(z) + e(z - 1e-4)) / 1e-8;
            assert!(d2 < 0.0, "p={p} c={c}: {d2}");
        }
    }

    #[test]
    fn small_cases() {
        assert_eq!(exact_prob_sum_le(1, 0.5, 1).unwrap().prob, 0.5);
        assert_eq!(exact_prob_sum_le(1, 1.0, 1).unwrap().prob, 0.625);
    }

    #[test]
    fn dp_matches_path_enumeration_exactly() {
        // The pooled girls of n "one boy more" families are the girls of "n boys more".
        for n in 1..=3u64 {
            for c in [0.5, 1.0, 2.0, 3.0] {
                let m = (c * n as f64).floor() as u64;
                let len = n + 2 * m;
                if len > 24 {
                    continue;
                }
                let e = enumerate_paths_oracle(&StrategySpec::PBoysMore(n as u32), len as u32).unwrap();
                let exact = (0..=m as u32).fold(crate::exact::Dyadic::ZERO, |a, j| a.checked_add(e.girls_mass(j)).unwrap());
                assert_eq!(exact_prob_sum_le(1, c, n).unwrap().prob, exact.to_f64(), "n={n} c={c}");
            }
        }
    }

    #[test]
    fn dp_matches_simulation() {
        use crate::rng::RngStream;
        use crate::sampler::girls_p_boys_more;
        let exact = exact_prob_sum_le(1, 1.0, 8).unwrap().prob;
        let reps = 1_000_000u64;
        let mut rng = RngStream::new(11, 0).aux();
        let hits = (0..reps).filter(|_| girls_p_boys_more(&mut rng, 8).is_some_and(|g| g <= 8)).count();
        let freq = hits as f64 / reps as f64;
        let se = (exact * (1.0 - exact) / reps as f64).sqrt();
        assert!((freq - exact).abs() < 3.0 * se, "{freq} vs {exact}");
    }

    #[test]
    fn underflow_is_handled() {
        let s = exact_prob_sum_le(1, 1.0, 2048).unwrap();
        assert!(s.prob > 0.0 && s.ln_prob < -340.0);
        assert!((s.ln_prob - s.prob.ln()).abs() < 1e-9);
    }

    #[test]
    fn rate_recovers_closed_form() {
        let grid = n_grid(64, 512, 32);
        let r = rate_fit(1, 1.0, &grid).unwrap();
        assert!((r.target_rate - (32.0f64 / 27.0).ln()).abs() < 1e-15);
        assert!(r.relative_error() < 0.01, "{} vs {}", r.fitted_rate, r.target_rate);
        // Probabilities fall and the per-n rates approach the limit from above.
        for w in r.exact_probs.windows(2) {
            assert!(w[1].prob < w[0].prob);
            assert!(w[1].rate < w[0].rate && w[1].rate > r.target_rate);
        }
        let trimmed = rate_fit(1, 1.0, &grid[1..]).unwrap();
        assert!((trimmed.fitted_rate / r.fitted_rate - 1.0).abs() < 0.005);
        // A straight line absorbs the log term and misses by more.
        assert!((r.linear_slope - r.target_rate).abs() > (r.fitted_rate - r.target_rate).abs());
    }

    #[test]
    fn generous_threshold_is_nearly_certain() {
        let r = rate_fit(1, 50.0, &[4, 8, 16, 32]).unwrap();
        assert!(r.exact_probs.iter().all(|x| x.prob > 0.5 && x.rate < 0.05));
        assert!(r.fitted_rate.abs() < 0.02 && r.rho > 0.99, "{r:?}");
    }
}
