//! Girls total over n^2 under "p boys more" tends to a one-sided stable law
//! with Laplace transform exp(-p sqrt(2s)).

use num_complex::Complex64;
use sexratio::gof::ks_one_sample;
use sexratio::limits::{laplace_limit_check, stable_cdf, stable_density, stable_limit_samples};

fn main() -> sexratio::Result<()> {
    let samples = stable_limit_samples(1, 500, 2000, 5)?;
    let ks = ks_one_sample(&samples, |x| if x > 0.0 { stable_cdf(1.0, x).unwrap_or(0.0) } else { 0.0 })?;
    println!("KS against the stable law: D = {:.4}, p = {:.3}", ks.d, ks.p_value);
    for x in [0.1, 0.5, 1.0, 5.0, 50.0] {
        println!("x = {x:>5}: density {:.6}, cdf {:.6}", stable_density(1.0, x)?, stable_cdf(1.0, x)?);
    }
    for n in [10, 100, 1000] {
        let gap = laplace_limit_check(1, Complex64::new(1.0, 0.0), n)?;
        println!("|E exp(-s G/n^2) - exp(-sqrt 2)| at n = {n}: {gap:.3e}");
    }
    Ok(())
}
