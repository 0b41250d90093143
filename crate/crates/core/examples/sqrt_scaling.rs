//! Square-root rule: the deviation n^(1/(2 kappa)) (1 - R_n) has a
//! nondegenerate law that does not move with n.

use sexratio::gof::ks_two_sample;
use sexratio::kappa::lambda0;
use sexratio::limits::sqrt_strategy_scaled_deviation;
use sexratio::numeric::median;
use sexratio::sampler::SqrtHybrid;

fn main() -> sexratio::Result<()> {
    let c = 1.0;
    let kappa = lambda0(c)?.kappa;
    let sampler = SqrtHybrid::new(c)?;
    let small = sqrt_strategy_scaled_deviation(&sampler, kappa, 500, 500, 21)?;
    let large = sqrt_strategy_scaled_deviation(&sampler, kappa, 1000, 500, 22)?;
    let (a, b) = (small.deviations(), large.deviations());
    println!("c = {c}, kappa = {kappa:.5}");
    println!("median deviation: n = 500 {:.4}, n = 1000 {:.4}", median(&a), median(&b));
    let ks = ks_two_sample(&a, &b)?;
    println!("two-sample KS: D = {:.4}, p = {:.3}", ks.d, ks.p_value);
    let gap = small.replicates.iter().map(|r| r.identity_gap).fold(0.0, f64::max);
    println!("largest gap in the (2cV + 2Z)/U identity: {gap:.2e}");
    Ok(())
}
