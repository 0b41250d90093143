//! Probability that n "p boys more" families have at most c n children
//! each on average decays like rho^n; the fitted rate recovers -log rho.

use sexratio::ldp::{eta_prime, n_grid, rate_fit, rho, saddle_z};

fn main() -> sexratio::Result<()> {
    let (p, c) = (1, 1.0);
    let z = saddle_z(p, c)?;
    println!("saddle z = {z:.12}, eta'(z) = {:.1e}", eta_prime(p, c, z)?);
    println!("rho = {:.12} (27/32 = {:.12})", rho(p, c)?, 27.0 / 32.0);
    let fit = rate_fit(p, c, &n_grid(64, 512, 32))?;
    for pt in fit.exact_probs.iter().step_by(3) {
        println!("n = {:>3}: P = {:.4e}, -ln P / n = {:.6}", pt.n, pt.prob, pt.rate);
    }
    println!("fitted rate {:.6}, target {:.6}, relative error {:.1e}", fit.fitted_rate, fit.target_rate, fit.relative_error());
    println!("plain straight-line slope {:.6}", fit.linear_slope);
    Ok(())
}
