//! Tail exponent kappa(c) of the square-root rule, from the largest root of
//! the parabolic cylinder function, checked against a simulated tail.

use sexratio::kappa::{kappa_grid, tail_exponent_mc, TailFitOptions};

fn main() -> sexratio::Result<()> {
    let cs = [0.01, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 6.0];
    println!("{:>6} {:>12} {:>12} {:>10}", "c", "lambda0", "kappa", "residual");
    for r in kappa_grid(&cs)? {
        println!("{:>6} {:>12.8} {:>12.6e} {:>10.1e}", r.c, r.lambda0, r.kappa, r.residual);
    }
    let opts = TailFitOptions { k_high: 1e4, ..Default::default() };
    let fit = tail_exponent_mc(1.0, 20_000, 100_000, 9, &opts)?;
    println!("simulated tail at c = 1: {:.4} [{:.4}, {:.4}]", fit.kappa_hat, fit.ci_low, fit.ci_high);
    Ok(())
}
