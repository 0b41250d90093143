//! Under "p boys more" the scaled girls total converges to a chi-squared
//! law with one degree of freedom.

use sexratio::gof::ks_one_sample;
use sexratio::limits::{chi2_1_cdf, chi2_1_quantile, chi2_limit_samples};
use sexratio::numeric::median;

fn main() -> sexratio::Result<()> {
    let samples = chi2_limit_samples(1, 500, 2000, 11)?;
    let ks = ks_one_sample(&samples, chi2_1_cdf)?;
    println!("n = 500, 2000 replicates");
    println!("sample median {:.4}, chi-squared median {:.4}", median(&samples), chi2_1_quantile(0.5)?);
    println!("KS D = {:.4}, p = {:.3}", ks.d, ks.p_value);
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    println!("{:>6} {:>10} {:>10}", "q", "sample", "limit");
    for q in [0.1, 0.25, 0.5, 0.75, 0.9, 0.99] {
        println!("{:>6} {:>10.4} {:>10.4}", q, sexratio::numeric::quantile(&sorted, q), chi2_1_quantile(q)?);
    }
    Ok(())
}
