//! Stop at the first boy: the pooled sex ratio still tends to 1, while the
//! per-family girls fraction averages to 1 - log 2.

use sexratio::engine::simulate_batch;
use sexratio::exact::{expected_f_first_boy, ExactConstants};
use sexratio::limits::ratio_series;
use sexratio::strategy::StrategySpec;

fn main() -> sexratio::Result<()> {
    let spec: StrategySpec = "pboys:1".parse()?;
    let batch = simulate_batch(&spec, 200_000, 1, 1_000_000)?;
    let series = ratio_series(&batch)?;
    println!("{:>8} {:>10} {:>10} {:>12}", "n", "R_n", "F_n", "bar F_n");
    for n in [10, 100, 1_000, 10_000, 100_000, 200_000] {
        let pt = series.at(n).expect("n within the batch");
        println!("{:>8} {:>10.5} {:>10.5} {:>12.5}", n, pt.r.unwrap_or(f64::NAN), pt.f.unwrap_or(f64::NAN), pt.bar_f.unwrap_or(f64::NAN));
    }
    let limit = ExactConstants::get().first_boy_fraction;
    println!("E[F_n] at n = 1000: {:.6}", expected_f_first_boy(1000)?);
    println!("limit of bar F_n: {:.6} ({})", limit.value, limit.expression);
    Ok(())
}
