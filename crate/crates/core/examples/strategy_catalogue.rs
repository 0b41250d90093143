//! Every built-in stopping rule with its termination class and a short
//! simulated summary.

use sexratio::engine::simulate_batch;
use sexratio::strategy::StrategySpec;

fn main() -> sexratio::Result<()> {
    let rules = ["pboys:1", "pboys:3", "pboysmore:1", "pboysmore:2", "sqrt:1", "girlsbound:sqrt:1", "childbound:loglog:0.5", "doubling"];
    println!("{:<22} {:<22} {:>10} {:>10} {:>9}", "rule", "terminates", "girls", "boys", "censored");
    for text in rules {
        let spec: StrategySpec = text.parse()?;
        let batch = simulate_batch(&spec, 20_000, 4, 100_000)?;
        let girls: u64 = batch.outcomes.iter().map(|o| o.girls).sum();
        let boys: u64 = batch.outcomes.iter().map(|o| o.boys).sum();
        println!("{:<22} {:<22} {:>10} {:>10} {:>9}", spec.to_string(), format!("{:?}", spec.finiteness_class()), girls, boys, batch.censored());
    }
    Ok(())
}
