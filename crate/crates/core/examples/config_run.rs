//! Runs an experiment from TOML through the harness and re-verifies the
//! written manifest.

use sexratio::harness::manifest::verify_dir;
use sexratio::harness::{run, ConfigFile, ExperimentConfig, Kind};

fn main() -> sexratio::Result<()> {
    let out = std::env::temp_dir().join("sexratio-example");
    let file = ConfigFile::parse(&format!("strategy = \"pboys:2\"\nn = 50000\nseed = 3\nout_dir = {:?}\n", out.display().to_string()))?;
    let flags = ConfigFile { stride: Some(5000), ..Default::default() };
    let cfg = ExperimentConfig::resolve(Kind::Ratio, file, flags)?;
    let manifest = run(&cfg)?;
    for check in &manifest.checks {
        println!("{} {}: {:.6} ({})", if check.pass { "PASS" } else { "FAIL" }, check.claim, check.value, check.condition);
    }
    let again = verify_dir(&out.join("simulate"))?;
    println!("{} artifacts, content hash {}", again.artifacts.len(), again.content_hash);
    Ok(())
}
