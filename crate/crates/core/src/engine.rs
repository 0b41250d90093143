//! Step-exact walk engine.
//!
//! Families are simulated child by child from their own [`RngStream`].
//! Stretches where the rule provably cannot fire are applied a word or a
//! byte at a time; everything near the boundary is walked bit by bit, so the
//! outcome is exactly the first stopping index of the underlying path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{RngStream, StepReader, StepSource};
use crate::strategy::StrategySpec;

pub const DEFAULT_CAP: u64 = 1_000_000;

/// One family's stopped (or censored) walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyOutcome {
    pub tau: u64,
    pub girls: u64,
    pub boys: u64,
    /// The cap was reached before the rule fired; counts are those at the cap.
    pub censored: bool,
}

impl FamilyOutcome {
    pub fn surplus(&self) -> i64 {
        self.boys as i64 - self.girls as i64
    }
}

/// Provenance of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedManifest {
    pub strategy: String,
    pub master_seed: u64,
    pub families: u64,
    pub cap: u64,
    pub censored: u64,
    /// `"walk"` for the step engine, otherwise the name of the sampler.
    pub route: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyBatch {
    pub spec: StrategySpec,
    pub outcomes: Vec<FamilyOutcome>,
    /// `cumulative_children[n - 1] = tau_1 + ... + tau_n`.
    pub cumulative_children: Vec<u64>,
    pub manifest: SeedManifest,
}

impl FamilyBatch {
    pub fn from_outcomes(spec: StrategySpec, outcomes: Vec<FamilyOutcome>, master_seed: u64, cap: u64, route: &str) -> Self {
        let cumulative_children = outcomes
            .iter()
            .scan(0u64, |acc, o| {
                *acc = acc.saturating_add(o.tau);
                Some(*acc)
            })
            .collect();
        let censored = outcomes.iter().filter(|o| o.censored).count() as u64;
        let manifest = SeedManifest {
            strategy: spec.to_string(),
            master_seed,
            families: outcomes.len() as u64,
            cap,
            censored,
            route: route.to_string(),
        };
        Self { spec, outcomes, cumulative_children, manifest }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn censored(&self) -> u64 {
        self.manifest.censored
    }
}

/// Per byte: (walk increment, maximum prefix of the walk, number of boys).
const BYTE_TABLE: [(i8, i8, u8); 256] = build_byte_table();

const fn build_byte_table() -> [(i8, i8, u8); 256] {
    let mut table = [(0i8, 0i8, 0u8); 256];
    let mut b = 0;
    while b < 256 {
        let mut s = 0i8;
        let mut max = i8::MIN;
        let mut i = 0;
        while i < 8 {
            s += if (b >> i) & 1 == 1 { 1 } else { -1 };
            if s > max {
                max = s;
            }
            i += 1;
        }
        table[b] = (s, max, (b as u8).count_ones() as u8);
        b += 1;
    }
    table
}

/// Simulates one family from its own stream.
pub fn simulate_family(spec: &StrategySpec, rng: &RngStream, cap: u64) -> Result<FamilyOutcome> {
    let mut reader = StepReader::new(rng.steps());
    simulate_family_from(spec, &mut reader, cap)
}

/// Simulates one family, consuming exactly `tau` steps from `reader`.
pub fn simulate_family_from<S: StepSource>(spec: &StrategySpec, reader: &mut StepReader<S>, cap: u64) -> Result<FamilyOutcome> {
    spec.validate()?;
    if cap == 0 {
        return Err(Error::Parameter("cap must be at least 1".into()));
    }
    Ok(run_walk(spec, reader, cap))
}

fn run_walk<S: StepSource>(spec: &StrategySpec, reader: &mut StepReader<S>, cap: u64) -> FamilyOutcome {
    let (mut k, mut s, mut x) = (0u64, 0i64, 0u64);
    while k < cap {
        let (bits, avail) = reader.peek();
        let room = (avail as u64).min(cap - k) as u32;
        let mask = if room == 64 { u64::MAX } else { (1u64 << room) - 1 };
        let boys = (bits & mask).count_ones() as u64;
        // The walk cannot rise by more than the number of boys in the block.
        if spec.cannot_stop_within(k, s, x, boys as i64, boys) {
            k += room as u64;
            s += 2 * boys as i64 - room as i64;
            x += room as u64 - boys;
            reader.consume(room);
            continue;
        }
        let mut b = bits;
        let mut used = 0u32;
        while used < room {
            if room - used >= 8 {
                let (inc, max_prefix, nboys) = BYTE_TABLE[(b & 0xff) as usize];
                if spec.cannot_stop_within(k, s, x, max_prefix as i64, nboys as u64) {
                    k += 8;
                    s += inc as i64;
                    x += 8 - nboys as u64;
                    b >>= 8;
                    used += 8;
                    continue;
                }
            }
            k += 1;
            if b & 1 == 1 {
                s += 1;
            } else {
                s -= 1;
                x += 1;
            }
            b >>= 1;
            used += 1;
            if spec.stops(k, s, x) {
                reader.consume(used);
                return FamilyOutcome { tau: k, girls: x, boys: k - x, censored: false };
            }
        }
        reader.consume(room);
    }
    FamilyOutcome { tau: k, girls: x, boys: k - x, censored: true }
}

/// Simulates `n` independent families; family `i` uses stream `i`.
///
/// The result does not depend on the number of worker threads.
pub fn simulate_batch(spec: &StrategySpec, n: u64, master_seed: u64, cap: u64) -> Result<FamilyBatch> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Parameter("family count must be at least 1".into()));
    }
    if cap == 0 {
        return Err(Error::Parameter("cap must be at least 1".into()));
    }
    let outcomes: Vec<FamilyOutcome> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut reader = StepReader::new(RngStream::new(master_seed, i).steps());
            run_walk(spec, &mut reader, cap)
        })
        .collect();
    Ok(FamilyBatch::from_outcomes(*spec, outcomes, master_seed, cap, "walk"))
}

/// Replays a path step by step and checks that `outcome` is its first stop.
pub fn replay_matches(spec: &StrategySpec, steps: &[i8], outcome: &FamilyOutcome) -> bool {
    let (mut s, mut x) = (0i64, 0u64);
    for (idx, &step) in steps.iter().take(outcome.tau as usize).enumerate() {
        let k = idx as u64 + 1;
        s += step as i64;
        if step < 0 {
            x += 1;
        }
        let stop = spec.stops(k, s, x);
        if k < outcome.tau && stop {
            return false;
        }
        if k == outcome.tau {
            return stop != outcome.censored && x == outcome.girls && k - x == outcome.boys;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{CycleSteps, SliceSteps};

    fn scripted(spec: StrategySpec, steps: &[i8], cap: u64) -> FamilyOutcome {
        let mut reader = StepReader::new(CycleSteps::new(steps));
        simulate_family_from(&spec, &mut reader, cap).unwrap()
    }

    #[test]
    fn first_boy() {
        let o = scripted(StrategySpec::PBoys(1), &[1], 10);
        assert_eq!(o, FamilyOutcome { tau: 1, girls: 0, boys: 1, censored: false });
    }

    #[test]
    fn one_more_hand_trace() {
        let o = scripted(StrategySpec::PBoysMore(1), &[-1, 1, 1], 10);
        assert_eq!(o, FamilyOutcome { tau: 3, girls: 1, boys: 2, censored: false });
    }

    #[test]
    fn doubling_all_girls_is_censored() {
        let o = scripted(StrategySpec::Doubling, &[-1], 100);
        assert_eq!(o, FamilyOutcome { tau: 100, girls: 100, boys: 0, censored: true });
    }

    #[test]
    fn stop_exactly_at_cap_is_not_censored() {
        let o = scripted(StrategySpec::PBoysMore(1), &[-1, 1, 1], 3);
        assert!(!o.censored);
        let o = scripted(StrategySpec::PBoysMore(1), &[-1, 1, 1], 2);
        assert_eq!(o, FamilyOutcome { tau: 2, girls: 1, boys: 1, censored: true });
    }

    #[test]
    fn bad_inputs() {
        let mut reader = StepReader::new(CycleSteps::new(&[1]));
        assert!(simulate_family_from(&StrategySpec::PBoys(0), &mut reader, 5).is_err());
        assert!(simulate_family_from(&StrategySpec::PBoys(1), &mut reader, 0).is_err());
        assert!(simulate_batch(&StrategySpec::PBoys(1), 0, 1, 10).is_err());
    }

    #[test]
    fn long_runs_cross_word_boundaries() {
        // 100 girls then 101 boys: first passage of +1 at step 201.
        let mut steps = vec![-1i8; 100];
        steps.extend(std::iter::repeat(1).take(101));
        let mut reader = StepReader::new(SliceSteps::new(steps));
        let o = simulate_family_from(&StrategySpec::PBoysMore(1), &mut reader, 10_000).unwrap();
        assert_eq!(o, FamilyOutcome { tau: 201, girls: 100, boys: 101, censored: false });
        assert_eq!(reader.consumed(), 201);
    }

    #[test]
    fn outcomes_replay_exactly() {
        let specs = [
            StrategySpec::PBoys(3),
            StrategySpec::PBoysMore(2),
            StrategySpec::SqrtBoundary(0.7),
            StrategySpec::SqrtBoundary(1.5),
            StrategySpec::Doubling,
            "girlsbound:loglog:1.5".parse().unwrap(),
            "childbound:sqrt:1.0".parse().unwrap(),
        ];
        for spec in specs {
            for id in 0..300 {
                let stream = RngStream::new(99, id);
                let o = simulate_family(&spec, &stream, 20_000).unwrap();
                let steps = stream.first_steps(o.tau as usize);
                assert!(replay_matches(&spec, &steps, &o), "{spec} stream {id}: {o:?}");
                assert_eq!(o.girls + o.boys, o.tau);
            }
        }
    }

    #[test]
    fn stopping_identities() {
        let c = 0.8;
        let batch = simulate_batch(&StrategySpec::SqrtBoundary(c), 2000, 5, 100_000).unwrap();
        for o in batch.outcomes.iter().filter(|o| !o.censored) {
            let ceil = (c * (o.tau as f64).sqrt()).ceil() as i64;
            assert_eq!(o.surplus(), ceil, "{o:?}");
        }
        let batch = simulate_batch(&StrategySpec::PBoys(4), 1000, 5, 1000).unwrap();
        assert!(batch.outcomes.iter().all(|o| o.boys == 4));
        let batch = simulate_batch(&StrategySpec::PBoysMore(3), 1000, 5, 100_000).unwrap();
        assert!(batch.outcomes.iter().filter(|o| !o.censored).all(|o| o.surplus() == 3));
    }

    #[test]
    fn batches_are_deterministic() {
        let a = simulate_batch(&StrategySpec::PBoys(1), 3, 42, 100).unwrap();
        let b = simulate_batch(&StrategySpec::PBoys(1), 3, 42, 100).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let c = pool.install(|| simulate_batch(&StrategySpec::SqrtBoundary(1.0), 500, 42, 10_000).unwrap());
        let d = simulate_batch(&StrategySpec::SqrtBoundary(1.0), 500, 42, 10_000).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn cumulative_children_are_prefix_sums() {
        let batch = simulate_batch(&StrategySpec::PBoysMore(1), 200, 3, 10_000).unwrap();
        let mut acc = 0;
        for (o, &sigma) in batch.outcomes.iter().zip(&batch.cumulative_children) {
            acc += o.tau;
            assert_eq!(sigma, acc);
        }
    }

    #[test]
    fn renewal_recut() {
        // Concatenate each family's consumed steps into one walk and cut it
        // again sequentially with a single reader.
        let spec = StrategySpec::PBoysMore(2);
        let batch = simulate_batch(&spec, 400, 11, 50_000).unwrap();
        let mut joined = Vec::new();
        for (i, o) in batch.outcomes.iter().enumerate() {
            joined.extend(RngStream::new(11, i as u64).first_steps(o.tau as usize));
        }
        assert_eq!(joined.len() as u64, *batch.cumulative_children.last().unwrap());
        let mut reader = StepReader::new(SliceSteps::new(joined));
        for (i, o) in batch.outcomes.iter().enumerate() {
            let again = simulate_family_from(&spec, &mut reader, 50_000).unwrap();
            assert_eq!(&again, o, "family {i}");
            assert_eq!(reader.consumed(), batch.cumulative_children[i]);
        }
    }
}
