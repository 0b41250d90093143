//! Distributional samplers for scales the step engine cannot reach.
//!
//! These draw a family's outcome directly instead of walking it:
//!
//! * `pboys:p`: girls are a sum of `p` geometric counts, read off the
//!   trailing zeros of random words.
//! * `pboysmore:p`: girls are a sum of `p` independent first-passage
//!   counts, each drawn by inverting `P[X >= j] = C(2j, j) / 4^j`.
//! * `doubling`: the walk is stepped while it is near the boundary and
//!   advanced by exact binomial blocks once `Y - 2X` is so negative that
//!   the block cannot reach zero.
//! * `sqrt:c`: the walk is stepped exactly up to a handover time and then
//!   continued as a Brownian motion against the moving boundary (see
//!   [`SqrtHybrid`]).
//!
//! The first three are exact in distribution. All draws are keyed by
//! [`RngStream`], so results are reproducible and schedule independent.

use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{simulate_family, FamilyBatch, FamilyOutcome};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::strategy::StrategySpec;

/// Open-interval uniform with 53 random bits.
#[inline]
pub(crate) fn open_uniform<R: RngCore>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Girls before the `p`-th boy.
pub fn girls_p_boys<R: RngCore>(rng: &mut R, p: u32) -> u64 {
    let mut girls = 0u64;
    let mut needed = p;
    let mut word = rng.next_u64();
    let mut left = 64u32;
    while needed > 0 {
        if word == 0 {
            girls += left as u64;
            word = rng.next_u64();
            left = 64;
            continue;
        }
        let tz = word.trailing_zeros();
        if tz >= left {
            girls += left as u64;
            word = rng.next_u64();
            left = 64;
            continue;
        }
        girls += tz as u64;
        needed -= 1;
        word >>= tz + 1;
        left -= tz + 1;
        if left == 0 {
            word = rng.next_u64();
            left = 64;
        }
    }
    girls
}

const LADDER_TABLE_LEN: usize = 64;

fn ladder_table() -> &'static [f64; LADDER_TABLE_LEN] {
    use std::sync::OnceLock;
    static TABLE: OnceLock<[f64; LADDER_TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [1.0f64; LADDER_TABLE_LEN];
        for j in 1..LADDER_TABLE_LEN {
            t[j] = t[j - 1] * (2 * j - 1) as f64 / (2 * j) as f64;
        }
        t
    })
}

/// `ln(C(2j, j) / 4^j)` for `j >= 1`, from the large-`j` expansion.
///
/// Accurate to about 1e-15 once `j >= 64`.
pub fn ln_central_tail(j: f64) -> f64 {
    let inv = 1.0 / j;
    let corr = 1.0 - inv / 8.0 + inv * inv / 128.0 + 5.0 * inv.powi(3) / 1024.0 - 21.0 * inv.powi(4) / 32768.0
        - 399.0 * inv.powi(5) / 262144.0
        + 869.0 * inv.powi(6) / 4194304.0;
    -0.5 * (std::f64::consts::PI * j).ln() + corr.ln()
}

/// Girls of one "one boy more" family: the largest `j` with
/// `P[X >= j] > u`. `None` if the draw does not fit in `u64`.
pub fn girls_one_more_from_uniform(u: f64) -> Option<u64> {
    let table = ladder_table();
    if u >= table[LADDER_TABLE_LEN - 1] {
        // tail is decreasing; count entries above u.
        let j = table.partition_point(|&t| t > u);
        return Some(j as u64 - 1);
    }
    let ln_u = u.ln();
    // P[X >= j] < 1/sqrt(pi j), so every j >= 1/(pi u^2) lies beyond the answer.
    const LIMIT: f64 = 18_446_744_073_709_551_615.0;
    if ln_central_tail(LIMIT) > ln_u {
        return None;
    }
    let mut hi = ((1.0 / (std::f64::consts::PI * u * u)).ceil() + 1.0).min(LIMIT);
    let mut lo = (LADDER_TABLE_LEN - 1) as f64;
    while hi - lo > 1.0 {
        let mid = ((lo + hi) * 0.5).floor();
        if mid <= lo || mid >= hi {
            break;
        }
        if ln_central_tail(mid) > ln_u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo as u64)
}

/// Girls of a "p boys more" family; `None` on `u64` overflow.
pub fn girls_p_boys_more<R: RngCore>(rng: &mut R, p: u32) -> Option<u64> {
    let mut total = 0u64;
    for _ in 0..p {
        total = total.checked_add(girls_one_more_from_uniform(open_uniform(rng))?)?;
    }
    Some(total)
}

fn outcome_p_boys_more(girls: Option<u64>, p: u32) -> FamilyOutcome {
    match girls.and_then(|g| g.checked_mul(2)?.checked_add(p as u64).map(|tau| (g, tau))) {
        Some((girls, tau)) => FamilyOutcome { tau, girls, boys: girls + p as u64, censored: false },
        None => FamilyOutcome { tau: u64::MAX, girls: u64::MAX / 2, boys: u64::MAX / 2, censored: true },
    }
}

/// The doubling rule with exact binomial block jumps.
pub fn doubling_blockjump<R: RngCore>(rng: &mut R, cap: u64) -> FamilyOutcome {
    let (mut k, mut x, mut y) = (0u64, 0u64, 0u64);
    let mut word = 0u64;
    let mut left = 0u32;
    while k < cap {
        // Y - 2X rises by one per boy, so it needs at least -(Y - 2X) steps to reach zero.
        let w = y as i64 - 2 * x as i64;
        let safe = (-w - 1).max(0) as u64;
        let m = safe.min(cap - k);
        if m >= 64 {
            let boys = Binomial::new(m, 0.5).expect("valid binomial").sample(rng);
            k += m;
            y += boys;
            x += m - boys;
            continue;
        }
        if left == 0 {
            word = rng.next_u64();
            left = 64;
        }
        k += 1;
        if word & 1 == 1 {
            y += 1;
        } else {
            x += 1;
        }
        word >>= 1;
        left -= 1;
        if y >= 2 * x {
            return FamilyOutcome { tau: k, girls: x, boys: y, censored: false };
        }
    }
    FamilyOutcome { tau: k, girls: x, boys: y, censored: true }
}

/// Batch of families drawn by the distributional samplers.
///
/// Supports `pboys`, `pboysmore` and `doubling`; the cap only matters for
/// `doubling`.
pub fn sample_batch(spec: &StrategySpec, n: u64, master_seed: u64, cap: u64) -> Result<FamilyBatch> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Parameter("family count must be at least 1".into()));
    }
    let (route, outcomes): (&str, Vec<FamilyOutcome>) = match *spec {
        StrategySpec::PBoys(p) => (
            "negbin",
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let girls = girls_p_boys(&mut RngStream::new(master_seed, i).aux(), p);
                    FamilyOutcome { tau: girls + p as u64, girls, boys: p as u64, censored: false }
                })
                .collect(),
        ),
        StrategySpec::PBoysMore(p) => (
            "ladder",
            (0..n)
                .into_par_iter()
                .map(|i| outcome_p_boys_more(girls_p_boys_more(&mut RngStream::new(master_seed, i).aux(), p), p))
                .collect(),
        ),
        StrategySpec::Doubling => {
            if cap == 0 {
                return Err(Error::Parameter("cap must be at least 1".into()));
            }
            (
                "blockjump",
                (0..n)
                    .into_par_iter()
                    .map(|i| doubling_blockjump(&mut RngStream::new(master_seed, i).aux(), cap))
                    .collect(),
            )
        }
        _ => return Err(Error::Parameter(format!("no distributional sampler for {spec}"))),
    };
    Ok(FamilyBatch::from_outcomes(*spec, outcomes, master_seed, cap, route))
}

/// Outcome of the square-root rule at scales beyond `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtDraw {
    pub tau: f64,
    /// Boys minus girls at the stop, `ceil(c * sqrt(tau))`.
    pub surplus: f64,
    /// True if the stop happened after the handover to the continuation.
    pub continued: bool,
    pub censored: bool,
}

impl SqrtDraw {
    pub fn girls(&self) -> f64 {
        0.5 * (self.tau - self.surplus)
    }

    pub fn boys(&self) -> f64 {
        0.5 * (self.tau + self.surplus)
    }
}

/// Square-root rule sampler: exact walk up to `handover` steps, then a
/// Brownian continuation.
///
/// The continuation freezes the boundary at its current height `b`, draws
/// the Brownian hitting time of `b` (which is `(d / Z)^2` for a gap `d`) and
/// either moves to that time, or, if the hit falls beyond a window as long
/// as the elapsed time, jumps to the window end with the exact
/// no-crossing bridge law. Because the true boundary only rises, a frozen
/// boundary is never crossed early; repeated hits converge on the crossing
/// of the moving boundary, declared once a hit lands within one step.
/// The approximation error is the lattice-versus-diffusion error at the
/// handover scale, of relative order `handover^(-1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqrtHybrid {
    pub c: f64,
    pub handover: u64,
    /// Continuation gives up (censors) beyond this time.
    pub horizon: f64,
}

impl SqrtHybrid {
    pub const DEFAULT_HANDOVER: u64 = 1 << 16;
    pub const DEFAULT_HORIZON: f64 = 1e250;

    pub fn new(c: f64) -> Result<Self> {
        StrategySpec::SqrtBoundary(c).validate()?;
        Ok(Self { c, handover: Self::DEFAULT_HANDOVER, horizon: Self::DEFAULT_HORIZON })
    }

    pub fn with_handover(mut self, handover: u64) -> Self {
        self.handover = handover.max(1);
        self
    }

    pub fn draw(&self, stream: &RngStream) -> SqrtDraw {
        let spec = StrategySpec::SqrtBoundary(self.c);
        let walked = simulate_family(&spec, stream, self.handover).expect("validated spec");
        if !walked.censored {
            return SqrtDraw {
                tau: walked.tau as f64,
                surplus: walked.surplus() as f64,
                continued: false,
                censored: false,
            };
        }
        let mut rng = stream.aux();
        let mut t = walked.tau as f64;
        let mut w = walked.surplus() as f64;
        loop {
            if t > self.horizon {
                return SqrtDraw { tau: t, surplus: w, continued: true, censored: true };
            }
            let level = self.c * t.sqrt();
            let gap = level - w;
            let z: f64 = rng.sample(StandardNormal);
            let hit = (gap / z) * (gap / z);
            if hit <= t {
                t += hit;
                w = level;
                if hit <= 1.0 {
                    return self.finish(t);
                }
            } else {
                // Endpoint after `t` more time units, given no hit of `level`.
                let window = t;
                let sd = window.sqrt();
                loop {
                    let e: f64 = sd * rng.sample::<f64, _>(StandardNormal);
                    if e >= gap {
                        continue;
                    }
                    let keep = -(-2.0 * gap * (gap - e) / window).exp_m1();
                    if open_uniform(&mut rng) < keep {
                        w += e;
                        break;
                    }
                }
                t += window;
            }
        }
    }

    fn finish(&self, t: f64) -> SqrtDraw {
        let mut tau = t.ceil();
        let mut surplus = (self.c * tau.sqrt()).ceil();
        // Children and surplus share parity on the lattice.
        if tau < 4.5e15 {
            while (tau - surplus).rem_euclid(2.0) != 0.0 {
                tau += 1.0;
                surplus = (self.c * tau.sqrt()).ceil();
            }
        }
        SqrtDraw { tau, surplus, continued: true, censored: false }
    }

    /// `n` families, family `i` keyed by stream `offset + i`.
    pub fn batch(&self, n: u64, master_seed: u64, offset: u64) -> Vec<SqrtDraw> {
        (0..n)
            .into_par_iter()
            .map(|i| self.draw(&RngStream::new(master_seed, offset + i)))
            .collect()
    }
}
