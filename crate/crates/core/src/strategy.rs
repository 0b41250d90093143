//! Stopping rules for a single family.
//!
//! A family keeps having children, each a boy (`+1`) or a girl (`-1`) with
//! probability one half, until its rule says stop. After `k` children the
//! walk value is `S_k = Y_k - X_k` with `X_k` girls and `Y_k` boys.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of a boundary function `h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryForm {
    /// `h(x) = c * sqrt(x)`
    Sqrt,
    /// `h(x) = c * sqrt(x * ln ln x)`, taken as zero for `x < 3`.
    IteratedLog,
}

impl BoundaryForm {
    pub fn eval(self, c: f64, x: f64) -> f64 {
        match self {
            BoundaryForm::Sqrt => c * x.sqrt(),
            BoundaryForm::IteratedLog => {
                // ln ln x is undefined or negative below 3.
                if x < 3.0 {
                    0.0
                } else {
                    c * (x * x.ln().ln()).sqrt()
                }
            }
        }
    }

    fn tag(self) -> &'static str {
        match self {
            BoundaryForm::Sqrt => "sqrt",
            BoundaryForm::IteratedLog => "loglog",
        }
    }
}

/// Declarative description of a stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StrategySpec {
    /// Stop at the `p`-th boy.
    PBoys(u32),
    /// Stop the first time boys outnumber girls by `p`.
    PBoysMore(u32),
    /// Stop the first time `S_k >= c * sqrt(k)`.
    SqrtBoundary(f64),
    /// Stop the first time `S_k >= h(X_k)`.
    GirlsBoundary { c: f64, form: BoundaryForm },
    /// Stop the first time `S_k >= h(k)`.
    ChildrenBoundary { c: f64, form: BoundaryForm },
    /// Stop the first time there are at least twice as many boys as girls.
    Doubling,
}

/// Whether a rule terminates almost surely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Finiteness {
    AlmostSurelyFinite,
    PositiveNonTermination,
    Unclassified,
}

impl StrategySpec {
    pub fn validate(&self) -> Result<()> {
        let check_c = |c: f64| {
            if c.is_finite() && c > 0.0 {
                Ok(())
            } else {
                Err(Error::Parameter(format!("boundary constant must be positive and finite, got {c}")))
            }
        };
        match *self {
            StrategySpec::PBoys(p) | StrategySpec::PBoysMore(p) => {
                if p == 0 {
                    Err(Error::Parameter("p must be at least 1".into()))
                } else {
                    Ok(())
                }
            }
            StrategySpec::SqrtBoundary(c)
            | StrategySpec::GirlsBoundary { c, .. }
            | StrategySpec::ChildrenBoundary { c, .. } => check_c(c),
            StrategySpec::Doubling => Ok(()),
        }
    }

    /// Stop predicate without consistency checks. `k >= 1`, `s = k - 2x`.
    #[inline]
    pub fn stops(&self, k: u64, s: i64, x: u64) -> bool {
        match *self {
            StrategySpec::PBoys(p) => k - x == p as u64,
            StrategySpec::PBoysMore(p) => s == p as i64,
            StrategySpec::SqrtBoundary(c) => s as f64 >= c * (k as f64).sqrt(),
            StrategySpec::GirlsBoundary { c, form } => s as f64 >= form.eval(c, x as f64),
            StrategySpec::ChildrenBoundary { c, form } => s as f64 >= form.eval(c, k as f64),
            StrategySpec::Doubling => 3 * s >= k as i64,
        }
    }

    /// Conservative test used by the walk engine to skip a block of steps.
    ///
    /// Returns true only if no stop can occur during the next steps, given
    /// that the walk rises by at most `max_rise` and at most `boys` boys are
    /// born. The boundaries are nondecreasing in `k` and in `X_k`, so the
    /// current threshold is a lower bound for every later one.
    #[inline]
    pub(crate) fn cannot_stop_within(&self, k: u64, s: i64, x: u64, max_rise: i64, boys: u64) -> bool {
        let top = s + max_rise;
        match *self {
            StrategySpec::PBoys(p) => (k - x) + boys < p as u64,
            StrategySpec::PBoysMore(p) => top < p as i64,
            StrategySpec::SqrtBoundary(c) => (top as f64) < c * ((k + 1) as f64).sqrt(),
            StrategySpec::GirlsBoundary { c, form } => (top as f64) < form.eval(c, x as f64),
            StrategySpec::ChildrenBoundary { c, form } => (top as f64) < form.eval(c, (k + 1) as f64),
            StrategySpec::Doubling => 3 * top < (k + 1) as i64,
        }
    }

    pub fn finiteness_class(&self) -> Finiteness {
        use Finiteness::*;
        match *self {
            StrategySpec::PBoys(_) | StrategySpec::PBoysMore(_) | StrategySpec::SqrtBoundary(_) => AlmostSurelyFinite,
            StrategySpec::Doubling => PositiveNonTermination,
            StrategySpec::GirlsBoundary { c, form } => match form {
                // h = c sqrt(x) is eventually below any c' sqrt(x log log x).
                BoundaryForm::Sqrt => AlmostSurelyFinite,
                BoundaryForm::IteratedLog => threshold_class(c, 2.0),
            },
            StrategySpec::ChildrenBoundary { c, form } => match form {
                BoundaryForm::Sqrt => AlmostSurelyFinite,
                BoundaryForm::IteratedLog => threshold_class(c, std::f64::consts::SQRT_2),
            },
        }
    }

    /// True for rules whose stopped walk always has `S_tau >= 1`.
    pub fn favors_boys(&self) -> bool {
        !matches!(self, StrategySpec::PBoys(_))
    }
}

fn threshold_class(c: f64, critical: f64) -> Finiteness {
    if c < critical {
        Finiteness::AlmostSurelyFinite
    } else if c > critical {
        Finiteness::PositiveNonTermination
    } else {
        Finiteness::Unclassified
    }
}

/// Checked stop predicate on a full walk state.
pub fn should_stop(spec: &StrategySpec, k: u64, s: i64, x: u64, y: u64) -> Result<bool> {
    spec.validate()?;
    if k == 0 {
        return Err(Error::Contract("step index must be at least 1".into()));
    }
    if x.checked_add(y) != Some(k) || (y as i128 - x as i128) != s as i128 {
        return Err(Error::Contract(format!(
            "inconsistent walk state k={k} S={s} X={x} Y={y}"
        )));
    }
    Ok(spec.stops(k, s, x))
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            StrategySpec::PBoys(p) => write!(f, "pboys:{p}"),
            StrategySpec::PBoysMore(p) => write!(f, "pboysmore:{p}"),
            StrategySpec::SqrtBoundary(c) => write!(f, "sqrt:{c}"),
            StrategySpec::GirlsBoundary { c, form } => write!(f, "girlsbound:{}:{c}", form.tag()),
            StrategySpec::ChildrenBoundary { c, form } => write!(f, "childbound:{}:{c}", form.tag()),
            StrategySpec::Doubling => write!(f, "doubling"),
        }
    }
}

impl FromStr for StrategySpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("unrecognised strategy '{text}'"));
        let parts: Vec<&str> = text.trim().split(':').collect();
        let int = |v: &str| v.parse::<u32>().map_err(|_| bad());
        let real = |v: &str| v.parse::<f64>().map_err(|_| bad());
        let form = |v: &str| match v {
            "sqrt" => Ok(BoundaryForm::Sqrt),
            "loglog" => Ok(BoundaryForm::IteratedLog),
            _ => Err(bad()),
        };
        let spec = match parts.as_slice() {
            ["pboys", p] => StrategySpec::PBoys(int(p)?),
            ["pboysmore", p] => StrategySpec::PBoysMore(int(p)?),
            ["sqrt", c] => StrategySpec::SqrtBoundary(real(c)?),
            ["doubling"] => StrategySpec::Doubling,
            ["girlsbound", f, c] => StrategySpec::GirlsBoundary { c: real(c)?, form: form(f)? },
            ["childbound", f, c] => StrategySpec::ChildrenBoundary { c: real(c)?, form: form(f)? },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}
