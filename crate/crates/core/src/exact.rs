//! Exact laws of the catalogued rules.
//!
//! Closed-form probability mass functions (in `f64` and, for small
//! arguments, as exact dyadic rationals), the constants they imply, the
//! generating function `f(z) = (1 - sqrt(1 - z)) / z` of the "one boy more"
//! girls count, and a brute-force path enumerator that every closed form is
//! tested against.

use std::fmt;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::digamma;

use crate::error::{Error, Result};
use crate::numeric::{ln_choose, CompensatedSum};
use crate::strategy::{should_stop, StrategySpec};

/// An exact probability `num / 2^exp`, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dyadic {
    pub num: u128,
    pub exp: u32,
}

impl Dyadic {
    pub const ZERO: Dyadic = Dyadic { num: 0, exp: 0 };

    pub fn new(num: u128, exp: u32) -> Self {
        if num == 0 {
            return Self::ZERO;
        }
        let shift = num.trailing_zeros().min(exp);
        Self { num: num >> shift, exp: exp - shift }
    }

    pub fn checked_add(self, other: Dyadic) -> Option<Dyadic> {
        let exp = self.exp.max(other.exp);
        let a = self.num.checked_shl(exp - self.exp).filter(|v| v >> (exp - self.exp) == self.num)?;
        let b = other.num.checked_shl(exp - other.exp).filter(|v| v >> (exp - other.exp) == other.num)?;
        Some(Self::new(a.checked_add(b)?, exp))
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 * (-(self.exp as f64)).exp2()
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.num, self.exp)
    }
}

/// `C(n, k)` in 128-bit arithmetic; `None` on overflow.
pub fn choose_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        // r * (n - i) is divisible by (i + 1) after the multiplication.
        r = r.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(r)
}

/// Probability mass function on `support_start, support_start + 1, ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pmf {
    pub support_start: u64,
    pub masses: Vec<f64>,
    /// Mass outside the listed support: truncated tail plus any mass at infinity.
    pub defect: f64,
}

impl Pmf {
    /// Mass at `j`, zero outside the listed support.
    pub fn mass(&self, j: u64) -> f64 {
        j.checked_sub(self.support_start)
            .and_then(|i| self.masses.get(i as usize))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn listed_total(&self) -> f64 {
        self.masses.iter().copied().collect::<CompensatedSum>().value()
    }

    /// `sum(masses) + defect - 1`.
    pub fn normalization_error(&self) -> f64 {
        let mut s: CompensatedSum = self.masses.iter().copied().collect();
        s.add(self.defect);
        s.add(-1.0);
        s.value()
    }

    /// `(value, mass, cumulative)` rows over the listed support.
    pub fn rows(&self) -> impl Iterator<Item = (u64, f64, f64)> + '_ {
        let mut acc = CompensatedSum::new();
        self.masses.iter().enumerate().map(move |(i, &m)| {
            acc.add(m);
            (self.support_start + i as u64, m, acc.value())
        })
    }

    /// CSV with columns `j,mass,cumulative`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "j,mass,cumulative")?;
        for (j, m, c) in self.rows() {
            writeln!(out, "{j},{m:e},{c:e}")?;
        }
        Ok(())
    }
}

/// Girls before the `p`-th boy: `C(p+j-1, j) 2^-(j+p)` for `0 <= j <= jmax`.
pub fn pmf_girls_p_boys(p: u32, jmax: u64) -> Result<Pmf> {
    if p == 0 {
        return Err(Error::Parameter("p must be at least 1".into()));
    }
    let pi = p;
    let p = p as f64;
    let mut m = (-p).exp2();
    let mut masses = Vec::with_capacity(jmax as usize + 1);
    masses.push(m);
    for j in 1..=jmax {
        m *= (p + j as f64 - 1.0) / (2.0 * j as f64);
        // Correctly rounded wherever the exact value fits in u128.
        if let Some(d) = exact_girls_p_boys(pi, j) {
            m = d.to_f64();
        }
        masses.push(m);
    }
    // The tail is summed directly; term ratios tend to 1/2.
    let mut tail = CompensatedSum::new();
    let mut j = jmax + 1;
    loop {
        m *= (p + j as f64 - 1.0) / (2.0 * j as f64);
        tail.add(m);
        if m < 1e-20 * tail.value() || m == 0.0 {
            break;
        }
        j += 1;
    }
    Ok(Pmf { support_start: 0, masses, defect: tail.value() })
}

/// Girls when the rule stops `p` boys ahead:
/// `p/(p+2j) C(2j+p, j) 2^-(2j+p)` for `0 <= j <= jmax`.
pub fn pmf_girls_p_boys_more(p: u32, jmax: u64) -> Result<Pmf> {
    if p == 0 {
        return Err(Error::Parameter("p must be at least 1".into()));
    }
    let pf = p as f64;
    let mut m = (-pf).exp2();
    let mut masses = Vec::with_capacity(jmax as usize + 1);
    masses.push(m);
    for j in 1..=jmax {
        let jf = j as f64;
        m *= (pf + 2.0 * jf - 2.0) * (2.0 * jf + pf - 1.0) / (4.0 * jf * (jf + pf));
        if let Some(d) = exact_girls_p_boys_more(p, j) {
            m = d.to_f64();
        }
        masses.push(m);
    }
    let mut s: CompensatedSum = masses.iter().copied().collect();
    s.add(-1.0);
    // The walk is recurrent, so the listed masses and the tail make up one.
    let defect = (-s.value()).max(0.0);
    Ok(Pmf { support_start: 0, masses, defect })
}

/// `ln P[X = j]` for the "p boys more" girls count, usable at any `j`.
pub fn ln_mass_girls_p_boys_more(p: u32, j: u64) -> f64 {
    let (p, j) = (p as f64, j as f64);
    p.ln() - (p + 2.0 * j).ln() + ln_choose(2.0 * j + p, j) - (2.0 * j + p) * std::f64::consts::LN_2
}

/// `P[X >= j]` for "one boy more": `C(2j, j) / 4^j`.
pub fn tail_girls_one_more(j: u64) -> f64 {
    if j < 64 {
        (1..=j).fold(1.0, |t, i| t * (2 * i - 1) as f64 / (2 * i) as f64)
    } else {
        crate::sampler::ln_central_tail(j as f64).exp()
    }
}

/// Exact `P[X = j]` for the "p boys" girls count.
pub fn exact_girls_p_boys(p: u32, j: u64) -> Option<Dyadic> {
    let n = choose_u128(p as u64 + j - 1, j)?;
    Some(Dyadic::new(n, u32::try_from(j + p as u64).ok()?))
}

/// Exact `P[X = j]` for the "p boys more" girls count.
pub fn exact_girls_p_boys_more(p: u32, j: u64) -> Option<Dyadic> {
    let p = p as u64;
    let top = choose_u128(2 * j + p, j)?.checked_mul(p as u128)?;
    let den = (p + 2 * j) as u128;
    assert_eq!(top % den, 0, "ballot numbers are integers");
    Some(Dyadic::new(top / den, u32::try_from(2 * j + p).ok()?))
}

/// Exact `P[chi = k]` for the doubling rule.
pub fn exact_chi(k: u64) -> Option<Dyadic> {
    match k {
        0 => Some(Dyadic::ZERO),
        1 => Some(Dyadic::new(1, 1)),
        _ if k % 3 != 0 => Some(Dyadic::ZERO),
        _ => {
            let top = choose_u128(k - 1, k / 3 - 1)?.checked_mul(2)?;
            let den = (k - 1) as u128;
            assert_eq!(top % den, 0, "path counts are integers");
            Some(Dyadic::new(top / den, u32::try_from(k).ok()?))
        }
    }
}

/// `C(3j-1, j-1) 2^(1-3j) / (3j-1)` for `j = 1, 2, ...`: the mass of `chi = 3j`.
fn chi_terms() -> impl Iterator<Item = f64> {
    let mut term = 0.125;
    let mut m = 1.0f64;
    std::iter::from_fn(move || {
        let out = term;
        term *= 3.0 * (3.0 * m + 1.0) * (3.0 * m - 1.0) / (8.0 * (2.0 * m + 2.0) * (2.0 * m + 1.0));
        m += 1.0;
        Some(out)
    })
}

/// Stopping-time law of the doubling rule on `1..=kmax`; the defect holds
/// the mass at infinity plus the truncated tail.
pub fn pmf_chi(kmax: u64) -> Result<Pmf> {
    if kmax == 0 {
        return Err(Error::Parameter("kmax must be at least 1".into()));
    }
    let mut masses = vec![0.0; kmax as usize];
    masses[0] = 0.5;
    for (i, t) in chi_terms().take((kmax / 3) as usize).enumerate() {
        let k = 3 * (i as u64 + 1);
        masses[k as usize - 1] = exact_chi(k).map_or(t, Dyadic::to_f64);
    }
    let mut s: CompensatedSum = masses.iter().copied().collect();
    s.add(-1.0);
    Ok(Pmf { support_start: 1, masses, defect: -s.value() })
}

/// `P[chi = infinity]` with a rigorous truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiInfinity {
    pub terms: u64,
    /// `1/2 + sum_{j <= terms}` of the finite-stop masses beyond `k = 1`.
    pub stopped_mass: f64,
    /// Midpoint of the enclosing interval.
    pub value: f64,
    /// Half-width of the enclosing interval.
    pub bound: f64,
}

/// Sums the series of finite-stop masses. Consecutive terms shrink by a
/// factor below `27/32`, so the neglected tail is at most `27/5` times the
/// last term.
pub fn prob_chi_infinite(series_terms: u64) -> Result<ChiInfinity> {
    if series_terms < 1000 {
        return Err(Error::Parameter("use at least 1000 series terms".into()));
    }
    let mut sum = CompensatedSum::new();
    sum.add(0.5);
    let mut last = 0.0;
    for t in chi_terms().take(series_terms as usize) {
        sum.add(t);
        last = t;
    }
    let tail = last * 27.0 / 5.0;
    let upper = 1.0 - sum.value();
    Ok(ChiInfinity {
        terms: series_terms,
        stopped_mass: sum.value(),
        value: upper - 0.5 * tail,
        bound: 0.5 * tail + 4.0 * f64::EPSILON,
    })
}

/// A named constant with the expression that defines it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Constant {
    pub value: f64,
    pub expression: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactConstants {
    /// Limit of the averaged girls fraction under "first boy".
    pub first_boy_fraction: Constant,
    /// Limit of the averaged girls fraction under "one boy more".
    pub one_more_fraction: Constant,
    /// Limit of the averaged girls-to-boys ratio under "one boy more".
    pub one_more_ratio: Constant,
    /// Non-termination probability of the doubling rule.
    pub chi_infinity: Constant,
    /// The alternative closed form that the series does not match.
    pub chi_infinity_rejected: Constant,
}

impl ExactConstants {
    pub fn get() -> Self {
        let sqrt5 = 5f64.sqrt();
        Self {
            first_boy_fraction: Constant { value: 1.0 - std::f64::consts::LN_2, expression: "1 - log 2" },
            one_more_fraction: Constant { value: 1.0 - std::f64::consts::FRAC_PI_4, expression: "1 - pi/4" },
            one_more_ratio: Constant { value: 2.0 * std::f64::consts::LN_2 - 1.0, expression: "2 log 2 - 1" },
            chi_infinity: Constant {
                value: (sqrt5 - 1.0) / 4.0,
                expression: "(sqrt 5 - 1)/4, matched by the stopping-mass series and by capped simulation",
            },
            chi_infinity_rejected: Constant { value: (3.0 - sqrt5) / 4.0, expression: "(3 - sqrt 5)/4" },
        }
    }
}

fn hyp2f1_half(a: f64, b: f64, c: f64) -> f64 {
    // Terms eventually shrink by about 1/2 each, so the series converges linearly.
    let mut sum = CompensatedSum::new();
    let mut term = 1.0;
    let mut k = 0.0;
    loop {
        sum.add(term);
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * 0.5;
        k += 1.0;
        if term.abs() < 1e-17 * sum.value().abs() && k > a.max(b) {
            return sum.value();
        }
    }
}

/// `E[X / (p + X)]` under "p boys", from `p/(2(p+1)) 2F1(1, 1; p+2; 1/2)`.
pub fn mean_fraction_p_boys(p: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::Parameter("p must be at least 1".into()));
    }
    let p = p as f64;
    Ok(p / (2.0 * (p + 1.0)) * hyp2f1_half(1.0, 1.0, p + 2.0))
}

/// The same expectation before the hypergeometric transformation:
/// `p/(2^(p+1)(p+1)) 2F1(p+1, p+1; p+2; 1/2)`.
pub fn mean_fraction_p_boys_untransformed(p: u32) -> Result<f64> {
    if p == 0 {
        return Err(Error::Parameter("p must be at least 1".into()));
    }
    let p = p as f64;
    Ok(p / ((p + 1.0).exp2() * (p + 1.0)) * hyp2f1_half(p + 1.0, p + 1.0, p + 2.0))
}

/// `E[F_n]` under "first boy": `(n/2)(psi((n+2)/2) - psi((n+1)/2))`.
pub fn expected_f_first_boy(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".into()));
    }
    let n = n as f64;
    Ok(0.5 * n * (digamma(0.5 * (n + 2.0)) - digamma(0.5 * (n + 1.0))))
}

/// `f(z) = (1 - sqrt(1 - z)) / z` on the closed unit disc, principal branch.
pub fn pgf_f(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() > 1.0 + 1e-15 {
        return Err(Error::Domain(format!("pgf argument {z} outside the closed unit disc")));
    }
    Ok(pgf_f_complement(Complex64::new(1.0, 0.0) - z))
}

/// `f` evaluated at `z = 1 - w`, avoiding cancellation when `z` is near one.
pub(crate) fn pgf_f_complement(w: Complex64) -> Complex64 {
    // 1 / (1 + sqrt(w)) equals the defining quotient and is regular at z = 0.
    (Complex64::new(1.0, 0.0) + w.sqrt()).inv()
}

/// `f(z)^(p n)`, the generating function of `n` pooled "p boys more" families.
pub fn pgf_power(z: Complex64, p: u32, n: u64) -> Result<Complex64> {
    let f = pgf_f(z)?;
    // f lies in the right half plane, so the principal log is continuous here.
    Ok((f.ln() * (p as f64 * n as f64)).exp())
}

/// Stopped paths of every length up to `max_len`, counted exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnumeration {
    pub spec: StrategySpec,
    pub max_len: u32,
    /// `counts[tau * (max_len + 1) + girls]`: stopped prefixes with that outcome.
    counts: Vec<u64>,
    /// Paths of length `max_len` on which the rule never fired.
    pub unstopped: u64,
}

pub const MAX_ENUMERATION_LEN: u32 = 26;

/// Walks every `±1` sequence of length `max_len`, stopping each at the
/// first index where [`should_stop`] fires.
pub fn enumerate_paths_oracle(spec: &StrategySpec, max_len: u32) -> Result<PathEnumeration> {
    spec.validate()?;
    if max_len > MAX_ENUMERATION_LEN {
        return Err(Error::Resource(format!(
            "path enumeration is limited to length {MAX_ENUMERATION_LEN}, got {max_len}"
        )));
    }
    let width = max_len as usize + 1;
    let mut out = PathEnumeration { spec: *spec, max_len, counts: vec![0; width * width], unstopped: 0 };
    descend(spec, &mut out, 0, 0, 0)?;
    Ok(out)
}

fn descend(spec: &StrategySpec, out: &mut PathEnumeration, k: u64, x: u64, y: u64) -> Result<()> {
    if k == out.max_len as u64 {
        out.unstopped += 1;
        return Ok(());
    }
    for boy in [true, false] {
        let (x1, y1) = if boy { (x, y + 1) } else { (x + 1, y) };
        let k1 = k + 1;
        if should_stop(spec, k1, y1 as i64 - x1 as i64, x1, y1)? {
            let width = out.max_len as usize + 1;
            out.counts[k1 as usize * width + x1 as usize] += 1;
        } else {
            descend(spec, out, k1, x1, y1)?;
        }
    }
    Ok(())
}

impl PathEnumeration {
    fn width(&self) -> usize {
        self.max_len as usize + 1
    }

    /// Number of stopped prefixes with `tau` children and `girls` girls.
    pub fn count(&self, tau: u32, girls: u32) -> u64 {
        if tau > self.max_len || girls > tau {
            return 0;
        }
        self.counts[tau as usize * self.width() + girls as usize]
    }

    /// `P[tau, girls]`.
    pub fn mass(&self, tau: u32, girls: u32) -> Dyadic {
        Dyadic::new(self.count(tau, girls) as u128, tau)
    }

    /// `P[tau = k]`, exact for `k <= max_len`.
    pub fn tau_mass(&self, k: u32) -> Dyadic {
        (0..=k).fold(Dyadic::ZERO, |acc, g| acc.checked_add(self.mass(k, g)).expect("fits"))
    }

    /// `P[girls = j, tau <= max_len]`.
    pub fn girls_mass(&self, j: u32) -> Dyadic {
        (j..=self.max_len).fold(Dyadic::ZERO, |acc, t| acc.checked_add(self.mass(t, j)).expect("fits"))
    }

    /// Mass of paths still running at `max_len`.
    pub fn defect(&self) -> Dyadic {
        Dyadic::new(self.unstopped as u128, self.max_len)
    }

    /// Non-zero `(tau, girls, probability)` entries.
    pub fn entries(&self) -> impl Iterator<Item = (u32, u32, Dyadic)> + '_ {
        let w = self.width();
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| ((i / w) as u32, (i % w) as u32, Dyadic::new(c as u128, (i / w) as u32)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn dyadic_arithmetic() {
        assert_eq!(Dyadic::new(4, 3), Dyadic::new(1, 1));
        assert_eq!(Dyadic::new(1, 2).checked_add(Dyadic::new(1, 2)).unwrap(), Dyadic::new(1, 1));
        assert_eq!(Dyadic::new(1, 3).checked_add(Dyadic::new(1, 1)).unwrap(), Dyadic::new(5, 3));
        assert_eq!(Dyadic::new(5, 3).to_f64(), 0.625);
    }

    #[test]
    fn choose_matches_pascal() {
        let mut row = vec![1u128];
        for n in 1..=60u64 {
            let mut next = vec![1u128; n as usize + 1];
            for k in 1..n as usize {
                next[k] = row[k - 1] + row[k];
            }
            row = next;
            for k in 0..=n {
                assert_eq!(choose_u128(n, k), Some(row[k as usize]));
            }
        }
        assert_eq!(choose_u128(3, 5), Some(0));
    }

    #[test]
    fn negative_binomial_examples() {
        let g = pmf_girls_p_boys(1, 10).unwrap();
        for j in 0..=10 {
            assert_eq!(g.mass(j), (-(j as f64 + 1.0)).exp2());
        }
        assert_eq!(pmf_girls_p_boys(2, 3).unwrap().mass(1), 0.25);
        let p3 = pmf_girls_p_boys(3, 200).unwrap();
        assert!(p3.normalization_error().abs() < 1e-12);
        let mean: f64 = p3.rows().map(|(j, m, _)| j as f64 * m).sum();
        assert!((mean - 3.0).abs() < 1e-12, "{mean}");
        assert!(pmf_girls_p_boys(3, 5).unwrap().normalization_error().abs() < 1e-12);
    }

    #[test]
    fn one_more_examples_and_tail() {
        let m1 = pmf_girls_p_boys_more(1, 1000).unwrap();
        assert_eq!(m1.mass(0), 0.5);
        assert_eq!(m1.mass(1), 0.125);
        assert_eq!(pmf_girls_p_boys_more(2, 3).unwrap().mass(1), 0.125);
        assert!(m1.normalization_error().abs() < 1e-12);
        // The tail beyond jmax is P[X >= jmax + 1].
        assert!((m1.defect - tail_girls_one_more(1001)).abs() < 1e-13);
        for j in 0..1000 {
            let ln = ln_mass_girls_p_boys_more(1, j);
            assert!((ln.exp() / m1.mass(j) - 1.0).abs() < 1e-9, "j={j}");
        }
    }

    #[test]
    fn one_more_tail_law() {
        for p in [1u32, 2, 3] {
            let j = 1_000_000u64;
            let scaled = (ln_mass_girls_p_boys_more(p, j) + 1.5 * (j as f64).ln()).exp();
            let limit = p as f64 / (2.0 * std::f64::consts::PI.sqrt());
            assert!((scaled / limit - 1.0).abs() < 0.01, "p={p}: {scaled} vs {limit}");
        }
    }

    #[test]
    fn floating_pmfs_match_exact_dyadics() {
        for p in 1..=3 {
            let f = pmf_girls_p_boys(p, 40).unwrap();
            let g = pmf_girls_p_boys_more(p, 40).unwrap();
            for j in 0..=40 {
                assert_eq!(f.mass(j), exact_girls_p_boys(p, j).unwrap().to_f64());
                assert_eq!(g.mass(j), exact_girls_p_boys_more(p, j).unwrap().to_f64());
            }
        }
        let c = pmf_chi(90).unwrap();
        for k in 1..=90 {
            assert_eq!(c.mass(k), exact_chi(k).unwrap().to_f64());
        }
    }

    #[test]
    fn chi_examples() {
        let c = pmf_chi(30).unwrap();
        assert_eq!(c.mass(1), 0.5);
        assert_eq!(c.mass(2), 0.0);
        assert_eq!(c.mass(3), 0.125);
        assert_eq!(exact_chi(3), Some(Dyadic::new(1, 3)));
        assert!(c.normalization_error().abs() < 1e-15);
    }

    #[test]
    fn chi_series_and_resolution() {
        let first: f64 = chi_terms().next().unwrap();
        assert_eq!(first, 0.125);
        let r = prob_chi_infinite(1000).unwrap();
        let consts = ExactConstants::get();
        assert!(r.bound < 1e-15);
        assert!((r.value - consts.chi_infinity.value).abs() < 1e-14, "{}", r.value);
        assert!((r.value - consts.chi_infinity_rejected.value).abs() > 0.1);
        // Complementarity with the pmf.
        let pmf = pmf_chi(3000).unwrap();
        assert!((pmf.defect - r.value).abs() < 1e-13);
        assert!(prob_chi_infinite(10).is_err());
    }

    #[test]
    fn chi_term_ratio_stays_below_envelope() {
        let terms: Vec<f64> = chi_terms().take(2000).collect();
        for w in terms.windows(2) {
            assert!(w[1] / w[0] < 27.0 / 32.0);
        }
    }

    #[test]
    fn mean_fraction_forms_agree() {
        assert!((mean_fraction_p_boys(1).unwrap() - (1.0 - LN2)).abs() < 1e-14);
        let mut prev = 0.0;
        for p in 1..=50 {
            let v = mean_fraction_p_boys(p).unwrap();
            assert!(v > prev && v < 0.5, "p={p}");
            prev = v;
            if p <= 20 {
                let u = mean_fraction_p_boys_untransformed(p).unwrap();
                assert!((u - v).abs() < 1e-10, "p={p}: {u} vs {v}");
            }
        }
        assert!(0.5 - prev < 0.02);
        // Direct sum over the negative binomial law.
        let pmf = pmf_girls_p_boys(2, 400).unwrap();
        let direct: f64 = pmf.rows().map(|(j, m, _)| j as f64 / (2.0 + j as f64) * m).sum();
        assert!((direct - mean_fraction_p_boys(2).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn expected_fraction_first_boy() {
        assert!((expected_f_first_boy(1).unwrap() - (1.0 - LN2)).abs() < 1e-13);
        // n = 2: the pooled girls count is negative binomial with p = 2.
        let pmf = pmf_girls_p_boys(2, 400).unwrap();
        let oracle: f64 = pmf.rows().map(|(j, m, _)| j as f64 / (2.0 + j as f64) * m).sum();
        assert!((expected_f_first_boy(2).unwrap() - oracle).abs() < 1e-13);
        let mut gap = f64::INFINITY;
        for n in [10, 100, 1000, 10_000] {
            let g = (0.5 - expected_f_first_boy(n).unwrap()).abs();
            assert!(g < gap);
            gap = g;
        }
        assert!(gap < 1e-3);
    }

    #[test]
    fn pgf_values_and_coefficients() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(pgf_f(Complex64::new(0.0, 0.0)).unwrap(), Complex64::new(0.5, 0.0));
        assert!((pgf_f(Complex64::new(1e-12, 0.0)).unwrap().re - 0.5).abs() < 1e-12);
        assert!((pgf_f(one).unwrap() - one).norm() < 1e-15);
        assert!(pgf_f(Complex64::new(1.5, 0.0)).is_err());
        assert!(pgf_f(Complex64::new(0.0, 1.01)).is_err());
        // Coefficients from z f^2 - 2f + 1 = 0: f_n = (1/2) sum_{i+j=n-1} f_i f_j.
        let mut coef = vec![0.5f64];
        for n in 1..=10 {
            let s: f64 = (0..n).map(|i| coef[i] * coef[n - 1 - i]).sum();
            coef.push(0.5 * s);
        }
        let pmf = pmf_girls_p_boys_more(1, 10).unwrap();
        for (j, c) in coef.iter().enumerate() {
            assert!((c - pmf.mass(j as u64)).abs() < 1e-15);
        }
        // The same coefficients from a Cauchy integral over pgf_f itself.
        let (r, n) = (0.5f64, 256);
        for j in 0..=10 {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in 0..n {
                let w = Complex64::from_polar(r, 2.0 * std::f64::consts::PI * t as f64 / n as f64);
                acc += pgf_f(w).unwrap() * w.powi(-(j as i32));
            }
            let cj = acc.re / n as f64;
            assert!((cj - pmf.mass(j)).abs() < 1e-12, "j={j}");
        }
        let z = Complex64::new(0.3, 0.4);
        let direct = pgf_f(z).unwrap().powu(6);
        assert!((pgf_power(z, 2, 3).unwrap() - direct).norm() < 1e-14);
    }

    #[test]
    fn enumeration_small_cases() {
        let e = enumerate_paths_oracle(&StrategySpec::PBoysMore(1), 3).unwrap();
        assert_eq!(e.count(1, 0), 1);
        assert_eq!(e.count(3, 1), 1);
        assert_eq!(e.defect(), Dyadic::new(3, 3));
        let e = enumerate_paths_oracle(&StrategySpec::PBoys(2), 3).unwrap();
        assert_eq!(e.girls_mass(1), Dyadic::new(1, 2));
        let e = enumerate_paths_oracle(&StrategySpec::Doubling, 3).unwrap();
        assert_eq!(e.tau_mass(2), Dyadic::ZERO);
        assert!(matches!(
            enumerate_paths_oracle(&StrategySpec::Doubling, 27),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn enumeration_matches_closed_forms() {
        let e = enumerate_paths_oracle(&StrategySpec::PBoysMore(1), 20).unwrap();
        for j in 0..=9 {
            assert_eq!(e.girls_mass(j), exact_girls_p_boys_more(1, j as u64).unwrap());
        }
        let e = enumerate_paths_oracle(&StrategySpec::PBoys(2), 12).unwrap();
        for j in 0..=10 {
            assert_eq!(e.girls_mass(j), exact_girls_p_boys(2, j as u64).unwrap());
        }
        let e = enumerate_paths_oracle(&StrategySpec::Doubling, 15).unwrap();
        for k in 1..=15 {
            assert_eq!(e.tau_mass(k), exact_chi(k as u64).unwrap());
        }
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        pmf_girls_p_boys(1, 2).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "j,mass,cumulative");
        assert_eq!(lines[1], "0,5e-1,5e-1");
        assert_eq!(lines[3], "2,1.25e-1,8.75e-1");
    }
}
