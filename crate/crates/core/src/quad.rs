//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 50;

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64, m: f64, fm: f64, whole: f64, tol: f64, depth: u32) -> Result<f64> {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-15 * (a.abs() + b.abs()) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Solver(format!("quadrature did not converge on [{a}, {b}]")));
    }
    Ok(refine(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)? + refine(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)?)
}

/// `int_a^b f` to absolute tolerance `tol`; `f` must be finite on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    // Split once so that symmetric integrands cannot fool the first estimate.
    let pieces = 8;
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for i in 0..pieces {
        let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
        let (flo, fhi) = (f(lo), f(hi));
        let (m, fm, whole) = simpson(&f, lo, flo, hi, fhi);
        total += refine(&f, lo, flo, hi, fhi, m, fm, whole, tol / pieces as f64, MAX_DEPTH)?;
    }
    Ok(total)
}

/// `int_0^inf f`, mapping `[1, inf)` onto `(0, 1]` by `x = 1/t^2`.
///
/// Suits integrands that vanish at infinity like `x^(-3/2)` or faster. The
/// mapped integrand is read at `t = 1e-9` in place of its endpoint limit.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, tol: f64) -> Result<f64> {
    let head = integrate(&f, 0.0, 1.0, 0.5 * tol)?;
    let tail = integrate(
        |t: f64| {
            let t = t.max(1e-9);
            f(1.0 / (t * t)) * 2.0 / (t * t * t)
        },
        0.0,
        1.0,
        0.5 * tol,
    )?;
    Ok(head + tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_exponentials() {
        assert!((integrate(|x| x * x, 0.0, 3.0, 1e-12).unwrap() - 9.0).abs() < 1e-12);
        assert!((integrate(f64::exp, 0.0, 1.0, 1e-12).unwrap() - (1f64.exp() - 1.0)).abs() < 1e-12);
        let gauss = integrate_half_line(|x| (-x * x).exp(), 1e-12).unwrap();
        assert!((gauss - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-11);
        let tail = integrate_half_line(|x| 1.0 / (1.0 + x).powi(2), 1e-12).unwrap();
        assert!((tail - 1.0).abs() < 1e-11);
    }
}
