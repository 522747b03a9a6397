//! Maximum-likelihood estimation of the Zeta shape parameter.
//!
//! The MLE solves the score equation
//!
//! ```text
//! zeta'(s)/zeta(s) = -mean(ln X_i)
//! ```
//!
//! The left side is strictly increasing on (1, inf) (its derivative is the
//! Fisher information, a variance), so the root is unique whenever the
//! sample contains a value >= 2. An all-ones sample has mean log zero while
//! `zeta'/zeta < 0` everywhere, so the likelihood increases toward
//! `s -> inf` and the fit reports [`Error::DegenerateSample`].

use crate::distributions::Sample;
use crate::error::{Error, Result};
use crate::special::{zeta_all, PrecisionPolicy};

/// Outcome of a fit.
#[derive(Debug, Clone, Copy)]
pub struct MleResult {
    pub s_hat: f64,
    pub iterations: u32,
    pub converged: bool,
    /// Bracket actually used by the root finder.
    pub bracket: (f64, f64),
}

/// Zeta score `u(x; s) = -ln x - zeta'(s)/zeta(s)`.
pub fn score(x: u64, s: f64, policy: &PrecisionPolicy) -> Result<f64> {
    if x < 1 {
        return Err(Error::Domain("score needs x >= 1".into()));
    }
    let (z0, z1, _) = zeta_all(s, policy)?;
    Ok(-(x as f64).ln() - z1 / z0)
}

/// Fisher information `I(s) = zeta''/zeta - (zeta'/zeta)^2 = Var(ln X)`.
pub fn fisher_information(s: f64) -> Result<f64> {
    let (z0, z1, z2) = zeta_all(s, &PrecisionPolicy::default())?;
    Ok(z2 / z0 - (z1 / z0) * (z1 / z0))
}

/// Linearized one-step estimate `s0 + I(s0)^-1 mean(u(X_i; s0))`.
///
/// Diagnostic only: under the null it agrees with the MLE to first order
/// and the gap shrinks like 1/n.
pub fn linearized_estimate(sample: &Sample, s0: f64) -> Result<f64> {
    let policy = PrecisionPolicy::default();
    let (z0, z1, z2) = zeta_all(s0, &policy)?;
    let info = z2 / z0 - (z1 / z0) * (z1 / z0);
    let mean_score = -sample.mean_log() - z1 / z0;
    Ok(s0 + mean_score / info)
}

fn score_ratio(s: f64, policy: &PrecisionPolicy) -> Result<f64> {
    let (z0, z1, _) = zeta_all(s, policy)?;
    Ok(z1 / z0)
}

/// Fit the shape by solving the score equation with bracketed Brent.
///
/// `tol` is the residual target `|zeta'/zeta(s_hat) + mean ln X|`. The
/// initial bracket is `(1 + 1e-6, s_max)`; if the root lies above `s_max`
/// the bracket expands up to 200 before reporting [`Error::Bracket`].
pub fn mle_fit(sample: &Sample, s_max: f64, tol: f64) -> Result<MleResult> {
    let mean_log = sample.mean_log();
    if mean_log <= 0.0 {
        return Err(Error::DegenerateSample);
    }
    solve_score_root(mean_log, s_max, tol)
}

/// Root of `zeta'(s)/zeta(s) + log_mean = 0` for a given positive mean of
/// `ln X`. Shared by the sample fit and the population KL projection,
/// which plugs in `E[ln X]` under an alternative.
pub fn solve_score_equation(log_mean: f64, s_max: f64, tol: f64) -> Result<f64> {
    if !(log_mean > 0.0) {
        return Err(Error::Domain(format!(
            "the score equation needs a positive mean of ln X, got {log_mean}"
        )));
    }
    Ok(solve_score_root(log_mean, s_max, tol)?.s_hat)
}

fn solve_score_root(mean_log: f64, s_max: f64, tol: f64) -> Result<MleResult> {
    if !(s_max > 1.0) {
        return Err(Error::Domain(format!("s_max must exceed 1, got {s_max}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tol must be positive, got {tol}")));
    }
    let policy = PrecisionPolicy::default();
    let g = |s: f64| -> Result<f64> { Ok(score_ratio(s, &policy)? + mean_log) };

    let lo = 1.0 + 1e-6;
    let mut hi = s_max;
    let g_lo = g(lo)?;
    if g_lo > 0.0 {
        // root below the bracket floor: report the floor, residual-checked
        return Ok(MleResult {
            s_hat: lo,
            iterations: 0,
            converged: g_lo.abs() <= tol,
            bracket: (lo, lo),
        });
    }
    let mut g_hi = g(hi)?;
    while g_hi < 0.0 {
        if hi >= 200.0 {
            return Err(Error::Bracket(format!(
                "score equation has no root below s = 200 (mean ln X = {mean_log:.3e})"
            )));
        }
        hi = (2.0 * hi).min(200.0);
        g_hi = g(hi)?;
    }
    let (s_hat, iterations, converged) = brent(lo, hi, g_lo, g_hi, tol, 200, &g)?;
    Ok(MleResult {
        s_hat,
        iterations,
        converged,
        bracket: (lo, hi),
    })
}

/// Brent's method on a bracketing interval; `fa`, `fb` are the endpoint
/// values. Converges when the residual meets `tol` or the interval shrinks
/// to floating-point resolution.
fn brent<F>(
    a0: f64,
    b0: f64,
    fa0: f64,
    fb0: f64,
    tol: f64,
    max_iter: u32,
    f: &F,
) -> Result<(f64, u32, bool)>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b, mut fa, mut fb) = (a0, b0, fa0, fb0);
    if fa * fb > 0.0 {
        return Err(Error::Bracket("endpoints do not bracket a root".into()));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for iter in 1..=max_iter {
        if fb.abs() <= tol {
            return Ok((b, iter, true));
        }
        if fa.abs() < fb.abs() {
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut fa, &mut fb);
            c = a;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * 1e-14;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 {
            return Ok((b, iter, fb.abs() <= tol.max(1e-9)));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic / secant step
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }
    Ok((b, max_iter, false))
}
