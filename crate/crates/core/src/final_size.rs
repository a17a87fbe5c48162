//! The limiting susceptible fraction of the epidemic.
//!
//! Once the control is released, `S + I - ln(S)/R0` no longer changes, and
//! the infected fraction vanishes at infinity. The limit of `S` is therefore
//! the smallest root of `phi(R0, x, 0) = phi(R0, S(T), I(T))`, which this
//! module solves by guarded bisection. No long-horizon integration is ever
//! needed.

use crate::error::{Error, Result};
use crate::sir::{integrate, phi, EpidemicParams, EpidemicState, PiecewiseControl};

/// Smallest positive abscissa used when bracketing the decreasing branch of
/// `phi(., 0)`; the function blows up logarithmically at zero, so a sign
/// change over `[EPS_S, S_herd]` is guaranteed.
const EPS_S: f64 = 1e-14;

/// Tolerance under which a terminal state is treated as sitting exactly at
/// the minimum of `phi(., 0)`, i.e. at the herd threshold.
const PHI_MIN_TOL: f64 = 1e-12;

/// A sign-change interval for scalar bisection.
#[derive(Debug, Clone, Copy)]
pub struct RootBracket {
    pub lo: f64,
    pub hi: f64,
    /// Absolute tolerance on the abscissa.
    pub tol: f64,
}

/// Bisect `f` over `bracket`. The endpoint values must have opposite signs
/// (an endpoint evaluating exactly to zero is accepted as the root).
pub fn bisect<F: Fn(f64) -> f64>(f: F, bracket: RootBracket) -> Result<f64> {
    let RootBracket {
        mut lo,
        mut hi,
        tol,
    } = bracket;
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::BracketFailure { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating-point resolution
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Limit of the susceptible fraction given the state at the moment the
/// control is released.
///
/// Returns the smallest root of `phi(R0, x, 0) = phi(R0, s_t, i_t)` on
/// `(0, S_herd]`, resolved to an absolute tolerance of `1e-12`. A terminal
/// state with no infected already below the threshold is its own limit; an
/// infection-free state still above the threshold cannot arise along the
/// dynamics, but is mapped to the mirror root below the threshold all the
/// same.
pub fn s_infinity_from_state(params: &EpidemicParams, s_t: f64, i_t: f64) -> Result<f64> {
    if !s_t.is_finite() || s_t <= 0.0 {
        return Err(Error::Domain(format!(
            "terminal susceptible fraction must be positive, got {s_t}"
        )));
    }
    if !i_t.is_finite() || i_t < 0.0 {
        return Err(Error::Domain(format!(
            "terminal infected fraction must be nonnegative, got {i_t}"
        )));
    }
    let r0 = params.r0();
    let sh = params.herd_threshold();
    if i_t == 0.0 && s_t <= sh {
        // already a root on the decreasing branch
        return Ok(s_t);
    }
    let target = phi(r0, s_t, i_t)?;
    let phi_min = phi(r0, sh, 0.0)?;
    if target - phi_min <= PHI_MIN_TOL {
        // terminal state essentially at herd immunity; the bracket would
        // degenerate around its right endpoint
        return Ok(sh);
    }
    // tol = 0 runs to floating-point resolution: where the root is steep an
    // abscissa tolerance alone would leave the phi residual too large
    bisect(
        |x| phi(r0, x, 0.0).expect("positive abscissa") - target,
        RootBracket {
            lo: EPS_S,
            hi: sh,
            tol: 0.0,
        },
    )
}

/// Limit of the susceptible fraction under an admissible control, computed
/// by integrating only over the intervention window.
pub fn s_infinity_of_control(
    params: &EpidemicParams,
    init: &EpidemicState,
    control: &PiecewiseControl,
    dt: f64,
) -> Result<f64> {
    let traj = integrate(params, init, control, control.horizon(), dt)?;
    let end = traj.terminal_state();
    s_infinity_from_state(params, end.s, end.i)
}

/// Limit of the susceptible fraction under the constant control
/// `u == alpha` applied forever.
///
/// Solves `phi(alpha R0, x, 0) = phi(alpha R0, S0, I0)` for the smallest
/// root. `alpha = 0` freezes the susceptible fraction at its initial value.
pub fn s_infinity_constant_alpha(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
) -> Result<f64> {
    init.validate()?;
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "constant control level must lie in [0, 1], got {alpha}"
        )));
    }
    if alpha == 0.0 {
        return Ok(init.s);
    }
    let gamma = alpha * params.r0();
    let target = phi(gamma, init.s, init.i)?;
    // phi(gamma, ., 0) decreases up to its minimum at 1/gamma; the smallest
    // root lies left of both that minimum and the initial fraction.
    let cap = (1.0 / gamma).min(init.s);
    let phi_at_cap = phi(gamma, cap, 0.0)?;
    if target - phi_at_cap <= PHI_MIN_TOL {
        return Ok(cap);
    }
    bisect(
        |x| phi(gamma, x, 0.0).expect("positive abscissa") - target,
        RootBracket {
            lo: EPS_S,
            hi: cap,
            tol: 0.0,
        },
    )
}
