//! Optimal switch time of the single-switch lockdown policy.
//!
//! Over the admissible set the optimal control is bang-bang: full
//! transmission until some `t0`, lockdown at the floor `alpha` until the
//! horizon, release afterwards. The scalar objective
//! `j(t0) = S_inf(u_{t0})` rises and then falls, and its unique interior
//! maximizer is the root of the switching condition
//!
//! ```text
//! psi(t0) = (1 - alpha) beta I(T) * integral_{t0}^{T} S(t)/I(t) dt - 1
//! ```
//!
//! which decreases strictly in `t0` and equals -1 at `t0 = T`. This module
//! locates the root by bisection, provides the dedicated total-lockdown
//! branch (where the switch solves a closed-form commutation equation on the
//! uncontrolled trajectory), an interval-thirds search on the equivalent
//! scalar cost, and the analytic sensitivity of the state to the switch
//! time.

use crate::error::{Error, Result};
use crate::final_size::s_infinity_of_control;
use crate::sir::{integrate, phi, BangBangControl, EpidemicParams, EpidemicState, Trajectory};
use std::fmt;

/// Infected fractions below this level make the `S/I` quadrature
/// meaningless; the window is then too long for the switching condition.
const I_UNDERFLOW: f64 = 1e-300;

/// Which route produced a switch-time solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Bisection on the switching condition.
    PsiRoot,
    /// Interval-thirds reduction of the scalar cost.
    Trisection,
    /// Closed-form commutation equation for total lockdown.
    AlphaZeroBranch,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SolveMethod::PsiRoot => "psi-root",
            SolveMethod::Trisection => "trisection",
            SolveMethod::AlphaZeroBranch => "alpha-zero",
        };
        f.write_str(name)
    }
}

/// Result of a switch-time solve.
#[derive(Debug, Clone)]
pub struct SwitchSolveReport {
    /// Optimal switch time in days.
    pub t0_star: f64,
    /// Objective value at the optimum.
    pub s_inf_star: f64,
    /// Switching condition evaluated at `t0 = 0`; nonpositive values mean
    /// the lockdown should start immediately.
    pub psi_at_zero: f64,
    pub method: SolveMethod,
    /// Bisection or thirds iterations performed.
    pub iterations: usize,
    /// Method-dependent stationarity measure: `|psi(t0*)|` for the root
    /// solve, the commutation-equation residual for total lockdown, and the
    /// final interval width for the thirds search.
    pub residual: f64,
}

/// Trapezoid rule over the nodes `values[a..=b]` with an endpoint
/// correction from the exact integrand derivatives, giving O(dt^4) accuracy
/// on the already-computed grid.
fn corrected_trapezoid(values: &[f64], a: usize, b: usize, dt: f64, dfa: f64, dfb: f64) -> f64 {
    debug_assert!(b > a);
    let mut sum = 0.5 * (values[a] + values[b]);
    for v in &values[a + 1..b] {
        sum += v;
    }
    sum * dt - dt * dt / 12.0 * (dfb - dfa)
}

fn check_solver_inputs(init: &EpidemicState, dt: f64) -> Result<()> {
    init.validate()?;
    if init.t != 0.0 {
        return Err(Error::Precondition(
            "initial state must sit at t = 0".into(),
        ));
    }
    if init.i <= 0.0 {
        return Err(Error::Precondition(
            "no epidemic to control: the initial infected fraction is zero".into(),
        ));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Precondition(format!(
            "dt must be positive, got {dt}"
        )));
    }
    Ok(())
}

fn bang_bang_trajectory(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    t0: f64,
    dt: f64,
) -> Result<Trajectory> {
    let bb = BangBangControl::new(t0, alpha, horizon)?;
    integrate(params, init, &bb.to_piecewise(), horizon, dt)
}

fn guard_infected(traj: &Trajectory, from: usize) -> Result<()> {
    for k in from..traj.len() {
        if traj.i()[k] < I_UNDERFLOW {
            return Err(Error::InfectedUnderflow { t: traj.grid()[k] });
        }
    }
    Ok(())
}

/// Objective of the single-switch policy: the limiting susceptible fraction
/// of `u_{t0}`.
pub fn j_value(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    t0: f64,
    dt: f64,
) -> Result<f64> {
    check_solver_inputs(init, dt)?;
    let bb = BangBangControl::new(t0, alpha, horizon)?;
    s_infinity_of_control(params, init, &bb.to_piecewise(), dt)
}

/// The switching condition, evaluated on the trajectory of `u_{t0}`.
///
/// Accepts any `alpha` in `[0, 1)`; at `t0 = T` the integral is empty and
/// the value is exactly -1.
pub fn psi(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    t0: f64,
    dt: f64,
) -> Result<f64> {
    check_solver_inputs(init, dt)?;
    let traj = bang_bang_trajectory(params, init, alpha, horizon, t0, dt)?;
    psi_on_trajectory(params, &traj, alpha, t0)
}

/// As [`psi`], reusing an already-integrated bang-bang trajectory.
fn psi_on_trajectory(
    params: &EpidemicParams,
    traj: &Trajectory,
    alpha: f64,
    t0: f64,
) -> Result<f64> {
    let a = traj.node_index(t0)?;
    let b = traj.len() - 1;
    if a == b {
        return Ok(-1.0);
    }
    guard_infected(traj, a)?;
    let (beta, nu) = (params.beta(), params.nu());
    let ratio: Vec<f64> = (a..=b).map(|k| traj.s()[k] / traj.i()[k]).collect();
    // d/dt (S/I) = S (nu - u beta (S + I)) / I on the lockdown arc
    let dratio =
        |k: usize| traj.s()[k] * (nu - alpha * beta * (traj.s()[k] + traj.i()[k])) / traj.i()[k];
    let integral = corrected_trapezoid(&ratio, 0, b - a, traj.dt(), dratio(a), dratio(b));
    Ok((1.0 - alpha) * beta * traj.i()[b] * integral - 1.0)
}

/// Algebraically equivalent form of the switching condition,
/// `(1/alpha - 1) (I(T)/I(t0) + nu * integral I(T)/I - 1/(1-alpha))`.
///
/// Requires `alpha > 0`. Exposed for cross-checking the quadratures.
pub fn psi_rescaled(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    t0: f64,
    dt: f64,
) -> Result<f64> {
    check_solver_inputs(init, dt)?;
    if alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::Precondition(format!(
            "rescaled switching condition needs alpha in (0, 1), got {alpha}"
        )));
    }
    let traj = bang_bang_trajectory(params, init, alpha, horizon, t0, dt)?;
    let a = traj.node_index(t0)?;
    let b = traj.len() - 1;
    if a == b {
        return Ok(-1.0);
    }
    guard_infected(&traj, a)?;
    let (beta, nu) = (params.beta(), params.nu());
    let inv: Vec<f64> = (a..=b).map(|k| 1.0 / traj.i()[k]).collect();
    // d/dt (1/I) = (nu - u beta S) / I on the lockdown arc
    let dinv = |k: usize| (nu - alpha * beta * traj.s()[k]) / traj.i()[k];
    let integral = corrected_trapezoid(&inv, 0, b - a, traj.dt(), dinv(a), dinv(b));
    let i_end = traj.i()[b];
    Ok((1.0 / alpha - 1.0) * (i_end / traj.i()[a] + nu * i_end * integral - 1.0 / (1.0 - alpha)))
}

/// Optimal switch time for a partial lockdown (`alpha` in `(0, 1)`).
///
/// If the switching condition is already nonpositive at zero the lockdown
/// starts immediately; otherwise its unique root on `(0, T)` is bracketed
/// and bisected to `tol_t` days. Total lockdown has its own closed-form
/// branch in [`optimal_t0_alpha_zero`].
pub fn optimal_t0(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    dt: f64,
    tol_t: f64,
) -> Result<SwitchSolveReport> {
    check_solver_inputs(init, dt)?;
    if alpha == 0.0 {
        return Err(Error::Precondition(
            "alpha = 0 requires the total-lockdown branch (optimal_t0_alpha_zero)".into(),
        ));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Precondition(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if !tol_t.is_finite() || tol_t <= 0.0 {
        return Err(Error::Precondition(format!(
            "switch-time tolerance must be positive, got {tol_t}"
        )));
    }
    let psi0 = psi(params, init, alpha, horizon, 0.0, dt)?;
    if psi0 <= 0.0 {
        let s_inf = j_value(params, init, alpha, horizon, 0.0, dt)?;
        return Ok(SwitchSolveReport {
            t0_star: 0.0,
            s_inf_star: s_inf,
            psi_at_zero: psi0,
            method: SolveMethod::PsiRoot,
            iterations: 0,
            residual: psi0.abs(),
        });
    }
    // psi decreases strictly and psi(T) = -1, so [0, T] brackets the root.
    let mut lo = 0.0;
    let mut hi = horizon;
    let mut iterations = 0;
    while hi - lo > tol_t {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating-point resolution
        }
        if psi(params, init, alpha, horizon, mid, dt)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let t0_star = 0.5 * (lo + hi);
    let s_inf_star = j_value(params, init, alpha, horizon, t0_star, dt)?;
    let residual = psi(params, init, alpha, horizon, t0_star, dt)?.abs();
    Ok(SwitchSolveReport {
        t0_star,
        s_inf_star,
        psi_at_zero: psi0,
        method: SolveMethod::PsiRoot,
        iterations,
        residual,
    })
}

/// Optimal switch time under total lockdown (`alpha = 0`).
///
/// The switch is delayed at all only when the horizon exceeds
/// `ln(S0 / (S0 - S_herd)) / nu`; past that threshold the optimal switch is
/// the unique time where the uncontrolled susceptible curve meets
/// `S_herd / (1 - exp(nu (t0 - T)))`.
pub fn optimal_t0_alpha_zero(
    params: &EpidemicParams,
    init: &EpidemicState,
    horizon: f64,
    dt: f64,
    tol_t: f64,
) -> Result<SwitchSolveReport> {
    check_solver_inputs(init, dt)?;
    if !tol_t.is_finite() || tol_t <= 0.0 {
        return Err(Error::Precondition(format!(
            "switch-time tolerance must be positive, got {tol_t}"
        )));
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::Precondition(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let sh = params.herd_threshold();
    if init.s <= sh {
        return Err(Error::Precondition(format!(
            "initial susceptible fraction {} must exceed the herd threshold {sh}",
            init.s
        )));
    }
    let nu = params.nu();
    let psi0 = psi(params, init, 0.0, horizon, 0.0, dt)?;
    let threshold = (init.s / (init.s - sh)).ln() / nu;
    if horizon <= threshold {
        let s_inf = j_value(params, init, 0.0, horizon, 0.0, dt)?;
        let residual = (init.s * (1.0 - (-nu * horizon).exp()) - sh).abs();
        return Ok(SwitchSolveReport {
            t0_star: 0.0,
            s_inf_star: s_inf,
            psi_at_zero: psi0,
            method: SolveMethod::AlphaZeroBranch,
            iterations: 0,
            residual,
        });
    }
    // Commutation equation: the left side is the nonincreasing uncontrolled
    // susceptible curve, the right side increases to infinity at t0 = T.
    // Work on the snapped grid horizon so every probe stays interpolable.
    let free = bang_bang_trajectory(params, init, 0.0, horizon, horizon, dt)?;
    let t_end = *free.grid().last().unwrap();
    let gap = |t0: f64| -> Result<f64> {
        let s = free.s_between(params, t0)?;
        Ok(s - sh / (1.0 - (nu * (t0 - t_end)).exp()))
    };
    let mut lo = 0.0;
    let mut hi = t_end - 0.5 * dt.min(tol_t);
    if gap(hi)? >= 0.0 {
        // horizon so short the curves only meet at its very edge
        hi = t_end;
    }
    let mut iterations = 0;
    while hi - lo > tol_t {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating-point resolution
        }
        if gap(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let t0_star = 0.5 * (lo + hi);
    let s_inf_star = j_value(params, init, 0.0, horizon, t0_star, dt)?;
    let residual = gap(t0_star)?.abs();
    Ok(SwitchSolveReport {
        t0_star,
        s_inf_star,
        psi_at_zero: psi0,
        method: SolveMethod::AlphaZeroBranch,
        iterations,
        residual,
    })
}

/// Interval-thirds search for the optimal switch time.
///
/// Runs exactly `k` reduction rounds on the scalar cost
/// `phi(R0, S(T), I(T))`, which falls and then rises in `t0`, keeping the
/// third that must contain the minimizer, and returns the midpoint of the
/// final interval. `k = 0` degenerates to the midpoint of `[0, T]`. See
/// [`trisection_t0_to_width`] for a width-based stop instead of a fixed
/// round count.
pub fn trisection_t0(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    dt: f64,
    k: usize,
) -> Result<SwitchSolveReport> {
    trisect_impl(params, init, alpha, horizon, dt, TrisectStop::Rounds(k))
}

/// Interval-thirds search that stops once the interval is at most `width`
/// days wide.
pub fn trisection_t0_to_width(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    dt: f64,
    width: f64,
) -> Result<SwitchSolveReport> {
    if !width.is_finite() || width <= 0.0 {
        return Err(Error::Precondition(format!(
            "target width must be positive, got {width}"
        )));
    }
    trisect_impl(params, init, alpha, horizon, dt, TrisectStop::Width(width))
}

enum TrisectStop {
    Rounds(usize),
    Width(f64),
}

fn trisect_impl(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    dt: f64,
    stop: TrisectStop,
) -> Result<SwitchSolveReport> {
    check_solver_inputs(init, dt)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Precondition(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    let cost = |t0: f64| -> Result<f64> {
        let traj = bang_bang_trajectory(params, init, alpha, horizon, t0, dt)?;
        let end = traj.terminal_state();
        phi(params.r0(), end.s, end.i)
    };
    let mut lo = 0.0;
    let mut hi = horizon;
    let mut rounds = 0usize;
    let done = |lo: f64, hi: f64, rounds: usize| match stop {
        TrisectStop::Rounds(k) => rounds >= k,
        TrisectStop::Width(w) => hi - lo <= w,
    };
    while !done(lo, hi, rounds) {
        let third = (hi - lo) / 3.0;
        let left = lo + third;
        let right = lo + 2.0 * third;
        if left <= lo || right >= hi {
            break; // interval at floating-point resolution
        }
        if cost(left)? >= cost(right)? {
            lo = left;
        } else {
            hi = right;
        }
        rounds += 1;
    }
    let t0_star = 0.5 * (lo + hi);
    let s_inf_star = j_value(params, init, alpha, horizon, t0_star, dt)?;
    let psi_at_zero = psi(params, init, alpha, horizon, 0.0, dt)?;
    Ok(SwitchSolveReport {
        t0_star,
        s_inf_star,
        psi_at_zero,
        method: SolveMethod::Trisection,
        iterations: rounds,
        residual: hi - lo,
    })
}

/// Derivative of the susceptible curve with respect to the switch time,
/// evaluated at time `t` of the `u_{t0}` trajectory.
///
/// On the lockdown arc (`t > t0`) the analytic expression is
/// `(alpha - 1) beta S(t) I(t) (1 + nu I(t0) * integral_{t0}^{t} ds / I(s))`;
/// exactly at the switch the total derivative of `S(t0)` is
/// `-beta S(t0) I(t0)`.
pub fn sensitivity_s_hat(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    t0: f64,
    t: f64,
    dt: f64,
) -> Result<f64> {
    check_solver_inputs(init, dt)?;
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Precondition(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    if t < t0 - 0.5 * dt || t > horizon + 0.5 * dt {
        return Err(Error::Precondition(format!(
            "query time {t} outside the lockdown window [{t0}, {horizon}]"
        )));
    }
    let traj = bang_bang_trajectory(params, init, alpha, horizon, t0, dt)?;
    let a = traj.node_index(t0)?;
    let b = traj.node_index(t)?;
    let (beta, nu) = (params.beta(), params.nu());
    if b <= a {
        // switch-point derivative: the state leaves the uncontrolled arc
        return Ok(-beta * traj.s()[a] * traj.i()[a]);
    }
    guard_infected(&traj, a)?;
    let inv: Vec<f64> = (a..=b).map(|k| 1.0 / traj.i()[k]).collect();
    let dinv = |k: usize| (nu - alpha * beta * traj.s()[k]) / traj.i()[k];
    let integral = corrected_trapezoid(&inv, 0, b - a, traj.dt(), dinv(a), dinv(b));
    Ok((alpha - 1.0) * beta * traj.s()[b] * traj.i()[b] * (1.0 + nu * traj.i()[a] * integral))
}

/// Closed form of the scalar cost of `u_{t0}`:
/// `phi(R0, S0, I0) + (nu/beta) (1/alpha - 1) ln(S(T)/S(t0))`.
///
/// Must agree with `phi(R0, S(T), I(T))` up to integration error; the
/// logarithmic form needs `alpha` in `(0, 1)`.
pub fn j_phi_closed_form(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    t0: f64,
    dt: f64,
) -> Result<f64> {
    check_solver_inputs(init, dt)?;
    if alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::Precondition(format!(
            "closed-form cost needs alpha in (0, 1), got {alpha}"
        )));
    }
    let traj = bang_bang_trajectory(params, init, alpha, horizon, t0, dt)?;
    let a = traj.node_index(t0)?;
    let b = traj.len() - 1;
    let c0 = phi(params.r0(), init.s, init.i)?;
    let ratio = traj.s()[b] / traj.s()[a];
    Ok(c0 + params.nu() / params.beta() * (1.0 / alpha - 1.0) * ratio.ln())
}
