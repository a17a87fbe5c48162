//! Backward adjoint system, switching function and projected gradient
//! ascent over general admissible controls.
//!
//! The costate `(p_S, p_I)` solves
//!
//! ```text
//! dp_S/dt = beta u I (p_S - p_I)
//! dp_I/dt = beta u S p_S - (beta u S - nu) p_I + nu (u - 1)
//! ```
//!
//! backward from zero terminal data. It drives two quantities:
//!
//! - the switching function `w = S (p_S - p_I)`, whose position relative to
//!   `-1/R0` dictates the optimal control value at each time;
//! - the gradient density `g = (nu - beta S (p_I - p_S)) I`, the functional
//!   derivative of the terminal cost `phi(R0, S(T), I(T))` with respect to
//!   the control. The limiting susceptible fraction and that cost are linked
//!   through the conserved quantity, so the derivative of the limit itself
//!   is `g` divided by the (negative) slope `1 - 1/(R0 S_inf)`; see
//!   [`s_inf_directional_derivative`]. Descending the cost along `g` is
//!   exactly ascent on the limit, which is what [`projected_gradient`]
//!   performs.

use crate::error::{Error, Result};
use crate::final_size::s_infinity_from_state;
use crate::sir::{
    hermite, integrate_cells, EpidemicParams, EpidemicState, PiecewiseControl, Trajectory,
};

/// Costate samples aligned with a forward trajectory grid.
#[derive(Debug, Clone)]
pub struct AdjointTrajectory {
    t: Vec<f64>,
    p_s: Vec<f64>,
    p_i: Vec<f64>,
}

impl AdjointTrajectory {
    pub fn grid(&self) -> &[f64] {
        &self.t
    }

    pub fn p_s(&self) -> &[f64] {
        &self.p_s
    }

    pub fn p_i(&self) -> &[f64] {
        &self.p_i
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

#[inline]
fn costate_rhs(params: &EpidemicParams, u: f64, s: f64, i: f64, p_s: f64, p_i: f64) -> (f64, f64) {
    let beta = params.beta();
    let nu = params.nu();
    (
        beta * u * i * (p_s - p_i),
        beta * u * s * p_s - (beta * u * s - nu) * p_i + nu * (u - 1.0),
    )
}

/// Integrate the costate backward over the trajectory grid with RK4.
///
/// Stage values of the forward state at half-steps come from cubic Hermite
/// interpolation of the stored nodes with their exact derivatives, keeping
/// the backward pass consistent with the forward one to fourth order.
pub fn integrate_adjoint(traj: &Trajectory, params: &EpidemicParams) -> Result<AdjointTrajectory> {
    let n = traj.len() - 1;
    let dt = traj.dt();
    let beta = params.beta();
    let nu = params.nu();
    let mut p_s = vec![0.0; n + 1];
    let mut p_i = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let u = traj.cell_control(k);
        let (s0, i0) = (traj.s()[k], traj.i()[k]);
        let (s1, i1) = (traj.s()[k + 1], traj.i()[k + 1]);
        let ds0 = -u * beta * s0 * i0;
        let di0 = u * beta * s0 * i0 - nu * i0;
        let ds1 = -u * beta * s1 * i1;
        let di1 = u * beta * s1 * i1 - nu * i1;
        let sm = hermite(s0, ds0, s1, ds1, 0.5, dt);
        let im = hermite(i0, di0, i1, di1, 0.5, dt);
        let h = -dt;
        let (a, b) = (p_s[k + 1], p_i[k + 1]);
        let k1 = costate_rhs(params, u, s1, i1, a, b);
        let k2 = costate_rhs(params, u, sm, im, a + 0.5 * h * k1.0, b + 0.5 * h * k1.1);
        let k3 = costate_rhs(params, u, sm, im, a + 0.5 * h * k2.0, b + 0.5 * h * k2.1);
        let k4 = costate_rhs(params, u, s0, i0, a + h * k3.0, b + h * k3.1);
        p_s[k] = a + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        p_i[k] = b + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        if !(p_s[k].is_finite() && p_i[k].is_finite()) {
            return Err(Error::IntegrationFailure { t: traj.grid()[k] });
        }
    }
    Ok(AdjointTrajectory {
        t: traj.grid().to_vec(),
        p_s,
        p_i,
    })
}

/// Gradient density of the terminal cost with respect to the control:
/// `g(t) = (nu - beta S (p_I - p_S)) I` at each grid node.
///
/// Pairing `g` against a control perturbation (`integral g h dt`)
/// differentiates `phi(R0, S(T), I(T))`; divide by
/// [`phi_slope_at_limit`] to differentiate the limiting susceptible
/// fraction instead.
pub fn gradient_density(
    traj: &Trajectory,
    adj: &AdjointTrajectory,
    params: &EpidemicParams,
) -> Vec<f64> {
    let beta = params.beta();
    let nu = params.nu();
    (0..traj.len())
        .map(|k| (nu - beta * traj.s()[k] * (adj.p_i()[k] - adj.p_s()[k])) * traj.i()[k])
        .collect()
}

/// Slope of `x -> phi(R0, x, 0)` at the limit value; negative on
/// `(0, S_herd)`. Converts terminal-cost derivatives into derivatives of
/// the limiting susceptible fraction.
pub fn phi_slope_at_limit(params: &EpidemicParams, s_inf: f64) -> f64 {
    1.0 - 1.0 / (params.r0() * s_inf)
}

/// Directional derivative of the limiting susceptible fraction at the
/// trajectory's control, in the per-cell direction `h_cells`.
pub fn s_inf_directional_derivative(
    params: &EpidemicParams,
    traj: &Trajectory,
    adj: &AdjointTrajectory,
    h_cells: &[f64],
) -> Result<f64> {
    let n = traj.len() - 1;
    if h_cells.len() != n {
        return Err(Error::Precondition(format!(
            "direction has {} cells, trajectory has {n}",
            h_cells.len()
        )));
    }
    let g = gradient_density(traj, adj, params);
    let dt = traj.dt();
    let pairing: f64 = (0..n)
        .map(|k| h_cells[k] * 0.5 * (g[k] + g[k + 1]) * dt)
        .sum();
    let end = traj.terminal_state();
    let s_inf = s_infinity_from_state(params, end.s, end.i)?;
    Ok(pairing / phi_slope_at_limit(params, s_inf))
}

/// The switching function `w = S (p_S - p_I)` on the grid.
pub fn switching_function(traj: &Trajectory, adj: &AdjointTrajectory) -> Vec<f64> {
    (0..traj.len())
        .map(|k| traj.s()[k] * (adj.p_s()[k] - adj.p_i()[k]))
        .collect()
}

/// Days of grid time on which the stationarity sign pattern of the
/// switching function is violated by more than `tol`.
///
/// At a maximizer: `w >= -1/R0` wherever the control sits at its floor,
/// `w <= -1/R0` wherever it sits at 1, and `w = -1/R0` in between.
pub fn pmp_violation_measure(
    traj: &Trajectory,
    adj: &AdjointTrajectory,
    params: &EpidemicParams,
    alpha: f64,
    tol: f64,
) -> f64 {
    let w = switching_function(traj, adj);
    let level = -1.0 / params.r0();
    let mut days = 0.0;
    for (&u, &wk) in traj.u().iter().zip(&w) {
        let violated = if u <= alpha + 1e-9 {
            wk < level - tol
        } else if u >= 1.0 - 1e-9 {
            wk > level + tol
        } else {
            (wk - level).abs() > tol
        };
        if violated {
            days += traj.dt();
        }
    }
    days
}

/// Options for [`projected_gradient`].
#[derive(Debug, Clone)]
pub struct GradientOptions {
    /// Integration step; the control is discretized with one value per cell
    /// of this width.
    pub dt: f64,
    /// Stop once the objective improves by no more than this per step.
    pub tol: f64,
    /// Iteration cap; reaching it without meeting `tol` marks the run as
    /// not converged (the history is still returned).
    pub max_iters: usize,
    /// Keep a copy of the control at every iterate. Off by default: at grid
    /// resolution each copy costs ~16 bytes per cell, which is unbounded
    /// over thousands of iterations.
    pub record_controls: bool,
}

impl Default for GradientOptions {
    fn default() -> Self {
        Self {
            dt: 0.01,
            tol: 1e-9,
            max_iters: 5000,
            record_controls: false,
        }
    }
}

/// One accepted ascent step.
#[derive(Debug, Clone)]
pub struct GradientIterate {
    pub iteration: usize,
    /// Limiting susceptible fraction of the iterate.
    pub objective: f64,
    /// Accepted step length (0 for the starting iterate).
    pub step: f64,
    /// The iterate's control, when recording is enabled.
    pub control: Option<PiecewiseControl>,
}

/// Full record of a projected-gradient run.
#[derive(Debug, Clone)]
pub struct GradientHistory {
    pub iterates: Vec<GradientIterate>,
    pub converged: bool,
    pub final_control: PiecewiseControl,
    pub final_objective: f64,
    alpha: f64,
    dt: f64,
    final_cells: Vec<f64>,
}

impl GradientHistory {
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    /// Objective improvement of the last accepted step.
    pub fn last_delta(&self) -> f64 {
        match self.iterates.len() {
            0 | 1 => 0.0,
            n => self.iterates[n - 1].objective - self.iterates[n - 2].objective,
        }
    }

    /// Equivalent switch time of the final control: the lockdown-weighted
    /// duration `integral (u - alpha) / (1 - alpha) dt`, which recovers `t0`
    /// exactly for a single-switch policy and degrades gracefully for the
    /// smeared transitions the gradient method produces.
    pub fn switch_time_estimate(&self) -> f64 {
        self.final_cells
            .iter()
            .map(|&u| (u - self.alpha) / (1.0 - self.alpha))
            .sum::<f64>()
            * self.dt
    }
}

/// Projected gradient ascent on the limiting susceptible fraction over the
/// admissible set.
///
/// Controls are discretized with one value per grid cell. Each iteration
/// integrates forward, solves the costate backward, steps against the cost
/// gradient and projects onto the band `[alpha, 1]`, backtracking from a
/// unit step until the objective improves. The objective sequence is
/// therefore nondecreasing. A step-length floor of `1e-12` terminates the
/// run as converged (no ascent direction remains at any usable step).
pub fn projected_gradient(
    params: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    u0: &PiecewiseControl,
    opts: &GradientOptions,
) -> Result<GradientHistory> {
    init.validate()?;
    if init.t != 0.0 || init.i <= 0.0 {
        return Err(Error::Precondition(
            "optimization needs an initial epidemic at t = 0 with infected present".into(),
        ));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Precondition(format!(
            "alpha must lie in [0, 1), got {alpha}"
        )));
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(Error::Precondition(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if !opts.tol.is_finite() || opts.tol <= 0.0 {
        return Err(Error::Precondition(format!(
            "objective tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let dt = opts.dt;
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Precondition(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let n = (horizon / dt).round() as usize;
    if n == 0 {
        return Err(Error::Precondition("horizon below one grid cell".into()));
    }
    let mut cells = u0.cell_values(n, dt)?;
    for c in &mut cells {
        if *c < alpha - 1e-9 || *c > 1.0 + 1e-9 {
            return Err(Error::Precondition(format!(
                "starting control value {c} outside [{alpha}, 1]"
            )));
        }
        *c = c.clamp(alpha, 1.0);
    }

    let objective = |cells: &[f64]| -> Result<f64> {
        let traj = integrate_cells(params, init, cells, dt)?;
        let end = traj.terminal_state();
        s_infinity_from_state(params, end.s, end.i)
    };

    let mut current = objective(&cells)?;
    let mut history = Vec::with_capacity(opts.max_iters.min(1024) + 1);
    let record = |cells: &[f64]| -> Result<Option<PiecewiseControl>> {
        if opts.record_controls {
            Ok(Some(PiecewiseControl::from_cells(
                alpha, horizon, cells, dt,
            )?))
        } else {
            Ok(None)
        }
    };
    history.push(GradientIterate {
        iteration: 0,
        objective: current,
        step: 0.0,
        control: record(&cells)?,
    });

    let mut converged = false;
    for iteration in 1..=opts.max_iters {
        let traj = integrate_cells(params, init, &cells, dt)?;
        let adj = integrate_adjoint(&traj, params)?;
        let g = gradient_density(&traj, &adj, params);
        // cell-centered cost gradient
        let gc: Vec<f64> = (0..n).map(|k| 0.5 * (g[k] + g[k + 1])).collect();

        let mut rho = 1.0;
        let mut accepted = None;
        while rho >= 1e-12 {
            let trial: Vec<f64> = (0..n)
                .map(|k| (cells[k] - rho * gc[k]).clamp(alpha, 1.0))
                .collect();
            let value = objective(&trial)?;
            if value > current {
                accepted = Some((trial, value, rho));
                break;
            }
            rho *= 0.5;
        }
        let Some((trial, value, rho)) = accepted else {
            converged = true; // step floor: no ascent direction left
            break;
        };
        let delta = value - current;
        cells = trial;
        current = value;
        history.push(GradientIterate {
            iteration,
            objective: current,
            step: rho,
            control: record(&cells)?,
        });
        if delta <= opts.tol {
            converged = true;
            break;
        }
    }

    let final_control = PiecewiseControl::from_cells(alpha, horizon, &cells, dt)?;
    Ok(GradientHistory {
        iterates: history,
        converged,
        final_control,
        final_objective: current,
        alpha,
        dt,
        final_cells: cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sir::{integrate, BangBangControl};
    use crate::switching::optimal_t0;

    fn table2() -> (EpidemicParams, EpidemicState) {
        (
            EpidemicParams::new(0.29, 0.1).unwrap(),
            EpidemicState::seeded(1e3 / 6.7e7).unwrap(),
        )
    }

    #[test]
    fn costate_vanishes_without_intervention() {
        let (p, init) = table2();
        let c = PiecewiseControl::uncontrolled(100.0).unwrap();
        let traj = integrate(&p, &init, &c, 100.0, 0.01).unwrap();
        let adj = integrate_adjoint(&traj, &p).unwrap();
        assert!(adj.p_s().iter().all(|&v| v == 0.0));
        assert!(adj.p_i().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn total_lockdown_window_has_closed_form_costate() {
        let (p, init) = table2();
        let t0 = 61.9;
        let horizon = 100.0;
        let bb = BangBangControl::new(t0, 0.0, horizon).unwrap();
        let traj = integrate(&p, &init, &bb.to_piecewise(), horizon, 0.01).unwrap();
        let adj = integrate_adjoint(&traj, &p).unwrap();
        let nu = p.nu();
        let mut worst = 0.0f64;
        for k in 0..traj.len() {
            let t = traj.grid()[k];
            if t <= t0 + 1e-9 {
                continue;
            }
            let expected = 1.0 - (nu * (t - horizon)).exp();
            worst = worst
                .max(adj.p_s()[k].abs())
                .max((adj.p_i()[k] - expected).abs());
        }
        assert!(worst <= 1e-9, "closed-form gap {worst}");
    }

    #[test]
    fn transversality_zeroes_the_switching_function_at_the_horizon() {
        let (p, init) = table2();
        let bb = BangBangControl::new(59.2, 0.231, 100.0).unwrap();
        let traj = integrate(&p, &init, &bb.to_piecewise(), 100.0, 0.01).unwrap();
        let adj = integrate_adjoint(&traj, &p).unwrap();
        let w = switching_function(&traj, &adj);
        assert_eq!(*w.last().unwrap(), 0.0);
    }

    #[test]
    fn switching_function_meets_the_threshold_at_the_optimum() {
        let (p, init) = table2();
        let report = optimal_t0(&p, &init, 0.231, 100.0, 0.01, 1e-3).unwrap();
        let bb = BangBangControl::new(report.t0_star, 0.231, 100.0).unwrap();
        let traj = integrate(&p, &init, &bb.to_piecewise(), 100.0, 0.01).unwrap();
        let adj = integrate_adjoint(&traj, &p).unwrap();
        let w = switching_function(&traj, &adj);
        let k = traj.node_index(report.t0_star).unwrap();
        let level = -1.0 / p.r0();
        assert!(
            (w[k] - level).abs() <= 1e-3,
            "w(t0*) - level = {}",
            w[k] - level
        );
        // sign pattern away from the switch, with a half-day exclusion band
        for (j, &wj) in w.iter().enumerate() {
            let t = traj.grid()[j];
            if (t - report.t0_star).abs() <= 0.5 {
                continue;
            }
            if traj.u()[j] == 1.0 {
                assert!(
                    wj < level + 1e-4,
                    "w above level on the free arc at t = {t}"
                );
            } else {
                assert!(
                    wj > level - 1e-4,
                    "w below level on the lockdown arc at t = {t}"
                );
            }
        }
    }

    #[test]
    fn w_slope_identity_holds_along_the_grid() {
        // dw/dt = -S dp_I/dt, checked with central differences
        let (p, init) = table2();
        let bb = BangBangControl::new(59.2, 0.231, 100.0).unwrap();
        let traj = integrate(&p, &init, &bb.to_piecewise(), 100.0, 0.01).unwrap();
        let adj = integrate_adjoint(&traj, &p).unwrap();
        let w = switching_function(&traj, &adj);
        let dt = traj.dt();
        let mut worst = 0.0f64;
        for k in (1..traj.len() - 1).step_by(11) {
            if traj.cell_control(k - 1) != traj.cell_control(k) {
                continue; // derivative jumps at the switch
            }
            let dw = (w[k + 1] - w[k - 1]) / (2.0 * dt);
            let dpi = (adj.p_i()[k + 1] - adj.p_i()[k - 1]) / (2.0 * dt);
            worst = worst.max((dw + traj.s()[k] * dpi).abs());
        }
        assert!(worst <= 1e-6, "identity gap {worst}");
    }

    #[test]
    fn gradient_density_vanishes_without_infected() {
        let (p, _) = table2();
        let init = EpidemicState::new(0.9, 0.0, 0.1, 0.0).unwrap();
        let c = PiecewiseControl::uncontrolled(10.0).unwrap();
        let traj = integrate(&p, &init, &c, 10.0, 0.01).unwrap();
        let adj = integrate_adjoint(&traj, &p).unwrap();
        assert!(gradient_density(&traj, &adj, &p).iter().all(|&g| g == 0.0));
    }

    #[test]
    fn kkt_sign_pattern_at_the_bang_bang_optimum() {
        let (p, init) = table2();
        let report = optimal_t0(&p, &init, 0.231, 100.0, 0.01, 1e-3).unwrap();
        let bb = BangBangControl::new(report.t0_star, 0.231, 100.0).unwrap();
        let traj = integrate(&p, &init, &bb.to_piecewise(), 100.0, 0.01).unwrap();
        let adj = integrate_adjoint(&traj, &p).unwrap();
        let g = gradient_density(&traj, &adj, &p);
        for (k, &gk) in g.iter().enumerate() {
            let t = traj.grid()[k];
            if (t - report.t0_star).abs() <= 0.5 {
                continue;
            }
            if traj.u()[k] == 1.0 {
                // raising the cost gradient below zero keeps u at its cap
                assert!(gk <= 1e-6, "g = {gk} on the free arc at t = {t}");
            } else {
                assert!(gk >= -1e-6, "g = {gk} on the lockdown arc at t = {t}");
            }
        }
        let measure = pmp_violation_measure(&traj, &adj, &p, 0.231, 1e-3);
        assert!(measure < 2.0, "violation measure {measure} days");
    }

    #[test]
    fn stationary_start_stops_immediately() {
        let (p, init) = table2();
        let report = optimal_t0(&p, &init, 0.231, 100.0, 0.01, 1e-4).unwrap();
        let bb = BangBangControl::new(report.t0_star, 0.231, 100.0).unwrap();
        let opts = GradientOptions {
            max_iters: 50,
            ..Default::default()
        };
        let run = projected_gradient(&p, &init, 0.231, 100.0, &bb.to_piecewise(), &opts).unwrap();
        assert!(run.converged);
        // a couple of polishing steps at most; the objective barely moves
        assert!((run.final_objective - report.s_inf_star).abs() <= 1e-6);
    }

    #[test]
    fn ascent_is_monotone_and_feasible() {
        let (p, init) = table2();
        let u0 = PiecewiseControl::uncontrolled(60.0).unwrap();
        let opts = GradientOptions {
            max_iters: 40,
            record_controls: true,
            ..Default::default()
        };
        let run = projected_gradient(&p, &init, 0.3, 60.0, &u0, &opts).unwrap();
        let objectives: Vec<f64> = run.iterates.iter().map(|it| it.objective).collect();
        assert!(objectives.windows(2).all(|w| w[1] >= w[0]));
        for it in &run.iterates {
            let control = it.control.as_ref().expect("recording enabled");
            assert!(control.values().iter().all(|&v| (0.3..=1.0).contains(&v)));
        }
    }
}
