//! Scenario execution: solve, then emit a trajectory CSV over twice the
//! intervention window and a summary JSON.

use crate::config::{ScenarioConfig, SolverChoice};
use crate::error::CliError;
use crate::output::{fmt12, write_csv, write_json};
use lockdown_opt_core::adjoint::{projected_gradient, GradientOptions};
use lockdown_opt_core::min_time::{minimal_time, MinTimeReport};
use lockdown_opt_core::switching::{optimal_t0, optimal_t0_alpha_zero, psi, trisection_t0};
use lockdown_opt_core::{alpha_bar, integrate, BangBangControl, PiecewiseControl, Trajectory};
use serde::Serialize;
use std::path::Path;

/// Scenario summary; field order fixes the JSON key order.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub beta: f64,
    pub nu: f64,
    pub r0: f64,
    pub s_herd: f64,
    pub alpha: f64,
    pub horizon_t: f64,
    pub dt: f64,
    pub initial_susceptible: f64,
    pub initial_infected: f64,
    pub initial_removed: f64,
    /// Reachability threshold; absent when the epidemic starts below the
    /// herd threshold.
    pub alpha_bar: Option<f64>,
    pub t0_star: f64,
    pub s_inf_star: f64,
    pub psi0: f64,
    pub method: String,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub summary: Summary,
    /// Trajectory of the solved policy on `[0, 2T]`.
    pub trajectory: Trajectory,
}

/// Solve a scenario with its configured route and integrate the resulting
/// policy over twice the window so the release phase is visible.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome, CliError> {
    let (control, t0_star, s_inf_star, psi0, method, iterations, residual) = match cfg.solver {
        SolverChoice::PsiRoot | SolverChoice::AlphaZero => {
            let report = if cfg.alpha == 0.0 {
                optimal_t0_alpha_zero(&cfg.params, &cfg.init, cfg.horizon, cfg.dt, cfg.tol_t)?
            } else {
                optimal_t0(
                    &cfg.params,
                    &cfg.init,
                    cfg.alpha,
                    cfg.horizon,
                    cfg.dt,
                    cfg.tol_t,
                )?
            };
            let control =
                BangBangControl::new(report.t0_star, cfg.alpha, cfg.horizon)?.to_piecewise();
            (
                control,
                report.t0_star,
                report.s_inf_star,
                report.psi_at_zero,
                report.method.to_string(),
                report.iterations,
                report.residual,
            )
        }
        SolverChoice::Trisection => {
            let report = trisection_t0(
                &cfg.params,
                &cfg.init,
                cfg.alpha,
                cfg.horizon,
                cfg.dt,
                cfg.trisection_k,
            )?;
            let control =
                BangBangControl::new(report.t0_star, cfg.alpha, cfg.horizon)?.to_piecewise();
            (
                control,
                report.t0_star,
                report.s_inf_star,
                report.psi_at_zero,
                report.method.to_string(),
                report.iterations,
                report.residual,
            )
        }
        SolverChoice::Gradient => {
            let u0 = PiecewiseControl::uncontrolled(cfg.horizon)?;
            let opts = GradientOptions {
                dt: cfg.dt,
                tol: cfg.gradient_tol,
                max_iters: cfg.gradient_max_iters,
                record_controls: false,
            };
            let run =
                projected_gradient(&cfg.params, &cfg.init, cfg.alpha, cfg.horizon, &u0, &opts)?;
            let psi0 = psi(&cfg.params, &cfg.init, cfg.alpha, cfg.horizon, 0.0, cfg.dt)?;
            let control = run.final_control.clone();
            (
                control,
                run.switch_time_estimate(),
                run.final_objective,
                psi0,
                "gradient".to_string(),
                run.iterations(),
                run.last_delta().abs(),
            )
        }
    };

    let trajectory = integrate(&cfg.params, &cfg.init, &control, 2.0 * cfg.horizon, cfg.dt)?;
    let summary = Summary {
        beta: cfg.params.beta(),
        nu: cfg.params.nu(),
        r0: cfg.params.r0(),
        s_herd: cfg.params.herd_threshold(),
        alpha: cfg.alpha,
        horizon_t: cfg.horizon,
        dt: cfg.dt,
        initial_susceptible: cfg.init.s,
        initial_infected: cfg.init.i,
        initial_removed: cfg.init.r,
        alpha_bar: alpha_bar(&cfg.params, &cfg.init).ok(),
        t0_star,
        s_inf_star,
        psi0,
        method,
        iterations,
        residual,
    };
    Ok(ScenarioOutcome {
        summary,
        trajectory,
    })
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> std::io::Result<()> {
    let rows: Vec<String> = (0..traj.len())
        .map(|k| {
            format!(
                "{},{},{},{},{}",
                fmt12(traj.grid()[k]),
                fmt12(traj.s()[k]),
                fmt12(traj.i()[k]),
                fmt12(traj.r()[k]),
                fmt12(traj.u()[k])
            )
        })
        .collect();
    write_csv(path, "t,S,I,R,u", &rows)
}

pub fn write_summary_json(path: &Path, summary: &Summary) -> std::io::Result<()> {
    write_json(path, summary)
}

/// Minimal-window report; field order fixes the JSON key order.
#[derive(Debug, Clone, Serialize)]
pub struct MinTimeSummary {
    pub alpha: f64,
    pub epsilon: f64,
    pub t_star: f64,
    pub t0_star_at_t_star: f64,
    pub s_inf_achieved: f64,
    pub s_herd: f64,
    pub bracket_width: f64,
}

pub fn run_min_time(cfg: &ScenarioConfig, epsilon: f64) -> Result<MinTimeSummary, CliError> {
    let report: MinTimeReport = minimal_time(
        &cfg.params,
        &cfg.init,
        cfg.alpha,
        epsilon,
        cfg.tol_t.max(0.1),
        cfg.dt,
    )?;
    Ok(MinTimeSummary {
        alpha: cfg.alpha,
        epsilon: report.epsilon,
        t_star: report.t_star,
        t0_star_at_t_star: report.t0_star_at_t_star,
        s_inf_achieved: report.s_inf_achieved,
        s_herd: cfg.params.herd_threshold(),
        bracket_width: report.bracket_width,
    })
}
