//! Parameter sweeps over a horizon, intensity, reproduction number or
//! imposed switch time, executed on a worker pool with deterministic row
//! order.

use crate::config::{ScenarioConfig, SolverChoice, SweepAxis, SweepConfig};
use crate::error::CliError;
use crate::output::{fmt12, write_csv};
use lockdown_opt_core::switching::{
    j_value, optimal_t0, optimal_t0_alpha_zero, psi, trisection_t0,
};
use lockdown_opt_core::EpidemicParams;
use rayon::prelude::*;
use std::path::Path;

/// One sweep point. Failed points carry a `failed(...)` method tag and NaN
/// numerics so the sweep as a whole still completes.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub axis_value: f64,
    pub t0_star: f64,
    pub s_inf_star: f64,
    pub psi0: f64,
    pub method: String,
    pub residual: f64,
}

fn solve_point(cfg: &ScenarioConfig, axis: SweepAxis, value: f64) -> Result<SweepRow, CliError> {
    let mut params = cfg.params;
    let mut alpha = cfg.alpha;
    let mut horizon = cfg.horizon;
    match axis {
        SweepAxis::Horizon => horizon = value,
        SweepAxis::Alpha => alpha = value,
        SweepAxis::R0 => params = EpidemicParams::new(value * cfg.params.nu(), cfg.params.nu())?,
        SweepAxis::SwitchTime => {
            // evaluate the objective at an imposed switch instead of solving
            let s_inf = j_value(&params, &cfg.init, alpha, horizon, value, cfg.dt)?;
            let psi_here = psi(&params, &cfg.init, alpha, horizon, value, cfg.dt)?;
            return Ok(SweepRow {
                axis_value: value,
                t0_star: value,
                s_inf_star: s_inf,
                psi0: psi_here,
                method: "j-eval".to_string(),
                residual: 0.0,
            });
        }
    }
    let report = match cfg.solver {
        SolverChoice::Trisection => {
            trisection_t0(&params, &cfg.init, alpha, horizon, cfg.dt, cfg.trisection_k)?
        }
        _ => {
            if alpha == 0.0 {
                optimal_t0_alpha_zero(&params, &cfg.init, horizon, cfg.dt, cfg.tol_t)?
            } else {
                optimal_t0(&params, &cfg.init, alpha, horizon, cfg.dt, cfg.tol_t)?
            }
        }
    };
    Ok(SweepRow {
        axis_value: value,
        t0_star: report.t0_star,
        s_inf_star: report.s_inf_star,
        psi0: report.psi_at_zero,
        method: report.method.to_string(),
        residual: report.residual,
    })
}

fn failed_row(value: f64, err: &CliError) -> SweepRow {
    let kind = match err {
        CliError::Solver(e) => {
            let text = e.to_string();
            text.split([':', ','])
                .next()
                .unwrap_or("solver")
                .to_string()
        }
        _ => "config".to_string(),
    };
    SweepRow {
        axis_value: value,
        t0_star: f64::NAN,
        s_inf_star: f64::NAN,
        psi0: f64::NAN,
        method: format!("failed({kind})"),
        residual: f64::NAN,
    }
}

/// Number of workers: `LOCKDOWN_OPT_THREADS` when set, otherwise the
/// available parallelism.
pub fn worker_count() -> usize {
    std::env::var("LOCKDOWN_OPT_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Run every sweep point on a bounded worker pool; rows come back in input
/// order regardless of completion order.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| CliError::config("threads", e.to_string()))?;
    let rows = pool.install(|| {
        cfg.values
            .par_iter()
            .map(|&v| solve_point(&cfg.fixed, cfg.axis, v).unwrap_or_else(|e| failed_row(v, &e)))
            .collect::<Vec<_>>()
    });
    Ok(rows)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> std::io::Result<()> {
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{},{}",
                fmt12(r.axis_value),
                fmt12(r.t0_star),
                fmt12(r.s_inf_star),
                fmt12(r.psi0),
                r.method,
                fmt12(r.residual)
            )
        })
        .collect();
    write_csv(
        path,
        "axis_value,t0_star,s_inf_star,psi0,method,residual",
        &lines,
    )
}
