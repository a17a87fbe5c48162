//! Independent-oracle checks: closed forms, brute-force searches, long-horizon
//! integration and finite differences, cross-validated against the solvers.

use lockdown_opt_core::adjoint::{
    gradient_density, integrate_adjoint, projected_gradient, s_inf_directional_derivative,
    GradientOptions,
};
use lockdown_opt_core::final_size::{s_infinity_from_state, s_infinity_of_control};
use lockdown_opt_core::min_time::minimal_time;
use lockdown_opt_core::switching::{j_value, optimal_t0, sensitivity_s_hat, trisection_t0};
use lockdown_opt_core::{
    integrate, integrate_cells, BangBangControl, EpidemicParams, EpidemicState, PiecewiseControl,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn table2() -> (EpidemicParams, EpidemicState) {
    (
        EpidemicParams::new(0.29, 0.1).unwrap(),
        EpidemicState::seeded(1e3 / 6.7e7).unwrap(),
    )
}

/// Endpoint state of the uncontrolled run at `t = 50` for a given step.
fn endpoint(dt: f64) -> (f64, f64) {
    let (p, init) = table2();
    let c = PiecewiseControl::uncontrolled(50.0).unwrap();
    let traj = integrate(&p, &init, &c, 50.0, dt).unwrap();
    let end = traj.terminal_state();
    (end.s, end.i)
}

#[test]
fn rk4_halving_shrinks_the_endpoint_error_sixteen_fold() {
    let reference = endpoint(0.0025);
    let err = |dt: f64| {
        let e = endpoint(dt);
        (e.0 - reference.0).abs().max((e.1 - reference.1).abs())
    };
    let ratio = err(0.04) / err(0.02);
    assert!(
        (12.0..=20.0).contains(&ratio),
        "order ratio {ratio} outside [12, 20]"
    );
}

#[test]
fn algebraic_limit_matches_long_horizon_integration() {
    let (p, init) = table2();
    let bb = BangBangControl::new(61.9, 0.0, 100.0).unwrap();
    let algebraic = s_infinity_of_control(&p, &init, &bb.to_piecewise(), 0.01).unwrap();
    let traj = integrate(&p, &init, &bb.to_piecewise(), 2000.0, 0.01).unwrap();
    let readout = *traj.s().last().unwrap();
    assert!(
        (algebraic - readout).abs() <= 2e-4,
        "algebraic {algebraic} vs t=2000 readout {readout}"
    );
}

#[test]
fn algebraic_limit_matches_long_horizon_integration_for_random_controls() {
    let (p, init) = table2();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..20 {
        let horizon = rng.gen_range(40.0..160.0);
        let alpha = rng.gen_range(0.0..0.8);
        // up to three random segments
        let n_seg = rng.gen_range(1..=3);
        let mut breakpoints = vec![0.0];
        for _ in 1..n_seg {
            breakpoints.push(rng.gen_range(0.05..0.95) * horizon);
        }
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup();
        let values: Vec<f64> = breakpoints
            .iter()
            .map(|_| rng.gen_range(alpha..=1.0))
            .collect();
        let control = PiecewiseControl::new(alpha, horizon, breakpoints, values).unwrap();
        let algebraic = s_infinity_of_control(&p, &init, &control, 0.01).unwrap();
        let traj = integrate(&p, &init, &control, 2000.0, 0.01).unwrap();
        let readout = *traj.s().last().unwrap();
        assert!(
            (algebraic - readout).abs() <= 5e-4,
            "case {case}: algebraic {algebraic} vs readout {readout}"
        );
    }
}

/// Brute-force argmax of the switch-time objective over a uniform grid,
/// reusing the free prefix of the trajectory so the scan stays quadratic
/// rather than cubic.
fn grid_argmax(
    p: &EpidemicParams,
    init: &EpidemicState,
    alpha: f64,
    horizon: f64,
    dt: f64,
    grid_step: f64,
) -> f64 {
    let free = integrate(
        p,
        init,
        &PiecewiseControl::uncontrolled(horizon).unwrap(),
        horizon,
        dt,
    )
    .unwrap();
    let n_candidates = (horizon / grid_step).round() as usize;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for c in 0..=n_candidates {
        let t0 = c as f64 * grid_step;
        let k = free.node_index(t0).unwrap();
        let value = if k + 1 >= free.len() {
            let end = free.terminal_state();
            s_infinity_from_state(p, end.s, end.i).unwrap()
        } else {
            let cells = vec![alpha; free.len() - 1 - k];
            let suffix = integrate_cells(p, &free.state_at(k), &cells, dt).unwrap();
            let end = suffix.terminal_state();
            s_infinity_from_state(p, end.s, end.i).unwrap()
        };
        if value > best.0 {
            best = (value, t0);
        }
    }
    best.1
}

#[test]
fn switch_root_agrees_with_exhaustive_grid_search() {
    let (p, init) = table2();
    let report = optimal_t0(&p, &init, 0.231, 100.0, 0.01, 1e-3).unwrap();
    let brute = grid_argmax(&p, &init, 0.231, 100.0, 0.01, 0.05);
    assert!(
        (report.t0_star - brute).abs() <= 0.1,
        "root {} vs grid {brute}",
        report.t0_star
    );
}

#[test]
fn objective_is_unimodal_over_a_dense_grid() {
    let (p, init) = table2();
    let n = 200;
    let values: Vec<f64> = (0..=n)
        .map(|k| j_value(&p, &init, 0.231, 100.0, 100.0 * k as f64 / n as f64, 0.02).unwrap())
        .collect();
    let peak = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(k, _)| k)
        .unwrap();
    for k in 1..=peak {
        assert!(
            values[k] >= values[k - 1] - 1e-12,
            "dip before the peak at {k}"
        );
    }
    for k in peak + 1..=n {
        assert!(
            values[k] <= values[k - 1] + 1e-12,
            "rise after the peak at {k}"
        );
    }
}

#[test]
fn cross_method_agreement_on_the_reported_scenario() {
    let (p, init) = table2();
    let root = optimal_t0(&p, &init, 0.231, 100.0, 0.01, 1e-3).unwrap();
    let thirds = trisection_t0(&p, &init, 0.231, 100.0, 0.01, 40).unwrap();
    assert!(
        (root.t0_star - thirds.t0_star).abs() <= 0.1,
        "root {} vs thirds {}",
        root.t0_star,
        thirds.t0_star
    );
}

#[test]
fn analytic_switch_sensitivity_matches_finite_differences() {
    let (p, init) = table2();
    let (alpha, horizon, t0) = (0.231, 100.0, 59.2);
    let h = 1e-3;
    let fine = 2.5e-4; // keeps t0 +/- h on distinct grid nodes
    let s_at = |t0v: f64, tq: f64| -> f64 {
        let bb = BangBangControl::new(t0v, alpha, horizon).unwrap();
        let traj = integrate(&p, &init, &bb.to_piecewise(), horizon, fine).unwrap();
        traj.s()[traj.node_index(tq).unwrap()]
    };
    for tq in [62.0, 65.0, 72.5, 85.0, 100.0] {
        let analytic = sensitivity_s_hat(&p, &init, alpha, horizon, t0, tq, 0.01).unwrap();
        let fd = (s_at(t0 + h, tq) - s_at(t0 - h, tq)) / (2.0 * h);
        let rel = (analytic - fd).abs() / fd.abs();
        assert!(
            rel <= 1e-4,
            "t = {tq}: analytic {analytic} fd {fd} rel {rel}"
        );
    }
}

#[test]
fn adjoint_directional_derivative_matches_central_differences() {
    let (p, init) = table2();
    let (alpha, horizon, dt): (f64, f64, f64) = (0.231, 100.0, 0.01);
    let n = (horizon / dt).round() as usize;
    let bb = BangBangControl::new(59.2, alpha, horizon).unwrap();
    let base = bb.to_piecewise();
    let traj = integrate(&p, &init, &base, horizon, dt).unwrap();
    let adj = integrate_adjoint(&traj, &p).unwrap();
    let s_inf_of = |cells: &[f64]| -> f64 {
        let t = integrate_cells(&p, &init, cells, dt).unwrap();
        let end = t.terminal_state();
        s_infinity_from_state(&p, end.s, end.i).unwrap()
    };
    let base_cells: Vec<f64> = (0..n).map(|k| base.value_at((k + 1) as f64 * dt)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let eps = 1e-5;
    for trial in 0..5 {
        let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dd = s_inf_directional_derivative(&p, &traj, &adj, &h).unwrap();
        let up: Vec<f64> = (0..n).map(|k| base_cells[k] + eps * h[k]).collect();
        let dn: Vec<f64> = (0..n).map(|k| base_cells[k] - eps * h[k]).collect();
        let fd = (s_inf_of(&up) - s_inf_of(&dn)) / (2.0 * eps);
        assert!(
            (dd - fd).abs() <= 1e-5,
            "trial {trial}: adjoint {dd} vs fd {fd}"
        );
    }
}

#[test]
fn gradient_run_reaches_the_bang_bang_optimum() {
    let (p, init) = table2();
    let (alpha, horizon) = (0.231, 100.0);
    let root = optimal_t0(&p, &init, alpha, horizon, 0.01, 1e-3).unwrap();
    let u0 = PiecewiseControl::uncontrolled(horizon).unwrap();
    let opts = GradientOptions {
        max_iters: 2000,
        ..Default::default()
    };
    let run = projected_gradient(&p, &init, alpha, horizon, &u0, &opts).unwrap();
    assert!(
        (run.final_objective - root.s_inf_star).abs() <= 2e-3,
        "gradient {} vs root {}",
        run.final_objective,
        root.s_inf_star
    );
    // L1 distance between the final control and the bang-bang optimum
    let dt = 0.01;
    let n = (horizon / dt).round() as usize;
    let bb = BangBangControl::new(root.t0_star, alpha, horizon)
        .unwrap()
        .to_piecewise();
    let l1: f64 = (0..n)
        .map(|k| {
            let t = (k + 1) as f64 * dt;
            (run.final_control.value_at(t) - bb.value_at(t)).abs() * dt
        })
        .sum();
    assert!(
        l1 <= 2.0 * (1.0 - alpha),
        "L1 distance {l1} exceeds {}",
        2.0 * (1.0 - alpha)
    );
    // the integral switch-time estimate also lands on the root solution
    assert!(
        (run.switch_time_estimate() - root.t0_star).abs() <= 0.5,
        "estimate {} vs root {}",
        run.switch_time_estimate(),
        root.t0_star
    );
}

#[test]
fn gradient_density_has_a_zero_pairing_against_flat_directions_at_interior_points() {
    // sanity: pairing a density against the zero direction vanishes
    let (p, init) = table2();
    let c = PiecewiseControl::constant(0.5, 20.0).unwrap();
    let traj = integrate(&p, &init, &c, 20.0, 0.01).unwrap();
    let adj = integrate_adjoint(&traj, &p).unwrap();
    let h = vec![0.0; traj.len() - 1];
    let dd = s_inf_directional_derivative(&p, &traj, &adj, &h).unwrap();
    assert_eq!(dd, 0.0);
    let g = gradient_density(&traj, &adj, &p);
    assert_eq!(g.len(), traj.len());
}

#[test]
fn minimal_time_round_trip_at_one_hundred_days() {
    let (p, init) = table2();
    let fwd = optimal_t0(&p, &init, 0.231, 100.0, 0.01, 1e-3).unwrap();
    let eps = p.herd_threshold() - fwd.s_inf_star;
    let report = minimal_time(&p, &init, 0.231, eps, 0.1, 0.01).unwrap();
    assert!(
        (report.t_star - 100.0).abs() <= 0.2,
        "round trip gave {}",
        report.t_star
    );
    assert!(report.s_inf_achieved >= p.herd_threshold() - eps - 1e-9);
    // feasibility is tight: a window shorter by the tolerance falls short
    let shorter = optimal_t0(&p, &init, 0.231, report.t_star - 0.1, 0.01, 1e-3).unwrap();
    assert!(shorter.s_inf_star < p.herd_threshold() - eps + 1e-9);
}

#[test]
fn optimal_value_is_monotone_in_intensity_and_window() {
    let (p, init) = table2();
    // nonincreasing in alpha at a fixed window
    let mut prev = f64::INFINITY;
    for alpha in [0.1, 0.231, 0.4, 0.55, 0.7] {
        let v = optimal_t0(&p, &init, alpha, 100.0, 0.01, 1e-3)
            .unwrap()
            .s_inf_star;
        assert!(v <= prev + 1e-9, "value rose at alpha = {alpha}");
        prev = v;
    }
    // nondecreasing in the window at a fixed intensity
    let mut prev = f64::NEG_INFINITY;
    for horizon in [50.0, 100.0, 150.0, 200.0] {
        let v = optimal_t0(&p, &init, 0.231, horizon, 0.01, 1e-3)
            .unwrap()
            .s_inf_star;
        assert!(v >= prev - 1e-9, "value fell at T = {horizon}");
        prev = v;
    }
}
