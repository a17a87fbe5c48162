//! Optimal lockdown policies for the controlled SIR epidemic.
//!
//! The model is the classical SIR system with a transmission-reduction
//! control `u` bounded in `[alpha, 1]` on a finite intervention window
//! `[0, T]` and equal to 1 afterwards. The objective is the limiting
//! susceptible fraction `S_inf`, which this crate maximizes along three
//! independent routes:
//!
//! - a root solve of the switching condition `psi` that characterizes the
//!   unique optimal switch time of the bang-bang policy
//!   ([`switching::optimal_t0`], with a dedicated closed-form branch for
//!   total lockdown in [`switching::optimal_t0_alpha_zero`]),
//! - interval-thirds reduction of the equivalent scalar cost
//!   ([`switching::trisection_t0`]),
//! - projected gradient ascent over general admissible controls, driven by
//!   the backward adjoint system ([`adjoint::projected_gradient`]).
//!
//! A fourth solver ([`min_time::minimal_time`]) inverts the monotone map
//! from the window length to the optimal value, yielding the shortest
//! intervention that ends a prescribed distance below the herd threshold.
//!
//! All limits are computed algebraically: the quantity
//! `S + I - ln(S)/gamma` is conserved along constant-control arcs, which
//! turns the infinite-horizon limit into a scalar root-finding problem on
//! the terminal state ([`final_size`]).

pub mod adjoint;
pub mod error;
pub mod final_size;
pub mod min_time;
pub mod sir;
pub mod switching;

pub use error::{Error, Result};
pub use sir::{
    alpha_bar, integrate, integrate_cells, phi, rk4_step, BangBangControl, EpidemicParams,
    EpidemicState, PiecewiseControl, Trajectory,
};
