//! Controlled SIR dynamics: domain types, the fixed-step RK4 integrator and
//! the conserved quantity that links finite-horizon states to the limit of
//! the epidemic.
//!
//! The state equations are
//!
//! ```text
//! dS/dt = -u(t) beta S I
//! dI/dt =  u(t) beta S I - nu I
//! dR/dt =  nu I
//! ```
//!
//! with `u(t)` a transmission-reduction factor. Their sum is zero, so
//! `S + I + R = 1` is preserved. On any interval where `u` is constant at
//! `c > 0`, the quantity `S + I - ln(S)/(c R0)` (see [`phi`]) is conserved.

use crate::error::{Error, Result};

/// Mass-balance tolerance for a single state sample.
pub const STATE_MASS_TOL: f64 = 1e-9;

/// Transmission rate `beta` and removal rate `nu`, per day.
///
/// Construction enforces the standing assumption `R0 = beta/nu > 1`; below
/// it no epidemic can occur and none of the control problems are meaningful.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicParams {
    beta: f64,
    nu: f64,
}

impl EpidemicParams {
    pub fn new(beta: f64, nu: f64) -> Result<Self> {
        if !beta.is_finite() || beta <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "beta must be a positive rate, got {beta}"
            )));
        }
        if !nu.is_finite() || nu <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "nu must be a positive rate, got {nu}"
            )));
        }
        if beta / nu <= 1.0 {
            return Err(Error::InvalidParams(format!(
                "basic reproduction number beta/nu = {} must exceed 1",
                beta / nu
            )));
        }
        Ok(Self { beta, nu })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Basic reproduction number `beta/nu`.
    pub fn r0(&self) -> f64 {
        self.beta / self.nu
    }

    /// Susceptible fraction below which the infected count decreases.
    pub fn herd_threshold(&self) -> f64 {
        herd_threshold(self.beta, self.nu)
    }
}

/// `nu/beta`, the herd-immunity threshold.
///
/// Free-standing so it can be evaluated at the `R0 = 1` boundary that the
/// [`EpidemicParams`] constructor rejects (`beta == nu` gives 1).
pub fn herd_threshold(beta: f64, nu: f64) -> f64 {
    nu / beta
}

/// Compartment fractions at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpidemicState {
    pub s: f64,
    pub i: f64,
    pub r: f64,
    /// Time in days.
    pub t: f64,
}

impl EpidemicState {
    pub fn new(s: f64, i: f64, r: f64, t: f64) -> Result<Self> {
        let state = Self { s, i, r, t };
        state.validate()?;
        Ok(state)
    }

    /// A fully naive population seeded with infected fraction `i0` at t = 0.
    pub fn seeded(i0: f64) -> Result<Self> {
        Self::new(1.0 - i0, i0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s.is_finite() && self.i.is_finite() && self.r.is_finite() && self.t.is_finite()) {
            return Err(Error::InvalidState("non-finite component".into()));
        }
        if self.s <= 0.0 {
            return Err(Error::InvalidState(format!(
                "susceptible fraction must be positive, got {}",
                self.s
            )));
        }
        if self.i < 0.0 || self.r < 0.0 {
            return Err(Error::InvalidState(format!(
                "infected and removed fractions must be nonnegative, got i = {}, r = {}",
                self.i, self.r
            )));
        }
        let mass = self.s + self.i + self.r;
        if (mass - 1.0).abs() > STATE_MASS_TOL {
            return Err(Error::InvalidState(format!(
                "fractions must sum to 1 within {STATE_MASS_TOL}, got {mass}"
            )));
        }
        Ok(())
    }
}

/// Piecewise-constant admissible control.
///
/// Values lie in `[alpha, 1]` on the intervention window `[0, horizon]` and
/// the control is identically 1 afterwards. Sampling is left-continuous: a
/// breakpoint at `b` means the new value applies on `(b, next)`, so `u(b)`
/// still reads the old value.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseControl {
    alpha: f64,
    horizon: f64,
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseControl {
    pub fn new(alpha: f64, horizon: f64, breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidControl(format!(
                "lockdown bound alpha must lie in [0, 1), got {alpha}"
            )));
        }
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::InvalidControl(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidControl(
                "need one value per breakpoint and at least one segment".into(),
            ));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidControl(format!(
                "first breakpoint must be 0, got {}",
                breakpoints[0]
            )));
        }
        if *breakpoints.last().unwrap() > horizon {
            return Err(Error::InvalidControl(format!(
                "last breakpoint {} exceeds horizon {horizon}",
                breakpoints.last().unwrap()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidControl(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        for &v in &values {
            if !v.is_finite() || v < alpha || v > 1.0 {
                return Err(Error::InvalidControl(format!(
                    "control value {v} outside the admissible band [{alpha}, 1]"
                )));
            }
        }
        Ok(Self {
            alpha,
            horizon,
            breakpoints,
            values,
        })
    }

    /// `u == 1` everywhere (no intervention).
    pub fn uncontrolled(horizon: f64) -> Result<Self> {
        Self::new(0.0, horizon, vec![0.0], vec![1.0])
    }

    /// `u == level` on the whole window.
    pub fn constant(level: f64, horizon: f64) -> Result<Self> {
        Self::new(level, horizon, vec![0.0], vec![level])
    }

    /// Rebuild a control from per-cell samples (`cells[k]` on
    /// `(k dt, (k+1) dt]`), merging equal neighbours.
    pub fn from_cells(alpha: f64, horizon: f64, cells: &[f64], dt: f64) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidControl("no cells".into()));
        }
        let mut breakpoints = vec![0.0];
        let mut values = vec![cells[0]];
        for (k, &v) in cells.iter().enumerate().skip(1) {
            if v != *values.last().unwrap() {
                breakpoints.push(k as f64 * dt);
                values.push(v);
            }
        }
        Self::new(alpha, horizon, breakpoints, values)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Left-continuous sample of `u` at time `t` (1 beyond the horizon).
    pub fn value_at(&self, t: f64) -> f64 {
        if t > self.horizon {
            return 1.0;
        }
        if t <= self.breakpoints[0] {
            return self.values[0];
        }
        // last segment whose breakpoint lies strictly left of t
        let k = self.breakpoints.partition_point(|&b| b < t);
        self.values[k - 1]
    }

    /// Per-cell control values on a grid of `n` steps of width `dt`:
    /// `cells[k]` is the value on `(k dt, (k+1) dt]`.
    ///
    /// Breakpoints and the horizon are snapped to the nearest grid node; a
    /// breakpoint that collides with another after snapping, or that falls
    /// beyond the representable range, is a grid mismatch.
    pub(crate) fn cell_values(&self, n: usize, dt: f64) -> Result<Vec<f64>> {
        let snap = |b: f64| -> Result<usize> {
            let idx = (b / dt).round();
            if !idx.is_finite() || idx < 0.0 || (b - idx * dt).abs() > dt / 2.0 + 1e-9 * dt {
                return Err(Error::GridMismatch { breakpoint: b, dt });
            }
            Ok(idx as usize)
        };
        let mut seg_starts = Vec::with_capacity(self.breakpoints.len());
        for &b in &self.breakpoints {
            seg_starts.push(snap(b)?);
        }
        for w in seg_starts.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::GridMismatch {
                    breakpoint: self.breakpoints[1],
                    dt,
                });
            }
        }
        let horizon_idx = snap(self.horizon)?;
        let mut cells = vec![1.0; n];
        let mut seg = 0usize;
        for (k, cell) in cells.iter_mut().enumerate() {
            if k >= horizon_idx {
                break; // beyond the window every cell stays at 1
            }
            while seg + 1 < seg_starts.len() && seg_starts[seg + 1] <= k {
                seg += 1;
            }
            *cell = self.values[seg];
        }
        Ok(cells)
    }
}

/// Single-switch policy: `u = 1` on `[0, t0]`, `alpha` on `(t0, horizon]`,
/// and 1 afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BangBangControl {
    pub t0: f64,
    pub alpha: f64,
    pub horizon: f64,
}

impl BangBangControl {
    pub fn new(t0: f64, alpha: f64, horizon: f64) -> Result<Self> {
        if !horizon.is_finite() || horizon <= 0.0 {
            return Err(Error::InvalidControl(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !t0.is_finite() || t0 < 0.0 || t0 > horizon {
            return Err(Error::InvalidControl(format!(
                "switch time {t0} outside [0, {horizon}]"
            )));
        }
        if !alpha.is_finite() || !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidControl(format!(
                "lockdown level alpha must lie in [0, 1), got {alpha}"
            )));
        }
        Ok(Self { t0, alpha, horizon })
    }

    pub fn to_piecewise(&self) -> PiecewiseControl {
        let (breakpoints, values) = if self.t0 <= 0.0 {
            (vec![0.0], vec![self.alpha])
        } else if self.t0 >= self.horizon {
            (vec![0.0], vec![1.0])
        } else {
            (vec![0.0, self.t0], vec![1.0, self.alpha])
        };
        PiecewiseControl::new(self.alpha, self.horizon, breakpoints, values)
            .expect("validated fields produce an admissible control")
    }
}

/// Uniformly sampled solution of the controlled system.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dt: f64,
    t: Vec<f64>,
    s: Vec<f64>,
    i: Vec<f64>,
    r: Vec<f64>,
    u: Vec<f64>,
}

impl Trajectory {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of grid nodes (steps + 1).
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn grid(&self) -> &[f64] {
        &self.t
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn i(&self) -> &[f64] {
        &self.i
    }

    pub fn r(&self) -> &[f64] {
        &self.r
    }

    /// Left-continuous control samples at the grid nodes.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// Control value on cell `k`, i.e. on `(t_k, t_{k+1}]`.
    pub fn cell_control(&self, k: usize) -> f64 {
        self.u[k + 1]
    }

    pub fn state_at(&self, k: usize) -> EpidemicState {
        EpidemicState {
            s: self.s[k],
            i: self.i[k],
            r: self.r[k],
            t: self.t[k],
        }
    }

    pub fn terminal_state(&self) -> EpidemicState {
        self.state_at(self.len() - 1)
    }

    /// Grid index of `time`, snapped to the nearest node.
    pub fn node_index(&self, time: f64) -> Result<usize> {
        let start = self.t[0];
        let idx = ((time - start) / self.dt).round();
        if !idx.is_finite() || idx < 0.0 || idx as usize >= self.len() {
            return Err(Error::GridMismatch {
                breakpoint: time,
                dt: self.dt,
            });
        }
        Ok(idx as usize)
    }

    /// Susceptible fraction at an off-grid time, by cubic Hermite
    /// interpolation with the exact node derivatives `dS/dt = -u beta S I`.
    pub fn s_between(&self, params: &EpidemicParams, time: f64) -> Result<f64> {
        let start = self.t[0];
        let pos = (time - start) / self.dt;
        if !pos.is_finite() || pos < -1e-9 || pos > (self.len() - 1) as f64 + 1e-9 {
            return Err(Error::GridMismatch {
                breakpoint: time,
                dt: self.dt,
            });
        }
        let k = (pos.floor().max(0.0) as usize).min(self.len() - 2);
        let theta = pos - k as f64;
        let u = self.cell_control(k);
        let d0 = -u * params.beta() * self.s[k] * self.i[k];
        let d1 = -u * params.beta() * self.s[k + 1] * self.i[k + 1];
        Ok(hermite(self.s[k], d0, self.s[k + 1], d1, theta, self.dt))
    }
}

/// Cubic Hermite evaluation on one cell; `theta` in [0, 1].
pub(crate) fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, theta: f64, dt: f64) -> f64 {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + theta;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h10 * dt * d0 + h01 * y1 + h11 * dt * d1
}

#[inline]
fn derivs(params: &EpidemicParams, u: f64, s: f64, i: f64) -> (f64, f64, f64) {
    let infection = u * params.beta() * s * i;
    let removal = params.nu() * i;
    (-infection, infection - removal, removal)
}

/// One classical RK4 step of the controlled system with `u` held constant.
///
/// The caller is responsible for `0 <= u <= 1`; the function itself only
/// rejects non-finite results (a sign that `dt` is too large).
pub fn rk4_step(
    state: EpidemicState,
    u: f64,
    params: &EpidemicParams,
    dt: f64,
) -> Result<EpidemicState> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Precondition(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let (s, i, r) = (state.s, state.i, state.r);
    let k1 = derivs(params, u, s, i);
    let k2 = derivs(params, u, s + 0.5 * dt * k1.0, i + 0.5 * dt * k1.1);
    let k3 = derivs(params, u, s + 0.5 * dt * k2.0, i + 0.5 * dt * k2.1);
    let k4 = derivs(params, u, s + dt * k3.0, i + dt * k3.1);
    let next = EpidemicState {
        s: s + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        i: i + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        r: r + dt / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
        t: state.t + dt,
    };
    if !(next.s.is_finite() && next.i.is_finite() && next.r.is_finite()) {
        return Err(Error::IntegrationFailure { t: state.t });
    }
    Ok(next)
}

/// Integrate the controlled system on `[0, t_end]` with step `dt`.
///
/// `t_end` is snapped to the nearest grid node; control breakpoints must be
/// representable on the grid (they are snapped to the nearest node). The
/// initial state must sit at `t = 0` so that control times and grid times
/// agree.
pub fn integrate(
    params: &EpidemicParams,
    init: &EpidemicState,
    control: &PiecewiseControl,
    t_end: f64,
    dt: f64,
) -> Result<Trajectory> {
    if init.t != 0.0 {
        return Err(Error::Precondition(format!(
            "initial state must be at t = 0, got t = {}",
            init.t
        )));
    }
    if !t_end.is_finite() || t_end <= 0.0 {
        return Err(Error::Precondition(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::Precondition(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let n = (t_end / dt).round() as usize;
    if n == 0 {
        return Err(Error::Precondition(format!(
            "t_end = {t_end} is below half a step"
        )));
    }
    let cells = control.cell_values(n, dt)?;
    integrate_cells(params, init, &cells, dt)
}

/// Integrate with an explicit per-cell control: `cells[k]` applies on
/// `(t_k, t_{k+1}]`. The initial state may sit at any time.
pub fn integrate_cells(
    params: &EpidemicParams,
    init: &EpidemicState,
    cells: &[f64],
    dt: f64,
) -> Result<Trajectory> {
    init.validate()?;
    if cells.is_empty() {
        return Err(Error::Precondition("empty control cell array".into()));
    }
    let n = cells.len();
    let start = init.t;
    let mut t = Vec::with_capacity(n + 1);
    let mut s = Vec::with_capacity(n + 1);
    let mut i = Vec::with_capacity(n + 1);
    let mut r = Vec::with_capacity(n + 1);
    let mut u = Vec::with_capacity(n + 1);
    t.push(start);
    s.push(init.s);
    i.push(init.i);
    r.push(init.r);
    u.push(cells[0]);
    let mut state = *init;
    for (k, &uc) in cells.iter().enumerate() {
        state = rk4_step(state, uc, params, dt)?;
        state.t = start + (k + 1) as f64 * dt; // avoid accumulated drift
        t.push(state.t);
        s.push(state.s);
        i.push(state.i);
        r.push(state.r);
        u.push(uc);
    }
    Ok(Trajectory { dt, t, s, i, r, u })
}

/// The conserved quantity `s + i - ln(s)/gamma`.
///
/// Along any arc where the control is constant at `c > 0`, `phi(c * R0, S, I)`
/// does not change; with `gamma = R0` it connects the state at the end of the
/// intervention to the limit of the epidemic.
pub fn phi(gamma: f64, s: f64, i: f64) -> Result<f64> {
    if !gamma.is_finite() || gamma <= 0.0 {
        return Err(Error::Domain(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if !s.is_finite() || s <= 0.0 {
        return Err(Error::Domain(format!(
            "susceptible fraction must be positive, got {s}"
        )));
    }
    Ok(s + i - s.ln() / gamma)
}

/// Largest constant lockdown level that can halt the epidemic arbitrarily
/// close to the herd threshold:
/// `S_herd / (S0 + I0 - S_herd) * (ln S0 - ln S_herd)`.
///
/// Requires the epidemic to still be above the threshold (`S0 > S_herd`).
pub fn alpha_bar(params: &EpidemicParams, init: &EpidemicState) -> Result<f64> {
    init.validate()?;
    let sh = params.herd_threshold();
    if init.s <= sh {
        return Err(Error::Precondition(format!(
            "initial susceptible fraction {} must exceed the herd threshold {sh}",
            init.s
        )));
    }
    Ok(sh / (init.s + init.i - sh) * (init.s.ln() - sh.ln()))
}
