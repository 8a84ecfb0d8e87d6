//! Time integration of the original `(u, w)` system and of the Cole-Hopf
//! transformed `(u, v)` system on a truncated half-line.
//!
//! Both formulations use a vertex-centred finite-volume discretisation: node
//! `i` owns the dual cell `[x_{i-1/2}, x_{i+1/2}]` (half cells at the ends),
//! and every conservation law is updated through interface fluxes. The total
//! flux vanishes at both ends, so the trapezoid mass of `u` is conserved to
//! rounding. The analytic steady state satisfies both zero-flux identities
//! at every `x`, so the truncation boundary at `x = L` does not disturb it.
//!
//! IMEX Euler treats the diffusion implicitly (one tridiagonal solve per
//! unknown) and the transport and reaction terms explicitly.

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{KsError, Result};
use crate::grid::{trapezoid_integral, Field};
use crate::steady::SteadyStateProfile;
use crate::transform::cole_hopf_inverse;
use crate::tridiag::solve_tridiagonal;

/// Which pair of unknowns is evolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Density and chemical concentration.
    Uw,
    /// Density and `v = -w_x / w`.
    Uv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Imex,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStep {
    /// Chosen from the current state with safety factor [`DT_SAFETY`].
    Auto,
    Fixed(f64),
}

pub const DT_SAFETY: f64 = 0.4;
/// Default `w_floor`, relative to `b`.
pub const DEFAULT_W_FLOOR_REL: f64 = 1e-12;
/// Undershoot of `u` below zero that is tolerated (and reported).
pub const POSITIVITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub formulation: Formulation,
    pub time_step: TimeStep,
    pub t_final: f64,
    pub scheme: Scheme,
    pub snapshot_every: usize,
    pub convergence_tol: f64,
    /// Lower bound on `w` for the `(u, w)` formulation; `None` means
    /// `1e-12 b`.
    pub w_floor: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            formulation: Formulation::Uv,
            time_step: TimeStep::Auto,
            t_final: 200.0,
            scheme: Scheme::Imex,
            snapshot_every: 100,
            convergence_tol: 1e-6,
            w_floor: None,
        }
    }
}

impl SolverConfig {
    pub fn w_floor(&self, b: f64) -> f64 {
        self.w_floor.unwrap_or(DEFAULT_W_FLOOR_REL * b)
    }

    pub fn validate(&self, b: f64) -> Result<()> {
        let bad = |what: String| Err(KsError::PreconditionViolated(what));
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return bad(format!("t_final must be > 0, got {}", self.t_final));
        }
        if let TimeStep::Fixed(dt) = self.time_step {
            if !(dt > 0.0 && dt < self.t_final) {
                return bad(format!("dt must lie in (0, t_final), got {dt}"));
            }
        }
        if self.snapshot_every == 0 {
            return bad("snapshot_every must be >= 1".into());
        }
        if !(self.convergence_tol > 0.0) {
            return bad(format!(
                "convergence_tol must be > 0, got {}",
                self.convergence_tol
            ));
        }
        let floor = self.w_floor(b);
        if !(floor > 0.0 && floor < b) {
            return bad(format!("w_floor must lie in (0, b), got {floor}"));
        }
        Ok(())
    }
}

/// Solution at one instant. `second` holds `w` or `v` depending on the
/// formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: Field,
    pub second: Field,
    pub formulation: Formulation,
    initial_mass: f64,
}

impl SimState {
    pub fn new(u: Field, second: Field, formulation: Formulation) -> Result<Self> {
        u.ensure_same_grid(&second)?;
        u.check_finite()?;
        second.check_finite()?;
        let initial_mass = trapezoid_integral(&u)?;
        Ok(SimState {
            t: 0.0,
            u,
            second,
            formulation,
            initial_mass,
        })
    }

    pub fn initial_mass(&self) -> f64 {
        self.initial_mass
    }

    pub fn mass(&self) -> Result<f64> {
        trapezoid_integral(&self.u)
    }

    /// `|mass(t) - mass(0)| / mass(0)`.
    pub fn mass_drift(&self) -> Result<f64> {
        let m = self.mass()?;
        let scale = if self.initial_mass != 0.0 {
            self.initial_mass.abs()
        } else {
            1.0
        };
        Ok((m - self.initial_mass).abs() / scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub state: SimState,
    pub mass_drift: f64,
    pub max_cfl: f64,
    pub min_u: f64,
}

/// Grid quantities reused by every update.
struct Cells {
    h: Vec<f64>,
    dual: Vec<f64>,
}

impl Cells {
    fn of(field: &Field) -> Self {
        Cells {
            h: field.grid().spacings(),
            dual: field.grid().dual_lengths(),
        }
    }
}

/// Updates `c_i dq/dt = F_{i+1/2} - F_{i-1/2}` with `F = D q_x + adv` and
/// `F = 0` at both ends. `adv[i]` is the explicit flux through interface
/// `i + 1/2`.
fn conservative_update(
    q: &[f64],
    adv: &[f64],
    diffusivity: f64,
    dt: f64,
    cells: &Cells,
    scheme: Scheme,
) -> Vec<f64> {
    let n = q.len();
    let h = &cells.h;
    let c = &cells.dual;
    let net_adv = |i: usize| {
        let right = if i < n - 1 { adv[i] } else { 0.0 };
        let left = if i > 0 { adv[i - 1] } else { 0.0 };
        right - left
    };
    match scheme {
        Scheme::Imex => {
            let mut lower = vec![0.0; n];
            let mut diag = c.clone();
            let mut upper = vec![0.0; n];
            let mut rhs: Vec<f64> = (0..n).map(|i| c[i] * q[i] + dt * net_adv(i)).collect();
            for i in 0..n - 1 {
                let a = dt * diffusivity / h[i];
                diag[i] += a;
                diag[i + 1] += a;
                upper[i] = -a;
                lower[i + 1] = -a;
            }
            solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
            rhs
        }
        Scheme::Explicit => {
            let diff: Vec<f64> = (0..n - 1)
                .map(|i| diffusivity * (q[i + 1] - q[i]) / h[i])
                .collect();
            (0..n)
                .map(|i| {
                    let right = if i < n - 1 { diff[i] } else { 0.0 };
                    let left = if i > 0 { diff[i - 1] } else { 0.0 };
                    q[i] + dt / c[i] * (right - left + net_adv(i))
                })
                .collect()
        }
    }
}

/// Interface transport speeds; the Courant number at interface `i` is
/// `speed[i] dt / h[i]`.
fn interface_speeds(state: &SimState, profile: &SteadyStateProfile) -> Result<Vec<f64>> {
    let p = profile.params();
    let u = state.u.values();
    let h = state.u.grid().spacings();
    Ok(match state.formulation {
        Formulation::Uv => {
            let v = state.second.values();
            let w = cole_hopf_inverse(&state.second, p.b)?;
            let g: Vec<f64> = w.values().iter().map(|w| w.powf(p.m - 1.0)).collect();
            (0..h.len())
                .map(|i| {
                    let vb = 0.5 * (v[i] + v[i + 1]).abs();
                    let ub = 0.5 * (u[i] + u[i + 1]).max(0.0);
                    let gb = 0.5 * (g[i] + g[i + 1]);
                    (p.chi * vb).max(2.0 * p.eps * vb) + (p.chi * ub * gb).sqrt()
                })
                .collect()
        }
        Formulation::Uw => {
            let w = state.second.values();
            (0..h.len())
                .map(|i| p.chi * ((w[i + 1].ln() - w[i].ln()) / h[i]).abs())
                .collect()
        }
    })
}

fn courant(speeds: &[f64], h: &[f64], dt: f64) -> f64 {
    speeds
        .iter()
        .zip(h)
        .map(|(s, h)| s * dt / h)
        .fold(0.0, f64::max)
}

/// Largest stable step for the current state: the advective Courant limit,
/// the centred-transport limit `2D/a^2` under implicit diffusion, and for
/// the explicit scheme also `h^2 / max(1, eps)`.
pub fn stable_dt(
    state: &SimState,
    config: &SolverConfig,
    profile: &SteadyStateProfile,
) -> Result<f64> {
    let p = profile.params();
    let h = state.u.grid().spacings();
    let speeds = interface_speeds(state, profile)?;
    let mut limit = speeds
        .iter()
        .zip(&h)
        .filter(|(s, _)| **s > 0.0)
        .map(|(s, h)| h / s)
        .fold(f64::INFINITY, f64::min);
    let a_max = speeds.iter().fold(0.0, |m: f64, s| m.max(*s));
    if a_max > 0.0 {
        limit = limit.min(2.0 * p.eps.min(1.0) / (a_max * a_max));
    }
    if config.scheme == Scheme::Explicit {
        let hmin = state.u.grid().min_spacing();
        limit = limit.min(hmin * hmin / p.eps.max(1.0));
    }
    if !limit.is_finite() {
        limit = config.t_final;
    }
    Ok(DT_SAFETY * limit)
}

fn check_w_floor(w: &Field, floor: f64) -> Result<()> {
    match w.values().iter().enumerate().find(|(_, &v)| !(v >= floor)) {
        Some((index, &value)) => Err(KsError::WBelowFloor {
            index,
            value,
            floor,
        }),
        None => Ok(()),
    }
}

fn check_stability(
    state: &SimState,
    config: &SolverConfig,
    profile: &SteadyStateProfile,
    dt: f64,
) -> Result<f64> {
    let h = state.u.grid().spacings();
    let max_cfl = courant(&interface_speeds(state, profile)?, &h, dt);
    if max_cfl > 1.0 {
        return Err(KsError::CflViolation { cfl: max_cfl });
    }
    if config.scheme == Scheme::Explicit {
        let hmin = state.u.grid().min_spacing();
        let parabolic = 2.0 * profile.params().eps.max(1.0) * dt / (hmin * hmin);
        if parabolic > 1.0 {
            return Err(KsError::CflViolation { cfl: parabolic });
        }
    }
    Ok(max_cfl)
}

fn finish(
    state: &SimState,
    u: Vec<f64>,
    second: Vec<f64>,
    dt: f64,
    max_cfl: f64,
) -> Result<StepResult> {
    let grid = state.u.grid();
    let next = SimState {
        t: state.t + dt,
        u: Field::new(grid, u)?,
        second: Field::new(grid, second)?,
        formulation: state.formulation,
        initial_mass: state.initial_mass,
    };
    next.u.check_finite()?;
    next.second.check_finite()?;
    let min_u = next.u.values().iter().fold(f64::INFINITY, |m, &v| m.min(v));
    Ok(StepResult {
        mass_drift: next.mass_drift()?,
        state: next,
        max_cfl,
        min_u,
    })
}

fn resolve_dt(
    state: &SimState,
    config: &SolverConfig,
    profile: &SteadyStateProfile,
) -> Result<f64> {
    match config.time_step {
        TimeStep::Fixed(dt) => Ok(dt),
        TimeStep::Auto => stable_dt(state, config, profile),
    }
}

/// One step of the original system with chemotactic flux
/// `u_x - chi u (ln w)_x` and `w_t = eps w_xx - u w^m`.
pub fn step_uw(
    state: &SimState,
    config: &SolverConfig,
    profile: &SteadyStateProfile,
) -> Result<StepResult> {
    let dt = resolve_dt(state, config, profile)?;
    advance_uw(state, config, profile, dt)
}

/// One step of the transformed system with fluxes `u_x + chi u v` and
/// `eps v_x - (eps v^2 - u w^(m-1))`, `w` reconstructed from `v`.
pub fn step_uv(
    state: &SimState,
    config: &SolverConfig,
    profile: &SteadyStateProfile,
) -> Result<StepResult> {
    let dt = resolve_dt(state, config, profile)?;
    advance_uv(state, config, profile, dt)
}

pub fn advance(
    state: &SimState,
    config: &SolverConfig,
    profile: &SteadyStateProfile,
    dt: f64,
) -> Result<StepResult> {
    match state.formulation {
        Formulation::Uw => advance_uw(state, config, profile, dt),
        Formulation::Uv => advance_uv(state, config, profile, dt),
    }
}

fn advance_uw(
    state: &SimState,
    config: &SolverConfig,
    profile: &SteadyStateProfile,
    dt: f64,
) -> Result<StepResult> {
    if state.formulation != Formulation::Uw {
        return Err(KsError::PreconditionViolated(
            "step_uw needs a (u, w) state".into(),
        ));
    }
    let p = profile.params();
    let floor = config.w_floor(p.b);
    state.u.check_finite()?;
    state.second.check_finite()?;
    check_w_floor(&state.second, floor)?;
    let max_cfl = check_stability(state, config, profile, dt)?;

    let cells = Cells::of(&state.u);
    let u = state.u.values();
    let w = state.second.values();
    let n = u.len();
    let ln_w: Vec<f64> = w.iter().map(|w| w.ln()).collect();
    let adv: Vec<f64> = (0..n - 1)
        .map(|i| -p.chi * 0.5 * (u[i] + u[i + 1]) * (ln_w[i + 1] - ln_w[i]) / cells.h[i])
        .collect();
    let u_next = conservative_update(u, &adv, 1.0, dt, &cells, config.scheme);

    let w_right = profile.w(state.u.grid().length());
    let h = &cells.h;
    let c = &cells.dual;
    let w_next = match config.scheme {
        Scheme::Imex => {
            let mut lower = vec![0.0; n];
            let mut diag = vec![1.0; n];
            let mut upper = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            rhs[0] = p.b;
            rhs[n - 1] = w_right;
            for i in 1..n - 1 {
                let al = dt * p.eps / h[i - 1];
                let ar = dt * p.eps / h[i];
                lower[i] = -al;
                upper[i] = -ar;
                diag[i] = c[i] + al + ar;
                rhs[i] = c[i] * (w[i] - dt * u[i] * w[i].powf(p.m));
            }
            solve_tridiagonal(&lower, &diag, &upper, &mut rhs);
            rhs
        }
        Scheme::Explicit => {
            let mut next = vec![0.0; n];
            next[0] = p.b;
            next[n - 1] = w_right;
            for i in 1..n - 1 {
                let lap = (w[i + 1] - w[i]) / h[i] - (w[i] - w[i - 1]) / h[i - 1];
                next[i] = w[i] + dt * (p.eps * lap / c[i] - u[i] * w[i].powf(p.m));
            }
            next
        }
    };
    let result = finish(state, u_next, w_next, dt, max_cfl)?;
    check_w_floor(&result.state.second, floor)?;
    Ok(result)
}

fn advance_uv(
    state: &SimState,
    config: &SolverConfig,
    profile: &SteadyStateProfile,
    dt: f64,
) -> Result<StepResult> {
    if state.formulation != Formulation::Uv {
        return Err(KsError::PreconditionViolated(
            "step_uv needs a (u, v) state".into(),
        ));
    }
    let p = profile.params();
    state.u.check_finite()?;
    state.second.check_finite()?;
    let max_cfl = check_stability(state, config, profile, dt)?;

    let cells = Cells::of(&state.u);
    let u = state.u.values();
    let v = state.second.values();
    let n = u.len();
    let w = cole_hopf_inverse(&state.second, p.b)?;
    let g: Vec<f64> = w.values().iter().map(|w| w.powf(p.m - 1.0)).collect();

    let mut adv_u = Vec::with_capacity(n - 1);
    let mut adv_v = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let vb = 0.5 * (v[i] + v[i + 1]);
        adv_u.push(p.chi * 0.5 * (u[i] + u[i + 1]) * vb);
        let v_sq = 0.5 * (v[i] * v[i] + v[i + 1] * v[i + 1]);
        let uw = 0.5 * (u[i] * g[i] + u[i + 1] * g[i + 1]);
        adv_v.push(uw - p.eps * v_sq);
    }
    let u_next = conservative_update(u, &adv_u, 1.0, dt, &cells, config.scheme);
    let v_next = conservative_update(v, &adv_v, p.eps, dt, &cells, config.scheme);
    finish(state, u_next, v_next, dt, max_cfl)
}

/// Classification of a window of sup-norm deviations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStatus {
    Converged,
    Plateaued,
    Diverging,
    /// Still decreasing but above tolerance.
    Decaying,
}

impl ConvergenceStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ConvergenceStatus::Converged => "converged",
            ConvergenceStatus::Plateaued => "plateaued",
            ConvergenceStatus::Diverging => "diverging",
            ConvergenceStatus::Decaying => "decaying",
        }
    }
}

/// Classifies the window `deviations` (oldest first, at least three).
pub fn detect_convergence(deviations: &[f64], tol: f64) -> Result<ConvergenceStatus> {
    if deviations.len() < 3 {
        return Err(KsError::PreconditionViolated(format!(
            "convergence detection needs at least 3 records, got {}",
            deviations.len()
        )));
    }
    let first = deviations[0];
    let last = deviations[deviations.len() - 1];
    Ok(if last < tol {
        ConvergenceStatus::Converged
    } else if last >= 2.0 * first {
        ConvergenceStatus::Diverging
    } else if (last - first).abs() < 0.01 * first.abs() {
        ConvergenceStatus::Plateaued
    } else {
        ConvergenceStatus::Decaying
    })
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub trajectory: Vec<SimState>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub converged: bool,
    pub status: ConvergenceStatus,
    pub steps: usize,
    pub max_mass_drift: f64,
    pub max_cfl: f64,
    pub min_u: f64,
    /// Running supremum of the perturbation measure.
    pub n_sup: f64,
    /// `max_t E(t) / E(0)`.
    pub c_obs: f64,
    /// Time integral of the dissipation, trapezoid over snapshots.
    pub dissipation_integral: f64,
}

impl SimulationOutput {
    pub fn final_state(&self) -> &SimState {
        self.trajectory
            .last()
            .expect("trajectory holds the initial state")
    }

    pub fn final_record(&self) -> &DiagnosticsRecord {
        self.diagnostics
            .last()
            .expect("diagnostics hold the initial record")
    }
}

/// Runs until `t_final` or until both sup-norm deviations from the steady
/// state drop below `convergence_tol`, recording a snapshot every
/// `snapshot_every` steps (and at both ends).
pub fn run_simulation(
    u0: Field,
    second0: Field,
    config: &SolverConfig,
    profile: &SteadyStateProfile,
) -> Result<SimulationOutput> {
    let b = profile.params().b;
    config.validate(b)?;
    let mut state = SimState::new(u0, second0, config.formulation)?;
    if config.formulation == Formulation::Uw {
        check_w_floor(&state.second, config.w_floor(b))?;
    }
    let mut diagnostics = vec![diagnostics::record(&state, profile)?];
    let mut trajectory = vec![state.clone()];
    let mut converged = diagnostics[0].sup_deviation() < config.convergence_tol;
    let mut steps = 0;
    let mut max_mass_drift: f64 = 0.0;
    let mut max_cfl: f64 = 0.0;
    let mut min_u = state
        .u
        .values()
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let end = config.t_final * (1.0 - 1e-12);

    while !converged && state.t < end {
        let mut dt = resolve_dt(&state, config, profile)?.min(config.t_final - state.t);
        let mut outcome = advance(&state, config, profile, dt);
        if config.time_step == TimeStep::Auto {
            let mut retries = 0;
            while let Err(KsError::CflViolation { .. }) = outcome {
                if retries == 20 {
                    break;
                }
                dt *= 0.5;
                retries += 1;
                outcome = advance(&state, config, profile, dt);
            }
        }
        let result = outcome?;
        state = result.state;
        steps += 1;
        max_mass_drift = max_mass_drift.max(result.mass_drift);
        max_cfl = max_cfl.max(result.max_cfl);
        min_u = min_u.min(result.min_u);
        if min_u < -POSITIVITY_SLACK {
            log::warn!("u undershoots zero: min u = {min_u:e} at t = {}", state.t);
        }
        if steps % config.snapshot_every == 0 || state.t >= end {
            let rec = diagnostics::record(&state, profile)?;
            converged = rec.sup_deviation() < config.convergence_tol;
            diagnostics.push(rec);
            trajectory.push(state.clone());
        }
    }

    let deviations: Vec<f64> = diagnostics.iter().map(|r| r.sup_deviation()).collect();
    let status = if converged {
        ConvergenceStatus::Converged
    } else {
        let window = &deviations[deviations.len().saturating_sub(3)..];
        detect_convergence(window, config.convergence_tol).unwrap_or(ConvergenceStatus::Decaying)
    };
    let e0 = diagnostics[0].energy_l2;
    let e_max = diagnostics.iter().map(|r| r.energy_l2).fold(0.0, f64::max);
    let c_obs = if e0 > 0.0 {
        e_max / e0
    } else if e_max == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let dissipation_integral = diagnostics
        .windows(2)
        .map(|w| 0.5 * (w[1].t - w[0].t) * (w[0].dissipation_l2 + w[1].dissipation_l2))
        .sum();
    let n_sup = diagnostics.iter().map(|r| r.n_value).fold(0.0, f64::max);
    Ok(SimulationOutput {
        trajectory,
        diagnostics,
        converged,
        status,
        steps,
        max_mass_drift,
        max_cfl,
        min_u,
        n_sup,
        c_obs,
        dissipation_integral,
    })
}
