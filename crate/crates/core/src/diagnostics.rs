//! Mass, weighted Sobolev norms, the perturbation measure `N(t)`, weighted
//! `L^2` energy and dissipation, the Hardy inequality check and the
//! deviation metrics used to witness convergence to the steady state.
//!
//! All weights are frozen at the analytic steady state. Everything here is a
//! pure function of its inputs; running suprema and time integrals are kept
//! by the simulation driver.

use std::fmt;
use std::sync::Arc;

use crate::error::{KsError, Result};
use crate::grid::{first_derivative, second_derivative, trapezoid_integral, Field, Grid};
use crate::params::Regime;
use crate::solver::{Formulation, SimState};
use crate::steady::SteadyStateProfile;
use crate::transform::{antiderivative_pair, cole_hopf_forward};

/// A strictly positive weight function on the truncated half-line.
#[derive(Clone)]
pub enum WeightSpec {
    /// `1 / U`
    W1(SteadyStateProfile),
    /// `W^(1-m)`
    W2(SteadyStateProfile),
    /// `W^(m-1) / U`
    W3(SteadyStateProfile),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightSpec::W1(_) => "W1",
            WeightSpec::W2(_) => "W2",
            WeightSpec::W3(_) => "W3",
            WeightSpec::Custom(_) => "Custom",
        })
    }
}

impl WeightSpec {
    pub fn unit() -> Self {
        WeightSpec::Custom(Arc::new(|_| 1.0))
    }

    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        WeightSpec::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            WeightSpec::W1(p) => p.weight_w1(x),
            WeightSpec::W2(p) => p.weight_w2(x),
            WeightSpec::W3(p) => p.weight_w3(x),
            WeightSpec::Custom(f) => f(x),
        }
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Result<Field> {
        let field = grid.sample(|x| self.eval(x));
        match field
            .values()
            .iter()
            .enumerate()
            .find(|(_, &w)| !(w > 0.0 && w.is_finite()))
        {
            Some((index, &value)) => Err(KsError::NonPositiveWeight { index, value }),
            None => Ok(field),
        }
    }
}

pub fn mass(u: &Field) -> Result<f64> {
    trapezoid_integral(u)
}

/// `sqrt(int omega f^2)` with `omega` already sampled.
fn weighted_l2(f: &Field, omega: &Field) -> Result<f64> {
    let integrand = f.zip_with(omega, |f, w| w * f * f)?;
    Ok(trapezoid_integral(&integrand)?.sqrt())
}

/// `sum_{j=0}^{k} || sqrt(omega) d^j f / dx^j ||_{L^2}`.
pub fn weighted_norm(f: &Field, weight: &WeightSpec, k: usize) -> Result<f64> {
    if k > 2 {
        return Err(KsError::PreconditionViolated(format!(
            "weighted norm order must be 0, 1 or 2, got {k}"
        )));
    }
    let omega = weight.sample(f.grid())?;
    let mut total = weighted_l2(f, &omega)?;
    if k >= 1 {
        total += weighted_l2(&first_derivative(f)?, &omega)?;
    }
    if k >= 2 {
        total += weighted_l2(&second_derivative(f)?, &omega)?;
    }
    Ok(total)
}

/// Instantaneous summand of `N(t)`.
///
/// * `m >= 1`: `||phi||_{1,w1} + ||phi_xx|| + ||psi||_{1,w2} + ||psi_xx||`
/// * `m < 1`:  `||phi||_{1,w3} + ||phi_xx|| + ||psi||_{H^2}`
pub fn perturbation_measure(
    phi: &Field,
    psi: &Field,
    profile: &SteadyStateProfile,
    regime: Regime,
) -> Result<f64> {
    phi.ensure_same_grid(psi)?;
    let unit = WeightSpec::unit();
    let phi_xx = weighted_norm(&second_derivative(phi)?, &unit, 0)?;
    Ok(match regime {
        Regime::MGeOne => {
            weighted_norm(phi, &WeightSpec::W1(*profile), 1)?
                + phi_xx
                + weighted_norm(psi, &WeightSpec::W2(*profile), 1)?
                + weighted_norm(&second_derivative(psi)?, &unit, 0)?
        }
        Regime::MLtOne => {
            weighted_norm(phi, &WeightSpec::W3(*profile), 1)?
                + phi_xx
                + weighted_norm(psi, &unit, 2)?
        }
    })
}

/// Trapezoid value of a nonnegative integrand plus the share of its last
/// node, which flags pollution from the truncation at `x = L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedIntegral {
    pub value: f64,
    pub last_node_contribution: f64,
}

fn weighted_integral(integrand: Field) -> Result<WeightedIntegral> {
    let grid = integrand.grid();
    let n = grid.len();
    let h_last = grid.nodes()[n - 1] - grid.nodes()[n - 2];
    Ok(WeightedIntegral {
        value: trapezoid_integral(&integrand)?,
        last_node_contribution: 0.5 * h_last * integrand.values()[n - 1],
    })
}

/// Pair of steady-state weights `(a, b)` for the `phi` and `psi` terms.
fn energy_weights(
    grid: &Arc<Grid>,
    profile: &SteadyStateProfile,
    regime: Regime,
) -> Result<(Field, Field)> {
    Ok(match regime {
        Regime::MGeOne => (
            WeightSpec::W1(*profile).sample(grid)?,
            WeightSpec::W2(*profile).sample(grid)?,
        ),
        Regime::MLtOne => (
            WeightSpec::W3(*profile).sample(grid)?,
            WeightSpec::unit().sample(grid)?,
        ),
    })
}

/// Weighted energy `int (phi^2/U + W^(1-m) psi^2)` for `m >= 1`, or
/// `int (W^(m-1) phi^2/U + psi^2)` for `m < 1`.
pub fn energy_l2(
    phi: &Field,
    psi: &Field,
    profile: &SteadyStateProfile,
    regime: Regime,
) -> Result<WeightedIntegral> {
    phi.ensure_same_grid(psi)?;
    let (a, b) = energy_weights(phi.grid(), profile, regime)?;
    let values = phi
        .values()
        .iter()
        .zip(psi.values())
        .zip(a.values().iter().zip(b.values()))
        .map(|((f, g), (a, b))| a * f * f + b * g * g)
        .collect();
    weighted_integral(Field::new(phi.grid(), values)?)
}

/// Instantaneous dissipation `int (phi_x^2/U + W^(1-m) psi_x^2 + U psi^2)`
/// for `m >= 1`, or `int (W^(m-1) phi_x^2/U + psi_x^2 + U W^(m-1) psi^2)`
/// for `m < 1`.
pub fn dissipation_l2(
    phi_x: &Field,
    psi_x: &Field,
    psi: &Field,
    profile: &SteadyStateProfile,
    regime: Regime,
) -> Result<WeightedIntegral> {
    phi_x.ensure_same_grid(psi_x)?;
    phi_x.ensure_same_grid(psi)?;
    let grid = phi_x.grid();
    let (a, b) = energy_weights(grid, profile, regime)?;
    let m = profile.params().m;
    let c = grid.sample(|x| match regime {
        Regime::MGeOne => profile.u(x),
        Regime::MLtOne => profile.u(x) * profile.w(x).powf(m - 1.0),
    });
    let values = (0..grid.len())
        .map(|i| {
            let (fx, gx, g) = (phi_x.values()[i], psi_x.values()[i], psi.values()[i]);
            a.values()[i] * fx * fx + b.values()[i] * gx * gx + c.values()[i] * g * g
        })
        .collect();
    weighted_integral(Field::new(grid, values)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// `int (1+kx)^j f^2  <=  4/((j+1)^2 k^2) int (1+kx)^(j+2) f_x^2` for
/// `f(0) = 0`, accepted with a relative slack of `10 h` (max spacing).
pub fn hardy_check(f: &Field, j: f64, k: f64) -> Result<HardyCheck> {
    f.check_finite()?;
    if f.values()[0] != 0.0 {
        return Err(KsError::PreconditionViolated(format!(
            "Hardy inequality needs f(0) = 0, got {}",
            f.values()[0]
        )));
    }
    if j == -1.0 || !j.is_finite() {
        return Err(KsError::PreconditionViolated(format!(
            "Hardy exponent must differ from -1, got {j}"
        )));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(KsError::PreconditionViolated(format!(
            "Hardy scale must be > 0, got {k}"
        )));
    }
    let fx = first_derivative(f)?;
    let lhs = trapezoid_integral(&f.map_with_x(|x, v| (1.0 + k * x).powf(j) * v * v))?;
    let integrand = fx.map_with_x(|x, v| (1.0 + k * x).powf(j + 2.0) * v * v);
    let rhs = 4.0 / ((j + 1.0).powi(2) * k * k) * trapezoid_integral(&integrand)?;
    let slack = 1.0 + 10.0 * f.grid().max_spacing();
    Ok(HardyCheck {
        lhs,
        rhs,
        satisfied: lhs <= rhs * slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceMetrics {
    pub sup_dev_u: f64,
    pub sup_dev_second: f64,
    pub l1_dev_u: f64,
}

/// Deviations from the analytic steady state: `sup|u - U|`, `sup|v - V|` (or
/// `sup|w - W|`), and `int |u - U|`.
pub fn convergence_metrics(
    state: &SimState,
    profile: &SteadyStateProfile,
) -> Result<ConvergenceMetrics> {
    state.u.ensure_same_grid(&state.second)?;
    let grid = state.u.grid();
    let du = state.u.sub(&profile.sample_u(grid))?;
    let steady_second = match state.formulation {
        Formulation::Uw => profile.sample_w(grid),
        Formulation::Uv => profile.sample_v(grid),
    };
    Ok(ConvergenceMetrics {
        sup_dev_u: du.max_abs(),
        sup_dev_second: state.second.max_abs_diff(&steady_second)?,
        l1_dev_u: trapezoid_integral(&du.map(f64::abs))?,
    })
}

/// Right-hand side of `int |u - U| <= ||u - U||_{1/U} (int U)^(1/2)`, with the
/// discrete mass of `U` on the same grid.
pub fn l1_bridge_bound(u: &Field, profile: &SteadyStateProfile) -> Result<f64> {
    let steady = profile.sample_u(u.grid());
    let du = u.sub(&steady)?;
    Ok(weighted_norm(&du, &WeightSpec::W1(*profile), 0)? * mass(&steady)?.sqrt())
}

/// Diagnostics of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub sup_dev_u: f64,
    pub sup_dev_second: f64,
    pub l1_dev_u: f64,
    pub n_value: f64,
    pub energy_l2: f64,
    pub dissipation_l2: f64,
    /// Energy carried by the last node; large values mean the truncation at
    /// `x = L` pollutes the weighted integrals.
    pub energy_last_node: f64,
    pub hardy_ok: Option<bool>,
}

impl DiagnosticsRecord {
    /// Larger of the two sup-norm deviations.
    pub fn sup_deviation(&self) -> f64 {
        self.sup_dev_u.max(self.sup_dev_second)
    }
}

pub fn record(state: &SimState, profile: &SteadyStateProfile) -> Result<DiagnosticsRecord> {
    let regime = profile.params().regime();
    let metrics = convergence_metrics(state, profile)?;
    let v = match state.formulation {
        Formulation::Uv => state.second.clone(),
        Formulation::Uw => cole_hopf_forward(&state.second)?,
    };
    let pair = antiderivative_pair(&state.u, &v, profile)?;
    let grid = state.u.grid();
    let phi_x = state.u.sub(&profile.sample_u(grid))?;
    let psi_x = v.sub(&profile.sample_v(grid))?;
    let energy = energy_l2(&pair.phi, &pair.psi, profile, regime)?;
    let dissipation = dissipation_l2(&phi_x, &psi_x, &pair.psi, profile, regime)?;
    let hardy_ok = hardy_check(&pair.phi, 0.0, profile.consts().rate())
        .ok()
        .map(|h| h.satisfied);
    Ok(DiagnosticsRecord {
        t: state.t,
        mass: mass(&state.u)?,
        sup_dev_u: metrics.sup_dev_u,
        sup_dev_second: metrics.sup_dev_second,
        l1_dev_u: metrics.l1_dev_u,
        n_value: perturbation_measure(&pair.phi, &pair.psi, profile, regime)?,
        energy_l2: energy.value,
        dissipation_l2: dissipation.value,
        energy_last_node: energy.last_node_contribution,
        hardy_ok,
    })
}
