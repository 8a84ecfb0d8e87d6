//! Initial data: the steady state plus a localized perturbation with zero
//! discrete mass in both components, so that `phi` and `psi` vanish at both
//! ends.

use std::sync::Arc;

use crate::error::{KsError, Result};
use crate::grid::{trapezoid_integral, Field, Grid};
use crate::solver::Formulation;
use crate::steady::SteadyStateProfile;
use crate::transform::cole_hopf_inverse;

/// `max |z (1 - z^2)^3|` on `[-1, 1]`, attained at `z^2 = 1/7`.
fn dipole_peak() -> f64 {
    let z = (1.0f64 / 7.0).sqrt();
    z * (6.0f64 / 7.0).powi(3)
}

/// Bump `(1 - z^2)^4`, `z = (x - center) / width`.
fn bump(z: f64) -> f64 {
    if z.abs() < 1.0 {
        (1.0 - z * z).powi(4)
    } else {
        0.0
    }
}

/// Zero-mean dipole `-z (1 - z^2)^3` (proportional to the bump's derivative)
/// with unit peak, corrected so that its trapezoid integral on `grid` is zero
/// to rounding.
pub fn zero_mass_dipole(grid: &Arc<Grid>, center: f64, width: f64) -> Result<Field> {
    if !(width > 0.0 && center - width >= 0.0) {
        return Err(KsError::PreconditionViolated(format!(
            "perturbation support [{}, {}] must lie in [0, L]",
            center - width,
            center + width
        )));
    }
    if center + width > grid.length() {
        return Err(KsError::PreconditionViolated(format!(
            "perturbation support ends at {} beyond L = {}",
            center + width,
            grid.length()
        )));
    }
    let peak = dipole_peak();
    let shape = grid.sample(|x| {
        let z = (x - center) / width;
        if z.abs() < 1.0 {
            -z * (1.0 - z * z).powi(3) / peak
        } else {
            0.0
        }
    });
    let envelope = grid.sample(|x| bump((x - center) / width));
    let env_mass = trapezoid_integral(&envelope)?;
    if env_mass <= 0.0 {
        return Err(KsError::PreconditionViolated(
            "perturbation support is not resolved by the grid".into(),
        ));
    }
    let correction = trapezoid_integral(&shape)? / env_mass;
    shape.zip_with(&envelope, |s, e| s - correction * e)
}

/// Steady state plus `amplitude * dipole` in `u` and in `v`, expressed in the
/// unknowns of `formulation` (for `(u, w)`, `w` comes from the Cole-Hopf
/// inverse of the perturbed `v`).
pub fn perturbed_initial_data(
    profile: &SteadyStateProfile,
    grid: &Arc<Grid>,
    amplitude: f64,
    center: f64,
    width: f64,
    formulation: Formulation,
) -> Result<(Field, Field)> {
    let dipole = zero_mass_dipole(grid, center, width)?;
    let u = profile
        .sample_u(grid)
        .zip_with(&dipole, |a, d| a + amplitude * d)?;
    let v = profile
        .sample_v(grid)
        .zip_with(&dipole, |a, d| a + amplitude * d)?;
    with_formulation(profile, u, v, formulation)
}

/// Converts an `(u, v)` pair into the unknowns of `formulation`.
pub fn with_formulation(
    profile: &SteadyStateProfile,
    u: Field,
    v: Field,
    formulation: Formulation,
) -> Result<(Field, Field)> {
    Ok(match formulation {
        Formulation::Uv => (u, v),
        Formulation::Uw => {
            let w = cole_hopf_inverse(&v, profile.params().b)?;
            (u, w)
        }
    })
}

/// The unperturbed steady state in the unknowns of `formulation`.
pub fn steady_initial_data(
    profile: &SteadyStateProfile,
    grid: &Arc<Grid>,
    formulation: Formulation,
) -> (Field, Field) {
    let second = match formulation {
        Formulation::Uv => profile.sample_v(grid),
        Formulation::Uw => profile.sample_w(grid),
    };
    (profile.sample_u(grid), second)
}
