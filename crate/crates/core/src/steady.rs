//! Closed-form boundary spike/layer steady state `(U, W, V)`.
//!
//! With `k = theta r / beta` every profile is a power of `1 + k x`:
//!
//! ```text
//! U(x) = u_bar (1 + k x)^(-chi/r)
//! W(x) = b     (1 + k x)^(-1/r)
//! V(x) = (theta/beta) (1 + k x)^(-1)      = -W'(x) / W(x)
//! ```
//!
//! The module also measures how well these profiles satisfy the steady ODEs
//! on a grid, and quantifies the spike (`U -> lambda delta`) and layer
//! (`W -> 0` away from the boundary) limits.

use std::sync::Arc;

use crate::error::{KsError, Result};
use crate::grid::{first_derivative, second_derivative, Field, Grid};
use crate::params::{DerivedConstants, Parameters};
use crate::quadrature::integrate_half_line;

/// Relative tail mass of `U` left out of truncated quadratures.
pub const TAIL_MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateProfile {
    params: Parameters,
    consts: DerivedConstants,
}

impl SteadyStateProfile {
    pub fn new(params: Parameters) -> Result<Self> {
        let params = params.validate()?;
        Ok(SteadyStateProfile {
            params,
            consts: params.derive_constants(),
        })
    }

    pub fn params(&self) -> &Parameters {
        &self.params
    }

    pub fn consts(&self) -> &DerivedConstants {
        &self.consts
    }

    /// `(1 + k x)^p`, computed through `ln_1p` so small `x` keeps full precision.
    fn base_pow(&self, x: f64, p: f64) -> f64 {
        (p * (self.consts.rate() * x).ln_1p()).exp()
    }

    fn chi_over_r(&self) -> f64 {
        self.params.chi / self.consts.r
    }

    pub fn u(&self, x: f64) -> f64 {
        self.consts.u_bar * self.base_pow(x, -self.chi_over_r())
    }

    pub fn w(&self, x: f64) -> f64 {
        self.params.b * self.base_pow(x, -1.0 / self.consts.r)
    }

    pub fn v(&self, x: f64) -> f64 {
        self.consts.theta / self.consts.beta * self.base_pow(x, -1.0)
    }

    pub fn du(&self, x: f64) -> f64 {
        let k = self.consts.rate();
        -self.chi_over_r() * k * self.consts.u_bar * self.base_pow(x, -self.chi_over_r() - 1.0)
    }

    pub fn dw(&self, x: f64) -> f64 {
        let k = self.consts.rate();
        let p = 1.0 / self.consts.r;
        -p * k * self.params.b * self.base_pow(x, -p - 1.0)
    }

    pub fn d2w(&self, x: f64) -> f64 {
        let k = self.consts.rate();
        let p = 1.0 / self.consts.r;
        p * (p + 1.0) * k * k * self.params.b * self.base_pow(x, -p - 2.0)
    }

    pub fn dv(&self, x: f64) -> f64 {
        let k = self.consts.rate();
        -self.consts.theta / self.consts.beta * k * self.base_pow(x, -2.0)
    }

    /// `U` in the `(theta, sigma, xi)` parametrisation.
    pub fn u_reparam(&self, x: f64) -> f64 {
        let DerivedConstants {
            theta, sigma, xi, ..
        } = self.consts;
        let Parameters { chi, eps, .. } = self.params;
        theta * sigma * xi / (2.0 * chi * eps) * (1.0 + sigma / eps * x).powf(-xi)
    }

    /// `W` in the `(theta, sigma, xi)` parametrisation.
    pub fn w_reparam(&self, x: f64) -> f64 {
        let DerivedConstants { sigma, xi, .. } = self.consts;
        let Parameters { chi, eps, b, .. } = self.params;
        b * (1.0 + sigma / eps * x).powf(-xi / chi)
    }

    /// Weight `1/U`.
    pub fn weight_w1(&self, x: f64) -> f64 {
        1.0 / self.u(x)
    }

    /// Weight `W^(1-m)`.
    pub fn weight_w2(&self, x: f64) -> f64 {
        self.w(x).powf(1.0 - self.params.m)
    }

    /// Weight `W^(m-1) / U`.
    pub fn weight_w3(&self, x: f64) -> f64 {
        self.w(x).powf(self.params.m - 1.0) / self.u(x)
    }

    pub fn sample_u(&self, grid: &Arc<Grid>) -> Field {
        grid.sample(|x| self.u(x))
    }

    pub fn sample_w(&self, grid: &Arc<Grid>) -> Field {
        grid.sample(|x| self.w(x))
    }

    pub fn sample_v(&self, grid: &Arc<Grid>) -> Field {
        grid.sample(|x| self.v(x))
    }

    /// Mass of `U` beyond `x`: `lambda (1 + k x)^(1 - xi)`.
    pub fn tail_mass(&self, x: f64) -> f64 {
        self.params.lambda * self.base_pow(x, 1.0 - self.consts.xi)
    }

    /// Smallest `L` whose tail mass is `rel_tol * lambda`.
    pub fn truncation_length(&self, rel_tol: f64) -> f64 {
        let p = 1.0 / (self.consts.xi - 1.0);
        (rel_tol.powf(-p) - 1.0) / self.consts.rate()
    }

    /// Adaptive quadrature of `U zeta` over `[0, upper]`.
    pub fn integrate_u_times(&self, zeta: impl Fn(f64) -> f64, upper: f64, tol: f64) -> f64 {
        let scale = 1e-3 / self.consts.rate();
        integrate_half_line(&|x: f64| self.u(x) * zeta(x), upper, scale, tol)
    }

    /// Upper limit for quadratures: [`TAIL_MASS_TOL`] truncation, capped at
    /// `1e12 / k` for tails too heavy to reach it.
    pub fn quadrature_length(&self) -> f64 {
        let cap = 1e12 / self.consts.rate();
        let upper = self.truncation_length(TAIL_MASS_TOL);
        if upper.is_finite() && upper <= cap {
            upper
        } else {
            log::warn!("tail of U too heavy for truncation; capping quadrature at {cap:e}");
            cap
        }
    }

    /// Quadrature mass of `U` on `[0, L]` plus the analytic tail beyond `L`.
    pub fn quadrature_mass(&self) -> f64 {
        let upper = self.quadrature_length();
        self.integrate_u_times(|_| 1.0, upper, 1e-12 * self.params.lambda) + self.tail_mass(upper)
    }

    /// Point `eta` where `W(eta) = delta b`.
    pub fn layer_width(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(KsError::PreconditionViolated(format!(
                "layer threshold must lie in (0, 1), got {delta}"
            )));
        }
        let r = self.consts.r;
        Ok((delta.powf(-r) - 1.0) / self.consts.rate())
    }

    /// Truncation length `20 max(eta_0.01, 1)` of the default mesh.
    pub fn default_domain_length(&self) -> f64 {
        let eta = self
            .layer_width(0.01)
            .expect("0.01 is a valid layer threshold");
        20.0 * eta.max(1.0)
    }

    /// The default mesh: graded, stretch 50, 2001 nodes.
    pub fn default_grid(&self) -> Result<Arc<Grid>> {
        Grid::graded(
            self.default_domain_length(),
            crate::grid::DEFAULT_NODES,
            crate::grid::DEFAULT_STRETCH,
        )
    }

    pub fn steady_ode_residual(&self, grid: &Arc<Grid>) -> Result<OdeResidual> {
        if grid.len() < 3 {
            return Err(KsError::InsufficientGrid(grid.len()));
        }
        let chi = self.params.chi;
        let eps = self.params.eps;
        let m = self.params.m;
        let u = self.sample_u(grid);
        let w = self.sample_w(grid);
        let du_h = first_derivative(&u)?;
        let d2w_h = second_derivative(&w)?;
        let mut res = OdeResidual::default();
        let n = grid.len();
        for i in 1..n - 1 {
            let x = grid.nodes()[i];
            let (uu, ww, vv) = (u.values()[i], w.values()[i], self.v(x));
            let flux = chi * uu * vv;
            let reaction = uu * ww.powf(m);
            res.analytic_first = res.analytic_first.max((self.du(x) + flux).abs());
            res.analytic_second = res
                .analytic_second
                .max((eps * self.d2w(x) - reaction).abs());
            res.discrete_first = res.discrete_first.max((du_h.values()[i] + flux).abs());
            res.discrete_second = res
                .discrete_second
                .max((eps * d2w_h.values()[i] - reaction).abs());
        }
        Ok(res)
    }
}

/// Max-norm residuals of `U' + chi U V = 0` and `eps W'' - U W^m = 0` at
/// interior nodes, with analytic and finite-difference derivatives.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeResidual {
    pub analytic_first: f64,
    pub analytic_second: f64,
    pub discrete_first: f64,
    pub discrete_second: f64,
}

/// Smooth test functions for the distributional spike limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    Gaussian,
    InverseCube,
    Bump,
    Constant,
}

impl TestFunction {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            TestFunction::Gaussian => (-x * x).exp(),
            TestFunction::InverseCube => (1.0 + x).powi(-3),
            TestFunction::Bump => {
                let s = 0.5 * x;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                }
            }
            TestFunction::Constant => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Gaussian => "exp(-x^2)",
            TestFunction::InverseCube => "(1+x)^-3",
            TestFunction::Bump => "bump[0,2]",
            TestFunction::Constant => "1",
        }
    }
}

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Chi,
    Eps,
}

impl SweepAxis {
    pub fn apply(self, base: Parameters, value: f64) -> Parameters {
        match self {
            SweepAxis::Chi => Parameters { chi: value, ..base },
            SweepAxis::Eps => Parameters { eps: value, ..base },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Chi => "chi",
            SweepAxis::Eps => "eps",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeReport {
    pub axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub weak_errors: Vec<f64>,
    pub test_function_id: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    pub eps_values: Vec<f64>,
    pub widths: Vec<f64>,
    pub threshold_delta: f64,
}

/// `|int_0^L U zeta - lambda zeta(0)|` with `L` leaving at most
/// [`TAIL_MASS_TOL`] of the mass outside.
pub fn weak_error(profile: &SteadyStateProfile, zeta: TestFunction) -> f64 {
    let lambda = profile.params().lambda;
    let upper = profile.quadrature_length();
    let integral = profile.integrate_u_times(|x| zeta.eval(x), upper, 1e-13 * lambda);
    (integral - lambda * zeta.eval(0.0)).abs()
}

pub fn spike_sweep(
    base: Parameters,
    axis: SweepAxis,
    samples: &[f64],
    zeta: TestFunction,
) -> Result<SpikeReport> {
    let weak_errors = samples
        .iter()
        .map(|&s| SteadyStateProfile::new(axis.apply(base, s)).map(|p| weak_error(&p, zeta)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpikeReport {
        axis,
        sweep_values: samples.to_vec(),
        weak_errors,
        test_function_id: zeta.name(),
    })
}

pub fn layer_sweep(base: Parameters, eps_values: &[f64], delta: f64) -> Result<LayerReport> {
    let widths = eps_values
        .iter()
        .map(|&eps| SteadyStateProfile::new(Parameters { eps, ..base })?.layer_width(delta))
        .collect::<Result<Vec<_>>>()?;
    Ok(LayerReport {
        eps_values: eps_values.to_vec(),
        widths,
        threshold_delta: delta,
    })
}
