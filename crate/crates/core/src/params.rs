//! Physical parameters of the half-line chemotaxis model and the constants
//! derived from them.
//!
//! The model is parameterised by the total cell mass `lambda`, the
//! chemotactic coefficient `chi`, the consumption exponent `m`, the chemical
//! diffusivity `eps` and the boundary value `b` of the chemical at `x = 0`.
//! Every closed-form expression used elsewhere in the crate is written in
//! terms of [`DerivedConstants`].

use crate::error::{KsError, Result};

/// Below this value of `chi` the small-`m` stability result is not expected
/// to apply. Advisory only; nothing is rejected on its basis.
pub const ADVISORY_LARGE_CHI: f64 = 5.0;

/// The physical quintuple `(lambda, chi, m, eps, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameters {
    pub lambda: f64,
    pub chi: f64,
    pub m: f64,
    pub eps: f64,
    pub b: f64,
}

/// Constants that appear in the closed-form steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    /// `lambda (chi + 1 - m)`
    pub theta: f64,
    /// `eps (chi + m + 1) b^(1-m)`
    pub beta: f64,
    /// `(chi + m - 1) / 2`
    pub r: f64,
    /// `lambda (chi + 1 - m)(chi + m - 1) / (2 (chi + m + 1) b^(1-m))`
    pub sigma: f64,
    /// `2 chi / (chi + m - 1)`
    pub xi: f64,
    /// Proportionality constant in `U = c0 W^chi`.
    pub c0: f64,
    /// Peak density `U(0)`.
    pub u_bar: f64,
}

impl Parameters {
    pub fn new(lambda: f64, chi: f64, m: f64, eps: f64, b: f64) -> Result<Self> {
        Parameters {
            lambda,
            chi,
            m,
            eps,
            b,
        }
        .validate()
    }

    /// Checks admissibility and returns the parameters unchanged.
    ///
    /// `chi > |1 - m|` is enforced strictly: at equality `r` vanishes and the
    /// steady state degenerates.
    pub fn validate(self) -> Result<Self> {
        let positive = |name: &'static str, v: f64| -> Result<()> {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(KsError::InvalidParameter {
                    name,
                    reason: format!("must be finite and > 0, got {v}"),
                })
            }
        };
        positive("lambda", self.lambda)?;
        positive("eps", self.eps)?;
        positive("b", self.b)?;
        if !(self.m.is_finite() && self.m >= 0.0) {
            return Err(KsError::InvalidParameter {
                name: "m",
                reason: format!("must be finite and >= 0, got {}", self.m),
            });
        }
        let bound = (1.0 - self.m).abs();
        if !(self.chi.is_finite() && self.chi > bound) {
            return Err(KsError::InvalidParameter {
                name: "chi",
                reason: format!("must exceed |1 - m| = {bound}, got {}", self.chi),
            });
        }
        Ok(self)
    }

    /// Warning text when `m < 1` and `chi` is below [`ADVISORY_LARGE_CHI`],
    /// where stability is only expected for large `chi`.
    pub fn advisory(&self) -> Option<String> {
        (self.m < 1.0 && self.chi < ADVISORY_LARGE_CHI).then(|| {
            format!(
                "m = {} < 1 with chi = {} < {ADVISORY_LARGE_CHI}: stability of the \
                 steady state is only expected for large chi",
                self.m, self.chi
            )
        })
    }

    /// `b^p` evaluated as `exp(p ln b)`.
    pub fn b_pow(&self, p: f64) -> f64 {
        (p * self.b.ln()).exp()
    }

    /// Whether the `m >= 1` weighted-energy regime applies.
    pub fn regime(&self) -> Regime {
        if self.m >= 1.0 {
            Regime::MGeOne
        } else {
            Regime::MLtOne
        }
    }

    pub fn derive_constants(&self) -> DerivedConstants {
        let Parameters {
            lambda,
            chi,
            m,
            eps,
            ..
        } = *self;
        let b_1m = self.b_pow(1.0 - m);
        let theta = lambda * (chi + 1.0 - m);
        let beta = eps * (chi + m + 1.0) * b_1m;
        let r = 0.5 * (chi + m - 1.0);
        let sigma = theta * (chi + m - 1.0) / (2.0 * (chi + m + 1.0) * b_1m);
        let xi = 2.0 * chi / (chi + m - 1.0);
        let u_bar = theta * theta / (2.0 * eps * (chi + m + 1.0) * b_1m);
        let c0 = theta * theta / (2.0 * eps * (chi + m + 1.0) * self.b_pow(chi + 1.0 - m));
        DerivedConstants {
            theta,
            beta,
            r,
            sigma,
            xi,
            c0,
            u_bar,
        }
    }
}

impl DerivedConstants {
    /// Rate `theta r / beta` in the common factor `1 + rate * x`.
    pub fn rate(&self) -> f64 {
        self.theta * self.r / self.beta
    }
}

/// Range of the consumption exponent, which selects the weights of the
/// energy functionals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    MGeOne,
    MLtOne,
}
