//! Cole-Hopf change of variables `v = -w_x / w` and the antiderivative
//! perturbation variables `phi = int_0^x (u - U)`, `psi = int_0^x (v - V)`.

use crate::error::{KsError, Result};
use crate::grid::{cumulative_integral, first_derivative, Field};
use crate::steady::SteadyStateProfile;

/// Values of `w` at or below this are refused by [`cole_hopf_forward`].
pub const W_MIN: f64 = 1e-300;

pub fn cole_hopf_forward(w: &Field) -> Result<Field> {
    w.check_finite()?;
    if let Some((index, &value)) = w.values().iter().enumerate().find(|(_, &v)| v <= W_MIN) {
        return Err(KsError::NonPositiveW { index, value });
    }
    let dw = first_derivative(w)?;
    dw.zip_with(w, |d, w| -d / w)
}

/// `w = b exp(-int_0^x v)`; `w[0] = b` exactly.
pub fn cole_hopf_inverse(v: &Field, b: f64) -> Result<Field> {
    let integral = cumulative_integral(v)?;
    let mut w = integral.map(|s| b * (-s).exp());
    w.values_mut()[0] = b;
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntiderivativePair {
    pub phi: Field,
    pub psi: Field,
}

impl AntiderivativePair {
    /// `(phi, psi)` at `x = L`; both vanish for zero-mass perturbations.
    pub fn far_field(&self) -> (f64, f64) {
        let n = self.phi.len();
        (self.phi.values()[n - 1], self.psi.values()[n - 1])
    }
}

pub fn antiderivative_pair(
    u: &Field,
    v: &Field,
    profile: &SteadyStateProfile,
) -> Result<AntiderivativePair> {
    u.ensure_same_grid(v)?;
    let grid = u.grid();
    let du = u.sub(&profile.sample_u(grid))?;
    let dv = v.sub(&profile.sample_v(grid))?;
    Ok(AntiderivativePair {
        phi: cumulative_integral(&du)?,
        psi: cumulative_integral(&dv)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::params::Parameters;

    fn profile() -> SteadyStateProfile {
        SteadyStateProfile::new(Parameters::new(1.0, 1.0, 0.5, 1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn constant_w_has_zero_v() {
        let g = Grid::graded(10.0, 41, 5.0).unwrap();
        let v = cole_hopf_forward(&g.sample(|_| 2.5)).unwrap();
        assert!(v.max_abs() < 1e-12);
    }

    #[test]
    fn zero_w_is_rejected() {
        let g = Grid::uniform(1.0, 5).unwrap();
        let w = Field::new(&g, vec![1.0, 0.5, 0.0, 0.2, 0.1]).unwrap();
        assert_eq!(
            cole_hopf_forward(&w),
            Err(KsError::NonPositiveW {
                index: 2,
                value: 0.0
            })
        );
    }

    #[test]
    fn zero_v_gives_constant_w() {
        let g = Grid::uniform(3.0, 7).unwrap();
        let w = cole_hopf_inverse(&g.zeros(), 1.0).unwrap();
        assert!(w.values().iter().all(|&x| x == 1.0));
    }

    #[test]
    fn forward_and_inverse_match_closed_forms() {
        let p = profile();
        let err = |n| {
            let g = Grid::uniform(40.0, n).unwrap();
            let v = cole_hopf_forward(&p.sample_w(&g)).unwrap();
            let w = cole_hopf_inverse(&p.sample_v(&g), 1.0).unwrap();
            (
                v.max_abs_diff(&p.sample_v(&g)).unwrap(),
                w.max_abs_diff(&p.sample_w(&g)).unwrap(),
            )
        };
        let (a, b) = (err(201), err(401));
        assert!(a.0 / b.0 > 3.6, "forward ratio {}", a.0 / b.0);
        assert!(a.1 / b.1 > 3.6, "inverse ratio {}", a.1 / b.1);
        assert_eq!(
            cole_hopf_inverse(&p.sample_v(&Grid::uniform(1.0, 3).unwrap()), 1.0)
                .unwrap()
                .values()[0],
            1.0
        );
    }

    #[test]
    fn steady_pair_has_zero_antiderivatives() {
        let p = profile();
        let g = p.default_grid().unwrap();
        let pair = antiderivative_pair(&p.sample_u(&g), &p.sample_v(&g), &p).unwrap();
        assert_eq!(pair.phi.max_abs(), 0.0);
        assert_eq!(pair.psi.max_abs(), 0.0);
    }

    #[test]
    fn antiderivative_recovers_compact_bump() {
        // u = U + p' with p = x^2 (1-x)^2 on [0, 1]
        let p = profile();
        let bump = |x: f64| {
            if x < 1.0 {
                x * x * (1.0 - x) * (1.0 - x)
            } else {
                0.0
            }
        };
        let dbump = |x: f64| {
            if x < 1.0 {
                2.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
            } else {
                0.0
            }
        };
        let err = |n| {
            let g = Grid::uniform(4.0, n).unwrap();
            let u = g.sample(|x| p.u(x) + dbump(x));
            let pair = antiderivative_pair(&u, &p.sample_v(&g), &p).unwrap();
            assert_eq!(pair.phi.values()[0], 0.0);
            assert_eq!(pair.psi.values()[0], 0.0);
            pair.phi.max_abs_diff(&g.sample(bump)).unwrap()
        };
        let (a, b) = (err(201), err(401));
        assert!(a < 1e-3, "max error {a}");
        assert!(a / b > 3.6, "ratio {}", a / b);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let p = profile();
        let u = Grid::uniform(1.0, 5).unwrap().zeros();
        let v = Grid::uniform(1.0, 7).unwrap().zeros();
        assert_eq!(antiderivative_pair(&u, &v, &p), Err(KsError::GridMismatch));
    }
}
