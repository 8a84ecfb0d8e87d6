//! Property suite behind `ks verify`.

use std::path::Path;
use std::sync::Arc;

use ks_core::diagnostics::hardy_check;
use ks_core::initial::perturbed_initial_data;
use ks_core::solver::{run_simulation, stable_dt};
use ks_core::transform::{cole_hopf_forward, cole_hopf_inverse};
use ks_core::{
    Field, Formulation, Grid, GridKind, KsError, SimState, SolverConfig, SteadyStateProfile,
    TimeStep,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::{prepare_output, write_file};
use crate::config::{Perturbation, RunConfig};
use crate::error::CliResult;
use crate::format::fmt_num;

pub const ORDER_THRESHOLD: f64 = 1.9;
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MASS_TOL: f64 = 1e-8;
pub const DRIFT_TOL: f64 = 1e-10;
pub const HARDY_EXPONENTS: [f64; 4] = [-0.5, 0.0, 1.0, 2.0];
pub const HARDY_SCALES: [f64; 3] = [0.15, 1.0, 5.0];
pub const HARDY_SEED: u64 = 20_240_601;
const HARDY_FIELDS: usize = 1000;
const MASS_STEPS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyItem {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl VerifyItem {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        VerifyItem { name, pass, detail }
    }

    fn from_result(name: &'static str, r: Result<(bool, String), KsError>) -> Self {
        match r {
            Ok((pass, detail)) => Self::new(name, pass, detail),
            Err(e) => Self::new(name, false, format!("error {}: {e}", e.kind())),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

/// Observed orders `log2(e_i / e_{i+1})` of a halving sequence.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// The configured grid and two halvings of its spacing (`n`, `2n-1`, `4n-3`).
pub fn refinements(length: f64, n: usize, kind: GridKind) -> ks_core::Result<Vec<Arc<Grid>>> {
    [n, 2 * n - 1, 4 * n - 3]
        .iter()
        .map(|&m| Grid::new(length, m, kind))
        .collect()
}

fn min_order(errors: &[f64]) -> f64 {
    observed_orders(errors)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(" ")
}

/// Max-norm error of `inverse(forward(W))` against `W` on `grid`.
pub fn roundtrip_error(profile: &SteadyStateProfile, grid: &Arc<Grid>) -> ks_core::Result<f64> {
    let w = profile.sample_w(grid);
    let back = cole_hopf_inverse(&cole_hopf_forward(&w)?, profile.params().b)?;
    back.max_abs_diff(&w)
}

/// Random C1 piecewise-cubic Hermite field with `f(0) = 0` and support in
/// `[0, S]`, `S < L`.
pub fn random_hardy_field(rng: &mut impl Rng, grid: &Arc<Grid>) -> Field {
    let support = rng.gen_range(0.5..(0.25 * grid.length()).min(10.0));
    let interior = rng.gen_range(1..=6);
    let mut knots: Vec<f64> = (0..interior)
        .map(|_| rng.gen_range(0.05..0.95) * support)
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-3 * support);
    let mut xs = vec![0.0];
    let mut fs = vec![0.0];
    let mut ds = vec![rng.gen_range(-3.0..3.0)];
    for &k in &knots {
        xs.push(k);
        fs.push(rng.gen_range(-1.0..1.0));
        ds.push(rng.gen_range(-3.0..3.0));
    }
    xs.push(support);
    fs.push(0.0);
    ds.push(0.0);
    let scale = 10f64.powf(rng.gen_range(-3.0..1.0));
    grid.sample(|x| {
        if x >= support {
            return 0.0;
        }
        let i = xs.partition_point(|&p| p <= x) - 1;
        let h = xs[i + 1] - xs[i];
        let t = (x - xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        scale * (h00 * fs[i] + h10 * h * ds[i] + h01 * fs[i + 1] + h11 * h * ds[i + 1])
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HardyBattery {
    pub checks: usize,
    pub failures: usize,
    /// Largest `lhs / rhs` observed.
    pub worst_ratio: f64,
}

/// Every `(j, k)` pair of [`HARDY_EXPONENTS`] x [`HARDY_SCALES`] on `count`
/// random fields.
pub fn hardy_battery(grid: &Arc<Grid>, count: usize, seed: u64) -> ks_core::Result<HardyBattery> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = HardyBattery {
        checks: 0,
        failures: 0,
        worst_ratio: 0.0,
    };
    for _ in 0..count {
        let f = random_hardy_field(&mut rng, grid);
        for &j in &HARDY_EXPONENTS {
            for &k in &HARDY_SCALES {
                let h = hardy_check(&f, j, k)?;
                out.checks += 1;
                if !h.satisfied {
                    out.failures += 1;
                }
                if h.rhs > 0.0 {
                    out.worst_ratio = out.worst_ratio.max(h.lhs / h.rhs);
                }
            }
        }
    }
    Ok(out)
}

/// Grid for the Hardy battery and closed-form case: uniform, `L = 40`, 2001 nodes.
pub fn hardy_grid() -> Arc<Grid> {
    Grid::uniform(40.0, 2001).expect("fixed grid is valid")
}

/// Bump parameters from the config, or the default dipole at `x = 1`.
fn bump_of(cfg: &RunConfig) -> (f64, f64, f64) {
    match cfg.perturbation {
        Perturbation::Bump {
            amplitude,
            center,
            width,
        } if amplitude > 0.0 => (amplitude, center, width),
        _ => (0.01, 1.0, 1.0),
    }
}

/// Relative mass drift of a uv run over `steps` automatic steps.
pub fn mass_drift_run(
    profile: &SteadyStateProfile,
    grid: &Arc<Grid>,
    bump: (f64, f64, f64),
    steps: usize,
) -> ks_core::Result<f64> {
    let (u0, v0) = perturbed_initial_data(profile, grid, bump.0, bump.1, bump.2, Formulation::Uv)?;
    let config = SolverConfig {
        formulation: Formulation::Uv,
        ..SolverConfig::default()
    };
    let mut state = SimState::new(u0, v0, Formulation::Uv)?;
    let mut drift: f64 = 0.0;
    for _ in 0..steps {
        let dt = stable_dt(&state, &config, profile)?;
        let r = ks_core::solver::advance(&state, &config, profile, dt)?;
        drift = drift.max(r.mass_drift);
        state = r.state;
    }
    Ok(drift)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Consistency {
    pub max_diff: f64,
    pub tolerance: f64,
    pub dt: f64,
}

/// Runs both formulations to `t_end` with a common fixed step and compares
/// `w` in the max norm against `5 (h^2 + dt)`.
pub fn formulation_consistency(
    profile: &SteadyStateProfile,
    grid: &Arc<Grid>,
    bump: (f64, f64, f64),
    time_step: TimeStep,
    t_end: f64,
) -> ks_core::Result<Consistency> {
    let b = profile.params().b;
    let base = SolverConfig {
        t_final: t_end,
        convergence_tol: f64::MIN_POSITIVE,
        snapshot_every: usize::MAX,
        ..SolverConfig::default()
    };
    let data = |f| perturbed_initial_data(profile, grid, bump.0, bump.1, bump.2, f);
    let (u_uv, v_uv) = data(Formulation::Uv)?;
    let (u_uw, w_uw) = data(Formulation::Uw)?;
    let dt = match time_step {
        TimeStep::Fixed(dt) => dt,
        TimeStep::Auto => {
            let cfg_uw = SolverConfig {
                formulation: Formulation::Uw,
                ..base
            };
            let s_uv = SimState::new(u_uv.clone(), v_uv.clone(), Formulation::Uv)?;
            let s_uw = SimState::new(u_uw.clone(), w_uw.clone(), Formulation::Uw)?;
            stable_dt(&s_uv, &base, profile)?.min(stable_dt(&s_uw, &cfg_uw, profile)?)
        }
    };
    let run = |u, s, formulation| {
        let cfg = SolverConfig {
            formulation,
            time_step: TimeStep::Fixed(dt),
            ..base
        };
        run_simulation(u, s, &cfg, profile).map(|o| o.final_state().second.clone())
    };
    let v_end = run(u_uv, v_uv, Formulation::Uv)?;
    let w_end = run(u_uw, w_uw, Formulation::Uw)?;
    let w_from_v = cole_hopf_inverse(&v_end, b)?;
    let h = grid.max_spacing();
    Ok(Consistency {
        max_diff: w_from_v.max_abs_diff(&w_end)?,
        tolerance: 5.0 * (h * h + dt),
        dt,
    })
}

/// Runs the suite for `cfg`; residual-order, roundtrip and solver items use
/// the configured grid.
pub fn run_suite(cfg: &RunConfig) -> Vec<VerifyItem> {
    let profile = cfg.profile();
    let lambda = cfg.params.lambda;
    let mut items = Vec::new();
    let grids = refinements(cfg.grid.length, cfg.grid.n, cfg.grid.kind);

    items.push(VerifyItem::from_result(
        "steady_residual_analytic",
        cfg.grid
            .build()
            .and_then(|g| profile.steady_ode_residual(&g))
            .map(|r| {
                let worst = r.analytic_first.max(r.analytic_second);
                (
                    worst < RESIDUAL_TOL,
                    format!(
                        "max residual {} (tol {})",
                        fmt_num(worst),
                        fmt_num(RESIDUAL_TOL)
                    ),
                )
            }),
    ));

    let mass = profile.quadrature_mass();
    let err = (mass - lambda).abs();
    items.push(VerifyItem::new(
        "quadrature_mass",
        err <= MASS_TOL * lambda,
        format!(
            "mass {} vs lambda {} (error {})",
            fmt_num(mass),
            fmt_num(lambda),
            fmt_num(err)
        ),
    ));

    let residuals = grids.clone().and_then(|gs| {
        gs.iter()
            .map(|g| profile.steady_ode_residual(g))
            .collect::<ks_core::Result<Vec<_>>>()
    });
    for (name, pick) in [
        (
            "residual_order_first",
            (|r: &ks_core::steady::OdeResidual| r.discrete_first) as fn(&_) -> f64,
        ),
        (
            "residual_order_second",
            |r: &ks_core::steady::OdeResidual| r.discrete_second,
        ),
    ] {
        items.push(VerifyItem::from_result(
            name,
            residuals.clone().map(|rs| {
                let errs: Vec<f64> = rs.iter().map(pick).collect();
                let order = min_order(&errs);
                (
                    order >= ORDER_THRESHOLD,
                    format!(
                        "residuals {} order {} (need {})",
                        fmt_list(&errs),
                        fmt_num(order),
                        ORDER_THRESHOLD
                    ),
                )
            }),
        ));
    }

    items.push(VerifyItem::from_result(
        "mass_conservation",
        cfg.grid
            .build()
            .and_then(|g| mass_drift_run(&profile, &g, bump_of(cfg), MASS_STEPS))
            .map(|d| {
                (
                    d <= DRIFT_TOL,
                    format!(
                        "relative drift {} over {MASS_STEPS} steps (tol {})",
                        fmt_num(d),
                        fmt_num(DRIFT_TOL)
                    ),
                )
            }),
    ));

    let hardy = hardy_grid();
    items.push(VerifyItem::from_result(
        "hardy_battery",
        hardy_battery(&hardy, HARDY_FIELDS, HARDY_SEED).map(|b| {
            (
                b.failures == 0,
                format!(
                    "{} failures in {} checks, worst lhs/rhs {}",
                    b.failures,
                    b.checks,
                    fmt_num(b.worst_ratio)
                ),
            )
        }),
    ));
    let f = hardy.sample(|x| x * (-x).exp());
    items.push(VerifyItem::from_result(
        "hardy_closed_form",
        hardy_check(&f, 0.0, 1.0).map(|h| {
            let ok = h.satisfied
                && (h.lhs / 0.25 - 1.0).abs() < 0.01
                && (h.rhs / 3.0 - 1.0).abs() < 0.01;
            (
                ok,
                format!("lhs {} (0.25), rhs {} (3)", fmt_num(h.lhs), fmt_num(h.rhs)),
            )
        }),
    ));

    items.push(VerifyItem::from_result(
        "cole_hopf_roundtrip_order",
        grids.and_then(|gs| {
            let errs = gs
                .iter()
                .map(|g| roundtrip_error(&profile, g))
                .collect::<ks_core::Result<Vec<_>>>()?;
            let order = min_order(&errs);
            Ok((
                order >= ORDER_THRESHOLD,
                format!(
                    "errors {} order {} (need {})",
                    fmt_list(&errs),
                    fmt_num(order),
                    ORDER_THRESHOLD
                ),
            ))
        }),
    ));

    items.push(VerifyItem::from_result(
        "formulation_consistency",
        cfg.grid
            .build()
            .and_then(|g| {
                formulation_consistency(&profile, &g, bump_of(cfg), cfg.solver.time_step, 1.0)
            })
            .map(|c| {
                (
                    c.max_diff <= c.tolerance,
                    format!(
                        "max |w_uw - w_uv| {} at t = 1 (tol {}, dt {})",
                        fmt_num(c.max_diff),
                        fmt_num(c.tolerance),
                        fmt_num(c.dt)
                    ),
                )
            }),
    ));
    items
}

/// Writes `verify.txt`; returns the items (exit status 0 iff all pass).
pub fn cmd_verify(cfg: &RunConfig, out: &Path) -> CliResult<Vec<VerifyItem>> {
    prepare_output(cfg, out)?;
    let items = run_suite(cfg);
    let text: String = items.iter().map(|i| i.line() + "\n").collect();
    write_file(&out.join("verify.txt"), &text)?;
    Ok(items)
}
