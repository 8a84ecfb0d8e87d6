use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ks_core::initial::{perturbed_initial_data, steady_initial_data, with_formulation};
use ks_core::solver::run_simulation;
use ks_core::steady::weak_error;
use ks_core::{
    Field, Formulation, Grid, KsError, Parameters, SimulationOutput, SteadyStateProfile, SweepAxis,
    TestFunction,
};
use rayon::prelude::*;

use crate::config::{Perturbation, RunConfig};
use crate::error::{CliError, CliResult, ConfigError};
use crate::format::{csv_row, csv_table, fmt_num};
use crate::svg::{self, Panel, Series};

pub const PROFILES_HEADER: &str = "x,U,W,V";
pub const TIMESERIES_HEADER: &str = "t,mass,sup_dev_u,sup_dev_second,L1_dev_u,N_value,energy_L2";
pub const SWEEP_HEADER: &str = "value,weak_error,layer_width,U_at_0,W_half_point";
const INVALID: &str = "invalid";

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Creates `out` and writes `config.echo` into it.
pub fn prepare_output(cfg: &RunConfig, out: &Path) -> CliResult<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_file(&out.join("config.echo"), &cfg.echo())
}

/// Plot window `[0, X]` showing the spike and layer: four half-height widths.
fn plot_extent(profile: &SteadyStateProfile) -> f64 {
    4.0 * profile.layer_width(0.5).expect("0.5 is a valid threshold")
}

/// Writes `profiles.csv` (and `profiles.svg` when enabled); returns the
/// written paths.
pub fn cmd_steady(cfg: &RunConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    prepare_output(cfg, out)?;
    let profile = cfg.profile();
    let grid = cfg.grid.build()?;
    let mut written = vec![out.join("config.echo")];
    if cfg.outputs.profiles_csv {
        let rows = grid
            .nodes()
            .iter()
            .map(|&x| csv_row(&[x, profile.u(x), profile.w(x), profile.v(x)]));
        let path = out.join("profiles.csv");
        write_file(&path, &csv_table(PROFILES_HEADER, rows))?;
        written.push(path);
    }
    if cfg.outputs.svg {
        let extent = plot_extent(&profile).min(grid.length());
        let xs: Vec<f64> = grid
            .nodes()
            .iter()
            .copied()
            .filter(|&x| x <= extent)
            .collect();
        let series = |label: &str, f: &dyn Fn(f64) -> f64| Series {
            label: label.into(),
            xs: xs.clone(),
            ys: xs.iter().map(|&x| f(x)).collect(),
        };
        let panels = [
            Panel {
                title: "U(x)".into(),
                x_label: "x".into(),
                log_y: false,
                series: vec![series("U", &|x| profile.u(x))],
            },
            Panel {
                title: "W(x)".into(),
                x_label: "x".into(),
                log_y: false,
                series: vec![series("W", &|x| profile.w(x))],
            },
        ];
        let path = out.join("profiles.svg");
        write_file(&path, &svg::render(&panels))?;
        written.push(path);
    }
    Ok(written)
}

/// Linear interpolation of `(xs, ys)` at `x`, zero outside `[xs[0], xs[n-1]]`.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.is_empty() || x < xs[0] || x > xs[xs.len() - 1] {
        return 0.0;
    }
    let i = xs.partition_point(|&p| p <= x);
    if i == 0 {
        return ys[0];
    }
    if i == xs.len() {
        return ys[xs.len() - 1];
    }
    let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    ys[i - 1] + t * (ys[i] - ys[i - 1])
}

/// Reads a `x,du,dv` perturbation table with increasing `x`.
pub fn read_perturbation(path: &Path) -> CliResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |line: usize, message: String| CliError::Config(ConfigError::Parse { line, message });
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "x,du,dv" => {}
        _ => {
            return Err(bad(
                1,
                format!("{}: header must be `x,du,dv`", path.display()),
            ))
        }
    }
    let (mut xs, mut du, mut dv) = (Vec::new(), Vec::new(), Vec::new());
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| bad(i + 1, format!("{}: {e}", path.display())))?;
        if cols.len() != 3 || xs.last().is_some_and(|&p| cols[0] <= p) {
            return Err(bad(
                i + 1,
                format!("{}: expected increasing `x,du,dv` rows", path.display()),
            ));
        }
        xs.push(cols[0]);
        du.push(cols[1]);
        dv.push(cols[2]);
    }
    Ok((xs, du, dv))
}

/// Initial `(u, second)` for `cfg.perturbation` on `grid`.
pub fn initial_data(
    cfg: &RunConfig,
    profile: &SteadyStateProfile,
    grid: &Arc<Grid>,
) -> CliResult<(Field, Field)> {
    let formulation = cfg.solver.formulation;
    Ok(match &cfg.perturbation {
        Perturbation::None => steady_initial_data(profile, grid, formulation),
        Perturbation::Bump {
            amplitude,
            center,
            width,
        } => perturbed_initial_data(profile, grid, *amplitude, *center, *width, formulation)?,
        Perturbation::File { path } => {
            let (xs, du, dv) = read_perturbation(path)?;
            let u = grid.sample(|x| profile.u(x) + interpolate(&xs, &du, x));
            let v = grid.sample(|x| profile.v(x) + interpolate(&xs, &dv, x));
            with_formulation(profile, u, v, formulation)?
        }
    })
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn summary_text(run: &SimulationOutput) -> String {
    let last = run.final_record();
    let entries: [(&str, String); 14] = [
        ("status", run.status.as_str().into()),
        ("converged", yes_no(run.converged).into()),
        ("steps", run.steps.to_string()),
        ("t_end", fmt_num(last.t)),
        ("mass_drift", fmt_num(run.max_mass_drift)),
        ("C_obs", fmt_num(run.c_obs)),
        ("N_sup", fmt_num(run.n_sup)),
        ("dissipation_integral", fmt_num(run.dissipation_integral)),
        ("max_cfl", fmt_num(run.max_cfl)),
        ("min_u", fmt_num(run.min_u)),
        ("final_sup_dev_u", fmt_num(last.sup_dev_u)),
        ("final_sup_dev_second", fmt_num(last.sup_dev_second)),
        ("final_L1_dev_u", fmt_num(last.l1_dev_u)),
        ("final_energy_L2", fmt_num(last.energy_l2)),
    ];
    entries
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect()
}

fn failure_text(err: &KsError) -> String {
    format!(
        "status = failed\nconverged = no\nerror = {}\nmessage = {err}\n",
        err.kind()
    )
}

/// Runs the configured simulation. Writes `timeseries.csv`, `summary.txt`
/// and optionally `final_profiles.csv` and `timeseries.svg`. Solver errors
/// are written to `summary.txt` before being returned.
pub fn cmd_evolve(cfg: &RunConfig, out: &Path) -> CliResult<SimulationOutput> {
    prepare_output(cfg, out)?;
    let profile = cfg.profile();
    let grid = cfg.grid.build()?;
    let summary_path = out.join("summary.txt");
    let run = initial_data(cfg, &profile, &grid)
        .and_then(|(u0, s0)| run_simulation(u0, s0, &cfg.solver, &profile).map_err(CliError::from));
    let run = match run {
        Ok(run) => run,
        Err(CliError::Solver(err)) => {
            write_file(&summary_path, &failure_text(&err))?;
            return Err(CliError::Solver(err));
        }
        Err(other) => return Err(other),
    };

    if cfg.outputs.timeseries_csv {
        let rows = run.diagnostics.iter().map(|r| {
            csv_row(&[
                r.t,
                r.mass,
                r.sup_dev_u,
                r.sup_dev_second,
                r.l1_dev_u,
                r.n_value,
                r.energy_l2,
            ])
        });
        write_file(
            &out.join("timeseries.csv"),
            &csv_table(TIMESERIES_HEADER, rows),
        )?;
    }
    write_file(&summary_path, &summary_text(&run))?;
    if cfg.outputs.profiles_csv {
        let state = run.final_state();
        let header = match state.formulation {
            Formulation::Uv => "x,u,v",
            Formulation::Uw => "x,u,w",
        };
        let rows = grid
            .nodes()
            .iter()
            .zip(state.u.values().iter().zip(state.second.values()))
            .map(|(&x, (&u, &s))| csv_row(&[x, u, s]));
        write_file(&out.join("final_profiles.csv"), &csv_table(header, rows))?;
    }
    if cfg.outputs.svg {
        let ts: Vec<f64> = run.diagnostics.iter().map(|r| r.t).collect();
        let column = |label: &str, f: fn(&ks_core::DiagnosticsRecord) -> f64| Series {
            label: label.into(),
            xs: ts.clone(),
            ys: run.diagnostics.iter().map(f).collect(),
        };
        let panels = [
            Panel {
                title: "deviation from the steady state".into(),
                x_label: "t".into(),
                log_y: true,
                series: vec![
                    column("sup_dev_u", |r| r.sup_dev_u),
                    column("sup_dev_second", |r| r.sup_dev_second),
                    column("L1_dev_u", |r| r.l1_dev_u),
                ],
            },
            Panel {
                title: "energy".into(),
                x_label: "t".into(),
                log_y: true,
                series: vec![
                    column("energy_L2", |r| r.energy_l2),
                    column("N_value", |r| r.n_value),
                ],
            },
        ];
        write_file(&out.join("timeseries.svg"), &svg::render(&panels))?;
    }
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepValues {
    pub weak_error: f64,
    pub layer_width: f64,
    pub u_at_0: f64,
    /// Point where `W = b / 2`.
    pub w_half_point: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub result: Result<SweepValues, KsError>,
}

impl SweepRow {
    fn csv(&self) -> String {
        match &self.result {
            Ok(v) => csv_row(&[
                self.value,
                v.weak_error,
                v.layer_width,
                v.u_at_0,
                v.w_half_point,
            ]),
            Err(_) => format!(
                "{},{INVALID},{INVALID},{INVALID},{INVALID}",
                fmt_num(self.value)
            ),
        }
    }
}

fn sweep_point(
    base: Parameters,
    axis: SweepAxis,
    value: f64,
    zeta: TestFunction,
    delta: f64,
) -> Result<SweepValues, KsError> {
    let profile = SteadyStateProfile::new(axis.apply(base, value).validate()?)?;
    Ok(SweepValues {
        weak_error: weak_error(&profile, zeta),
        layer_width: profile.layer_width(delta)?,
        u_at_0: profile.u(0.0),
        w_half_point: profile.layer_width(0.5)?,
    })
}

/// Sweep rows in sample order, computed in parallel.
pub fn sweep_rows(
    base: Parameters,
    axis: SweepAxis,
    samples: &[f64],
    zeta: TestFunction,
    delta: f64,
) -> Vec<SweepRow> {
    samples
        .par_iter()
        .map(|&value| SweepRow {
            value,
            result: sweep_point(base, axis, value, zeta, delta),
        })
        .collect()
}

/// Writes `sweep.csv` (and `sweep.svg` when enabled). Invalid samples are
/// marked in their row and do not stop the sweep.
pub fn cmd_sweep(
    cfg: &RunConfig,
    axis: SweepAxis,
    samples: &[f64],
    out: &Path,
) -> CliResult<Vec<SweepRow>> {
    if samples.is_empty() {
        return Err(CliError::EmptySweep);
    }
    prepare_output(cfg, out)?;
    let rows = sweep_rows(
        cfg.params,
        axis,
        samples,
        cfg.sweep.test_function,
        cfg.sweep.delta,
    );
    for row in &rows {
        if let Err(e) = &row.result {
            log::warn!("{} = {}: {e}", axis.name(), fmt_num(row.value));
        }
    }
    write_file(
        &out.join("sweep.csv"),
        &csv_table(SWEEP_HEADER, rows.iter().map(SweepRow::csv)),
    )?;

    if cfg.outputs.svg {
        let profiles: Vec<(f64, SteadyStateProfile)> = rows
            .iter()
            .filter(|r| r.result.is_ok())
            .filter_map(|r| {
                Some((
                    r.value,
                    SteadyStateProfile::new(axis.apply(cfg.params, r.value)).ok()?,
                ))
            })
            .collect();
        let extent = profiles
            .iter()
            .map(|(_, p)| plot_extent(p))
            .fold(0.0, f64::max);
        let xs: Vec<f64> = (0..=400).map(|i| extent * i as f64 / 400.0).collect();
        let curves = |f: fn(&SteadyStateProfile, f64) -> f64| {
            profiles
                .iter()
                .map(|(v, p)| Series {
                    label: format!("{} = {}", axis.name(), fmt_num(*v)),
                    xs: xs.clone(),
                    ys: xs.iter().map(|&x| f(p, x)).collect(),
                })
                .collect()
        };
        let panels = [
            Panel {
                title: "U(x)".into(),
                x_label: "x".into(),
                log_y: true,
                series: curves(|p, x| p.u(x)),
            },
            Panel {
                title: "W(x)".into(),
                x_label: "x".into(),
                log_y: false,
                series: curves(|p, x| p.w(x)),
            },
        ];
        write_file(&out.join("sweep.svg"), &svg::render(&panels))?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_zero_outside() {
        let xs = [1.0, 2.0, 4.0];
        let ys = [1.0, 3.0, 7.0];
        assert_eq!(interpolate(&xs, &ys, 0.5), 0.0);
        assert_eq!(interpolate(&xs, &ys, 1.5), 2.0);
        assert_eq!(interpolate(&xs, &ys, 3.0), 5.0);
        assert_eq!(interpolate(&xs, &ys, 4.0), 7.0);
        assert_eq!(interpolate(&xs, &ys, 4.5), 0.0);
    }

    #[test]
    fn invalid_sample_is_marked() {
        let base = Parameters::new(1.0, 1.0, 0.5, 1.0, 1.0).unwrap();
        let rows = sweep_rows(
            base,
            SweepAxis::Chi,
            &[2.0, 0.1, 8.0],
            TestFunction::Gaussian,
            0.01,
        );
        assert!(rows[0].result.is_ok() && rows[2].result.is_ok());
        assert!(matches!(
            rows[1].result,
            Err(KsError::InvalidParameter { .. })
        ));
        assert_eq!(rows[1].csv(), "0.1,invalid,invalid,invalid,invalid");
    }
}
