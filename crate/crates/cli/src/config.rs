//! Flat `key = value` run configuration with dotted sections.
//!
//! Blank lines and lines starting with `#` are ignored. Only the five
//! `params.*` keys are required.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use ks_core::grid::{DEFAULT_NODES, DEFAULT_STRETCH};
use ks_core::{
    Formulation, Grid, GridKind, Parameters, Scheme, SolverConfig, SteadyStateProfile, SweepAxis,
    TestFunction, TimeStep,
};

use crate::error::ConfigError;
use crate::format::fmt_num;

const PARAM_KEYS: [&str; 5] = [
    "params.lambda",
    "params.chi",
    "params.m",
    "params.eps",
    "params.b",
];

const OPTIONAL_KEYS: [&str; 24] = [
    "grid.length",
    "grid.n",
    "grid.kind",
    "grid.stretch",
    "solver.formulation",
    "solver.dt",
    "solver.t_final",
    "solver.scheme",
    "solver.snapshot_every",
    "solver.convergence_tol",
    "solver.w_floor",
    "perturbation.kind",
    "perturbation.amplitude",
    "perturbation.center",
    "perturbation.width",
    "perturbation.path",
    "output.dir",
    "output.profiles_csv",
    "output.timeseries_csv",
    "output.svg",
    "sweep.axis",
    "sweep.samples",
    "sweep.test_function",
    "sweep.delta",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    None,
    /// Zero-mass dipole added to `u` and `v`.
    Bump {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// CSV with header `x,du,dv`, linearly interpolated onto the grid and
    /// zero outside its range.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSettings {
    pub length: f64,
    pub n: usize,
    pub kind: GridKind,
}

impl GridSettings {
    pub fn build(&self) -> ks_core::Result<Arc<Grid>> {
        Grid::new(self.length, self.n, self.kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSettings {
    pub dir: PathBuf,
    pub profiles_csv: bool,
    pub timeseries_csv: bool,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    pub axis: Option<SweepAxis>,
    pub samples: Vec<f64>,
    pub test_function: TestFunction,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Parameters,
    pub grid: GridSettings,
    pub solver: SolverConfig,
    pub perturbation: Perturbation,
    pub outputs: OutputSettings,
    pub sweep: SweepSettings,
}

struct Entries {
    map: HashMap<String, (usize, String)>,
}

impl Entries {
    fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, text)) => text.parse::<T>().map(Some).map_err(|e| ConfigError::Parse {
                line,
                message: format!("`{key}`: cannot parse `{text}`: {e}"),
            }),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn choice<T>(&self, key: &str, default: T, options: &[(&str, T)]) -> Result<T, ConfigError>
    where
        T: Copy,
    {
        let Some((line, text)) = self.raw(key) else {
            return Ok(default);
        };
        options
            .iter()
            .find(|(name, _)| *name == text)
            .map(|(_, v)| *v)
            .ok_or_else(|| ConfigError::Parse {
                line,
                message: format!(
                    "`{key}` must be one of {}, got `{text}`",
                    options
                        .iter()
                        .map(|(n, _)| *n)
                        .collect::<Vec<_>>()
                        .join("|")
                ),
            })
    }
}

fn split_line(line: &str) -> Option<(&str, &str)> {
    let (k, v) = line.split_once('=')?;
    Some((k.trim(), v.trim()))
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = split_line(trimmed).ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, got `{trimmed}`"),
        })?;
        let known = PARAM_KEYS.contains(&key) || OPTIONAL_KEYS.contains(&key);
        if !known {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if value.is_empty() && key != "sweep.samples" {
            return Err(ConfigError::Parse {
                line,
                message: format!("`{key}` has an empty value"),
            });
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
            return Err(ConfigError::Parse {
                line,
                message: format!("`{key}` already set on line {first}"),
            });
        }
    }
    Ok(Entries { map })
}

/// Parses a comma-separated list of numbers.
pub fn parse_samples(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| format!("`{s}`: {e}")))
        .collect()
}

pub fn parse_axis(text: &str) -> Option<SweepAxis> {
    match text {
        "chi" => Some(SweepAxis::Chi),
        "eps" => Some(SweepAxis::Eps),
        _ => None,
    }
}

const TEST_FUNCTIONS: [(&str, TestFunction); 4] = [
    ("gaussian", TestFunction::Gaussian),
    ("inverse_cube", TestFunction::InverseCube),
    ("bump", TestFunction::Bump),
    ("constant", TestFunction::Constant),
];

fn test_function_name(t: TestFunction) -> &'static str {
    TEST_FUNCTIONS
        .iter()
        .find(|(_, f)| *f == t)
        .map(|(n, _)| *n)
        .expect("every test function is listed")
}

/// Parses `text`; relative `perturbation.path` values resolve against
/// `base_dir` (the current directory when `None`).
pub fn parse_config(text: &str, base_dir: Option<&Path>) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;

    let mut p = [0.0; 5];
    for (slot, key) in p.iter_mut().zip(PARAM_KEYS) {
        *slot = e.parsed(key)?.ok_or(ConfigError::MissingKey(key))?;
    }
    let params = Parameters::new(p[0], p[1], p[2], p[3], p[4])?;
    let profile = SteadyStateProfile::new(params)?;

    let length = e.or("grid.length", profile.default_domain_length())?;
    let n = e.or("grid.n", DEFAULT_NODES)?;
    let stretch = e.or("grid.stretch", DEFAULT_STRETCH)?;
    let graded = e.choice("grid.kind", true, &[("graded", true), ("uniform", false)])?;
    let kind = if graded {
        GridKind::Graded { stretch }
    } else {
        GridKind::Uniform
    };
    let grid = GridSettings { length, n, kind };
    grid.build()?;

    let defaults = SolverConfig::default();
    let time_step = match e.raw("solver.dt") {
        None | Some((_, "auto")) => TimeStep::Auto,
        Some(_) => TimeStep::Fixed(e.parsed("solver.dt")?.expect("key is present")),
    };
    let w_floor = match e.raw("solver.w_floor") {
        None | Some((_, "auto")) => None,
        Some(_) => e.parsed("solver.w_floor")?,
    };
    let solver = SolverConfig {
        formulation: e.choice(
            "solver.formulation",
            defaults.formulation,
            &[("uv", Formulation::Uv), ("uw", Formulation::Uw)],
        )?,
        time_step,
        t_final: e.or("solver.t_final", defaults.t_final)?,
        scheme: e.choice(
            "solver.scheme",
            defaults.scheme,
            &[("imex", Scheme::Imex), ("explicit", Scheme::Explicit)],
        )?,
        snapshot_every: e.or("solver.snapshot_every", defaults.snapshot_every)?,
        convergence_tol: e.or("solver.convergence_tol", defaults.convergence_tol)?,
        w_floor,
    };
    solver.validate(params.b)?;

    let perturbation = parse_perturbation(&e, length, base_dir)?;

    let outputs = OutputSettings {
        dir: PathBuf::from(e.raw("output.dir").map_or(".", |(_, v)| v)),
        profiles_csv: e.or("output.profiles_csv", true)?,
        timeseries_csv: e.or("output.timeseries_csv", true)?,
        svg: e.or("output.svg", false)?,
    };

    let axis = match e.raw("sweep.axis") {
        None => None,
        Some((line, text)) => Some(parse_axis(text).ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("`sweep.axis` must be chi|eps, got `{text}`"),
        })?),
    };
    let samples = match e.raw("sweep.samples") {
        None => Vec::new(),
        Some((line, text)) => {
            parse_samples(text).map_err(|message| ConfigError::Parse { line, message })?
        }
    };
    let delta = e.or("sweep.delta", 0.01)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(ConfigError::InvalidValue {
            key: "sweep.delta",
            reason: format!("must lie in (0, 1), got {delta}"),
        });
    }
    let sweep = SweepSettings {
        axis,
        samples,
        test_function: e.choice(
            "sweep.test_function",
            TestFunction::Gaussian,
            &TEST_FUNCTIONS,
        )?,
        delta,
    };

    Ok(RunConfig {
        params,
        grid,
        solver,
        perturbation,
        outputs,
        sweep,
    })
}

fn parse_perturbation(
    e: &Entries,
    length: f64,
    base_dir: Option<&Path>,
) -> Result<Perturbation, ConfigError> {
    let kind = e.choice(
        "perturbation.kind",
        0u8,
        &[("none", 0), ("bump", 1), ("file", 2)],
    )?;
    match kind {
        0 => Ok(Perturbation::None),
        1 => {
            let amplitude: f64 = e.or("perturbation.amplitude", 0.01)?;
            let center: f64 = e.or("perturbation.center", 1.0)?;
            let width = e.or("perturbation.width", 1.0)?;
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                return Err(ConfigError::InvalidValue {
                    key: "perturbation.amplitude",
                    reason: format!("must be >= 0, got {amplitude}"),
                });
            }
            if !(width > 0.0 && center - width >= 0.0 && center + width <= length) {
                return Err(ConfigError::InvalidValue {
                    key: "perturbation.width",
                    reason: format!(
                        "support [{}, {}] must lie inside [0, {length}]",
                        center - width,
                        center + width
                    ),
                });
            }
            Ok(Perturbation::Bump {
                amplitude,
                center,
                width,
            })
        }
        _ => {
            let (_, raw) = e
                .raw("perturbation.path")
                .ok_or(ConfigError::MissingKey("perturbation.path"))?;
            let mut path = PathBuf::from(raw);
            if path.is_relative() {
                if let Some(base) = base_dir {
                    path = base.join(path);
                }
            }
            if !path.is_file() {
                return Err(ConfigError::MissingFile(path));
            }
            Ok(Perturbation::File { path })
        }
    }
}

impl RunConfig {
    pub fn profile(&self) -> SteadyStateProfile {
        SteadyStateProfile::new(self.params).expect("parameters were validated at parse time")
    }

    /// Every setting with defaults resolved, in the input format; parsing it
    /// back yields an equal configuration.
    pub fn echo(&self) -> String {
        let mut lines: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| lines.push((k.to_string(), v));
        let p = &self.params;
        put("params.lambda", fmt_num(p.lambda));
        put("params.chi", fmt_num(p.chi));
        put("params.m", fmt_num(p.m));
        put("params.eps", fmt_num(p.eps));
        put("params.b", fmt_num(p.b));

        put("grid.length", fmt_num(self.grid.length));
        put("grid.n", self.grid.n.to_string());
        match self.grid.kind {
            GridKind::Uniform => put("grid.kind", "uniform".into()),
            GridKind::Graded { stretch } => {
                put("grid.kind", "graded".into());
                put("grid.stretch", fmt_num(stretch));
            }
        }

        let s = &self.solver;
        put(
            "solver.formulation",
            match s.formulation {
                Formulation::Uv => "uv",
                Formulation::Uw => "uw",
            }
            .into(),
        );
        put(
            "solver.dt",
            match s.time_step {
                TimeStep::Auto => "auto".into(),
                TimeStep::Fixed(dt) => fmt_num(dt),
            },
        );
        put("solver.t_final", fmt_num(s.t_final));
        put(
            "solver.scheme",
            match s.scheme {
                Scheme::Imex => "imex",
                Scheme::Explicit => "explicit",
            }
            .into(),
        );
        put("solver.snapshot_every", s.snapshot_every.to_string());
        put("solver.convergence_tol", fmt_num(s.convergence_tol));
        put(
            "solver.w_floor",
            s.w_floor.map_or_else(|| "auto".to_string(), fmt_num),
        );

        match &self.perturbation {
            Perturbation::None => put("perturbation.kind", "none".into()),
            Perturbation::Bump {
                amplitude,
                center,
                width,
            } => {
                put("perturbation.kind", "bump".into());
                put("perturbation.amplitude", fmt_num(*amplitude));
                put("perturbation.center", fmt_num(*center));
                put("perturbation.width", fmt_num(*width));
            }
            Perturbation::File { path } => {
                let abs = std::fs::canonicalize(path).unwrap_or_else(|_| path.clone());
                put("perturbation.kind", "file".into());
                put("perturbation.path", abs.display().to_string());
            }
        }

        let o = &self.outputs;
        put("output.dir", o.dir.display().to_string());
        put("output.profiles_csv", o.profiles_csv.to_string());
        put("output.timeseries_csv", o.timeseries_csv.to_string());
        put("output.svg", o.svg.to_string());

        let w = &self.sweep;
        if let Some(axis) = w.axis {
            put("sweep.axis", axis.name().into());
        }
        if !w.samples.is_empty() {
            put(
                "sweep.samples",
                w.samples
                    .iter()
                    .map(|&v| fmt_num(v))
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        put(
            "sweep.test_function",
            test_function_name(w.test_function).into(),
        );
        put("sweep.delta", fmt_num(w.delta));

        lines
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "params.lambda=1\nparams.chi=1\nparams.m=0.5\nparams.eps=1\nparams.b=1";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL, None).unwrap();
        assert_eq!(c.params, Parameters::new(1.0, 1.0, 0.5, 1.0, 1.0).unwrap());
        assert_eq!(c.grid.n, 2001);
        assert_eq!(c.grid.kind, GridKind::Graded { stretch: 50.0 });
        assert_eq!(c.solver, SolverConfig::default());
        assert_eq!(c.perturbation, Perturbation::None);
        assert!(c.outputs.profiles_csv && !c.outputs.svg);
    }

    #[test]
    fn misspelled_key_is_reported_with_line() {
        match parse_config("params.chii=1", None) {
            Err(ConfigError::UnknownKey { line: 1, key }) => assert_eq!(key, "params.chii"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_physical_parameter() {
        let text = "params.lambda=1\nparams.chi=1\nparams.m=0.5\nparams.eps=1";
        assert!(matches!(
            parse_config(text, None),
            Err(ConfigError::MissingKey("params.b"))
        ));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = format!("{MINIMAL}\n\n# comment\ngrid.n = many");
        assert!(matches!(
            parse_config(&text, None),
            Err(ConfigError::Parse { line: 8, .. })
        ));
    }

    #[test]
    fn invalid_parameters_are_delegated() {
        let text = MINIMAL.replace("params.chi=1", "params.chi=0.2");
        assert!(matches!(
            parse_config(&text, None),
            Err(ConfigError::InvalidParameter(_))
        ));
    }

    #[test]
    fn duplicate_and_malformed_lines() {
        assert!(matches!(
            parse_config(&format!("{MINIMAL}\nparams.b=2"), None),
            Err(ConfigError::Parse { line: 6, .. })
        ));
        assert!(matches!(
            parse_config(&format!("{MINIMAL}\nnonsense"), None),
            Err(ConfigError::Parse { line: 6, .. })
        ));
    }

    #[test]
    fn negative_amplitude_is_rejected() {
        let text = format!("{MINIMAL}\nperturbation.kind = bump\nperturbation.amplitude = -1");
        assert!(matches!(
            parse_config(&text, None),
            Err(ConfigError::InvalidValue { .. })
        ));
    }

    #[test]
    fn missing_perturbation_file() {
        let text =
            format!("{MINIMAL}\nperturbation.kind = file\nperturbation.path = /nonexistent/p.csv");
        assert!(matches!(
            parse_config(&text, None),
            Err(ConfigError::MissingFile(_))
        ));
    }

    #[test]
    fn echo_round_trips() {
        let text = format!(
            "{MINIMAL}\ngrid.kind = uniform\ngrid.length = 40\nsolver.dt = 1e-3\n\
             perturbation.kind = bump\nsweep.axis = chi\nsweep.samples = 2, 8,32\noutput.svg = true"
        );
        let c = parse_config(&text, None).unwrap();
        let again = parse_config(&c.echo(), None).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.echo(), again.echo());
    }
}
