//! Scenario configuration: flat `key=value` files merged with overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::full::Integrator;

use super::output::Column;

pub const KEYS: &[&str] = &[
    "solver",
    "pump",
    "n_a0",
    "tau_max",
    "d_tau",
    "cutoff",
    "tol",
    "outputs",
    "out_path",
    "integrator",
];

pub const DEFAULT_D_TAU: f64 = 0.01;
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Solver {
    Parametric,
    Semiclassical,
    ShortTime,
    Full,
}

impl Solver {
    pub const ALL: [Solver; 4] = [
        Solver::Parametric,
        Solver::Semiclassical,
        Solver::ShortTime,
        Solver::Full,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Parametric => "parametric",
            Solver::Semiclassical => "semiclassical",
            Solver::ShortTime => "shorttime",
            Solver::Full => "full",
        }
    }

    /// Solvers that carry a quantum pump and therefore a full state.
    pub fn has_state(self) -> bool {
        matches!(self, Solver::ShortTime | Solver::Full)
    }
}

impl FromStr for Solver {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        Solver::ALL.into_iter().find(|v| v.name() == s).ok_or(())
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PumpKind {
    Coherent,
    Fock,
}

impl PumpKind {
    pub fn name(self) -> &'static str {
        match self {
            PumpKind::Coherent => "coherent",
            PumpKind::Fock => "fock",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cutoff {
    Auto,
    Fixed(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub solver: Solver,
    pub pump: PumpKind,
    pub n_a0: f64,
    pub tau_max: f64,
    pub d_tau: f64,
    pub cutoff: Cutoff,
    pub tol: f64,
    /// Requested columns in canonical order; `tau` is always written.
    pub outputs: Vec<Column>,
    pub out_path: Option<PathBuf>,
    pub integrator: Integrator,
}

impl ScenarioConfig {
    /// Defaults for everything except the solver, pump size and window.
    pub fn new(solver: Solver, n_a0: f64, tau_max: f64) -> Result<Self> {
        let cfg = Self {
            solver,
            pump: PumpKind::Coherent,
            n_a0,
            tau_max,
            d_tau: DEFAULT_D_TAU,
            cutoff: Cutoff::Auto,
            tol: DEFAULT_TOL,
            outputs: Column::ALL.to_vec(),
            out_path: None,
            integrator: Integrator::Eigen,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_pump(mut self, pump: PumpKind) -> Result<Self> {
        self.pump = pump;
        self.validate()?;
        Ok(self)
    }

    pub fn with_d_tau(mut self, d_tau: f64) -> Result<Self> {
        self.d_tau = d_tau;
        self.validate()?;
        Ok(self)
    }

    /// Reads a config file and applies `overrides` on top of it.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut map = match path {
            Some(p) => parse_pairs(&std::fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        for (k, v) in overrides {
            check_key(k)?;
            map.insert(k.clone(), v.clone());
        }
        Self::from_pairs(&map)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_pairs(text)?)
    }

    pub fn from_pairs(map: &BTreeMap<String, String>) -> Result<Self> {
        for k in map.keys() {
            check_key(k)?;
        }
        let get = |key: &str| map.get(key).map(String::as_str);
        let required =
            |key: &str| get(key).ok_or_else(|| Error::config(key, "missing required field"));

        let solver = required("solver")?;
        let solver = solver
            .parse::<Solver>()
            .map_err(|_| Error::config("solver", format!("unknown solver `{solver}`")))?;
        let pump = match get("pump").unwrap_or("coherent") {
            "coherent" => PumpKind::Coherent,
            "fock" => PumpKind::Fock,
            other => return Err(Error::config("pump", format!("unknown pump `{other}`"))),
        };
        let n_a0 = parse_real("n_a0", required("n_a0")?)?;
        let tau_max = parse_real("tau_max", required("tau_max")?)?;
        let d_tau = get("d_tau").map_or(Ok(DEFAULT_D_TAU), |v| parse_real("d_tau", v))?;
        let cutoff = match get("cutoff").unwrap_or("auto") {
            "auto" => Cutoff::Auto,
            v => Cutoff::Fixed(v.parse().map_err(|_| {
                Error::config(
                    "cutoff",
                    format!("expected `auto` or an integer, got `{v}`"),
                )
            })?),
        };
        let tol = get("tol").map_or(Ok(DEFAULT_TOL), |v| parse_real("tol", v))?;
        let outputs = match get("outputs") {
            None | Some("all") => Column::ALL.to_vec(),
            Some(list) => parse_outputs(list)?,
        };
        let out_path = get("out_path").map(PathBuf::from);
        let integrator = match get("integrator").unwrap_or("eigen") {
            "eigen" => Integrator::Eigen,
            "adaptive" => Integrator::Adaptive { tol },
            other => {
                return Err(Error::config(
                    "integrator",
                    format!("expected `eigen` or `adaptive`, got `{other}`"),
                ))
            }
        };
        let cfg = Self {
            solver,
            pump,
            n_a0,
            tau_max,
            d_tau,
            cutoff,
            tol,
            outputs,
            out_path,
            integrator,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_max > 0.0) || !self.tau_max.is_finite() {
            return Err(Error::config("tau_max", "must be a finite number > 0"));
        }
        if !(self.d_tau > 0.0) || !self.d_tau.is_finite() {
            return Err(Error::config("d_tau", "must be a finite number > 0"));
        }
        if self.d_tau > self.tau_max {
            return Err(Error::config("d_tau", "must not exceed tau_max"));
        }
        if !(self.n_a0 >= 0.0) || !self.n_a0.is_finite() {
            return Err(Error::config("n_a0", "must be a finite number >= 0"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::config("tol", "must be > 0"));
        }
        match self.solver {
            Solver::Parametric | Solver::Semiclassical => {
                if self.n_a0 == 0.0 {
                    return Err(Error::config(
                        "n_a0",
                        "classical pump needs amplitude sqrt(n_a0) > 0",
                    ));
                }
                if self.pump == PumpKind::Fock {
                    return Err(Error::config(
                        "pump",
                        format!("{} solver needs a coherent pump", self.solver),
                    ));
                }
            }
            Solver::ShortTime | Solver::Full => {}
        }
        if self.pump == PumpKind::Fock {
            if self.n_a0.fract() != 0.0 {
                return Err(Error::config("n_a0", "Fock pump needs an integer n_a0"));
            }
            if let Cutoff::Fixed(c) = self.cutoff {
                if (c as f64) < self.n_a0 {
                    return Err(Error::config(
                        "cutoff",
                        "must be at least n_a0 for a Fock pump",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Grid `k·d_tau` for `k = 0..=K`, with the last point clipped to
    /// `tau_max`.
    pub fn grid(&self) -> Vec<f64> {
        let steps = (self.tau_max / self.d_tau - 1e-9).ceil().max(0.0) as usize;
        (0..=steps)
            .map(|k| (k as f64 * self.d_tau).min(self.tau_max))
            .collect()
    }

    /// Resolved configuration as canonical `key=value` pairs.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![
            ("solver", self.solver.name().to_string()),
            ("pump", self.pump.name().to_string()),
            ("n_a0", format_real(self.n_a0)),
            ("tau_max", format_real(self.tau_max)),
            ("d_tau", format_real(self.d_tau)),
            (
                "cutoff",
                match self.cutoff {
                    Cutoff::Auto => "auto".to_string(),
                    Cutoff::Fixed(c) => c.to_string(),
                },
            ),
            ("tol", format_real(self.tol)),
            (
                "outputs",
                self.outputs
                    .iter()
                    .map(|c| c.name())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            (
                "integrator",
                match self.integrator {
                    Integrator::Eigen => "eigen".to_string(),
                    Integrator::Adaptive { .. } => "adaptive".to_string(),
                },
            ),
        ];
        if let Some(p) = &self.out_path {
            out.push(("out_path", p.display().to_string()));
        }
        out
    }
}

fn format_real(x: f64) -> String {
    format!("{x:?}")
}

fn check_key(key: &str) -> Result<()> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(Error::config(key, "unknown key"))
    }
}

fn parse_real(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| Error::config(key, format!("expected a number, got `{v}`")))
}

fn parse_outputs(list: &str) -> Result<Vec<Column>> {
    let mut cols = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "tau" {
            continue;
        }
        let col = Column::from_name(name)
            .ok_or_else(|| Error::config("outputs", format!("unknown observable `{name}`")))?;
        if !cols.contains(&col) {
            cols.push(col);
        }
    }
    cols.sort();
    Ok(cols)
}

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::config(
                line,
                format!("line {} is not of the form key=value", lineno + 1),
            )
        })?;
        let key = k.trim();
        check_key(key)?;
        map.insert(key.to_string(), v.trim().to_string());
    }
    Ok(map)
}
