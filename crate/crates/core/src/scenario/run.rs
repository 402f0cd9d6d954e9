//! Dispatch from a configuration to a solver and assembly of observables.

use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::fock::{default_cutoff, PumpWeights, TrimodalState};
use crate::full::{self, Integrator};
use crate::info::{
    crossing_signal_occupation, effective_dimension, effective_temperature, information,
    mutual_information_a_bc, mutual_information_b_c, pair_dimension, squeezing, thermal_entropy,
    thermal_fidelity, von_neumann_entropy,
};
use crate::parametric;
use crate::semiclassical::SemiclassicalParams;
use crate::shorttime;

use super::config::{Cutoff, PumpKind, ScenarioConfig, Solver};
use super::output::{
    sidecar_path, write_json, write_rows, Column, ConservationReport, Row, SolverOutput,
    SCHEMA_VERSION,
};

/// Signal frequency in the chosen units.
const OMEGA_B: f64 = 1.0;

/// A configured solver, ready to be sampled.
#[derive(Clone, Debug)]
pub enum Model {
    Parametric { n_a0: f64 },
    Semiclassical(SemiclassicalParams),
    ShortTime(PumpWeights),
    Full(PumpWeights, Integrator),
}

pub fn build_pump(kind: PumpKind, n_a0: f64, cutoff: Cutoff) -> Result<PumpWeights> {
    match kind {
        PumpKind::Coherent => {
            let s_max = match cutoff {
                Cutoff::Auto => default_cutoff(n_a0),
                Cutoff::Fixed(c) => c,
            };
            PumpWeights::coherent(n_a0, s_max)
        }
        PumpKind::Fock => {
            let m = n_a0 as usize;
            match cutoff {
                Cutoff::Fixed(c) if c > m => {
                    let mut amps = vec![crate::C64::new(0.0, 0.0); c + 1];
                    amps[m] = crate::C64::new(1.0, 0.0);
                    PumpWeights::from_amplitudes(amps)
                }
                _ => Ok(PumpWeights::fock(m)),
            }
        }
    }
}

impl Model {
    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(match cfg.solver {
            Solver::Parametric => Model::Parametric { n_a0: cfg.n_a0 },
            Solver::Semiclassical => Model::Semiclassical(SemiclassicalParams::new(cfg.n_a0)?),
            Solver::ShortTime => Model::ShortTime(build_pump(cfg.pump, cfg.n_a0, cfg.cutoff)?),
            Solver::Full => {
                Model::Full(build_pump(cfg.pump, cfg.n_a0, cfg.cutoff)?, cfg.integrator)
            }
        })
    }

    pub fn solver(&self) -> Solver {
        match self {
            Model::Parametric { .. } => Solver::Parametric,
            Model::Semiclassical(_) => Solver::Semiclassical,
            Model::ShortTime(_) => Solver::ShortTime,
            Model::Full(..) => Solver::Full,
        }
    }

    pub fn pump(&self) -> Option<&PumpWeights> {
        match self {
            Model::ShortTime(p) | Model::Full(p, _) => Some(p),
            _ => None,
        }
    }

    /// Observables on the grid plus, for state-bearing solvers, the
    /// conservation report. Grid points are processed in parallel and
    /// collected in order.
    pub fn sample(&self, taus: &[f64]) -> Result<SolverOutput> {
        match self {
            Model::Parametric { n_a0 } => {
                let amplitude = n_a0.sqrt();
                let rows = taus
                    .iter()
                    .map(|&t| classical_row(t, *n_a0, parametric::occupation(amplitude, t)))
                    .collect();
                Ok(SolverOutput {
                    rows,
                    conservation: None,
                    resolved_cutoff: None,
                })
            }
            Model::Semiclassical(p) => {
                let thetas = p.theta_grid(taus)?;
                let rows = taus
                    .iter()
                    .zip(thetas)
                    .map(|(&t, theta)| {
                        Ok(classical_row(
                            t,
                            p.pump_occupation(t)?,
                            theta.sinh().powi(2),
                        ))
                    })
                    .collect::<Result<_>>()?;
                Ok(SolverOutput {
                    rows,
                    conservation: None,
                    resolved_cutoff: None,
                })
            }
            Model::ShortTime(pump) => {
                let evaluated = taus
                    .par_iter()
                    .map(|&t| quantum_row(t, &shorttime::state(pump, t)?))
                    .collect::<Result<Vec<_>>>()?;
                Ok(assemble(evaluated, pump.s_max()))
            }
            Model::Full(pump, integrator) => {
                let states = full::evolve_state(pump, taus, *integrator)?;
                let evaluated = taus
                    .par_iter()
                    .zip(states.par_iter())
                    .map(|(&t, st)| quantum_row(t, st))
                    .collect::<Result<Vec<_>>>()?;
                Ok(assemble(evaluated, pump.s_max()))
            }
        }
    }

    /// `(⟨N_a⟩, ⟨N_b⟩)` at a single time, used for root refinement.
    pub fn occupations_at(&self, tau: f64) -> Result<(f64, f64)> {
        match self {
            Model::Parametric { n_a0 } => Ok((*n_a0, parametric::occupation(n_a0.sqrt(), tau))),
            Model::Semiclassical(p) => Ok((p.pump_occupation(tau)?, p.signal_occupation(tau)?)),
            Model::ShortTime(pump) => {
                let occ = shorttime::state(pump, tau)?.occupations();
                Ok((occ.pump, occ.signal))
            }
            Model::Full(pump, integrator) => {
                let st = full::evolve_state(pump, &[tau], *integrator)?;
                let occ = st[0].occupations();
                Ok((occ.pump, occ.signal))
            }
        }
    }

    /// Signal information `I_b` at a single time (quantum solvers only).
    pub fn information_at(&self, tau: f64) -> Result<Option<f64>> {
        let st = match self {
            Model::ShortTime(pump) => shorttime::state(pump, tau)?,
            Model::Full(pump, integrator) => {
                full::evolve_state(pump, &[tau], *integrator)?.remove(0)
            }
            _ => return Ok(Some(0.0)),
        };
        let rho = st.reduced_signal();
        Ok(Some(information(&rho, rho.mean())?))
    }
}

/// Row for a classical pump: the signal is exactly thermal, so its entropy,
/// fidelity and information take their closed forms. Pump entropy and
/// squeezing are undefined.
fn classical_row(tau: f64, na: f64, nb: f64) -> Row {
    let s_b = thermal_entropy(nb);
    let mut row = Row::new(tau);
    row.set(Column::Na, na)
        .set(Column::Nb, nb)
        .set(Column::Nc, nb)
        .set(Column::SB, s_b)
        .set(Column::FB, 1.0)
        .set(Column::IB, 0.0)
        .set(Column::IBC, 2.0 * s_b)
        .set(Column::DEffBc, pair_dimension(effective_dimension(nb)))
        .set(Column::TEff, effective_temperature(nb, OMEGA_B));
    // the semiclassical orbit overshoots below zero near depletion
    if na >= 0.0 {
        row.set(Column::DEffA, effective_dimension(na));
    }
    row
}

struct Invariants {
    norm: f64,
    pump_plus_signal: f64,
    signal_minus_idler: f64,
    interaction: f64,
}

fn quantum_row(tau: f64, state: &TrimodalState) -> Result<(Row, Invariants)> {
    let occ = state.occupations();
    let rho_b = state.reduced_signal();
    let rho_a = state.reduced_pump();
    let s_a = von_neumann_entropy(&rho_a)?;
    let s_b = von_neumann_entropy(&rho_b)?;
    let sq = squeezing(&rho_a.padded(rho_a.dim() + 2))?;

    let mut row = Row::new(tau);
    row.set(Column::Na, occ.pump)
        .set(Column::Nb, occ.signal)
        .set(Column::Nc, occ.idler)
        .set(Column::SA, s_a)
        .set(Column::SB, s_b)
        .set(Column::FB, thermal_fidelity(&rho_b)?)
        .set(Column::IB, information(&rho_b, occ.signal)?)
        .set(Column::IABc, mutual_information_a_bc(s_a))
        .set(Column::IBC, mutual_information_b_c(s_b, s_a))
        .set(Column::QPlus, sq.q_plus)
        .set(Column::QMinus, sq.q_minus)
        .set(Column::DEffA, effective_dimension(occ.pump))
        .set(
            Column::DEffBc,
            pair_dimension(effective_dimension(occ.signal)),
        )
        .set(Column::TEff, effective_temperature(occ.signal, OMEGA_B));
    if occ.pump > 0.0 {
        row.set(
            Column::NaRelVar,
            state.pump_number_variance() / (occ.pump * occ.pump),
        );
    }
    let inv = Invariants {
        norm: state.norm_sqr(),
        pump_plus_signal: occ.pump + occ.signal,
        signal_minus_idler: occ.signal - occ.idler,
        interaction: state.interaction_expectation().norm(),
    };
    Ok((row, inv))
}

fn assemble(evaluated: Vec<(Row, Invariants)>, s_max: usize) -> SolverOutput {
    let mut report = ConservationReport::default();
    if let Some((_, first)) = evaluated.first() {
        let (n0, m0) = (first.norm, first.pump_plus_signal);
        for (_, inv) in &evaluated {
            report.norm = report.norm.max((inv.norm - n0).abs());
            report.pump_plus_signal = report
                .pump_plus_signal
                .max((inv.pump_plus_signal - m0).abs());
            report.signal_minus_idler = report.signal_minus_idler.max(inv.signal_minus_idler.abs());
            report.interaction = report.interaction.max(inv.interaction);
        }
    }
    SolverOutput {
        rows: evaluated.into_iter().map(|(r, _)| r).collect(),
        conservation: Some(report),
        resolved_cutoff: Some(s_max),
    }
}

/// Time at which `d_a = 2N_a + 1` first meets `d_bc = (2N_b + 1)²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Crossing {
    pub tau: f64,
    pub na: f64,
    pub nb: f64,
    /// Signal occupation predicted from `N_a + N_b` at the crossing.
    pub nb_closed_form: f64,
}

fn dimension_gap(na: f64, nb: f64) -> f64 {
    effective_dimension(na) - pair_dimension(effective_dimension(nb))
}

/// Brackets the first sign change of the dimension gap on the sampled grid
/// and refines it by bisection to `tau_tol`.
pub fn find_crossing(model: &Model, rows: &[Row], tau_tol: f64) -> Result<Option<Crossing>> {
    let gap = |r: &Row| dimension_gap(r.value(Column::Na), r.value(Column::Nb));
    let Some(i) = rows
        .windows(2)
        .position(|w| gap(&w[0]) > 0.0 && gap(&w[1]) <= 0.0)
    else {
        return Ok(None);
    };
    let (mut lo, mut hi) = (rows[i].tau, rows[i + 1].tau);
    let mut guard = 0;
    while hi - lo > tau_tol && guard < 200 {
        let mid = 0.5 * (lo + hi);
        let (na, nb) = model.occupations_at(mid)?;
        if dimension_gap(na, nb) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        guard += 1;
    }
    let tau = 0.5 * (lo + hi);
    let (na, nb) = model.occupations_at(tau)?;
    Ok(Some(Crossing {
        tau,
        na,
        nb,
        nb_closed_form: crossing_signal_occupation(na + nb),
    }))
}

/// Runs a scenario; writes the CSV and its sidecar when `out_path` is set.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SolverOutput> {
    let start = Instant::now();
    let model = Model::from_config(cfg)?;
    let taus = cfg.grid();
    let output = model.sample(&taus)?;
    if let Some(path) = &cfg.out_path {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = BufWriter::new(File::create(path)?);
        write_rows(
            file,
            None,
            &cfg.outputs,
            &[(cfg.solver.name(), &output.rows)],
        )?;
        let mut meta = scenario_meta(cfg, &model, &output);
        meta["wall_time_s"] = json!(start.elapsed().as_secs_f64());
        write_json(&sidecar_path(path), &meta)?;
    }
    Ok(output)
}

/// Sidecar contents minus the wall time.
pub fn scenario_meta(
    cfg: &ScenarioConfig,
    model: &Model,
    output: &SolverOutput,
) -> serde_json::Value {
    let config: serde_json::Map<String, serde_json::Value> = cfg
        .pairs()
        .into_iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    let horizon = match model {
        Model::ShortTime(pump) => {
            let h = shorttime::pump_horizon(pump);
            if h.is_finite() {
                json!(h)
            } else {
                serde_json::Value::Null
            }
        }
        _ => serde_json::Value::Null,
    };
    json!({
        "tool": "trilinear",
        "version": crate::VERSION,
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "resolved_cutoff": output.resolved_cutoff,
        "rows": output.rows.len(),
        "conservation": output.conservation,
        "validity_horizon": horizon,
    })
}

/// Error for a scenario that produced an unusable result.
pub fn require_conservation(output: &SolverOutput, tol: f64) -> Result<()> {
    match output.conservation {
        Some(r) if !r.holds(tol) => Err(Error::Numerical(format!(
            "conservation violated: worst deviation {:e}",
            r.worst()
        ))),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ScenarioConfig {
        ScenarioConfig::parse(text).unwrap()
    }

    #[test]
    fn parametric_signal_is_sinh_squared() {
        let out = run_scenario(&cfg("solver=parametric\nn_a0=9\ntau_max=1\nd_tau=0.1")).unwrap();
        for row in &out.rows {
            let expect = (3.0 * row.tau).sinh().powi(2);
            assert!((row.value(Column::Nb) - expect).abs() <= 1e-12 * expect.max(1.0));
            assert_eq!(row.get(Column::SA), None);
            assert_eq!(row.get(Column::QMinus), None);
        }
        assert!(out.conservation.is_none());
    }

    #[test]
    fn fock_one_gives_two_level_oscillation() {
        let out = run_scenario(&cfg(
            "solver=full\npump=fock\nn_a0=1\ntau_max=3\nd_tau=0.25",
        ))
        .unwrap();
        for row in &out.rows {
            assert!((row.value(Column::Nb) - row.tau.sin().powi(2)).abs() < 1e-12);
        }
        assert!(out.conservation.unwrap().holds(1e-12));
    }

    #[test]
    fn shorttime_rows_are_complete() {
        let out = run_scenario(&cfg("solver=shorttime\nn_a0=3\ntau_max=1\nd_tau=0.5")).unwrap();
        for row in &out.rows {
            for c in Column::ALL {
                assert!(row.get(c).is_some(), "{} missing", c.name());
            }
        }
        let first = &out.rows[0];
        assert!(first.value(Column::QPlus).abs() < 1e-9);
        assert!(first.value(Column::SA).abs() < 1e-9);
    }

    #[test]
    fn crossing_for_nine() {
        let c = cfg("solver=shorttime\nn_a0=9\ntau_max=1\nd_tau=0.05");
        let model = Model::from_config(&c).unwrap();
        let out = model.sample(&c.grid()).unwrap();
        let x = find_crossing(&model, &out.rows, 1e-13).unwrap().unwrap();
        assert!((x.nb - 1.5).abs() < 1e-6, "nb={}", x.nb);
        assert!((x.nb_closed_form - 1.5).abs() < 1e-9);
    }

    #[test]
    fn fock_pump_with_padding_cutoff() {
        let p = build_pump(PumpKind::Fock, 2.0, Cutoff::Fixed(5)).unwrap();
        assert_eq!(p.s_max(), 5);
        assert_eq!(p.mean(), 2.0);
        let p = build_pump(PumpKind::Fock, 2.0, Cutoff::Auto).unwrap();
        assert_eq!(p.s_max(), 2);
    }

    #[test]
    fn coherent_cutoff_too_small_is_reported() {
        let e = run_scenario(&cfg("solver=full\nn_a0=9\ntau_max=1\ncutoff=10")).unwrap_err();
        assert!(matches!(e, Error::CutoffTooSmall { .. }));
        assert_eq!(e.exit_code(), 3);
    }
}
