//! Canned scenarios behind each figure's data files.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde_json::json;

use crate::error::{Error, Result};
use crate::info::ThermalReference;
use crate::shorttime;

use super::config::{ScenarioConfig, Solver, DEFAULT_D_TAU};
use super::output::{
    format_value, write_json, write_rows, write_table, Column, Row, SCHEMA_VERSION,
};
use super::run::{find_crossing, scenario_meta, Model};

pub const SWEEP: [f64; 4] = [1.0, 3.0, 6.0, 9.0];
pub const HEADLINE_NBAR: f64 = 9.0;

/// Pump spectrum snapshot times.
pub const SNAPSHOTS: [f64; 8] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 1.0, 3.0];

const CROSSING_TAU_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub const ALL: [Figure; 5] = [
        Figure::Fig2,
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }

    pub fn tau_max(self) -> f64 {
        match self {
            Figure::Fig4 => 8.0,
            _ => 3.0,
        }
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config("figure", format!("unknown figure `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FigureOptions {
    pub d_tau: f64,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            d_tau: DEFAULT_D_TAU,
        }
    }
}

struct Run {
    label: String,
    config: ScenarioConfig,
    model: Model,
    rows: Vec<Row>,
    meta: serde_json::Value,
}

fn execute(
    label: String,
    solver: Solver,
    nbar: f64,
    tau_max: f64,
    opts: &FigureOptions,
) -> Result<Run> {
    let config = ScenarioConfig::new(solver, nbar, tau_max)?.with_d_tau(opts.d_tau)?;
    let model = Model::from_config(&config)?;
    let output = model.sample(&config.grid())?;
    let meta = scenario_meta(&config, &model, &output);
    Ok(Run {
        label,
        config,
        model,
        rows: output.rows,
        meta,
    })
}

fn solver_runs(tau_max: f64, opts: &FigureOptions) -> Result<Vec<Run>> {
    Solver::ALL
        .into_iter()
        .map(|s| execute(s.name().to_string(), s, HEADLINE_NBAR, tau_max, opts))
        .collect()
}

fn sweep_runs(solver: Solver, tau_max: f64, opts: &FigureOptions) -> Result<Vec<Run>> {
    SWEEP
        .into_iter()
        .map(|n| execute(format!("nbar={n}"), solver, n, tau_max, opts))
        .collect()
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn series(&mut self, name: &str, cols: &[Column], runs: &[Run]) -> Result<()> {
        let path = self.dir.join(format!("{name}.csv"));
        let series: Vec<(&str, &[Row])> = runs
            .iter()
            .map(|r| (r.label.as_str(), r.rows.as_slice()))
            .collect();
        write_rows(
            BufWriter::new(File::create(&path)?),
            Some("series"),
            cols,
            &series,
        )?;
        self.written.push(path);
        Ok(())
    }

    fn table(&mut self, name: &str, header: &[&str], records: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(format!("{name}.csv"));
        write_table(BufWriter::new(File::create(&path)?), header, records)?;
        self.written.push(path);
        Ok(())
    }

    fn meta(&mut self, figure: Figure, runs: &[&Run], start: Instant) -> Result<()> {
        let path = self.dir.join(format!("{}.meta.json", figure.name()));
        let scenarios: Vec<serde_json::Value> = runs
            .iter()
            .map(|r| json!({ "series": r.label, "scenario": r.meta }))
            .collect();
        let value = json!({
            "tool": "trilinear",
            "version": crate::VERSION,
            "schema_version": SCHEMA_VERSION,
            "figure": figure.name(),
            "files": self.written.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect::<Vec<_>>(),
            "scenarios": scenarios,
            "wall_time_s": start.elapsed().as_secs_f64(),
        });
        write_json(&path, &value)?;
        self.written.push(path);
        Ok(())
    }
}

const TIME_SERIES: [Column; 15] = Column::ALL;
const FIDELITY_COLS: [Column; 10] = [
    Column::Na,
    Column::Nb,
    Column::SB,
    Column::FB,
    Column::IB,
    Column::DEffA,
    Column::DEffBc,
    Column::TEff,
    Column::SA,
    Column::NaRelVar,
];
const MUTUAL_COLS: [Column; 4] = [Column::SA, Column::SB, Column::IABc, Column::IBC];
const SQUEEZE_COLS: [Column; 3] = [Column::Na, Column::QPlus, Column::QMinus];

fn crossing_records(runs: &[Run]) -> Result<Vec<Vec<String>>> {
    let mut records = Vec::new();
    for run in runs {
        let crossing = find_crossing(&run.model, &run.rows, CROSSING_TAU_TOL)?;
        let mut rec = vec![run.label.clone(), format_value(run.config.n_a0)?];
        match crossing {
            Some(c) => {
                let info = run.model.information_at(c.tau)?;
                rec.extend([
                    format_value(c.tau)?,
                    format_value(c.na)?,
                    format_value(c.nb)?,
                    format_value(c.nb_closed_form)?,
                    info.map_or(Ok(String::new()), format_value)?,
                ]);
            }
            None => rec.extend(std::iter::repeat_n(String::new(), 5)),
        }
        records.push(rec);
    }
    Ok(records)
}

const CROSSING_HEADER: [&str; 7] = ["series", "nbar", "tau", "Na", "Nb", "Nb_closed_form", "I_b"];

/// Short-time pump and signal spectra at the snapshot times, each with the
/// thermal distribution of equal mean as an overlay.
fn spectra_records(opts: &FigureOptions) -> Result<(Vec<Vec<String>>, Run)> {
    let run = execute(
        "shorttime".into(),
        Solver::ShortTime,
        HEADLINE_NBAR,
        Figure::Fig3.tau_max(),
        opts,
    )?;
    let pump = run
        .model
        .pump()
        .expect("short-time model has a pump")
        .clone();
    let mut records = Vec::new();
    for &tau in &SNAPSHOTS {
        let state = shorttime::state(&pump, tau)?;
        let rho_a = state.reduced_pump().diagonal();
        let rho_b = state.reduced_signal();
        let thermal_b = ThermalReference::covering(rho_b.mean(), rho_b.cutoff())?.distribution();
        let thermal_a =
            ThermalReference::covering(state.occupations().pump, rho_a.len() - 1)?.distribution();
        let series: [(&str, &[f64]); 4] = [
            ("pump", &rho_a),
            ("pump_thermal", thermal_a.probs()),
            ("signal", rho_b.probs()),
            ("signal_thermal", thermal_b.probs()),
        ];
        for (name, probs) in series {
            for (n, p) in probs.iter().enumerate() {
                records.push(vec![
                    format_value(tau)?,
                    name.to_string(),
                    n.to_string(),
                    format_value(*p)?,
                ]);
            }
        }
    }
    Ok((records, run))
}

/// Runs one figure's scenarios and writes its files into `out_dir`.
pub fn figure(fig: Figure, out_dir: &Path, opts: &FigureOptions) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    std::fs::create_dir_all(out_dir)?;
    let mut w = Writer {
        dir: out_dir,
        written: Vec::new(),
    };
    match fig {
        Figure::Fig2 => {
            let runs = solver_runs(fig.tau_max(), opts)?;
            w.series("fig2", &TIME_SERIES, &runs)?;
            w.meta(fig, &runs.iter().collect::<Vec<_>>(), start)?;
        }
        Figure::Fig3 => {
            let (records, run) = spectra_records(opts)?;
            w.table("fig3", &["tau", "series", "n", "value"], &records)?;
            w.meta(fig, &[&run], start)?;
        }
        Figure::Fig4 | Figure::Fig5 => {
            let solver = if fig == Figure::Fig4 {
                Solver::ShortTime
            } else {
                Solver::Full
            };
            let runs = sweep_runs(solver, fig.tau_max(), opts)?;
            w.series(fig.name(), &FIDELITY_COLS, &runs)?;
            w.table(
                &format!("{}_crossings", fig.name()),
                &CROSSING_HEADER,
                &crossing_records(&runs)?,
            )?;
            w.meta(fig, &runs.iter().collect::<Vec<_>>(), start)?;
        }
        Figure::Fig6 => {
            let mutual = solver_runs(fig.tau_max(), opts)?;
            w.series("fig6a", &MUTUAL_COLS, &mutual)?;
            let squeeze = sweep_runs(Solver::Full, fig.tau_max(), opts)?;
            w.series("fig6b", &SQUEEZE_COLS, &squeeze)?;
            w.meta(
                fig,
                &mutual.iter().chain(&squeeze).collect::<Vec<_>>(),
                start,
            )?;
        }
    }
    Ok(w.written)
}
