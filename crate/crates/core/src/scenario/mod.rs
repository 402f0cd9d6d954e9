//! Declarative scenario runs and the canned figure data sets.

pub mod config;
pub mod figures;
pub mod output;
pub mod run;

pub use config::{Cutoff, PumpKind, ScenarioConfig, Solver};
pub use figures::{figure, Figure, FigureOptions};
pub use output::{Column, ConservationReport, Row, SolverOutput, SCHEMA_VERSION};
pub use run::{find_crossing, run_scenario, Crossing, Model};
