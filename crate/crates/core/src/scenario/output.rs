//! Observable rows and their CSV / JSON serialization.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Version of the CSV column layout, recorded in every sidecar.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Column {
    Na,
    Nb,
    Nc,
    SA,
    SB,
    FB,
    IB,
    IABc,
    IBC,
    QPlus,
    QMinus,
    DEffA,
    DEffBc,
    TEff,
    NaRelVar,
}

impl Column {
    pub const ALL: [Column; 15] = [
        Column::Na,
        Column::Nb,
        Column::Nc,
        Column::SA,
        Column::SB,
        Column::FB,
        Column::IB,
        Column::IABc,
        Column::IBC,
        Column::QPlus,
        Column::QMinus,
        Column::DEffA,
        Column::DEffBc,
        Column::TEff,
        Column::NaRelVar,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::Na => "Na",
            Column::Nb => "Nb",
            Column::Nc => "Nc",
            Column::SA => "S_a",
            Column::SB => "S_b",
            Column::FB => "F_b",
            Column::IB => "I_b",
            Column::IABc => "I_a_bc",
            Column::IBC => "I_b_c",
            Column::QPlus => "q_plus",
            Column::QMinus => "q_minus",
            Column::DEffA => "d_eff_a",
            Column::DEffBc => "d_eff_bc",
            Column::TEff => "T_eff",
            Column::NaRelVar => "Na_rel_var",
        }
    }

    pub fn from_name(name: &str) -> Option<Column> {
        Column::ALL.into_iter().find(|c| c.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// One grid point. Columns a solver cannot produce stay `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub tau: f64,
    values: [Option<f64>; Column::ALL.len()],
}

impl Row {
    pub fn new(tau: f64) -> Self {
        Self {
            tau,
            values: [None; Column::ALL.len()],
        }
    }

    pub fn set(&mut self, col: Column, value: f64) -> &mut Self {
        self.values[col.index()] = Some(value);
        self
    }

    pub fn get(&self, col: Column) -> Option<f64> {
        self.values[col.index()]
    }

    /// `get` for columns the caller knows are present.
    pub fn value(&self, col: Column) -> f64 {
        self.get(col)
            .unwrap_or_else(|| panic!("column {} is empty at tau={}", col.name(), self.tau))
    }
}

/// Largest deviations of the conserved quantities from their initial values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ConservationReport {
    pub norm: f64,
    pub pump_plus_signal: f64,
    pub signal_minus_idler: f64,
    pub interaction: f64,
}

impl ConservationReport {
    pub fn worst(&self) -> f64 {
        self.norm
            .max(self.pump_plus_signal)
            .max(self.signal_minus_idler)
            .max(self.interaction)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.worst() <= tol
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverOutput {
    pub rows: Vec<Row>,
    /// Present for solvers that evolve a quantum state.
    pub conservation: Option<ConservationReport>,
    /// Sector cutoff actually used, for solvers with a quantum pump.
    pub resolved_cutoff: Option<usize>,
}

impl SolverOutput {
    pub fn column(&self, col: Column) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.get(col)).collect()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.tau).collect()
    }
}

/// Twelve significant digits in scientific notation; `-0` is written as `0`.
pub fn format_value(x: f64) -> Result<String> {
    if !x.is_finite() {
        return Err(Error::Numerical(format!("non-finite output value {x}")));
    }
    let x = if x == 0.0 { 0.0 } else { x };
    Ok(format!("{x:.11e}"))
}

fn format_cell(x: Option<f64>) -> Result<String> {
    x.map_or(Ok(String::new()), format_value)
}

/// Wide CSV: `tau`, an optional leading label column, then `cols`.
pub fn write_rows<W: Write>(
    out: W,
    label: Option<&str>,
    cols: &[Column],
    series: &[(&str, &[Row])],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["tau".to_string()];
    if let Some(l) = label {
        header.push(l.to_string());
    }
    header.extend(cols.iter().map(|c| c.name().to_string()));
    w.write_record(&header).map_err(csv_error)?;
    for (name, rows) in series {
        for row in *rows {
            let mut rec = vec![format_value(row.tau)?];
            if label.is_some() {
                rec.push(name.to_string());
            }
            for &c in cols {
                rec.push(format_cell(row.get(c))?);
            }
            w.write_record(&rec).map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes an arbitrary table of already formatted cells.
pub fn write_table<W: Write>(out: W, header: &[&str], records: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    for rec in records {
        w.write_record(rec).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// `<stem>.meta.json` next to a CSV path.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_formatting() {
        assert_eq!(format_value(1.0).unwrap(), "1.00000000000e0");
        assert_eq!(format_value(-0.0).unwrap(), "0.00000000000e0");
        assert_eq!(format_value(100.357818061227).unwrap(), "1.00357818061e2");
        assert_eq!(format_value(-2.5e-13).unwrap(), "-2.50000000000e-13");
        assert!(format_value(f64::NAN).is_err());
    }

    #[test]
    fn empty_cells_for_missing_columns() {
        let mut row = Row::new(0.5);
        row.set(Column::Nb, 0.25);
        let mut buf = Vec::new();
        write_rows(&mut buf, None, &[Column::Na, Column::Nb], &[("x", &[row])]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "tau,Na,Nb\n5.00000000000e-1,,2.50000000000e-1\n"
        );
    }

    #[test]
    fn labelled_series() {
        let rows = [Row::new(0.0)];
        let mut buf = Vec::new();
        write_rows(
            &mut buf,
            Some("series"),
            &[Column::SA],
            &[("full", &rows), ("shorttime", &rows)],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "tau,series,S_a\n0.00000000000e0,full,\n0.00000000000e0,shorttime,\n"
        );
    }

    #[test]
    fn column_names_round_trip() {
        for c in Column::ALL {
            assert_eq!(Column::from_name(c.name()), Some(c));
        }
        assert_eq!(Column::from_name("tau"), None);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("out/run.csv")),
            PathBuf::from("out/run.meta.json")
        );
    }
}
