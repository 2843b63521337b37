//! CSV schemas and readers/writers. Numeric output uses the shortest decimal
//! form that parses back to the identical value.

use std::fs::File;
use std::path::Path;

use tandem_core::experiments::{ExperimentKind, ExperimentResult, SweepPoint};
use tandem_core::types::{PredictionSet, WeightVector};

/// Shortest round-trip decimal representation.
pub fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

pub const PREDICTIONS_HEADER: [&str; 4] = ["instance_id", "y", "pred_h", "pred_m"];
pub const WEIGHTS_HEADER: [&str; 3] = ["instance_id", "w_h", "w_m"];

const STAT_COLUMNS: [&str; 10] = [
    "c_across_mean",
    "c_across_std",
    "c_within_mean",
    "c_within_std",
    "loss_joint_mean",
    "loss_joint_std",
    "loss_h_mean",
    "loss_h_std",
    "loss_m_mean",
    "loss_m_std",
];
const DG_COLUMNS: [&str; 4] = ["dG_h_mean", "dG_h_std", "dG_m_mean", "dG_m_std"];

/// Sweep-parameter columns for a results table of the given kind.
pub fn param_columns(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::Overlap => &["z"],
        ExperimentKind::Alpha => &["alpha"],
        ExperimentKind::Objective => &["a", "b", "theta"],
    }
}

pub fn results_header(kind: ExperimentKind) -> Vec<String> {
    let mut header = vec!["kind".to_string()];
    header.extend(param_columns(kind).iter().map(|s| s.to_string()));
    header.push("replicates".to_string());
    header.extend(STAT_COLUMNS.iter().map(|s| s.to_string()));
    if kind == ExperimentKind::Objective {
        header.extend(DG_COLUMNS.iter().map(|s| s.to_string()));
    }
    header
}

fn param_values(point: &SweepPoint) -> Vec<String> {
    match point {
        SweepPoint::Overlap { z } => vec![z.to_string()],
        SweepPoint::Alpha { alpha } => vec![fmt_f64(*alpha)],
        SweepPoint::Objective { a, b, theta } => {
            vec![fmt_f64(*a), fmt_f64(*b), fmt_f64(*theta)]
        }
    }
}

pub fn write_results(path: &Path, result: &ExperimentResult) -> Result<(), String> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    let io_err = |e: csv::Error| format!("cannot write {}: {e}", path.display());
    writer
        .write_record(results_header(result.kind))
        .map_err(io_err)?;
    for point in &result.points {
        let mut record = vec![result.kind.label().to_string()];
        record.extend(param_values(&point.point));
        record.push(point.replicates.to_string());
        for stats in [
            point.c_across,
            point.c_within,
            point.loss_joint,
            point.loss_h,
            point.loss_m,
        ] {
            record.push(fmt_f64(stats.mean));
            record.push(fmt_f64(stats.std));
        }
        if result.kind == ExperimentKind::Objective {
            for stats in [
                point.dg_h.expect("objective stats"),
                point.dg_m.expect("objective stats"),
            ] {
                record.push(fmt_f64(stats.mean));
                record.push(fmt_f64(stats.std));
            }
        }
        writer.write_record(&record).map_err(io_err)?;
    }
    writer
        .flush()
        .map_err(|e| format!("cannot flush {}: {e}", path.display()))
}

pub fn write_replicates(path: &Path, result: &ExperimentResult) -> Result<(), String> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    let io_err = |e: csv::Error| format!("cannot write {}: {e}", path.display());

    let mut header = vec!["kind".to_string()];
    header.extend(param_columns(result.kind).iter().map(|s| s.to_string()));
    header.extend(
        [
            "replicate",
            "seed",
            "c_across",
            "c_within",
            "loss_joint",
            "loss_h",
            "loss_m",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    if result.kind == ExperimentKind::Objective {
        header.push("dG_h".to_string());
        header.push("dG_m".to_string());
    }
    writer.write_record(header).map_err(io_err)?;

    for record in &result.replicates {
        let mut row = vec![result.kind.label().to_string()];
        row.extend(param_values(&record.point));
        row.push(record.replicate.to_string());
        row.push(record.seed.to_string());
        for value in [
            record.c_across,
            record.c_within,
            record.loss_joint,
            record.loss_h,
            record.loss_m,
        ] {
            row.push(fmt_f64(value));
        }
        if result.kind == ExperimentKind::Objective {
            row.push(fmt_f64(record.dg_h.expect("objective record")));
            row.push(fmt_f64(record.dg_m.expect("objective record")));
        }
        writer.write_record(&row).map_err(io_err)?;
    }
    writer
        .flush()
        .map_err(|e| format!("cannot flush {}: {e}", path.display()))
}

pub fn write_weights(path: &Path, ids: &[i64], weights: &WeightVector) -> Result<(), String> {
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
    let io_err = |e: csv::Error| format!("cannot write {}: {e}", path.display());
    writer.write_record(WEIGHTS_HEADER).map_err(io_err)?;
    for ((id, &w_h), &w_m) in ids.iter().zip(weights.w_h()).zip(weights.w_m()) {
        writer
            .write_record([id.to_string(), fmt_f64(w_h), fmt_f64(w_m)])
            .map_err(io_err)?;
    }
    writer
        .flush()
        .map_err(|e| format!("cannot flush {}: {e}", path.display()))
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>, String> {
    let file = File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(file))
}

fn check_header(record: &csv::StringRecord, expected: &[&str], path: &Path) -> Result<(), String> {
    let found: Vec<&str> = record.iter().collect();
    if found != expected {
        return Err(format!(
            "{}: header mismatch: expected `{}`, found `{}`",
            path.display(),
            expected.join(","),
            found.join(",")
        ));
    }
    Ok(())
}

fn parse_cell<T: std::str::FromStr>(
    record: &csv::StringRecord,
    index: usize,
    column: &str,
    row: usize,
    path: &Path,
) -> Result<T, String> {
    let raw = record
        .get(index)
        .ok_or_else(|| format!("{}: row {row}: missing column `{column}`", path.display()))?;
    raw.parse().map_err(|_| {
        format!(
            "{}: row {row}, column `{column}`: `{raw}` is not a valid value",
            path.display()
        )
    })
}

fn check_finite(value: f64, column: &str, row: usize, path: &Path) -> Result<f64, String> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!(
            "{}: row {row}, column `{column}`: non-finite value",
            path.display()
        ))
    }
}

/// Reads a predictions table. Row numbers in errors count data rows from 1.
pub fn read_predictions(path: &Path) -> Result<PredictionSet, String> {
    let mut reader = open_reader(path)?;
    let mut ids = Vec::new();
    let mut y = Vec::new();
    let mut pred_h = Vec::new();
    let mut pred_m = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        if i == 0 {
            check_header(&record, &PREDICTIONS_HEADER, path)?;
            continue;
        }
        let row = i;
        if record.len() != 4 {
            return Err(format!(
                "{}: row {row}: expected 4 columns, found {}",
                path.display(),
                record.len()
            ));
        }
        ids.push(parse_cell::<i64>(&record, 0, "instance_id", row, path)?);
        y.push(check_finite(
            parse_cell::<f64>(&record, 1, "y", row, path)?,
            "y",
            row,
            path,
        )?);
        pred_h.push(check_finite(
            parse_cell::<f64>(&record, 2, "pred_h", row, path)?,
            "pred_h",
            row,
            path,
        )?);
        pred_m.push(check_finite(
            parse_cell::<f64>(&record, 3, "pred_m", row, path)?,
            "pred_m",
            row,
            path,
        )?);
    }
    PredictionSet::new(ids, y, pred_h, pred_m).map_err(|e| format!("{}: {e}", path.display()))
}

/// Reads a weights table, enforcing the per-row simplex constraint.
pub fn read_weights(path: &Path) -> Result<(Vec<i64>, WeightVector), String> {
    let mut reader = open_reader(path)?;
    let mut ids = Vec::new();
    let mut w_h = Vec::new();
    let mut w_m = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        if i == 0 {
            check_header(&record, &WEIGHTS_HEADER, path)?;
            continue;
        }
        let row = i;
        ids.push(parse_cell::<i64>(&record, 0, "instance_id", row, path)?);
        let h = check_finite(
            parse_cell::<f64>(&record, 1, "w_h", row, path)?,
            "w_h",
            row,
            path,
        )?;
        let m = check_finite(
            parse_cell::<f64>(&record, 2, "w_m", row, path)?,
            "w_m",
            row,
            path,
        )?;
        if !(0.0..=1.0).contains(&h) || !(0.0..=1.0).contains(&m) || (h + m - 1.0).abs() > 1e-12 {
            return Err(format!(
                "{}: row {row}: weights ({h}, {m}) violate the simplex (each in [0, 1], summing to 1)",
                path.display()
            ));
        }
        w_h.push(h);
        w_m.push(m);
    }
    let weights = WeightVector::new(w_h, w_m).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok((ids, weights))
}

/// A results table kept as raw strings so downstream rewrites stay
/// byte-stable.
pub struct ResultsTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ResultsTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_results(path: &Path) -> Result<ResultsTable, String> {
    let mut reader = open_reader(path)?;
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        let cells: Vec<String> = record.iter().map(|s| s.to_string()).collect();
        if i == 0 {
            header = cells;
        } else {
            if cells.len() != header.len() {
                return Err(format!(
                    "{}: row {i}: expected {} columns, found {}",
                    path.display(),
                    header.len(),
                    cells.len()
                ));
            }
            rows.push(cells);
        }
    }
    if header.is_empty() {
        return Err(format!("{}: empty results file", path.display()));
    }
    Ok(ResultsTable { header, rows })
}
