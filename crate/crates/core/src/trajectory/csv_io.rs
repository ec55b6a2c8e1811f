//! CSV persistence for trajectories.
//!
//! Layout: a `t` column in seconds first, then one column per labelled
//! variable, prefixed by group — `x.` for states, `u.` for inputs, `y.` for
//! measurements. Lines starting with `#` are comments; the exporter records
//! provenance there. Values use the shortest round-trip decimal form, so an
//! export→ingest cycle is lossless.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::{Provenance, Trajectory};
use crate::dynamics::Label;
use crate::error::{Error, Result};

/// Optic-flow scale for measured data, converting raw camera flow to the
/// velocity-over-altitude ratio.
pub const DEFAULT_FLOW_SCALE: f64 = 0.057;

/// Declares which labelled columns an ingested file must contain.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub state_labels: Vec<Label>,
    pub input_labels: Vec<Label>,
    pub measurement_labels: Vec<Label>,
    /// When set, optic-flow measurement columns (`r`, `r_x`) are multiplied
    /// by this constant on ingest.
    pub flow_scale: Option<f64>,
}

impl CsvSchema {
    /// Schema matching a trajectory's own labels (no flow scaling).
    pub fn of(traj: &Trajectory) -> Self {
        Self {
            state_labels: traj.state_labels.clone(),
            input_labels: traj.input_labels.clone(),
            measurement_labels: traj.measurement_labels.clone(),
            flow_scale: None,
        }
    }
}

fn provenance_comment(p: &Provenance) -> String {
    match p {
        Provenance::Simulated { seed } => format!("# provenance: simulated seed={seed}"),
        Provenance::Measured { source } => format!("# provenance: measured source={source}"),
    }
}

fn parse_provenance(line: &str) -> Option<Provenance> {
    let rest = line.trim_start_matches('#').trim();
    let rest = rest.strip_prefix("provenance:")?.trim();
    if let Some(seed) = rest.strip_prefix("simulated seed=") {
        return seed.trim().parse().ok().map(|seed| Provenance::Simulated { seed });
    }
    if let Some(source) = rest.strip_prefix("measured source=") {
        return Some(Provenance::Measured {
            source: source.trim().to_string(),
        });
    }
    None
}

/// Write a trajectory to `path`.
pub fn export_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", provenance_comment(&traj.provenance))?;
    let mut header = vec!["t".to_string()];
    header.extend(traj.state_labels.iter().map(|l| format!("x.{}", l.name)));
    header.extend(traj.input_labels.iter().map(|l| format!("u.{}", l.name)));
    header.extend(traj.measurement_labels.iter().map(|l| format!("y.{}", l.name)));
    writeln!(out, "{}", header.join(","))?;
    for k in 0..traj.len() {
        let mut row = Vec::with_capacity(header.len());
        row.push(format!("{}", k as f64 * traj.dt));
        for j in 0..traj.states.ncols() {
            row.push(format!("{}", traj.states[(k, j)]));
        }
        for j in 0..traj.inputs.ncols() {
            row.push(format!("{}", traj.inputs[(k, j)]));
        }
        for j in 0..traj.measurements.ncols() {
            row.push(format!("{}", traj.measurements[(k, j)]));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

fn column_index(header: &[String], name: &str) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::CsvFormat(format!("missing column `{name}`")))
}

fn parse_value(raw: &str, row: usize, column: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| Error::CsvRow {
        row,
        reason: format!("column `{column}`: cannot parse `{raw}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::CsvRow {
            row,
            reason: format!("column `{column}`: non-finite value {v}"),
        });
    }
    Ok(v)
}

/// Read a trajectory from `path` against a declared schema.
///
/// Timestamps must be uniform to within 1% of the inferred step. Extra
/// columns beyond the schema are ignored.
pub fn ingest_csv(path: &Path, schema: &CsvSchema) -> Result<Trajectory> {
    let text = std::fs::read_to_string(path)?;
    let mut provenance = Provenance::Measured {
        source: path.display().to_string(),
    };
    for line in text.lines() {
        if line.starts_with('#') {
            if let Some(p) = parse_provenance(line) {
                provenance = p;
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::CsvFormat(e.to_string()))?
        .iter()
        .map(|s| s.to_string())
        .collect();

    let t_idx = column_index(&header, "t")?;
    let group = |prefix: &str, labels: &[Label]| -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| column_index(&header, &format!("{prefix}.{}", l.name)))
            .collect()
    };
    let state_idx = group("x", &schema.state_labels)?;
    let input_idx = group("u", &schema.input_labels)?;
    let meas_idx = group("y", &schema.measurement_labels)?;

    let mut times = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row_number = i + 1; // 1-based data row index
        let record = record.map_err(|e| Error::CsvRow {
            row: row_number,
            reason: e.to_string(),
        })?;
        let field = |idx: usize| -> Result<f64> {
            parse_value(record.get(idx).unwrap_or(""), row_number, &header[idx])
        };
        times.push(field(t_idx)?);
        let mut row = Vec::with_capacity(state_idx.len() + input_idx.len() + meas_idx.len());
        for &idx in state_idx.iter().chain(&input_idx).chain(&meas_idx) {
            row.push(field(idx)?);
        }
        rows.push(row);
    }

    if times.len() < 2 {
        return Err(Error::CsvFormat(
            "trajectory needs at least two samples".to_string(),
        ));
    }
    let dt = times[1] - times[0];
    if dt <= 0.0 {
        return Err(Error::CsvFormat(format!(
            "non-increasing timestamps: t0={} t1={}",
            times[0], times[1]
        )));
    }
    for k in 1..times.len() {
        let gap = times[k] - times[k - 1];
        if (gap - dt).abs() > 0.01 * dt {
            return Err(Error::CsvRow {
                row: k + 1,
                reason: format!("non-uniform sampling: gap {gap} vs step {dt}"),
            });
        }
    }

    let k_total = rows.len();
    let (ns, ni, nm) = (state_idx.len(), input_idx.len(), meas_idx.len());
    let mut states = DMatrix::zeros(k_total, ns);
    let mut inputs = DMatrix::zeros(k_total, ni);
    let mut measurements = DMatrix::zeros(k_total, nm);
    for (k, row) in rows.iter().enumerate() {
        for j in 0..ns {
            states[(k, j)] = row[j];
        }
        for j in 0..ni {
            inputs[(k, j)] = row[ns + j];
        }
        for j in 0..nm {
            measurements[(k, j)] = row[ns + ni + j];
        }
    }

    if let Some(scale) = schema.flow_scale {
        for (j, label) in schema.measurement_labels.iter().enumerate() {
            if label.name == "r" || label.name == "r_x" {
                for k in 0..k_total {
                    measurements[(k, j)] *= scale;
                }
            }
        }
    }

    Ok(Trajectory {
        dt,
        state_labels: schema.state_labels.clone(),
        input_labels: schema.input_labels.clone(),
        measurement_labels: schema.measurement_labels.clone(),
        states,
        inputs,
        measurements,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        kinematic_input, KinematicAgent, KinematicAgentState, SystemModel,
    };
    use nalgebra::DMatrix;

    fn sample_trajectory() -> Trajectory {
        let model = KinematicAgent::with_angular_sensors();
        let mut s = KinematicAgentState::hover(10.0);
        s.vx = 1.0;
        s.w = 0.5;
        s.zeta = 0.4;
        let mut inputs = DMatrix::zeros(100, model.input_labels().len());
        for k in 0..100 {
            inputs
                .row_mut(k)
                .copy_from(&kinematic_input(9.81, 0.0, 0.001, 0.02, 0.0, 0.0).transpose());
        }
        Trajectory::simulate(
            &model,
            &s.to_vector(),
            &inputs,
            0.1,
            Provenance::Simulated { seed: 5 },
        )
        .unwrap()
    }

    #[test]
    fn export_ingest_round_trip_is_lossless() {
        let traj = sample_trajectory();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        export_csv(&traj, &path).unwrap();
        let back = ingest_csv(&path, &CsvSchema::of(&traj)).unwrap();
        assert_eq!(back.dt, traj.dt);
        assert_eq!(back.states, traj.states);
        assert_eq!(back.inputs, traj.inputs);
        assert_eq!(back.measurements, traj.measurements);
        assert_eq!(back.provenance, traj.provenance);
    }

    #[test]
    fn sampling_gap_reports_row_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gap.csv");
        std::fs::write(
            &path,
            "t,y.r_x\n0.0,1.0\n0.1,1.0\n0.2,1.0\n0.5,1.0\n",
        )
        .unwrap();
        let schema = CsvSchema {
            state_labels: vec![],
            input_labels: vec![],
            measurement_labels: vec![Label::new("r_x", "1/s", crate::dynamics::VarKind::Linear)],
            flow_scale: None,
        };
        let err = ingest_csv(&path, &schema).unwrap_err();
        match err {
            Error::CsvRow { row, reason } => {
                assert_eq!(row, 4);
                assert!(reason.contains("non-uniform"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn flow_scale_multiplies_optic_flow_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("flow.csv");
        std::fs::write(&path, "t,y.r_x\n0.0,100.0\n0.1,200.0\n").unwrap();
        let schema = CsvSchema {
            state_labels: vec![],
            input_labels: vec![],
            measurement_labels: vec![Label::new("r_x", "1/s", crate::dynamics::VarKind::Linear)],
            flow_scale: Some(DEFAULT_FLOW_SCALE),
        };
        let traj = ingest_csv(&path, &schema).unwrap();
        assert_eq!(traj.measurements[(0, 0)], 100.0 * 0.057);
        assert_eq!(traj.measurements[(1, 0)], 200.0 * 0.057);
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing.csv");
        std::fs::write(&path, "t,y.r\n0.0,1.0\n0.1,1.0\n").unwrap();
        let schema = CsvSchema {
            state_labels: vec![],
            input_labels: vec![],
            measurement_labels: vec![Label::new("r_x", "1/s", crate::dynamics::VarKind::Linear)],
            flow_scale: None,
        };
        let err = ingest_csv(&path, &schema).unwrap_err();
        assert!(err.to_string().contains("`y.r_x`"));
    }

    #[test]
    fn non_finite_value_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.csv");
        std::fs::write(&path, "t,y.r_x\n0.0,1.0\n0.1,NaN\n").unwrap();
        let schema = CsvSchema {
            state_labels: vec![],
            input_labels: vec![],
            measurement_labels: vec![Label::new("r_x", "1/s", crate::dynamics::VarKind::Linear)],
            flow_scale: None,
        };
        let err = ingest_csv(&path, &schema).unwrap_err();
        match err {
            Error::CsvRow { row, .. } => assert_eq!(row, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
