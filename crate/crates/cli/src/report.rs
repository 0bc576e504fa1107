//! Running a sweep and writing its points.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use turbo_hybrid::sim::derive_point_seed;
use turbo_hybrid::{run_point, SweepPoint, TurboCrcCode};

use crate::spec::{Format, SweepSpec};
use crate::CliError;

pub const CSV_HEADER: [&str; 9] =
    ["ebn0_db", "frames", "frame_errors", "undetected_errors", "fer", "uer", "seed", "scheme", "k"];

/// JSON document: the resolved configuration and the measured points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepSpec,
    pub points: Vec<SweepPoint>,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Output(format!("malformed report: {e}")))
    }
}

fn csv_record(spec: &SweepSpec, p: &SweepPoint) -> [String; 9] {
    [
        p.ebn0_db.to_string(),
        p.frames_run.to_string(),
        p.frame_errors.to_string(),
        p.undetected_errors.to_string(),
        format!("{:.6e}", p.fer),
        format!("{:.6e}", p.uer),
        p.seed.to_string(),
        spec.scheme_name.clone(),
        spec.k.to_string(),
    ]
}

fn io_err(path: Option<&Path>) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf), source }
}

fn csv_err(path: Option<&Path>, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path)(source),
        other => CliError::Output(format!("{other:?}")),
    }
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(io_err(Some(p)))?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// Writes `points` in the spec's format to `spec.out` (stdout when unset).
pub fn emit(spec: &SweepSpec, points: &[SweepPoint]) -> Result<(), CliError> {
    let path = spec.out.as_deref();
    let mut out = open(path)?;
    match spec.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(CSV_HEADER).map_err(|e| csv_err(path, e))?;
            for p in points {
                w.write_record(csv_record(spec, p)).map_err(|e| csv_err(path, e))?;
            }
            w.flush().map_err(io_err(path))?;
        }
        Format::Json => {
            let report = SweepReport { config: spec.clone(), points: points.to_vec() };
            out.write_all(report.to_json().as_bytes()).map_err(io_err(path))?;
        }
    }
    out.flush().map_err(io_err(path))
}

/// Runs every point of the sweep in Eb/N0 order. Output is brought up to
/// date after each point, so an interrupted run keeps the finished points.
/// JSON going to a file is rewritten whole each time; to stdout it is
/// written once at the end.
pub fn run_sweep(spec: &SweepSpec, mut on_point: impl FnMut(&SweepPoint)) -> Result<Vec<SweepPoint>, CliError> {
    let code = TurboCrcCode::new(spec.k)?;
    let path = spec.out.as_deref();
    let mut csv_out = match spec.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(open(path)?);
            w.write_record(CSV_HEADER).map_err(|e| csv_err(path, e))?;
            w.flush().map_err(io_err(path))?;
            Some(w)
        }
        Format::Json => {
            if path.is_some() {
                emit(spec, &[])?;
            }
            None
        }
    };

    let mut points = Vec::with_capacity(spec.ebn0_db.len());
    for (i, &ebn0) in spec.ebn0_db.iter().enumerate() {
        let seed = derive_point_seed(spec.seed, i as u64);
        let point = run_point(&spec.scheme, &code, ebn0, spec.stop, seed)?;
        on_point(&point);
        points.push(point);
        match &mut csv_out {
            Some(w) => {
                w.write_record(csv_record(spec, points.last().unwrap())).map_err(|e| csv_err(path, e))?;
                w.flush().map_err(io_err(path))?;
            }
            None if path.is_some() => emit(spec, &points)?,
            None => {}
        }
    }
    if csv_out.is_none() && path.is_none() {
        emit(spec, &points)?;
    }
    Ok(points)
}
