use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use spinvqe::OptimizationTrace;

use crate::error::{CliError, CliResult};

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

/// One JSON object per iteration.
pub fn write_trace_jsonl(path: &Path, trace: &OptimizationTrace) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for record in &trace.iterations {
        serde_json::to_writer(&mut w, record)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Plot-ready view of the trace without the parameter snapshots.
pub fn write_trace_csv(path: &Path, trace: &OptimizationTrace) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iteration", "energy", "std_error", "best_energy", "shots", "evaluations", "elapsed_s"])?;
    for r in &trace.iterations {
        w.write_record([
            r.iteration.to_string(),
            r.energy.to_string(),
            r.std_error.to_string(),
            r.best_energy.to_string(),
            r.shots.to_string(),
            r.evaluations.to_string(),
            r.elapsed_s.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn output_dir(dir: Option<&PathBuf>) -> PathBuf {
    dir.cloned().unwrap_or_else(|| PathBuf::from("."))
}
