use rayon::prelude::*;
use serde::Serialize;
use spinvqe::optimizer::derive_seed;
use spinvqe::run::{ModeKind, RunSummary};
use spinvqe::{r_squared, run_vqe, Model};

use crate::args::SweepArgs;
use crate::error::{CliError, CliResult};
use crate::output::{ensure_dir, output_dir, write_json};

#[derive(Debug, Serialize)]
struct SweepSummary {
    schema_version: u32,
    #[serde(rename = "L")]
    n_sites: usize,
    p: usize,
    mode: ModeKind,
    seed: u64,
    deltas: Vec<f64>,
    failures: Vec<(f64, String)>,
    r2: Option<f64>,
}

/// Grid `min, min + step, ..., max`, rounded so printed values stay clean.
pub fn delta_grid(min: f64, max: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(CliError::usage("--step must be positive"));
    }
    if !(min <= max) {
        return Err(CliError::usage("--delta-min must not exceed --delta-max"));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize + 1;
    Ok((0..n)
        .map(|i| ((min + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

pub fn execute(args: SweepArgs) -> CliResult {
    let deltas = delta_grid(args.delta_min, args.delta_max, args.step)?;
    let mut base = args.run.to_config()?;
    base.model = Model::Xxz;
    if args.workers == 0 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let dir = output_dir(base.output_dir.as_ref());
    ensure_dir(&dir)?;
    write_json(&dir.join("config.json"), &base.resolved()?)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let results: Vec<(f64, Result<RunSummary, String>)> = pool.install(|| {
        deltas
            .par_iter()
            .enumerate()
            .map(|(i, &delta)| {
                let mut c = base.clone();
                c.delta = delta;
                c.seed = derive_seed(base.seed, i as u64);
                if let Some(o) = c.optimizer.as_mut() {
                    o.seed = c.seed;
                }
                let r = run_vqe(&c).map(|o| o.summary).map_err(|e| e.to_string());
                (delta, r)
            })
            .collect()
    });

    let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
    w.write_record(["delta", "e_vqe", "e_ed", "rel_err", "std_error", "iterations", "status"])?;
    let (mut vqe, mut ed, mut failures) = (Vec::new(), Vec::new(), Vec::new());
    for (delta, r) in &results {
        match r {
            Ok(s) => {
                let e0 = s.ed_e0.map(|e| e.to_string()).unwrap_or_default();
                let rel = s.relative_error.map(|e| e.to_string()).unwrap_or_default();
                w.write_record([
                    delta.to_string(),
                    s.final_energy.to_string(),
                    e0,
                    rel,
                    s.std_error.to_string(),
                    s.iterations.to_string(),
                    "ok".to_string(),
                ])?;
                if let Some(e0) = s.ed_e0 {
                    vqe.push(s.final_energy);
                    ed.push(e0);
                }
            }
            Err(msg) => {
                eprintln!("delta = {delta}: {msg}");
                w.write_record([delta.to_string(), String::new(), String::new(), String::new(), String::new(), String::new(), msg.clone()])?;
                failures.push((*delta, msg.clone()));
            }
        }
    }
    w.flush()?;

    let r2 = r_squared(&vqe, &ed).ok();
    let summary = SweepSummary {
        schema_version: spinvqe::run::SUMMARY_SCHEMA_VERSION,
        n_sites: base.n_sites,
        p: base.layers(),
        mode: base.mode,
        seed: base.seed,
        deltas,
        failures,
        r2,
    };
    write_json(&dir.join("sweep_summary.json"), &summary)?;
    match r2 {
        Some(r2) => println!("{} points, R^2 = {r2:.6}", results.len()),
        None => println!("{} points, R^2 undefined", results.len()),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_both_ends() {
        let g = delta_grid(-1.0, 1.0, 0.1).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[13], 0.3);
        assert_eq!(g[20], 1.0);
    }

    #[test]
    fn rejects_bad_step() {
        assert!(delta_grid(0.0, 1.0, 0.0).is_err());
        assert!(delta_grid(1.0, 0.0, 0.1).is_err());
    }
}
