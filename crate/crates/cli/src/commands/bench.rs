use std::time::{Duration, Instant};

use spinvqe::expectation::evaluate_cost;
use spinvqe::optimizer::derive_seed;
use spinvqe::statevector::MAX_QUBITS;
use spinvqe::{init_params, EstimatorMode, InitStrategy, PauliHamiltonian, ShotBudget};

use crate::args::BenchArgs;
use crate::error::{CliError, CliResult};
use crate::output::ensure_dir;

#[derive(Debug)]
pub struct BenchRow {
    pub n_sites: usize,
    pub mode: &'static str,
    pub mean_eval_time: f64,
    pub state_prep_time: f64,
    pub estimate_time: f64,
    pub mean_energy: f64,
    pub mean_std_error: f64,
}

/// Times `evals` cost evaluations of one fixed parameter point. All times
/// are per-evaluation means in seconds.
pub fn bench_point(n_sites: usize, p: usize, sampled: Option<usize>, evals: usize, seed: u64) -> spinvqe::Result<BenchRow> {
    let h = PauliHamiltonian::isotropic(n_sites, 1.0)?;
    let params = init_params(p, InitStrategy::UniformRandom { seed })?;
    let mode_for = |i: usize| -> spinvqe::Result<EstimatorMode> {
        Ok(match sampled {
            None => EstimatorMode::Exact,
            Some(shots) => EstimatorMode::Sampled(ShotBudget::new(shots, derive_seed(seed, i as u64))?),
        })
    };
    // Warm caches and allocator before timing.
    evaluate_cost(&params, 1.0, &h, mode_for(usize::MAX)?)?;

    let (mut total, mut prep, mut est) = (Duration::ZERO, Duration::ZERO, Duration::ZERO);
    let (mut energy, mut se) = (0.0, 0.0);
    for i in 0..evals {
        let mode = mode_for(i)?;
        let t = Instant::now();
        let e = evaluate_cost(&params, 1.0, &h, mode)?;
        total += t.elapsed();
        prep += e.state_prep_time;
        est += e.wall_time;
        energy += e.value;
        se += e.std_error;
    }
    let k = evals as f64;
    Ok(BenchRow {
        n_sites,
        mode: if sampled.is_some() { "sampled" } else { "exact" },
        mean_eval_time: total.as_secs_f64() / k,
        state_prep_time: prep.as_secs_f64() / k,
        estimate_time: est.as_secs_f64() / k,
        mean_energy: energy / k,
        mean_std_error: se / k,
    })
}

pub fn execute(args: BenchArgs) -> CliResult {
    if args.evals == 0 || args.shots == 0 {
        return Err(CliError::usage("--evals and --shots must be positive"));
    }
    ensure_dir(&args.output_dir)?;
    let mut w = csv::Writer::from_path(args.output_dir.join("bench.csv"))?;
    w.write_record([
        "L",
        "mode",
        "mean_eval_time",
        "state_prep_time",
        "estimate_time",
        "mean_energy",
        "mean_std_error",
        "evals",
        "status",
    ])?;
    for &n in &args.sizes {
        for (label, sampled) in [("exact", None), ("sampled", Some(args.shots))] {
            let p = args.p.unwrap_or(n / 2);
            let row = if n > MAX_QUBITS {
                Err(format!("skipped: L = {n} exceeds {MAX_QUBITS} qubits"))
            } else {
                bench_point(n, p, sampled, args.evals, args.seed).map_err(|e| format!("skipped: {e}"))
            };
            match row {
                Ok(r) => {
                    println!(
                        "L={:<3} {:<8} eval={:.3e}s prep={:.3e}s estimate={:.3e}s",
                        r.n_sites, r.mode, r.mean_eval_time, r.state_prep_time, r.estimate_time
                    );
                    w.write_record([
                        r.n_sites.to_string(),
                        r.mode.to_string(),
                        r.mean_eval_time.to_string(),
                        r.state_prep_time.to_string(),
                        r.estimate_time.to_string(),
                        r.mean_energy.to_string(),
                        r.mean_std_error.to_string(),
                        args.evals.to_string(),
                        "ok".to_string(),
                    ])?;
                }
                Err(msg) => {
                    println!("L={n:<3} {label:<8} {msg}");
                    w.write_record([
                        n.to_string(),
                        label.to_string(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                        "0".to_string(),
                        msg,
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
