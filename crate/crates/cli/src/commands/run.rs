use spinvqe::{run_vqe, Error};

use crate::args::RunArgs;
use crate::error::CliResult;
use crate::output::{ensure_dir, output_dir, write_json, write_trace_csv, write_trace_jsonl};

pub fn execute(args: RunArgs) -> CliResult {
    let config = args.to_config()?;
    let dir = output_dir(config.output_dir.as_ref());
    ensure_dir(&dir)?;
    write_json(&dir.join("config.json"), &config.resolved()?)?;

    let outcome = match run_vqe(&config) {
        Ok(o) => o,
        Err(Error::NonFiniteCost { iteration, trace }) => {
            write_trace_jsonl(&dir.join("trace.jsonl"), &trace)?;
            return Err(Error::NonFiniteCost { iteration, trace }.into());
        }
        Err(e) => return Err(e.into()),
    };

    write_trace_jsonl(&dir.join("trace.jsonl"), &outcome.trace)?;
    write_trace_csv(&dir.join("trace.csv"), &outcome.trace)?;
    write_json(&dir.join("summary.json"), &outcome.summary)?;
    write_json(&dir.join("params.json"), &outcome.params_file())?;

    let s = &outcome.summary;
    match (s.ed_e0, s.relative_error) {
        (Some(e0), Some(rel)) => println!(
            "L={} p={} energy={:.10} ed={:.10} rel_err={:.3e} iterations={}",
            s.n_sites, s.p, s.final_energy, e0, rel, s.iterations
        ),
        _ => println!(
            "L={} p={} energy={:.10} iterations={}",
            s.n_sites, s.p, s.final_energy, s.iterations
        ),
    }
    Ok(())
}
