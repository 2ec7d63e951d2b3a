use std::io::Write;

use spinvqe::eigensolver::ground_state;
use spinvqe::{Boundary, Model, PauliHamiltonian};

use crate::args::EdArgs;
use crate::error::CliResult;

pub fn execute(args: EdArgs) -> CliResult {
    let sink: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["model", "L", "delta", "boundary", "e0", "method", "residual"])?;
    let model: Model = args.model.into();
    let boundary = if args.periodic { Boundary::Periodic } else { Boundary::Open };
    let deltas = match model {
        Model::Isotropic => vec![1.0],
        Model::Xxz => args.delta.clone(),
    };
    for &n in &args.sizes {
        for &delta in &deltas {
            let h = match model {
                Model::Isotropic => PauliHamiltonian::isotropic(n, 1.0)?,
                Model::Xxz => PauliHamiltonian::xxz(n, delta)?,
            }
            .with_boundary(boundary);
            let r = ground_state(&h, args.seed)?;
            w.write_record([
                format!("{model:?}").to_lowercase(),
                n.to_string(),
                delta.to_string(),
                format!("{boundary:?}").to_lowercase(),
                r.e0.to_string(),
                format!("{:?}", r.method).to_lowercase(),
                format!("{:.3e}", r.residual_norm),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
