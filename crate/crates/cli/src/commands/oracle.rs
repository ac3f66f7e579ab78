use spectral_descent::oracle::{generalized_eigh, jacobi_eigh};

use crate::error::{CliError, CliResult};
use crate::io::{num, read_spd, read_symmetric};
use crate::manifest::Status;
use crate::EighArgs;

/// Prints the ascending spectrum on one line.
pub fn run(args: &EighArgs) -> CliResult<Status> {
    let path = args
        .matrix_flag
        .as_ref()
        .or(args.matrix_pos.as_ref())
        .ok_or_else(|| CliError::usage("missing matrix file (--matrix PATH)"))?;
    let a = read_symmetric(path)?;
    let dec = match &args.b {
        Some(bp) => {
            let b = read_spd(bp)?;
            if b.n() != a.n() {
                return Err(CliError::file(bp, format!("B is {0}x{0} but A is {1}x{1}", b.n(), a.n())));
            }
            generalized_eigh(&a, &b)?
        }
        None => jacobi_eigh(&a)?,
    };
    let line: Vec<String> = dec.eigenvalues.iter().map(|v| num(*v)).collect();
    println!("{}", line.join(" "));
    Ok(Status::Complete)
}
