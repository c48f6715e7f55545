//! Moment and perturbation inequalities of the Euler scheme on every catalog
//! problem, with both sides of each inequality.

use kolmo_dnn::bench::{moment_suite, perturbation_suite};
use kolmo_dnn::catalog::{self, PROBLEM_NAMES};

fn main() -> kolmo_dnn::error::Result<()> {
    let samples = 10_000;
    for name in PROBLEM_NAMES {
        let problem = catalog::problem(name, 2, 1.0)?;
        let mut checks = moment_suite(&problem, 0.5, samples, 1)?;
        checks.extend(perturbation_suite(&problem, 0.5, 2.0, samples, 1)?);
        for c in checks {
            println!(
                "{:5} {:48} lhs = {:.4e} ± {:.1e}   rhs = {:.4e}",
                if c.passed { "ok" } else { "FAIL" },
                c.name,
                c.lhs,
                c.lhs_stderr,
                c.rhs
            );
        }
    }
    Ok(())
}
