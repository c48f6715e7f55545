//! Reference solutions: closed forms, quadrature and plain Feynman–Kac Monte
//! Carlo for every catalog problem.

use kolmo_dnn::catalog::{self, PROBLEM_NAMES};
use kolmo_dnn::oracle::{feynman_kac, FkConfig, ReferenceSolution};

fn main() -> kolmo_dnn::error::Result<()> {
    let x = [0.25, 0.75];
    for name in PROBLEM_NAMES {
        let problem = catalog::problem(name, 2, 1.0)?;
        let reference = ReferenceSolution::for_problem(&problem, FkConfig::new(20_000, 0));
        let (u, hw) = reference.value(&x)?;
        let mc = feynman_kac(&problem, &x, 1.0, &FkConfig::new(20_000, 1))?;
        println!(
            "{name:<15} {:?}: u = {u:.5} ± {hw:.5}   Monte Carlo {:.5} ± {:.5}",
            reference.kind(),
            mc.value,
            mc.stderr
        );
    }
    Ok(())
}
