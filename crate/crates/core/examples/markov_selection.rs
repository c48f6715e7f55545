//! The Markov-inequality argument in practice: among independent Monte Carlo
//! networks, most have error near the mean, and the best one is kept.

use kolmo_dnn::bench::markov_suite;
use kolmo_dnn::catalog;
use kolmo_dnn::constructor::{select_realization, RateConstants, Selection};
use kolmo_dnn::oracle::{FkConfig, ReferenceSolution};

fn main() -> kolmo_dnn::error::Result<()> {
    let checks = markov_suite(100_000, 0)?;
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("Markov inequality: {} checks, {failed} failed", checks.len());

    let problem = catalog::problem("heat-max", 2, 1.0)?;
    let reference = ReferenceSolution::for_problem(&problem, FkConfig::new(4096, 0));
    let report = select_realization(
        &problem,
        &reference,
        &RateConstants::calibrated(64, 1.0),
        Selection { candidates: 8, probes: 512, p: 2.0 },
        5,
    )?;
    for (k, e) in report.candidate_errors.iter().enumerate() {
        let mark = if k == report.selected { " <- selected" } else { "" };
        println!("candidate {k}: L2 error {:.4} ± {:.4}{mark}", e.estimate, e.half_width);
    }
    Ok(())
}
