//! Calibrate `(M, δ)` for the heat equation with `max` initial value on
//! `[0,1]^2`, build the selected network and measure it on fresh probes.

use kolmo_dnn::catalog;
use kolmo_dnn::constructor::{calibrate, select_realization, CalibrationBudget, Selection};
use kolmo_dnn::oracle::{lp_error, FkConfig, ReferenceSolution};

fn main() -> kolmo_dnn::error::Result<()> {
    let eps = 0.1;
    let problem = catalog::problem("heat-max", 2, 1.0)?;
    let cal = calibrate(&problem, eps, 2.0, 7, &CalibrationBudget::default())?;
    for s in &cal.trace {
        println!(
            "M = {:5}  delta = {:.4}  predicted = {:.4}  confirmed = {:?}",
            s.m, s.delta, s.predicted, s.confirmed
        );
    }
    let reference = ReferenceSolution::for_problem(&problem, FkConfig::new(4096, 0));
    let sel = Selection { candidates: 8, probes: 1024, p: 2.0 };
    let report = select_realization(&problem, &reference, &cal.constants, sel, 7)?;
    let fresh = lp_error(&reference, &report.network, &problem.measure, 2.0, 4096, 1234)?;
    println!("params = {}  depth = {}  architecture = {}", report.param_count, report.depth, report.architecture);
    println!("L2 error on fresh probes = {:.4} ± {:.4} (target {eps})", fresh.estimate, fresh.half_width);
    Ok(())
}
