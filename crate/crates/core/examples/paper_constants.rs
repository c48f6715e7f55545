//! Sample count M and grid parameter delta prescribed by the existence proof,
//! in log space, next to the explicit parameter bound and its exponent of d.

use kolmo_dnn::catalog;
use kolmo_dnn::constructor::{minimal_kappa, paper_constants, param_certificate};

fn main() -> kolmo_dnn::error::Result<()> {
    for (d, eps) in [(1, 0.5), (2, 0.5), (2, 0.1), (10, 0.1), (100, 0.01)] {
        let problem = catalog::problem("heat-max", d, 1.0)?;
        let params = minimal_kappa(&problem, eps, 2.0)?;
        let c = paper_constants(&params)?;
        println!(
            "d = {d:<4} eps = {eps:<5} kappa = {} eta = {}  ln M = {:>9.2}  ln delta = {:>8.2}  ln bound = {:>10.2}  exponent = {}",
            params.kappa,
            params.eta,
            c.log_m,
            c.log_delta,
            params.log_param_bound(),
            params.certified_exponent()
        );
    }
    let cert = param_certificate(54_000_000, 10.0, 2, 0.1, None);
    println!("54M parameters against 10 d^10 eps^-10 at d=2, eps=0.1: holds = {} (log margin {:.2})", cert.holds, cert.log_margin);
    Ok(())
}
