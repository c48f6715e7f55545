//! Euler–Maruyama paths of the Ornstein–Uhlenbeck problem and the coupled
//! strong error against a fine-grid solution sharing the Brownian path.

use kolmo_dnn::catalog;
use kolmo_dnn::sde::{brownian_moment, coupled_strong_error, diffusion_factor, euler_path, EulerConfig, NoiseRealization};

fn main() -> kolmo_dnn::error::Result<()> {
    let problem = catalog::problem("ou-linear", 2, 1.0)?;
    let diff = diffusion_factor(&problem.a)?;
    let cfg = EulerConfig::new(0.5, 1.0)?;
    let noise = NoiseRealization::generate(42, 0, &cfg, 2);
    let path = euler_path(problem.drift.as_ref(), &[1.0, 1.0], &diff, &cfg, &noise, true)?;
    for (k, y) in path.path.iter().flatten().enumerate() {
        println!("t = {:.2}  Y = [{:+.4}, {:+.4}]", cfg.time(k), y[0], y[1]);
    }
    for delta in [0.4, 0.2, 0.1, 0.05] {
        let e = coupled_strong_error(problem.drift.as_ref(), &diff, &[1.0, 1.0], 1.0, delta, 2.0, 4000, 1)?;
        println!("delta = {delta:<5} strong L2 error = {:.5} ± {:.5}", e.value, e.stderr);
    }
    let m = brownian_moment(&diff, 1.0, 4.0, 20_000, 2)?;
    println!("(E||A W_1||^4)^(1/4) = {:.4} ± {:.4}", m.value, m.stderr);
    Ok(())
}
