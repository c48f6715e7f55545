//! Save and reload a Monte Carlo network, in factored and in explicit form.

use kolmo_dnn::calculus::relu_identity;
use kolmo_dnn::catalog;
use kolmo_dnn::constructor::{build_mc_network, McNetwork};
use kolmo_dnn::network::NeuralNetwork;
use kolmo_dnn::oracle::ScalarApproximant;
use kolmo_dnn::sde::EulerConfig;

fn main() -> kolmo_dnn::error::Result<()> {
    let problem = catalog::problem("ou-quadratic", 2, 1.0)?;
    let cfg = EulerConfig::new(0.5, 1.0)?;
    let mc = build_mc_network(&problem, &cfg, 16, 3, &relu_identity(2))?;
    let dir = std::env::temp_dir();

    let factored = dir.join("kolmo-mc-network.json");
    std::fs::write(&factored, mc.to_json()?)?;
    let back = McNetwork::from_json(&std::fs::read_to_string(&factored)?)?;

    let dense = dir.join("kolmo-network.json");
    mc.materialize()?.write_to(std::fs::File::create(&dense)?)?;
    let explicit = NeuralNetwork::read_from(std::fs::File::open(&dense)?)?;

    let x = [0.4, 0.6];
    println!("sample architecture {}", mc.sample_architecture());
    println!("explicit architecture {} ({} params)", explicit.architecture(), explicit.param_count());
    println!("factored {} bytes, explicit {} bytes", std::fs::metadata(&factored)?.len(), std::fs::metadata(&dense)?.len());
    println!("value {} / {} / {}", mc.eval(&x)?, back.eval(&x)?, explicit.realize_scalar(&x)?);
    Ok(())
}
