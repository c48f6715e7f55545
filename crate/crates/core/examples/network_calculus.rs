//! Weighted sums, composition and residual Euler steps of ReLU networks,
//! checked against direct evaluation.

use kolmo_dnn::calculus::{compose, relu_identity, residual_step, weighted_sum};
use kolmo_dnn::catalog::max_net;
use kolmo_dnn::network::NeuralNetwork;

fn main() -> kolmo_dnn::error::Result<()> {
    let id = relu_identity(2);
    let x = [0.3, -1.2];
    println!("identity {} -> {:?}", id.architecture(), id.realize(&x)?);

    // 0.5 max(x) + 2 (max(x) + 1); summands must share an architecture
    let shifted = max_net(2).scale_shift_output(1.0, &[1.0])?;
    let s = weighted_sum(&[max_net(2), shifted], &[0.5, 2.0])?;
    println!("weighted sum {} params {} -> {:?}", s.architecture(), s.param_count(), s.realize(&x)?);

    // x -> -x, then max
    let neg = id.scale_shift_output(-1.0, &[0.0, 0.0])?;
    let c = compose(&max_net(2), &neg, &id)?;
    println!("max(-x) {} -> {:?}", c.architecture(), c.realize(&x)?);

    // Two explicit Euler steps of x' = -x with h = 0.5
    let drift = id.scale_shift_output(-0.5, &[0.0, 0.0])?;
    let mut acc: NeuralNetwork = id.clone();
    for _ in 0..2 {
        acc = residual_step(&acc, &drift, &id)?;
    }
    println!("two Euler steps {} -> {:?} (want {:?})", acc.architecture(), acc.realize(&x)?, [0.075, -0.3]);
    Ok(())
}
