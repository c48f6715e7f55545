use proptest::prelude::*;

use kolmo_dnn::calculus::{compose, relu_identity, residual_step, weighted_sum};
use kolmo_dnn::network::{Activation, Layer, Matrix, NeuralNetwork};

fn net_from(dims: &[usize], vals: &[f64]) -> NeuralNetwork {
    let mut it = vals.iter().copied().cycle();
    let layers = dims
        .windows(2)
        .map(|w| {
            let data = (0..w[0] * w[1]).map(|_| it.next().unwrap()).collect();
            let bias = (0..w[1]).map(|_| 0.5 * it.next().unwrap()).collect();
            Layer::new(Matrix::from_row_major(w[1], w[0], data).unwrap(), bias).unwrap()
        })
        .collect();
    NeuralNetwork::new(layers, Activation::Relu).unwrap()
}

fn direct(net: &NeuralNetwork, x: &[f64]) -> Vec<f64> {
    let n = net.layers().len();
    net.layers().iter().enumerate().fold(x.to_vec(), |cur, (k, l)| {
        let w = l.weights();
        (0..w.rows())
            .map(|i| {
                let v = l.bias()[i] + (0..w.cols()).map(|j| w.get(i, j) * cur[j]).sum::<f64>();
                if k + 1 < n {
                    v.max(0.0)
                } else {
                    v
                }
            })
            .collect()
    })
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

fn hidden() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..6, 1..3)
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 7..40)
}

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weighted_sum_is_the_linear_combination(
        h in hidden(), v in weights(), h1 in -2.0f64..2.0, h2 in -2.0f64..2.0, x in point(3)
    ) {
        let mut dims = vec![3];
        dims.extend(&h);
        dims.push(2);
        let a = net_from(&dims, &v);
        let b = net_from(&dims, &v[3..]);
        let s = weighted_sum(&[a.clone(), b.clone()], &[h1, h2]).unwrap();
        let want: Vec<f64> = direct(&a, &x).iter().zip(direct(&b, &x)).map(|(p, q)| h1 * p + h2 * q).collect();
        prop_assert!(close(&s.realize(&x).unwrap(), &want));
        prop_assert!(s.param_count() <= 4 * a.param_count());
    }

    #[test]
    fn compose_is_function_composition(hi in hidden(), ho in hidden(), v in weights(), x in point(2)) {
        let mut di = vec![2];
        di.extend(&hi);
        di.push(3);
        let mut dout = vec![3];
        dout.extend(&ho);
        dout.push(1);
        let inner = net_from(&di, &v);
        let outer = net_from(&dout, &v[1..]);
        let c = compose(&outer, &inner, &relu_identity(3)).unwrap();
        prop_assert!(close(&c.realize(&x).unwrap(), &direct(&outer, &direct(&inner, &x))));
        prop_assert_eq!(c.depth(), inner.depth() + outer.depth());
    }

    #[test]
    fn residual_step_adds_the_increment(ha in hidden(), hb in hidden(), v in weights(), x in point(2)) {
        let mut da = vec![2];
        da.extend(&ha);
        da.push(2);
        let mut db = vec![2];
        db.extend(&hb);
        db.push(2);
        let acc = net_from(&da, &v);
        let inc = net_from(&db, &v[2..]);
        let r = residual_step(&acc, &inc, &relu_identity(2)).unwrap();
        let y = direct(&acc, &x);
        let want: Vec<f64> = y.iter().zip(direct(&inc, &y)).map(|(p, q)| p + q).collect();
        prop_assert!(close(&r.realize(&x).unwrap(), &want));
    }

    #[test]
    fn json_round_trip_is_bit_exact(h in hidden(), v in prop::collection::vec(-1e3f64..1e3, 7..40)) {
        let mut dims = vec![2];
        dims.extend(&h);
        dims.push(1);
        let net = net_from(&dims, &v);
        prop_assert_eq!(NeuralNetwork::from_json(&net.to_json().unwrap()).unwrap(), net);
    }

    #[test]
    fn identity_is_exact(x in prop::collection::vec(-1e9f64..1e9, 1..9)) {
        prop_assert_eq!(relu_identity(x.len()).realize(&x).unwrap(), x);
    }
}

#[test]
fn inputs_are_not_mutated() {
    let a = net_from(&[2, 3, 2], &[0.3, -0.7, 0.1, 0.9]);
    let b = net_from(&[2, 4, 2], &[0.2, 0.5, -0.4]);
    let (a0, b0) = (a.clone(), b.clone());
    let id = relu_identity(2);
    let _ = weighted_sum(&[a.clone(), a.clone()], &[1.0, 2.0]).unwrap();
    let _ = compose(&a, &b, &id).unwrap();
    let _ = residual_step(&a, &b, &id).unwrap();
    assert_eq!(a, a0);
    assert_eq!(b, b0);
    assert_eq!(id, relu_identity(2));
}

#[test]
fn single_term_sum_rebuilds_the_network() {
    let a = net_from(&[2, 3, 1], &[0.3, -0.7, 0.1, 0.9]);
    let s = weighted_sum(std::slice::from_ref(&a), &[1.0]).unwrap();
    assert_eq!(s.architecture(), a.architecture());
    for x in [[0.1, 0.2], [-1.0, 3.0]] {
        assert!(close(&s.realize(&x).unwrap(), &direct(&a, &x)));
    }
}
