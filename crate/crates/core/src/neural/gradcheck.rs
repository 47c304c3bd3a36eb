//! Central finite differences against every analytic gradient.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lstm::LstmAutoencoder;
use super::mlp::{grad_slices, mse_loss, softmax_cross_entropy, Activation, Mlp};

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

/// Numerical gradient of `loss` for every parameter tensor yielded by
/// `params`, perturbing one entry at a time.
fn numeric<M>(
    model: &mut M,
    n_tensors: usize,
    params: impl for<'a> Fn(&'a mut M) -> Vec<&'a mut [f64]>,
    loss: impl Fn(&M) -> f64,
) -> Vec<Vec<f64>> {
    (0..n_tensors)
        .map(|t| {
            let len = params(model)[t].len();
            (0..len)
                .map(|i| {
                    let orig = params(model)[t][i];
                    params(model)[t][i] = orig + H;
                    let up = loss(model);
                    params(model)[t][i] = orig - H;
                    let down = loss(model);
                    params(model)[t][i] = orig;
                    (up - down) / (2.0 * H)
                })
                .collect()
        })
        .collect()
}

fn input(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-1.0..1.0))
}

fn check_mlp_mse(seed: u64, hidden: Activation, output: Activation, dropout: f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_layers = rng.gen_range(1..=3);
    let widths: Vec<usize> = (0..=n_layers).map(|_| rng.gen_range(2..7)).collect();
    let batch = rng.gen_range(1..5);
    let mut net = Mlp::new(&widths, hidden, output, dropout, &mut rng);
    for l in &mut net.layers {
        l.bias.mapv_inplace(|_| rng.gen_range(-0.3..0.3));
    }
    let x = input(&mut rng, batch, widths[0]);
    let y = input(&mut rng, batch, *widths.last().unwrap());
    let mask_seed = seed + 1000;
    let run = |net: &Mlp| {
        let mut r = ChaCha8Rng::seed_from_u64(mask_seed);
        let r = (dropout > 0.0).then_some(&mut r);
        net.forward_train(x.view(), r).unwrap()
    };
    let cache = run(&net);
    let (_, d) = mse_loss(cache.output(), y.view());
    let grads = net.backward(&cache, d, false);
    let analytic: Vec<Vec<f64>> = grad_slices(&grads).into_iter().map(<[f64]>::to_vec).collect();
    let n = analytic.len();
    let num = numeric(&mut net, n, |m| m.params_mut(), |m| mse_loss(run(m).output(), y.view()).0);
    for (t, (a, b)) in analytic.iter().zip(&num).enumerate() {
        let e = rel_err(a, b);
        assert!(e < TOL, "seed {seed} widths {widths:?} tensor {t}: rel err {e:e}");
    }
}

#[test]
fn dense_identity_mse() {
    for seed in 0..12 {
        check_mlp_mse(seed, Activation::Identity, Activation::Identity, 0.0);
    }
}

#[test]
fn dense_tanh_mse() {
    for seed in 100..112 {
        check_mlp_mse(seed, Activation::Tanh, Activation::Tanh, 0.0);
    }
}

#[test]
fn dense_relu_mse() {
    // random inputs land on a ReLU kink with probability zero
    for seed in 200..212 {
        check_mlp_mse(seed, Activation::Relu, Activation::Tanh, 0.0);
    }
}

#[test]
fn dense_with_fixed_dropout_mask() {
    for seed in 300..312 {
        check_mlp_mse(seed, Activation::Tanh, Activation::Identity, 0.3);
    }
}

#[test]
fn dropout_layers_at_eval_time() {
    // `None` rng disables the masks; the gradient is that of the plain net
    for seed in 400..412 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let widths = [rng.gen_range(2..6), rng.gen_range(2..6), rng.gen_range(2..6)];
        let mut net = Mlp::new(&widths, Activation::Relu, Activation::Identity, 0.5, &mut rng);
        let x = input(&mut rng, 3, widths[0]);
        let y = input(&mut rng, 3, widths[2]);
        let cache = net.forward_train(x.view(), None).unwrap();
        assert_eq!(cache.output(), &net.forward(x.view()).unwrap());
        let (_, d) = mse_loss(cache.output(), y.view());
        let analytic: Vec<Vec<f64>> = grad_slices(&net.backward(&cache, d, false))
            .into_iter()
            .map(<[f64]>::to_vec)
            .collect();
        let num = numeric(&mut net, 4, |m| m.params_mut(), |m| mse_loss(&m.forward(x.view()).unwrap(), y.view()).0);
        for (a, b) in analytic.iter().zip(&num) {
            assert!(rel_err(a, b) < TOL);
        }
    }
}

#[test]
fn softmax_cross_entropy_through_network() {
    for seed in 500..512 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let classes = rng.gen_range(2..6);
        let widths = [rng.gen_range(2..6), rng.gen_range(3..8), classes];
        let batch = rng.gen_range(2..6);
        let mut net = Mlp::new(&widths, Activation::Relu, Activation::Identity, 0.0, &mut rng);
        let x = input(&mut rng, batch, widths[0]);
        let targets: Vec<usize> = (0..batch).map(|_| rng.gen_range(0..classes)).collect();
        let cache = net.forward_train(x.view(), None).unwrap();
        let (_, d) = softmax_cross_entropy(cache.output(), &targets);
        let analytic: Vec<Vec<f64>> = grad_slices(&net.backward(&cache, d, true))
            .into_iter()
            .map(<[f64]>::to_vec)
            .collect();
        let num = numeric(
            &mut net,
            4,
            |m| m.params_mut(),
            |m| softmax_cross_entropy(&m.forward(x.view()).unwrap(), &targets).0,
        );
        for (a, b) in analytic.iter().zip(&num) {
            assert!(rel_err(a, b) < TOL, "seed {seed}");
        }
    }
}

#[test]
fn softmax_cross_entropy_logit_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10 {
        let (b, k) = (rng.gen_range(1..5), rng.gen_range(2..7));
        let logits = input(&mut rng, b, k) * 3.0;
        let targets: Vec<usize> = (0..b).map(|_| rng.gen_range(0..k)).collect();
        let (_, d) = softmax_cross_entropy(&logits, &targets);
        let mut l = logits.clone();
        let num: Vec<f64> = (0..b * k)
            .map(|i| {
                let (r, c) = (i / k, i % k);
                let orig = l[[r, c]];
                l[[r, c]] = orig + H;
                let up = softmax_cross_entropy(&l, &targets).0;
                l[[r, c]] = orig - H;
                let down = softmax_cross_entropy(&l, &targets).0;
                l[[r, c]] = orig;
                (up - down) / (2.0 * H)
            })
            .collect();
        assert!(rel_err(d.as_slice().unwrap(), &num) < TOL);
    }
}

fn lstm_loss(net: &LstmAutoencoder, x: ArrayView2<f64>) -> f64 {
    let target = LstmAutoencoder::target(x);
    mse_loss(&net.reconstruct(x).unwrap(), target.view()).0
}

#[test]
fn lstm_autoencoder_bptt() {
    for seed in 600..612 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = rng.gen_range(2..6);
        let hidden = rng.gen_range(1..5);
        let k = rng.gen_range(1..4);
        let batch = rng.gen_range(1..4);
        let mut net = LstmAutoencoder::init(seq, hidden, k, &mut rng);
        for p in net.params_mut() {
            p.iter_mut().for_each(|v| *v += rng.gen_range(-0.2..0.2));
        }
        let x = input(&mut rng, batch, seq);
        let cache = net.forward_train(x.view()).unwrap();
        let target = LstmAutoencoder::target(x.view());
        let (_, d) = mse_loss(&cache.output, target.view());
        let g = net.backward(&cache, &d);
        let analytic: Vec<Vec<f64>> = g.slices().into_iter().map(<[f64]>::to_vec).collect();
        let num = numeric(&mut net, 10, |m| m.params_mut(), |m| lstm_loss(m, x.view()));
        for (t, (a, b)) in analytic.iter().zip(&num).enumerate() {
            let e = rel_err(a, b);
            assert!(e < TOL, "seed {seed} (T={seq}, H={hidden}, k={k}) tensor {t}: {e:e}");
        }
    }
}
