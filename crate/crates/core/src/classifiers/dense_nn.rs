//! Feed-forward softmax classifier trained with Adam.

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::neural::{grad_slices, softmax, softmax_cross_entropy, Activation, Adam, Mlp};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNnParams {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNn {
    pub net: Mlp,
}

impl DenseNn {
    pub fn fit(x: ArrayView2<f64>, y: &[usize], n_classes: usize, params: &DenseNnParams, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut widths = vec![x.ncols()];
        widths.extend(&params.hidden);
        widths.push(n_classes);
        let mut net = Mlp::new(&widths, Activation::Relu, Activation::Identity, params.dropout, &mut rng);
        let mut opt = Adam::with_lr(params.lr);
        let mut order: Vec<usize> = (0..x.nrows()).collect();
        for _ in 0..params.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(params.batch_size) {
                let xb = x.select(Axis(0), batch);
                let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
                let cache = net.forward_train(xb.view(), Some(&mut rng))?;
                let (_, d) = softmax_cross_entropy(cache.output(), &yb);
                let grads = net.backward(&cache, d, true);
                opt.step(&mut net.params_mut(), &grad_slices(&grads));
            }
        }
        Ok(Self { net })
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(softmax(&self.net.forward(x)?))
    }
}
