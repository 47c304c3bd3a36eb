//! Multinomial logistic regression with L1, L2 and elastic-net penalties.
//!
//! Objective: mean cross-entropy + `λ · P(W)` with the intercept left
//! unpenalized, where `P` is `‖W‖₁`, `½‖W‖²` or `ρ‖W‖₁ + (1−ρ)/2 ‖W‖²`.
//! The smooth part is minimized by gradient steps with backtracking; the
//! `ℓ₁` part is applied through its proximal map, so coefficients reach
//! exact zeros.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::neural::softmax;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    L1,
    L2,
    ElasticNet { l1_ratio: f64 },
}

impl Penalty {
    fn split(self) -> (f64, f64) {
        match self {
            Penalty::L1 => (1.0, 0.0),
            Penalty::L2 => (0.0, 1.0),
            Penalty::ElasticNet { l1_ratio } => (l1_ratio, 1.0 - l1_ratio),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegParams {
    pub penalty: Penalty,
    pub lambda: f64,
    pub max_iter: usize,
    /// Stop when the gradient-mapping norm (max abs) drops below this.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    pub weights: Array2<f64>,
    pub intercept: Array1<f64>,
    /// Full objective after each accepted iteration; entry 0 is at zero
    /// weights.
    pub objective: Vec<f64>,
}

fn smooth_loss(x: ArrayView2<f64>, y: &[usize], w: &Array2<f64>, b: &Array1<f64>, l2: f64) -> (f64, Array2<f64>) {
    let mut logits = x.dot(w);
    logits += b;
    let (ce, d) = crate::neural::softmax_cross_entropy(&logits, y);
    (ce + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>(), d)
}

fn l1_norm(w: &Array2<f64>) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl LogisticRegression {
    pub fn fit(x: ArrayView2<f64>, y: &[usize], n_classes: usize, params: &LogRegParams) -> Self {
        let d = x.ncols();
        let (r1, r2) = params.penalty.split();
        let (l1, l2) = (params.lambda * r1, params.lambda * r2);
        let mut w = Array2::zeros((d, n_classes));
        let mut b = Array1::zeros(n_classes);
        let (mut f, mut dlogits) = smooth_loss(x, y, &w, &b, l2);
        let mut objective = vec![f + l1 * l1_norm(&w)];
        let mut step = 1.0;
        for _ in 0..params.max_iter {
            let gw = x.t().dot(&dlogits) + &w * l2;
            let gb = dlogits.sum_axis(Axis(0));
            let (mut w_new, mut b_new, mut f_new, mut d_new);
            loop {
                w_new = (&w - &(&gw * step)).mapv(|v| soft_threshold(v, step * l1));
                b_new = &b - &(&gb * step);
                let dw = &w_new - &w;
                let db = &b_new - &b;
                (f_new, d_new) = smooth_loss(x, y, &w_new, &b_new, l2);
                let lin = (&dw * &gw).sum() + (&db * &gb).sum();
                let quad = (dw.iter().map(|v| v * v).sum::<f64>() + db.iter().map(|v| v * v).sum::<f64>()) / (2.0 * step);
                if f_new <= f + lin + quad + 1e-12 * f.abs() || step < 1e-12 {
                    break;
                }
                step *= 0.5;
            }
            let change = w_new
                .iter()
                .zip(&w)
                .chain(b_new.iter().zip(&b))
                .map(|(a, c)| (a - c).abs())
                .fold(0.0, f64::max)
                / step;
            w = w_new;
            b = b_new;
            f = f_new;
            dlogits = d_new;
            objective.push(f + l1 * l1_norm(&w));
            if change < params.tol {
                break;
            }
            step *= 2.0;
        }
        Self {
            weights: w,
            intercept: b,
            objective,
        }
    }

    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut logits = x.dot(&self.weights);
        logits += &self.intercept;
        softmax(&logits)
    }
}
