//! Kernel SVM trained by SMO with maximal-violating-pair selection,
//! one-vs-one for more than two classes.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        match *self {
            Kernel::Linear => a.dot(&b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }

    /// Gram matrix between the rows of `a` and the rows of `b`.
    pub fn matrix(&self, a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
        match *self {
            Kernel::Linear => a.dot(&b.t()),
            Kernel::Rbf { gamma } => {
                let na: Vec<f64> = a.rows().into_iter().map(|r| r.dot(&r)).collect();
                let nb: Vec<f64> = b.rows().into_iter().map(|r| r.dot(&r)).collect();
                let mut k = a.dot(&b.t());
                for ((i, j), v) in k.indexed_iter_mut() {
                    let d2 = (na[i] + nb[j] - 2.0 * *v).max(0.0);
                    *v = (-gamma * d2).exp();
                }
                k
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `Σ αᵢ yᵢ K(xᵢ, x) + bias`.
    pub bias: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    pub c: f64,
    pub tol: f64,
    /// Iteration budget in units of `n` pair updates.
    pub max_passes: usize,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: 10_000,
        }
    }
}

const TAU: f64 = 1e-12;

/// Solves `min ½ αᵀQα − eᵀα` s.t. `0 ≤ α ≤ C`, `yᵀα = 0`, with
/// `Q = diag(y) K diag(y)`. `kernel` is indexed through `idx`, so callers can
/// solve on a subset of a precomputed Gram matrix.
pub fn smo_solve(kernel: ArrayView2<f64>, idx: &[usize], y: &[f64], params: &SmoParams) -> Result<SmoSolution> {
    let n = y.len();
    assert_eq!(idx.len(), n);
    let c = params.c;
    let k = |a: usize, b: usize| kernel[[idx[a], idx[b]]];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
    let max_iter = params.max_passes.saturating_mul(n.max(1));
    let mut iter = 0;
    loop {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if low(alpha[t], y[t]) && v < g_min {
                g_min = v;
            }
        }
        if i == usize::MAX || g_max - g_min < params.tol {
            break;
        }
        if iter >= max_iter {
            return Err(Error::Convergence {
                iterations: iter,
                violation: g_max - g_min,
                tolerance: params.tol,
            });
        }
        iter += 1;
        // second-order choice of j among violators
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        let kii = k(i, i);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if low(alpha[t], y[t]) && v < g_max {
                let b = g_max - v;
                let a = (kii + k(t, t) - 2.0 * k(i, t)).max(TAU);
                let obj = -(b * b) / a;
                if obj < best {
                    best = obj;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            break;
        }
        let (yi, yj) = (y[i], y[j]);
        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let quad = (kii + k(j, j) - 2.0 * k(i, j)).max(TAU);
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai_old - aj_old;
            let (mut ai, mut aj) = (ai_old + delta, aj_old + delta);
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
            alpha[i] = ai;
            alpha[j] = aj;
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai_old + aj_old;
            let (mut ai, mut aj) = (ai_old - delta, aj_old + delta);
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
            alpha[i] = ai;
            alpha[j] = aj;
        }
        let (dai, daj) = (alpha[i] - ai_old, alpha[j] - aj_old);
        for t in 0..n {
            grad[t] += y[t] * (yi * k(i, t) * dai + yj * k(j, t) * daj);
        }
    }
    Ok(SmoSolution {
        bias: -rho(&alpha, &grad, y, c),
        alpha,
        iterations: iter,
    })
}

/// Offset from free vectors, or the midpoint of the feasible interval.
fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum += yg;
        }
    }
    if n_free > 0 {
        sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// One binary problem: `positive` vs `negative` class.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    pub positive: usize,
    pub negative: usize,
    /// Indices into the owning model's support-vector table.
    pub support: Vec<usize>,
    pub coef: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support_vectors: Array2<f64>,
    pub machines: Vec<BinarySvm>,
    pub n_classes: usize,
}

impl SvmModel {
    /// One-vs-one training over dense class indices `0..n_classes`.
    pub fn fit(x: ArrayView2<f64>, y: &[usize], n_classes: usize, kernel: Kernel, params: &SmoParams) -> Result<Self> {
        let gram = kernel.matrix(x, x);
        let mut used = vec![usize::MAX; x.nrows()];
        let mut sv_rows = Vec::new();
        let mut machines = Vec::new();
        for a in 0..n_classes {
            for b in a + 1..n_classes {
                let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == a || y[i] == b).collect();
                let yy: Vec<f64> = idx.iter().map(|&i| if y[i] == a { 1.0 } else { -1.0 }).collect();
                let sol = smo_solve(gram.view(), &idx, &yy, params)
                    .map_err(|e| e.context(format!("SVM pair ({a}, {b})")))?;
                let mut support = Vec::new();
                let mut coef = Vec::new();
                for (t, &i) in idx.iter().enumerate() {
                    if sol.alpha[t] > 0.0 {
                        if used[i] == usize::MAX {
                            used[i] = sv_rows.len();
                            sv_rows.push(i);
                        }
                        support.push(used[i]);
                        coef.push(sol.alpha[t] * yy[t]);
                    }
                }
                machines.push(BinarySvm {
                    positive: a,
                    negative: b,
                    support,
                    coef,
                    bias: sol.bias,
                });
            }
        }
        let support_vectors = x.select(ndarray::Axis(0), &sv_rows);
        Ok(Self {
            kernel,
            support_vectors,
            machines,
            n_classes,
        })
    }

    /// Decision values, one column per binary machine.
    pub fn decision_function(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let k = self.kernel.matrix(x, self.support_vectors.view());
        let mut out = Array2::zeros((x.nrows(), self.machines.len()));
        for (m, mach) in self.machines.iter().enumerate() {
            for r in 0..x.nrows() {
                let s: f64 = mach.support.iter().zip(&mach.coef).map(|(&sv, &c)| c * k[[r, sv]]).sum();
                out[[r, m]] = s + mach.bias;
            }
        }
        out
    }

    /// Majority vote; ties go to the lowest class index.
    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<usize> {
        let dec = self.decision_function(x);
        dec.rows()
            .into_iter()
            .map(|row| {
                let mut votes = vec![0usize; self.n_classes];
                for (m, mach) in self.machines.iter().enumerate() {
                    votes[if row[m] > 0.0 { mach.positive } else { mach.negative }] += 1;
                }
                super::argmax_first(votes.iter().map(|&v| v as f64))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn xor() -> (Array2<f64>, Vec<f64>) {
        (array![[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]], vec![1.0, 1.0, -1.0, -1.0])
    }

    #[test]
    fn xor_with_rbf() {
        let (x, y) = xor();
        let kern = Kernel::Rbf { gamma: 1.0 };
        let gram = kern.matrix(x.view(), x.view());
        let sol = smo_solve(gram.view(), &[0, 1, 2, 3], &y, &SmoParams::default()).unwrap();
        let s: f64 = sol.alpha.iter().zip(&y).map(|(a, y)| a * y).sum();
        assert!(s.abs() < 1e-8);
        for r in 0..4 {
            let f: f64 = (0..4).map(|t| sol.alpha[t] * y[t] * gram[[t, r]]).sum::<f64>() + sol.bias;
            assert!(f * y[r] > 0.0, "point {r}: {f}");
        }
    }

    #[test]
    fn xor_dual_matches_grid_search() {
        // Oracle: by symmetry α is constant within each class and the
        // equality constraint makes it one shared value a ∈ [0, C]; scan it.
        let (x, y) = xor();
        let kern = Kernel::Rbf { gamma: 1.0 };
        let gram = kern.matrix(x.view(), x.view());
        let dual = |alpha: &[f64]| {
            let mut q = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    q += alpha[i] * alpha[j] * y[i] * y[j] * gram[[i, j]];
                }
            }
            alpha.iter().sum::<f64>() - 0.5 * q
        };
        let best = (0..=1000)
            .map(|s| {
                let a = s as f64 / 1000.0;
                dual(&[a; 4])
            })
            .fold(f64::NEG_INFINITY, f64::max);
        let sol = smo_solve(gram.view(), &[0, 1, 2, 3], &y, &SmoParams::default()).unwrap();
        assert!((dual(&sol.alpha) - best).abs() < 1e-3);
    }

    #[test]
    fn two_points_bisector() {
        let x = array![[0.0, 0.0], [2.0, 4.0]];
        let y = [1.0, -1.0];
        let gram = Kernel::Linear.matrix(x.view(), x.view());
        let sol = smo_solve(gram.view(), &[0, 1], &y, &SmoParams { c: 100.0, ..Default::default() }).unwrap();
        let f = |p: [f64; 2]| {
            (0..2)
                .map(|t| sol.alpha[t] * y[t] * (x[[t, 0]] * p[0] + x[[t, 1]] * p[1]))
                .sum::<f64>()
                + sol.bias
        };
        assert!(f([1.0, 2.0]).abs() < 1e-3);
        assert!(f([0.9, 1.9]) > 0.0 && f([1.1, 2.1]) < 0.0);
    }

    #[test]
    fn label_flip_flips_decision() {
        let x = array![[0.0, 1.0], [1.0, 0.5], [3.0, 3.0], [4.0, 2.5], [0.5, 0.2]];
        let y = [1.0, 1.0, -1.0, -1.0, 1.0];
        let flipped: Vec<f64> = y.iter().map(|v| -v).collect();
        let gram = Kernel::Rbf { gamma: 0.5 }.matrix(x.view(), x.view());
        let idx = [0, 1, 2, 3, 4];
        let tight = SmoParams {
            tol: 1e-10,
            ..Default::default()
        };
        let a = smo_solve(gram.view(), &idx, &y, &tight).unwrap();
        let b = smo_solve(gram.view(), &idx, &flipped, &tight).unwrap();
        for r in 0..5 {
            let fa: f64 = (0..5).map(|t| a.alpha[t] * y[t] * gram[[t, r]]).sum::<f64>() + a.bias;
            let fb: f64 = (0..5).map(|t| b.alpha[t] * flipped[t] * gram[[t, r]]).sum::<f64>() + b.bias;
            assert!(fa * fb < 0.0);
            assert!((fa + fb).abs() < 1e-6);
        }
    }

    #[test]
    fn rbf_gram_matches_pointwise() {
        let x = array![[0.0, 1.0, 2.0], [1.0, -1.0, 0.5], [3.0, 0.0, 0.0]];
        let k = Kernel::Rbf { gamma: 0.3 };
        let m = k.matrix(x.view(), x.view());
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[[i, j]] - k.eval(x.row(i), x.row(j))).abs() < 1e-12);
            }
        }
    }
}
