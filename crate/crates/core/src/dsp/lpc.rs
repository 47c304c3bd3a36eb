//! Linear prediction by the autocorrelation method.
//!
//! Coefficients use the predictor convention `x[n] ≈ Σ a_k x[n-k]`,
//! `k = 1..=order`; the implicit leading 1 of the inverse filter is dropped.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpcConfig {
    pub order: usize,
}

impl Default for LpcConfig {
    fn default() -> Self {
        Self { order: 8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpcResult<T> {
    pub coeffs: Vec<T>,
    /// Final prediction error energy.
    pub error: T,
    /// Set when the chunk had no energy or the recursion hit a non-positive
    /// error; remaining coefficients are zero.
    pub degenerate: bool,
}

/// Biased autocorrelation `r[k] = Σ_n x[n] x[n+k]` for `k = 0..=max_lag`.
pub fn autocorrelation<T: Real>(x: &[T], max_lag: usize) -> Vec<T> {
    (0..=max_lag)
        .map(|k| {
            if k >= x.len() {
                return T::zero();
            }
            x.iter()
                .zip(&x[k..])
                .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
        })
        .collect()
}

/// Levinson-Durbin recursion on autocorrelation lags `r[0..=order]`.
pub fn levinson_durbin<T: Real>(r: &[T], order: usize) -> LpcResult<T> {
    assert!(r.len() > order, "need order + 1 autocorrelation lags");
    let mut a = vec![T::zero(); order];
    if !(r[0] > T::zero()) || !r[0].is_finite() {
        return LpcResult {
            coeffs: a,
            error: T::zero(),
            degenerate: true,
        };
    }
    let tiny = r[0] * T::epsilon();
    let mut err = r[0];
    let mut prev = vec![T::zero(); order];
    for i in 0..order {
        let mut acc = r[i + 1];
        for j in 0..i {
            acc = acc - a[j] * r[i - j];
        }
        let k = acc / err;
        prev[..i].copy_from_slice(&a[..i]);
        a[i] = k;
        for j in 0..i {
            a[j] = prev[j] - k * prev[i - 1 - j];
        }
        err = err * (T::one() - k * k);
        if !(err > tiny) || !err.is_finite() {
            for v in &mut a[i + 1..] {
                *v = T::zero();
            }
            return LpcResult {
                coeffs: a,
                error: err.max(T::zero()),
                degenerate: true,
            };
        }
    }
    LpcResult {
        coeffs: a,
        error: err,
        degenerate: false,
    }
}

pub fn lpc<T: Real>(chunk: &[T], cfg: &LpcConfig) -> Result<LpcResult<T>> {
    if cfg.order == 0 {
        return Err(Error::Config("LPC order must be at least 1".into()));
    }
    if chunk.len() <= cfg.order {
        return Err(Error::Geometry(format!(
            "LPC of order {} needs more than {} samples, got {}",
            cfg.order,
            cfg.order,
            chunk.len()
        )));
    }
    if chunk.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite sample in LPC input".into()));
    }
    let r = autocorrelation(chunk, cfg.order);
    Ok(levinson_durbin(&r, cfg.order))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_chunk_is_degenerate() {
        let res = lpc(&[0.0f64; 441], &LpcConfig::default()).unwrap();
        assert_eq!(res.coeffs, vec![0.0; 8]);
        assert!(res.degenerate);
    }

    #[test]
    fn too_short_is_geometry_error() {
        assert!(matches!(lpc(&[1.0f64; 8], &LpcConfig::default()), Err(Error::Geometry(_))));
    }

    #[test]
    fn first_order_matches_closed_form() {
        let x: Vec<f64> = (0..200).map(|i| 0.9f64.powi(i)).collect();
        let r = autocorrelation(&x, 1);
        let res = lpc(&x, &LpcConfig { order: 1 }).unwrap();
        assert!((res.coeffs[0] - r[1] / r[0]).abs() < 1e-14);
    }

    #[test]
    fn gain_invariant() {
        let x: Vec<f64> = (0..441).map(|i| ((i * 7919) % 113) as f64 / 113.0 - 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 3.7).collect();
        let a = lpc(&x, &LpcConfig::default()).unwrap();
        let b = lpc(&y, &LpcConfig::default()).unwrap();
        for (p, q) in a.coeffs.iter().zip(&b.coeffs) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn generic_over_f32() {
        let x: Vec<f32> = (0..110).map(|i| (i as f32 * 0.3).sin()).collect();
        let res = lpc(&x, &LpcConfig::default()).unwrap();
        assert_eq!(res.coeffs.len(), 8);
        assert!(res.coeffs.iter().all(|c| c.is_finite()));
    }
}
