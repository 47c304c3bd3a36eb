use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Per-column standardization fitted on training rows only.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaler {
    pub mean: Array1<f64>,
    /// Population standard deviation; zero marks a constant column.
    pub std: Array1<f64>,
}

impl Scaler {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::Data("cannot fit a scaler on zero rows".into()));
        }
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let mut std = x.std_axis(Axis(0), 0.0);
        // a constant column can leave rounding-level spread behind
        for (s, m) in std.iter_mut().zip(&mean) {
            if *s <= 1e-12 * m.abs().max(1.0) {
                *s = 0.0;
            }
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::Geometry(format!(
                "scaler fitted on {} columns, got {}",
                self.mean.len(),
                x.ncols()
            )));
        }
        let mut out = x.to_owned();
        for (mut col, (&m, &s)) in out.columns_mut().into_iter().zip(self.mean.iter().zip(&self.std)) {
            if s == 0.0 {
                col.fill(0.0);
            } else {
                col.mapv_inplace(|v| (v - m) / s);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, s};

    #[test]
    fn constant_column_becomes_zero() {
        let x = array![[0.1, 1.0], [0.1, 2.0], [0.1, 4.0]];
        let sc = Scaler::fit(x.view()).unwrap();
        let t = sc.apply(x.view()).unwrap();
        assert!(t.column(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn train_columns_standardized() {
        let x = Array2::from_shape_fn((50, 3), |(i, j)| ((i * 37 + j * 11) % 17) as f64 * (j + 1) as f64 - 3.0);
        let t = Scaler::fit(x.view()).unwrap().apply(x.view()).unwrap();
        for c in t.columns() {
            assert!(c.mean().unwrap().abs() < 1e-9);
            assert!((c.std(0.0) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn test_rows_use_train_statistics() {
        let train = Array2::from_shape_fn((40, 1), |(i, _)| (i as f64 * 0.7).sin() * 3.0 + 2.0);
        let sc = Scaler::fit(train.view()).unwrap();
        let shifted = &train + sc.std[0];
        let t = sc.apply(shifted.view()).unwrap();
        assert!((t.column(0).mean().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fitting_ignores_test_rows() {
        let x = Array2::from_shape_fn((30, 2), |(i, j)| (i * (j + 2)) as f64);
        let train = x.slice(s![..20, ..]);
        let before = Scaler::fit(train).unwrap();
        let mut mutated = x.clone();
        mutated.slice_mut(s![20.., ..]).fill(1e6);
        assert_eq!(Scaler::fit(mutated.slice(s![..20, ..])).unwrap(), before);
    }
}
