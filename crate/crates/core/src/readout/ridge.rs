use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::FeatureMatrix;
use crate::error::{invalid, QrcError, Result};

/// Linear readout `y = [x, 1] W_out`; the bias is the last row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReadoutWeights {
    pub w_out: DMatrix<f64>,
    pub eta: f64,
}

impl ReadoutWeights {
    pub fn output_dim(&self) -> usize {
        self.w_out.ncols()
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<DMatrix<f64>> {
        if x.ncols() != self.w_out.nrows() {
            return Err(QrcError::DimensionMismatch {
                expected: self.w_out.nrows(),
                found: x.ncols(),
            });
        }
        Ok(x.matrix() * &self.w_out)
    }

    /// Prediction for one raw feature row (bias not included).
    pub fn predict_row(&self, features: &[f64]) -> Result<DVector<f64>> {
        let k = self.w_out.nrows() - 1;
        if features.len() != k {
            return Err(QrcError::DimensionMismatch {
                expected: k,
                found: features.len(),
            });
        }
        let mut y = self.w_out.row(k).transpose();
        for (i, &f) in features.iter().enumerate() {
            y.axpy(f, &self.w_out.row(i).transpose(), 1.0);
        }
        Ok(y)
    }
}

/// `1e-6 · tr(XᵀX) / K`.
pub fn default_eta(x: &FeatureMatrix) -> f64 {
    1e-6 * x.matrix().norm_squared() / x.ncols() as f64
}

/// Minimizer of `‖X w − Y‖² + η ‖w‖²` via the SVD of `X`.
pub fn ridge_fit(x: &FeatureMatrix, y: &DMatrix<f64>, eta: f64) -> Result<ReadoutWeights> {
    if x.nrows() != y.nrows() {
        return Err(QrcError::DimensionMismatch {
            expected: x.nrows(),
            found: y.nrows(),
        });
    }
    if !(eta >= 0.0) || !eta.is_finite() {
        return Err(invalid("eta", format!("{eta} must be finite and >= 0")));
    }
    if y.iter().any(|v| !v.is_finite()) || x.matrix().iter().any(|v| !v.is_finite()) {
        return Err(invalid("targets", "non-finite entries"));
    }
    let svd = x.matrix().clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let s = &svd.singular_values;
    let s_max = s.max();
    let k = x.ncols();
    if eta == 0.0 {
        let cutoff = s_max * f64::EPSILON * x.nrows().max(k) as f64;
        if s.len() < k || s.iter().any(|&v| v <= cutoff) {
            return Err(QrcError::SingularSystem);
        }
    }
    let filter = DVector::from_iterator(s.len(), s.iter().map(|&v| if v > 0.0 { v / (v * v + eta) } else { 0.0 }));
    let uty = u.transpose() * y;
    let scaled = DMatrix::from_fn(uty.nrows(), uty.ncols(), |i, j| filter[i] * uty[(i, j)]);
    let w_out = vt.transpose() * scaled;
    if w_out.iter().any(|v| !v.is_finite()) {
        return Err(QrcError::SingularSystem);
    }
    Ok(ReadoutWeights { w_out, eta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(rows: usize, cols: usize, seed: u64) -> FeatureMatrix {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data: Vec<Vec<f64>> = (0..rows).map(|_| (0..cols).map(|_| next()).collect()).collect();
        FeatureMatrix::from_rows(&data).unwrap()
    }

    #[test]
    fn square_system_interpolates() {
        let x = features(6, 5, 1);
        let y = DMatrix::from_fn(6, 2, |i, j| (i + 2 * j) as f64);
        let w = ridge_fit(&x, &y, 0.0).unwrap();
        let pred = w.predict(&x).unwrap();
        assert!((pred - y).abs().max() < 1e-10);
    }

    #[test]
    fn singular_without_regularization() {
        let rows = vec![vec![1.0, 2.0]; 4];
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let y = DMatrix::from_element(4, 1, 1.0);
        assert!(matches!(ridge_fit(&x, &y, 0.0), Err(QrcError::SingularSystem)));
        assert!(ridge_fit(&x, &y, 1e-3).is_ok());
    }

    #[test]
    fn strong_shrinkage() {
        let x = features(30, 4, 2);
        let y = DMatrix::from_fn(30, 1, |i, _| i as f64);
        let w = ridge_fit(&x, &y, 1e9).unwrap();
        assert!(w.w_out.norm() < 1e-5);
    }

    #[test]
    fn predict_row_matches_matrix() {
        let x = features(10, 3, 3);
        let y = DMatrix::from_fn(10, 2, |i, j| (i * j) as f64);
        let w = ridge_fit(&x, &y, 1e-4).unwrap();
        let full = w.predict(&x).unwrap();
        let raw: Vec<f64> = (0..3).map(|j| x.matrix()[(4, j)]).collect();
        let row = w.predict_row(&raw).unwrap();
        assert!((row - full.row(4).transpose()).abs().max() < 1e-12);
        assert!(w.predict_row(&raw[..2]).is_err());
    }
}
