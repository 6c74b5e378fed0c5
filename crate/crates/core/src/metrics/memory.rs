use nalgebra::DMatrix;
use serde::Serialize;

use crate::dynamics::FeatureMatrix;
use crate::error::{invalid, QrcError, Result};
use crate::operator::fidelity_raw;
use crate::operator::{DensityMatrix, HilbertSpace};
use crate::readout::{default_eta, reconstruct_density, ridge_fit, vectorize_density};

/// Fraction of post-washout samples used for training.
pub const TRAIN_FRACTION: f64 = 0.8;

/// Distance variances below this count as degenerate.
pub const DEGENERATE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MemoryProfile {
    /// `values[d]` for `d = 0..=d_max`.
    pub values: Vec<f64>,
    pub d_max: usize,
    pub capacity: f64,
}

impl MemoryProfile {
    pub fn new(values: Vec<f64>) -> Self {
        let capacity = values.iter().sum();
        Self {
            d_max: values.len().saturating_sub(1),
            values,
            capacity,
        }
    }
}

/// Double-centered distance matrix `r_jk = R_jk − R̄_j. − R̄_.k + R̄_..`.
pub fn double_center(r: &DMatrix<f64>) -> DMatrix<f64> {
    let n = r.nrows();
    let rows: Vec<f64> = (0..n).map(|j| r.row(j).sum() / n as f64).collect();
    let cols: Vec<f64> = (0..n).map(|k| r.column(k).sum() / n as f64).collect();
    let all = r.sum() / (n * n) as f64;
    DMatrix::from_fn(n, n, |j, k| r[(j, k)] - rows[j] - cols[k] + all)
}

/// `V²` of two distance matrices.
pub fn distance_covariance_sq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let n = a.nrows() as f64;
    double_center(a).component_mul(&double_center(b)).sum() / (n * n)
}

/// `V²(X, Y) / √(V²(X, X) V²(Y, Y))`; 0 for degenerate sequences.
pub fn distance_correlation_sq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(QrcError::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    let vxx = distance_covariance_sq(a, a);
    let vyy = distance_covariance_sq(b, b);
    if vxx < DEGENERATE_TOL || vyy < DEGENERATE_TOL {
        return Ok(0.0);
    }
    Ok((distance_covariance_sq(a, b) / (vxx * vyy).sqrt()).clamp(0.0, 1.0))
}

/// Pairwise Bures angles.
pub fn bures_distance_matrix(states: &[DensityMatrix]) -> DMatrix<f64> {
    let n = states.len();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in (j + 1)..n {
            let d = fidelity_raw(states[j].matrix(), states[k].matrix()).acos();
            m[(j, k)] = d;
            m[(k, j)] = d;
        }
    }
    m
}

/// Squared distance correlation between two state sequences under the Bures angle.
pub fn state_distance_correlation(x: &[DensityMatrix], y: &[DensityMatrix]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(QrcError::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    distance_correlation_sq(&bures_distance_matrix(x), &bures_distance_matrix(y))
}

fn split_rows(samples: usize) -> Result<(usize, usize)> {
    let train = (samples as f64 * TRAIN_FRACTION).round() as usize;
    if train < 2 || samples - train < 2 {
        return Err(QrcError::InsufficientData(format!("{samples} samples after washout")));
    }
    Ok((train, samples - train))
}

fn squared_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa < DEGENERATE_TOL || sbb < DEGENERATE_TOL {
        return 0.0;
    }
    (sab * sab / (saa * sbb)).clamp(0.0, 1.0)
}

/// `C²(d)` between `u_{l−d}` and its ridge reconstruction for `d = 0..=d_max`.
/// Rows before `d_max` are skipped so every delay uses the same samples.
pub fn memory_capacity_classical(features: &FeatureMatrix, u: &[f64], d_max: usize) -> Result<MemoryProfile> {
    if features.nrows() != u.len() {
        return Err(QrcError::DimensionMismatch {
            expected: u.len(),
            found: features.nrows(),
        });
    }
    let samples = u.len().checked_sub(d_max).ok_or_else(|| invalid("d_max", "exceeds sequence length"))?;
    let (train, eval) = split_rows(samples)?;
    let x_train = features.rows(d_max, train);
    let x_eval = features.rows(d_max + train, eval);
    let eta = default_eta(&x_train);
    let mut values = Vec::with_capacity(d_max + 1);
    for d in 0..=d_max {
        let target = |start: usize, len: usize| DMatrix::from_fn(len, 1, |i, _| u[d_max + start + i - d]);
        let w = ridge_fit(&x_train, &target(0, train), eta)?;
        let pred = w.predict(&x_eval)?;
        let truth = target(train, eval);
        values.push(squared_correlation(pred.as_slice(), truth.as_slice()));
    }
    Ok(MemoryProfile::new(values))
}

/// `R²(d)` between ridge-reconstructed states and `β_{l−d}`.
pub fn quantum_memory_capacity(features: &FeatureMatrix, inputs: &[DensityMatrix], d_max: usize) -> Result<MemoryProfile> {
    if features.nrows() != inputs.len() {
        return Err(QrcError::DimensionMismatch {
            expected: inputs.len(),
            found: features.nrows(),
        });
    }
    let space: HilbertSpace = inputs
        .first()
        .ok_or_else(|| QrcError::InsufficientData("no inputs".into()))?
        .space()
        .clone();
    let samples = inputs.len().checked_sub(d_max).ok_or_else(|| invalid("d_max", "exceeds sequence length"))?;
    let (train, eval) = split_rows(samples)?;
    let x_train = features.rows(d_max, train);
    let x_eval = features.rows(d_max + train, eval);
    let eta = default_eta(&x_train);
    let vecs: Vec<Vec<f64>> = inputs.iter().map(|b| vectorize_density(b.matrix())).collect();
    let width = vecs[0].len();
    let mut values = Vec::with_capacity(d_max + 1);
    for d in 0..=d_max {
        let y = DMatrix::from_fn(train, width, |i, j| vecs[d_max + i - d][j]);
        let w = ridge_fit(&x_train, &y, eta)?;
        let pred = w.predict(&x_eval)?;
        let outputs = (0..eval)
            .map(|i| reconstruct_density(&pred.row(i).iter().copied().collect::<Vec<_>>(), &space))
            .collect::<Result<Vec<_>>>()?;
        let targets = &inputs[d_max + train - d..d_max + train + eval - d];
        values.push(state_distance_correlation(&outputs, targets)?);
    }
    Ok(MemoryProfile::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_sum() {
        let p = MemoryProfile::new(vec![1.0, 0.5, 0.25]);
        assert_eq!(p.capacity, 1.75);
        assert_eq!(p.d_max, 2);
    }

    #[test]
    fn identical_sequences_correlate_fully() {
        let a = DMatrix::from_fn(5, 5, |i, j| (i as f64 - j as f64).abs());
        assert!((distance_correlation_sq(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(distance_correlation_sq(&a, &DMatrix::zeros(5, 5)).unwrap(), 0.0);
    }
}
