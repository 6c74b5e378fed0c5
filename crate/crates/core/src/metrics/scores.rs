use nalgebra::DMatrix;

use crate::error::{invalid, QrcError, Result};
use crate::operator::{fidelity, DensityMatrix};

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(QrcError::DimensionMismatch { expected: a, found: b });
    }
    if a == 0 {
        return Err(QrcError::InsufficientData("empty sequence".into()));
    }
    Ok(())
}

fn fidelities(targets: &[DensityMatrix], predictions: &[DensityMatrix]) -> Result<Vec<f64>> {
    same_len(targets.len(), predictions.len())?;
    targets.iter().zip(predictions).map(|(t, p)| fidelity(t, p)).collect()
}

/// `√(mean F²)`.
pub fn rmsf(targets: &[DensityMatrix], predictions: &[DensityMatrix]) -> Result<f64> {
    let f = fidelities(targets, predictions)?;
    Ok((f.iter().map(|x| x * x).sum::<f64>() / f.len() as f64).sqrt())
}

/// `√(mean (1 − F)²)`.
pub fn fidelity_error(targets: &[DensityMatrix], predictions: &[DensityMatrix]) -> Result<f64> {
    let f = fidelities(targets, predictions)?;
    Ok((f.iter().map(|x| (1.0 - x).powi(2)).sum::<f64>() / f.len() as f64).sqrt())
}

/// Fraction of mismatched symbols.
pub fn ser(truth: &[i32], predicted: &[i32]) -> Result<f64> {
    same_len(truth.len(), predicted.len())?;
    let wrong = truth.iter().zip(predicted).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / truth.len() as f64)
}

/// `Σ(W_t − W_p)² / Σ(W_t + W_p)²` for one pair of grids; 0 when both vanish.
pub fn ew_term(target: &DMatrix<f64>, predicted: &DMatrix<f64>) -> Result<f64> {
    if target.shape() != predicted.shape() {
        return Err(invalid("grid", format!("shapes {:?} and {:?} differ", target.shape(), predicted.shape())));
    }
    let num = (target - predicted).norm_squared();
    let den = (target + predicted).norm_squared();
    Ok(if den == 0.0 { 0.0 } else { num / den })
}

/// `√(mean_l ew_term)`.
pub fn ew_error(targets: &[DMatrix<f64>], predicted: &[DMatrix<f64>]) -> Result<f64> {
    same_len(targets.len(), predicted.len())?;
    let mut acc = 0.0;
    for (t, p) in targets.iter().zip(predicted) {
        acc += ew_term(t, p)?;
    }
    Ok((acc / targets.len() as f64).sqrt())
}

/// Running root mean of per-step terms: entry `t - 1` is `√(mean of the first t)`.
pub fn running_root_mean(terms: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    terms
        .iter()
        .enumerate()
        .map(|(i, x)| {
            acc += x;
            (acc / (i + 1) as f64).sqrt()
        })
        .collect()
}

/// `NRMSE(t)` for `t = 1..n`, normalized by `variance`.
pub fn nrmse_curve(truth: &[f64], predicted: &[f64], variance: f64) -> Result<Vec<f64>> {
    same_len(truth.len(), predicted.len())?;
    if !(variance > 0.0) {
        return Err(invalid("variance", "must be positive"));
    }
    let terms: Vec<f64> = truth
        .iter()
        .zip(predicted)
        .map(|(a, b)| (a - b).powi(2) / variance)
        .collect();
    Ok(running_root_mean(&terms))
}

/// `EW(t)` for `t = 1..n`.
pub fn ew_curve(targets: &[DMatrix<f64>], predicted: &[DMatrix<f64>]) -> Result<Vec<f64>> {
    same_len(targets.len(), predicted.len())?;
    let terms = targets
        .iter()
        .zip(predicted)
        .map(|(t, p)| ew_term(t, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(running_root_mean(&terms))
}

/// Longest horizon `T` with `errors[t-1] ≤ ε` for all `t ≤ T`.
pub fn vpt(errors: &[f64], epsilon: f64) -> usize {
    errors.iter().take_while(|&&e| e <= epsilon).count()
}

/// Population variance.
pub fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::basis_state;

    #[test]
    fn rmsf_examples() {
        let a = basis_state(2, 0).unwrap();
        let b = basis_state(2, 1).unwrap();
        assert!((rmsf(&[a.clone()], &[a.clone()]).unwrap() - 1.0).abs() < 1e-12);
        assert!(rmsf(&[a.clone()], &[b.clone()]).unwrap() < 1e-12);
        let r = rmsf(&[a.clone(), a.clone()], &[a.clone(), b.clone()]).unwrap();
        assert!((r - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((fidelity_error(&[a.clone()], &[b]).unwrap() - 1.0).abs() < 1e-12);
        assert!(rmsf(&[a.clone()], &[]).is_err());
    }

    #[test]
    fn ser_examples() {
        assert_eq!(ser(&[1, 3], &[1, 3]).unwrap(), 0.0);
        assert_eq!(ser(&[1, 3], &[-1, -3]).unwrap(), 1.0);
        assert_eq!(ser(&[1, 3, -1, -3], &[1, 3, -1, 1]).unwrap(), 0.25);
    }

    #[test]
    fn ew_examples() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let z = DMatrix::zeros(2, 2);
        assert_eq!(ew_error(&[a.clone()], &[a.clone()]).unwrap(), 0.0);
        assert!((ew_error(&[a.clone()], &[b]).unwrap() - 1.0).abs() < 1e-15);
        assert!((ew_error(&[a.clone()], &[z]).unwrap() - 1.0).abs() < 1e-15);
        assert!(ew_term(&a, &DMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn vpt_examples() {
        assert_eq!(vpt(&[0.1, 0.2, 0.6, 0.2], 0.5), 2);
        assert_eq!(vpt(&[0.9, 0.1], 0.5), 0);
        assert_eq!(vpt(&[0.1, 0.1], 0.5), 2);
    }

    #[test]
    fn nrmse_curve_hand_values() {
        let c = nrmse_curve(&[1.0, 2.0], &[1.0, 0.0], 2.0).unwrap();
        assert_eq!(c[0], 0.0);
        assert!((c[1] - 1.0).abs() < 1e-15);
    }
}
