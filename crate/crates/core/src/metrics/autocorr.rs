use serde::Serialize;

use crate::error::{QrcError, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Autocorrelation {
    /// Site-averaged autocovariance at lags `0..len/2`.
    pub curve: Vec<f64>,
    /// First zero crossing, in units of the sample spacing `dt`.
    pub crossing: f64,
    /// `false` when the curve never reaches zero; `crossing` is then the
    /// largest lag examined.
    pub crossed: bool,
}

/// Mean-removed autocovariance averaged over sites, with the first zero
/// crossing located by linear interpolation.
pub fn autocorrelation_timescale(traces: &[Vec<f64>], dt: f64) -> Result<Autocorrelation> {
    let t = traces.first().map(Vec::len).unwrap_or(0);
    if t < 4 || traces.iter().any(|x| x.len() != t) {
        return Err(QrcError::InsufficientData("traces need equal lengths of at least 4".into()));
    }
    let max_lag = t / 2;
    let mut curve = vec![0.0; max_lag];
    for x in traces {
        let mean = x.iter().sum::<f64>() / t as f64;
        let c: Vec<f64> = x.iter().map(|v| v - mean).collect();
        for (k, out) in curve.iter_mut().enumerate() {
            let s: f64 = c[..t - k].iter().zip(&c[k..]).map(|(a, b)| a * b).sum();
            *out += s / (t - k) as f64;
        }
    }
    let sites = traces.len() as f64;
    curve.iter_mut().for_each(|v| *v /= sites);
    let hit = (1..max_lag).find(|&k| curve[k] <= 0.0);
    let (crossing, crossed) = match hit {
        Some(k) => {
            let (a, b) = (curve[k - 1], curve[k]);
            let frac = if a == b { 0.0 } else { a / (a - b) };
            (((k - 1) as f64 + frac) * dt, true)
        }
        None => ((max_lag - 1) as f64 * dt, false),
    };
    Ok(Autocorrelation { curve, crossing, crossed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_lag_is_variance() {
        let x = vec![vec![1.0, 3.0, 1.0, 3.0, 1.0, 3.0], vec![0.0, 2.0, 0.0, 2.0, 0.0, 2.0]];
        let a = autocorrelation_timescale(&x, 1.0).unwrap();
        assert!((a.curve[0] - 1.0).abs() < 1e-15);
        assert!(autocorrelation_timescale(&[vec![1.0, 2.0]], 1.0).is_err());
    }

    #[test]
    fn sinusoid_quarter_period() {
        let period = 40.0;
        let x: Vec<f64> = (0..4000)
            .map(|i| (2.0 * std::f64::consts::PI * i as f64 / period).sin())
            .collect();
        let a = autocorrelation_timescale(&[x], 1.0).unwrap();
        assert!(a.crossed);
        assert!((a.crossing - period / 4.0).abs() <= 1.0, "{}", a.crossing);
    }
}
