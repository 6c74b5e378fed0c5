use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{invalid, Result};

pub const SYMBOLS: [i32; 4] = [-3, -1, 1, 3];

/// Taps of the linear channel for `s_{l+2}, s_{l+1}, ..., s_{l-7}`.
const TAPS: [f64; 10] = [0.08, -0.12, 1.0, 0.18, -0.1, 0.09, -0.05, 0.04, 0.03, 0.01];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EqualizerData {
    pub symbols: Vec<i32>,
    /// Linear channel output `q_l`.
    pub q: Vec<f64>,
    /// Distorted, noisy channel output `u_l`.
    pub u: Vec<f64>,
}

/// Linear channel; symbols outside the sequence count as 0.
pub fn linear_channel(symbols: &[i32]) -> Vec<f64> {
    let n = symbols.len() as isize;
    (0..n)
        .map(|l| {
            TAPS.iter()
                .enumerate()
                .filter_map(|(t, &c)| {
                    let idx = l + 2 - t as isize;
                    (0..n).contains(&idx).then(|| c * symbols[idx as usize] as f64)
                })
                .sum()
        })
        .collect()
}

pub fn nonlinear_channel(q: f64) -> f64 {
    q + 0.036 * q * q - 0.011 * q * q * q
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
}

/// Random symbols pushed through both channels with Gaussian noise at
/// `snr_db` relative to the empirical variance of `q`.
pub fn gen_equalizer_data(length: usize, seed: u64, snr_db: f64) -> Result<EqualizerData> {
    if length < TAPS.len() {
        return Err(invalid("length", format!("{length} shorter than the filter support")));
    }
    if !snr_db.is_finite() {
        return Err(invalid("snr_db", "must be finite"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols: Vec<i32> = (0..length).map(|_| SYMBOLS[rng.gen_range(0..4)]).collect();
    let q = linear_channel(&symbols);
    let sigma = (variance(&q) / 10f64.powf(snr_db / 10.0)).sqrt();
    let noise = Normal::new(0.0, sigma).map_err(|e| invalid("snr_db", e.to_string()))?;
    let u = q.iter().map(|&ql| nonlinear_channel(ql) + noise.sample(&mut rng)).collect();
    Ok(EqualizerData { symbols, q, u })
}

/// Nearest symbol; ties go to the smaller symbol.
pub fn quantize_symbol(x: f64) -> i32 {
    let mut best = SYMBOLS[0];
    for &s in &SYMBOLS[1..] {
        if (x - s as f64).abs() < (x - best as f64).abs() {
            best = s;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_ones_noiseless() {
        let q = linear_channel(&[1; 20]);
        // interior point sees every tap
        assert!((q[10] - 1.16).abs() < 1e-12);
        assert!((nonlinear_channel(q[10]) - 1.19127).abs() < 1e-5);
    }

    #[test]
    fn zero_symbols_leave_noise_only() {
        let q = linear_channel(&[0; 15]);
        assert!(q.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_impulse_reproduces_taps() {
        let mut s = vec![0; 20];
        s[9] = 1;
        let q = linear_channel(&s);
        for (t, &c) in TAPS.iter().enumerate() {
            assert_eq!(q[9 + t - 2], c);
        }
    }

    #[test]
    fn quantizer_ties() {
        assert_eq!(quantize_symbol(0.0), -1);
        assert_eq!(quantize_symbol(2.0), 1);
        assert_eq!(quantize_symbol(-7.0), -3);
        assert_eq!(quantize_symbol(2.2), 3);
    }

    #[test]
    fn deterministic_and_rejects_short() {
        let a = gen_equalizer_data(50, 3, 24.0).unwrap();
        assert_eq!(a, gen_equalizer_data(50, 3, 24.0).unwrap());
        assert!(gen_equalizer_data(5, 3, 24.0).is_err());
    }
}
