use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::channels::{depolarizing_channel, quantum_switch};
use super::equalizer::gen_equalizer_data;
use crate::error::{invalid, Result};
use crate::operator::linalg::{hermitize, C64};

use crate::operator::{
    partial_trace, random_state_with, squeeze_operator, thermal_state, CMatrix, DensityMatrix, HilbertSpace,
    StateKind,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Delays {
    pub d: usize,
    pub d_c: usize,
    pub d_q: usize,
}

/// Targets for steps `offset..offset + len`. Unused lists stay empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Targets {
    pub states: Vec<DensityMatrix>,
    pub symbols: Vec<i32>,
    pub scalars: Vec<f64>,
}

impl Targets {
    pub fn len(&self) -> usize {
        self.states.len().max(self.symbols.len()).max(self.scalars.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Hybrid classical/quantum input sequence with aligned targets.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridSequence {
    pub u: Vec<f64>,
    pub beta: Vec<DensityMatrix>,
    /// Underlying classical control `s_l` (equals `u` unless distorted).
    pub s: Vec<f64>,
    pub targets: Targets,
    /// Step index of the first target.
    pub offset: usize,
    pub delays: Delays,
}

impl HybridSequence {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.beta.is_empty() && self.beta.len() != self.u.len() {
            return Err(invalid("beta", "must match the classical input length"));
        }
        let n = self.targets.len();
        for (name, len) in [
            ("states", self.targets.states.len()),
            ("symbols", self.targets.symbols.len()),
            ("scalars", self.targets.scalars.len()),
        ] {
            if len != 0 && len != n {
                return Err(invalid(name, "target lists have different lengths"));
            }
        }
        if self.offset + n > self.u.len() {
            return Err(invalid("targets", "extend past the input sequence"));
        }
        Ok(())
    }

    /// Keeps the first `len` steps; targets are cut to match.
    pub fn truncate(&mut self, len: usize) {
        self.u.truncate(len);
        self.beta.truncate(len);
        self.s.truncate(len);
        let keep = len.saturating_sub(self.offset);
        self.targets.states.truncate(keep);
        self.targets.symbols.truncate(keep);
        self.targets.scalars.truncate(keep);
    }
}

/// Which part of the switch output is reconstructed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchTarget {
    /// Joint system ⊗ control state.
    #[default]
    Joint,
    /// System marginal.
    System,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchTask {
    pub length: usize,
    pub q_a: f64,
    pub q_b: f64,
    pub delay: usize,
    pub snr_db: f64,
    pub target: SwitchTarget,
}

impl Default for SwitchTask {
    fn default() -> Self {
        Self {
            length: 1000,
            q_a: 0.5,
            q_b: 0.5,
            delay: 1,
            snr_db: 24.0,
            target: SwitchTarget::Joint,
        }
    }
}

impl SwitchTask {
    /// Random qubit inputs, equalizer symbols driving the switch state, and
    /// delayed switch outputs with the delayed symbols as targets.
    pub fn generate(&self, seed: u64) -> Result<HybridSequence> {
        let d = self.delay;
        if self.length <= d + 7 {
            return Err(invalid("length", format!("{} too short for delay {d}", self.length)));
        }
        let eq = gen_equalizer_data(self.length, seed, self.snr_db)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5157_4348);
        let beta = (0..self.length)
            .map(|_| random_state_with(2, &mut rng, StateKind::Pure))
            .collect::<Result<Vec<_>>>()?;
        let ch_a = depolarizing_channel(self.q_a, 2)?;
        let ch_b = depolarizing_channel(self.q_b, 2)?;
        let offset = d.max(2);
        let mut targets = Targets::default();
        for l in offset..self.length {
            let s = eq.symbols[l - d];
            let joint = quantum_switch(&beta[l - d], switch_weight(s), &ch_a, &ch_b)?;
            let state = match self.target {
                SwitchTarget::Joint => joint,
                SwitchTarget::System => partial_trace(&joint, &[0])?,
            };
            targets.states.push(state);
            targets.symbols.push(s);
        }
        Ok(HybridSequence {
            u: eq.u,
            beta,
            s: eq.symbols.iter().map(|&v| v as f64).collect(),
            targets,
            offset,
            delays: Delays { d, d_c: d, d_q: d },
        })
    }
}

/// Switch weight `(3 + s)/6` for a symbol in `{-3, -1, 1, 3}`.
pub fn switch_weight(symbol: i32) -> f64 {
    (3.0 + symbol as f64) / 6.0
}

pub fn switch_task_sequence(length: usize, seed: u64, q_a: f64, q_b: f64, d: usize) -> Result<HybridSequence> {
    SwitchTask {
        length,
        q_a,
        q_b,
        delay: d,
        ..Default::default()
    }
    .generate(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// `ξ = s e^{iπ/4}`.
    Amp,
    /// `ξ = 0.3 e^{i2πs}`.
    Phase,
}

pub fn squeeze_parameter(s: f64, encoding: Encoding) -> C64 {
    use std::f64::consts::PI;
    match encoding {
        Encoding::Amp => C64::from_polar(s, PI / 4.0),
        Encoding::Phase => C64::from_polar(0.3, 2.0 * PI * s),
    }
}

// Extra Fock levels used while squeezing so the truncated result is not
// distorted by the ladder edge.
fn padded_cutoff(dim: usize) -> usize {
    2 * dim + 20
}

/// `S ρ S†` computed on a padded ladder, then truncated back to `dim(ρ)` and
/// renormalized.
pub fn squeeze_state(rho: &DensityMatrix, xi: C64) -> Result<DensityMatrix> {
    if rho.space().num_modes() != 1 {
        return Err(invalid("beta", "single-mode state required"));
    }
    let d = rho.dim();
    let big = padded_cutoff(d);
    let padded = rho.embed(&HilbertSpace::single(big)?)?;
    let s = squeeze_operator(xi, big)?;
    let out = s.conjugate(padded.matrix());
    let cut = CMatrix::from_fn(d, d, |i, j| out[(i, j)]);
    DensityMatrix::from_hermitian(rho.space().clone(), hermitize(&cut))
}

pub fn cv_target(beta: &DensityMatrix, s: f64, encoding: Encoding) -> Result<DensityMatrix> {
    squeeze_state(beta, squeeze_parameter(s, encoding))
}

/// `0.5 + 0.5 sin(l π f / 510)`.
pub fn control_signal(l: usize, f: f64) -> f64 {
    0.5 + 0.5 * (l as f64 * std::f64::consts::PI * f / 510.0).sin()
}

/// `s_{l−d_c} I/D + (1 − s_{l−d_c}) β_{l−d_q}` for `l ≥ max(d_c, d_q)`.
pub fn depolarizing_target(
    s_seq: &[f64],
    beta_seq: &[DensityMatrix],
    dim: usize,
    d_c: usize,
    d_q: usize,
) -> Result<Vec<DensityMatrix>> {
    if s_seq.len() != beta_seq.len() {
        return Err(invalid("s_seq", "must align with beta_seq"));
    }
    if let Some(s) = s_seq.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(invalid("s", format!("{s} outside [0, 1]")));
    }
    let start = d_c.max(d_q);
    (start..s_seq.len())
        .map(|l| {
            let s = s_seq[l - d_c];
            let b = &beta_seq[l - d_q];
            if b.dim() != dim {
                return Err(invalid("dim", format!("input has dimension {}", b.dim())));
            }
            let m = CMatrix::identity(dim, dim) * C64::from(s / dim as f64) + b.matrix() * C64::from(1.0 - s);
            DensityMatrix::new(b.space().clone(), m)
        })
        .collect()
}

/// Distribution of random quantum inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputStates {
    /// Haar-random pure states of a `dim`-level system.
    Pure { dim: usize },
    /// Normalized complex Wishart states.
    Mixed { dim: usize },
    /// Thermal states with `v̄ = (r cos φ)²`, `r ∈ [0, 0.3]`, `φ ∈ [0, π]`.
    Thermal { cutoff: usize },
    /// The same thermal states squeezed by `ξ = r sin φ`.
    SqueezedThermal { cutoff: usize },
}

impl InputStates {
    pub fn dim(&self) -> usize {
        match *self {
            InputStates::Pure { dim } | InputStates::Mixed { dim } => dim,
            InputStates::Thermal { cutoff } | InputStates::SqueezedThermal { cutoff } => cutoff,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DensityMatrix> {
        match *self {
            InputStates::Pure { dim } => random_state_with(dim, rng, StateKind::Pure),
            InputStates::Mixed { dim } => random_state_with(dim, rng, StateKind::Mixed),
            InputStates::Thermal { cutoff } | InputStates::SqueezedThermal { cutoff } => {
                let r = rng.gen_range(0.0..=0.3);
                let phi = rng.gen_range(0.0..=std::f64::consts::PI);
                let nbar = (r * f64::cos(phi)).powi(2);
                let th = thermal_state(nbar, cutoff)?;
                if matches!(self, InputStates::Thermal { .. }) {
                    Ok(th)
                } else {
                    squeeze_state(&th, C64::from(r * phi.sin()))
                }
            }
        }
    }

    pub fn sample_many(&self, count: usize, seed: u64) -> Result<Vec<DensityMatrix>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample(&mut rng)).collect()
    }
}

/// Non-temporal squeezing map: `u_l = s_l` uniform in `[0, 1]`, target
/// `S(ξ(s_l)) β_l S(ξ(s_l))†`.
pub fn cv_task_sequence(length: usize, seed: u64, encoding: Encoding, inputs: InputStates) -> Result<HybridSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: Vec<f64> = (0..length).map(|_| rng.gen::<f64>()).collect();
    let beta = inputs.sample_many(length, seed ^ 0xC0FF_EE)?;
    let states = s
        .iter()
        .zip(&beta)
        .map(|(&sl, b)| cv_target(b, sl, encoding))
        .collect::<Result<Vec<_>>>()?;
    Ok(HybridSequence {
        u: s.clone(),
        beta,
        s,
        targets: Targets {
            states,
            ..Default::default()
        },
        offset: 0,
        delays: Delays::default(),
    })
}

/// Sinusoidal control `s_l = control_signal(l, f)` for `l = 1..=length`,
/// thermal inputs, squeezed targets and next-step control targets.
pub fn control_task_sequence(
    length: usize,
    seed: u64,
    f: f64,
    encoding: Encoding,
    inputs: InputStates,
) -> Result<HybridSequence> {
    let s: Vec<f64> = (1..=length).map(|l| control_signal(l, f)).collect();
    let beta = inputs.sample_many(length, seed)?;
    let states = s
        .iter()
        .zip(&beta)
        .map(|(&sl, b)| cv_target(b, sl, encoding))
        .collect::<Result<Vec<_>>>()?;
    let scalars = (2..=length + 1).map(|l| control_signal(l, f)).collect();
    Ok(HybridSequence {
        u: s.clone(),
        beta,
        s,
        targets: Targets {
            states,
            scalars,
            ..Default::default()
        },
        offset: 0,
        delays: Delays::default(),
    })
}

/// Random `s_l ∈ [0, 1]` fed directly as `u_l`, random inputs and delayed
/// depolarizing targets.
pub fn depolarizing_task_sequence(
    length: usize,
    seed: u64,
    inputs: InputStates,
    d_c: usize,
    d_q: usize,
) -> Result<HybridSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: Vec<f64> = (0..length).map(|_| rng.gen::<f64>()).collect();
    let beta = inputs.sample_many(length, seed ^ 0xDE90_1A41)?;
    let states = depolarizing_target(&s, &beta, inputs.dim(), d_c, d_q)?;
    Ok(HybridSequence {
        u: s.clone(),
        beta,
        s,
        targets: Targets {
            states,
            ..Default::default()
        },
        offset: d_c.max(d_q),
        delays: Delays { d: d_c.max(d_q), d_c, d_q },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::linalg::approx_eq;
    use crate::operator::{basis_state, number_operator};
    use crate::tasks::channels::{control_blocks, switch_control_state};

    #[test]
    fn switch_sequence_layout() {
        for d in [0, 1, 3] {
            let seq = switch_task_sequence(40, 7, 0.3, 0.6, d).unwrap();
            seq.validate().unwrap();
            assert_eq!(seq.targets.len(), 40 - d.max(2));
            assert_eq!(seq.offset, d.max(2));
            assert_eq!(seq.targets.states[0].dim(), 4);
            for (t, &sym) in seq.targets.symbols.iter().enumerate() {
                assert_eq!(sym as f64, seq.s[seq.offset + t - d]);
            }
        }
        assert!(switch_task_sequence(8, 1, 0.1, 0.1, 1).is_err());
    }

    #[test]
    fn identity_channels_give_product_state() {
        let seq = switch_task_sequence(30, 2, 0.0, 0.0, 0).unwrap();
        for (t, sigma) in seq.targets.states.iter().enumerate() {
            let l = seq.offset + t;
            let ctrl = switch_control_state(switch_weight(seq.s[l] as i32)).unwrap();
            let expect = seq.beta[l].matrix().kronecker(&ctrl);
            assert!(approx_eq(sigma.matrix(), &expect, 1e-12));
            let blocks = control_blocks(sigma.matrix());
            assert!(approx_eq(&blocks[0][0], &(seq.beta[l].matrix() * ctrl[(0, 0)]), 1e-12));
        }
    }

    #[test]
    fn system_marginal_target() {
        let task = SwitchTask {
            length: 20,
            target: SwitchTarget::System,
            ..Default::default()
        };
        let seq = task.generate(4).unwrap();
        assert_eq!(seq.targets.states[0].dim(), 2);
    }

    #[test]
    fn control_signal_examples() {
        assert_eq!(control_signal(0, 60.0), 0.5);
        for l in 0..40 {
            assert!((control_signal(l, 60.0) - control_signal(l + 17, 60.0)).abs() < 1e-12);
        }
        let vals: Vec<f64> = (0..17).map(|l| control_signal(l, 60.0)).collect();
        let max = vals.iter().cloned().fold(f64::MIN, f64::max);
        let min = vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!((0.0..=1.0).contains(&min) && max <= 1.0);
        assert!(max > 0.99 && min < 0.01);
    }

    #[test]
    fn depolarizing_target_examples() {
        let b = vec![basis_state(2, 0).unwrap(); 3];
        let t = depolarizing_target(&[0.5, 0.0, 1.0], &b, 2, 0, 0).unwrap();
        assert!((t[0].matrix()[(0, 0)].re - 0.75).abs() < 1e-15);
        assert!(approx_eq(t[1].matrix(), b[1].matrix(), 1e-15));
        assert!((t[2].matrix()[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!(depolarizing_target(&[1.5], &b[..1], 2, 0, 0).is_err());
        let delayed = depolarizing_target(&[0.5, 0.0, 1.0], &b, 2, 1, 2).unwrap();
        assert_eq!(delayed.len(), 1);
        // s_{l-1} = 0 at l = 2
        assert!(approx_eq(delayed[0].matrix(), b[0].matrix(), 1e-15));
    }

    #[test]
    fn cv_target_examples() {
        let th = thermal_state(0.09, 30).unwrap();
        let same = cv_target(&th, 0.0, Encoding::Amp).unwrap();
        assert!(approx_eq(same.matrix(), th.matrix(), 1e-14));
        let out = cv_target(&th, 0.3, Encoding::Amp).unwrap();
        assert!((out.purity() - th.purity()).abs() < 1e-6);
        // exp(ξ a†² − ξ* a²) squeezes by 2|ξ|: <n> = (n̄ + ½) cosh 4|ξ| − ½
        let n_op = number_operator(out.space(), 0).unwrap();
        let got = out.expect(&n_op).unwrap().re;
        let expect = (0.09 + 0.5) * (1.2f64).cosh() - 0.5;
        assert!((got - expect).abs() < 1e-6, "{got} vs {expect}");
        let phase = cv_target(&th, 0.25, Encoding::Phase).unwrap();
        assert!((phase.purity() - th.purity()).abs() < 1e-6);
    }

    #[test]
    fn input_distributions() {
        for inputs in [
            InputStates::Pure { dim: 2 },
            InputStates::Mixed { dim: 3 },
            InputStates::Thermal { cutoff: 9 },
            InputStates::SqueezedThermal { cutoff: 3 },
        ] {
            let states = inputs.sample_many(20, 5).unwrap();
            assert!(states.iter().all(|b| b.dim() == inputs.dim()));
            assert_eq!(states, inputs.sample_many(20, 5).unwrap());
        }
        let pure = InputStates::Pure { dim: 2 }.sample_many(5, 1).unwrap();
        assert!(pure.iter().all(|b| (b.purity() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn control_and_depolarizing_sequences() {
        let seq = control_task_sequence(50, 3, 60.0, Encoding::Amp, InputStates::Thermal { cutoff: 5 }).unwrap();
        seq.validate().unwrap();
        assert_eq!(seq.targets.scalars[0], seq.u[1]);
        let seq = depolarizing_task_sequence(30, 3, InputStates::Pure { dim: 2 }, 1, 2).unwrap();
        seq.validate().unwrap();
        assert_eq!(seq.targets.len(), 28);
        let seq = cv_task_sequence(10, 3, Encoding::Phase, InputStates::Thermal { cutoff: 4 }).unwrap();
        seq.validate().unwrap();
        let mut short = seq.clone();
        short.truncate(6);
        short.validate().unwrap();
        assert_eq!(short.targets.len(), 6);
    }
}
