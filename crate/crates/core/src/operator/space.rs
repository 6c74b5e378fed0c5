use serde::{Deserialize, Serialize};

use crate::error::{QrcError, Result};

/// Composite truncated Fock space. Modes are tensor-ordered left to right, so
/// mode 0 is the most significant index of the flattened basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertSpace {
    mode_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(mode_dims: Vec<usize>) -> Result<Self> {
        if mode_dims.is_empty() {
            return Err(QrcError::InvalidSpace("no modes".into()));
        }
        if let Some(d) = mode_dims.iter().find(|&&d| d < 2) {
            return Err(QrcError::InvalidSpace(format!(
                "mode dimension {d} is below 2"
            )));
        }
        Ok(Self { mode_dims })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn num_modes(&self) -> usize {
        self.mode_dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.mode_dims.iter().product()
    }

    /// Flattened-index stride of each mode.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.mode_dims.len()];
        for m in (0..self.mode_dims.len().saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * self.mode_dims[m + 1];
        }
        strides
    }

    /// Occupation of `mode` in the basis state with flattened index `index`.
    pub fn occupation(&self, index: usize, mode: usize) -> usize {
        (index / self.strides()[mode]) % self.mode_dims[mode]
    }

    /// Per-mode occupations of a flattened basis index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.mode_dims.len()];
        for m in (0..self.mode_dims.len()).rev() {
            out[m] = index % self.mode_dims[m];
            index /= self.mode_dims[m];
        }
        out
    }

    pub fn subspace(&self, modes: &[usize]) -> Result<Self> {
        for &m in modes {
            self.check_mode(m)?;
        }
        Self::new(modes.iter().map(|&m| self.mode_dims[m]).collect())
    }

    /// Concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &HilbertSpace) -> Self {
        let mut dims = self.mode_dims.clone();
        dims.extend_from_slice(&other.mode_dims);
        Self { mode_dims: dims }
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.mode_dims.len() {
            Err(QrcError::ModeOutOfRange {
                mode,
                modes: self.mode_dims.len(),
            })
        } else {
            Ok(())
        }
    }
}
