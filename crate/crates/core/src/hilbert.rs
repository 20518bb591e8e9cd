//! Composite qudit (x) Fock Hilbert space with index bookkeeping.

use crate::error::{Error, Result};
use crate::model::LvcModel;

/// The tensor-product space of one `d`-level qudit and a truncated Fock
/// ladder per dynamical mode. Basis ordering is row-major with the
/// electronic index slowest: `index = ((elec * N_0 + n_0) * N_1 + n_1) ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    qudit_dim: usize,
    mode_labels: Vec<String>,
    fock_dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl HilbertSpace {
    pub fn new(qudit_dim: usize, modes: &[(String, usize)]) -> Result<Self> {
        if qudit_dim == 0 {
            return Err(Error::invalid("hilbert", "qudit dimension must be positive"));
        }
        for (label, n) in modes {
            if *n < 2 {
                return Err(Error::invalid(
                    format!("hilbert.mode[{label}]"),
                    "Fock truncation must keep at least 2 levels",
                ));
            }
        }
        let fock_dims: Vec<usize> = modes.iter().map(|(_, n)| *n).collect();
        let mode_labels = modes.iter().map(|(l, _)| l.clone()).collect();
        let mut strides = vec![1usize; fock_dims.len()];
        for i in (0..fock_dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * fock_dims[i + 1];
        }
        let dim = qudit_dim * fock_dims.iter().product::<usize>().max(1);
        Ok(HilbertSpace { qudit_dim, mode_labels, fock_dims, strides, dim })
    }

    /// Space for the dynamical (tuning + coupling) modes of a model.
    pub fn for_model(model: &LvcModel) -> Result<Self> {
        let modes: Vec<(String, usize)> = model
            .dynamical_modes()
            .map(|m| (m.label.clone(), m.fock_levels))
            .collect();
        Self::new(model.num_states, &modes)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qudit_dim(&self) -> usize {
        self.qudit_dim
    }

    pub fn num_modes(&self) -> usize {
        self.fock_dims.len()
    }

    pub fn fock_dim(&self, mode: usize) -> usize {
        self.fock_dims[mode]
    }

    pub fn mode_labels(&self) -> &[String] {
        &self.mode_labels
    }

    pub fn mode_index(&self, label: &str) -> Option<usize> {
        self.mode_labels.iter().position(|l| l == label)
    }

    /// Composite index of `(electronic, occupations)`.
    pub fn index_of(&self, electronic: usize, occupations: &[usize]) -> usize {
        debug_assert_eq!(occupations.len(), self.fock_dims.len());
        let mode_block: usize = self.dim / self.qudit_dim;
        let mut idx = electronic * mode_block;
        for (j, &n) in occupations.iter().enumerate() {
            debug_assert!(n < self.fock_dims[j]);
            idx += n * self.strides[j];
        }
        idx
    }

    /// Electronic index of a composite basis state.
    pub fn electronic_of(&self, index: usize) -> usize {
        index / (self.dim / self.qudit_dim)
    }

    /// Occupation of `mode` in a composite basis state.
    pub fn occupation_of(&self, index: usize, mode: usize) -> usize {
        let within = index % (self.dim / self.qudit_dim);
        (within / self.strides[mode]) % self.fock_dims[mode]
    }

    /// Full decomposition of a composite index.
    pub fn unpack(&self, index: usize) -> (usize, Vec<usize>) {
        let occ = (0..self.fock_dims.len())
            .map(|j| self.occupation_of(index, j))
            .collect();
        (self.electronic_of(index), occ)
    }
}
