//! Building-block sequences, the optimizer's native parameterization.

use crate::error::{Error, Result};
use crate::fock::SnapPhases;
use crate::scalar::Real;

/// One building block `B(alpha, theta) = D(alpha)^dagger S(theta) D(alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Block<T> {
    pub alpha: T,
    pub theta: SnapPhases<T>,
}

impl<T: Real> Block<T> {
    pub fn new(alpha: T, theta: SnapPhases<T>) -> Self {
        Self { alpha, theta }
    }

    pub fn identity(dim: usize) -> Self {
        Self { alpha: T::zero(), theta: SnapPhases::zeros(dim) }
    }
}

/// Ordered blocks `B_1 ... B_T`; the represented unitary is `B_T ... B_1`
/// (the first block acts first). Block form carries no net displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSequence<T> {
    dim: usize,
    pub blocks: Vec<Block<T>>,
}

impl<T: Real> BlockSequence<T> {
    pub fn empty(dim: usize) -> Self {
        Self { dim, blocks: Vec::new() }
    }

    pub fn new(dim: usize, blocks: Vec<Block<T>>) -> Result<Self> {
        let seq = Self { dim, blocks };
        seq.validate()?;
        Ok(seq)
    }

    pub fn identity(dim: usize, len: usize) -> Self {
        Self { dim, blocks: (0..len).map(|_| Block::identity(dim)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of blocks (SNAP gates), `T`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Number of real parameters, `T * (1 + dim)`.
    pub fn param_count(&self) -> usize {
        self.blocks.len() * (1 + self.dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::DimTooSmall(self.dim));
        }
        for b in &self.blocks {
            if b.theta.dim() != self.dim {
                return Err(Error::DimMismatch { expected: self.dim, got: b.theta.dim() });
            }
            if !b.alpha.is_finite() {
                return Err(Error::NonFinite("block displacement"));
            }
            b.theta.validate()?;
        }
        Ok(())
    }

    /// Parameters flattened as `[alpha_1, theta_1.., alpha_2, theta_2.., ...]`.
    pub fn to_params(&self) -> Vec<T> {
        let mut p = Vec::with_capacity(self.param_count());
        for b in &self.blocks {
            p.push(b.alpha);
            p.extend_from_slice(b.theta.as_slice());
        }
        p
    }

    /// Inverse of [`to_params`](Self::to_params).
    pub fn set_params(&mut self, params: &[T]) {
        assert_eq!(params.len(), self.param_count(), "parameter vector length");
        let stride = 1 + self.dim;
        for (b, chunk) in self.blocks.iter_mut().zip(params.chunks_exact(stride)) {
            b.alpha = chunk[0];
            b.theta.as_mut_slice().copy_from_slice(&chunk[1..]);
        }
    }

    /// Same sequence with every SNAP phase wrapped into `(-pi, pi]`.
    pub fn canonical(&self) -> Self {
        Self {
            dim: self.dim,
            blocks: self
                .blocks
                .iter()
                .map(|b| Block { alpha: b.alpha, theta: b.theta.canonical() })
                .collect(),
        }
    }

    /// The inverse unitary `B_1^dagger ... B_T^dagger` as a block sequence.
    pub fn inverse(&self) -> Self {
        Self {
            dim: self.dim,
            blocks: self
                .blocks
                .iter()
                .rev()
                .map(|b| Block { alpha: b.alpha, theta: b.theta.negated() })
                .collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> BlockSequence<U> {
        BlockSequence {
            dim: self.dim,
            blocks: self
                .blocks
                .iter()
                .map(|b| Block { alpha: U::lit(b.alpha.as_f64()), theta: b.theta.cast() })
                .collect(),
        }
    }
}
