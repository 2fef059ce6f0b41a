//! Figures of merit evaluated by propagating the `2L` basis states.

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_dims, trace_norm, ComplexMatrix, FockSpace, StateBatch};
use crate::scalar::{modulus, Real};
use crate::sequence::BlockSequence;
use crate::targets::TargetOperation;

/// Fidelities at or above `1 - SATURATION_GAP` are clamped before the log.
pub const SATURATION_GAP: f64 = 1e-15;

/// Everything [`Problem::evaluate`] computes for one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveReport {
    pub fidelity: f64,
    pub nbar_forward: Vec<f64>,
    pub nbar_reverse: Vec<f64>,
    /// `sum_t (nbar_t + nbar'_t) / 2`.
    pub photon_cost: f64,
    pub lambda: f64,
    /// `ln(1 - F) + lambda * photon_cost`, with `F` clamped at saturation.
    pub total_cost: f64,
    pub non_leakage: f64,
    pub saturated: bool,
}

impl ObjectiveReport {
    /// Mean of the forward photon numbers, `(1/T) sum_t nbar_t`.
    pub fn mean_nbar(&self) -> f64 {
        if self.nbar_forward.is_empty() {
            0.0
        } else {
            self.nbar_forward.iter().sum::<f64>() / self.nbar_forward.len() as f64
        }
    }
}

/// `ln(1 - F)` with the saturation clamp; the flag reports whether it engaged.
pub fn log_infidelity(fidelity: f64) -> (f64, bool) {
    let gap = 1.0 - fidelity;
    if gap <= SATURATION_GAP {
        (SATURATION_GAP.ln(), true)
    } else {
        (gap.ln(), false)
    }
}

/// A target together with its basis states in frame coordinates.
#[derive(Debug, Clone)]
pub struct Problem<T: Real> {
    space: Arc<FockSpace<T>>,
    target: TargetOperation<T>,
    x: StateBatch<T>,
    y: StateBatch<T>,
}

impl<T: Real> Problem<T> {
    pub fn new(target: TargetOperation<T>) -> Result<Self> {
        let space = Arc::new(FockSpace::new(target.dim())?);
        Self::with_space(space, target)
    }

    /// Reuses an existing eigenbasis (it depends only on `dim`).
    pub fn with_space(space: Arc<FockSpace<T>>, target: TargetOperation<T>) -> Result<Self> {
        check_dims(space.dim(), target.dim())?;
        let x = space.batch_to_frame(target.inputs());
        let y = space.batch_to_frame(target.outputs());
        Ok(Self { space, target, x, y })
    }

    pub fn space(&self) -> &Arc<FockSpace<T>> {
        &self.space
    }

    pub fn target(&self) -> &TargetOperation<T> {
        &self.target
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn logical_dim(&self) -> usize {
        self.target.logical_dim()
    }

    /// Input states `x_l` in frame coordinates.
    pub fn inputs_frame(&self) -> &StateBatch<T> {
        &self.x
    }

    /// Output states `y_l` in frame coordinates.
    pub fn outputs_frame(&self) -> &StateBatch<T> {
        &self.y
    }

    pub fn check(&self, seq: &BlockSequence<T>) -> Result<()> {
        check_dims(self.dim(), seq.dim())?;
        seq.validate()
    }

    /// Pushes `states` through the blocks (forward, or through the adjoints in
    /// reverse order), returning the per-gate photon numbers.
    fn propagate(&self, seq: &BlockSequence<T>, states: &mut StateBatch<T>, reverse: bool) -> Vec<T> {
        let d = self.dim();
        let l = states.count();
        let mut mid = StateBatch::zeros(d, l);
        let mut scratch = StateBatch::zeros(d, l);
        let inv_l = T::one() / T::lit_usize(l);
        let mut nbar = vec![T::zero(); seq.len()];
        let order: Box<dyn Iterator<Item = usize>> =
            if reverse { Box::new((0..seq.len()).rev()) } else { Box::new(0..seq.len()) };
        for t in order {
            let b = &seq.blocks[t];
            self.space.apply_block(b.alpha, &b.theta.phasors(), reverse, states, &mut mid, &mut scratch);
            nbar[t] = (0..l).fold(T::zero(), |acc, j| acc + mid.weighted_norm2(j, self.space.levels())) * inv_l;
        }
        nbar
    }

    /// `M_{jk} = <y_j| U |x_k>` (an `L x L` matrix).
    pub fn overlap_matrix(&self, seq: &BlockSequence<T>) -> Result<ComplexMatrix<T>> {
        self.check(seq)?;
        if seq.is_empty() {
            return Ok(self.lab_overlaps());
        }
        let mut states = self.x.clone();
        self.propagate(seq, &mut states, false);
        Ok(self.overlaps(&states))
    }

    // exact for the empty sequence, where the frame round trip would add rounding
    fn lab_overlaps(&self) -> ComplexMatrix<T> {
        let l = self.logical_dim();
        let (x, y) = (self.target.inputs(), self.target.outputs());
        ComplexMatrix::from_fn(l, l, |j, k| y[j].dotc(&x[k]))
    }

    fn overlaps(&self, out: &StateBatch<T>) -> ComplexMatrix<T> {
        let l = self.logical_dim();
        ComplexMatrix::from_fn(l, l, |j, k| self.y.inner(j, out, k))
    }

    /// `F = (1/L) |tr[V^dagger U]|`.
    pub fn fidelity(&self, seq: &BlockSequence<T>) -> Result<T> {
        let m = self.overlap_matrix(seq)?;
        Ok(modulus(m.trace()) / T::lit_usize(self.logical_dim()))
    }

    /// Forward photon numbers `nbar_t` and reverse ones `nbar'_t`.
    pub fn photon_numbers(&self, seq: &BlockSequence<T>) -> Result<(Vec<T>, Vec<T>)> {
        self.check(seq)?;
        let mut fwd = self.x.clone();
        let nf = self.propagate(seq, &mut fwd, false);
        let mut bwd = self.y.clone();
        let nr = self.propagate(seq, &mut bwd, true);
        Ok((nf, nr))
    }

    /// `(1/L) || V U^dagger V ||_1`, computed on the `L x L` sector.
    pub fn non_leakage(&self, seq: &BlockSequence<T>) -> Result<T> {
        let m = self.overlap_matrix(seq)?;
        Ok(trace_norm(&m)? / T::lit_usize(self.logical_dim()))
    }

    /// Full report including `C = ln(1 - F) + lambda * sum_t (nbar_t + nbar'_t) / 2`.
    pub fn evaluate(&self, seq: &BlockSequence<T>, lambda: f64) -> Result<ObjectiveReport> {
        self.check(seq)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("photon weight lambda = {lambda} must be finite and >= 0")));
        }
        let mut fwd = self.x.clone();
        let nf = self.propagate(seq, &mut fwd, false);
        let mut bwd = self.y.clone();
        let nr = self.propagate(seq, &mut bwd, true);
        let m = if seq.is_empty() { self.lab_overlaps() } else { self.overlaps(&fwd) };
        let l = self.logical_dim() as f64;
        let z: Complex<T> = m.trace();
        let fidelity = modulus(z).as_f64() / l;
        let non_leakage = trace_norm(&m)?.as_f64() / l;
        Ok(build_report(fidelity, non_leakage, &nf, &nr, lambda))
    }
}

pub(crate) fn build_report<T: Real>(fidelity: f64, non_leakage: f64, nf: &[T], nr: &[T], lambda: f64) -> ObjectiveReport {
    let nbar_forward: Vec<f64> = nf.iter().map(|x| x.as_f64()).collect();
    let nbar_reverse: Vec<f64> = nr.iter().map(|x| x.as_f64()).collect();
    let photon_cost = nbar_forward.iter().zip(&nbar_reverse).map(|(a, b)| (a + b) / 2.0).sum::<f64>();
    let (log_term, saturated) = log_infidelity(fidelity);
    ObjectiveReport {
        fidelity,
        nbar_forward,
        nbar_reverse,
        photon_cost,
        lambda,
        total_cost: log_term + lambda * photon_cost,
        non_leakage,
        saturated,
    }
}

pub fn fidelity<T: Real>(target: &TargetOperation<T>, seq: &BlockSequence<T>) -> Result<T> {
    Problem::new(target.clone())?.fidelity(seq)
}

pub fn photon_numbers<T: Real>(target: &TargetOperation<T>, seq: &BlockSequence<T>) -> Result<(Vec<T>, Vec<T>)> {
    Problem::new(target.clone())?.photon_numbers(seq)
}

pub fn total_cost<T: Real>(target: &TargetOperation<T>, seq: &BlockSequence<T>, lambda: f64) -> Result<ObjectiveReport> {
    Problem::new(target.clone())?.evaluate(seq, lambda)
}

pub fn non_leakage<T: Real>(target: &TargetOperation<T>, seq: &BlockSequence<T>) -> Result<T> {
    Problem::new(target.clone())?.non_leakage(seq)
}
