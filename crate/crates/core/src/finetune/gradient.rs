//! Exact gradients of the cost by adjoint state propagation.
//!
//! Everything runs in frame coordinates on batches of `L` states, so one
//! evaluation costs `O(T L d^2)`. Block indices are 0-based: `fwd[t]` is the
//! input batch after blocks `0..t`, `ybar[t]` the output batch pulled back
//! through blocks `t..T`.

use num_complex::Complex;

use crate::error::Result;
use crate::fock::StateBatch;
use crate::objectives::{build_report, ObjectiveReport, Problem, SATURATION_GAP};
use crate::scalar::{modulus, Real};
use crate::sequence::BlockSequence;

/// Gradient with the same flat layout as [`BlockSequence::to_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T> {
    pub dim: usize,
    pub values: Vec<T>,
}

impl<T: Real> Gradient<T> {
    pub fn zeros(dim: usize, blocks: usize) -> Self {
        Self { dim, values: vec![T::zero(); blocks * (1 + dim)] }
    }

    pub fn blocks(&self) -> usize {
        self.values.len() / (1 + self.dim)
    }

    pub fn alpha(&self, t: usize) -> T {
        self.values[t * (1 + self.dim)]
    }

    pub fn theta(&self, t: usize) -> &[T] {
        let s = t * (1 + self.dim);
        &self.values[s + 1..s + 1 + self.dim]
    }

    fn alpha_mut(&mut self, t: usize) -> &mut T {
        &mut self.values[t * (1 + self.dim)]
    }

    fn theta_mut(&mut self, t: usize) -> &mut [T] {
        let s = t * (1 + self.dim);
        &mut self.values[s + 1..s + 1 + self.dim]
    }

    /// `self + w * other`.
    pub fn axpy(&mut self, w: T, other: &Self) {
        for (a, &b) in self.values.iter_mut().zip(&other.values) {
            *a += w * b;
        }
    }

    /// Largest `|d/d alpha|` and `|d/d theta|`.
    pub fn max_abs(&self) -> (T, T) {
        let mut ma = T::zero();
        let mut mt = T::zero();
        for t in 0..self.blocks() {
            ma = ma.max(self.alpha(t).abs());
            for &g in self.theta(t) {
                mt = mt.max(g.abs());
            }
        }
        (ma, mt)
    }
}

/// Result of one gradient evaluation.
#[derive(Debug, Clone)]
pub struct CostGradient<T> {
    pub report: ObjectiveReport,
    /// Gradient of `ln(1 - F)`; zero when saturated.
    pub overlap: Gradient<T>,
    /// Gradient of `P = sum_t (nbar_t + nbar'_t) / 2`.
    pub photon: Gradient<T>,
}

impl<T: Real> CostGradient<T> {
    /// Gradient of `ln(1 - F) + lambda P`.
    pub fn total(&self) -> Gradient<T> {
        let mut g = self.overlap.clone();
        g.axpy(T::lit(self.report.lambda), &self.photon);
        g
    }
}

/// Preallocated buffers for repeated gradient evaluations of one problem at a
/// fixed sequence length.
#[derive(Debug, Clone)]
pub struct GradientEngine<T: Real> {
    fwd: Vec<StateBatch<T>>,
    mid_x: Vec<StateBatch<T>>,
    ybar: Vec<StateBatch<T>>,
    mid_y: Vec<StateBatch<T>>,
    chi: StateBatch<T>,
    xi: StateBatch<T>,
    tmp: StateBatch<T>,
    tmp_mid: StateBatch<T>,
    pair: StateBatch<T>,
    pair_mid: StateBatch<T>,
    pair_out: StateBatch<T>,
    triple: StateBatch<T>,
    triple_out: StateBatch<T>,
}

impl<T: Real> GradientEngine<T> {
    pub fn new(dim: usize, logical: usize, blocks: usize) -> Self {
        let b = |k| StateBatch::zeros(dim, k);
        Self {
            fwd: (0..=blocks).map(|_| b(logical)).collect(),
            mid_x: (0..blocks).map(|_| b(logical)).collect(),
            ybar: (0..=blocks).map(|_| b(logical)).collect(),
            mid_y: (0..blocks).map(|_| b(logical)).collect(),
            chi: b(logical),
            xi: b(logical),
            tmp: b(logical),
            tmp_mid: b(logical),
            pair: b(2 * logical),
            pair_mid: b(2 * logical),
            pair_out: b(2 * logical),
            triple: b(3 * logical),
            triple_out: b(3 * logical),
        }
    }

    fn fits(&self, problem: &Problem<T>, seq: &BlockSequence<T>) -> bool {
        self.fwd.len() == seq.len() + 1
            && self.fwd[0].dim() == problem.dim()
            && self.fwd[0].count() == problem.logical_dim()
    }

    /// Cost report and both gradients.
    pub fn evaluate(&mut self, problem: &Problem<T>, seq: &BlockSequence<T>, lambda: f64) -> Result<CostGradient<T>> {
        problem.check(seq)?;
        if !self.fits(problem, seq) {
            *self = Self::new(problem.dim(), problem.logical_dim(), seq.len());
        }
        let space = problem.space().clone();
        let d = problem.dim();
        let l = problem.logical_dim();
        let nt = seq.len();
        let levels = space.levels();
        let freqs = space.freqs();
        // photon terms carry 2/L from the quadratic form and 1/2 from P
        let inv_l = T::one() / T::lit_usize(l);
        let i_unit = Complex::new(T::zero(), T::one());
        let zero = Complex::new(T::zero(), T::zero());
        let phasors: Vec<Vec<Complex<T>>> = seq.blocks.iter().map(|b| b.theta.phasors()).collect();

        let mut overlap = Gradient::zeros(d, nt);
        let mut photon = Gradient::zeros(d, nt);
        let mut nf = vec![T::zero(); nt];
        let mut nr = vec![T::zero(); nt];

        // forward pass over the inputs
        self.fwd[0].copy_from(problem.inputs_frame());
        for t in 0..nt {
            let alpha = seq.blocks[t].alpha;
            space.displaced_mid(alpha, &self.fwd[t], &mut self.mid_x[t], &mut self.tmp);
            self.tmp_mid.copy_from(&self.mid_x[t]);
            self.tmp_mid.scale_rows(&phasors[t], false);
            space.undisplace_mid(alpha, &self.tmp_mid, &mut self.fwd[t + 1]);
            nf[t] = (0..l).fold(T::zero(), |acc, j| acc + self.mid_x[t].weighted_norm2(j, levels)) * inv_l;
            *photon.alpha_mut(t) += direct_alpha_term(&space, &self.mid_x[t]) * inv_l;
        }

        let z = (0..l).fold(zero, |acc, j| acc + problem.outputs_frame().inner(j, &self.fwd[nt], j));
        let zabs = modulus(z);
        let fidelity = zabs.as_f64() / l as f64;
        let saturated = 1.0 - fidelity <= SATURATION_GAP;
        // d ln(1-F) = Re(coef * dz)
        let coef = if saturated || zabs == T::zero() {
            zero
        } else {
            -z.conj() / (zabs * (T::lit_usize(l) - zabs))
        };

        // backward pass: outputs pulled back, and the forward photon adjoint chi
        self.ybar[nt].copy_from(problem.outputs_frame());
        self.chi.fill_zero();
        for t in (0..nt).rev() {
            let alpha = seq.blocks[t].alpha;
            let s = &phasors[t];
            self.pair.copy_columns_from(0, &self.ybar[t + 1], 0..l);
            self.pair.copy_columns_from(l, &self.chi, 0..l);
            space.displaced_mid(alpha, &self.pair, &mut self.pair_mid, &mut self.pair_out);
            // pair_mid = [mid_y | c], c = P^dag D chi
            self.mid_y[t].copy_columns_from(0, &self.pair_mid, 0..l);
            nr[t] = (0..l).fold(T::zero(), |acc, j| acc + self.mid_y[t].weighted_norm2(j, levels)) * inv_l;

            let th_o = overlap.theta_mut(t);
            for n in 0..d {
                let mut acc = zero;
                for j in 0..l {
                    acc += self.pair_mid.get(n, j).conj() * self.mid_x[t].get(n, j);
                }
                th_o[n] = (coef * i_unit * s[n] * acc).re;
            }
            let th_p = photon.theta_mut(t);
            for n in 0..d {
                let mut acc = zero;
                for j in 0..l {
                    acc += self.pair_mid.get(n, l + j).conj() * self.mid_x[t].get(n, j);
                }
                th_p[n] += (i_unit * s[n] * acc).re * inv_l;
            }

            // [conj(s) mid_y | conj(s) c | n mid_x] back to the frame in one product
            for n in 0..d {
                let sc = s[n].conj();
                for j in 0..2 * l {
                    self.triple.set(n, j, self.pair_mid.get(n, j) * sc);
                }
                for j in 0..l {
                    self.triple.set(n, 2 * l + j, self.mid_x[t].get(n, j) * levels[n]);
                }
            }
            space.undisplace_mid(alpha, &self.triple, &mut self.triple_out);
            self.ybar[t].copy_columns_from(0, &self.triple_out, 0..l);

            // <a| dB/dalpha |b> = i (<a| mu B b> - <B^dag a| mu b>)
            let mut dz = zero;
            let mut dchi = zero;
            for j in 0..l {
                dz += self.ybar[t + 1].inner_weighted(j, freqs, &self.fwd[t + 1], j)
                    - self.ybar[t].inner_weighted(j, freqs, &self.fwd[t], j);
                dchi += self.chi.inner_weighted(j, freqs, &self.fwd[t + 1], j)
                    - self.triple_out.inner_weighted(l + j, freqs, &self.fwd[t], j);
            }
            *overlap.alpha_mut(t) = (coef * i_unit * dz).re;
            *photon.alpha_mut(t) += (i_unit * dchi).re * inv_l;

            // chi_{t-1} = B_t^dag chi_t + N_t fwd[t]
            for j in 0..l {
                for n in 0..d {
                    self.chi.set(n, j, self.triple_out.get(n, l + j) + self.triple_out.get(n, 2 * l + j));
                }
            }
        }

        // reverse photon numbers: direct alpha terms and the adjoint xi
        self.xi.fill_zero();
        for t in 0..nt {
            let alpha = seq.blocks[t].alpha;
            let s = &phasors[t];
            *photon.alpha_mut(t) += direct_alpha_term(&space, &self.mid_y[t]) * inv_l;

            // tmp_mid = w = P^dag D xi_t
            space.displaced_mid(alpha, &self.xi, &mut self.tmp_mid, &mut self.tmp);
            let th_p = photon.theta_mut(t);
            for n in 0..d {
                let mut acc = zero;
                for j in 0..l {
                    acc += self.mid_y[t].get(n, j).conj() * self.tmp_mid.get(n, j);
                }
                th_p[n] += (i_unit * s[n] * acc).re * inv_l;
            }
            // [s w | n mid_y] back to the frame: [B xi | N ybar[t+1]]
            for n in 0..d {
                for j in 0..l {
                    self.pair.set(n, j, self.tmp_mid.get(n, j) * s[n]);
                    self.pair.set(n, l + j, self.mid_y[t].get(n, j) * levels[n]);
                }
            }
            space.undisplace_mid(alpha, &self.pair, &mut self.pair_out);
            let mut dxi = zero;
            for j in 0..l {
                dxi += self.ybar[t + 1].inner_weighted(j, freqs, &self.pair_out, j)
                    - self.ybar[t].inner_weighted(j, freqs, &self.xi, j);
            }
            *photon.alpha_mut(t) += (i_unit * dxi).re * inv_l;
            for j in 0..l {
                for n in 0..d {
                    self.xi.set(n, j, self.pair_out.get(n, j) + self.pair_out.get(n, l + j));
                }
            }
        }

        let m = nalgebra::DMatrix::from_fn(l, l, |j, k| problem.outputs_frame().inner(j, &self.fwd[nt], k));
        let non_leakage = crate::fock::trace_norm(&m)?.as_f64() / l as f64;
        let report = build_report(fidelity, non_leakage, &nf, &nr, lambda);
        Ok(CostGradient { report, overlap, photon })
    }
}

/// `sum_l Re <u_l| n (-iJ) |u_l>`, half the derivative of `sum_l <u_l|n|u_l>`
/// when `u = P^dag D(alpha) psi` and only `alpha` moves.
fn direct_alpha_term<T: Real>(space: &crate::fock::FockSpace<T>, mid: &StateBatch<T>) -> T {
    let levels = space.levels();
    let mut g = T::zero();
    for j in 0..mid.count() {
        let ku = space.generator_mid(mid, j);
        for (n, k) in ku.iter().enumerate() {
            g += levels[n] * (mid.get(n, j).conj() * k).re;
        }
    }
    g
}

/// Gradient of `ln(1 - F)`, zeroed (and `report.saturated` set) at saturation.
pub fn overlap_gradient<T: Real>(problem: &Problem<T>, seq: &BlockSequence<T>) -> Result<(Gradient<T>, bool)> {
    let mut engine = GradientEngine::new(problem.dim(), problem.logical_dim(), seq.len());
    let cg = engine.evaluate(problem, seq, 0.0)?;
    Ok((cg.overlap, cg.report.saturated))
}

/// Gradient of `P = sum_t (nbar_t + nbar'_t) / 2`.
pub fn photon_gradient<T: Real>(problem: &Problem<T>, seq: &BlockSequence<T>) -> Result<Gradient<T>> {
    let mut engine = GradientEngine::new(problem.dim(), problem.logical_dim(), seq.len());
    Ok(engine.evaluate(problem, seq, 0.0)?.photon)
}
