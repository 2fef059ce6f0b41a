//! Dense-matrix gradient route: the operator recursions for `G_t`, `rho_t`,
//! `X_t`, `Y_t` and the Hilbert-Schmidt gradient formulas built on them.
//!
//! Costs `O(T d^3)` per evaluation; used to cross-check [`GradientEngine`](super::GradientEngine)
//! on small problems.

use num_complex::Complex;

use super::Gradient;
use crate::error::Result;
use crate::fock::{hs_inner, ComplexMatrix, FockSpace};
use crate::objectives::SATURATION_GAP;
use crate::scalar::{modulus, Real};
use crate::sequence::BlockSequence;
use crate::targets::TargetOperation;

/// Operator adjoints for one sequence (0-based block index).
#[derive(Debug, Clone)]
pub struct GradientWorkspace<T: Real> {
    /// Overlap-gradient adjoints; all zero when the fidelity is saturated.
    pub g: Vec<ComplexMatrix<T>>,
    pub rho_x: Vec<ComplexMatrix<T>>,
    pub rho_y: Vec<ComplexMatrix<T>>,
    pub x: Vec<ComplexMatrix<T>>,
    pub y: Vec<ComplexMatrix<T>>,
}

struct Dense<T: Real> {
    l: T,
    v: ComplexMatrix<T>,
    blocks: Vec<ComplexMatrix<T>>,
    number_ops: Vec<ComplexMatrix<T>>,
    // -(z/|z|) / (L - |z|), zero at saturation
    scale: Complex<T>,
}

fn c<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

fn dense<T: Real>(space: &FockSpace<T>, target: &TargetOperation<T>, seq: &BlockSequence<T>) -> Result<Dense<T>> {
    crate::fock::check_dims(space.dim(), target.dim())?;
    crate::fock::check_dims(space.dim(), seq.dim())?;
    let d = space.dim();
    let v = target.matrix();
    let blocks: Vec<_> = seq.blocks.iter().map(|b| space.block(b.alpha, &b.theta)).collect();
    let n = space.number();
    let number_ops = seq
        .blocks
        .iter()
        .map(|b| {
            let disp = space.displacement(b.alpha);
            disp.adjoint() * &n * disp
        })
        .collect();
    let mut u = ComplexMatrix::identity(d, d);
    for b in &blocks {
        u = b * u;
    }
    let z = hs_inner(&v, &u)?;
    let l = T::lit_usize(target.logical_dim());
    let za = modulus(z);
    let saturated = 1.0 - (za / l).as_f64() <= SATURATION_GAP;
    let scale = if saturated || za == T::zero() { c(T::zero()) } else { -(z / za) / (l - za) };
    Ok(Dense { l, v, blocks, number_ops, scale })
}

/// `B_{hi-1} ... B_lo` (identity when empty).
fn product<T: Real>(blocks: &[ComplexMatrix<T>], lo: usize, hi: usize, d: usize) -> ComplexMatrix<T> {
    let mut p = ComplexMatrix::identity(d, d);
    for b in blocks.iter().take(hi).skip(lo) {
        p = b * p;
    }
    p
}

impl<T: Real> GradientWorkspace<T> {
    /// Builds every adjoint by its recursion.
    pub fn recursive(space: &FockSpace<T>, target: &TargetOperation<T>, seq: &BlockSequence<T>) -> Result<Self> {
        let dn = dense(space, target, seq)?;
        let d = space.dim();
        let nt = seq.len();
        let b = &dn.blocks;
        let zero = ComplexMatrix::zeros(d, d);
        let mut g = vec![zero.clone(); nt];
        let mut rho_x = vec![zero.clone(); nt];
        let mut rho_y = vec![zero.clone(); nt];
        let mut x = vec![zero.clone(); nt];
        let mut y = vec![zero.clone(); nt];
        if nt == 0 {
            return Ok(Self { g, rho_x, rho_y, x, y });
        }
        g[0] = product(b, 1, nt, d).adjoint() * &dn.v * dn.scale;
        rho_x[0] = dn.v.adjoint() * &dn.v / c(dn.l);
        rho_y[nt - 1] = &dn.v * dn.v.adjoint() / c(dn.l);
        for t in 0..nt - 1 {
            g[t + 1] = &b[t + 1] * &g[t] * b[t].adjoint();
            rho_x[t + 1] = &b[t] * &rho_x[t] * b[t].adjoint();
            y[t + 1] = &b[t] * &y[t] * b[t].adjoint() + &dn.number_ops[t];
        }
        for t in (1..nt).rev() {
            rho_y[t - 1] = b[t].adjoint() * &rho_y[t] * &b[t];
            x[t - 1] = b[t].adjoint() * &x[t] * &b[t] + &dn.number_ops[t];
        }
        Ok(Self { g, rho_x, rho_y, x, y })
    }

    /// Builds every adjoint from its defining product, without recursion.
    pub fn explicit(space: &FockSpace<T>, target: &TargetOperation<T>, seq: &BlockSequence<T>) -> Result<Self> {
        let dn = dense(space, target, seq)?;
        let d = space.dim();
        let nt = seq.len();
        let b = &dn.blocks;
        let vv = dn.v.adjoint() * &dn.v / c(dn.l);
        let vvd = &dn.v * dn.v.adjoint() / c(dn.l);
        let mut ws = Self { g: vec![], rho_x: vec![], rho_y: vec![], x: vec![], y: vec![] };
        for t in 0..nt {
            let left = product(b, 0, t, d);
            let right = product(b, t + 1, nt, d);
            ws.g.push(right.adjoint() * &dn.v * left.adjoint() * dn.scale);
            ws.rho_x.push(&left * &vv * left.adjoint());
            ws.rho_y.push(right.adjoint() * &vvd * &right);
            let mut xt = ComplexMatrix::zeros(d, d);
            for s in t + 1..nt {
                let p = product(b, t + 1, s, d);
                xt += p.adjoint() * &dn.number_ops[s] * &p;
            }
            ws.x.push(xt);
            let mut yt = ComplexMatrix::zeros(d, d);
            for s in 0..t {
                let p = product(b, s + 1, t, d);
                yt += &p * &dn.number_ops[s] * p.adjoint();
            }
            ws.y.push(yt);
        }
        Ok(ws)
    }

    /// Gradients of `ln(1 - F)` and of `P = sum_t (nbar_t + nbar'_t) / 2` from
    /// the Hilbert-Schmidt formulas.
    pub fn gradients(&self, space: &FockSpace<T>, seq: &BlockSequence<T>) -> Result<(Gradient<T>, Gradient<T>)> {
        let d = space.dim();
        let nt = seq.len();
        let k = space.generator();
        let n = space.number();
        let two = c(T::lit(2.0));
        let half = T::lit(0.5);
        let mut overlap = Gradient::zeros(d, nt);
        let mut photon = Gradient::zeros(d, nt);
        for t in 0..nt {
            let blk = &seq.blocks[t];
            let disp = space.displacement(blk.alpha);
            let b = space.block(blk.alpha, &blk.theta);
            let db_alpha = &b * &k - &k * &b;
            let px = &self.x[t] * &b * &self.rho_x[t] * two;
            let py = &self.rho_y[t] * &b * &self.y[t] * two;
            let direct = disp.adjoint() * &n * &k * &disp;
            let mut ga = hs_inner(&self.rho_x[t], &direct)?.re * T::lit(2.0);
            ga += hs_inner(&self.rho_y[t], &direct)?.re * T::lit(2.0);
            ga += hs_inner(&px, &db_alpha)?.re + hs_inner(&py, &db_alpha)?.re;
            let s = overlap.dim + 1;
            overlap.values[t * s] = hs_inner(&self.g[t], &db_alpha)?.re;
            photon.values[t * s] = ga * half;
            // <A, dB/dtheta_n> = i e^{i theta_n} <n| D A^dagger D^dagger |n>
            let phasors = blk.theta.phasors();
            let i_unit = Complex::new(T::zero(), T::one());
            let sand = |a: &ComplexMatrix<T>| &disp * a.adjoint() * disp.adjoint();
            let sg = sand(&self.g[t]);
            let sp = sand(&(px + py));
            for m in 0..d {
                let f = i_unit * phasors[m];
                overlap.values[t * s + 1 + m] = (f * sg[(m, m)]).re;
                photon.values[t * s + 1 + m] = (f * sp[(m, m)]).re * half;
            }
        }
        Ok((overlap, photon))
    }
}
