//! Wigner quasi-probability density sampled on a phase-space grid.

use nalgebra::DMatrix;
use num_complex::Complex;

use super::{check_dims, FockSpace, StateBatch, StateVector};
use crate::error::{Error, Result};
use crate::scalar::{cis, Real};

/// Closed interval `[lo, hi]` sampled at `resolution` evenly spaced points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Axis<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    pub fn points(&self, resolution: usize) -> Vec<T> {
        let step = (self.hi - self.lo) / T::lit_usize(resolution - 1);
        (0..resolution).map(|i| self.lo + step * T::lit_usize(i)).collect()
    }
}

/// `W(x, p)` for quadratures with `beta = (x + i p) / sqrt(2)`, normalized so
/// that the integral over `dx dp` is one (vacuum peak `1/pi`).
///
/// Evaluated by the displaced-parity formula `W = (1/pi) <psi| D(beta) Parity
/// D(beta)^dagger |psi>`. Row `i` of the result is `x_i`, column `j` is `p_j`.
pub fn wigner_grid<T: Real>(
    space: &FockSpace<T>,
    psi: &StateVector<T>,
    x_range: Axis<T>,
    p_range: Axis<T>,
    resolution: usize,
) -> Result<DMatrix<T>> {
    check_dims(space.dim(), psi.len())?;
    if resolution < 2 {
        return Err(Error::InvalidArgument(format!("Wigner grid resolution {resolution} < 2")));
    }
    if !(x_range.lo < x_range.hi && p_range.lo < p_range.hi) {
        return Err(Error::InvalidArgument("empty Wigner grid range".into()));
    }
    let d = space.dim();
    let xs = x_range.points(resolution);
    let ps = p_range.points(resolution);
    let frac = T::one() / T::lit(2.0).sqrt();
    let parity: Vec<T> = (0..d).map(|n| if n % 2 == 0 { T::one() } else { -T::one() }).collect();

    let mut out = DMatrix::zeros(resolution, resolution);
    let mut pre = StateBatch::zeros(d, resolution);
    let mut frame = StateBatch::zeros(d, resolution);
    let mut mid = StateBatch::zeros(d, resolution);
    for (i, &x) in xs.iter().enumerate() {
        // D(beta)^dagger = S(rot phi) D(-r) S(-rot phi) with beta = r e^{i phi};
        // the outer SNAP leaves the parity expectation unchanged.
        let mut radii = Vec::with_capacity(resolution);
        for (j, &p) in ps.iter().enumerate() {
            let beta = Complex::new(x * frac, p * frac);
            let r = beta.re.hypot(beta.im);
            let phi = crate::scalar::arg(beta);
            radii.push(r);
            for n in 0..d {
                // S(-rot phi) then P^dagger, ready for the frame transform
                let ph = cis(-phi * T::lit_usize(n)) * ipow_conj::<T>(n);
                pre.set(n, j, psi[n] * ph);
            }
        }
        frame.data.gemm(T::one(), &space.basis_t, &pre.data, T::zero());
        for (j, &r) in radii.iter().enumerate() {
            // D(-r) is diag(e^{i r mu}) in the frame
            for (n, &m) in space.freqs().iter().enumerate() {
                let z = frame.get(n, j) * cis(r * m);
                frame.set(n, j, z);
            }
        }
        mid.data.gemm(T::one(), &space.basis, &frame.data, T::zero());
        for j in 0..resolution {
            out[(i, j)] = mid.weighted_norm2(j, &parity) / T::pi();
        }
    }
    Ok(out)
}

fn ipow_conj<T: Real>(n: usize) -> Complex<T> {
    match n % 4 {
        0 => Complex::new(T::one(), T::zero()),
        1 => Complex::new(T::zero(), -T::one()),
        2 => Complex::new(-T::one(), T::zero()),
        _ => Complex::new(T::zero(), T::one()),
    }
}
