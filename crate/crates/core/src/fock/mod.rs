//! Operators and states on the truncated Fock space `|0>, ..., |d-1>`.
//!
//! Displacements are generated by the truncated `K = a^dagger - a`. With
//! `P = diag(i^n)` one has `P^dagger K P = -i J`, where `J` is the real
//! symmetric tridiagonal matrix with off-diagonal `sqrt(n+1)`. Diagonalizing
//! `J = O diag(mu) O^T` once per dimension gives
//!
//! ```text
//! D(alpha) = exp(alpha K) = P O diag(e^{-i alpha mu}) O^T P^dagger
//! ```
//!
//! for every real `alpha`. In the *frame* coordinates `phi = O^T P^dagger psi`
//! a displacement is diagonal, so a building block costs two real GEMMs.

mod batch;
pub mod wigner;

pub use batch::StateBatch;
pub use wigner::{wigner_grid, Axis};

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cis, Real};
use crate::sequence::{Block, BlockSequence};

pub type ComplexMatrix<T> = DMatrix<Complex<T>>;
pub type StateVector<T> = DVector<Complex<T>>;

/// SNAP phases `theta^(n)`, one per Fock level.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapPhases<T>(Vec<T>);

impl<T: Real> SnapPhases<T> {
    pub fn new(phases: Vec<T>) -> Result<Self> {
        let s = Self(phases);
        s.validate()?;
        Ok(s)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![T::zero(); dim])
    }

    /// `theta^(n) = n * phi`, the phase pattern that rotates phase space by `phi`.
    pub fn rotation(phi: T, dim: usize) -> Self {
        Self((0..dim).map(|n| T::lit_usize(n) * phi).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("SNAP phases"))
        }
    }

    /// Every entry wrapped into `(-pi, pi]`.
    pub fn canonical(&self) -> Self {
        Self(self.0.iter().map(|&x| crate::scalar::wrap_phase(x)).collect())
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&x| -x).collect())
    }

    /// `e^{i theta^(n)}` for every level.
    pub fn phasors(&self) -> Vec<Complex<T>> {
        self.0.iter().map(|&x| cis(x)).collect()
    }

    pub fn cast<U: Real>(&self) -> SnapPhases<U> {
        SnapPhases(self.0.iter().map(|x| U::lit(x.as_f64())).collect())
    }
}

/// Largest `|alpha|` for which displacements on `dim` levels are considered
/// accurate on the low-Fock sector (6 for `dim = 100`).
pub fn displacement_bound(dim: usize) -> f64 {
    0.6 * (dim as f64).sqrt()
}

/// Number of low Fock levels `n < d - 8 ceil(alpha^2) - 8` on which the
/// truncated displacement agrees with the untruncated one.
pub fn reliable_levels(alpha: f64, dim: usize) -> usize {
    let cut = 8 * (alpha * alpha).ceil() as usize + 8;
    dim.saturating_sub(cut)
}

/// Validates a displacement amplitude. Beyond [`displacement_bound`] this
/// logs a warning, or errors when `strict`.
pub fn check_displacement(alpha: f64, dim: usize, strict: bool) -> Result<()> {
    if !alpha.is_finite() {
        return Err(Error::NonFinite("displacement amplitude"));
    }
    if dim < 2 {
        return Err(Error::DimTooSmall(dim));
    }
    let bound = displacement_bound(dim);
    if alpha.abs() > bound {
        if strict {
            return Err(Error::UnsafeDisplacement { alpha, bound, dim });
        }
        log::warn!("displacement |alpha| = {alpha} exceeds safety bound {bound} for dim {dim}");
    }
    Ok(())
}

/// Cached eigenbasis of the displacement generator for one truncation.
#[derive(Debug, Clone)]
pub struct FockSpace<T: Real> {
    dim: usize,
    basis: DMatrix<T>,
    basis_t: DMatrix<T>,
    freqs: Vec<T>,
    ladder: Vec<T>,
    levels: Vec<T>,
}

impl<T: Real> FockSpace<T> {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimTooSmall(dim));
        }
        let ladder: Vec<T> = (0..dim - 1).map(|n| T::lit_usize(n + 1).sqrt()).collect();
        let mut j = DMatrix::<T>::zeros(dim, dim);
        for (n, &s) in ladder.iter().enumerate() {
            j[(n, n + 1)] = s;
            j[(n + 1, n)] = s;
        }
        let eig = SymmetricEigen::new(j);
        let basis = eig.eigenvectors;
        let basis_t = basis.transpose();
        Ok(Self {
            dim,
            basis,
            basis_t,
            freqs: eig.eigenvalues.iter().copied().collect(),
            ladder,
            levels: (0..dim).map(T::lit_usize).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues `mu` of the generator in frame coordinates.
    pub fn freqs(&self) -> &[T] {
        &self.freqs
    }

    /// Photon numbers `0, 1, ..., d-1`.
    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    /// `i^n`.
    #[inline]
    fn ipow(n: usize) -> Complex<T> {
        match n % 4 {
            0 => Complex::new(T::one(), T::zero()),
            1 => Complex::new(T::zero(), T::one()),
            2 => Complex::new(-T::one(), T::zero()),
            _ => Complex::new(T::zero(), -T::one()),
        }
    }

    /// Fock coordinates to frame coordinates, `O^T P^dagger psi`.
    pub fn to_frame(&self, psi: &StateVector<T>) -> StateVector<T> {
        let b = self.batch_to_frame(std::slice::from_ref(psi));
        b.column(0)
    }

    /// Frame coordinates to Fock coordinates, `P O phi`.
    pub fn from_frame(&self, phi: &StateVector<T>) -> StateVector<T> {
        let mut b = StateBatch::from_columns(self.dim, std::slice::from_ref(phi));
        let mut out = StateBatch::zeros(self.dim, 1);
        self.batch_from_frame(&mut b, &mut out);
        out.column(0)
    }

    pub fn batch_to_frame(&self, states: &[StateVector<T>]) -> StateBatch<T> {
        let mut pre = StateBatch::zeros(self.dim, states.len());
        for (j, s) in states.iter().enumerate() {
            assert_eq!(s.len(), self.dim, "state dimension");
            for n in 0..self.dim {
                pre.set(n, j, s[n] * Self::ipow(n).conj());
            }
        }
        let mut out = StateBatch::zeros(self.dim, states.len());
        out.data.gemm(T::one(), &self.basis_t, &pre.data, T::zero());
        out
    }

    /// Writes `P O phi` of every column of `frame` into `out`.
    pub fn batch_from_frame(&self, frame: &StateBatch<T>, out: &mut StateBatch<T>) {
        out.data.gemm(T::one(), &self.basis, &frame.data, T::zero());
        for n in 0..self.dim {
            let p = Self::ipow(n);
            for j in 0..out.count() {
                let z = out.get(n, j) * p;
                out.set(n, j, z);
            }
        }
    }

    /// Applies the block `B(alpha, theta)` (or its adjoint) to every column of
    /// `states` in frame coordinates.
    ///
    /// `mid` receives `P^dagger D(alpha) psi` for each column, i.e. the Fock
    /// amplitudes (up to the fixed phases `i^n`) of the state while the SNAP
    /// gate acts. `scratch` must have the shape of `states`.
    pub fn apply_block(
        &self,
        alpha: T,
        phasors: &[Complex<T>],
        adjoint: bool,
        states: &mut StateBatch<T>,
        mid: &mut StateBatch<T>,
        scratch: &mut StateBatch<T>,
    ) {
        states.rotate(&self.freqs, -alpha);
        mid.data.gemm(T::one(), &self.basis, &states.data, T::zero());
        scratch.data.copy_from(&mid.data);
        scratch.scale_rows(phasors, adjoint);
        states.data.gemm(T::one(), &self.basis_t, &scratch.data, T::zero());
        states.rotate(&self.freqs, alpha);
    }

    /// `mid <- P^dagger D(alpha) psi` without applying the SNAP gate.
    pub fn displaced_mid(&self, alpha: T, states: &StateBatch<T>, mid: &mut StateBatch<T>, scratch: &mut StateBatch<T>) {
        scratch.data.copy_from(&states.data);
        scratch.rotate(&self.freqs, -alpha);
        mid.data.gemm(T::one(), &self.basis, &scratch.data, T::zero());
    }

    /// Maps Fock-like `mid` amplitudes back through `D(alpha)^dagger` into frame
    /// coordinates: `out <- e^{i alpha mu} O^T mid`.
    pub fn undisplace_mid(&self, alpha: T, mid: &StateBatch<T>, out: &mut StateBatch<T>) {
        out.data.gemm(T::one(), &self.basis_t, &mid.data, T::zero());
        out.rotate(&self.freqs, alpha);
    }

    /// `(-i J) u` for a Fock-like column `u` (that is, `P^dagger K P u`).
    pub fn generator_mid(&self, u: &StateBatch<T>, j: usize) -> Vec<Complex<T>> {
        let d = self.dim;
        let mut out = vec![Complex::new(T::zero(), T::zero()); d];
        for n in 0..d {
            let mut acc = Complex::new(T::zero(), T::zero());
            if n > 0 {
                acc += u.get(n - 1, j) * self.ladder[n - 1];
            }
            if n + 1 < d {
                acc += u.get(n + 1, j) * self.ladder[n];
            }
            // multiply by -i
            out[n] = Complex::new(acc.im, -acc.re);
        }
        out
    }

    /// Dense `D(alpha)` for real `alpha`.
    pub fn displacement(&self, alpha: T) -> ComplexMatrix<T> {
        let d = self.dim;
        let phases: Vec<Complex<T>> = self.freqs.iter().map(|&m| cis(-alpha * m)).collect();
        // O diag(phases) O^T, built from real and imaginary parts separately
        let mut scaled_re = self.basis.clone();
        let mut scaled_im = self.basis.clone();
        for (c, p) in phases.iter().enumerate() {
            scaled_re.column_mut(c).scale_mut(p.re);
            scaled_im.column_mut(c).scale_mut(p.im);
        }
        let re = &scaled_re * &self.basis_t;
        let im = &scaled_im * &self.basis_t;
        ComplexMatrix::from_fn(d, d, |m, n| {
            Complex::new(re[(m, n)], im[(m, n)]) * Self::ipow(m) * Self::ipow(n).conj()
        })
    }

    pub fn snap(&self, theta: &SnapPhases<T>) -> ComplexMatrix<T> {
        build_snap(theta)
    }

    /// Dense `B(alpha, theta) = D(alpha)^dagger S(theta) D(alpha)`.
    pub fn block(&self, alpha: T, theta: &SnapPhases<T>) -> ComplexMatrix<T> {
        assert_eq!(theta.dim(), self.dim, "SNAP phase dimension");
        let disp = self.displacement(alpha);
        let mut sd = disp.clone();
        for (n, p) in theta.phasors().into_iter().enumerate() {
            sd.row_mut(n).iter_mut().for_each(|z| *z *= p);
        }
        disp.adjoint() * sd
    }

    /// Dense truncated `K = a^dagger - a`.
    pub fn generator(&self) -> ComplexMatrix<T> {
        let d = self.dim;
        let mut k = ComplexMatrix::zeros(d, d);
        for (n, &s) in self.ladder.iter().enumerate() {
            k[(n + 1, n)] = Complex::new(s, T::zero());
            k[(n, n + 1)] = Complex::new(-s, T::zero());
        }
        k
    }

    /// Dense number operator.
    pub fn number(&self) -> ComplexMatrix<T> {
        ComplexMatrix::from_diagonal(&DVector::from_iterator(
            self.dim,
            self.levels.iter().map(|&n| Complex::new(n, T::zero())),
        ))
    }

    /// Dense product `B_T ... B_1`.
    pub fn sequence_unitary(&self, seq: &BlockSequence<T>) -> ComplexMatrix<T> {
        let mut u = ComplexMatrix::identity(self.dim, self.dim);
        for b in &seq.blocks {
            u = self.block(b.alpha, &b.theta) * u;
        }
        u
    }

    /// Applies `B_T ... B_1` to `psi` with matrix-vector work only.
    pub fn apply_sequence(&self, seq: &BlockSequence<T>, psi: &StateVector<T>) -> Result<StateVector<T>> {
        check_dims(self.dim, seq.dim())?;
        check_dims(self.dim, psi.len())?;
        if seq.is_empty() {
            return Ok(psi.clone());
        }
        let mut states = self.batch_to_frame(std::slice::from_ref(psi));
        let mut mid = StateBatch::zeros(self.dim, 1);
        let mut scratch = StateBatch::zeros(self.dim, 1);
        for Block { alpha, theta } in &seq.blocks {
            self.apply_block(*alpha, &theta.phasors(), false, &mut states, &mut mid, &mut scratch);
        }
        let mut out = StateBatch::zeros(self.dim, 1);
        self.batch_from_frame(&states, &mut out);
        Ok(out.column(0))
    }
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimMismatch { expected, got })
    }
}

/// `D(alpha) = exp(alpha (a^dagger - a))` on `dim` levels, real `alpha`.
pub fn build_displacement<T: Real>(alpha: T, dim: usize) -> Result<ComplexMatrix<T>> {
    check_displacement(alpha.as_f64(), dim, false)?;
    Ok(FockSpace::new(dim)?.displacement(alpha))
}

/// `D(beta) = exp(beta a^dagger - conj(beta) a)` for complex `beta`, computed by
/// diagonalizing the Hermitian generator `i (beta a^dagger - conj(beta) a)`.
///
/// Independent of the real-amplitude path in [`FockSpace`].
pub fn build_displacement_complex<T: Real>(beta: Complex<T>, dim: usize) -> Result<ComplexMatrix<T>> {
    if !(beta.re.is_finite() && beta.im.is_finite()) {
        return Err(Error::NonFinite("displacement amplitude"));
    }
    if dim < 2 {
        return Err(Error::DimTooSmall(dim));
    }
    let i = Complex::new(T::zero(), T::one());
    let mut h = ComplexMatrix::<T>::zeros(dim, dim);
    for n in 0..dim - 1 {
        let s = T::lit_usize(n + 1).sqrt();
        // a^dagger_{n+1,n} = sqrt(n+1), a_{n,n+1} = sqrt(n+1)
        h[(n + 1, n)] = i * beta * s;
        h[(n, n + 1)] = -i * beta.conj() * s;
    }
    let eig = SymmetricEigen::new(h);
    let w = eig.eigenvectors;
    let mut scaled = w.clone();
    for (c, &e) in eig.eigenvalues.iter().enumerate() {
        let p = cis(-e);
        scaled.column_mut(c).iter_mut().for_each(|z| *z *= p);
    }
    Ok(scaled * w.adjoint())
}

/// `S(theta) = sum_n e^{i theta^(n)} |n><n|`.
pub fn build_snap<T: Real>(theta: &SnapPhases<T>) -> ComplexMatrix<T> {
    ComplexMatrix::from_diagonal(&DVector::from_vec(theta.phasors()))
}

/// `B(alpha, theta) = D(alpha)^dagger S(theta) D(alpha)`.
pub fn build_block<T: Real>(alpha: T, theta: &SnapPhases<T>) -> Result<ComplexMatrix<T>> {
    theta.validate()?;
    check_displacement(alpha.as_f64(), theta.dim(), false)?;
    Ok(FockSpace::new(theta.dim())?.block(alpha, theta))
}

/// Hilbert-Schmidt product `tr[a^dagger b]`.
pub fn hs_inner<T: Real>(a: &ComplexMatrix<T>, b: &ComplexMatrix<T>) -> Result<Complex<T>> {
    if a.shape() != b.shape() {
        return Err(Error::DimMismatch { expected: a.nrows(), got: b.nrows() });
    }
    Ok(a.iter().zip(b.iter()).fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y))
}

/// Sum of singular values.
pub fn trace_norm<T: Real>(a: &ComplexMatrix<T>) -> Result<T> {
    if a.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite("matrix entries"));
    }
    let svd = SVD::try_new(a.clone(), false, false, T::default_epsilon(), 0).ok_or(Error::SvdFailed)?;
    Ok(svd.singular_values.iter().fold(T::zero(), |acc, &s| acc + s))
}

/// `B_T ... B_1 |psi>`.
pub fn apply_sequence<T: Real>(seq: &BlockSequence<T>, psi: &StateVector<T>) -> Result<StateVector<T>> {
    FockSpace::new(seq.dim())?.apply_sequence(seq, psi)
}

/// Fock basis vector `|n>`.
pub fn fock_state<T: Real>(n: usize, dim: usize) -> StateVector<T> {
    let mut v = StateVector::zeros(dim);
    v[n] = Complex::new(T::one(), T::zero());
    v
}

#[cfg(test)]
mod tests;
