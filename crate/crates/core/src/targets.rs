//! Target isometries `V = sum_l |y_l><x_l|` for every supported problem family.

use nalgebra::SymmetricEigen;
use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{fock_state, ComplexMatrix, StateVector};
use crate::scalar::Real;

/// An isometry given by orthonormal input states `x_l` and output states `y_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetOperation<T: Real> {
    dim: usize,
    inputs: Vec<StateVector<T>>,
    outputs: Vec<StateVector<T>>,
}

fn ortho_tol<T: Real>() -> f64 {
    (1e4 * T::default_epsilon().as_f64()).max(1e-10)
}

fn check_orthonormal<T: Real>(states: &[StateVector<T>], what: &str) -> Result<()> {
    let tol = ortho_tol::<T>();
    for (j, a) in states.iter().enumerate() {
        for (k, b) in states.iter().enumerate().skip(j) {
            let ip = a.dotc(b);
            let expect = if j == k { 1.0 } else { 0.0 };
            let err = Complex::new(ip.re.as_f64() - expect, ip.im.as_f64()).norm();
            if err > tol {
                return Err(Error::InvalidArgument(format!(
                    "{what} states {j} and {k} are not orthonormal (deviation {err:e})"
                )));
            }
        }
    }
    Ok(())
}

impl<T: Real> TargetOperation<T> {
    pub fn new(dim: usize, inputs: Vec<StateVector<T>>, outputs: Vec<StateVector<T>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimTooSmall(dim));
        }
        if inputs.is_empty() || inputs.len() != outputs.len() {
            return Err(Error::InvalidArgument(format!(
                "need matching nonempty bases, got {} inputs and {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        for s in inputs.iter().chain(&outputs) {
            if s.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: s.len() });
            }
            if s.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                return Err(Error::NonFinite("target basis state"));
            }
        }
        check_orthonormal(&inputs, "input")?;
        check_orthonormal(&outputs, "output")?;
        Ok(Self { dim, inputs, outputs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Logical dimension `L`.
    pub fn logical_dim(&self) -> usize {
        self.inputs.len()
    }

    pub fn inputs(&self) -> &[StateVector<T>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[StateVector<T>] {
        &self.outputs
    }

    /// Dense `V`.
    pub fn matrix(&self) -> ComplexMatrix<T> {
        let mut v = ComplexMatrix::zeros(self.dim, self.dim);
        for (x, y) in self.inputs.iter().zip(&self.outputs) {
            v += y * x.adjoint();
        }
        v
    }

    /// The inverse isometry `V^dagger` (inputs and outputs swapped).
    pub fn inverse(&self) -> Self {
        Self { dim: self.dim, inputs: self.outputs.clone(), outputs: self.inputs.clone() }
    }

    pub fn cast<U: Real>(&self) -> TargetOperation<U> {
        let conv = |v: &StateVector<T>| v.map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64())));
        TargetOperation {
            dim: self.dim,
            inputs: self.inputs.iter().map(conv).collect(),
            outputs: self.outputs.iter().map(conv).collect(),
        }
    }
}

fn c<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::lit(re), T::lit(im))
}

fn check_unitary<T: Real>(v: &ComplexMatrix<T>) -> Result<()> {
    if !v.is_square() {
        return Err(Error::InvalidArgument(format!("{}x{} matrix is not square", v.nrows(), v.ncols())));
    }
    let n = v.nrows();
    let prod = v.adjoint() * v;
    let mut err = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { 1.0 } else { 0.0 };
            let z = prod[(i, j)];
            err = err.max(Complex::new(z.re.as_f64() - expect, z.im.as_f64()).norm());
        }
    }
    if err > ortho_tol::<T>() {
        return Err(Error::NotUnitary(err));
    }
    Ok(())
}

fn check_levels(levels: &[usize], dim: usize) -> Result<()> {
    for (i, &l) in levels.iter().enumerate() {
        if l >= dim {
            return Err(Error::InvalidLevels(format!("level {l} outside dim {dim}")));
        }
        if levels[..i].contains(&l) {
            return Err(Error::InvalidLevels(format!("level {l} appears twice")));
        }
    }
    Ok(())
}

/// `V = sum_{mn} v_{mn} |levels[m]><levels[n]|`.
pub fn fock_subspace_unitary<T: Real>(v: &ComplexMatrix<T>, levels: &[usize], dim: usize) -> Result<TargetOperation<T>> {
    check_unitary(v)?;
    if v.nrows() != levels.len() {
        return Err(Error::DimMismatch { expected: levels.len(), got: v.nrows() });
    }
    check_levels(levels, dim)?;
    let inputs: Vec<_> = levels.iter().map(|&l| fock_state(l, dim)).collect();
    let outputs = (0..levels.len())
        .map(|n| {
            let mut y = StateVector::zeros(dim);
            for (m, &l) in levels.iter().enumerate() {
                y[l] = v[(m, n)];
            }
            y
        })
        .collect();
    TargetOperation::new(dim, inputs, outputs)
}

/// Permutation matrix with `v_{p(n), n} = 1`.
pub fn permutation_matrix<T: Real>(p: &[usize]) -> Result<ComplexMatrix<T>> {
    check_levels(p, p.len())?;
    let mut v = ComplexMatrix::zeros(p.len(), p.len());
    for (n, &m) in p.iter().enumerate() {
        v[(m, n)] = Complex::new(T::one(), T::zero());
    }
    Ok(v)
}

/// Uniformly random permutation of `0..n`, deterministic in `seed`.
pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    p
}

/// Eigenvector matrix of a random Hermitian matrix with standard-normal real
/// and imaginary parts, symmetrized. Columns are ordered by ascending
/// eigenvalue and each is phased so its largest-magnitude entry is real
/// positive. Deterministic in `seed` (ChaCha8).
pub fn random_unitary<T: Real>(n: usize, seed: u64) -> Result<ComplexMatrix<T>> {
    if n < 1 {
        return Err(Error::InvalidArgument("random unitary needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Complex<f64>> = (0..n * n)
        .map(|_| Complex::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
        .collect();
    let h = ComplexMatrix::<f64>::from_fn(n, n, |i, j| (raw[i * n + j] + raw[j * n + i].conj()) * 0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut u = ComplexMatrix::<T>::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let mut big = 0;
        for i in 1..n {
            if v[i].norm() > v[big].norm() {
                big = i;
            }
        }
        let phase = v[big].conj() / v[big].norm();
        for i in 0..n {
            let z = v[i] * phase;
            u[(i, col)] = c(z.re, z.im);
        }
    }
    Ok(u)
}

/// Binomial codewords `(|0> + sqrt3 |6>)/2` and `(sqrt3 |3> + |9>)/2`.
pub fn binomial_codewords<T: Real>(dim: usize) -> Result<(StateVector<T>, StateVector<T>)> {
    if dim < 10 {
        return Err(Error::InvalidLevels(format!("binomial code needs dim >= 10, got {dim}")));
    }
    let s3 = 3f64.sqrt() / 2.0;
    let mut b0 = StateVector::zeros(dim);
    b0[0] = c(0.5, 0.0);
    b0[6] = c(s3, 0.0);
    let mut b1 = StateVector::zeros(dim);
    b1[3] = c(s3, 0.0);
    b1[9] = c(0.5, 0.0);
    Ok((b0, b1))
}

/// Coefficients `(alpha, beta)` of the "odd superposition" state.
pub fn odd_superposition() -> (Complex<f64>, Complex<f64>) {
    let s = 0.72104f64.sin();
    let a = ((1.0 + s) / 2.0).sqrt();
    let b = Complex::from_polar(((1.0 - s) / 2.0).sqrt(), -1.27275);
    (Complex::new(a, 0.0), b)
}

/// Preparation of `alpha |b0> + beta |b1>` from the vacuum.
pub fn state_prep_target<T: Real>(alpha: Complex<T>, beta: Complex<T>, dim: usize) -> Result<TargetOperation<T>> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm.as_f64() - 1.0).abs() > ortho_tol::<T>() {
        return Err(Error::NotNormalized(norm.as_f64()));
    }
    let (b0, b1) = binomial_codewords::<T>(dim)?;
    let y = b0 * alpha + b1 * beta;
    TargetOperation::new(dim, vec![fock_state(0, dim)], vec![y])
}

/// Error syndrome of the binomial code: no loss, one loss, two losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Syndrome {
    Identity,
    A,
    A2,
}

/// Photon-loss exposure `Gamma t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub gamma_t: f64,
}

impl DecayParams {
    pub fn new(gamma_t: f64) -> Result<Self> {
        if !gamma_t.is_finite() {
            return Err(Error::NonFinite("decay gamma_t"));
        }
        if gamma_t < 0.0 {
            return Err(Error::InvalidArgument(format!("decay gamma_t = {gamma_t} is negative")));
        }
        Ok(Self { gamma_t })
    }
}

/// Normalized decayed codeword `alpha |b0> + beta |b1>` under `syndrome`
/// after exposure `gamma_t`.
pub fn decayed_state<T: Real>(
    syndrome: Syndrome,
    gamma_t: f64,
    alpha: Complex<f64>,
    beta: Complex<f64>,
    dim: usize,
) -> Result<StateVector<T>> {
    if dim < 10 {
        return Err(Error::InvalidLevels(format!("binomial code needs dim >= 10, got {dim}")));
    }
    let e = |k: f64| (-k * gamma_t).exp();
    // (level, coefficient) pairs for the alpha and beta parts
    let (pa, pb): (Vec<(usize, f64)>, Vec<(usize, f64)>) = match syndrome {
        Syndrome::Identity => (
            vec![(0, 1.0), (6, 3f64.sqrt() * e(6.0))],
            vec![(3, 3f64.sqrt() * e(3.0)), (9, e(9.0))],
        ),
        Syndrome::A => (vec![(5, 2f64.sqrt() * e(3.0))], vec![(2, 1.0), (8, e(6.0))]),
        Syndrome::A2 => (vec![(4, 5f64.sqrt() * e(3.0))], vec![(1, 1.0), (7, 2.0 * e(6.0))]),
    };
    let weight = |p: &[(usize, f64)]| p.iter().map(|&(_, x)| x * x).sum::<f64>();
    let norm = (alpha.norm_sqr() * weight(&pa) + beta.norm_sqr() * weight(&pb)).sqrt();
    let mut v = StateVector::zeros(dim);
    for &(n, x) in &pa {
        let z = alpha * x / norm;
        v[n] += c::<T>(z.re, z.im);
    }
    for &(n, x) in &pb {
        let z = beta * x / norm;
        v[n] += c::<T>(z.re, z.im);
    }
    Ok(v)
}

/// Recovery map from the decayed logical states under `syndrome` back to
/// the undecayed codewords.
pub fn recovery_target<T: Real>(syndrome: Syndrome, decay: DecayParams, dim: usize) -> Result<TargetOperation<T>> {
    let decay = DecayParams::new(decay.gamma_t)?;
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let x0 = decayed_state(syndrome, decay.gamma_t, one, zero, dim)?;
    let x1 = decayed_state(syndrome, decay.gamma_t, zero, one, dim)?;
    let (b0, b1) = binomial_codewords(dim)?;
    TargetOperation::new(dim, vec![x0, x1], vec![b0, b1])
}

/// Two-level logical code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Code {
    /// Codewords `|b0>`, `|b1>`.
    Binomial,
    /// Codewords `|0>`, `|1>`.
    Trivial,
}

/// Named single-qubit gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogicalGate {
    Identity,
    Hadamard,
    PauliX,
    PauliY,
    SqrtPauliX,
}

impl LogicalGate {
    pub fn matrix<T: Real>(self) -> ComplexMatrix<T> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let entries: [(f64, f64); 4] = match self {
            LogicalGate::Identity => [(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)],
            LogicalGate::Hadamard => [(h, 0.0), (h, 0.0), (h, 0.0), (-h, 0.0)],
            LogicalGate::PauliX => [(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 0.0)],
            LogicalGate::PauliY => [(0.0, 0.0), (0.0, -1.0), (0.0, 1.0), (0.0, 0.0)],
            LogicalGate::SqrtPauliX => [(0.5, -0.5), (0.5, 0.5), (0.5, 0.5), (0.5, -0.5)],
        };
        ComplexMatrix::from_fn(2, 2, |i, j| {
            let (re, im) = entries[2 * i + j];
            c(re, im)
        })
    }
}

/// `V = sum_{jk} v_{jk} |c_j><c_k|` for the codewords `c` of `code`.
pub fn logical_op_target<T: Real>(v: &ComplexMatrix<T>, code: Code, dim: usize) -> Result<TargetOperation<T>> {
    check_unitary(v)?;
    if v.nrows() != 2 {
        return Err(Error::DimMismatch { expected: 2, got: v.nrows() });
    }
    let words = match code {
        Code::Binomial => {
            let (b0, b1) = binomial_codewords(dim)?;
            [b0, b1]
        }
        Code::Trivial => {
            if dim < 2 {
                return Err(Error::DimTooSmall(dim));
            }
            [fock_state(0, dim), fock_state(1, dim)]
        }
    };
    let outputs = (0..2).map(|k| &words[0] * v[(0, k)] + &words[1] * v[(1, k)]).collect();
    TargetOperation::new(dim, words.to_vec(), outputs)
}

/// `V = sum_{n<10} |9-n><n|`.
pub fn inversion_target<T: Real>(dim: usize) -> Result<TargetOperation<T>> {
    let p: Vec<usize> = (0..10).map(|n| 9 - n).collect();
    fock_subspace_unitary(&permutation_matrix(&p)?, &(0..10).collect::<Vec<_>>(), dim)
}

/// `V = sum_{n<10} |(n+5) mod 10><n|`.
pub fn block_inversion_target<T: Real>(dim: usize) -> Result<TargetOperation<T>> {
    let p: Vec<usize> = (0..10).map(|n| (n + 5) % 10).collect();
    fock_subspace_unitary(&permutation_matrix(&p)?, &(0..10).collect::<Vec<_>>(), dim)
}
