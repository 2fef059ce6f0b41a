use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

use crate::scalar::Real;

/// `k` complex column vectors stored as a real `d x 2k` matrix: real parts in
/// columns `0..k`, imaginary parts in `k..2k`. The split layout lets every
/// multiplication by the real displacement eigenbasis be one real GEMM.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBatch<T: Real> {
    pub(crate) data: DMatrix<T>,
    k: usize,
}

impl<T: Real> StateBatch<T> {
    pub fn zeros(dim: usize, k: usize) -> Self {
        Self { data: DMatrix::zeros(dim, 2 * k), k }
    }

    pub fn from_columns(dim: usize, cols: &[DVector<Complex<T>>]) -> Self {
        let mut b = Self::zeros(dim, cols.len());
        for (j, c) in cols.iter().enumerate() {
            b.set_column(j, c);
        }
        b
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Number of complex columns.
    #[inline]
    pub fn count(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, n: usize, j: usize) -> Complex<T> {
        Complex::new(self.data[(n, j)], self.data[(n, j + self.k)])
    }

    #[inline]
    pub fn set(&mut self, n: usize, j: usize, z: Complex<T>) {
        self.data[(n, j)] = z.re;
        self.data[(n, j + self.k)] = z.im;
    }

    pub fn column(&self, j: usize) -> DVector<Complex<T>> {
        DVector::from_fn(self.dim(), |n, _| self.get(n, j))
    }

    pub fn set_column(&mut self, j: usize, v: &DVector<Complex<T>>) {
        for n in 0..self.dim() {
            self.set(n, j, v[n]);
        }
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(T::zero());
    }

    pub fn copy_from(&mut self, other: &Self) {
        self.data.copy_from(&other.data);
        self.k = other.k;
    }

    /// Copies complex columns `src_cols` of `other` into columns starting at `dst`.
    pub fn copy_columns_from(&mut self, dst: usize, other: &Self, src: std::ops::Range<usize>) {
        for (o, j) in src.enumerate() {
            self.data.column_mut(dst + o).copy_from(&other.data.column(j));
            self.data.column_mut(dst + o + self.k).copy_from(&other.data.column(j + other.k));
        }
    }

    /// Multiplies row `n` by `e^{i * angle * freqs[n]}`.
    pub fn rotate(&mut self, freqs: &[T], angle: T) {
        if angle == T::zero() {
            return;
        }
        let k = self.k;
        for (n, &f) in freqs.iter().enumerate() {
            let (s, c) = (angle * f).sin_cos();
            for j in 0..k {
                let re = self.data[(n, j)];
                let im = self.data[(n, j + k)];
                self.data[(n, j)] = re * c - im * s;
                self.data[(n, j + k)] = re * s + im * c;
            }
        }
    }

    /// Multiplies row `n` by `phases[n]` (or its conjugate).
    pub fn scale_rows(&mut self, phases: &[Complex<T>], conjugate: bool) {
        let k = self.k;
        for (n, &p) in phases.iter().enumerate() {
            let p = if conjugate { p.conj() } else { p };
            for j in 0..k {
                let re = self.data[(n, j)];
                let im = self.data[(n, j + k)];
                self.data[(n, j)] = re * p.re - im * p.im;
                self.data[(n, j + k)] = re * p.im + im * p.re;
            }
        }
    }

    /// `<self_j | other_m>` over the full column.
    pub fn inner(&self, j: usize, other: &Self, m: usize) -> Complex<T> {
        let (k, ko) = (self.k, other.k);
        let mut re = T::zero();
        let mut im = T::zero();
        for n in 0..self.dim() {
            let (ar, ai) = (self.data[(n, j)], self.data[(n, j + k)]);
            let (br, bi) = (other.data[(n, m)], other.data[(n, m + ko)]);
            re += ar * br + ai * bi;
            im += ar * bi - ai * br;
        }
        Complex::new(re, im)
    }

    /// `<self_j | diag(w) | other_m>`.
    pub fn inner_weighted(&self, j: usize, w: &[T], other: &Self, m: usize) -> Complex<T> {
        let (k, ko) = (self.k, other.k);
        let mut re = T::zero();
        let mut im = T::zero();
        for (n, &wn) in w.iter().enumerate() {
            let (ar, ai) = (self.data[(n, j)], self.data[(n, j + k)]);
            let (br, bi) = (other.data[(n, m)], other.data[(n, m + ko)]);
            re += wn * (ar * br + ai * bi);
            im += wn * (ar * bi - ai * br);
        }
        Complex::new(re, im)
    }

    /// `sum_n w[n] |self_{n j}|^2`.
    pub fn weighted_norm2(&self, j: usize, w: &[T]) -> T {
        let k = self.k;
        w.iter().enumerate().fold(T::zero(), |acc, (n, &wn)| {
            let (r, i) = (self.data[(n, j)], self.data[(n, j + k)]);
            acc + wn * (r * r + i * i)
        })
    }

    pub fn norm2(&self, j: usize) -> T {
        let k = self.k;
        (0..self.dim()).fold(T::zero(), |acc, n| {
            let (r, i) = (self.data[(n, j)], self.data[(n, j + k)]);
            acc + r * r + i * i
        })
    }

    /// `self += other` elementwise.
    pub fn add_assign(&mut self, other: &Self) {
        self.data += &other.data;
    }

    pub fn sub_assign(&mut self, other: &Self) {
        self.data -= &other.data;
    }
}
