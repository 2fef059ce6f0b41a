//! Conversion between building blocks and the hardware gate interleaving
//! `D(alpha_{T+1}) S(theta_T) D(alpha_T) ... S(theta_1) D(alpha_1)`.

use crate::error::{Error, Result};
use crate::fock::{check_dims, ComplexMatrix, FockSpace, SnapPhases};
use crate::scalar::Real;
use crate::sequence::{Block, BlockSequence};

/// Net displacements below this are treated as zero by [`from_native`].
pub const NET_DISPLACEMENT_TOL: f64 = 1e-12;

/// Interleaved displacements `alpha_1 .. alpha_{T+1}` and SNAP phases
/// `theta_1 .. theta_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NativeSequence<T> {
    dim: usize,
    pub displacements: Vec<T>,
    pub snaps: Vec<SnapPhases<T>>,
}

impl<T: Real> NativeSequence<T> {
    pub fn new(dim: usize, displacements: Vec<T>, snaps: Vec<SnapPhases<T>>) -> Result<Self> {
        let s = Self { dim, displacements, snaps };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::DimTooSmall(self.dim));
        }
        if self.displacements.len() != self.snaps.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "native sequence with {} SNAP gates needs {} displacements, got {}",
                self.snaps.len(),
                self.snaps.len() + 1,
                self.displacements.len()
            )));
        }
        if self.displacements.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("native displacements"));
        }
        for s in &self.snaps {
            check_dims(self.dim, s.dim())?;
            s.validate()?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of SNAP gates.
    pub fn len(&self) -> usize {
        self.snaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snaps.is_empty()
    }

    pub fn net_displacement(&self) -> T {
        self.displacements.iter().fold(T::zero(), |acc, &a| acc + a)
    }

    /// Dense composition of the native gates in application order.
    pub fn unitary(&self, space: &FockSpace<T>) -> Result<ComplexMatrix<T>> {
        check_dims(space.dim(), self.dim)?;
        let mut u = space.displacement(self.displacements[0]);
        for (s, &a) in self.snaps.iter().zip(&self.displacements[1..]) {
            for (n, p) in s.phasors().into_iter().enumerate() {
                u.row_mut(n).iter_mut().for_each(|z| *z *= p);
            }
            u = space.displacement(a) * u;
        }
        Ok(u)
    }
}

/// Native form of a block sequence: block displacements are cumulative sums of
/// native ones, and the final displacement undoes the last block's.
pub fn to_native<T: Real>(seq: &BlockSequence<T>) -> NativeSequence<T> {
    let mut displacements = Vec::with_capacity(seq.len() + 1);
    let mut prev = T::zero();
    for b in &seq.blocks {
        displacements.push(b.alpha - prev);
        prev = b.alpha;
    }
    displacements.push(-prev);
    NativeSequence { dim: seq.dim(), displacements, snaps: seq.blocks.iter().map(|b| b.theta.clone()).collect() }
}

/// Block form of a native sequence. A nonzero net displacement `a` is absorbed
/// by appending `B(a/4, rot(pi))` and `B(-a/4, rot(pi))`.
pub fn from_native<T: Real>(native: &NativeSequence<T>) -> Result<BlockSequence<T>> {
    native.validate()?;
    let d = native.dim;
    let mut blocks = Vec::with_capacity(native.len() + 2);
    let mut cum = T::zero();
    for (s, &a) in native.snaps.iter().zip(&native.displacements) {
        cum += a;
        blocks.push(Block::new(cum, s.clone()));
    }
    let net = cum + native.displacements[native.len()];
    if net.abs().as_f64() > NET_DISPLACEMENT_TOL {
        let quarter = net / T::lit(4.0);
        let rot = SnapPhases::rotation(T::pi(), d);
        blocks.push(Block::new(quarter, rot.clone()));
        blocks.push(Block::new(-quarter, rot));
    }
    BlockSequence::new(d, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::reliable_levels;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_diff_on(a: &ComplexMatrix<f64>, b: &ComplexMatrix<f64>, k: usize) -> f64 {
        let mut m = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        m
    }

    fn random_blocks(rng: &mut ChaCha8Rng, d: usize, t: usize) -> BlockSequence<f64> {
        let blocks = (0..t)
            .map(|_| {
                let th = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
                Block::new(rng.random_range(-2.0..2.0), SnapPhases::new(th).unwrap())
            })
            .collect();
        BlockSequence::new(d, blocks).unwrap()
    }

    #[test]
    fn single_block() {
        let th = SnapPhases::new(vec![0.1, 0.2, 0.3]).unwrap();
        let seq = BlockSequence::new(3, vec![Block::new(0.7, th.clone())]).unwrap();
        let n = to_native(&seq);
        assert_eq!(n.displacements, vec![0.7, -0.7]);
        assert_eq!(n.snaps, vec![th]);
    }

    #[test]
    fn native_matches_blocks() {
        let d = 40;
        let space = FockSpace::<f64>::new(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for t in 1..5 {
            let seq = random_blocks(&mut rng, d, t);
            let n = to_native(&seq);
            assert!(n.net_displacement().abs() < 1e-12);
            let diff = max_diff_on(&n.unitary(&space).unwrap(), &space.sequence_unitary(&seq), d);
            assert!(diff < 1e-12, "{diff}");
            let back = from_native(&n).unwrap();
            assert_eq!(back.len(), t);
            for (a, b) in back.blocks.iter().zip(&seq.blocks) {
                assert!((a.alpha - b.alpha).abs() < 1e-14);
                assert_eq!(a.theta, b.theta);
            }
        }
    }

    #[test]
    fn pure_displacement_uses_two_parity_blocks() {
        let d = 100;
        let space = FockSpace::<f64>::new(d).unwrap();
        let n = NativeSequence::<f64>::new(d, vec![1.3], vec![]).unwrap();
        let seq = from_native(&n).unwrap();
        assert_eq!(seq.len(), 2);
        assert!((seq.blocks[0].alpha - 0.325).abs() < 1e-15);
        assert!((seq.blocks[1].alpha + 0.325).abs() < 1e-15);
        let k = reliable_levels(1.3, d);
        assert!(max_diff_on(&space.sequence_unitary(&seq), &space.displacement(1.3), k) < 1e-9);
    }

    #[test]
    fn nonzero_net_displacement_round_trip() {
        let d = 60;
        let space = FockSpace::<f64>::new(d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in 1..4 {
            let disp: Vec<f64> = (0..=t).map(|_| rng.random_range(-1.0..1.0)).collect();
            let snaps = (0..t)
                .map(|_| SnapPhases::new((0..d).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap())
                .collect();
            let n = NativeSequence::new(d, disp, snaps).unwrap();
            let seq = from_native(&n).unwrap();
            assert_eq!(seq.len(), t + 2);
            let k = reliable_levels(2.0, d);
            assert!(max_diff_on(&space.sequence_unitary(&seq), &n.unitary(&space).unwrap(), k) < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(NativeSequence::<f64>::new(3, vec![0.0], vec![SnapPhases::zeros(3)]).is_err());
        assert!(NativeSequence::<f64>::new(3, vec![0.0, 0.0], vec![SnapPhases::zeros(4)]).is_err());
        assert!(NativeSequence::<f64>::new(3, vec![f64::NAN], vec![]).is_err());
    }
}
