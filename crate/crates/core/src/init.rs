//! Greedy hierarchical construction of an initial block sequence.
//!
//! Blocks are inserted one at a time in breadth-first order of their final
//! positions. Each insertion picks the single block that maximizes the mean
//! overlap with everything already placed held fixed.

use std::collections::VecDeque;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{check_dims, ComplexMatrix, FockSpace, SnapPhases, StateBatch};
use crate::objectives::Problem;
use crate::scalar::{arg, cis, modulus, wrap_phase, Real};
use crate::sequence::{Block, BlockSequence};

/// `{-2.0, -1.8, ..., 2.0}`.
pub fn default_alpha_grid() -> Vec<f64> {
    (-10..=10).map(|k| k as f64 / 5.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    /// Number of blocks `T` to place.
    pub length: usize,
    pub alpha_grid: Vec<f64>,
    /// SNAP phases of levels `n >= snap_cutoff` stay fixed during construction.
    pub snap_cutoff: usize,
    /// Always start from a random block.
    pub random_first_block: bool,
    /// Start from a random block when the first greedy step is stuck: real
    /// phases, a gain below `gain_tol`, and a fidelity not already within
    /// `gain_tol` of one.
    pub auto_detect: bool,
    /// A phase within this distance of a multiple of `pi` counts as real.
    pub phase_tol: f64,
    /// A first step gaining less than this counts as stuck.
    pub gain_tol: f64,
    pub seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            length: 1,
            alpha_grid: default_alpha_grid(),
            snap_cutoff: 15,
            random_first_block: false,
            auto_detect: true,
            phase_tol: 1e-9,
            gain_tol: 1e-6,
            seed: 0,
        }
    }
}

impl InitConfig {
    pub fn with_length(length: usize) -> Self {
        Self { length, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length < 1 {
            return Err(Error::InvalidArgument("initialization length must be >= 1".into()));
        }
        if self.alpha_grid.is_empty() {
            return Err(Error::InvalidArgument("alpha grid is empty".into()));
        }
        if self.alpha_grid.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite("alpha grid"));
        }
        if !self.alpha_grid.contains(&0.0) {
            log::warn!("alpha grid lacks 0; greedy insertion is no longer guaranteed to be monotone");
        }
        Ok(())
    }
}

/// Best single block for one effective target.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockChoice<T> {
    pub alpha: T,
    pub theta: SnapPhases<T>,
    /// `(1/L) sum_n |g_n(alpha)|`, the optimum without the phase cutoff.
    pub score: T,
    /// Mean overlap actually reached by `(alpha, theta)`.
    pub fidelity: T,
}

/// One insertion step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitRecord {
    pub step: usize,
    /// Final 1-based position of the inserted block.
    pub slot: usize,
    pub alpha: f64,
    pub fidelity: f64,
    pub random: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitTrace {
    /// Fidelity of the empty sequence.
    pub initial_fidelity: f64,
    pub records: Vec<InitRecord>,
}

/// Final positions `1..=t` in breadth-first order of the balanced binary tree
/// with root `ceil((lo + hi) / 2)`.
pub fn insertion_order(t: usize) -> Result<Vec<usize>> {
    if t < 1 {
        return Err(Error::InvalidArgument("insertion order needs T >= 1".into()));
    }
    let mut out = Vec::with_capacity(t);
    let mut queue = VecDeque::from([(1usize, t)]);
    while let Some((lo, hi)) = queue.pop_front() {
        let mid = (lo + hi).div_ceil(2);
        out.push(mid);
        if lo < mid {
            queue.push_back((lo, mid - 1));
        }
        if mid < hi {
            queue.push_back((mid + 1, hi));
        }
    }
    Ok(out)
}

/// `g_n = <n| D(alpha) M D(alpha)^dagger |n>` for a dense effective target `M`.
pub fn g_vector<T: Real>(space: &FockSpace<T>, m: &ComplexMatrix<T>, alpha: T) -> Result<Vec<Complex<T>>> {
    check_dims(space.dim(), m.nrows())?;
    check_dims(space.dim(), m.ncols())?;
    let disp = space.displacement(alpha);
    let dm = &disp * m;
    Ok((0..space.dim())
        .map(|n| dm.row(n).iter().zip(disp.row(n).iter()).fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b.conj()))
        .collect())
}

/// Phases maximizing `|sum_n e^{i theta_n} conj(g_n)|` with `theta_n = 0` for
/// `n >= cutoff`, and the value reached. Below the cutoff `theta_n = arg(g_n)`
/// shifted by the phase of the frozen remainder.
fn phases_for<T: Real>(g: &[Complex<T>], cutoff: usize) -> (Vec<T>, T) {
    let zero = Complex::new(T::zero(), T::zero());
    let rest = g.iter().skip(cutoff).fold(zero, |acc, z| acc + z.conj());
    let shift = arg(rest);
    let mut value = modulus(rest);
    let theta = g
        .iter()
        .enumerate()
        .map(|(n, &z)| {
            if n < cutoff {
                value += modulus(z);
                wrap_phase(arg(z) + shift)
            } else {
                T::zero()
            }
        })
        .collect();
    (theta, value)
}

fn choose<T: Real>(
    grid: &[f64],
    cutoff: usize,
    logical: usize,
    mut g_of: impl FnMut(T) -> Vec<Complex<T>>,
) -> BlockChoice<T> {
    let inv_l = T::one() / T::lit_usize(logical);
    let cands: Vec<(f64, Vec<T>, T, T)> = grid
        .iter()
        .map(|&a| {
            let g = g_of(T::lit(a));
            let (theta, value) = phases_for(&g, cutoff);
            let score = g.iter().fold(T::zero(), |acc, &z| acc + modulus(z));
            (a, theta, value, score)
        })
        .collect();
    let best = cands.iter().map(|c| c.2.as_f64()).fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-13 * best.abs().max(1.0);
    let (a, theta, value, score) = cands
        .into_iter()
        .filter(|c| c.2.as_f64() >= best - tie)
        .min_by(|x, y| x.0.abs().total_cmp(&y.0.abs()).then(x.0.total_cmp(&y.0)))
        .expect("nonempty grid");
    BlockChoice {
        alpha: T::lit(a),
        theta: SnapPhases::new(theta).expect("finite phases"),
        score: score * inv_l,
        fidelity: value * inv_l,
    }
}

/// Best block on the grid for a dense effective target with logical dimension
/// `logical`.
pub fn optimal_block<T: Real>(
    space: &FockSpace<T>,
    m: &ComplexMatrix<T>,
    logical: usize,
    cfg: &InitConfig,
) -> Result<BlockChoice<T>> {
    check_dims(space.dim(), m.nrows())?;
    if cfg.alpha_grid.is_empty() {
        return Err(Error::InvalidArgument("alpha grid is empty".into()));
    }
    let mut err = None;
    let choice = choose(&cfg.alpha_grid, cfg.snap_cutoff, logical, |a| {
        g_vector(space, m, a).unwrap_or_else(|e| {
            err = Some(e);
            vec![]
        })
    });
    match err {
        Some(e) => Err(e),
        None => Ok(choice),
    }
}

/// Low-rank effective target `sum_l |ytil_l><xtil_l|` in frame coordinates.
struct Effective<'a, T: Real> {
    space: &'a FockSpace<T>,
    pair: StateBatch<T>,
    mid: StateBatch<T>,
    scratch: StateBatch<T>,
    logical: usize,
}

impl<T: Real> Effective<'_, T> {
    fn g(&mut self, alpha: T) -> Vec<Complex<T>> {
        self.space.displaced_mid(alpha, &self.pair, &mut self.mid, &mut self.scratch);
        let l = self.logical;
        (0..self.space.dim())
            .map(|n| {
                (0..l).fold(Complex::new(T::zero(), T::zero()), |acc, j| {
                    acc + self.mid.get(n, l + j) * self.mid.get(n, j).conj()
                })
            })
            .collect()
    }
}

fn effective_states<T: Real>(problem: &Problem<T>, left: &[&Block<T>], right: &[&Block<T>]) -> StateBatch<T> {
    let space = problem.space();
    let d = problem.dim();
    let l = problem.logical_dim();
    let mut mid = StateBatch::zeros(d, l);
    let mut scratch = StateBatch::zeros(d, l);
    let mut x = problem.inputs_frame().clone();
    for b in left {
        space.apply_block(b.alpha, &b.theta.phasors(), false, &mut x, &mut mid, &mut scratch);
    }
    let mut y = problem.outputs_frame().clone();
    for b in right.iter().rev() {
        space.apply_block(b.alpha, &b.theta.phasors(), true, &mut y, &mut mid, &mut scratch);
    }
    let mut pair = StateBatch::zeros(d, 2 * l);
    pair.copy_columns_from(0, &x, 0..l);
    pair.copy_columns_from(l, &y, 0..l);
    pair
}

fn is_real_pattern<T: Real>(theta: &SnapPhases<T>, tol: f64) -> bool {
    theta.as_slice().iter().all(|&x| {
        let w = wrap_phase(x).as_f64().abs();
        w < tol || std::f64::consts::PI - w < tol
    })
}

/// Builds a sequence of `cfg.length` blocks by greedy insertion.
pub fn initialize<T: Real>(problem: &Problem<T>, cfg: &InitConfig) -> Result<(BlockSequence<T>, InitTrace)> {
    cfg.validate()?;
    let d = problem.dim();
    let l = problem.logical_dim();
    let order = insertion_order(cfg.length)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let initial = problem.fidelity(&BlockSequence::empty(d))?.as_f64();
    let mut placed: Vec<(usize, Block<T>)> = Vec::with_capacity(cfg.length);
    let mut records = Vec::with_capacity(cfg.length);
    let mut current = initial;

    for (step, &slot) in order.iter().enumerate() {
        let left: Vec<&Block<T>> = placed.iter().filter(|p| p.0 < slot).map(|p| &p.1).collect();
        let right: Vec<&Block<T>> = placed.iter().filter(|p| p.0 > slot).map(|p| &p.1).collect();
        let mut eff = Effective {
            space: problem.space(),
            pair: effective_states(problem, &left, &right),
            mid: StateBatch::zeros(d, 2 * l),
            scratch: StateBatch::zeros(d, 2 * l),
            logical: l,
        };
        let choice = choose(&cfg.alpha_grid, cfg.snap_cutoff, l, |a| eff.g(a));
        let mut random = false;
        let block = if step == 0
            && (cfg.random_first_block
                || (cfg.auto_detect
                    && current < 1.0 - cfg.gain_tol
                    && is_real_pattern(&choice.theta, cfg.phase_tol)
                    && choice.fidelity.as_f64() - current < cfg.gain_tol))
        {
            random = true;
            if !cfg.random_first_block {
                log::info!("greedy start is stuck on real phases; drawing a random first block");
            }
            let a = cfg.alpha_grid[rng.random_range(0..cfg.alpha_grid.len())];
            let theta = (0..d)
                .map(|n| {
                    if n < cfg.snap_cutoff {
                        T::lit(std::f64::consts::PI - std::f64::consts::TAU * rng.random::<f64>())
                    } else {
                        T::zero()
                    }
                })
                .collect();
            Block::new(T::lit(a), SnapPhases::new(theta)?)
        } else {
            Block::new(choice.alpha, choice.theta)
        };
        let pos = placed.partition_point(|p| p.0 < slot);
        let alpha = block.alpha.as_f64();
        placed.insert(pos, (slot, block));
        let partial = BlockSequence::new(d, placed.iter().map(|p| p.1.clone()).collect())?;
        current = problem.fidelity(&partial)?.as_f64();
        log::debug!("init step {step}: slot {slot}, alpha {alpha}, fidelity {current}");
        records.push(InitRecord { step, slot, alpha, fidelity: current, random });
    }
    let seq = BlockSequence::new(d, placed.into_iter().map(|p| p.1).collect())?;
    Ok((seq, InitTrace { initial_fidelity: initial, records }))
}

/// Mean overlap `(1/L) |sum_n e^{i theta_n} conj(g_n)|` of a single block.
pub fn block_fidelity<T: Real>(g: &[Complex<T>], theta: &SnapPhases<T>, logical: usize) -> T {
    let z = g
        .iter()
        .zip(theta.as_slice())
        .fold(Complex::new(T::zero(), T::zero()), |acc, (gn, &th)| acc + cis(th) * gn.conj());
    modulus(z) / T::lit_usize(logical)
}
