//! Gradient-based co-optimization of all block parameters with Adam.

mod gradient;
pub mod workspace;

pub use gradient::{overlap_gradient, photon_gradient, CostGradient, Gradient, GradientEngine};
pub use workspace::GradientWorkspace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::Problem;
use crate::scalar::Real;
use crate::sequence::BlockSequence;

/// Hyperparameters of one finetuning run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lambda: f64,
    pub iterations: usize,
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Per-component bound on `|dC/d alpha_t|`; `None` disables clipping.
    pub clip_alpha: Option<f64>,
    /// Per-component bound on `|dC/d theta_t^(n)|`; `None` disables clipping.
    pub clip_theta: Option<f64>,
    pub log_every: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            iterations: 100_000,
            eta: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_alpha: Some(100.0),
            clip_theta: Some(50.0),
            log_every: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self { lambda, ..Self::default() }
    }

    /// Larger step, faster second-moment decay, no clipping.
    pub fn no_gc_high_lr(lambda: f64) -> Self {
        Self { lambda, eta: 2.5e-4, beta2: 0.99, clip_alpha: None, clip_theta: None, ..Self::default() }
    }

    /// Looks up a named preset: `default` or `no-gc-high-lr`.
    pub fn preset(name: &str, lambda: f64) -> Result<Self> {
        match name {
            "default" => Ok(Self::with_lambda(lambda)),
            "no-gc-high-lr" => Ok(Self::no_gc_high_lr(lambda)),
            other => Err(Error::InvalidArgument(format!("unknown training preset '{other}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return bad(format!("lambda = {} must be finite and >= 0", self.lambda));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) || !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad("eta and epsilon must be positive".into());
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} = {b} outside [0, 1)"));
            }
        }
        for (name, c) in [("clip_alpha", self.clip_alpha), ("clip_theta", self.clip_theta)] {
            if let Some(c) = c {
                if !(c > 0.0) {
                    return bad(format!("{name} = {c} must be positive"));
                }
            }
        }
        if self.log_every == 0 {
            return bad("log_every must be >= 1".into());
        }
        Ok(())
    }
}

/// Clamps `grad` to `[-bound, bound]`.
pub fn clip(grad: f64, bound: f64) -> f64 {
    grad.clamp(-bound, bound)
}

/// Adam moments and step counter; persisted so a resumed run continues exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl OptimizerState {
    pub fn new(params: usize) -> Self {
        Self { step: 0, m: vec![0.0; params], v: vec![0.0; params] }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }
}

/// One Adam update with bias correction, applied to `params` in place.
pub fn adam_step<T: Real>(state: &mut OptimizerState, params: &mut [T], grads: &[f64], cfg: &TrainConfig) -> Result<()> {
    if state.len() != params.len() || grads.len() != params.len() {
        return Err(Error::DimMismatch { expected: params.len(), got: grads.len().min(state.len()) });
    }
    state.step += 1;
    let k = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(k);
    let c2 = 1.0 - cfg.beta2.powi(k);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let mh = state.m[i] / c1;
        let vh = state.v[i] / c2;
        let upd = cfg.eta * mh / (vh.sqrt() + cfg.epsilon);
        params[i] -= T::lit(upd);
    }
    Ok(())
}

/// One logged point of a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub iteration: usize,
    pub fidelity: f64,
    pub photon_cost: f64,
    pub total_cost: f64,
    /// Largest unclipped `|dC/d alpha_t|`.
    pub max_grad_alpha: f64,
    /// Largest unclipped `|dC/d theta_t^(n)|`.
    pub max_grad_theta: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub records: Vec<TrainRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainStatus {
    Completed,
    /// The cost became nonfinite at `iteration`; the trace stops there.
    Aborted { iteration: usize, reason: String },
}

#[derive(Debug, Clone)]
pub struct FinetuneOutcome<T: Real> {
    /// Parameters after the last completed update (no post-selection).
    pub sequence: BlockSequence<T>,
    pub trace: TrainTrace,
    pub state: OptimizerState,
    pub status: TrainStatus,
}

/// Runs `cfg.iterations` steps of gradient, clipping and Adam from `seq`.
pub fn finetune<T: Real>(problem: &Problem<T>, seq: &BlockSequence<T>, cfg: &TrainConfig) -> Result<FinetuneOutcome<T>> {
    finetune_with(problem, seq, cfg, None, &mut |_, _| {})
}

/// As [`finetune`], optionally resuming from `state`, reporting each logged
/// record (with the parameters it was computed from) to `progress`.
pub fn finetune_with<T: Real>(
    problem: &Problem<T>,
    seq: &BlockSequence<T>,
    cfg: &TrainConfig,
    state: Option<OptimizerState>,
    progress: &mut dyn FnMut(&TrainRecord, &BlockSequence<T>),
) -> Result<FinetuneOutcome<T>> {
    cfg.validate()?;
    problem.check(seq)?;
    let mut seq = seq.clone();
    let mut state = state.unwrap_or_else(|| OptimizerState::new(seq.param_count()));
    if state.len() != seq.param_count() {
        return Err(Error::DimMismatch { expected: seq.param_count(), got: state.len() });
    }
    let mut engine = GradientEngine::new(problem.dim(), problem.logical_dim(), seq.len());
    let mut records = Vec::new();
    let stride = 1 + seq.dim();
    let iterations = if seq.is_empty() { 0 } else { cfg.iterations };
    let mut params = seq.to_params();
    let mut grads = vec![0.0; params.len()];

    for k in 0..iterations {
        let cg = engine.evaluate(problem, &seq, cfg.lambda)?;
        let g = cg.total();
        let (ga, gt) = g.max_abs();
        let record = make_record(k, &cg.report, ga.as_f64(), gt.as_f64());
        let nonfinite = !record.total_cost.is_finite() || g.values.iter().any(|x| !x.is_finite());
        if k % cfg.log_every == 0 || nonfinite {
            progress(&record, &seq);
            records.push(record);
        }
        if nonfinite {
            let reason = format!("nonfinite cost or gradient at iteration {k}");
            log::error!("{reason}");
            return Ok(FinetuneOutcome {
                sequence: seq,
                trace: TrainTrace { records },
                state,
                status: TrainStatus::Aborted { iteration: k, reason },
            });
        }
        for (i, (dst, &src)) in grads.iter_mut().zip(&g.values).enumerate() {
            let bound = if i % stride == 0 { cfg.clip_alpha } else { cfg.clip_theta };
            let v = src.as_f64();
            *dst = bound.map_or(v, |b| clip(v, b));
        }
        adam_step(&mut state, &mut params, &grads, cfg)?;
        seq.set_params(&params);
    }

    let cg = engine.evaluate(problem, &seq, cfg.lambda)?;
    let (ga, gt) = cg.total().max_abs();
    let record = make_record(iterations, &cg.report, ga.as_f64(), gt.as_f64());
    progress(&record, &seq);
    let status = if record.total_cost.is_finite() {
        TrainStatus::Completed
    } else {
        TrainStatus::Aborted { iteration: iterations, reason: "nonfinite final cost".into() }
    };
    records.push(record);
    Ok(FinetuneOutcome { sequence: seq, trace: TrainTrace { records }, state, status })
}

fn make_record(iteration: usize, r: &crate::objectives::ObjectiveReport, ga: f64, gt: f64) -> TrainRecord {
    TrainRecord {
        iteration,
        fidelity: r.fidelity,
        photon_cost: r.photon_cost,
        total_cost: r.total_cost,
        max_grad_alpha: ga,
        max_grad_theta: gt,
        saturated: r.saturated,
    }
}
