//! Orchestration: initialize, finetune, evaluate, sweep, Wigner export.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::files::{read_sequence, write_json, write_train_trace, write_wigner_csv, SequenceFile, SequenceMeta};
use super::{JobError, JobSpec, TargetSpec, WignerSpec};
use crate::finetune::{finetune_with, OptimizerState, TrainStatus, TrainTrace};
use crate::fock::{wigner_grid, Axis};
use crate::init::{initialize, InitTrace};
use crate::objectives::{ObjectiveReport, Problem, SATURATION_GAP};
use crate::sequence::BlockSequence;

/// Short description of a finished job, written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub job_id: String,
    pub config_hash: String,
    /// `completed`, `aborted` or `saturated_at_init`.
    pub status: String,
    pub init_fidelity: Option<f64>,
    pub fidelity: f64,
    pub mean_nbar: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub sequence: BlockSequence<f64>,
    pub report: ObjectiveReport,
    pub init_trace: Option<InitTrace>,
    pub train_trace: TrainTrace,
    pub state: Option<OptimizerState>,
    pub summary: RunSummary,
    pub dir: PathBuf,
}

fn job_dir(spec: &JobSpec) -> Result<PathBuf, JobError> {
    let dir = spec.output_dir.join(&spec.job_id);
    std::fs::create_dir_all(&dir).map_err(|e| JobError::io(&dir, e))?;
    Ok(dir)
}

fn problem(spec: &JobSpec) -> Result<Problem<f64>, JobError> {
    Ok(Problem::new(spec.target.build(spec.dim)?)?)
}

fn meta(spec: &JobSpec) -> SequenceMeta {
    SequenceMeta { seeds: Some(spec.seeds()), config_hash: Some(spec.config_hash()) }
}

/// Pretty JSON of a report; identical inputs give identical bytes.
pub fn report_json(report: &ObjectiveReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Runs the initializer only; writes `config.json`, `init_trace.json` and
/// `init_sequence.json`.
pub fn init_job(spec: &JobSpec) -> Result<(BlockSequence<f64>, InitTrace), JobError> {
    spec.validate()?;
    let dir = job_dir(spec)?;
    write_json(&dir.join("config.json"), &spec.resolved())?;
    let p = problem(spec)?;
    let (seq, trace) = initialize(&p, &spec.effective_init())?;
    write_json(&dir.join("init_trace.json"), &trace)?;
    write_json(&dir.join("init_sequence.json"), &SequenceFile::from_sequence(&seq, meta(spec)))?;
    Ok((seq, trace))
}

/// Finetunes `seq`, optionally resuming optimizer moments, and writes the
/// trace, final sequence, checkpoint, report and summary.
pub fn finetune_job(spec: &JobSpec, seq: &BlockSequence<f64>, resume: Option<OptimizerState>) -> Result<JobOutcome, JobError> {
    spec.validate()?;
    let dir = job_dir(spec)?;
    write_json(&dir.join("config.json"), &spec.resolved())?;
    let p = problem(spec)?;
    let f = p.fidelity(seq)?;
    if 1.0 - f <= SATURATION_GAP {
        return Err(JobError::Saturated { fidelity: f });
    }
    finetune_stage(spec, &p, seq, resume, None, &dir, Instant::now())
}

/// Initializes and finetunes; a saturated initial sequence is returned as is.
pub fn run_job(spec: &JobSpec) -> Result<JobOutcome, JobError> {
    let start = Instant::now();
    let (seq, init_trace) = init_job(spec)?;
    let dir = job_dir(spec)?;
    let p = problem(spec)?;
    let f = p.fidelity(&seq)?;
    if 1.0 - f <= SATURATION_GAP {
        log::info!("{}: initial sequence is saturated (F = {f}); skipping finetuning", spec.job_id);
        let report = p.evaluate(&seq, spec.effective_lambda())?;
        let trace = TrainTrace { records: vec![] };
        return finish(spec, &p, seq, report, Some(init_trace), trace, None, "saturated_at_init", 0, &dir, start);
    }
    finetune_stage(spec, &p, &seq, None, Some(init_trace), &dir, start)
}

#[allow(clippy::too_many_arguments)]
fn finetune_stage(
    spec: &JobSpec,
    p: &Problem<f64>,
    seq: &BlockSequence<f64>,
    resume: Option<OptimizerState>,
    init_trace: Option<InitTrace>,
    dir: &Path,
    start: Instant,
) -> Result<JobOutcome, JobError> {
    let cfg = spec.effective_train();
    let id = spec.job_id.clone();
    let mut progress = |r: &crate::finetune::TrainRecord, _: &BlockSequence<f64>| {
        log::info!("{id}: iteration {} F = {:.12} cost = {:.6}", r.iteration, r.fidelity, r.total_cost);
    };
    let out = finetune_with(p, seq, &cfg, resume, &mut progress)?;
    let report = p.evaluate(&out.sequence, cfg.lambda)?;
    let (status, iterations) = match &out.status {
        TrainStatus::Completed => ("completed", cfg.iterations),
        TrainStatus::Aborted { iteration, .. } => ("aborted", *iteration),
    };
    let outcome = finish(spec, p, out.sequence, report, init_trace, out.trace, Some(out.state), status, iterations, dir, start)?;
    match out.status {
        TrainStatus::Completed => Ok(outcome),
        TrainStatus::Aborted { reason, .. } => Err(JobError::Numeric(reason)),
    }
}

#[allow(clippy::too_many_arguments)]
fn finish(
    spec: &JobSpec,
    p: &Problem<f64>,
    sequence: BlockSequence<f64>,
    report: ObjectiveReport,
    init_trace: Option<InitTrace>,
    train_trace: TrainTrace,
    state: Option<OptimizerState>,
    status: &str,
    iterations: usize,
    dir: &Path,
    start: Instant,
) -> Result<JobOutcome, JobError> {
    write_train_trace(&dir.join("train_trace.csv"), &train_trace)?;
    write_json(&dir.join("sequence.json"), &SequenceFile::from_sequence(&sequence, meta(spec)))?;
    std::fs::write(dir.join("report.json"), report_json(&report)).map_err(|e| JobError::io(dir, e))?;
    if let Some(s) = &state {
        write_json(&dir.join("optimizer_state.json"), s)?;
    }
    if let Some(w) = &spec.wigner {
        export_wigner(p, &sequence, w, &dir.join("wigner"))?;
    }
    let summary = RunSummary {
        job_id: spec.job_id.clone(),
        config_hash: spec.config_hash(),
        status: status.into(),
        init_fidelity: init_trace.as_ref().and_then(|t| t.records.last().map(|r| r.fidelity)),
        fidelity: report.fidelity,
        mean_nbar: report.mean_nbar(),
        lambda: report.lambda,
        iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(JobOutcome { sequence, report, init_trace, train_trace, state, summary, dir: dir.to_path_buf() })
}

/// Recomputes every objective for a stored sequence. `lambda` defaults to the
/// family value for the stored length.
pub fn evaluate_file(seq_path: &Path, target: &TargetSpec, lambda: Option<f64>) -> Result<ObjectiveReport, JobError> {
    let (seq, _) = read_sequence(seq_path)?;
    let base = seq_path.parent().unwrap_or(Path::new("."));
    let t = target.build_in(seq.dim(), base)?;
    let p = Problem::new(t)?;
    let lambda = lambda.unwrap_or_else(|| target.default_lambda(seq.len()));
    Ok(p.evaluate(&seq, lambda)?)
}

/// Wigner grids of input state `spec.state` after `0, 1, ..., T` blocks,
/// with the sampled `x` and `p` points.
pub fn wigner_snapshots(
    p: &Problem<f64>,
    seq: &BlockSequence<f64>,
    spec: &WignerSpec,
) -> Result<(Vec<f64>, Vec<f64>, Vec<DMatrix<f64>>), JobError> {
    if spec.state >= p.logical_dim() {
        return Err(JobError::field("wigner.state", format!("must be < {}", p.logical_dim())));
    }
    let x = Axis::new(spec.x_range[0], spec.x_range[1]);
    let pr = Axis::new(spec.p_range[0], spec.p_range[1]);
    let space = p.space();
    let mut psi = p.target().inputs()[spec.state].clone();
    let mut grids = vec![wigner_grid(space, &psi, x, pr, spec.resolution)?];
    for b in &seq.blocks {
        let one = BlockSequence::new(seq.dim(), vec![b.clone()])?;
        psi = space.apply_sequence(&one, &psi)?;
        grids.push(wigner_grid(space, &psi, x, pr, spec.resolution)?);
    }
    Ok((x.points(spec.resolution), pr.points(spec.resolution), grids))
}

/// Writes `snapshot_000.csv`, `snapshot_001.csv`, ... into `dir`.
pub fn export_wigner(p: &Problem<f64>, seq: &BlockSequence<f64>, spec: &WignerSpec, dir: &Path) -> Result<Vec<PathBuf>, JobError> {
    std::fs::create_dir_all(dir).map_err(|e| JobError::io(dir, e))?;
    let (xs, ps, grids) = wigner_snapshots(p, seq, spec)?;
    grids
        .iter()
        .enumerate()
        .map(|(t, g)| {
            let path = dir.join(format!("snapshot_{t:03}.csv"));
            write_wigner_csv(&path, &xs, &ps, g)?;
            Ok(path)
        })
        .collect()
}

/// Grid of jobs sharing everything but `T` and, optionally, the subspace size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: JobSpec,
    pub lengths: Vec<usize>,
    /// Subspace sizes `N` for the random families; empty keeps the base target.
    #[serde(default)]
    pub sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub job_id: String,
    pub n: Option<usize>,
    #[serde(rename = "T")]
    pub length: usize,
    pub lambda: f64,
    pub fidelity: Option<f64>,
    pub mean_nbar: Option<f64>,
    pub total_cost: Option<f64>,
    pub status: String,
    pub wall_time_s: f64,
}

/// Worker count from `SNAPCOMP_WORKERS`, else the available parallelism.
pub fn sweep_workers() -> usize {
    std::env::var("SNAPCOMP_WORKERS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

impl SweepSpec {
    pub fn jobs(&self) -> Result<Vec<JobSpec>, JobError> {
        if self.lengths.is_empty() {
            return Err(JobError::field("lengths", "must list at least one T"));
        }
        let base_dir = self.base.output_dir.join(&self.base.job_id);
        let targets: Vec<(Option<usize>, TargetSpec)> = if self.sizes.is_empty() {
            vec![(self.base.target.subspace_size(), self.base.target.clone())]
        } else {
            self.sizes.iter().map(|&n| Ok((Some(n), self.base.target.with_size(n)?))).collect::<Result<_, JobError>>()?
        };
        let mut jobs = Vec::new();
        for (n, target) in &targets {
            for &t in &self.lengths {
                let id = match n {
                    Some(n) if !self.sizes.is_empty() => format!("{}_N{n}_T{t}", self.base.job_id),
                    _ => format!("{}_T{t}", self.base.job_id),
                };
                jobs.push(JobSpec {
                    job_id: id,
                    target: target.clone(),
                    length: t,
                    output_dir: base_dir.clone(),
                    ..self.base.clone()
                });
            }
        }
        for j in &jobs {
            j.validate()?;
        }
        Ok(jobs)
    }
}

/// Runs every job of the sweep on a pool of [`sweep_workers`] threads and
/// writes `sweep.csv`. Failed jobs are reported in their row.
pub fn run_sweep(sweep: &SweepSpec) -> Result<Vec<SweepRow>, JobError> {
    let jobs = sweep.jobs()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_workers())
        .build()
        .map_err(|e| JobError::Config(format!("worker pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        jobs.par_iter()
            .map(|j| {
                let start = Instant::now();
                let n = j.target.subspace_size();
                let mut row = SweepRow {
                    job_id: j.job_id.clone(),
                    n,
                    length: j.length,
                    lambda: j.effective_lambda(),
                    fidelity: None,
                    mean_nbar: None,
                    total_cost: None,
                    status: String::new(),
                    wall_time_s: 0.0,
                };
                match run_job(j) {
                    Ok(o) => {
                        row.fidelity = Some(o.report.fidelity);
                        row.mean_nbar = Some(o.report.mean_nbar());
                        row.total_cost = Some(o.report.total_cost);
                        row.status = o.summary.status;
                    }
                    Err(e) => {
                        log::error!("{}: {e}", j.job_id);
                        row.status = format!("error:{}", e.kind());
                    }
                }
                row.wall_time_s = start.elapsed().as_secs_f64();
                row
            })
            .collect()
    });
    let dir = sweep.base.output_dir.join(&sweep.base.job_id);
    std::fs::create_dir_all(&dir).map_err(|e| JobError::io(&dir, e))?;
    let path = dir.join("sweep.csv");
    let err = |e: csv::Error| JobError::io(&path, e);
    let mut w = csv::Writer::from_path(&path).map_err(err)?;
    for r in &rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| JobError::io(&path, e))?;
    Ok(rows)
}
