//! Job configuration: target descriptors, hyperparameters and the photon-cost
//! weight table.

use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::JobError;
use crate::finetune::TrainConfig;
use crate::fock::ComplexMatrix;
use crate::init::InitConfig;
use crate::targets::{
    block_inversion_target, fock_subspace_unitary, inversion_target, logical_op_target, odd_superposition,
    permutation_matrix, random_permutation, random_unitary, recovery_target, state_prep_target, Code, DecayParams,
    LogicalGate, Syndrome, TargetOperation,
};

/// Row-major complex matrix as `[re, im]` pairs.
pub type MatrixEntries = Vec<Vec<[f64; 2]>>;

fn matrix_from_entries(entries: &MatrixEntries, what: &str) -> Result<ComplexMatrix<f64>, JobError> {
    let n = entries.len();
    if n == 0 || entries.iter().any(|r| r.len() != n) {
        return Err(JobError::field(what, "matrix must be square and nonempty"));
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| Complex::new(entries[i][j][0], entries[i][j][1])))
}

/// Logical state prepared from the vacuum, in the binomial code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreparedState {
    B0,
    B1,
    /// `(|b0> + |b1>) / sqrt 2`.
    Plus,
    /// `(|b0> - |b1>) / sqrt 2`.
    Minus,
    Odd,
    Coefficients { alpha: [f64; 2], beta: [f64; 2] },
}

impl PreparedState {
    pub fn coefficients(&self) -> (Complex<f64>, Complex<f64>) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let c = |re, im| Complex::new(re, im);
        match self {
            PreparedState::B0 => (c(1.0, 0.0), c(0.0, 0.0)),
            PreparedState::B1 => (c(0.0, 0.0), c(1.0, 0.0)),
            PreparedState::Plus => (c(h, 0.0), c(h, 0.0)),
            PreparedState::Minus => (c(h, 0.0), c(-h, 0.0)),
            PreparedState::Odd => odd_superposition(),
            PreparedState::Coefficients { alpha, beta } => (c(alpha[0], alpha[1]), c(beta[0], beta[1])),
        }
    }
}

/// Target family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TargetSpec {
    StatePrep {
        state: PreparedState,
    },
    Recovery {
        syndrome: Syndrome,
        gamma_t: f64,
    },
    LogicalOp {
        code: Code,
        gate: LogicalGate,
        /// Custom 2x2 logical unitary; replaces `gate` when present.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<MatrixEntries>,
    },
    Inversion,
    BlockInversion,
    RandomPermutation {
        n: usize,
        seed: u64,
    },
    RandomUnitary {
        n: usize,
        seed: u64,
    },
    /// Unitary `matrix` on the listed Fock levels.
    FockUnitary {
        levels: Vec<usize>,
        matrix: MatrixEntries,
    },
    /// As `FockUnitary`, with the matrix read from a JSON file.
    FockUnitaryFile {
        levels: Vec<usize>,
        path: PathBuf,
    },
}

impl TargetSpec {
    pub fn family(&self) -> &'static str {
        match self {
            TargetSpec::StatePrep { .. } => "state_prep",
            TargetSpec::Recovery { .. } => "recovery",
            TargetSpec::LogicalOp { .. } => "logical_op",
            TargetSpec::Inversion => "inversion",
            TargetSpec::BlockInversion => "block_inversion",
            TargetSpec::RandomPermutation { .. } => "random_permutation",
            TargetSpec::RandomUnitary { .. } => "random_unitary",
            TargetSpec::FockUnitary { .. } => "fock_unitary",
            TargetSpec::FockUnitaryFile { .. } => "fock_unitary_file",
        }
    }

    /// Highest Fock level the target refers to.
    pub fn max_level(&self) -> usize {
        match self {
            TargetSpec::StatePrep { .. } | TargetSpec::Recovery { .. } => 9,
            TargetSpec::LogicalOp { code: Code::Binomial, .. } => 9,
            TargetSpec::LogicalOp { code: Code::Trivial, .. } => 1,
            TargetSpec::Inversion | TargetSpec::BlockInversion => 9,
            TargetSpec::RandomPermutation { n, .. } | TargetSpec::RandomUnitary { n, .. } => n.saturating_sub(1),
            TargetSpec::FockUnitary { levels, .. } | TargetSpec::FockUnitaryFile { levels, .. } => {
                levels.iter().copied().max().unwrap_or(0)
            }
        }
    }

    /// Size `N` of the transformed Fock subspace, for the families that have one.
    pub fn subspace_size(&self) -> Option<usize> {
        match self {
            TargetSpec::RandomPermutation { n, .. } | TargetSpec::RandomUnitary { n, .. } => Some(*n),
            TargetSpec::FockUnitary { levels, .. } | TargetSpec::FockUnitaryFile { levels, .. } => Some(levels.len()),
            TargetSpec::Inversion | TargetSpec::BlockInversion => Some(10),
            _ => None,
        }
    }

    /// Same family with subspace size `n`, for sweeps over `N`.
    pub fn with_size(&self, n: usize) -> Result<Self, JobError> {
        match self {
            TargetSpec::RandomPermutation { seed, .. } => Ok(TargetSpec::RandomPermutation { n, seed: *seed }),
            TargetSpec::RandomUnitary { seed, .. } => Ok(TargetSpec::RandomUnitary { n, seed: *seed }),
            _ => Err(JobError::Config(format!("target family '{}' has no size parameter", self.family()))),
        }
    }

    /// Checks the files the descriptor refers to, relative to `base`.
    pub fn check_files(&self, base: &Path) -> Result<(), JobError> {
        if let TargetSpec::FockUnitaryFile { path, .. } = self {
            let p = base.join(path);
            if !p.is_file() {
                return Err(JobError::Config(format!("target matrix file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn build(&self, dim: usize) -> Result<TargetOperation<f64>, JobError> {
        self.build_in(dim, Path::new("."))
    }

    /// Builds the target on `dim` levels, resolving relative paths against `base`.
    pub fn build_in(&self, dim: usize, base: &Path) -> Result<TargetOperation<f64>, JobError> {
        let t = match self {
            TargetSpec::StatePrep { state } => {
                let (a, b) = state.coefficients();
                state_prep_target(a, b, dim)?
            }
            TargetSpec::Recovery { syndrome, gamma_t } => recovery_target(*syndrome, DecayParams::new(*gamma_t)?, dim)?,
            TargetSpec::LogicalOp { code, gate, matrix } => {
                let v = match matrix {
                    Some(m) => matrix_from_entries(m, "target.matrix")?,
                    None => gate.matrix(),
                };
                logical_op_target(&v, *code, dim)?
            }
            TargetSpec::Inversion => inversion_target(dim)?,
            TargetSpec::BlockInversion => block_inversion_target(dim)?,
            TargetSpec::RandomPermutation { n, seed } => {
                let p = permutation_matrix(&random_permutation(*n, *seed))?;
                fock_subspace_unitary(&p, &(0..*n).collect::<Vec<_>>(), dim)?
            }
            TargetSpec::RandomUnitary { n, seed } => {
                fock_subspace_unitary(&random_unitary(*n, *seed)?, &(0..*n).collect::<Vec<_>>(), dim)?
            }
            TargetSpec::FockUnitary { levels, matrix } => {
                fock_subspace_unitary(&matrix_from_entries(matrix, "target.matrix")?, levels, dim)?
            }
            TargetSpec::FockUnitaryFile { levels, path } => {
                let p = base.join(path);
                let text = std::fs::read_to_string(&p).map_err(|e| JobError::io(&p, e))?;
                let m: MatrixEntries = serde_json::from_str(&text).map_err(|e| JobError::parse(&p, e))?;
                fock_subspace_unitary(&matrix_from_entries(&m, "target.path")?, levels, dim)?
            }
        };
        Ok(t)
    }

    /// Photon-cost weight used for this family at sequence length `t`.
    pub fn default_lambda(&self, t: usize) -> f64 {
        let by_size = |n: usize| match n {
            0..=3 => 2.4,
            4 | 5 => 1.8,
            _ => 1.6,
        };
        match self {
            TargetSpec::StatePrep { .. } => 0.6,
            TargetSpec::Recovery { syndrome: Syndrome::A, .. } if t <= 4 => 0.6,
            TargetSpec::Recovery { .. } => 0.4,
            TargetSpec::LogicalOp { code: Code::Trivial, .. } => 2.4,
            TargetSpec::LogicalOp { gate: LogicalGate::PauliX, matrix: None, .. } if t <= 3 => 1.0,
            TargetSpec::LogicalOp { .. } => 0.32,
            TargetSpec::Inversion if t <= 8 => 0.16,
            TargetSpec::Inversion => 0.4,
            TargetSpec::BlockInversion => 0.8,
            TargetSpec::RandomPermutation { n, .. } | TargetSpec::RandomUnitary { n, .. } => by_size(*n),
            TargetSpec::FockUnitary { levels, .. } | TargetSpec::FockUnitaryFile { levels, .. } => by_size(levels.len()),
        }
    }
}

/// Wigner snapshots of one input state between blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WignerSpec {
    /// Index of the logical input state to follow.
    pub state: usize,
    pub x_range: [f64; 2],
    pub p_range: [f64; 2],
    pub resolution: usize,
}

impl Default for WignerSpec {
    fn default() -> Self {
        Self { state: 0, x_range: [-5.0, 5.0], p_range: [-5.0, 5.0], resolution: 101 }
    }
}

fn default_dim() -> usize {
    100
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_job_id() -> String {
    "job".into()
}

/// Everything needed to produce one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSpec {
    #[serde(default = "default_job_id")]
    pub job_id: String,
    pub target: TargetSpec,
    #[serde(default = "default_dim")]
    pub dim: usize,
    /// Number of blocks `T`; overrides `init.length`.
    #[serde(rename = "T")]
    pub length: usize,
    /// Photon-cost weight; the family default applies when unset. Any
    /// `train.lambda` is ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wigner: Option<WignerSpec>,
}

impl JobSpec {
    pub fn new(job_id: impl Into<String>, target: TargetSpec, dim: usize, length: usize) -> Self {
        Self {
            job_id: job_id.into(),
            target,
            dim,
            length,
            lambda: None,
            init: InitConfig::default(),
            train: None,
            output_dir: default_output_dir(),
            wigner: None,
        }
    }

    /// Parses a JSON job file; relative target paths resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self, JobError> {
        let text = std::fs::read_to_string(path).map_err(|e| JobError::io(path, e))?;
        let mut spec: Self = serde_json::from_str(&text).map_err(|e| JobError::parse(path, e))?;
        if let TargetSpec::FockUnitaryFile { path: p, .. } = &mut spec.target {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), JobError> {
        if self.length < 1 {
            return Err(JobError::field("T", "must be >= 1"));
        }
        if self.dim < 2 {
            return Err(JobError::field("dim", "must be >= 2"));
        }
        if self.dim < self.target.max_level() + 1 {
            return Err(JobError::field(
                "dim",
                format!("{} is too small for Fock level {}", self.dim, self.target.max_level()),
            ));
        }
        if let Some(l) = self.lambda {
            if !(l.is_finite() && l >= 0.0) {
                return Err(JobError::field("lambda", "must be finite and >= 0"));
            }
        }
        if self.job_id.is_empty() || self.job_id.contains(['/', '\\']) {
            return Err(JobError::field("job_id", "must be a nonempty plain name"));
        }
        self.target.check_files(Path::new("."))?;
        self.effective_init().validate()?;
        self.effective_train().validate()?;
        if let Some(w) = &self.wigner {
            if w.resolution < 2 || !(w.x_range[0] < w.x_range[1]) || !(w.p_range[0] < w.p_range[1]) {
                return Err(JobError::field("wigner", "needs resolution >= 2 and nonempty ranges"));
            }
        }
        Ok(())
    }

    pub fn effective_lambda(&self) -> f64 {
        self.lambda.unwrap_or_else(|| self.target.default_lambda(self.length))
    }

    pub fn effective_init(&self) -> InitConfig {
        InitConfig { length: self.length, ..self.init.clone() }
    }

    pub fn effective_train(&self) -> TrainConfig {
        let base = self.train.clone().unwrap_or_default();
        TrainConfig { lambda: self.effective_lambda(), ..base }
    }

    /// The spec with every default resolved, as written to `config.json`.
    pub fn resolved(&self) -> Self {
        Self {
            lambda: Some(self.effective_lambda()),
            init: self.effective_init(),
            train: Some(self.effective_train()),
            ..self.clone()
        }
    }

    /// SHA-256 of the resolved spec's JSON, as lowercase hex.
    pub fn config_hash(&self) -> String {
        let text = serde_json::to_string(&self.resolved()).expect("job spec serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn seeds(&self) -> Seeds {
        let target = match &self.target {
            TargetSpec::RandomPermutation { seed, .. } | TargetSpec::RandomUnitary { seed, .. } => Some(*seed),
            _ => None,
        };
        Seeds { init: self.init.seed, train: self.effective_train().seed, target }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seeds {
    pub init: u64,
    pub train: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<u64>,
}
