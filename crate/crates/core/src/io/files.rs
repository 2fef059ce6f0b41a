//! On-disk formats: sequence JSON, training-trace CSV, Wigner-grid CSV.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{JobError, Seeds};
use crate::finetune::{TrainRecord, TrainTrace};
use crate::fock::SnapPhases;
use crate::native::to_native;
use crate::sequence::{Block, BlockSequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub alpha: f64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NativeEntry {
    pub displacements: Vec<f64>,
    pub snaps: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SequenceMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Seeds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Block and native forms of one sequence. Numbers are written in shortest
/// round-trip decimal form, so reading a file back is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceFile {
    pub dim: usize,
    #[serde(rename = "T")]
    pub length: usize,
    pub blocks: Vec<BlockEntry>,
    #[serde(default)]
    pub native: NativeEntry,
    #[serde(default)]
    pub meta: SequenceMeta,
}

impl SequenceFile {
    pub fn from_sequence(seq: &BlockSequence<f64>, meta: SequenceMeta) -> Self {
        let native = to_native(seq);
        Self {
            dim: seq.dim(),
            length: seq.len(),
            blocks: seq.blocks.iter().map(|b| BlockEntry { alpha: b.alpha, theta: b.theta.as_slice().to_vec() }).collect(),
            native: NativeEntry {
                displacements: native.displacements,
                snaps: native.snaps.into_iter().map(SnapPhases::into_vec).collect(),
            },
            meta,
        }
    }

    /// The block sequence, with per-field diagnostics for malformed content.
    pub fn to_sequence(&self) -> Result<BlockSequence<f64>, JobError> {
        if self.dim < 2 {
            return Err(JobError::field("dim", format!("must be >= 2, got {}", self.dim)));
        }
        if self.length != self.blocks.len() {
            return Err(JobError::field("T", format!("is {} but {} blocks are listed", self.length, self.blocks.len())));
        }
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for (i, b) in self.blocks.iter().enumerate() {
            if !b.alpha.is_finite() {
                return Err(JobError::field(format!("blocks[{i}].alpha"), "must be finite"));
            }
            if b.theta.len() != self.dim {
                return Err(JobError::field(
                    format!("blocks[{i}].theta"),
                    format!("has {} entries, expected dim = {}", b.theta.len(), self.dim),
                ));
            }
            if let Some(k) = b.theta.iter().position(|x| !x.is_finite()) {
                return Err(JobError::field(format!("blocks[{i}].theta[{k}]"), "must be finite"));
            }
            blocks.push(Block::new(b.alpha, SnapPhases::new(b.theta.clone())?));
        }
        let n = &self.native;
        if !n.displacements.is_empty() || !n.snaps.is_empty() {
            if n.displacements.len() != self.length + 1 {
                return Err(JobError::field("native.displacements", format!("expected {} entries", self.length + 1)));
            }
            if n.snaps.len() != self.length {
                return Err(JobError::field("native.snaps", format!("expected {} entries", self.length)));
            }
            if let Some(i) = n.snaps.iter().position(|s| s.len() != self.dim) {
                return Err(JobError::field(format!("native.snaps[{i}]"), format!("expected dim = {} entries", self.dim)));
            }
        }
        Ok(BlockSequence::new(self.dim, blocks)?)
    }
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<(), JobError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| JobError::io(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| JobError::io(path, e))
}

pub fn read_sequence(path: &Path) -> Result<(BlockSequence<f64>, SequenceFile), JobError> {
    let text = std::fs::read_to_string(path).map_err(|e| JobError::io(path, e))?;
    let file: SequenceFile = serde_json::from_str(&text).map_err(|e| JobError::parse(path, e))?;
    Ok((file.to_sequence()?, file))
}

const TRACE_HEADER: [&str; 7] =
    ["iteration", "fidelity", "photon_cost", "total_cost", "max_grad_alpha", "max_grad_theta", "saturated"];

/// One CSV row per logged record, under a fixed header.
pub fn write_train_trace(path: &Path, trace: &TrainTrace) -> Result<(), JobError> {
    let err = |e: csv::Error| JobError::io(path, e);
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(err)?;
    w.write_record(TRACE_HEADER).map_err(err)?;
    for r in &trace.records {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|e| JobError::io(path, e))
}

pub fn read_train_trace(path: &Path) -> Result<TrainTrace, JobError> {
    let err = |e: csv::Error| JobError::io(path, e);
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let records = r.deserialize::<TrainRecord>().collect::<Result<Vec<_>, _>>().map_err(err)?;
    Ok(TrainTrace { records })
}

/// Long-format grid: one `x,p,w` row per point.
pub fn write_wigner_csv(path: &Path, xs: &[f64], ps: &[f64], w: &DMatrix<f64>) -> Result<(), JobError> {
    let err = |e: csv::Error| JobError::io(path, e);
    let mut wr = csv::Writer::from_path(path).map_err(err)?;
    wr.write_record(["x", "p", "w"]).map_err(err)?;
    for (i, x) in xs.iter().enumerate() {
        for (j, p) in ps.iter().enumerate() {
            wr.write_record([x.to_string(), p.to_string(), w[(i, j)].to_string()]).map_err(err)?;
        }
    }
    wr.flush().map_err(|e| JobError::io(path, e))
}
