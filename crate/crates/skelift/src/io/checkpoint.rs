//! Versioned JSON checkpoints. Floats serialize with shortest round-trip
//! decimals, so save -> load -> save is byte-identical.

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::diffcore::{ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::gcn::{GcnHyper, GcnModel};
use crate::tcn::{TcnKind, TcnModel};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorEntry {
    shape: Vec<usize>,
    data: Vec<f64>,
}

/// On-disk checkpoint: model tag, model-specific hyperparameters, and named
/// parameter tensors in insertion order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub model: String,
    pub hyper: serde_json::Value,
    params: IndexMap<String, TensorEntry>,
}

impl Checkpoint {
    pub fn new(model: impl Into<String>, hyper: serde_json::Value, params: &ParamStore) -> Self {
        let entries = params
            .iter()
            .map(|(name, t)| {
                (name.clone(), TensorEntry { shape: t.shape().to_vec(), data: t.data().to_vec() })
            })
            .collect();
        Self {
            format_version: CHECKPOINT_FORMAT_VERSION,
            model: model.into(),
            hyper,
            params: entries,
        }
    }

    pub fn params(&self) -> Result<ParamStore> {
        let mut out = ParamStore::new();
        for (name, entry) in &self.params {
            out.insert(name.clone(), Tensor::new(entry.shape.clone(), entry.data.clone())?)?;
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = serde_json::to_vec(self)?;
        bytes.push(b'\n');
        super::atomic_write(path, &bytes)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| {
            Error::Config(format!("cannot read checkpoint {}: {e}", path.display()))
        })?;
        let ckpt: Checkpoint = serde_json::from_slice(&bytes)?;
        if ckpt.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Validation(format!(
                "unsupported checkpoint format_version {}",
                ckpt.format_version
            )));
        }
        Ok(ckpt)
    }
}

pub fn save_gcn_checkpoint(model: &GcnModel, path: &Path) -> Result<()> {
    let hyper = serde_json::to_value(model.hyper())?;
    Checkpoint::new("gcn", hyper, model.params()).save(path)
}

pub fn load_gcn_checkpoint(path: &Path) -> Result<GcnModel> {
    let ckpt = Checkpoint::load(path)?;
    if ckpt.model != "gcn" {
        return Err(Error::Config(format!(
            "expected a gcn checkpoint, found '{}' in {}",
            ckpt.model,
            path.display()
        )));
    }
    let hyper: GcnHyper = serde_json::from_value(ckpt.hyper.clone())?;
    GcnModel::from_parts(hyper, ckpt.params()?)
}

fn tcn_model_tag(kind: TcnKind) -> &'static str {
    match kind {
        TcnKind::Joint => "tcn_joint",
        TcnKind::Velocity => "tcn_velocity",
        TcnKind::Root => "tcn_root",
    }
}

pub fn save_tcn_checkpoint(model: &TcnModel, path: &Path) -> Result<()> {
    let hyper = serde_json::to_value(model.hyper())?;
    Checkpoint::new(tcn_model_tag(model.kind()), hyper, model.params()).save(path)
}

pub fn load_tcn_checkpoint(path: &Path, expect: TcnKind) -> Result<TcnModel> {
    let ckpt = Checkpoint::load(path)?;
    let want = tcn_model_tag(expect);
    if ckpt.model != want {
        return Err(Error::Config(format!(
            "expected a {want} checkpoint, found '{}' in {}",
            ckpt.model,
            path.display()
        )));
    }
    let hyper: crate::tcn::TcnHyper = serde_json::from_value(ckpt.hyper.clone())?;
    TcnModel::from_parts(hyper, ckpt.params()?)
}
