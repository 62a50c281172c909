//! File formats: sequence JSONL, prediction JSONL, checkpoints, split and
//! run manifests. All writes are atomic (temp file + rename) and all formats
//! are versioned.

mod checkpoint;
mod manifest;
mod sequence;

pub use checkpoint::{
    load_gcn_checkpoint, load_tcn_checkpoint, save_gcn_checkpoint, save_tcn_checkpoint, Checkpoint,
};
pub use manifest::{write_manifest, RunManifest, SplitManifest};
pub use sequence::{
    load_predictions, load_sequence, save_predictions, save_sequence, PredFrameLine, PredHeader,
    PredPerson, SeqFrameLine, SeqHeader, SeqPerson, SequenceFile,
};

use std::path::Path;

use crate::error::Result;

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp.push(".tmp");
    let tmp_path = dir.join(tmp);
    std::fs::write(&tmp_path, bytes)?;
    std::fs::rename(&tmp_path, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        atomic_write(&path, b"first").unwrap();
        atomic_write(&path, b"second").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"second");
        // no stray temp files
        let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(entries.len(), 1);
    }
}
