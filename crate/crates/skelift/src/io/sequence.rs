//! Sequence JSONL: a header line with topology and camera, then one line per
//! frame. Predictions use the same layout with per-person pose, root, depth,
//! and provenance fields.

use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::camera::CameraModel;
use crate::error::{Error, Result};
use crate::gcn::ObservedPose2D;
use crate::pipeline::{PipelineOutput, RootProvenance, TrackOutput};
use crate::pose::Pose3D;
use crate::skeleton::{SkeletonTopology, TopologyFile};
use crate::synthgen::{PersonTrack, SyntheticSequence};

pub const SEQUENCE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeqHeader {
    pub format_version: u32,
    pub topology: TopologyFile,
    pub camera: CameraModel,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeqPerson {
    pub id: u32,
    pub joints2d: Vec<[f64; 2]>,
    pub conf: Vec<f64>,
    pub paf_conf: Vec<f64>,
    pub occluded: bool,
    pub gt3d_cam: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SeqFrameLine {
    pub t: usize,
    pub persons: Vec<SeqPerson>,
}

/// An in-memory sequence file: header plus frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFile {
    pub header: SeqHeader,
    pub frames: Vec<SeqFrameLine>,
}

impl SequenceFile {
    pub fn from_synthetic(seq: &SyntheticSequence, topology: &SkeletonTopology) -> Self {
        let frame_count = seq.persons.first().map_or(0, |p| p.obs.len());
        let frames = (0..frame_count)
            .map(|t| SeqFrameLine {
                t,
                persons: seq
                    .persons
                    .iter()
                    .map(|p| SeqPerson {
                        id: p.person_id,
                        joints2d: p.obs[t].joints2d().to_vec(),
                        conf: p.obs[t].joint_conf().to_vec(),
                        paf_conf: p.obs[t].bone_conf().to_vec(),
                        occluded: p.occluded[t],
                        gt3d_cam: Some(p.gt3d_cam[t].joints().to_vec()),
                    })
                    .collect(),
            })
            .collect();
        Self {
            header: SeqHeader {
                format_version: SEQUENCE_FORMAT_VERSION,
                topology: topology.to_file(),
                camera: seq.camera,
            },
            frames,
        }
    }

    /// Reassembles per-person tracks (ground truth present only if stored).
    pub fn to_synthetic(&self) -> Result<SyntheticSequence> {
        let topo = SkeletonTopology::from_file(&self.header.topology)?;
        let mut ids: Vec<u32> = Vec::new();
        for frame in &self.frames {
            for p in &frame.persons {
                if !ids.contains(&p.id) {
                    ids.push(p.id);
                }
            }
        }
        let mut persons = Vec::with_capacity(ids.len());
        for id in ids {
            let mut gt = Vec::new();
            let mut obs = Vec::new();
            let mut occ = Vec::new();
            for frame in &self.frames {
                let p = frame
                    .persons
                    .iter()
                    .find(|p| p.id == id)
                    .ok_or_else(|| Error::Validation(format!("person {id} missing at frame {}", frame.t)))?;
                obs.push(ObservedPose2D::new(
                    p.joints2d.clone(),
                    p.conf.clone(),
                    p.paf_conf.clone(),
                )?);
                occ.push(p.occluded);
                match &p.gt3d_cam {
                    Some(j) => gt.push(Pose3D::camera_centric(j.clone())),
                    None => {
                        return Err(Error::Validation(format!(
                            "person {id} has no ground truth at frame {}",
                            frame.t
                        )))
                    }
                }
            }
            persons.push(PersonTrack { person_id: id, gt3d_cam: gt, obs, occluded: occ });
        }
        let _ = topo;
        Ok(SyntheticSequence { camera: self.header.camera, persons })
    }
}

impl SequenceFile {
    /// Pipeline input tracks (observations only; ground truth not required).
    pub fn tracked_sequences(&self) -> Result<Vec<crate::pipeline::TrackedSequence>> {
        let mut ids: Vec<u32> = Vec::new();
        for frame in &self.frames {
            for p in &frame.persons {
                if !ids.contains(&p.id) {
                    ids.push(p.id);
                }
            }
        }
        ids.into_iter()
            .map(|id| {
                let mut frames = Vec::new();
                for line in &self.frames {
                    if let Some(p) = line.persons.iter().find(|p| p.id == id) {
                        frames.push(crate::pipeline::TrackedFrame {
                            t: line.t,
                            obs: ObservedPose2D::new(
                                p.joints2d.clone(),
                                p.conf.clone(),
                                p.paf_conf.clone(),
                            )?,
                        });
                    }
                }
                crate::pipeline::TrackedSequence::from_observations(id, frames)
            })
            .collect()
    }
}

fn jsonl_bytes<H: Serialize, L: Serialize>(header: &H, lines: &[L]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    serde_json::to_writer(&mut out, header)?;
    out.push(b'\n');
    for line in lines {
        serde_json::to_writer(&mut out, line)?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn save_sequence(file: &SequenceFile, path: &Path) -> Result<()> {
    let bytes = jsonl_bytes(&file.header, &file.frames)?;
    super::atomic_write(path, &bytes)
}

pub fn load_sequence(path: &Path) -> Result<SequenceFile> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot read sequence {}: {e}", path.display())))?;
    let mut lines = BufReader::new(f).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Validation(format!("{}: empty sequence file", path.display())))??;
    let header: SeqHeader = serde_json::from_str(&header_line)?;
    if header.format_version != SEQUENCE_FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "unsupported sequence format_version {}",
            header.format_version
        )));
    }
    let mut frames = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        frames.push(serde_json::from_str(&line)?);
    }
    Ok(SequenceFile { header, frames })
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredHeader {
    pub format_version: u32,
    pub topology: TopologyFile,
    pub camera: CameraModel,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredPerson {
    pub id: u32,
    /// Person-centric joints; camera-centric = root_cam + pose_pc.
    pub pose_pc: Vec<[f64; 3]>,
    pub root_cam: [f64; 3],
    pub rel_depth: f64,
    pub occluded: bool,
    pub provenance: RootProvenance,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PredFrameLine {
    pub t: usize,
    pub persons: Vec<PredPerson>,
}

pub fn save_predictions(
    output: &PipelineOutput,
    topology: &SkeletonTopology,
    camera: &CameraModel,
    path: &Path,
) -> Result<()> {
    let header = PredHeader {
        format_version: SEQUENCE_FORMAT_VERSION,
        topology: topology.to_file(),
        camera: *camera,
    };
    // frame-major lines, persons in track order
    let frame_count = output.tracks.first().map_or(0, |t| t.frames.len());
    let mut lines = Vec::with_capacity(frame_count);
    for fi in 0..frame_count {
        let mut persons = Vec::with_capacity(output.tracks.len());
        let mut t_value = fi;
        for track in &output.tracks {
            let frame = track.frames.get(fi).ok_or_else(|| {
                Error::Validation(format!(
                    "track {} is shorter than the longest track",
                    track.person_id
                ))
            })?;
            t_value = frame.t;
            persons.push(PredPerson {
                id: track.person_id,
                pose_pc: frame.pose_pc.joints().to_vec(),
                root_cam: frame.root_cam,
                rel_depth: frame.rel_depth,
                occluded: frame.occluded,
                provenance: frame.provenance,
            });
        }
        lines.push(PredFrameLine { t: t_value, persons });
    }
    let bytes = jsonl_bytes(&header, &lines)?;
    super::atomic_write(path, &bytes)
}

/// Loads predictions back into per-track outputs.
pub fn load_predictions(path: &Path) -> Result<(PredHeader, PipelineOutput)> {
    let f = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot read predictions {}: {e}", path.display())))?;
    let mut lines = BufReader::new(f).lines();
    let header_line = lines
        .next()
        .ok_or_else(|| Error::Validation(format!("{}: empty prediction file", path.display())))??;
    let header: PredHeader = serde_json::from_str(&header_line)?;
    if header.format_version != SEQUENCE_FORMAT_VERSION {
        return Err(Error::Validation(format!(
            "unsupported prediction format_version {}",
            header.format_version
        )));
    }
    let mut frames: Vec<PredFrameLine> = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        frames.push(serde_json::from_str(&line)?);
    }
    // regroup frame-major lines by person id, preserving first-seen order
    let mut ids: Vec<u32> = Vec::new();
    for frame in &frames {
        for p in &frame.persons {
            if !ids.contains(&p.id) {
                ids.push(p.id);
            }
        }
    }
    let mut tracks = Vec::with_capacity(ids.len());
    for id in ids {
        let mut out_frames = Vec::new();
        for frame in &frames {
            let p = frame.persons.iter().find(|p| p.id == id).ok_or_else(|| {
                Error::Validation(format!("person {id} missing at frame {}", frame.t))
            })?;
            let pose_pc = Pose3D::person_centric(p.pose_pc.clone());
            let pose_cam = pose_pc.to_camera_centric(p.root_cam);
            out_frames.push(crate::pipeline::FrameOutput {
                t: frame.t,
                pose_cam,
                pose_pc,
                root_cam: p.root_cam,
                rel_depth: p.rel_depth,
                occluded: p.occluded,
                provenance: p.provenance,
            });
        }
        tracks.push(TrackOutput { person_id: id, frames: out_frames });
    }
    Ok((header, PipelineOutput { tracks }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::default_topology;
    use crate::synthgen::{generate_scene, SceneConfig};

    #[test]
    fn sequence_file_round_trips_losslessly() {
        let dir = tempfile::tempdir().unwrap();
        let config = SceneConfig { frame_count: 20, rng_seed: 3, ..SceneConfig::default() };
        let scene = generate_scene(&config).unwrap();
        let topo = default_topology();
        let file = SequenceFile::from_synthetic(&scene, &topo);
        let path = dir.path().join("seq.jsonl");
        save_sequence(&file, &path).unwrap();
        let loaded = load_sequence(&path).unwrap();
        assert_eq!(file, loaded);

        // byte-identical on re-save
        let again = dir.path().join("seq2.jsonl");
        save_sequence(&loaded, &again).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());

        // and back into tracks
        let back = loaded.to_synthetic().unwrap();
        assert_eq!(back.persons.len(), scene.persons.len());
        for (a, b) in back.persons.iter().zip(&scene.persons) {
            assert_eq!(a.obs, b.obs);
            assert_eq!(a.occluded, b.occluded);
            for (pa, pb) in a.gt3d_cam.iter().zip(&b.gt3d_cam) {
                assert_eq!(pa.joints(), pb.joints());
            }
        }
    }
}
