//! End-to-end inference: tracked 2D observations through GCN completion,
//! joint-TCN refinement, root-TCN depth, back-projection, velocity
//! propagation, and occlusion-weighted fusion into camera-centric poses.

use serde::{Deserialize, Serialize};

use crate::camera::{normalize_pose, CameraModel, NormalizedPose};
use crate::error::{Error, Result};
use crate::fusion::{
    fuse_root, fusion_weight, observation_occluded, occlusion_intervals, OcclusionInterval,
};
use crate::gcn::{GcnModel, ObservedPose2D};
use crate::pose::Pose3D;
use crate::skeleton::SkeletonMatrices;
use crate::tcn::{
    denormalize_velocity, joint_tcn_forward, normalize_root_state, root_tcn_forward,
    soft_argmax_depth, velocity_tcn_forward, DepthBins, RootState, TcnKind, TcnModel,
};

/// One tracked frame: the 2D observation for a known person at time t.
#[derive(Debug, Clone)]
pub struct TrackedFrame {
    pub t: usize,
    pub obs: ObservedPose2D,
}

/// Per-person time-indexed observations with occlusion flags and intervals.
#[derive(Debug, Clone)]
pub struct TrackedSequence {
    pub person_id: u32,
    pub frames: Vec<TrackedFrame>,
    pub occluded: Vec<bool>,
    pub intervals: Vec<OcclusionInterval>,
}

impl TrackedSequence {
    /// Builds a track, deriving pose-level occlusion flags and intervals from
    /// the observations' confidences.
    pub fn from_observations(person_id: u32, frames: Vec<TrackedFrame>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::Validation("track with no frames".into()));
        }
        for pair in frames.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(Error::Validation(format!(
                    "frame indices must be strictly increasing ({} then {})",
                    pair[0].t, pair[1].t
                )));
            }
        }
        let occluded: Vec<bool> =
            frames.iter().map(|f| observation_occluded(&f.obs)).collect::<Result<_>>()?;
        let intervals = occlusion_intervals(&occluded);
        Ok(Self { person_id, frames, occluded, intervals })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// The four trained models the pipeline runs.
#[derive(Debug, Clone)]
pub struct PipelineModels {
    pub gcn: GcnModel,
    pub joint: TcnModel,
    pub velocity: TcnModel,
    pub root: TcnModel,
}

impl PipelineModels {
    fn validate(&self, mats: &SkeletonMatrices) -> Result<()> {
        if self.joint.kind() != TcnKind::Joint
            || self.velocity.kind() != TcnKind::Velocity
            || self.root.kind() != TcnKind::Root
        {
            return Err(Error::Config("TCN checkpoints assigned to the wrong roles".into()));
        }
        if self.gcn.hyper().joint_count != mats.joint_count {
            return Err(Error::Config(format!(
                "GCN expects {} joints, topology has {}",
                self.gcn.hyper().joint_count,
                mats.joint_count
            )));
        }
        if self.joint.hyper().joint_count != mats.joint_count {
            return Err(Error::Config("joint TCN joint count does not match topology".into()));
        }
        let root_bins =
            self.root.bins().ok_or_else(|| Error::Config("root TCN without bins".into()))?;
        let vel_bins =
            self.velocity.bins().ok_or_else(|| Error::Config("velocity TCN without bins".into()))?;
        if root_bins != vel_bins {
            return Err(Error::Config(
                "root and velocity checkpoints disagree on depth bins".into(),
            ));
        }
        if !(root_bins.center(0) > 0.0) {
            return Err(Error::Config("depth bins must cover strictly positive Z/f".into()));
        }
        Ok(())
    }
}

/// Where per-frame person-centric poses come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoseSource {
    /// The confidence-weighted graph networks (the full pipeline).
    Gcn,
    /// Observed 2D coordinates embedded at z = 0, scaled to a nominal metric
    /// size. The ablation baseline without pose completion.
    Passthrough2d,
}

/// Whether the velocity path participates during occlusions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionMode {
    Full,
    DepthOnly,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub pose_source: PoseSource,
    pub fusion: FusionMode,
    /// Metric mean joint-to-root distance assumed by the 2D passthrough.
    pub nominal_pose_scale_m: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self { pose_source: PoseSource::Gcn, fusion: FusionMode::Full, nominal_pose_scale_m: 0.45 }
    }
}

/// How a frame's root position was produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RootProvenance {
    /// Outside occlusion: the depth path alone.
    DepthPath,
    /// Depth and velocity paths blended with the given weight on depth.
    Fused { w: f64 },
    /// No usable observation: the velocity path alone.
    VelocityPath,
}

/// One person-frame of pipeline output.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub t: usize,
    /// Camera-centric joints (root + person-centric pose, exactly).
    pub pose_cam: Pose3D,
    /// Person-centric pose from the temporal network.
    pub pose_pc: Pose3D,
    /// Camera-centric root; Z is metric when the focal length is known,
    /// otherwise in units of f.
    pub root_cam: [f64; 3],
    /// Estimated relative depth Z/f at the root.
    pub rel_depth: f64,
    pub occluded: bool,
    pub provenance: RootProvenance,
}

#[derive(Debug, Clone)]
pub struct TrackOutput {
    pub person_id: u32,
    pub frames: Vec<FrameOutput>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub tracks: Vec<TrackOutput>,
}

fn centered_window<T: Clone>(items: &[T], t: usize, half: usize) -> Vec<T> {
    (-(half as i64)..=half as i64)
        .map(|d| items[(t as i64 + d).clamp(0, items.len() as i64 - 1) as usize].clone())
        .collect()
}

fn median_state(states: &[RootState]) -> RootState {
    debug_assert!(!states.is_empty());
    let mut out = [0.0; 3];
    for (c, slot) in out.iter_mut().enumerate() {
        let mut vals: Vec<f64> = states.iter().map(|s| s[c]).collect();
        vals.sort_by(f64::total_cmp);
        *slot = vals[vals.len() / 2];
    }
    out
}

fn passthrough_pose(np: &NormalizedPose, nominal_scale: f64) -> Pose3D {
    let joints = np.p.iter().map(|p| [p[0] * nominal_scale, p[1] * nominal_scale, 0.0]).collect();
    Pose3D::person_centric(joints)
}

fn infer_track(
    track: &TrackedSequence,
    models: &PipelineModels,
    mats: &SkeletonMatrices,
    camera: &CameraModel,
    config: &PipelineConfig,
) -> Result<TrackOutput> {
    let frames = track.len();
    let bins: &DepthBins = models.root.bins().expect("validated");
    let cam_center = [camera.cx, camera.cy];
    let root_index = mats.root_index;

    // 1) per-frame person-centric poses; degenerate observations carry the
    //    previous usable pose and are emitted via the velocity path
    let mut per_frame_pose: Vec<Option<Pose3D>> = Vec::with_capacity(frames);
    let mut normalized: Vec<Option<NormalizedPose>> = Vec::with_capacity(frames);
    for frame in &track.frames {
        match normalize_pose(frame.obs.joints2d(), root_index) {
            Ok(np) => {
                let pose = match config.pose_source {
                    PoseSource::Gcn => Some(models.gcn.forward(&frame.obs, mats)?),
                    PoseSource::Passthrough2d => {
                        Some(passthrough_pose(&np, config.nominal_pose_scale_m))
                    }
                };
                normalized.push(Some(np));
                per_frame_pose.push(pose);
            }
            Err(_) => {
                normalized.push(None);
                per_frame_pose.push(None);
            }
        }
    }
    // carry the nearest earlier usable pose into degenerate slots (or the
    // first usable one for a degenerate prefix)
    let first_pose = per_frame_pose
        .iter()
        .flatten()
        .next()
        .cloned()
        .ok_or_else(|| Error::DegeneratePose("track has no usable frames".into()))?;
    let first_np = normalized.iter().flatten().next().cloned().expect("paired with pose");
    let mut filled_poses: Vec<Pose3D> = Vec::with_capacity(frames);
    let mut filled_nps: Vec<NormalizedPose> = Vec::with_capacity(frames);
    let mut degenerate: Vec<bool> = Vec::with_capacity(frames);
    for t in 0..frames {
        match (&per_frame_pose[t], &normalized[t]) {
            (Some(p), Some(np)) => {
                filled_poses.push(p.clone());
                filled_nps.push(np.clone());
                degenerate.push(false);
            }
            _ => {
                let prev_pose = filled_poses.last().cloned().unwrap_or_else(|| first_pose.clone());
                let prev_np = filled_nps.last().cloned().unwrap_or_else(|| first_np.clone());
                filled_poses.push(prev_pose);
                filled_nps.push(prev_np);
                degenerate.push(true);
            }
        }
    }

    // 2) temporal refinement of person-centric poses
    let half = models.joint.hyper().window / 2;
    let mut refined: Vec<Pose3D> = Vec::with_capacity(frames);
    for t in 0..frames {
        let window = centered_window(&filled_poses, t, half);
        refined.push(joint_tcn_forward(&window, &models.joint)?);
    }

    // 3) depth path: root-TCN logits -> soft-argmax Z/f -> back-projection
    let root_half = models.root.hyper().window / 2;
    let mut depth_roots: Vec<RootState> = Vec::with_capacity(frames);
    let mut rel_depths: Vec<f64> = Vec::with_capacity(frames);
    for t in 0..frames {
        let window = centered_window(&filled_nps, t, root_half);
        let logits = root_tcn_forward(&window, &models.root, cam_center)?;
        let zf = soft_argmax_depth(&logits, bins)?;
        let c = filled_nps[t].c;
        let state = [zf * (c[0] - camera.cx), zf * (c[1] - camera.cy), zf];
        depth_roots.push(state);
        rel_depths.push(zf);
    }

    // 4) sequential fusion with the velocity path inside occlusion intervals.
    //    The velocity path keeps its own recursion, seeded at each interval
    //    start from the last pre-occlusion fused root; the emitted root still
    //    blends it with the depth path by the exponential boundary weight.
    //    Anchoring the recursion on the boundary frame's depth estimate
    //    instead would hand the whole interval the one estimate the fusion
    //    exists to replace.
    let vel_window = models.velocity.hyper().window;
    let mut fused: Vec<RootState> = Vec::with_capacity(frames);
    // trajectory the velocity network conditions on: fused outside
    // intervals, its own propagated chain inside
    let mut history: Vec<RootState> = Vec::with_capacity(frames);
    let mut chain: Option<RootState> = None;
    let mut provenance: Vec<RootProvenance> = Vec::with_capacity(frames);
    for t in 0..frames {
        let interval = track.intervals.iter().find(|iv| iv.contains(t));
        match interval {
            Some(iv) if t == iv.start => {
                // anchor on the recent pre-occlusion trajectory; a short
                // median suppresses single-frame depth jitter
                chain = Some(if t > 0 {
                    median_state(&history[t.saturating_sub(3)..t])
                } else {
                    depth_roots[t]
                });
            }
            None => chain = None,
            _ => {}
        }
        let needs_velocity =
            degenerate[t] || (interval.is_some() && config.fusion == FusionMode::Full);
        let p_s: Option<RootState> = if needs_velocity && t > 0 {
            let anchor = chain.unwrap_or(fused[t - 1]);
            let hist_norm: Vec<RootState> =
                history.iter().map(|s| normalize_root_state(*s, bins)).collect();
            let states: Vec<RootState> = (0..vel_window)
                .map(|k| {
                    let idx = (t as i64 - vel_window as i64 + k as i64).clamp(0, t as i64 - 1);
                    hist_norm[idx as usize]
                })
                .collect();
            let vels: Vec<RootState> = (0..vel_window)
                .map(|k| {
                    let idx = (t as i64 - vel_window as i64 + k as i64).clamp(0, t as i64 - 1) as usize;
                    if idx == 0 {
                        [0.0; 3]
                    } else {
                        [
                            hist_norm[idx][0] - hist_norm[idx - 1][0],
                            hist_norm[idx][1] - hist_norm[idx - 1][1],
                            hist_norm[idx][2] - hist_norm[idx - 1][2],
                        ]
                    }
                })
                .collect();
            let v_norm = velocity_tcn_forward(&states, &vels, &models.velocity)?;
            let v = denormalize_velocity(v_norm, bins);
            Some(crate::tcn::propagate(anchor, v))
        } else {
            None
        };
        if interval.is_some() {
            if let Some(ps) = p_s {
                chain = Some(ps);
            }
        }

        let (state, prov) = if degenerate[t] {
            match p_s {
                Some(s) => (s, RootProvenance::VelocityPath),
                None => (depth_roots[t], RootProvenance::DepthPath),
            }
        } else {
            match (interval, config.fusion) {
                (Some(iv), FusionMode::Full) => {
                    let w = fusion_weight(t, iv)?;
                    let p_s = p_s.unwrap_or(depth_roots[t]);
                    (fuse_root(depth_roots[t], p_s, w)?, RootProvenance::Fused { w })
                }
                _ => (depth_roots[t], RootProvenance::DepthPath),
            }
        };
        fused.push(state);
        history.push(match (interval, p_s) {
            (Some(_), Some(ps)) => ps,
            _ => state,
        });
        provenance.push(prov);
    }

    // 5) assemble: camera-centric joints = fused root + person-centric pose
    let f = camera.focal_or_unit();
    let mut out_frames = Vec::with_capacity(frames);
    for t in 0..frames {
        let root_cam = [fused[t][0], fused[t][1], fused[t][2] * f];
        let pose_pc = refined[t].clone();
        let pose_cam = pose_pc.to_camera_centric(root_cam);
        out_frames.push(FrameOutput {
            t: track.frames[t].t,
            pose_cam,
            pose_pc,
            root_cam,
            rel_depth: fused[t][2],
            occluded: track.occluded[t],
            provenance: provenance[t],
        });
    }
    Ok(TrackOutput { person_id: track.person_id, frames: out_frames })
}

/// Runs the full pipeline over every track. Tracks are independent and are
/// processed in parallel; outputs keep the input order.
pub fn infer(
    tracks: &[TrackedSequence],
    models: &PipelineModels,
    mats: &SkeletonMatrices,
    camera: &CameraModel,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    models.validate(mats)?;
    let results =
        crate::parallel::map_indexed(tracks, |_, t| infer_track(t, models, mats, camera, config));
    let mut out = Vec::with_capacity(tracks.len());
    for r in results {
        out.push(r?);
    }
    Ok(PipelineOutput { tracks: out })
}

/// Builds per-person tracks from a synthetic scene's rendered observations.
pub fn tracks_from_scene(scene: &crate::synthgen::SyntheticSequence) -> Result<Vec<TrackedSequence>> {
    scene
        .persons
        .iter()
        .map(|p| {
            let frames = p
                .obs
                .iter()
                .enumerate()
                .map(|(t, obs)| TrackedFrame { t, obs: obs.clone() })
                .collect();
            TrackedSequence::from_observations(p.person_id, frames)
        })
        .collect()
}
