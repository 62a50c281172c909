//! Synthetic multi-person motion sequences with a weak-perspective camera,
//! rendered into 2D observations with confidence decay and occlusion.
//!
//! Stands in for captured data: rigid skeleton animation in camera
//! coordinates (x right, y down, z forward), pixel projection, and the
//! confidence model visible ~ U[0.7, 1.0] / occluded ~ U[0.0, 0.4] with a gap
//! around the 0.5 threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{project, CameraModel};
use crate::error::{Error, Result};
use crate::fusion::{joint_occluded, pose_occluded};
use crate::gcn::{corrupt_coordinates, ObservedPose2D};
use crate::pose::Pose3D;
use crate::skeleton::{default_topology, SkeletonTopology};
use crate::tcn::DepthBins;

/// Kinematic motion patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MotionKind {
    Stand,
    WalkLine,
    WalkCircle,
    CrouchRise,
}

/// How occlusions are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OcclusionModel {
    None,
    /// Persons walk across the view at different depths and pass in front of
    /// each other.
    Crossing,
    /// A static occluder rectangle in image space.
    Box,
}

/// Static image-space occluder for [`OcclusionModel::Box`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccluderBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl OccluderBox {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }
}

/// Full description of one synthetic scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub person_count: usize,
    pub frame_count: usize,
    pub focal: f64,
    pub image_width: f64,
    pub image_height: f64,
    /// Metric depth range the roots stay inside, in meters.
    pub depth_range: (f64, f64),
    /// Per-person motions; drawn from the seed when absent.
    pub motions: Option<Vec<MotionKind>>,
    pub occlusion: OcclusionModel,
    /// Present only for the box model; a default is placed when absent.
    pub occluder: Option<OccluderBox>,
    pub noise_gain: f64,
    pub rng_seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            person_count: 2,
            frame_count: 60,
            focal: 1000.0,
            image_width: 1920.0,
            image_height: 1080.0,
            depth_range: (2.0, 8.0),
            motions: None,
            occlusion: OcclusionModel::None,
            occluder: None,
            noise_gain: crate::gcn::DEFAULT_NOISE_GAIN,
            rng_seed: 0,
        }
    }
}

/// Smallest frame count a scene may have: twice the TCN window.
pub const MIN_FRAME_COUNT: usize = 18;

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.person_count) {
            return Err(Error::Validation(format!(
                "person count must be 1..=6, got {}",
                self.person_count
            )));
        }
        if self.frame_count < MIN_FRAME_COUNT {
            return Err(Error::Validation(format!(
                "frame count must be >= {MIN_FRAME_COUNT}, got {}",
                self.frame_count
            )));
        }
        if !(self.focal > 0.0) {
            return Err(Error::Validation("focal length must be positive".into()));
        }
        if !(self.depth_range.0 > 0.0 && self.depth_range.0 < self.depth_range.1) {
            return Err(Error::Validation(format!(
                "invalid depth range {:?}",
                self.depth_range
            )));
        }
        if let Some(m) = &self.motions {
            if m.len() != self.person_count {
                return Err(Error::Validation(format!(
                    "{} motions for {} persons",
                    m.len(),
                    self.person_count
                )));
            }
        }
        if self.noise_gain < 0.0 {
            return Err(Error::Validation("noise gain must be non-negative".into()));
        }
        Ok(())
    }

    pub fn camera(&self) -> CameraModel {
        CameraModel::centered(self.image_width, self.image_height, self.focal)
            .expect("validated focal")
    }

    /// Depth bins covering this scene's Z/f span with a 25% margin.
    pub fn suggested_bins(&self, count: usize) -> Result<DepthBins> {
        DepthBins::covering(count, self.depth_range.0 / self.focal, self.depth_range.1 / self.focal, 0.25)
    }
}

/// One person's ground-truth 3D track.
#[derive(Debug, Clone)]
pub struct GtTrack {
    pub person_id: u32,
    /// Camera-centric joints per frame.
    pub joints: Vec<Pose3D>,
}

/// Ground-truth 3D motion for one scene.
#[derive(Debug, Clone)]
pub struct GroundTruthSequence {
    pub camera: CameraModel,
    pub tracks: Vec<GtTrack>,
}

/// One person's rendered track: observations plus ground truth.
#[derive(Debug, Clone)]
pub struct PersonTrack {
    pub person_id: u32,
    pub gt3d_cam: Vec<Pose3D>,
    pub obs: Vec<ObservedPose2D>,
    /// Pose-level occlusion per frame, derived from rendered confidences.
    pub occluded: Vec<bool>,
}

/// A fully rendered scene.
#[derive(Debug, Clone)]
pub struct SyntheticSequence {
    pub camera: CameraModel,
    pub persons: Vec<PersonTrack>,
}

// Canonical skeleton offsets in the body frame (x = person's left, y = down,
// z = person's forward), one entry per bone of the default topology. Pelvis
// to head sums to about 0.8 m.
const BONE_OFFSETS: [[f64; 3]; 16] = [
    [-0.11, 0.0, 0.0],   // pelvis -> right_hip
    [0.0, 0.42, 0.02],   // right_hip -> right_knee
    [0.0, 0.40, -0.02],  // right_knee -> right_ankle
    [0.11, 0.0, 0.0],    // pelvis -> left_hip
    [0.0, 0.42, 0.02],   // left_hip -> left_knee
    [0.0, 0.40, -0.02],  // left_knee -> left_ankle
    [0.0, -0.25, 0.01],  // pelvis -> spine
    [0.0, -0.25, 0.01],  // spine -> thorax
    [0.0, -0.13, 0.0],   // thorax -> neck
    [0.0, -0.17, 0.0],   // neck -> head
    [0.17, 0.02, 0.0],   // thorax -> left_shoulder
    [0.03, 0.28, 0.0],   // left_shoulder -> left_elbow
    [0.02, 0.26, 0.0],   // left_elbow -> left_wrist
    [-0.17, 0.02, 0.0],  // thorax -> right_shoulder
    [-0.03, 0.28, 0.0],  // right_shoulder -> right_elbow
    [-0.02, 0.26, 0.0],  // right_elbow -> right_wrist
];

fn rotate_about(axis: [f64; 3], angle: f64, v: [f64; 3]) -> [f64; 3] {
    // Rodrigues rotation; axis must be unit length.
    let (s, c) = angle.sin_cos();
    let dot = axis[0] * v[0] + axis[1] * v[1] + axis[2] * v[2];
    let cross = [
        axis[1] * v[2] - axis[2] * v[1],
        axis[2] * v[0] - axis[0] * v[2],
        axis[0] * v[1] - axis[1] * v[0],
    ];
    [
        v[0] * c + cross[0] * s + axis[0] * dot * (1.0 - c),
        v[1] * c + cross[1] * s + axis[1] * dot * (1.0 - c),
        v[2] * c + cross[2] * s + axis[2] * dot * (1.0 - c),
    ]
}

#[derive(Debug, Clone)]
struct PersonSetup {
    motion: MotionKind,
    scale: f64,
    start: [f64; 3],
    /// Horizontal unit direction of travel (walk motions).
    dir: [f64; 2],
    speed: f64,
    phase: f64,
    swing: f64,
    circle_radius: f64,
}

/// Which limb chain a bone belongs to, for swing animation.
fn chain_of(bone_index: usize) -> Option<usize> {
    match bone_index {
        1 | 2 => Some(0),   // right leg below hip
        4 | 5 => Some(1),   // left leg
        11 | 12 => Some(2), // left arm below shoulder
        14 | 15 => Some(3), // right arm
        _ => None,
    }
}

fn person_pose_at(setup: &PersonSetup, t: usize, topology: &SkeletonTopology) -> Pose3D {
    let tf = t as f64;
    let two_pi = std::f64::consts::TAU;
    // root trajectory and heading
    let (root, heading): ([f64; 3], [f64; 2]) = match setup.motion {
        MotionKind::Stand => (setup.start, setup.dir),
        MotionKind::WalkLine => (
            [
                setup.start[0] + setup.dir[0] * setup.speed * tf,
                setup.start[1],
                setup.start[2] + setup.dir[1] * setup.speed * tf,
            ],
            setup.dir,
        ),
        MotionKind::WalkCircle => {
            let omega = setup.speed / setup.circle_radius.max(1e-6);
            let ang = setup.phase + omega * tf;
            let root = [
                setup.start[0] + setup.circle_radius * ang.cos(),
                setup.start[1],
                setup.start[2] + setup.circle_radius * ang.sin(),
            ];
            // tangent of the circle
            (root, [-ang.sin(), ang.cos()])
        }
        MotionKind::CrouchRise => {
            let dip = 0.18 * (1.0 - (two_pi * tf / 40.0 + setup.phase).cos()) / 2.0;
            ([setup.start[0], setup.start[1] + dip, setup.start[2]], setup.dir)
        }
    };

    // body yaw aligning the forward axis with the heading
    let yaw = heading[0].atan2(heading[1]);
    let up = [0.0, -1.0, 0.0];
    let lateral = {
        let fwd = [heading[0], 0.0, heading[1]];
        // up x forward
        [
            up[1] * fwd[2] - up[2] * fwd[1],
            up[2] * fwd[0] - up[0] * fwd[2],
            up[0] * fwd[1] - up[1] * fwd[0],
        ]
    };

    let gait = two_pi * tf / 30.0 + setup.phase;
    let swinging = matches!(setup.motion, MotionKind::WalkLine | MotionKind::WalkCircle);
    let crouching = matches!(setup.motion, MotionKind::CrouchRise);
    let leg = if swinging { setup.swing * gait.sin() } else { 0.0 };
    let crouch_bend = if crouching { 0.45 * (1.0 - (two_pi * tf / 40.0 + setup.phase).cos()) / 2.0 } else { 0.0 };
    // chain swing angles: right leg, left leg, left arm, right arm
    let chain_angle = [leg + crouch_bend, -leg + crouch_bend, -0.6 * leg, 0.6 * leg];

    let n = topology.joint_count();
    let mut joints = vec![[0.0f64; 3]; n];
    joints[topology.root_index()] = root;
    for (b, bone) in topology.bones().iter().enumerate() {
        let off = BONE_OFFSETS[b];
        let scaled = [off[0] * setup.scale, off[1] * setup.scale, off[2] * setup.scale];
        // body frame -> camera frame via yaw about the up axis
        let (sy, cy) = yaw.sin_cos();
        let world = [scaled[0] * cy + scaled[2] * sy, scaled[1], -scaled[0] * sy + scaled[2] * cy];
        let rotated = match chain_of(b) {
            Some(chain) => rotate_about(normalize3(lateral), chain_angle[chain], world),
            None => world,
        };
        let p = joints[bone.parent];
        joints[bone.child] = [p[0] + rotated[0], p[1] + rotated[1], p[2] + rotated[2]];
    }
    Pose3D::camera_centric(joints)
}

fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(1e-12);
    [v[0] / n, v[1] / n, v[2] / n]
}

fn draw_setups(config: &SceneConfig, rng: &mut ChaCha20Rng) -> Vec<PersonSetup> {
    let (lo, hi) = config.depth_range;
    let span = hi - lo;
    let p = config.person_count;
    let mut setups = Vec::with_capacity(p);
    for k in 0..p {
        let motion = match (&config.motions, config.occlusion) {
            // crossing scenes force opposing lateral walks at distinct depths
            (_, OcclusionModel::Crossing) => MotionKind::WalkLine,
            (Some(list), _) => list[k],
            (None, _) => match rng.gen_range(0..4) {
                0 => MotionKind::Stand,
                1 => MotionKind::WalkLine,
                2 => MotionKind::WalkCircle,
                _ => MotionKind::CrouchRise,
            },
        };
        let scale = rng.gen_range(0.92..1.08);
        let frames = config.frame_count as f64;
        let setup = if config.occlusion == OcclusionModel::Crossing {
            // spread depths; alternate crossing directions timed to meet mid-sequence
            let z = lo + span * (0.25 + 0.5 * (k as f64) / (p.max(2) as f64 - 1.0).max(1.0))
                + rng.gen_range(-0.05..0.05) * span;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let reach = (0.35 * z).min(1.8);
            let speed = 2.0 * reach / frames;
            PersonSetup {
                motion,
                scale,
                start: [-sign * reach, rng.gen_range(-0.05..0.05), z],
                dir: [sign, 0.0],
                speed,
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
                swing: rng.gen_range(0.35..0.55),
                circle_radius: 0.0,
            }
        } else {
            let z0 = lo + span * rng.gen_range(0.15..0.45);
            match motion {
                MotionKind::WalkLine => {
                    // walk away from the camera, staying inside the depth range
                    let speed = ((hi - 0.2 - z0) / frames).clamp(0.005, 0.05);
                    PersonSetup {
                        motion,
                        scale,
                        start: [rng.gen_range(-0.25..0.25) * z0, rng.gen_range(-0.05..0.05), z0],
                        dir: [0.0, 1.0],
                        speed,
                        phase: rng.gen_range(0.0..std::f64::consts::TAU),
                        swing: rng.gen_range(0.35..0.55),
                        circle_radius: 0.0,
                    }
                }
                MotionKind::WalkCircle => {
                    let z_c = lo + span * rng.gen_range(0.3..0.6);
                    let radius = (0.2 * span).min(z_c - lo - 0.1).max(0.2);
                    PersonSetup {
                        motion,
                        scale,
                        start: [rng.gen_range(-0.2..0.2) * z_c, rng.gen_range(-0.05..0.05), z_c],
                        dir: [0.0, 1.0],
                        speed: rng.gen_range(0.02..0.045),
                        phase: rng.gen_range(0.0..std::f64::consts::TAU),
                        swing: rng.gen_range(0.35..0.55),
                        circle_radius: radius,
                    }
                }
                MotionKind::Stand | MotionKind::CrouchRise => PersonSetup {
                    motion,
                    scale,
                    start: [rng.gen_range(-0.3..0.3) * z0, rng.gen_range(-0.05..0.05), z0],
                    dir: [0.0, 1.0],
                    speed: 0.0,
                    phase: rng.gen_range(0.0..std::f64::consts::TAU),
                    swing: 0.0,
                    circle_radius: 0.0,
                },
            }
        };
        setups.push(setup);
    }
    setups
}

/// Deterministic kinematic animation for every person in the scene.
pub fn generate(config: &SceneConfig) -> Result<GroundTruthSequence> {
    config.validate()?;
    let topology = default_topology();
    let mut rng = ChaCha20Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(0);
    let setups = draw_setups(config, &mut rng);
    let camera = config.camera();
    let mut tracks = Vec::with_capacity(config.person_count);
    for (k, setup) in setups.iter().enumerate() {
        let joints: Vec<Pose3D> =
            (0..config.frame_count).map(|t| person_pose_at(setup, t, &topology)).collect();
        for pose in &joints {
            for j in pose.joints() {
                if !(j[2] > 0.0) {
                    return Err(Error::Generation(format!(
                        "person {k} has a joint behind the camera (z = {})",
                        j[2]
                    )));
                }
            }
        }
        tracks.push(GtTrack { person_id: k as u32, joints });
    }
    Ok(GroundTruthSequence { camera, tracks })
}

fn bbox_of(points: &[[f64; 2]]) -> (f64, f64, f64, f64) {
    let mut x_min = f64::INFINITY;
    let mut y_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for p in points {
        x_min = x_min.min(p[0]);
        y_min = y_min.min(p[1]);
        x_max = x_max.max(p[0]);
        y_max = y_max.max(p[1]);
    }
    (x_min, y_min, x_max, y_max)
}

fn default_box(config: &SceneConfig) -> OccluderBox {
    OccluderBox {
        x_min: config.image_width * 0.40,
        y_min: config.image_height * 0.05,
        x_max: config.image_width * 0.62,
        y_max: config.image_height * 0.95,
    }
}

/// Projects the ground truth and draws confidences plus coordinate noise.
/// Joints hidden by an occluder or a nearer person get low confidence
/// (< 0.5); visible joints get high confidence (>= 0.7, above the 0.5
/// threshold).
pub fn render(seq: &GroundTruthSequence, config: &SceneConfig) -> Result<Vec<PersonTrack>> {
    config.validate()?;
    let topology = default_topology();
    let mut rng = ChaCha20Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(1);
    let frame_count = seq.tracks.first().map_or(0, |t| t.joints.len());
    let occluder = match config.occlusion {
        OcclusionModel::Box => Some(config.occluder.unwrap_or_else(|| default_box(config))),
        _ => None,
    };

    // clean projections: [person][frame][joint]
    let mut clean: Vec<Vec<Vec<[f64; 2]>>> = Vec::with_capacity(seq.tracks.len());
    for track in &seq.tracks {
        let mut frames = Vec::with_capacity(frame_count);
        for pose in &track.joints {
            let mut px = Vec::with_capacity(pose.joint_count());
            for &j in pose.joints() {
                px.push(project(j, &seq.camera)?);
            }
            frames.push(px);
        }
        clean.push(frames);
    }

    let mut persons: Vec<PersonTrack> = seq
        .tracks
        .iter()
        .map(|t| PersonTrack {
            person_id: t.person_id,
            gt3d_cam: t.joints.clone(),
            obs: Vec::with_capacity(frame_count),
            occluded: Vec::with_capacity(frame_count),
        })
        .collect();

    for t in 0..frame_count {
        // expanded boxes for person-person occlusion, with root depths
        let boxes: Vec<((f64, f64, f64, f64), f64)> = seq
            .tracks
            .iter()
            .enumerate()
            .map(|(k, track)| {
                let (x0, y0, x1, y1) = bbox_of(&clean[k][t]);
                let (w, h) = (x1 - x0, y1 - y0);
                // the nearer person's hull, expanded by 10%
                let grow = 0.10;
                let bb = (x0 - w * grow, y0 - h * grow, x1 + w * grow, y1 + h * grow);
                (bb, track.joints[t].joints()[topology.root_index()][2])
            })
            .collect();

        for (k, _track) in seq.tracks.iter().enumerate() {
            let px = &clean[k][t];
            let my_depth = boxes[k].1;
            let mut occluded_joint = vec![false; px.len()];
            for (j, p) in px.iter().enumerate() {
                if let Some(bx) = &occluder {
                    if bx.contains(*p) {
                        occluded_joint[j] = true;
                    }
                }
                if config.occlusion == OcclusionModel::Crossing {
                    for (other, ((x0, y0, x1, y1), depth)) in boxes.iter().enumerate() {
                        if other == k || *depth >= my_depth {
                            continue;
                        }
                        if p[0] >= *x0 && p[0] <= *x1 && p[1] >= *y0 && p[1] <= *y1 {
                            occluded_joint[j] = true;
                            break;
                        }
                    }
                }
            }
            let confs: Vec<f64> = occluded_joint
                .iter()
                .map(|&o| if o { rng.gen_range(0.0..0.4) } else { rng.gen_range(0.7..=1.0) })
                .collect();
            let pose_scale = {
                let root = px[topology.root_index()];
                let total: f64 = px
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != topology.root_index())
                    .map(|(_, p)| ((p[0] - root[0]).powi(2) + (p[1] - root[1]).powi(2)).sqrt())
                    .sum();
                total / (px.len() - 1) as f64
            };
            let noisy = corrupt_coordinates(px, &confs, config.noise_gain, pose_scale, &mut rng);
            let bone_conf: Vec<f64> = topology
                .bones()
                .iter()
                .map(|b| confs[b.parent].min(confs[b.child]))
                .collect();
            let obs = ObservedPose2D::new(noisy, confs, bone_conf)?;
            let flags: Vec<bool> = obs.joint_conf().iter().map(|&c| joint_occluded(c)).collect();
            let pose_occ = pose_occluded(&flags)?;
            debug_assert_eq!(
                occluded_joint, flags,
                "confidence ranges must reproduce the occlusion flags"
            );
            persons[k].obs.push(obs);
            persons[k].occluded.push(pose_occ);
        }
    }
    Ok(persons)
}

/// Generate + render in one step.
pub fn generate_scene(config: &SceneConfig) -> Result<SyntheticSequence> {
    let gt = generate(config)?;
    let persons = render(&gt, config)?;
    Ok(SyntheticSequence { camera: gt.camera, persons })
}

/// A corpus of scenes with per-scene derived seeds. Person counts are drawn
/// from `person_range` per scene.
pub fn generate_dataset(
    base: &SceneConfig,
    scene_count: usize,
    person_range: (usize, usize),
    seed: u64,
) -> Result<Vec<SyntheticSequence>> {
    if scene_count == 0 {
        return Err(Error::Validation("scene count must be positive".into()));
    }
    if person_range.0 < 1 || person_range.0 > person_range.1 || person_range.1 > 6 {
        return Err(Error::Validation(format!("invalid person range {person_range:?}")));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(2);
    let configs: Vec<SceneConfig> = (0..scene_count)
        .map(|i| {
            let mut c = base.clone();
            c.person_count = rng.gen_range(person_range.0..=person_range.1);
            c.rng_seed = seed.wrapping_add(1 + i as u64);
            c
        })
        .collect();
    let results = crate::parallel::map_indexed(&configs, |_, c| generate_scene(c));
    results.into_iter().collect()
}

/// Deterministic sequence-level partition into train/val/test.
pub fn split<T>(mut items: Vec<T>, ratios: (f64, f64, f64), seed: u64) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let (a, b, c) = ratios;
    if !(a >= 0.0 && b >= 0.0 && c >= 0.0) || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(Error::Validation(format!("ratios {ratios:?} must be non-negative and sum to 1")));
    }
    let n = items.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(3);
    // Fisher-Yates
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let n_train = (a * n as f64).round() as usize;
    let n_val = (b * n as f64).round() as usize;
    let n_train = n_train.min(n);
    let n_val = n_val.min(n - n_train);

    let mut tagged: Vec<(usize, T)> = order.into_iter().zip(items.drain(..)).collect();
    tagged.sort_by_key(|(pos, _)| *pos);
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for (pos, item) in tagged {
        if pos < n_train {
            train.push(item);
        } else if pos < n_train + n_val {
            val.push(item);
        } else {
            test.push(item);
        }
    }
    Ok((train, val, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::back_project;

    fn base_config() -> SceneConfig {
        SceneConfig { frame_count: 40, rng_seed: 7, ..SceneConfig::default() }
    }

    #[test]
    fn config_validation() {
        let mut c = base_config();
        c.person_count = 0;
        assert!(c.validate().is_err());
        c.person_count = 7;
        assert!(c.validate().is_err());
        let mut c = base_config();
        c.frame_count = 10;
        assert!(c.validate().is_err());
        let mut c = base_config();
        c.depth_range = (5.0, 2.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn stand_motion_is_constant_over_time() {
        let c = SceneConfig {
            person_count: 1,
            motions: Some(vec![MotionKind::Stand]),
            ..base_config()
        };
        let gt = generate(&c).unwrap();
        let track = &gt.tracks[0];
        let first = &track.joints[0];
        for pose in &track.joints {
            for (a, b) in pose.joints().iter().zip(first.joints()) {
                for k in 0..3 {
                    assert_eq!(a[k], b[k]);
                }
            }
        }
    }

    #[test]
    fn walk_line_advances_depth_linearly() {
        let c = SceneConfig {
            person_count: 1,
            motions: Some(vec![MotionKind::WalkLine]),
            ..base_config()
        };
        let gt = generate(&c).unwrap();
        let track = &gt.tracks[0];
        let root = |t: usize| track.joints[t].joints()[0];
        let v = root(1)[2] - root(0)[2];
        assert!(v > 0.0, "walk-line should move away from the camera");
        for t in 1..c.frame_count {
            let dz = root(t)[2] - root(t - 1)[2];
            assert!((dz - v).abs() < 1e-9);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let c = base_config();
        let a = generate(&c).unwrap();
        let b = generate(&c).unwrap();
        for (ta, tb) in a.tracks.iter().zip(&b.tracks) {
            for (pa, pb) in ta.joints.iter().zip(&tb.joints) {
                for (ja, jb) in pa.joints().iter().zip(pb.joints()) {
                    for k in 0..3 {
                        assert_eq!(ja[k].to_bits(), jb[k].to_bits());
                    }
                }
            }
        }
    }

    #[test]
    fn bone_lengths_are_rigid_over_time() {
        let topo = default_topology();
        for occ in [OcclusionModel::None, OcclusionModel::Crossing] {
            let c = SceneConfig { person_count: 3, occlusion: occ, rng_seed: 3, ..base_config() };
            let gt = generate(&c).unwrap();
            for track in &gt.tracks {
                let ref_lengths: Vec<f64> = topo
                    .bones()
                    .iter()
                    .map(|b| {
                        let j = track.joints[0].joints();
                        dist3(j[b.parent], j[b.child])
                    })
                    .collect();
                for pose in &track.joints {
                    for (bi, b) in topo.bones().iter().enumerate() {
                        let d = dist3(pose.joints()[b.parent], pose.joints()[b.child]);
                        assert!(
                            (d - ref_lengths[bi]).abs() < 1e-9,
                            "bone {bi}: {d} vs {}",
                            ref_lengths[bi]
                        );
                    }
                }
            }
        }
    }

    fn dist3(a: [f64; 3], b: [f64; 3]) -> f64 {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }

    #[test]
    fn depths_stay_inside_range_and_bins() {
        for seed in 0..5 {
            let c = SceneConfig { person_count: 3, rng_seed: seed, ..base_config() };
            let bins = c.suggested_bins(60).unwrap();
            let gt = generate(&c).unwrap();
            for track in &gt.tracks {
                for pose in &track.joints {
                    let root_z = pose.joints()[0][2];
                    assert!(root_z > 0.0);
                    assert!(bins.contains(root_z / c.focal), "z/f {} outside bins", root_z / c.focal);
                }
            }
        }
    }

    #[test]
    fn noiseless_render_is_exact_and_confident() {
        let c = SceneConfig { noise_gain: 0.0, person_count: 2, ..base_config() };
        let gt = generate(&c).unwrap();
        let persons = render(&gt, &c).unwrap();
        for (k, person) in persons.iter().enumerate() {
            for (t, obs) in person.obs.iter().enumerate() {
                assert!(obs.joint_conf().iter().all(|&cf| cf >= 0.5));
                assert!(!person.occluded[t]);
                // exact back-projection with per-joint gt depth recovers 3D
                let gt_pose = &gt.tracks[k].joints[t];
                for (j, px) in obs.joints2d().iter().enumerate() {
                    let z = gt_pose.joints()[j][2];
                    let rec = back_project(*px, z / c.focal, &gt.camera).unwrap();
                    for a in 0..3 {
                        assert!(
                            (rec[a] - gt_pose.joints()[j][a]).abs() < 1e-9,
                            "person {k} frame {t} joint {j} axis {a}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn box_occluder_marks_covered_joints() {
        let c = SceneConfig {
            person_count: 1,
            occlusion: OcclusionModel::Box,
            // a box over the whole frame occludes everything
            occluder: Some(OccluderBox { x_min: 0.0, y_min: 0.0, x_max: 1920.0, y_max: 1080.0 }),
            motions: Some(vec![MotionKind::Stand]),
            ..base_config()
        };
        let gt = generate(&c).unwrap();
        let persons = render(&gt, &c).unwrap();
        for obs in &persons[0].obs {
            assert!(obs.joint_conf().iter().all(|&cf| joint_occluded(cf)));
        }
        assert!(persons[0].occluded.iter().all(|&o| o));
    }

    #[test]
    fn crossing_scene_occludes_the_far_person_contiguously() {
        let c = SceneConfig {
            person_count: 2,
            occlusion: OcclusionModel::Crossing,
            frame_count: 60,
            rng_seed: 11,
            ..SceneConfig::default()
        };
        let seq = generate_scene(&c).unwrap();
        // the farther person must have a non-empty contiguous occluded run
        let far = seq
            .persons
            .iter()
            .max_by(|a, b| {
                let za = a.gt3d_cam[0].joints()[0][2];
                let zb = b.gt3d_cam[0].joints()[0][2];
                za.total_cmp(&zb)
            })
            .unwrap();
        let intervals = crate::fusion::occlusion_intervals(&far.occluded);
        assert!(
            !intervals.is_empty(),
            "expected the far person to be occluded at closest approach"
        );
    }

    #[test]
    fn render_flags_match_confidence_rule_by_construction() {
        let c = SceneConfig { person_count: 2, occlusion: OcclusionModel::Crossing, ..base_config() };
        let seq = generate_scene(&c).unwrap();
        for person in &seq.persons {
            for (t, obs) in person.obs.iter().enumerate() {
                let flags: Vec<bool> =
                    obs.joint_conf().iter().map(|&cf| joint_occluded(cf)).collect();
                assert_eq!(person.occluded[t], pose_occluded(&flags).unwrap());
            }
        }
    }

    #[test]
    fn split_examples() {
        let items: Vec<usize> = (0..10).collect();
        let (tr, va, te) = split(items.clone(), (1.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(tr.len(), 10);
        assert!(va.is_empty() && te.is_empty());

        let (tr, va, te) = split(items.clone(), (0.7, 0.15, 0.15), 1).unwrap();
        assert!((tr.len() as i64 - 7).abs() <= 1);
        assert!((va.len() as i64 - 2).abs() <= 1);
        assert!((te.len() as i64 - 1).abs() <= 1);
        assert_eq!(tr.len() + va.len() + te.len(), 10);

        let again = split(items.clone(), (0.7, 0.15, 0.15), 1).unwrap();
        assert_eq!((tr, va, te), again);

        assert!(split(items, (0.5, 0.4, 0.2), 1).is_err());
    }

    #[test]
    fn dataset_generation_is_deterministic_and_varied() {
        let base = base_config();
        let a = generate_dataset(&base, 6, (2, 3), 42).unwrap();
        let b = generate_dataset(&base, 6, (2, 3), 42).unwrap();
        assert_eq!(a.len(), 6);
        for (sa, sb) in a.iter().zip(&b) {
            assert_eq!(sa.persons.len(), sb.persons.len());
            for (pa, pb) in sa.persons.iter().zip(&sb.persons) {
                assert_eq!(pa.obs, pb.obs);
            }
        }
        assert!(a.iter().any(|s| s.persons.len() == 2));
    }
}
