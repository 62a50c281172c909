//! Optimizers, staged training loops for the GCN and the three TCNs,
//! sample builders over synthetic corpora, and the gradient-check entry
//! point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::camera::{normalize_pose, CameraModel, NormalizedPose};
use crate::diffcore::{
    grad_check, BoundParams, DifferentiableScalar, GradReport, Graph, ParamStore, Tensor,
};
use crate::error::{Error, Result};
use crate::gcn::{augment_sample, pose_loss_on_graph, GcnHyper, GcnModel, ObservedPose2D};
use crate::pose::Pose3D;
use crate::skeleton::{SkeletonMatrices, SkeletonTopology};
use crate::synthgen::SyntheticSequence;
use crate::tcn::{
    joint_window_tensor, normalize_root_state, normalize_velocity, root_frame_features,
    soft_argmax_on_graph, DepthBins, RootState, TcnHyper, TcnKind, TcnModel,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// Optimizer and loop settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub clip_norm: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            batch_size: 32,
            epochs: 50,
            seed: 0,
            clip_norm: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        // zero is allowed so a no-op training pass stays expressible
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Validation("learning rate must be finite and non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Validation("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Adam moment estimates (empty for SGD).
#[derive(Debug, Clone, Default)]
pub struct OptimizerState {
    pub step_count: u64,
    pub m: Option<ParamStore>,
    pub v: Option<ParamStore>,
}

/// One SGD or Adam update, in place. Gradient keys must match parameter keys.
pub fn step(
    params: &mut ParamStore,
    grads: &ParamStore,
    state: &mut OptimizerState,
    config: &OptimizerConfig,
) -> Result<()> {
    config.validate()?;
    params.check_same_layout(grads)?;

    let clip_scale = match config.clip_norm {
        Some(max_norm) => {
            let mut sq = 0.0;
            for (_, g) in grads.iter() {
                sq += g.data().iter().map(|v| v * v).sum::<f64>();
            }
            let norm = sq.sqrt();
            if norm > max_norm {
                max_norm / norm
            } else {
                1.0
            }
        }
        None => 1.0,
    };

    match config.kind {
        OptimizerKind::Sgd => {
            let names: Vec<String> = params.names().cloned().collect();
            for name in names {
                let g = grads.get(&name).expect("layout checked");
                let gd: Vec<f64> = g.data().iter().map(|v| v * clip_scale).collect();
                let p = params.get_mut(&name).expect("layout checked");
                for (pv, gv) in p.data_mut().iter_mut().zip(gd) {
                    *pv -= config.learning_rate * gv;
                }
            }
            state.step_count += 1;
        }
        OptimizerKind::Adam => {
            if state.m.is_none() {
                state.m = Some(params.zeros_like());
                state.v = Some(params.zeros_like());
            }
            state.step_count += 1;
            let t = state.step_count;
            let m_hat_corr = 1.0 - config.beta1.powi(t as i32);
            let v_hat_corr = 1.0 - config.beta2.powi(t as i32);
            let m_store = state.m.as_mut().expect("just initialized");
            let v_store = state.v.as_mut().expect("just initialized");
            let names: Vec<String> = params.names().cloned().collect();
            for name in names {
                let g = grads.get(&name).expect("layout checked");
                let m = m_store.get_mut(&name).expect("layout");
                let v = v_store.get_mut(&name).expect("layout");
                let p = params.get_mut(&name).expect("layout");
                for ((pv, mv), (vv, gv0)) in p
                    .data_mut()
                    .iter_mut()
                    .zip(m.data_mut())
                    .zip(v.data_mut().iter_mut().zip(g.data()))
                {
                    let gv = gv0 * clip_scale;
                    *mv = config.beta1 * *mv + (1.0 - config.beta1) * gv;
                    *vv = config.beta2 * *vv + (1.0 - config.beta2) * gv * gv;
                    let m_hat = *mv / m_hat_corr;
                    let v_hat = *vv / v_hat_corr;
                    *pv -= config.learning_rate * m_hat / (v_hat.sqrt() + config.eps);
                }
            }
        }
    }
    Ok(())
}

/// Non-finite values surfacing mid-epoch are divergence, not bad input.
fn divergence_as_training(e: Error, epoch: usize) -> Error {
    match e {
        Error::Validation(msg) if msg.contains("non-finite") => {
            Error::Training { epoch, msg }
        }
        Error::Evaluation(msg) if msg.contains("non-finite") => {
            Error::Training { epoch, msg }
        }
        other => other,
    }
}

fn check_convergent(params: &ParamStore, epoch: usize) -> Result<()> {
    if params.iter().any(|(_, t)| !t.all_finite()) {
        return Err(Error::Training { epoch, msg: "parameters diverged to non-finite values".into() });
    }
    Ok(())
}

/// Per-epoch losses and timings.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub seconds: Vec<f64>,
}

impl TrainHistory {
    pub fn epochs_completed(&self) -> usize {
        self.train_loss.len()
    }

    /// CSV form: epoch, train_loss, val_loss, seconds.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss,seconds\n");
        for i in 0..self.train_loss.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                i, self.train_loss[i], self.val_loss[i], self.seconds[i]
            ));
        }
        out
    }
}

/// One GCN training sample: the rendered observation, the clean 2D ground
/// truth for augmentation, and the person-centric 3D target.
#[derive(Debug, Clone)]
pub struct GcnSample {
    pub obs: ObservedPose2D,
    pub gt2d: ObservedPose2D,
    pub gt3d_pc: Pose3D,
}

/// Flattens scenes into per-frame GCN samples. The clean 2D ground truth is
/// the exact projection with full confidence.
pub fn build_gcn_samples(
    sequences: &[SyntheticSequence],
    topology: &SkeletonTopology,
) -> Result<Vec<GcnSample>> {
    let mut out = Vec::new();
    for seq in sequences {
        for person in &seq.persons {
            for (t, obs) in person.obs.iter().enumerate() {
                let gt_cam = &person.gt3d_cam[t];
                let root = gt_cam.joints()[topology.root_index()];
                let gt3d_pc = gt_cam.to_person_centric(root);
                let mut px = Vec::with_capacity(gt_cam.joint_count());
                for &j in gt_cam.joints() {
                    px.push(crate::camera::project(j, &seq.camera)?);
                }
                let gt2d = ObservedPose2D::new(
                    px,
                    vec![1.0; topology.joint_count()],
                    vec![1.0; topology.bone_count()],
                )?;
                out.push(GcnSample { obs: obs.clone(), gt2d, gt3d_pc });
            }
        }
    }
    Ok(out)
}

fn gcn_batch_loss_and_grads(
    model: &GcnModel,
    mats: &SkeletonMatrices,
    batch: &[(&ObservedPose2D, &Pose3D)],
) -> Result<(f64, ParamStore)> {
    let mut g = Graph::new();
    let bound = BoundParams::bind(&mut g, model.params());
    let mut losses = Vec::with_capacity(batch.len());
    for (obs, gt) in batch {
        let pred = model.forward_on_graph(&mut g, &bound, obs, mats)?;
        losses.push(pose_loss_on_graph(&mut g, pred, gt)?);
    }
    let mean = g.mean_scalars(&losses)?;
    let grads = g.backward(mean)?;
    Ok((g.value(mean).item()?, bound.collect_grads(&g, &grads)?))
}

fn mean_validation_loss<S, F>(samples: &[S], f: F) -> Result<f64>
where
    F: Fn(&S) -> Result<f64> + Sync,
    S: Sync,
{
    if samples.is_empty() {
        return Ok(f64::NAN);
    }
    let losses = crate::parallel::map_indexed(samples, |_, s| f(s));
    let mut total = 0.0;
    for l in losses {
        total += l?;
    }
    Ok(total / samples.len() as f64)
}

/// Trains the GCN on a mix of rendered observations and freshly corrupted
/// ground truth (re-drawn every epoch).
pub fn train_gcn(
    train: &[GcnSample],
    val: &[GcnSample],
    topology: &SkeletonTopology,
    hyper: GcnHyper,
    config: &OptimizerConfig,
    noise_gain: f64,
) -> Result<(GcnModel, TrainHistory)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Validation("empty GCN training set".into()));
    }
    let mats = SkeletonMatrices::from_topology(topology)?;
    let mut model = GcnModel::init(hyper, config.seed)?;
    let mut state = OptimizerState::default();
    let mut history = TrainHistory::default();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(10);

    for epoch in 0..config.epochs {
        let t0 = std::time::Instant::now();
        let mut order: Vec<usize> = (0..train.len()).collect();
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        // each epoch re-corrupts ground truth; half the samples use the
        // rendered observations from the 2D front-end
        let epoch_obs: Vec<ObservedPose2D> = order
            .iter()
            .map(|&idx| {
                let s = &train[idx];
                if rng.gen_bool(0.5) {
                    Ok(s.obs.clone())
                } else {
                    augment_sample(topology, &s.gt2d, noise_gain, &mut rng)
                }
            })
            .collect::<Result<_>>()?;

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (chunk_ids, chunk_obs) in
            order.chunks(config.batch_size).zip(epoch_obs.chunks(config.batch_size))
        {
            let batch: Vec<(&ObservedPose2D, &Pose3D)> = chunk_ids
                .iter()
                .zip(chunk_obs)
                .map(|(&idx, obs)| (obs, &train[idx].gt3d_pc))
                .collect();
            let (loss, grads) = gcn_batch_loss_and_grads(&model, &mats, &batch)
                .map_err(|e| divergence_as_training(e, epoch))?;
            if !loss.is_finite() {
                return Err(Error::Training { epoch, msg: format!("non-finite loss {loss}") });
            }
            epoch_loss += loss;
            batches += 1;
            step(model.params_mut(), &grads, &mut state, config)?;
            check_convergent(model.params(), epoch)?;
        }

        let val_loss = mean_validation_loss(val, |s| {
            let pred = model.forward(&s.obs, &mats)?;
            crate::gcn::gcn_loss(&pred, &s.gt3d_pc)
        })?;
        history.train_loss.push(epoch_loss / batches.max(1) as f64);
        history.val_loss.push(val_loss);
        history.seconds.push(t0.elapsed().as_secs_f64());
    }
    Ok((model, history))
}

/// Centered window of person-centric poses plus the central-frame target.
#[derive(Debug, Clone)]
pub struct JointTcnSample {
    pub window: Vec<Pose3D>,
    pub target: Pose3D,
}

/// Causal window of normalized root states and velocities plus the next
/// velocity target.
#[derive(Debug, Clone)]
pub struct VelocityTcnSample {
    pub states: Vec<RootState>,
    pub velocities: Vec<RootState>,
    pub target: RootState,
}

/// Centered window of (p, c, s) triples plus the ground-truth Z/f target.
#[derive(Debug, Clone)]
pub struct RootTcnSample {
    pub window: Vec<NormalizedPose>,
    pub target_zf: f64,
    pub cam_center: [f64; 2],
}

fn centered_indices(len: usize, t: usize, half: usize) -> Vec<usize> {
    (-(half as i64)..=half as i64)
        .map(|d| (t as i64 + d).clamp(0, len as i64 - 1) as usize)
        .collect()
}

/// Runs the frozen GCN over every frame and cuts centered windows; targets
/// are the ground-truth person-centric central poses.
pub fn build_joint_tcn_samples(
    sequences: &[SyntheticSequence],
    gcn: &GcnModel,
    mats: &SkeletonMatrices,
    window: usize,
) -> Result<Vec<JointTcnSample>> {
    let half = window / 2;
    let mut tracks: Vec<(&crate::synthgen::PersonTrack, &CameraModel)> = Vec::new();
    for seq in sequences {
        for person in &seq.persons {
            tracks.push((person, &seq.camera));
        }
    }
    let per_track = crate::parallel::map_indexed(&tracks, |_, (person, _)| -> Result<Vec<JointTcnSample>> {
        let frames = person.obs.len();
        let mut gcn_out = Vec::with_capacity(frames);
        for obs in &person.obs {
            gcn_out.push(gcn.forward(obs, mats)?);
        }
        let mut samples = Vec::with_capacity(frames);
        for t in 0..frames {
            let window_poses: Vec<Pose3D> =
                centered_indices(frames, t, half).into_iter().map(|i| gcn_out[i].clone()).collect();
            let gt_cam = &person.gt3d_cam[t];
            let root = gt_cam.joints()[mats.root_index];
            samples.push(JointTcnSample { window: window_poses, target: gt_cam.to_person_centric(root) });
        }
        Ok(samples)
    });
    let mut out = Vec::new();
    for r in per_track {
        out.extend(r?);
    }
    Ok(out)
}

/// Ground-truth root state (X, Y, Z/f) for one frame.
fn gt_root_state(pose: &Pose3D, root_index: usize, camera: &CameraModel) -> RootState {
    let r = pose.joints()[root_index];
    let f = camera.focal_or_unit();
    [r[0], r[1], r[2] / f]
}

fn diffs(states: &[RootState]) -> Vec<RootState> {
    (0..states.len())
        .map(|t| {
            if t == 0 {
                [0.0; 3]
            } else {
                [
                    states[t][0] - states[t - 1][0],
                    states[t][1] - states[t - 1][1],
                    states[t][2] - states[t - 1][2],
                ]
            }
        })
        .collect()
}

fn velocity_samples_from_tracks(
    input_states: &[RootState],
    target_states: &[RootState],
    window: usize,
    out: &mut Vec<VelocityTcnSample>,
) {
    let frames = input_states.len();
    let in_vels = diffs(input_states);
    let target_vels = diffs(target_states);
    for t in window..frames {
        let s: Vec<RootState> = (t - window..t).map(|i| input_states[i]).collect();
        let v: Vec<RootState> = (t - window..t).map(|i| in_vels[i]).collect();
        out.push(VelocityTcnSample { states: s, velocities: v, target: target_vels[t] });
    }
}

fn gt_states_normalized(
    person: &crate::synthgen::PersonTrack,
    camera: &CameraModel,
    bins: &DepthBins,
    root_index: usize,
) -> Vec<RootState> {
    person
        .gt3d_cam
        .iter()
        .map(|p| normalize_root_state(gt_root_state(p, root_index, camera), bins))
        .collect()
}

/// Builds causal velocity samples from ground-truth root tracks, in
/// normalized units (depth per bin span).
pub fn build_velocity_samples(
    sequences: &[SyntheticSequence],
    bins: &DepthBins,
    root_index: usize,
    window: usize,
) -> Result<Vec<VelocityTcnSample>> {
    let mut out = Vec::new();
    for seq in sequences {
        for person in &seq.persons {
            let states = gt_states_normalized(person, &seq.camera, bins, root_index);
            velocity_samples_from_tracks(&states, &states, window, &mut out);
        }
    }
    Ok(out)
}

/// Velocity samples whose input trajectories come from the frozen root
/// network's depth path (the distribution the velocity network sees at
/// inference), with ground-truth velocity targets. Ground-truth-input
/// samples are included as well, so clean histories stay in distribution.
pub fn build_velocity_samples_from_estimates(
    sequences: &[SyntheticSequence],
    root_model: &TcnModel,
    root_index: usize,
    window: usize,
) -> Result<Vec<VelocityTcnSample>> {
    if root_model.kind() != TcnKind::Root {
        return Err(Error::Config("velocity sample builder needs a root TCN".into()));
    }
    let bins = root_model
        .bins()
        .ok_or_else(|| Error::Config("root TCN without bins".into()))?
        .clone();
    let half = root_model.hyper().window / 2;
    let mut tracks: Vec<(&crate::synthgen::PersonTrack, &CameraModel)> = Vec::new();
    for seq in sequences {
        for person in &seq.persons {
            tracks.push((person, &seq.camera));
        }
    }
    let per_track = crate::parallel::map_indexed(&tracks, |_, (person, camera)| -> Result<Vec<VelocityTcnSample>> {
        let frames = person.obs.len();
        let cam_center = [camera.cx, camera.cy];
        let mut nps: Vec<NormalizedPose> = Vec::with_capacity(frames);
        for obs in &person.obs {
            match normalize_pose(obs.joints2d(), root_index) {
                Ok(np) => nps.push(np),
                Err(_) => match nps.last().cloned() {
                    Some(prev) => nps.push(prev),
                    None => return Ok(Vec::new()),
                },
            }
        }
        let mut estimated: Vec<RootState> = Vec::with_capacity(frames);
        for t in 0..frames {
            let window_nps: Vec<NormalizedPose> = (-(half as i64)..=half as i64)
                .map(|d| nps[(t as i64 + d).clamp(0, frames as i64 - 1) as usize].clone())
                .collect();
            let logits = crate::tcn::root_tcn_forward(&window_nps, root_model, cam_center)?;
            let zf = crate::tcn::soft_argmax_depth(&logits, &bins)?;
            let c = nps[t].c;
            let state = [zf * (c[0] - camera.cx), zf * (c[1] - camera.cy), zf];
            estimated.push(normalize_root_state(state, &bins));
        }
        let gt = gt_states_normalized(person, camera, &bins, root_index);
        let mut out = Vec::new();
        velocity_samples_from_tracks(&estimated, &gt, window, &mut out);
        velocity_samples_from_tracks(&gt, &gt, window, &mut out);
        Ok(out)
    });
    let mut out = Vec::new();
    for r in per_track {
        out.extend(r?);
    }
    Ok(out)
}

/// Builds centered root-TCN samples from the rendered observations.
///
/// Frames whose pose is occluded are skipped as training targets: their
/// observations carry no usable depth signal, and fitting them teaches the
/// classifier to hallucinate. At inference those frames are covered by the
/// velocity path through the fusion weights.
pub fn build_root_samples(
    sequences: &[SyntheticSequence],
    root_index: usize,
    window: usize,
) -> Result<Vec<RootTcnSample>> {
    let half = window / 2;
    let mut out = Vec::new();
    for seq in sequences {
        let cam_center = [seq.camera.cx, seq.camera.cy];
        let f = seq.camera.focal_or_unit();
        for person in &seq.persons {
            let frames = person.obs.len();
            let mut nps: Vec<NormalizedPose> = Vec::with_capacity(frames);
            let mut last_good: Option<NormalizedPose> = None;
            for obs in &person.obs {
                let np = match normalize_pose(obs.joints2d(), root_index) {
                    Ok(np) => np,
                    Err(_) => match &last_good {
                        Some(prev) => prev.clone(),
                        None => continue,
                    },
                };
                last_good = Some(np.clone());
                nps.push(np);
            }
            if nps.len() != frames {
                // degenerate leading frames: skip this track
                continue;
            }
            for t in 0..frames {
                if person.occluded[t] {
                    continue;
                }
                let window_nps: Vec<NormalizedPose> =
                    centered_indices(frames, t, half).into_iter().map(|i| nps[i].clone()).collect();
                let zf = person.gt3d_cam[t].joints()[root_index][2] / f;
                out.push(RootTcnSample { window: window_nps, target_zf: zf, cam_center });
            }
        }
    }
    Ok(out)
}

/// Depth bins covering the ground-truth Z/f span of a corpus, with margin.
pub fn bins_from_sequences(
    sequences: &[SyntheticSequence],
    root_index: usize,
    count: usize,
) -> Result<DepthBins> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for seq in sequences {
        let f = seq.camera.focal_or_unit();
        for person in &seq.persons {
            for pose in &person.gt3d_cam {
                let zf = pose.joints()[root_index][2] / f;
                lo = lo.min(zf);
                hi = hi.max(zf);
            }
        }
    }
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Validation("no ground-truth depths in corpus".into()));
    }
    if hi - lo < 1e-12 {
        hi = lo + lo.abs().max(1e-6);
    }
    DepthBins::covering(count, lo, hi, 0.25)
}

/// Typed dataset for [`train_tcn`].
pub enum TcnDataset {
    Joint { train: Vec<JointTcnSample>, val: Vec<JointTcnSample> },
    Velocity { train: Vec<VelocityTcnSample>, val: Vec<VelocityTcnSample> },
    Root { train: Vec<RootTcnSample>, val: Vec<RootTcnSample> },
}

impl TcnDataset {
    fn kind(&self) -> TcnKind {
        match self {
            TcnDataset::Joint { .. } => TcnKind::Joint,
            TcnDataset::Velocity { .. } => TcnKind::Velocity,
            TcnDataset::Root { .. } => TcnKind::Root,
        }
    }

    fn train_len(&self) -> usize {
        match self {
            TcnDataset::Joint { train, .. } => train.len(),
            TcnDataset::Velocity { train, .. } => train.len(),
            TcnDataset::Root { train, .. } => train.len(),
        }
    }
}

fn joint_sample_loss(g: &mut Graph, bound: &BoundParams, model: &TcnModel, s: &JointTcnSample) -> Result<crate::diffcore::Var> {
    let input = joint_window_tensor(&s.window, model.hyper().joint_count)?;
    let x = g.input(input);
    let out = model.forward_on_graph(g, bound, x)?;
    let n = model.hyper().joint_count;
    let pose = g.reshape(out, vec![n, 3])?;
    let centered = g.center_rows(pose, model.hyper().root_index)?;
    pose_loss_on_graph(g, centered, &s.target)
}

fn velocity_sample_loss(
    g: &mut Graph,
    bound: &BoundParams,
    model: &TcnModel,
    s: &VelocityTcnSample,
) -> Result<crate::diffcore::Var> {
    let n = model.hyper().window;
    if s.states.len() != n || s.velocities.len() != n {
        return Err(Error::Shape(format!(
            "velocity sample windows {}/{} vs model window {n}",
            s.states.len(),
            s.velocities.len()
        )));
    }
    let mut data = Vec::with_capacity(n * 6);
    for (st, v) in s.states.iter().zip(&s.velocities) {
        data.extend_from_slice(st);
        data.extend_from_slice(v);
    }
    let x = g.input(Tensor::new(vec![n, 6], data)?);
    let out = model.forward_on_graph(g, bound, x)?;
    let target = g.input(Tensor::new(vec![1, 3], s.target.to_vec())?);
    let diff = g.sub(out, target)?;
    Ok(g.sum_squares(diff))
}

fn root_sample_loss(
    g: &mut Graph,
    bound: &BoundParams,
    model: &TcnModel,
    s: &RootTcnSample,
) -> Result<crate::diffcore::Var> {
    let hyper = model.hyper();
    let mut data = Vec::with_capacity(hyper.window * hyper.in_features);
    for np in &s.window {
        data.extend(root_frame_features(np, hyper, s.cam_center));
    }
    let x = g.input(Tensor::new(vec![hyper.window, hyper.in_features], data)?);
    let logits = model.forward_on_graph(g, bound, x)?;
    let bins = hyper.bins.as_ref().ok_or_else(|| Error::Config("root TCN without bins".into()))?;
    let zf = soft_argmax_on_graph(g, logits, bins)?;
    let target = g.input(Tensor::scalar(s.target_zf));
    let diff = g.sub(zf, target)?;
    Ok(g.sum_squares(diff))
}

fn train_tcn_generic<S: Sync>(
    train: &[S],
    val: &[S],
    hyper: TcnHyper,
    config: &OptimizerConfig,
    loss_fn: impl Fn(&mut Graph, &BoundParams, &TcnModel, &S) -> Result<crate::diffcore::Var> + Sync,
) -> Result<(TcnModel, TrainHistory)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Validation("empty TCN training set".into()));
    }
    let mut model = TcnModel::init(hyper, config.seed)?;
    let mut state = OptimizerState::default();
    let mut history = TrainHistory::default();
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(11);

    for epoch in 0..config.epochs {
        let t0 = std::time::Instant::now();
        let mut order: Vec<usize> = (0..train.len()).collect();
        for i in (1..order.len()).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let mut g = Graph::new();
            let bound = BoundParams::bind(&mut g, model.params());
            let mut losses = Vec::with_capacity(chunk.len());
            for &idx in chunk {
                losses.push(
                    loss_fn(&mut g, &bound, &model, &train[idx])
                        .map_err(|e| divergence_as_training(e, epoch))?,
                );
            }
            let mean = g.mean_scalars(&losses)?;
            let grads = g.backward(mean).map_err(|e| divergence_as_training(e, epoch))?;
            let loss = g.value(mean).item()?;
            if !loss.is_finite() {
                return Err(Error::Training { epoch, msg: format!("non-finite loss {loss}") });
            }
            let grad_store = bound.collect_grads(&g, &grads)?;
            epoch_loss += loss;
            batches += 1;
            step(model.params_mut(), &grad_store, &mut state, config)?;
            check_convergent(model.params(), epoch)?;
        }

        let val_loss = mean_validation_loss(val, |s| {
            let mut g = Graph::new();
            let bound = BoundParams::bind_frozen(&mut g, model.params());
            let loss = loss_fn(&mut g, &bound, &model, s)?;
            g.value(loss).item()
        })?;
        history.train_loss.push(epoch_loss / batches.max(1) as f64);
        history.val_loss.push(val_loss);
        history.seconds.push(t0.elapsed().as_secs_f64());
    }
    Ok((model, history))
}

/// Trains one of the three temporal networks; the dataset variant must match
/// the hyper's kind.
pub fn train_tcn(
    dataset: &TcnDataset,
    hyper: TcnHyper,
    config: &OptimizerConfig,
) -> Result<(TcnModel, TrainHistory)> {
    if dataset.kind() != hyper.kind {
        return Err(Error::Config(format!(
            "dataset kind {:?} does not match hyper kind {:?}",
            dataset.kind(),
            hyper.kind
        )));
    }
    if dataset.train_len() == 0 {
        return Err(Error::Validation("empty TCN training set".into()));
    }
    match dataset {
        TcnDataset::Joint { train, val } => {
            train_tcn_generic(train, val, hyper, config, joint_sample_loss)
        }
        TcnDataset::Velocity { train, val } => {
            train_tcn_generic(train, val, hyper, config, velocity_sample_loss)
        }
        TcnDataset::Root { train, val } => {
            train_tcn_generic(train, val, hyper, config, root_sample_loss)
        }
    }
}

/// Which model a gradient check targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Gcn,
    TcnJoint,
    TcnVelocity,
    TcnRoot,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Gcn,
        ModelKind::TcnJoint,
        ModelKind::TcnVelocity,
        ModelKind::TcnRoot,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Gcn => "gcn",
            ModelKind::TcnJoint => "tcn-joint",
            ModelKind::TcnVelocity => "tcn-velocity",
            ModelKind::TcnRoot => "tcn-root",
        }
    }
}

/// Finite-difference tolerance for each model's full loss gradient.
pub fn grad_check_threshold(kind: ModelKind) -> f64 {
    match kind {
        // the root path is smooth end to end, so it gets the tight gate
        ModelKind::TcnRoot => 1e-6,
        _ => 1e-4,
    }
}

pub const GRAD_CHECK_EPSILON: f64 = 1e-5;

struct GcnLossInstance {
    model: GcnModel,
    mats: SkeletonMatrices,
    obs: ObservedPose2D,
    gt: Pose3D,
}

impl DifferentiableScalar for GcnLossInstance {
    fn value(&self, params: &ParamStore) -> Result<f64> {
        let mut g = Graph::new();
        let bound = BoundParams::bind_frozen(&mut g, params);
        let pred = self.model.forward_on_graph(&mut g, &bound, &self.obs, &self.mats)?;
        let loss = pose_loss_on_graph(&mut g, pred, &self.gt)?;
        g.value(loss).item()
    }
    fn value_and_grad(&self, params: &ParamStore) -> Result<(f64, ParamStore)> {
        let mut g = Graph::new();
        let bound = BoundParams::bind(&mut g, params);
        let pred = self.model.forward_on_graph(&mut g, &bound, &self.obs, &self.mats)?;
        let loss = pose_loss_on_graph(&mut g, pred, &self.gt)?;
        let grads = g.backward(loss)?;
        Ok((g.value(loss).item()?, bound.collect_grads(&g, &grads)?))
    }
}

struct TcnLossInstance<S, F> {
    model: TcnModel,
    sample: S,
    loss_fn: F,
}

impl<S, F> DifferentiableScalar for TcnLossInstance<S, F>
where
    F: Fn(&mut Graph, &BoundParams, &TcnModel, &S) -> Result<crate::diffcore::Var>,
{
    fn value(&self, params: &ParamStore) -> Result<f64> {
        let mut g = Graph::new();
        let bound = BoundParams::bind_frozen(&mut g, params);
        let loss = (self.loss_fn)(&mut g, &bound, &self.model, &self.sample)?;
        g.value(loss).item()
    }
    fn value_and_grad(&self, params: &ParamStore) -> Result<(f64, ParamStore)> {
        let mut g = Graph::new();
        let bound = BoundParams::bind(&mut g, params);
        let loss = (self.loss_fn)(&mut g, &bound, &self.model, &self.sample)?;
        let grads = g.backward(loss)?;
        Ok((g.value(loss).item()?, bound.collect_grads(&g, &grads)?))
    }
}

fn chain_topology(n: usize) -> SkeletonTopology {
    SkeletonTopology::new(
        (0..n).map(|i| format!("j{i}")).collect(),
        (1..n).map(|i| (i - 1, i)).collect(),
        0,
    )
    .expect("chain is a valid tree")
}

fn random_mini_obs(rng: &mut impl Rng, n: usize) -> Result<ObservedPose2D> {
    let joints: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)])
        .collect();
    let conf: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let bone_conf: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(0.05..1.0)).collect();
    ObservedPose2D::new(joints, conf, bone_conf)
}

fn random_mini_pose(rng: &mut impl Rng, n: usize, root: usize) -> Pose3D {
    let mut joints: Vec<[f64; 3]> = (0..n)
        .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
        .collect();
    let r = joints[root];
    for j in joints.iter_mut() {
        for c in 0..3 {
            j[c] -= r[c];
        }
    }
    Pose3D::person_centric(joints)
}

/// Builds a random mini-instance of the chosen model plus its loss and runs
/// the finite-difference check against the analytic gradients.
pub fn run_grad_check(kind: ModelKind, seed: u64) -> Result<GradReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(12);
    match kind {
        ModelKind::Gcn => {
            let topo = chain_topology(4);
            let mats = SkeletonMatrices::from_topology(&topo)?;
            let hyper = GcnHyper::defaults(&topo).with_widths(vec![6, 6], 10);
            let model = GcnModel::init(hyper, seed)?;
            let obs = random_mini_obs(&mut rng, 4)?;
            let gt = random_mini_pose(&mut rng, 4, 0);
            let params = model.params().clone();
            let instance = GcnLossInstance { model, mats, obs, gt };
            grad_check(&instance, &params, GRAD_CHECK_EPSILON)
        }
        ModelKind::TcnJoint => {
            let hyper = TcnHyper::joint_defaults(3, 0, 6);
            let model = TcnModel::init(hyper, seed)?;
            let window: Vec<Pose3D> = (0..9).map(|_| random_mini_pose(&mut rng, 3, 0)).collect();
            let target = random_mini_pose(&mut rng, 3, 0);
            let params = model.params().clone();
            let instance = TcnLossInstance {
                model,
                sample: JointTcnSample { window, target },
                loss_fn: joint_sample_loss,
            };
            grad_check(&instance, &params, GRAD_CHECK_EPSILON)
        }
        ModelKind::TcnVelocity => {
            let bins = DepthBins::new(12, 0.001, 0.01)?;
            let hyper = TcnHyper::velocity_defaults(bins.clone(), 8);
            let model = TcnModel::init(hyper, seed)?;
            let mut mk = |_: usize| -> RootState {
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0)]
            };
            let states: Vec<RootState> = (0..8).map(&mut mk).collect();
            let raw_vels: Vec<RootState> = (0..8).map(&mut mk).collect();
            let velocities: Vec<RootState> =
                raw_vels.iter().map(|v| normalize_velocity([v[0] * 0.05, v[1] * 0.05, v[2] * 0.001], &bins)).collect();
            let target = [0.02, -0.01, 0.3];
            let params = model.params().clone();
            let instance = TcnLossInstance {
                model,
                sample: VelocityTcnSample { states, velocities, target },
                loss_fn: velocity_sample_loss,
            };
            grad_check(&instance, &params, GRAD_CHECK_EPSILON)
        }
        ModelKind::TcnRoot => {
            let bins = DepthBins::new(12, 0.001, 0.01)?;
            let hyper = TcnHyper::root_defaults(3, bins, 6);
            let model = TcnModel::init(hyper, seed)?;
            let window: Vec<NormalizedPose> = (0..9)
                .map(|_| {
                    let joints: Vec<[f64; 2]> = (0..3)
                        .map(|_| [rng.gen_range(0.0..1920.0), rng.gen_range(0.0..1080.0)])
                        .collect();
                    normalize_pose(&joints, 0)
                })
                .collect::<Result<_>>()?;
            let target_zf = rng.gen_range(0.002..0.008);
            let params = model.params().clone();
            let instance = TcnLossInstance {
                model,
                sample: RootTcnSample { window, target_zf, cam_center: [960.0, 540.0] },
                loss_fn: root_sample_loss,
            };
            grad_check(&instance, &params, GRAD_CHECK_EPSILON)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_params(v: f64) -> ParamStore {
        let mut p = ParamStore::new();
        p.insert("theta", Tensor::scalar(v)).unwrap();
        p
    }

    #[test]
    fn sgd_step_on_quadratic() {
        // f(theta) = theta^2, grad = 2 theta; theta0 = 1, lr 0.1 -> 0.8
        let mut params = scalar_params(1.0);
        let mut grads = ParamStore::new();
        grads.insert("theta", Tensor::scalar(2.0)).unwrap();
        let cfg = OptimizerConfig {
            kind: OptimizerKind::Sgd,
            learning_rate: 0.1,
            ..OptimizerConfig::default()
        };
        let mut state = OptimizerState::default();
        step(&mut params, &grads, &mut state, &cfg).unwrap();
        assert!((params.get("theta").unwrap().data()[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn zero_gradient_leaves_sgd_params_unchanged() {
        let mut params = scalar_params(1.5);
        let grads = params.zeros_like();
        let cfg = OptimizerConfig { kind: OptimizerKind::Sgd, ..OptimizerConfig::default() };
        let mut state = OptimizerState::default();
        step(&mut params, &grads, &mut state, &cfg).unwrap();
        assert_eq!(params.get("theta").unwrap().data()[0], 1.5);
    }

    #[test]
    fn adam_first_step_magnitude_is_learning_rate() {
        // first Adam update: lr * g/(|g| + eps') ~ lr regardless of scale
        for grad in [1e-3, 1.0, 1e3] {
            let mut params = scalar_params(0.0);
            let mut grads = ParamStore::new();
            grads.insert("theta", Tensor::scalar(grad)).unwrap();
            let cfg = OptimizerConfig::default();
            let mut state = OptimizerState::default();
            step(&mut params, &grads, &mut state, &cfg).unwrap();
            let delta = params.get("theta").unwrap().data()[0].abs();
            // oracle: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps)
            let want = cfg.learning_rate * grad / (grad + cfg.eps);
            assert!((delta - want).abs() < 1e-12, "grad {grad}: delta {delta} vs {want}");
            assert!((delta - cfg.learning_rate).abs() < 1e-5);
        }
    }

    #[test]
    fn key_mismatch_is_a_validation_error() {
        let mut params = scalar_params(1.0);
        let mut grads = ParamStore::new();
        grads.insert("other", Tensor::scalar(1.0)).unwrap();
        let cfg = OptimizerConfig::default();
        let mut state = OptimizerState::default();
        assert!(step(&mut params, &grads, &mut state, &cfg).is_err());
    }

    #[test]
    fn gradient_clipping_rescales_updates() {
        let mut params = scalar_params(0.0);
        let mut grads = ParamStore::new();
        grads.insert("theta", Tensor::scalar(100.0)).unwrap();
        let cfg = OptimizerConfig {
            kind: OptimizerKind::Sgd,
            learning_rate: 1.0,
            clip_norm: Some(1.0),
            ..OptimizerConfig::default()
        };
        let mut state = OptimizerState::default();
        step(&mut params, &grads, &mut state, &cfg).unwrap();
        assert!((params.get("theta").unwrap().data()[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn grad_checks_pass_for_all_model_kinds() {
        for kind in ModelKind::ALL {
            let report = run_grad_check(kind, 3).unwrap();
            let threshold = grad_check_threshold(kind);
            assert!(
                report.passes(threshold),
                "{}: {} at {} (threshold {})",
                kind.name(),
                report.max_rel_error,
                report.worst_param,
                threshold
            );
        }
    }

    #[test]
    fn history_csv_shape() {
        let h = TrainHistory {
            train_loss: vec![1.0, 0.5],
            val_loss: vec![1.1, 0.6],
            seconds: vec![0.2, 0.21],
        };
        let csv = h.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert!(csv.starts_with("epoch,train_loss,val_loss,seconds"));
    }
}
