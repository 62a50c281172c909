//! The three temporal networks: joint-TCN (person-centric pose from a
//! centered window), velocity-TCN (root velocity from causal history), and
//! root-TCN (relative depth Z/f via binning plus soft-argmax).

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::camera::NormalizedPose;
use crate::diffcore::{glorot_uniform, Activation, BoundParams, Graph, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use crate::pose::{CoordFrame, Pose3D};

/// Discretization of the relative depth Z/f into equal-width bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthBins {
    pub count: usize,
    pub lo: f64,
    pub hi: f64,
}

impl DepthBins {
    pub fn new(count: usize, lo: f64, hi: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::Validation(format!("need at least 2 depth bins, got {count}")));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Validation(format!("invalid depth range [{lo}, {hi}]")));
        }
        Ok(Self { count, lo, hi })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.count as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.center(k)).collect()
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, zf: f64) -> bool {
        zf >= self.lo && zf <= self.hi
    }

    /// Bins covering `[lo, hi]` with a symmetric relative margin.
    pub fn covering(count: usize, lo: f64, hi: f64, margin: f64) -> Result<Self> {
        let pad = (hi - lo) * margin;
        Self::new(count, lo - pad, hi + pad)
    }
}

impl Default for DepthBins {
    fn default() -> Self {
        Self { count: 60, lo: 0.5, hi: 8.0 }
    }
}

/// Which of the three temporal networks a model instance is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TcnKind {
    Joint,
    Velocity,
    Root,
}

/// One dilated convolution block: kernel size, dilation, output width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnBlock {
    pub kernel: usize,
    pub dilation: usize,
    pub width: usize,
}

/// Block nonlinearity. The root network uses sigmoid so its whole loss path
/// stays smooth; the others use leaky relu.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockActivation {
    LeakyRelu,
    Sigmoid,
}

/// Architecture description. The receptive field
/// `1 + sum((kernel - 1) * dilation)` must equal the declared window length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcnHyper {
    pub kind: TcnKind,
    pub in_features: usize,
    pub out_features: usize,
    pub blocks: Vec<TcnBlock>,
    pub block_act: BlockActivation,
    pub leaky_slope: f64,
    pub window: usize,
    /// Joint count for pose-shaped outputs (joint kind only).
    pub joint_count: usize,
    pub root_index: usize,
    /// Depth bins (root and velocity kinds).
    pub bins: Option<DepthBins>,
    /// Input conditioning scale for the person-center feature (root kind).
    pub center_scale: f64,
    /// Input conditioning scale for the pose-scale feature (root kind).
    pub scale_scale: f64,
}

impl TcnHyper {
    pub fn receptive_field(&self) -> usize {
        1 + self.blocks.iter().map(|b| (b.kernel - 1) * b.dilation).sum::<usize>()
    }

    fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::Config("at least one TCN block required".into()));
        }
        if self.blocks.iter().any(|b| b.kernel == 0 || b.dilation == 0 || b.width == 0) {
            return Err(Error::Config("TCN block sizes must be positive".into()));
        }
        let rf = self.receptive_field();
        if rf != self.window {
            return Err(Error::Config(format!(
                "receptive field {rf} does not match declared window {}",
                self.window
            )));
        }
        match self.kind {
            TcnKind::Joint => {
                if self.out_features != 3 * self.joint_count {
                    return Err(Error::Config("joint TCN must emit 3 values per joint".into()));
                }
            }
            TcnKind::Velocity => {
                if self.out_features != 3 {
                    return Err(Error::Config("velocity TCN emits (vx, vy, vz)".into()));
                }
                if self.bins.is_none() {
                    return Err(Error::Config("velocity TCN needs depth bins for unit scaling".into()));
                }
            }
            TcnKind::Root => {
                let bins = self
                    .bins
                    .as_ref()
                    .ok_or_else(|| Error::Config("root TCN needs depth bins".into()))?;
                if self.out_features != bins.count {
                    return Err(Error::Config(format!(
                        "root TCN emits one logit per bin: {} vs {}",
                        self.out_features, bins.count
                    )));
                }
            }
        }
        Ok(())
    }

    /// Centered joint-TCN over windows of 2n+1 = 9 person-centric poses.
    pub fn joint_defaults(joint_count: usize, root_index: usize, width: usize) -> Self {
        Self {
            kind: TcnKind::Joint,
            in_features: 3 * joint_count,
            out_features: 3 * joint_count,
            blocks: vec![
                TcnBlock { kernel: 3, dilation: 1, width },
                TcnBlock { kernel: 3, dilation: 1, width },
                TcnBlock { kernel: 3, dilation: 2, width },
            ],
            block_act: BlockActivation::LeakyRelu,
            leaky_slope: 0.1,
            window: 9,
            joint_count,
            root_index,
            bins: None,
            center_scale: 1.0,
            scale_scale: 1.0,
        }
    }

    /// Causal velocity-TCN over n = 8 frames of (root state, velocity) pairs.
    pub fn velocity_defaults(bins: DepthBins, width: usize) -> Self {
        Self {
            kind: TcnKind::Velocity,
            in_features: 6,
            out_features: 3,
            blocks: vec![
                TcnBlock { kernel: 3, dilation: 1, width },
                TcnBlock { kernel: 3, dilation: 2, width },
                TcnBlock { kernel: 2, dilation: 1, width },
            ],
            block_act: BlockActivation::LeakyRelu,
            leaky_slope: 0.1,
            window: 8,
            joint_count: 0,
            root_index: 0,
            bins: Some(bins),
            center_scale: 1.0,
            scale_scale: 1.0,
        }
    }

    /// Centered root-TCN over windows of 2n+1 = 9 normalized poses.
    pub fn root_defaults(joint_count: usize, bins: DepthBins, width: usize) -> Self {
        Self {
            kind: TcnKind::Root,
            in_features: 2 * joint_count + 3,
            out_features: bins.count,
            blocks: vec![
                TcnBlock { kernel: 3, dilation: 1, width },
                TcnBlock { kernel: 3, dilation: 1, width },
                TcnBlock { kernel: 3, dilation: 2, width },
            ],
            block_act: BlockActivation::Sigmoid,
            leaky_slope: 0.1,
            window: 9,
            joint_count,
            root_index: 0,
            bins: Some(bins),
            center_scale: 1e-3,
            scale_scale: 1e-2,
        }
    }
}

/// A dilated temporal convolution stack with a linear head on the final frame.
#[derive(Debug, Clone)]
pub struct TcnModel {
    hyper: TcnHyper,
    params: ParamStore,
}

impl TcnModel {
    pub fn init(hyper: TcnHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let mut c_in = hyper.in_features;
        for (i, b) in hyper.blocks.iter().enumerate() {
            let fan_in = b.kernel * c_in;
            let kernel = glorot_uniform(&mut rng, fan_in, b.width, vec![b.kernel, c_in, b.width]);
            params.insert(format!("block.{i}.k"), kernel)?;
            params.insert(format!("block.{i}.b"), Tensor::zeros(vec![b.width]))?;
            c_in = b.width;
        }
        params.insert(
            "head.w",
            glorot_uniform(&mut rng, c_in, hyper.out_features, vec![c_in, hyper.out_features]),
        )?;
        params.insert("head.b", Tensor::zeros(vec![hyper.out_features]))?;
        Ok(Self { hyper, params })
    }

    pub fn from_parts(hyper: TcnHyper, params: ParamStore) -> Result<Self> {
        let reference = Self::init(hyper.clone(), 0)?;
        reference.params.check_same_layout(&params)?;
        Ok(Self { hyper, params })
    }

    pub fn hyper(&self) -> &TcnHyper {
        &self.hyper
    }

    pub fn kind(&self) -> TcnKind {
        self.hyper.kind
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn bins(&self) -> Option<&DepthBins> {
        self.hyper.bins.as_ref()
    }

    /// Conv stack + head over a `[window, in_features]` input already on the
    /// tape; output is `[1, out_features]`.
    pub fn forward_on_graph(&self, g: &mut Graph, bound: &BoundParams, input: Var) -> Result<Var> {
        let shape = g.value(input).shape().to_vec();
        if shape != [self.hyper.window, self.hyper.in_features] {
            return Err(Error::Shape(format!(
                "window shape {:?} does not match expected [{}, {}]",
                shape, self.hyper.window, self.hyper.in_features
            )));
        }
        let act = match self.hyper.block_act {
            BlockActivation::LeakyRelu => Activation::LeakyRelu(self.hyper.leaky_slope),
            BlockActivation::Sigmoid => Activation::Sigmoid,
        };
        let mut h = input;
        for (i, b) in self.hyper.blocks.iter().enumerate() {
            let k = bound.var(&format!("block.{i}.k"))?;
            let bias = bound.var(&format!("block.{i}.b"))?;
            h = g.temporal_conv(h, k, b.dilation)?;
            h = g.add_row_bias(h, bias)?;
            h = g.activation(h, act);
        }
        if g.value(h).rows() != 1 {
            return Err(Error::Shape(format!(
                "conv stack left {} frames, expected exactly 1",
                g.value(h).rows()
            )));
        }
        let out = g.matmul(h, bound.var("head.w")?)?;
        g.add_row_bias(out, bound.var("head.b")?)
    }

    fn forward_values(&self, input: Tensor) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let bound = BoundParams::bind_frozen(&mut g, &self.params);
        let x = g.input(input);
        let out = self.forward_on_graph(&mut g, &bound, x)?;
        Ok(g.value(out).data().to_vec())
    }
}

/// Flattens a window of person-centric poses into a `[window, 3n]` tensor.
pub fn joint_window_tensor(window: &[Pose3D], joint_count: usize) -> Result<Tensor> {
    let mut data = Vec::with_capacity(window.len() * 3 * joint_count);
    for pose in window {
        pose.expect_frame(CoordFrame::PersonCentric)?;
        if pose.joint_count() != joint_count {
            return Err(Error::Shape(format!(
                "pose has {} joints, expected {joint_count}",
                pose.joint_count()
            )));
        }
        data.extend(pose.joints().iter().flatten());
    }
    Tensor::new(vec![window.len(), 3 * joint_count], data)
}

/// Person-centric pose for the central frame of a window of GCN outputs.
pub fn joint_tcn_forward(window: &[Pose3D], model: &TcnModel) -> Result<Pose3D> {
    if model.kind() != TcnKind::Joint {
        return Err(Error::Config("not a joint TCN".into()));
    }
    if window.len() != model.hyper.window {
        return Err(Error::Shape(format!(
            "window of {} poses, model expects {}",
            window.len(),
            model.hyper.window
        )));
    }
    let input = joint_window_tensor(window, model.hyper.joint_count)?;
    let out = model.forward_values(input)?;
    let n = model.hyper.joint_count;
    let root = model.hyper.root_index;
    let joints: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            [
                out[3 * i] - out[3 * root],
                out[3 * i + 1] - out[3 * root + 1],
                out[3 * i + 2] - out[3 * root + 2],
            ]
        })
        .collect();
    Ok(Pose3D::person_centric(joints))
}

/// Camera-centric root state: metric X, Y plus relative depth Z/f.
pub type RootState = [f64; 3];

/// Scales a root state into the network's normalized units: X and Y pass
/// through, the depth axis is measured in units of the bin span.
pub fn normalize_root_state(state: RootState, bins: &DepthBins) -> RootState {
    [state[0], state[1], (state[2] - bins.lo) / bins.span()]
}

pub fn denormalize_root_state(state: RootState, bins: &DepthBins) -> RootState {
    [state[0], state[1], state[2] * bins.span() + bins.lo]
}

/// Velocity in normalized units: depth component per bin span.
pub fn normalize_velocity(v: RootState, bins: &DepthBins) -> RootState {
    [v[0], v[1], v[2] / bins.span()]
}

pub fn denormalize_velocity(v: RootState, bins: &DepthBins) -> RootState {
    [v[0], v[1], v[2] * bins.span()]
}

/// Predicts the root velocity at frame t from the previous n frames of
/// positions and velocities (both in normalized units).
pub fn velocity_tcn_forward(
    states: &[RootState],
    velocities: &[RootState],
    model: &TcnModel,
) -> Result<RootState> {
    if model.kind() != TcnKind::Velocity {
        return Err(Error::Config("not a velocity TCN".into()));
    }
    let n = model.hyper.window;
    if states.len() != n || velocities.len() != n {
        return Err(Error::Shape(format!(
            "velocity TCN expects {n} states and {n} velocities, got {} and {}",
            states.len(),
            velocities.len()
        )));
    }
    let mut data = Vec::with_capacity(n * 6);
    for (s, v) in states.iter().zip(velocities) {
        data.extend_from_slice(s);
        data.extend_from_slice(v);
    }
    let out = model.forward_values(Tensor::new(vec![n, 6], data)?)?;
    Ok([out[0], out[1], out[2]])
}

/// P_S at frame t: previous root plus predicted velocity.
pub fn propagate(prev: RootState, velocity: RootState) -> RootState {
    [prev[0] + velocity[0], prev[1] + velocity[1], prev[2] + velocity[2]]
}

/// Per-frame root-TCN feature: flatten(p) followed by the conditioned person
/// center and pose scale.
pub fn root_frame_features(np: &NormalizedPose, hyper: &TcnHyper, cam_center: [f64; 2]) -> Vec<f64> {
    let mut feat = Vec::with_capacity(2 * np.p.len() + 3);
    for p in &np.p {
        feat.push(p[0]);
        feat.push(p[1]);
    }
    feat.push((np.c[0] - cam_center[0]) * hyper.center_scale);
    feat.push((np.c[1] - cam_center[1]) * hyper.center_scale);
    feat.push(np.s * hyper.scale_scale);
    feat
}

/// Depth-bin logits for the central frame of a window of (p, c, s) triples.
pub fn root_tcn_forward(
    window: &[NormalizedPose],
    model: &TcnModel,
    cam_center: [f64; 2],
) -> Result<Vec<f64>> {
    if model.kind() != TcnKind::Root {
        return Err(Error::Config("not a root TCN".into()));
    }
    if window.len() != model.hyper.window {
        return Err(Error::Shape(format!(
            "window of {} frames, model expects {}",
            window.len(),
            model.hyper.window
        )));
    }
    let mut data = Vec::with_capacity(window.len() * model.hyper.in_features);
    for np in window {
        let feat = root_frame_features(np, &model.hyper, cam_center);
        if feat.len() != model.hyper.in_features {
            return Err(Error::Shape(format!(
                "frame feature length {} does not match model input {}",
                feat.len(),
                model.hyper.in_features
            )));
        }
        data.extend(feat);
    }
    model.forward_values(Tensor::new(vec![window.len(), model.hyper.in_features], data)?)
}

/// Probability-weighted mean of bin centers after softmax.
pub fn soft_argmax_depth(logits: &[f64], bins: &DepthBins) -> Result<f64> {
    if logits.len() != bins.count {
        return Err(Error::Shape(format!(
            "{} logits for {} bins",
            logits.len(),
            bins.count
        )));
    }
    let probs = crate::diffcore::softmax_stable(logits);
    Ok(probs.iter().zip(bins.centers()).map(|(p, c)| p * c).sum())
}

/// Graph form of soft-argmax for training: softmax(logits) · centers.
pub fn soft_argmax_on_graph(g: &mut Graph, logits: Var, bins: &DepthBins) -> Result<Var> {
    let flat = g.reshape(logits, vec![bins.count])?;
    let probs = g.softmax(flat)?;
    let centers = g.input(Tensor::new(vec![bins.count], bins.centers())?);
    g.dot(probs, centers)
}

/// Squared-L2 loss between two person-centric poses; shared with the GCN.
pub fn tcn_point_loss(pred: &Pose3D, gt: &Pose3D) -> Result<f64> {
    crate::gcn::gcn_loss(pred, gt)
}

/// Squared error on relative depth.
pub fn root_loss(pred_zf: f64, gt_zf: f64) -> f64 {
    (pred_zf - gt_zf) * (pred_zf - gt_zf)
}
