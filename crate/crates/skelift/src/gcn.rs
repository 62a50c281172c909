//! Confidence-weighted directed graph networks over skeleton joints and
//! bones.
//!
//! Edge weights decay exponentially with hop distance and are scaled by the
//! source vertex's detection confidence, so reliable joints speak louder than
//! occluded ones. A joint stream and a bone stream run in parallel; their
//! features are concatenated and a perceptron head emits a person-centric 3D
//! pose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};

use crate::camera::normalize_pose;
use crate::diffcore::{glorot_uniform, Activation, BoundParams, Graph, ParamStore, Tensor, Var};
use crate::error::{Error, Result};
use crate::pose::{CoordFrame, Pose3D};
use crate::skeleton::{HopMatrix, SkeletonMatrices, SkeletonTopology};

/// One person's 2D observation: joint pixel coordinates, per-joint heatmap
/// confidences, and per-bone part-affinity confidences.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedPose2D {
    joints2d: Vec<[f64; 2]>,
    joint_conf: Vec<f64>,
    bone_conf: Vec<f64>,
}

impl ObservedPose2D {
    /// Confidences are clamped into [0, 1]; coordinates must be finite.
    pub fn new(joints2d: Vec<[f64; 2]>, joint_conf: Vec<f64>, bone_conf: Vec<f64>) -> Result<Self> {
        if joints2d.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Validation("non-finite joint coordinates".into()));
        }
        if joint_conf.len() != joints2d.len() {
            return Err(Error::Validation(format!(
                "{} joints but {} joint confidences",
                joints2d.len(),
                joint_conf.len()
            )));
        }
        let clamp = |v: f64| {
            if v.is_finite() {
                v.clamp(0.0, 1.0)
            } else {
                0.0
            }
        };
        Ok(Self {
            joints2d,
            joint_conf: joint_conf.into_iter().map(clamp).collect(),
            bone_conf: bone_conf.into_iter().map(clamp).collect(),
        })
    }

    pub fn joints2d(&self) -> &[[f64; 2]] {
        &self.joints2d
    }

    pub fn joint_conf(&self) -> &[f64] {
        &self.joint_conf
    }

    pub fn bone_conf(&self) -> &[f64] {
        &self.bone_conf
    }

    pub fn joint_count(&self) -> usize {
        self.joints2d.len()
    }
}

/// Non-negative directed adjacency; `normalized` records whether in-degree
/// normalization has been applied.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedAdjacency {
    a: Tensor,
    normalized: bool,
}

impl DirectedAdjacency {
    /// Wraps a raw non-negative square matrix as an unnormalized adjacency.
    pub fn from_raw(a: Tensor) -> Result<Self> {
        if !a.is_matrix() || a.rows() != a.cols() {
            return Err(Error::Shape(format!("adjacency must be square, got {:?}", a.shape())));
        }
        if a.data().iter().any(|&v| v < 0.0) {
            return Err(Error::Validation("adjacency entries must be non-negative".into()));
        }
        Ok(Self { a, normalized: false })
    }

    pub fn matrix(&self) -> &Tensor {
        &self.a
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn size(&self) -> usize {
        self.a.rows()
    }
}

fn build_adjacency(conf: &[f64], hops: &HopMatrix) -> Result<DirectedAdjacency> {
    let n = conf.len();
    if hops.size() != n {
        return Err(Error::Shape(format!(
            "{} confidences but {}x{} hop matrix",
            n,
            hops.size(),
            hops.size()
        )));
    }
    for &c in conf {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::Validation(format!("confidence {c} outside [0, 1]")));
        }
    }
    let mut a = Tensor::zeros(vec![n, n]);
    for i in 0..n {
        for j in 0..n {
            a.set2(i, j, conf[i] * (-(hops.at(i, j) as f64)).exp());
        }
    }
    Ok(DirectedAdjacency { a, normalized: false })
}

/// a[i][j] = conf[i] * exp(-hops(i, j)); the diagonal is conf[i] itself.
pub fn build_joint_adjacency(joint_conf: &[f64], hops: &HopMatrix) -> Result<DirectedAdjacency> {
    build_adjacency(joint_conf, hops)
}

/// Same decay rule over the bone line graph, weighted by part-affinity
/// confidences.
pub fn build_bone_adjacency(bone_conf: &[f64], bone_hops: &HopMatrix) -> Result<DirectedAdjacency> {
    build_adjacency(bone_conf, bone_hops)
}

/// Divides every column by its sum, so incoming weights at each vertex sum to
/// one. Zero columns stay zero.
pub fn normalize_in_degree(adj: DirectedAdjacency) -> Result<DirectedAdjacency> {
    if adj.normalized {
        return Err(Error::Contract("adjacency is already normalized".into()));
    }
    let n = adj.a.rows();
    let mut a = adj.a;
    for j in 0..n {
        let mut sum = 0.0;
        for i in 0..n {
            sum += a.at2(i, j);
        }
        if sum > 0.0 {
            for i in 0..n {
                let v = a.at2(i, j) / sum;
                a.set2(i, j, v);
            }
        }
    }
    Ok(DirectedAdjacency { a, normalized: true })
}

/// B = incidence · joints: each row is child minus parent coordinates.
pub fn bone_features(joints2d: &Tensor, incidence: &Tensor) -> Result<Tensor> {
    let mut g = Graph::new();
    let inc = g.input(incidence.clone());
    let j = g.input(joints2d.clone());
    let b = g.matmul(inc, j)?;
    Ok(g.value(b).clone())
}

/// One GraphSAGE-style layer on the tape: act(concat(A_norm · h, h) · weight).
pub fn sage_layer(
    g: &mut Graph,
    h: Var,
    adj_norm: &DirectedAdjacency,
    weight: Var,
    act: Activation,
) -> Result<Var> {
    if !adj_norm.normalized {
        return Err(Error::Contract("sage_layer requires a normalized adjacency".into()));
    }
    let a = g.input(adj_norm.a.clone());
    let ah = g.matmul(a, h)?;
    let cat = g.concat_cols(ah, h)?;
    let z = g.matmul(cat, weight)?;
    Ok(g.activation(z, act))
}

/// Stack widths and head size of the two-stream network.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GcnHyper {
    pub gcn_widths: Vec<usize>,
    pub head_hidden: usize,
    pub leaky_slope: f64,
    pub joint_count: usize,
    pub bone_count: usize,
    pub root_index: usize,
}

impl GcnHyper {
    pub fn defaults(topology: &SkeletonTopology) -> Self {
        Self {
            gcn_widths: vec![128, 128, 128],
            head_hidden: 256,
            leaky_slope: 0.1,
            joint_count: topology.joint_count(),
            bone_count: topology.bone_count(),
            root_index: topology.root_index(),
        }
    }

    pub fn with_widths(mut self, widths: Vec<usize>, head_hidden: usize) -> Self {
        self.gcn_widths = widths;
        self.head_hidden = head_hidden;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.gcn_widths.is_empty() {
            return Err(Error::Config("at least one GCN layer required".into()));
        }
        if self.joint_count < 2 || self.bone_count + 1 != self.joint_count {
            return Err(Error::Config(format!(
                "inconsistent joint/bone counts {}/{}",
                self.joint_count, self.bone_count
            )));
        }
        Ok(())
    }
}

/// Per-vertex input features: (x, y, conf) for joints, (dx, dy, paf) for bones.
const VERTEX_FEATURES: usize = 3;

/// Two parallel GCN stacks plus a perceptron head emitting a person-centric
/// 3D pose.
#[derive(Debug, Clone)]
pub struct GcnModel {
    hyper: GcnHyper,
    params: ParamStore,
}

impl GcnModel {
    /// Fresh model with Glorot-uniform weights and zero biases.
    pub fn init(hyper: GcnHyper, seed: u64) -> Result<Self> {
        hyper.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        for stream in ["joint", "bone"] {
            let mut d_in = VERTEX_FEATURES;
            for (i, &d_out) in hyper.gcn_widths.iter().enumerate() {
                let w = glorot_uniform(&mut rng, 2 * d_in, d_out, vec![2 * d_in, d_out]);
                params.insert(format!("{stream}.{i}.w"), w)?;
                d_in = d_out;
            }
        }
        let d_last = *hyper.gcn_widths.last().expect("validated non-empty");
        let head_in = (hyper.joint_count + hyper.bone_count) * d_last;
        let head_out = 3 * hyper.joint_count;
        params.insert(
            "head.0.w",
            glorot_uniform(&mut rng, head_in, hyper.head_hidden, vec![head_in, hyper.head_hidden]),
        )?;
        params.insert("head.0.b", Tensor::zeros(vec![hyper.head_hidden]))?;
        params.insert(
            "head.1.w",
            glorot_uniform(&mut rng, hyper.head_hidden, head_out, vec![hyper.head_hidden, head_out]),
        )?;
        params.insert("head.1.b", Tensor::zeros(vec![head_out]))?;
        Ok(Self { hyper, params })
    }

    /// Rebuilds a model from checkpointed hyper + parameters, validating the
    /// layout against a fresh initialization.
    pub fn from_parts(hyper: GcnHyper, params: ParamStore) -> Result<Self> {
        let reference = Self::init(hyper.clone(), 0)?;
        reference.params.check_same_layout(&params)?;
        Ok(Self { hyper, params })
    }

    pub fn hyper(&self) -> &GcnHyper {
        &self.hyper
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Builds the forward pass on `g` and returns the `[joint_count, 3]`
    /// person-centric output (root row zero).
    pub fn forward_on_graph(
        &self,
        g: &mut Graph,
        bound: &BoundParams,
        obs: &ObservedPose2D,
        mats: &SkeletonMatrices,
    ) -> Result<Var> {
        if obs.joint_count() != self.hyper.joint_count {
            return Err(Error::Shape(format!(
                "observation has {} joints, model expects {}",
                obs.joint_count(),
                self.hyper.joint_count
            )));
        }
        if obs.bone_conf().len() != self.hyper.bone_count {
            return Err(Error::Shape(format!(
                "observation has {} bone confidences, model expects {}",
                obs.bone_conf().len(),
                self.hyper.bone_count
            )));
        }
        if mats.joint_count != self.hyper.joint_count || mats.root_index != self.hyper.root_index {
            return Err(Error::Config("skeleton matrices do not match model hyper".into()));
        }
        let act = Activation::LeakyRelu(self.hyper.leaky_slope);
        let (n, m) = (self.hyper.joint_count, self.hyper.bone_count);

        // Root-center and scale-normalize the 2D input.
        let np = normalize_pose(obs.joints2d(), mats.root_index)?;
        let mut joint_feat = Tensor::zeros(vec![n, VERTEX_FEATURES]);
        for (i, p) in np.p.iter().enumerate() {
            joint_feat.set2(i, 0, p[0]);
            joint_feat.set2(i, 1, p[1]);
            joint_feat.set2(i, 2, obs.joint_conf()[i]);
        }
        let coords = Tensor::new(vec![n, 2], np.p.iter().flatten().copied().collect())?;
        let bone_vecs = bone_features(&coords, &mats.incidence)?;
        let mut bone_feat = Tensor::zeros(vec![m, VERTEX_FEATURES]);
        for b in 0..m {
            bone_feat.set2(b, 0, bone_vecs.at2(b, 0));
            bone_feat.set2(b, 1, bone_vecs.at2(b, 1));
            bone_feat.set2(b, 2, obs.bone_conf()[b]);
        }

        let joint_adj = normalize_in_degree(build_joint_adjacency(obs.joint_conf(), &mats.joint_hops)?)?;
        let bone_adj = normalize_in_degree(build_bone_adjacency(obs.bone_conf(), &mats.bone_hops)?)?;

        let mut h_joint = g.input(joint_feat);
        let mut h_bone = g.input(bone_feat);
        for i in 0..self.hyper.gcn_widths.len() {
            let wj = bound.var(&format!("joint.{i}.w"))?;
            h_joint = sage_layer(g, h_joint, &joint_adj, wj, act)?;
            let wb = bound.var(&format!("bone.{i}.w"))?;
            h_bone = sage_layer(g, h_bone, &bone_adj, wb, act)?;
        }

        let d_last = *self.hyper.gcn_widths.last().expect("non-empty");
        let flat_j = g.reshape(h_joint, vec![1, n * d_last])?;
        let flat_b = g.reshape(h_bone, vec![1, m * d_last])?;
        let feat = g.concat_cols(flat_j, flat_b)?;

        let h = g.matmul(feat, bound.var("head.0.w")?)?;
        let h = g.add_row_bias(h, bound.var("head.0.b")?)?;
        let h = g.activation(h, act);
        let out = g.matmul(h, bound.var("head.1.w")?)?;
        let out = g.add_row_bias(out, bound.var("head.1.b")?)?;
        let pose = g.reshape(out, vec![n, 3])?;
        g.center_rows(pose, mats.root_index)
    }

    /// Pure inference: person-centric 3D pose for one observation.
    pub fn forward(&self, obs: &ObservedPose2D, mats: &SkeletonMatrices) -> Result<Pose3D> {
        let mut g = Graph::new();
        let bound = BoundParams::bind_frozen(&mut g, &self.params);
        let out = self.forward_on_graph(&mut g, &bound, obs, mats)?;
        let t = g.value(out);
        let joints = (0..t.rows()).map(|i| [t.at2(i, 0), t.at2(i, 1), t.at2(i, 2)]).collect();
        Ok(Pose3D::person_centric(joints))
    }
}

/// Squared-L2 loss between two person-centric poses (sum over all joint
/// coordinates of squared differences).
pub fn gcn_loss(pred: &Pose3D, gt: &Pose3D) -> Result<f64> {
    pred.expect_frame(CoordFrame::PersonCentric)?;
    gt.expect_frame(CoordFrame::PersonCentric)?;
    pred.expect_same_layout(gt)?;
    let mut total = 0.0;
    for (p, q) in pred.joints().iter().zip(gt.joints()) {
        for c in 0..3 {
            total += (p[c] - q[c]).powi(2);
        }
    }
    Ok(total)
}

/// Graph form of [`gcn_loss`] given the `[n, 3]` prediction already on the
/// tape.
pub fn pose_loss_on_graph(g: &mut Graph, pred: Var, gt: &Pose3D) -> Result<Var> {
    gt.expect_frame(CoordFrame::PersonCentric)?;
    let n = gt.joint_count();
    if g.value(pred).shape() != [n, 3] {
        return Err(Error::Shape(format!(
            "prediction shape {:?} does not match {n} ground-truth joints",
            g.value(pred).shape()
        )));
    }
    let target = Tensor::new(vec![n, 3], gt.joints().iter().flatten().copied().collect())?;
    let t = g.input(target);
    let diff = g.sub(pred, t)?;
    Ok(g.sum_squares(diff))
}

/// Standard deviation of the corruption noise for one joint.
pub fn corruption_sigma(conf: f64, noise_gain: f64, pose_scale: f64) -> f64 {
    (1.0 - conf) * noise_gain * pose_scale
}

/// Perturbs coordinates with Gaussian noise whose scale grows as confidence
/// shrinks.
pub fn corrupt_coordinates(
    joints2d: &[[f64; 2]],
    confs: &[f64],
    noise_gain: f64,
    pose_scale: f64,
    rng: &mut impl Rng,
) -> Vec<[f64; 2]> {
    joints2d
        .iter()
        .zip(confs)
        .map(|(p, &c)| {
            let sigma = corruption_sigma(c, noise_gain, pose_scale);
            if sigma <= 0.0 {
                *p
            } else {
                let normal = Normal::new(0.0, sigma).expect("sigma positive");
                [p[0] + normal.sample(rng), p[1] + normal.sample(rng)]
            }
        })
        .collect()
}

/// Training-time corruption: every joint draws a confidence c ~ U[0, 1] and
/// Gaussian coordinate noise with standard deviation (1-c) * noise_gain *
/// pose scale. Bone confidences become the min of their endpoints'.
pub fn augment_sample(
    topology: &SkeletonTopology,
    gt2d: &ObservedPose2D,
    noise_gain: f64,
    rng: &mut impl Rng,
) -> Result<ObservedPose2D> {
    let n = gt2d.joint_count();
    if n != topology.joint_count() {
        return Err(Error::Shape(format!(
            "{n} joints vs topology with {}",
            topology.joint_count()
        )));
    }
    let pose_scale = match normalize_pose(gt2d.joints2d(), topology.root_index()) {
        Ok(np) => np.s,
        Err(_) => 0.0,
    };
    let confs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let joints = corrupt_coordinates(gt2d.joints2d(), &confs, noise_gain, pose_scale, rng);
    let bone_conf: Vec<f64> = topology
        .bones()
        .iter()
        .map(|b| confs[b.parent].min(confs[b.child]))
        .collect();
    ObservedPose2D::new(joints, confs, bone_conf)
}

/// Default noise gain for augmentation and rendering.
pub const DEFAULT_NOISE_GAIN: f64 = 0.05;
