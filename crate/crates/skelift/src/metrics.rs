//! Evaluation metrics: MPJPE, PA-MPJPE via Procrustes alignment, PCK,
//! PCK_abs, AUC_rel, and root-position average precision.
//!
//! Poses are in meters; all reported errors and thresholds are millimeters.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::Pose3D;

pub const MM_PER_METER: f64 = 1000.0;

/// Default PCK threshold (person-centric), millimeters.
pub const DEFAULT_PCK_MM: f64 = 150.0;
/// Default camera-centric thresholds (PCK_abs and AP_root), millimeters.
pub const DEFAULT_ABS_MM: f64 = 250.0;

fn check_layout(pred: &Pose3D, gt: &Pose3D) -> Result<()> {
    if pred.joint_count() != gt.joint_count() {
        return Err(Error::Validation(format!(
            "joint count mismatch: {} vs {}",
            pred.joint_count(),
            gt.joint_count()
        )));
    }
    Ok(())
}

fn joint_errors_mm(pred: &Pose3D, gt: &Pose3D) -> Vec<f64> {
    pred.joints()
        .iter()
        .zip(gt.joints())
        .map(|(p, g)| {
            (((p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2) + (p[2] - g[2]).powi(2)).sqrt())
                * MM_PER_METER
        })
        .collect()
}

/// Mean per-joint position error in millimeters.
pub fn mpjpe(pred: &Pose3D, gt: &Pose3D) -> Result<f64> {
    check_layout(pred, gt)?;
    let errs = joint_errors_mm(pred, gt);
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

/// The similarity transform (scale, rotation, translation) that best maps
/// `pred` onto `gt` in the least-squares sense, reflection disallowed.
pub struct Similarity {
    pub scale: f64,
    pub rotation: Matrix3<f64>,
    pub translation: [f64; 3],
}

impl Similarity {
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.rotation * nalgebra::Vector3::new(p[0], p[1], p[2]) * self.scale;
        [v[0] + self.translation[0], v[1] + self.translation[1], v[2] + self.translation[2]]
    }
}

/// Orthogonal Procrustes with scale via SVD; the rotation determinant is
/// forced to +1.
pub fn procrustes_align(pred: &Pose3D, gt: &Pose3D) -> Result<Similarity> {
    check_layout(pred, gt)?;
    let n = pred.joint_count();
    if n < 3 {
        return Err(Error::Evaluation("alignment needs at least 3 joints".into()));
    }
    let mean = |pose: &Pose3D| {
        let mut m = [0.0; 3];
        for j in pose.joints() {
            for c in 0..3 {
                m[c] += j[c];
            }
        }
        [m[0] / n as f64, m[1] / n as f64, m[2] / n as f64]
    };
    let pm = mean(pred);
    let gm = mean(gt);

    let mut h = Matrix3::<f64>::zeros();
    let mut pred_ss = 0.0;
    for (p, g) in pred.joints().iter().zip(gt.joints()) {
        let x = [p[0] - pm[0], p[1] - pm[1], p[2] - pm[2]];
        let y = [g[0] - gm[0], g[1] - gm[1], g[2] - gm[2]];
        for r in 0..3 {
            for c in 0..3 {
                h[(r, c)] += x[r] * y[c];
            }
        }
        pred_ss += x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    }
    if pred_ss < 1e-18 {
        return Err(Error::Evaluation("degenerate (collapsed) prediction".into()));
    }
    let svd = h.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Evaluation("SVD failed".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Evaluation("SVD failed".into()))?;
    let v = v_t.transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, d));
    let rotation = v * correction * u.transpose();
    let singular = svd.singular_values;
    let scale = (singular[0] + singular[1] + d * singular[2]) / pred_ss;
    let rp = rotation * nalgebra::Vector3::new(pm[0], pm[1], pm[2]) * scale;
    let translation = [gm[0] - rp[0], gm[1] - rp[1], gm[2] - rp[2]];
    Ok(Similarity { scale, rotation, translation })
}

/// MPJPE after optimal similarity alignment of `pred` onto `gt`.
pub fn pa_mpjpe(pred: &Pose3D, gt: &Pose3D) -> Result<f64> {
    let sim = procrustes_align(pred, gt)?;
    let aligned: Vec<[f64; 3]> = pred.joints().iter().map(|&p| sim.apply(p)).collect();
    let aligned = Pose3D::person_centric(aligned);
    let gt_copy = Pose3D::person_centric(gt.joints().to_vec());
    mpjpe(&aligned, &gt_copy)
}

/// Percentage of joints with error at or below the threshold.
pub fn pck(pred: &Pose3D, gt: &Pose3D, threshold_mm: f64) -> Result<f64> {
    check_layout(pred, gt)?;
    let errs = joint_errors_mm(pred, gt);
    let ok = errs.iter().filter(|&&e| e <= threshold_mm).count();
    Ok(100.0 * ok as f64 / errs.len() as f64)
}

/// PCK in absolute (camera-centric) coordinates; same counting rule, no root
/// alignment expected from the caller.
pub fn pck_abs(pred: &Pose3D, gt: &Pose3D, threshold_mm: f64) -> Result<f64> {
    pck(pred, gt, threshold_mm)
}

/// Percentage of matched root predictions within the threshold.
pub fn ap_root(pred_roots: &[[f64; 3]], gt_roots: &[[f64; 3]], threshold_mm: f64) -> Result<f64> {
    if pred_roots.len() != gt_roots.len() {
        return Err(Error::Validation(format!(
            "{} predicted roots vs {} ground-truth roots",
            pred_roots.len(),
            gt_roots.len()
        )));
    }
    if pred_roots.is_empty() {
        return Err(Error::Validation("no roots to evaluate".into()));
    }
    let ok = pred_roots
        .iter()
        .zip(gt_roots)
        .filter(|(p, g)| {
            let d = ((p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2) + (p[2] - g[2]).powi(2)).sqrt();
            d * MM_PER_METER <= threshold_mm
        })
        .count();
    Ok(100.0 * ok as f64 / pred_roots.len() as f64)
}

/// Area under the PCK curve: mean PCK over thresholds 0..=150 mm in 5 mm
/// steps.
pub fn auc_rel(pairs: &[(Pose3D, Pose3D)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Validation("no pose pairs".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    let mut thr = 0.0;
    while thr <= 150.0 + 1e-9 {
        let mut acc = 0.0;
        for (p, g) in pairs {
            acc += pck(p, g, thr)?;
        }
        total += acc / pairs.len() as f64;
        count += 1;
        thr += 5.0;
    }
    Ok(total / count as f64)
}

/// Greedy nearest-root assignment between two unordered person lists.
/// Returns (pred_index, gt_index) pairs.
pub fn match_roots_greedy(pred_roots: &[[f64; 3]], gt_roots: &[[f64; 3]]) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in pred_roots.iter().enumerate() {
        for (j, g) in gt_roots.iter().enumerate() {
            let d = ((p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2) + (p[2] - g[2]).powi(2)).sqrt();
            pairs.push((d, i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; pred_roots.len()];
    let mut used_g = vec![false; gt_roots.len()];
    let mut out = Vec::new();
    for (_, i, j) in pairs {
        if !used_p[i] && !used_g[j] {
            used_p[i] = true;
            used_g[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Aggregate metric values for one scope (sequence or corpus).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MetricValues {
    pub mpjpe_mm: f64,
    pub pa_mpjpe_mm: f64,
    pub pck_percent: f64,
    pub pck_abs_percent: f64,
    pub auc_rel_percent: f64,
    pub ap_root_percent: f64,
    pub sample_count: usize,
}

/// Corpus-level report plus a per-sequence breakdown.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalReport {
    pub overall: MetricValues,
    pub per_sequence: Vec<(String, MetricValues)>,
}

/// Thresholds used when aggregating a report.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EvalConfig {
    pub pck_mm: f64,
    pub abs_mm: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { pck_mm: DEFAULT_PCK_MM, abs_mm: DEFAULT_ABS_MM }
    }
}

/// One matched prediction/ground-truth pose pair in camera coordinates,
/// with the root joint index for person-centering.
#[derive(Debug, Clone)]
pub struct EvalPair {
    pub pred_cam: Pose3D,
    pub gt_cam: Pose3D,
    pub root_index: usize,
}

/// Flattened per-sequence collection of matched pairs.
#[derive(Debug, Clone)]
pub struct SequenceEval {
    pub name: String,
    pub pairs: Vec<EvalPair>,
}

fn eval_pairs(pairs: &[EvalPair], cfg: &EvalConfig) -> Result<MetricValues> {
    if pairs.is_empty() {
        return Err(Error::Validation("no evaluation pairs".into()));
    }
    let mut mpjpe_acc = 0.0;
    let mut pa_acc = 0.0;
    let mut pck_acc = 0.0;
    let mut abs_acc = 0.0;
    let mut pred_roots = Vec::with_capacity(pairs.len());
    let mut gt_roots = Vec::with_capacity(pairs.len());
    let mut pc_pairs = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let pr = pair.pred_cam.joints()[pair.root_index];
        let gr = pair.gt_cam.joints()[pair.root_index];
        let pred_pc = pair.pred_cam.to_person_centric(pr);
        let gt_pc = pair.gt_cam.to_person_centric(gr);
        mpjpe_acc += mpjpe(&pred_pc, &gt_pc)?;
        pa_acc += pa_mpjpe(&pred_pc, &gt_pc)?;
        pck_acc += pck(&pred_pc, &gt_pc, cfg.pck_mm)?;
        abs_acc += pck_abs(&pair.pred_cam, &pair.gt_cam, cfg.abs_mm)?;
        pred_roots.push(pr);
        gt_roots.push(gr);
        pc_pairs.push((pred_pc, gt_pc));
    }
    let n = pairs.len() as f64;
    Ok(MetricValues {
        mpjpe_mm: mpjpe_acc / n,
        pa_mpjpe_mm: pa_acc / n,
        pck_percent: pck_acc / n,
        pck_abs_percent: abs_acc / n,
        auc_rel_percent: auc_rel(&pc_pairs)?,
        ap_root_percent: ap_root(&pred_roots, &gt_roots, cfg.abs_mm)?,
        sample_count: pairs.len(),
    })
}

/// Full evaluation over a corpus of sequences.
pub fn evaluate(sequences: &[SequenceEval], cfg: &EvalConfig) -> Result<EvalReport> {
    if sequences.is_empty() {
        return Err(Error::Validation("no sequences to evaluate".into()));
    }
    let mut per_sequence = Vec::with_capacity(sequences.len());
    let mut all: Vec<EvalPair> = Vec::new();
    for seq in sequences {
        per_sequence.push((seq.name.clone(), eval_pairs(&seq.pairs, cfg)?));
        all.extend(seq.pairs.iter().cloned());
    }
    Ok(EvalReport { overall: eval_pairs(&all, cfg)?, per_sequence })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pose(rng: &mut impl Rng, n: usize) -> Pose3D {
        Pose3D::person_centric(
            (0..n)
                .map(|_| {
                    [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]
                })
                .collect(),
        )
    }

    fn random_rotation(rng: &mut impl Rng) -> Matrix3<f64> {
        // random unit quaternion -> rotation matrix (det +1)
        let q: [f64; 4] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        let (w, x, y, z) = (q[0] / n, q[1] / n, q[2] / n, q[3] / n);
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    #[test]
    fn mpjpe_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_pose(&mut rng, 17);
        assert_eq!(mpjpe(&a, &a).unwrap(), 0.0);

        let shifted = Pose3D::person_centric(
            a.joints().iter().map(|j| [j[0] + 0.010, j[1], j[2]]).collect(),
        );
        let e = mpjpe(&shifted, &a).unwrap();
        assert!((e - 10.0).abs() < 1e-9, "{e}");

        let b = random_pose(&mut rng, 17);
        let mut want = 0.0;
        for (p, g) in b.joints().iter().zip(a.joints()) {
            want += ((p[0] - g[0]).powi(2) + (p[1] - g[1]).powi(2) + (p[2] - g[2]).powi(2)).sqrt();
        }
        want = want / 17.0 * 1000.0;
        assert!((mpjpe(&b, &a).unwrap() - want).abs() < 1e-9);

        let short = random_pose(&mut rng, 5);
        assert!(mpjpe(&short, &a).is_err());
    }

    #[test]
    fn procrustes_recovers_similarity_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..1000 {
            let gt = random_pose(&mut rng, 17);
            let r = random_rotation(&mut rng);
            let s = rng.gen_range(0.3..3.0);
            let t = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let pred = Pose3D::person_centric(
                gt.joints()
                    .iter()
                    .map(|&j| {
                        let v = r * nalgebra::Vector3::new(j[0], j[1], j[2]) * s;
                        [v[0] + t[0], v[1] + t[1], v[2] + t[2]]
                    })
                    .collect(),
            );
            // pred is a similarity copy of gt: alignment must annihilate the error
            let e = pa_mpjpe(&pred, &gt).unwrap();
            assert!(e < 1e-6, "residual {e}");
        }
    }

    #[test]
    fn pa_mpjpe_zero_on_identical_poses() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_pose(&mut rng, 17);
        assert!(pa_mpjpe(&a, &a).unwrap() < 1e-9);
    }

    #[test]
    fn pa_mpjpe_never_exceeds_mpjpe() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let a = random_pose(&mut rng, 17);
            let b = random_pose(&mut rng, 17);
            let pa = pa_mpjpe(&a, &b).unwrap();
            let raw = mpjpe(&a, &b).unwrap();
            assert!(pa <= raw + 1e-9, "pa {pa} vs mpjpe {raw}");
        }
    }

    /// Independent oracle: Horn's quaternion method via Jacobi eigensolver.
    fn horn_alignment_error(pred: &Pose3D, gt: &Pose3D) -> f64 {
        let n = pred.joint_count() as f64;
        let mean = |p: &Pose3D| {
            let mut m = [0.0; 3];
            for j in p.joints() {
                for c in 0..3 {
                    m[c] += j[c] / n;
                }
            }
            m
        };
        let pm = mean(pred);
        let gm = mean(gt);
        let xs: Vec<[f64; 3]> = pred
            .joints()
            .iter()
            .map(|j| [j[0] - pm[0], j[1] - pm[1], j[2] - pm[2]])
            .collect();
        let ys: Vec<[f64; 3]> = gt
            .joints()
            .iter()
            .map(|j| [j[0] - gm[0], j[1] - gm[1], j[2] - gm[2]])
            .collect();
        // cross-covariance
        let mut s = [[0.0f64; 3]; 3];
        for (x, y) in xs.iter().zip(&ys) {
            for r in 0..3 {
                for c in 0..3 {
                    s[r][c] += x[r] * y[c];
                }
            }
        }
        // Horn's 4x4 symmetric matrix
        let tr = s[0][0] + s[1][1] + s[2][2];
        let mut nmat = [
            [tr, s[1][2] - s[2][1], s[2][0] - s[0][2], s[0][1] - s[1][0]],
            [s[1][2] - s[2][1], s[0][0] - s[1][1] - s[2][2], s[0][1] + s[1][0], s[2][0] + s[0][2]],
            [s[2][0] - s[0][2], s[0][1] + s[1][0], s[1][1] - s[0][0] - s[2][2], s[1][2] + s[2][1]],
            [s[0][1] - s[1][0], s[2][0] + s[0][2], s[1][2] + s[2][1], s[2][2] - s[0][0] - s[1][1]],
        ];
        // Jacobi eigen decomposition of the symmetric 4x4
        let mut vmat = [[0.0f64; 4]; 4];
        for (i, row) in vmat.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for _ in 0..100 {
            // largest off-diagonal
            let (mut p, mut q, mut max) = (0, 1, 0.0f64);
            for i in 0..4 {
                for j in (i + 1)..4 {
                    if nmat[i][j].abs() > max {
                        max = nmat[i][j].abs();
                        p = i;
                        q = j;
                    }
                }
            }
            if max < 1e-14 {
                break;
            }
            let theta = 0.5 * (nmat[q][q] - nmat[p][p]) / nmat[p][q];
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let sgn = t * c;
            for k in 0..4 {
                let (akp, akq) = (nmat[k][p], nmat[k][q]);
                nmat[k][p] = c * akp - sgn * akq;
                nmat[k][q] = sgn * akp + c * akq;
            }
            for k in 0..4 {
                let (apk, aqk) = (nmat[p][k], nmat[q][k]);
                nmat[p][k] = c * apk - sgn * aqk;
                nmat[q][k] = sgn * apk + c * aqk;
            }
            for k in 0..4 {
                let (vkp, vkq) = (vmat[k][p], vmat[k][q]);
                vmat[k][p] = c * vkp - sgn * vkq;
                vmat[k][q] = sgn * vkp + c * vkq;
            }
        }
        // eigenvector of the largest eigenvalue = optimal quaternion
        let mut best = 0;
        for i in 1..4 {
            if nmat[i][i] > nmat[best][best] {
                best = i;
            }
        }
        let q = [vmat[0][best], vmat[1][best], vmat[2][best], vmat[3][best]];
        let nq = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        let (w, x, y, z) = (q[0] / nq, q[1] / nq, q[2] / nq, q[3] / nq);
        let rot = [
            [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
            [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
            [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
        ];
        // optimal scale given the rotation
        let mut num = 0.0;
        let mut den = 0.0;
        for (xv, yv) in xs.iter().zip(&ys) {
            let rx = [
                rot[0][0] * xv[0] + rot[0][1] * xv[1] + rot[0][2] * xv[2],
                rot[1][0] * xv[0] + rot[1][1] * xv[1] + rot[1][2] * xv[2],
                rot[2][0] * xv[0] + rot[2][1] * xv[1] + rot[2][2] * xv[2],
            ];
            num += rx[0] * yv[0] + rx[1] * yv[1] + rx[2] * yv[2];
            den += xv[0] * xv[0] + xv[1] * xv[1] + xv[2] * xv[2];
        }
        let s = num / den;
        // residual mean distance in mm
        let mut total = 0.0;
        for (xv, yv) in xs.iter().zip(&ys) {
            let rx = [
                s * (rot[0][0] * xv[0] + rot[0][1] * xv[1] + rot[0][2] * xv[2]),
                s * (rot[1][0] * xv[0] + rot[1][1] * xv[1] + rot[1][2] * xv[2]),
                s * (rot[2][0] * xv[0] + rot[2][1] * xv[1] + rot[2][2] * xv[2]),
            ];
            total +=
                ((rx[0] - yv[0]).powi(2) + (rx[1] - yv[1]).powi(2) + (rx[2] - yv[2]).powi(2)).sqrt();
        }
        total / n * MM_PER_METER
    }

    #[test]
    fn pa_mpjpe_matches_horn_quaternion_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = random_pose(&mut rng, 17);
            let b = random_pose(&mut rng, 17);
            let got = pa_mpjpe(&a, &b).unwrap();
            let want = horn_alignment_error(&a, &b);
            assert!(
                (got - want).abs() < 1e-6 * (1.0 + want),
                "svd {got} vs horn {want}"
            );
        }
    }

    #[test]
    fn pck_examples_and_threshold_convention() {
        let gt = Pose3D::person_centric(vec![[0.0; 3]; 4]);
        assert_eq!(pck(&gt, &gt, 150.0).unwrap(), 100.0);

        // two joints at exactly the threshold, two beyond
        let pred = Pose3D::person_centric(vec![
            [0.150, 0.0, 0.0],
            [0.0, 0.150, 0.0],
            [0.4, 0.0, 0.0],
            [0.0, 0.0, 0.9],
        ]);
        // exactly-at-threshold counts as correct
        assert_eq!(pck(&pred, &gt, 150.0).unwrap(), 50.0);
    }

    #[test]
    fn pck_monotone_and_saturating() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random_pose(&mut rng, 17);
        let b = random_pose(&mut rng, 17);
        let mut prev = 0.0;
        for thr in [10.0, 50.0, 100.0, 200.0, 500.0, 1e9] {
            let v = pck(&a, &b, thr).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert_eq!(prev, 100.0);
    }

    #[test]
    fn ap_root_examples() {
        let gt = vec![[0.0, 0.0, 3.0], [1.0, 0.0, 4.0]];
        assert_eq!(ap_root(&gt, &gt, 250.0).unwrap(), 100.0);

        let off: Vec<[f64; 3]> = gt.iter().map(|r| [r[0] + 1.0, r[1], r[2]]).collect();
        assert_eq!(ap_root(&off, &gt, 250.0).unwrap(), 0.0);

        let mixed = vec![[0.1, 0.0, 3.0], [2.0, 0.0, 4.0]];
        assert_eq!(ap_root(&mixed, &gt, 250.0).unwrap(), 50.0);

        assert!(ap_root(&gt[..1], &gt, 250.0).is_err());
    }

    #[test]
    fn greedy_matching_pairs_nearest_roots() {
        let pred = vec![[0.0, 0.0, 5.0], [0.0, 0.0, 3.0]];
        let gt = vec![[0.0, 0.0, 3.1], [0.0, 0.0, 5.1]];
        let mut m = match_roots_greedy(&pred, &gt);
        m.sort();
        assert_eq!(m, vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn report_aggregation_on_perfect_predictions() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pairs: Vec<EvalPair> = (0..5)
            .map(|_| {
                let mut joints: Vec<[f64; 3]> = (0..17)
                    .map(|_| {
                        [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(3.0..5.0)]
                    })
                    .collect();
                joints[0] = [0.0, 0.0, 4.0];
                let pose = Pose3D::camera_centric(joints);
                EvalPair { pred_cam: pose.clone(), gt_cam: pose, root_index: 0 }
            })
            .collect();
        let report = evaluate(
            &[SequenceEval { name: "seq0".into(), pairs }],
            &EvalConfig::default(),
        )
        .unwrap();
        assert!(report.overall.mpjpe_mm < 1e-9);
        assert_eq!(report.overall.pck_percent, 100.0);
        assert_eq!(report.overall.pck_abs_percent, 100.0);
        assert_eq!(report.overall.ap_root_percent, 100.0);
        assert_eq!(report.per_sequence.len(), 1);
    }
}
