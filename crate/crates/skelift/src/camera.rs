//! Weak-perspective camera geometry: projection, back-projection by relative
//! depth Z/f, and the pose normalization producing (p, s, c) triples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pinhole intrinsics. The focal length is known for synthetic ground truth;
/// at inference time only the joint quantity Z/f is estimated, so `focal` may
/// be absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub cx: f64,
    pub cy: f64,
    #[serde(rename = "f")]
    pub focal: Option<f64>,
}

impl CameraModel {
    pub fn new(cx: f64, cy: f64, focal: Option<f64>) -> Result<Self> {
        if let Some(f) = focal {
            if !(f > 0.0) {
                return Err(Error::Validation(format!("focal length must be positive, got {f}")));
            }
        }
        Ok(Self { cx, cy, focal })
    }

    /// Image center for a given image size, the default principal point.
    pub fn centered(width: f64, height: f64, focal: f64) -> Result<Self> {
        Self::new(width / 2.0, height / 2.0, Some(focal))
    }

    /// Focal length if known, else 1 (depths then stay in units of f).
    pub fn focal_or_unit(&self) -> f64 {
        self.focal.unwrap_or(1.0)
    }
}

/// x = f·X/Z + c_x, y = f·Y/Z + c_y. Requires Z > 0 and a known focal length.
pub fn project(point: [f64; 3], cam: &CameraModel) -> Result<[f64; 2]> {
    let [x, y, z] = point;
    if !(z > 0.0) {
        return Err(Error::BehindCamera(z));
    }
    let f = cam
        .focal
        .ok_or_else(|| Error::Validation("projection needs a known focal length".into()))?;
    Ok([f * x / z + cam.cx, f * y / z + cam.cy])
}

/// X = (Z/f)(x − c_x), Y = (Z/f)(y − c_y); Z = (Z/f)·f when the focal length
/// is known, otherwise the returned Z stays in units of f (i.e. equals Z/f).
pub fn back_project(pixel: [f64; 2], rel_depth: f64, cam: &CameraModel) -> Result<[f64; 3]> {
    if !(rel_depth > 0.0) {
        return Err(Error::Validation(format!(
            "relative depth must be positive, got {rel_depth}"
        )));
    }
    Ok([
        rel_depth * (pixel[0] - cam.cx),
        rel_depth * (pixel[1] - cam.cy),
        rel_depth * cam.focal_or_unit(),
    ])
}

/// A 2D pose rescaled so its mean joint-to-root distance is one.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPose {
    /// joint_count x 2 normalized coordinates, root at the origin.
    pub p: Vec<[f64; 2]>,
    /// The pre-normalization mean joint-to-root distance in pixels (the divisor).
    pub s: f64,
    /// Root joint pixel coordinates.
    pub c: [f64; 2],
}

/// Centers a pose at its root joint and scales the average joint-to-root
/// distance to one.
pub fn normalize_pose(joints2d: &[[f64; 2]], root_index: usize) -> Result<NormalizedPose> {
    let n = joints2d.len();
    if root_index >= n {
        return Err(Error::Validation(format!("root index {root_index} out of range")));
    }
    if n < 2 {
        return Err(Error::DegeneratePose("need at least two joints".into()));
    }
    let c = joints2d[root_index];
    let mut total = 0.0;
    for (i, j) in joints2d.iter().enumerate() {
        if i == root_index {
            continue;
        }
        total += ((j[0] - c[0]).powi(2) + (j[1] - c[1]).powi(2)).sqrt();
    }
    let s = total / (n - 1) as f64;
    if s < 1e-9 {
        return Err(Error::DegeneratePose(format!(
            "mean joint-to-root distance {s} below 1e-9"
        )));
    }
    let p = joints2d
        .iter()
        .map(|j| [(j[0] - c[0]) / s, (j[1] - c[1]) / s])
        .collect();
    Ok(NormalizedPose { p, s, c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cam() -> CameraModel {
        CameraModel::centered(1920.0, 1080.0, 1000.0).unwrap()
    }

    #[test]
    fn optical_axis_projects_to_center() {
        let c = cam();
        let px = project([0.0, 0.0, 3.0], &c).unwrap();
        assert_eq!(px, [c.cx, c.cy]);
    }

    #[test]
    fn projection_arithmetic() {
        let c = cam();
        let px = project([0.5, 0.0, 1000.0], &c).unwrap();
        assert!((px[0] - (c.cx + 0.5)).abs() < 1e-12);
        assert!((px[1] - c.cy).abs() < 1e-12);
    }

    #[test]
    fn behind_camera_is_an_error() {
        assert!(project([0.0, 0.0, -1.0], &cam()).is_err());
        assert!(project([0.0, 0.0, 0.0], &cam()).is_err());
    }

    #[test]
    fn back_projection_examples() {
        let c = cam();
        let p = back_project([c.cx, 200.0], 1.5, &c).unwrap();
        assert_eq!(p[0], 0.0);

        let p = back_project([c.cx + 100.0, c.cy], 2.0, &c).unwrap();
        assert!((p[0] - 200.0).abs() < 1e-12);
        assert!((p[2] - 2000.0).abs() < 1e-12);

        assert!(back_project([0.0, 0.0], 0.0, &c).is_err());
        assert!(back_project([0.0, 0.0], -0.1, &c).is_err());
    }

    #[test]
    fn unknown_focal_keeps_depth_in_units_of_f() {
        let c = CameraModel::new(960.0, 540.0, None).unwrap();
        let p = back_project([1060.0, 540.0], 0.004, &c).unwrap();
        assert!((p[0] - 0.4).abs() < 1e-12);
        assert!((p[2] - 0.004).abs() < 1e-15);
    }

    #[test]
    fn project_back_project_round_trip() {
        let c = cam();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let px = [rng.gen_range(0.0..1920.0), rng.gen_range(0.0..1080.0)];
            let d = rng.gen_range(0.001..0.01);
            let pt = back_project(px, d, &c).unwrap();
            let back = project(pt, &c).unwrap();
            assert!((back[0] - px[0]).abs() < 1e-9);
            assert!((back[1] - px[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn normalize_two_joints_at_distance_five() {
        let np = normalize_pose(&[[0.0, 0.0], [3.0, 4.0]], 0).unwrap();
        assert!((np.s - 5.0).abs() < 1e-12);
        assert_eq!(np.c, [0.0, 0.0]);
        let d = (np.p[1][0].powi(2) + np.p[1][1].powi(2)).sqrt();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_is_idempotent_on_normalized_poses() {
        let np = normalize_pose(&[[10.0, 10.0], [14.0, 10.0], [10.0, 16.0]], 0).unwrap();
        let again = normalize_pose(&np.p, 0).unwrap();
        assert!((again.s - 1.0).abs() < 1e-12);
        for (a, b) in again.p.iter().zip(np.p.iter()) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_mean_distance_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let joints: Vec<[f64; 2]> = (0..17)
                .map(|_| [rng.gen_range(-300.0..300.0), rng.gen_range(-300.0..300.0)])
                .collect();
            let np = match normalize_pose(&joints, 0) {
                Ok(np) => np,
                Err(_) => continue,
            };
            let mean: f64 = np.p[1..]
                .iter()
                .map(|p| (p[0].powi(2) + p[1].powi(2)).sqrt())
                .sum::<f64>()
                / 16.0;
            assert!((mean - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_pose_is_an_error() {
        assert!(matches!(
            normalize_pose(&[[5.0, 5.0], [5.0, 5.0], [5.0, 5.0]], 0),
            Err(Error::DegeneratePose(_))
        ));
    }

    #[test]
    fn scale_translation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let joints: Vec<[f64; 2]> = (0..9)
                .map(|_| [rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)])
                .collect();
            let base = match normalize_pose(&joints, 0) {
                Ok(np) => np,
                Err(_) => continue,
            };
            let k = rng.gen_range(0.1..10.0);
            let t = [rng.gen_range(-100.0..100.0), rng.gen_range(-100.0..100.0)];
            let moved: Vec<[f64; 2]> =
                joints.iter().map(|j| [k * j[0] + t[0], k * j[1] + t[1]]).collect();
            let np = normalize_pose(&moved, 0).unwrap();
            assert!((np.s - k * base.s).abs() < 1e-9 * (1.0 + np.s));
            assert!((np.c[0] - (k * joints[0][0] + t[0])).abs() < 1e-9);
            for (a, b) in np.p.iter().zip(base.p.iter()) {
                assert!((a[0] - b[0]).abs() < 1e-9 && (a[1] - b[1]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn back_project_linear_in_depth() {
        let c = cam();
        let px = [1200.0, 300.0];
        let a = back_project(px, 1.0, &c).unwrap();
        let b = back_project(px, 2.5, &c).unwrap();
        for k in 0..3 {
            assert!((b[k] - 2.5 * a[k]).abs() < 1e-9);
        }
    }
}
