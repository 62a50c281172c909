//! Occlusion detection, occlusion-interval extraction, and the exponential
//! weighting that blends the depth-based and velocity-based root paths.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::ObservedPose2D;

/// Heatmap confidence below this marks a joint occluded.
pub const JOINT_OCCLUSION_THRESHOLD: f64 = 0.5;

/// A pose is occluded when the visible fraction falls below this.
pub const POSE_VISIBLE_FRACTION: f64 = 0.30;

/// Inclusive frame range of one occlusion episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OcclusionInterval {
    pub start: usize,
    pub end: usize,
}

impl OcclusionInterval {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::Validation(format!("interval start {start} > end {end}")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, t: usize) -> bool {
        t >= self.start && t <= self.end
    }
}

/// A joint is occluded iff its confidence is strictly below 0.5.
pub fn joint_occluded(conf: f64) -> bool {
    conf < JOINT_OCCLUSION_THRESHOLD
}

/// A pose is occluded iff strictly fewer than 30% of its joints are visible.
pub fn pose_occluded(joint_occluded_flags: &[bool]) -> Result<bool> {
    if joint_occluded_flags.is_empty() {
        return Err(Error::Validation("pose with no joints".into()));
    }
    let visible = joint_occluded_flags.iter().filter(|&&o| !o).count();
    Ok((visible as f64) / (joint_occluded_flags.len() as f64) < POSE_VISIBLE_FRACTION)
}

/// Pose-level occlusion straight from an observation's confidences.
pub fn observation_occluded(obs: &ObservedPose2D) -> Result<bool> {
    let flags: Vec<bool> = obs.joint_conf().iter().map(|&c| joint_occluded(c)).collect();
    pose_occluded(&flags)
}

/// Maximal runs of consecutive `true` flags.
pub fn occlusion_intervals(occluded: &[bool]) -> Vec<OcclusionInterval> {
    let mut intervals = Vec::new();
    let mut start = None;
    for (t, &o) in occluded.iter().enumerate() {
        match (o, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                intervals.push(OcclusionInterval { start: s, end: t - 1 });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        intervals.push(OcclusionInterval { start: s, end: occluded.len() - 1 });
    }
    intervals
}

/// w = exp(-min(t - start, end - t)), measured in frames. Only defined inside
/// the interval; outside it the depth path is used unweighted.
pub fn fusion_weight(t: usize, interval: &OcclusionInterval) -> Result<f64> {
    if !interval.contains(t) {
        return Err(Error::Contract(format!(
            "frame {t} outside occlusion interval [{}, {}]",
            interval.start, interval.end
        )));
    }
    let d = (t - interval.start).min(interval.end - t);
    Ok((-(d as f64)).exp())
}

/// P = w * P_D + (1 - w) * P_S, componentwise.
pub fn fuse_root(p_d: [f64; 3], p_s: [f64; 3], w: f64) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::Validation(format!("fusion weight {w} outside [0, 1]")));
    }
    Ok([
        w * p_d[0] + (1.0 - w) * p_s[0],
        w * p_d[1] + (1.0 - w) * p_s[1],
        w * p_d[2] + (1.0 - w) * p_s[2],
    ])
}

/// Reconstructs per-frame flags from intervals (left inverse of
/// [`occlusion_intervals`]).
pub fn flags_from_intervals(len: usize, intervals: &[OcclusionInterval]) -> Vec<bool> {
    let mut flags = vec![false; len];
    for iv in intervals {
        for flag in flags.iter_mut().take(iv.end + 1).skip(iv.start) {
            *flag = true;
        }
    }
    flags
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn joint_threshold_is_strict() {
        assert!(joint_occluded(0.49));
        assert!(!joint_occluded(0.5));
        assert!(!joint_occluded(1.0));
        assert!(joint_occluded(0.0));
    }

    #[test]
    fn pose_threshold_on_17_joints() {
        // 5 of 17 visible: 0.294 < 0.30 -> occluded
        let mut flags = vec![true; 17];
        for f in flags.iter_mut().take(5) {
            *f = false;
        }
        assert!(pose_occluded(&flags).unwrap());
        // 6 of 17 visible: 0.353 -> visible
        for f in flags.iter_mut().take(6) {
            *f = false;
        }
        assert!(!pose_occluded(&flags).unwrap());
        // all visible
        assert!(!pose_occluded(&vec![false; 17]).unwrap());
        assert!(pose_occluded(&[]).is_err());
    }

    #[test]
    fn interval_extraction_examples() {
        let flags = [false, false, true, true, true, false, false];
        assert_eq!(occlusion_intervals(&flags), vec![OcclusionInterval { start: 2, end: 4 }]);

        assert!(occlusion_intervals(&[false; 5]).is_empty());

        let flags = [true, true, false, true, true];
        assert_eq!(
            occlusion_intervals(&flags),
            vec![
                OcclusionInterval { start: 0, end: 1 },
                OcclusionInterval { start: 3, end: 4 }
            ]
        );
    }

    #[test]
    fn intervals_round_trip_to_flags() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let len = rng.gen_range(1..40);
            let flags: Vec<bool> = (0..len).map(|_| rng.gen_bool(0.4)).collect();
            let intervals = occlusion_intervals(&flags);
            assert_eq!(flags_from_intervals(len, &intervals), flags);
            // intervals sorted and disjoint
            for w in intervals.windows(2) {
                assert!(w[0].end + 1 < w[1].start);
            }
        }
    }

    #[test]
    fn fusion_weight_boundaries_and_interior() {
        let iv = OcclusionInterval::new(0, 10).unwrap();
        assert_eq!(fusion_weight(0, &iv).unwrap(), 1.0);
        assert_eq!(fusion_weight(10, &iv).unwrap(), 1.0);
        let w = fusion_weight(3, &iv).unwrap();
        assert!((w - (-3.0f64).exp()).abs() < 1e-12);
        assert!(fusion_weight(11, &iv).is_err());

        let single = OcclusionInterval::new(4, 4).unwrap();
        assert_eq!(fusion_weight(4, &single).unwrap(), 1.0);
    }

    #[test]
    fn fusion_weight_symmetric_with_minimum_at_midpoint() {
        let iv = OcclusionInterval::new(5, 15).unwrap();
        for d in 0..=5 {
            let a = fusion_weight(5 + d, &iv).unwrap();
            let b = fusion_weight(15 - d, &iv).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
        let mid = fusion_weight(10, &iv).unwrap();
        for t in 5..=15 {
            assert!(fusion_weight(t, &iv).unwrap() >= mid);
        }
    }

    #[test]
    fn fuse_root_examples_and_convexity() {
        let p_d = [0.0, 0.0, 2.0];
        let p_s = [0.0, 0.0, 4.0];
        assert_eq!(fuse_root(p_d, p_s, 1.0).unwrap(), p_d);
        assert_eq!(fuse_root(p_d, p_s, 0.0).unwrap(), p_s);
        let f = fuse_root(p_d, p_s, 0.25).unwrap();
        assert!((f[2] - 3.5).abs() < 1e-12);
        assert!(fuse_root(p_d, p_s, 1.5).is_err());

        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..1000 {
            let a: [f64; 3] = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let b: [f64; 3] = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let w = rng.gen_range(0.0..=1.0);
            let f = fuse_root(a, b, w).unwrap();
            for c in 0..3 {
                let (lo, hi) = if a[c] <= b[c] { (a[c], b[c]) } else { (b[c], a[c]) };
                assert!(f[c] >= lo - 1e-12 && f[c] <= hi + 1e-12);
            }
        }
    }
}
