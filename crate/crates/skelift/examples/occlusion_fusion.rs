//! Occlusion thresholds, interval extraction, and the exponential weight
//! that blends the depth and velocity root paths.
//!
//! ```bash
//! cargo run --example occlusion_fusion
//! ```

use skelift::fusion::{
    fuse_root, fusion_weight, joint_occluded, occlusion_intervals, pose_occluded,
};

fn main() -> skelift::Result<()> {
    println!("joint_occluded(0.49) = {}", joint_occluded(0.49));
    println!("joint_occluded(0.50) = {}", joint_occluded(0.50));

    let mut flags = vec![true; 17];
    for f in flags.iter_mut().take(5) {
        *f = false;
    }
    println!("5 of 17 joints visible -> pose occluded: {}", pose_occluded(&flags)?);
    for f in flags.iter_mut().take(6) {
        *f = false;
    }
    println!("6 of 17 joints visible -> pose occluded: {}", pose_occluded(&flags)?);

    let occluded = [false, false, true, true, true, true, true, true, true, false];
    let intervals = occlusion_intervals(&occluded);
    println!("\nframe flags {occluded:?}");
    for iv in &intervals {
        println!("interval [{}, {}]:", iv.start, iv.end);
        for t in iv.start..=iv.end {
            let w = fusion_weight(t, iv)?;
            println!("  t = {t}: w = {w:.4} (depth path weight)");
        }
    }

    let p_depth = [0.1, 0.0, 4.2];
    let p_velocity = [0.0, 0.0, 4.0];
    let iv = &intervals[0];
    let mid = (iv.start + iv.end) / 2;
    let w = fusion_weight(mid, iv)?;
    let fused = fuse_root(p_depth, p_velocity, w)?;
    println!(
        "\nmid-interval fuse of depth {p_depth:?} and velocity {p_velocity:?} at w = {w:.4}: {fused:?}"
    );
    Ok(())
}
