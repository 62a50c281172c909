//! The evaluation metrics on controlled perturbations: MPJPE vs PA-MPJPE,
//! PCK counting, and root average precision.
//!
//! ```bash
//! cargo run --example evaluate_poses
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelift::metrics::{ap_root, mpjpe, pa_mpjpe, pck};
use skelift::pose::Pose3D;

fn main() -> skelift::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let gt = Pose3D::person_centric(
        (0..17)
            .map(|_| [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)])
            .collect(),
    );

    // small isotropic noise
    let noisy = Pose3D::person_centric(
        gt.joints()
            .iter()
            .map(|j| {
                [
                    j[0] + rng.gen_range(-0.02..0.02),
                    j[1] + rng.gen_range(-0.02..0.02),
                    j[2] + rng.gen_range(-0.02..0.02),
                ]
            })
            .collect(),
    );
    println!("noisy copy:     mpjpe {:6.2} mm, pa-mpjpe {:6.2} mm", mpjpe(&noisy, &gt)?, pa_mpjpe(&noisy, &gt)?);

    // a rotated + scaled copy has large MPJPE but zero PA-MPJPE
    let angle: f64 = 0.4;
    let (s, c) = angle.sin_cos();
    let rotated = Pose3D::person_centric(
        gt.joints()
            .iter()
            .map(|j| [1.3 * (c * j[0] - s * j[1]), 1.3 * (s * j[0] + c * j[1]), 1.3 * j[2]])
            .collect(),
    );
    println!("rotated+scaled: mpjpe {:6.2} mm, pa-mpjpe {:6.2} mm", mpjpe(&rotated, &gt)?, pa_mpjpe(&rotated, &gt)?);

    println!("\npck at 150 mm: noisy {:.1}%, rotated {:.1}%", pck(&noisy, &gt, 150.0)?, pck(&rotated, &gt, 150.0)?);

    let gt_roots = vec![[0.0, 0.0, 3.0], [1.0, 0.0, 4.5]];
    let pred_roots = vec![[0.1, 0.0, 3.1], [1.0, 0.0, 5.2]];
    println!("ap_root at 250 mm: {:.1}%", ap_root(&pred_roots, &gt_roots, 250.0)?);
    Ok(())
}
