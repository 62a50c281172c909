//! Weak-perspective projection, back-projection by relative depth Z/f, and
//! the (p, s, c) pose normalization.
//!
//! ```bash
//! cargo run --example camera_geometry
//! ```

use skelift::camera::{back_project, normalize_pose, project, CameraModel};

fn main() -> skelift::Result<()> {
    let cam = CameraModel::centered(1920.0, 1080.0, 1000.0)?;
    println!("camera: center ({}, {}), f = {:?} px", cam.cx, cam.cy, cam.focal);

    let point = [0.4, -0.2, 4.0];
    let px = project(point, &cam)?;
    println!("\n3D point {point:?} m projects to pixel ({:.2}, {:.2})", px[0], px[1]);

    let zf = point[2] / 1000.0;
    let back = back_project(px, zf, &cam)?;
    println!("back-projection with Z/f = {zf} recovers ({:.6}, {:.6}, {:.3})", back[0], back[1], back[2]);

    // without a focal length the depth axis stays in units of f
    let uncalibrated = CameraModel::new(960.0, 540.0, None)?;
    let rel = back_project(px, zf, &uncalibrated)?;
    println!("uncalibrated back-projection keeps Z/f: ({:.6}, {:.6}, {:.6})", rel[0], rel[1], rel[2]);

    // normalization: scale the mean joint-to-pelvis distance to 1
    let joints = vec![[960.0, 400.0], [930.0, 520.0], [990.0, 520.0], [960.0, 640.0]];
    let np = normalize_pose(&joints, 0)?;
    println!("\nnormalize_pose: scale s = {:.3} px, center c = ({:.1}, {:.1})", np.s, np.c[0], np.c[1]);
    let mean: f64 =
        np.p[1..].iter().map(|p| (p[0] * p[0] + p[1] * p[1]).sqrt()).sum::<f64>() / 3.0;
    println!("mean joint-to-root distance after normalization = {mean:.12}");
    Ok(())
}
