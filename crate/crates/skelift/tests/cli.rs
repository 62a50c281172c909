//! Command-line behavior: exit codes, validation, and output shapes.

use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_skelift")
}

#[test]
fn invalid_person_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin())
        .args([
            "gen",
            "--scenes",
            "1",
            "--persons",
            "0",
            "--out",
            &dir.path().join("ds").display().to_string(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn unknown_flag_exits_with_usage_error() {
    let out = Command::new(bin()).args(["gen", "--bogus-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_checkpoint_reports_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(bin())
        .args([
            "gen",
            "--scenes",
            "1",
            "--persons",
            "2",
            "--frames",
            "20",
            "--seed",
            "1",
            "--out",
            &dir.path().display().to_string(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let missing = dir.path().join("does_not_exist.json");
    let out = Command::new(bin())
        .args([
            "infer",
            "--data",
            &dir.path().display().to_string(),
            "--gcn",
            &missing.display().to_string(),
            "--tcn-joint",
            &missing.display().to_string(),
            "--tcn-velocity",
            &missing.display().to_string(),
            "--tcn-root",
            &missing.display().to_string(),
            "--out",
            &dir.path().join("preds").display().to_string(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("does_not_exist.json"), "stderr: {stderr}");
}

#[test]
fn history_rows_match_epochs_and_zero_epochs_keeps_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("ds");
    let status = Command::new(bin())
        .args([
            "gen",
            "--scenes",
            "3",
            "--persons",
            "2",
            "--frames",
            "20",
            "--seed",
            "2",
            "--out",
            &data.display().to_string(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    let ckpt = dir.path().join("gcn.json");
    let status = Command::new(bin())
        .args([
            "train",
            "--model",
            "gcn",
            "--data",
            &data.display().to_string(),
            "--epochs",
            "3",
            "--seed",
            "5",
            "--width",
            "8",
            "--head",
            "12",
            "--out",
            &ckpt.display().to_string(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let history = std::fs::read_to_string(dir.path().join("gcn.history.csv")).unwrap();
    assert_eq!(history.lines().count(), 4, "header plus one row per epoch");

    // zero epochs: checkpoint equals the seeded initialization
    let ckpt0 = dir.path().join("gcn0.json");
    let status = Command::new(bin())
        .args([
            "train",
            "--model",
            "gcn",
            "--data",
            &data.display().to_string(),
            "--epochs",
            "0",
            "--seed",
            "5",
            "--width",
            "8",
            "--head",
            "12",
            "--out",
            &ckpt0.display().to_string(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let loaded = skelift::io::load_gcn_checkpoint(&ckpt0).unwrap();
    let init = skelift::gcn::GcnModel::init(loaded.hyper().clone(), 5).unwrap();
    for ((_, a), (_, b)) in loaded.params().iter().zip(init.params().iter()) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    let history0 = std::fs::read_to_string(dir.path().join("gcn0.history.csv")).unwrap();
    assert_eq!(history0.lines().count(), 1, "only the header for zero epochs");
}

#[test]
fn eval_of_perfect_predictions_reports_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("ds");
    let status = Command::new(bin())
        .args([
            "gen",
            "--scenes",
            "1",
            "--persons",
            "2",
            "--frames",
            "20",
            "--seed",
            "3",
            "--noise-gain",
            "0",
            "--ratios",
            "1,0,0",
            "--out",
            &data.display().to_string(),
        ])
        .status()
        .unwrap();
    assert!(status.success());

    // construct a "prediction" from the ground truth itself
    let seq = skelift::io::load_sequence(&data.join("seq_0000.jsonl")).unwrap();
    let topo = skelift::skeleton::SkeletonTopology::from_file(&seq.header.topology).unwrap();
    let scene = seq.to_synthetic().unwrap();
    let tracks: Vec<skelift::pipeline::TrackOutput> = scene
        .persons
        .iter()
        .map(|p| skelift::pipeline::TrackOutput {
            person_id: p.person_id,
            frames: p
                .gt3d_cam
                .iter()
                .enumerate()
                .map(|(t, cam)| {
                    let root = cam.joints()[topo.root_index()];
                    let f = scene.camera.focal.unwrap();
                    skelift::pipeline::FrameOutput {
                        t,
                        pose_cam: cam.clone(),
                        pose_pc: cam.to_person_centric(root),
                        root_cam: root,
                        rel_depth: root[2] / f,
                        occluded: false,
                        provenance: skelift::pipeline::RootProvenance::DepthPath,
                    }
                })
                .collect(),
        })
        .collect();
    let preds = dir.path().join("preds");
    std::fs::create_dir_all(&preds).unwrap();
    skelift::io::save_predictions(
        &skelift::pipeline::PipelineOutput { tracks },
        &topo,
        &scene.camera,
        &preds.join("seq_0000_pred.jsonl"),
    )
    .unwrap();

    let report_dir = dir.path().join("report");
    let out = Command::new(bin())
        .args([
            "eval",
            "--pred",
            &preds.display().to_string(),
            "--gt",
            &data.display().to_string(),
            "--out",
            &report_dir.display().to_string(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(report_dir.join("report.json")).unwrap()).unwrap();
    assert!(report["overall"]["mpjpe_mm"].as_f64().unwrap() < 1e-9);
    assert_eq!(report["overall"]["pck_percent"].as_f64().unwrap(), 100.0);
    assert_eq!(report["overall"]["ap_root_percent"].as_f64().unwrap(), 100.0);
}

#[test]
fn gradcheck_reports_every_parameter_tensor() {
    let out = Command::new(bin())
        .args(["gradcheck", "--model", "tcn-velocity", "--seed", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    // a velocity model has 3 blocks (kernel + bias each) and a head (w + b)
    for name in
        ["block.0.k", "block.0.b", "block.1.k", "block.1.b", "block.2.k", "block.2.b", "head.w", "head.b"]
    {
        assert!(stdout.contains(name), "missing {name} in gradcheck output");
    }
}
