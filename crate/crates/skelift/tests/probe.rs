//! Temporary diagnostic probe (not part of the deliverable test suite).
#![allow(dead_code)]

use skelift::gcn::GcnHyper;
use skelift::metrics::{mpjpe, pck_abs};
use skelift::pipeline::{
    infer, tracks_from_scene, FusionMode, PipelineConfig, PipelineModels, PoseSource,
    RootProvenance,
};
use skelift::skeleton::{default_topology, SkeletonMatrices};
use skelift::synthgen::{generate_dataset, split, OcclusionModel, SceneConfig};
use skelift::tcn::TcnHyper;
use skelift::train::*;

const GAIN: f64 = 0.10;

#[test]
#[ignore]
fn probe_occluded_pck() {
    let topology = default_topology();
    let mats = SkeletonMatrices::from_topology(&topology).unwrap();
    let base = SceneConfig {
        frame_count: 40,
        occlusion: OcclusionModel::Crossing,
        noise_gain: GAIN,
        rng_seed: 42,
        ..SceneConfig::default()
    };
    let scenes = generate_dataset(&base, 60, (2, 3), 42).unwrap();
    let (train_seqs, _val, test_seqs) = split(scenes, (0.7, 0.15, 0.15), 42).unwrap();
    let bins = bins_from_sequences(&train_seqs, 0, 60).unwrap();
    let opt = |epochs| OptimizerConfig { epochs, seed: 1, ..OptimizerConfig::default() };
    let stride = 2;
    let sub = |v: Vec<GcnSample>| v.into_iter().step_by(stride).collect::<Vec<_>>();

    let gcn_hyper = GcnHyper::defaults(&topology).with_widths(vec![64, 64, 64], 128);
    let (gcn, _) = train_gcn(
        &sub(build_gcn_samples(&train_seqs, &topology).unwrap()),
        &[],
        &topology,
        gcn_hyper,
        &opt(10),
        GAIN,
    )
    .unwrap();
    let joint_hyper = TcnHyper::joint_defaults(17, 0, 64);
    let (joint, _) = train_tcn(
        &TcnDataset::Joint {
            train: build_joint_tcn_samples(&train_seqs, &gcn, &mats, 9)
                .unwrap()
                .into_iter()
                .step_by(stride)
                .collect(),
            val: vec![],
        },
        joint_hyper,
        &opt(10),
    )
    .unwrap();
    let vel_hyper = TcnHyper::velocity_defaults(bins.clone(), 32);
    let (velocity, _) = train_tcn(
        &TcnDataset::Velocity {
            train: build_velocity_samples(&train_seqs, &bins, 0, 8)
                .unwrap()
                .into_iter()
                .step_by(stride)
                .collect(),
            val: vec![],
        },
        vel_hyper,
        &opt(10),
    )
    .unwrap();
    let root_hyper = TcnHyper::root_defaults(17, bins.clone(), 64);
    let (root, _) = train_tcn(
        &TcnDataset::Root {
            train: build_root_samples(&train_seqs, 0, 9)
                .unwrap()
                .into_iter()
                .step_by(stride)
                .collect(),
            val: vec![],
        },
        root_hyper,
        &opt(10),
    )
    .unwrap();
    let models = PipelineModels { gcn, joint, velocity, root };

    let full_cfg = PipelineConfig::default();
    let base_cfg = PipelineConfig {
        pose_source: PoseSource::Passthrough2d,
        fusion: FusionMode::DepthOnly,
        ..PipelineConfig::default()
    };

    let mut stats: Vec<(String, f64, f64, usize)> = Vec::new();
    let mut full_acc = 0.0;
    let mut base_acc = 0.0;
    let mut count = 0usize;
    let mut full_root_err = 0.0;
    let mut base_root_err = 0.0;
    let mut full_pose_err = 0.0;
    let mut base_pose_err = 0.0;
    let mut by_w: Vec<(f64, f64)> = Vec::new();
    for scene in &test_seqs {
        let tracks = tracks_from_scene(scene).unwrap();
        let full = infer(&tracks, &models, &mats, &scene.camera, &full_cfg).unwrap();
        let base = infer(&tracks, &models, &mats, &scene.camera, &base_cfg).unwrap();
        for ((tf, tb), person) in full.tracks.iter().zip(&base.tracks).zip(&scene.persons) {
            for t in 0..person.occluded.len() {
                if !person.occluded[t] {
                    continue;
                }
                count += 1;
                let gt = &person.gt3d_cam[t];
                let gt_root = gt.joints()[0];
                full_acc += pck_abs(&tf.frames[t].pose_cam, gt, 250.0).unwrap();
                base_acc += pck_abs(&tb.frames[t].pose_cam, gt, 250.0).unwrap();
                let re = |r: [f64; 3]| {
                    (((r[0] - gt_root[0]).powi(2)
                        + (r[1] - gt_root[1]).powi(2)
                        + (r[2] - gt_root[2]).powi(2))
                    .sqrt())
                        * 1000.0
                };
                full_root_err += re(tf.frames[t].root_cam);
                base_root_err += re(tb.frames[t].root_cam);
                let gt_pc = gt.to_person_centric(gt_root);
                full_pose_err += mpjpe(&tf.frames[t].pose_pc, &gt_pc).unwrap();
                base_pose_err += mpjpe(&tb.frames[t].pose_pc, &gt_pc).unwrap();
                if let RootProvenance::Fused { w } = tf.frames[t].provenance {
                    by_w.push((w, re(tf.frames[t].root_cam)));
                }
            }
        }
    }
    let n = count as f64;
    // clean-frame diagnostics
    let mut clean_root_err = 0.0;
    let mut clean_zf_err = 0.0;
    let mut occ_zf_err = 0.0;
    let mut clean_n = 0usize;
    for scene in &test_seqs {
        let tracks = tracks_from_scene(scene).unwrap();
        let full = infer(&tracks, &models, &mats, &scene.camera, &full_cfg).unwrap();
        let f = scene.camera.focal.unwrap();
        for (tf, person) in full.tracks.iter().zip(&scene.persons) {
            for t in 0..person.occluded.len() {
                let gt_root = person.gt3d_cam[t].joints()[0];
                let zf_true = gt_root[2] / f;
                let frame = &tf.frames[t];
                if person.occluded[t] {
                    occ_zf_err += (frame.rel_depth - zf_true).abs();
                } else {
                    clean_n += 1;
                    clean_zf_err += (frame.rel_depth - zf_true).abs();
                    let r = frame.root_cam;
                    clean_root_err += (((r[0] - gt_root[0]).powi(2)
                        + (r[1] - gt_root[1]).powi(2)
                        + (r[2] - gt_root[2]).powi(2))
                    .sqrt())
                        * 1000.0;
                }
            }
        }
    }
    println!(
        "clean frames: {} root err {:.0} mm, zf err {:.6} ({:.1} bins)",
        clean_n,
        clean_root_err / clean_n as f64,
        clean_zf_err / clean_n as f64,
        clean_zf_err / clean_n as f64 / bins.width()
    );
    println!(
        "occluded zf err {:.6} ({:.1} bins), bin width {:.6}",
        occ_zf_err / n,
        occ_zf_err / n / bins.width(),
        bins.width()
    );

    stats.push(("occluded".into(), full_acc / n, base_acc / n, count));
    println!("occluded frames: {count}");
    println!("full PCK_abs {:.1}  base PCK_abs {:.1}", full_acc / n, base_acc / n);
    println!("full root err {:.0} mm  base root err {:.0} mm", full_root_err / n, base_root_err / n);
    println!("full pose mpjpe {:.0} mm  base pose mpjpe {:.0} mm", full_pose_err / n, base_pose_err / n);
    let mut hi = by_w.iter().filter(|(w, _)| *w > 0.5).map(|(_, e)| *e).collect::<Vec<_>>();
    let mut lo = by_w.iter().filter(|(w, _)| *w <= 0.5).map(|(_, e)| *e).collect::<Vec<_>>();
    hi.sort_by(f64::total_cmp);
    lo.sort_by(f64::total_cmp);
    if !hi.is_empty() {
        println!("boundary frames (w>0.5): {} median root err {:.0} mm", hi.len(), hi[hi.len() / 2]);
    }
    if !lo.is_empty() {
        println!("interior frames (w<=0.5): {} median root err {:.0} mm", lo.len(), lo[lo.len() / 2]);
    }
    let _ = stats;
}
