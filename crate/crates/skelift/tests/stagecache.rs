//! Temporary stage trainer: trains the acceptance-style models once and
//! caches checkpoints under /tmp for fast fusion diagnostics (not part of
//! the deliverable suite).

use skelift::gcn::GcnHyper;
use skelift::skeleton::{default_topology, SkeletonMatrices};
use skelift::synthgen::{generate_dataset, split, OcclusionModel, SceneConfig};
use skelift::tcn::TcnHyper;
use skelift::train::*;

const GAIN: f64 = 0.25;

#[test]
#[ignore]
fn cache_stage() {
    let dir = std::path::Path::new("/tmp/stage");
    std::fs::create_dir_all(dir).unwrap();
    let topology = default_topology();
    let mats = SkeletonMatrices::from_topology(&topology).unwrap();
    let base = SceneConfig {
        frame_count: 40,
        occlusion: OcclusionModel::Crossing,
        noise_gain: GAIN,
        rng_seed: 42,
        ..SceneConfig::default()
    };
    let scenes = generate_dataset(&base, 200, (2, 3), 42).unwrap();
    let (train_seqs, _val, _test) = split(scenes, (0.7, 0.15, 0.15), 42).unwrap();
    let bins = bins_from_sequences(&train_seqs, 0, 60).unwrap();
    let opt = |epochs| OptimizerConfig { epochs, seed: 1, ..OptimizerConfig::default() };
    let stride = 2;
    let gcn_hyper = GcnHyper::defaults(&topology).with_widths(vec![64, 64, 64], 128);
    let (gcn, _) = train_gcn(
        &build_gcn_samples(&train_seqs, &topology)
            .unwrap()
            .into_iter()
            .step_by(stride)
            .collect::<Vec<_>>(),
        &[],
        &topology,
        gcn_hyper,
        &opt(10),
        GAIN,
    )
    .unwrap();
    skelift::io::save_gcn_checkpoint(&gcn, &dir.join("gcn.json")).unwrap();

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
        &opt(12),
    )
    .unwrap();
    skelift::io::save_tcn_checkpoint(&joint, &dir.join("joint.json")).unwrap();

    let vel_hyper = TcnHyper::velocity_defaults(bins.clone(), 32);
    let (velocity, _) = train_tcn(
        &TcnDataset::Velocity {
            train: build_velocity_samples(&train_seqs, &bins, 0, 8).unwrap(),
            val: vec![],
        },
        vel_hyper,
        &opt(15),
    )
    .unwrap();
    skelift::io::save_tcn_checkpoint(&velocity, &dir.join("velocity.json")).unwrap();

    let root_hyper = TcnHyper::root_defaults(17, bins, 96);
    let (root, _) = train_tcn(
        &TcnDataset::Root {
            train: build_root_samples(&train_seqs, 0, 9).unwrap(),
            val: vec![],
        },
        root_hyper,
        &opt(14),
    )
    .unwrap();
    skelift::io::save_tcn_checkpoint(&root, &dir.join("root.json")).unwrap();
    println!("stage cached");
}

#[test]
#[ignore]
fn retrain_velocity_on_estimates() {
    let dir = std::path::Path::new("/tmp/stage");
    let root =
        skelift::io::load_tcn_checkpoint(&dir.join("root.json"), skelift::tcn::TcnKind::Root)
            .unwrap();
    let bins = root.bins().unwrap().clone();
    let base = SceneConfig {
        frame_count: 40,
        occlusion: OcclusionModel::Crossing,
        noise_gain: GAIN,
        rng_seed: 42,
        ..SceneConfig::default()
    };
    let scenes = generate_dataset(&base, 200, (2, 3), 42).unwrap();
    let (train_seqs, _val, _test) = split(scenes, (0.7, 0.15, 0.15), 42).unwrap();
    let vel_hyper = TcnHyper::velocity_defaults(bins, 32);
    let samples = build_velocity_samples_from_estimates(&train_seqs, &root, 0, 8).unwrap();
    println!("velocity samples: {}", samples.len());
    let (velocity, hist) = train_tcn(
        &TcnDataset::Velocity { train: samples, val: vec![] },
        vel_hyper,
        &OptimizerConfig { epochs: 15, seed: 1, ..OptimizerConfig::default() },
    )
    .unwrap();
    println!("velocity losses: first {:?} last {:?}", hist.train_loss.first(), hist.train_loss.last());
    skelift::io::save_tcn_checkpoint(&velocity, &dir.join("velocity.json")).unwrap();
}
