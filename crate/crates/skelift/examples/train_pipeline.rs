//! Staged training of the whole pipeline on a small synthetic corpus, then
//! evaluation on the held-out split. Takes about a minute in release mode.
//!
//! ```bash
//! cargo run --release --example train_pipeline
//! ```

use skelift::gcn::GcnHyper;
use skelift::metrics::{evaluate, EvalConfig, EvalPair, SequenceEval};
use skelift::pipeline::{infer, tracks_from_scene, PipelineConfig, PipelineModels};
use skelift::skeleton::{default_topology, SkeletonMatrices};
use skelift::synthgen::{generate_dataset, split, OcclusionModel, SceneConfig};
use skelift::tcn::TcnHyper;
use skelift::train::{
    bins_from_sequences, build_gcn_samples, build_joint_tcn_samples, build_root_samples,
    build_velocity_samples, train_gcn, train_tcn, OptimizerConfig, TcnDataset,
};

fn main() -> skelift::Result<()> {
    let topology = default_topology();
    let mats = SkeletonMatrices::from_topology(&topology)?;

    let base = SceneConfig {
        frame_count: 40,
        occlusion: OcclusionModel::Crossing,
        rng_seed: 5,
        ..SceneConfig::default()
    };
    let scenes = generate_dataset(&base, 24, (2, 3), 5)?;
    let (train_seqs, val_seqs, test_seqs) = split(scenes, (0.7, 0.15, 0.15), 5)?;
    println!(
        "corpus: {} train / {} val / {} test scenes",
        train_seqs.len(),
        val_seqs.len(),
        test_seqs.len()
    );
    let bins = bins_from_sequences(&train_seqs, topology.root_index(), 60)?;
    println!("depth bins: 60 over Z/f in [{:.5}, {:.5}]", bins.lo, bins.hi);

    let opt = |epochs| OptimizerConfig { epochs, seed: 5, ..OptimizerConfig::default() };

    println!("\ntraining gcn ...");
    let hyper = GcnHyper::defaults(&topology).with_widths(vec![48, 48, 48], 96);
    let (gcn, hist) = train_gcn(
        &build_gcn_samples(&train_seqs, &topology)?,
        &build_gcn_samples(&val_seqs, &topology)?,
        &topology,
        hyper,
        &opt(6),
        skelift::gcn::DEFAULT_NOISE_GAIN,
    )?;
    println!("  val loss: {:?}", hist.val_loss.last());

    println!("training joint tcn ...");
    let joint_hyper = TcnHyper::joint_defaults(topology.joint_count(), topology.root_index(), 48);
    let (joint, _) = train_tcn(
        &TcnDataset::Joint {
            train: build_joint_tcn_samples(&train_seqs, &gcn, &mats, joint_hyper.window)?,
            val: build_joint_tcn_samples(&val_seqs, &gcn, &mats, joint_hyper.window)?,
        },
        joint_hyper,
        &opt(6),
    )?;

    println!("training velocity tcn ...");
    let vel_hyper = TcnHyper::velocity_defaults(bins.clone(), 32);
    let (velocity, _) = train_tcn(
        &TcnDataset::Velocity {
            train: build_velocity_samples(&train_seqs, &bins, topology.root_index(), vel_hyper.window)?,
            val: build_velocity_samples(&val_seqs, &bins, topology.root_index(), vel_hyper.window)?,
        },
        vel_hyper,
        &opt(20),
    )?;

    // the depth classifier converges slowest; give it the largest share
    println!("training root tcn ...");
    let root_hyper = TcnHyper::root_defaults(topology.joint_count(), bins, 64);
    let root_opt = OptimizerConfig { epochs: 16, seed: 5, learning_rate: 2e-3, ..OptimizerConfig::default() };
    let (root, _) = train_tcn(
        &TcnDataset::Root {
            train: build_root_samples(&train_seqs, topology.root_index(), root_hyper.window)?,
            val: build_root_samples(&val_seqs, topology.root_index(), root_hyper.window)?,
        },
        root_hyper,
        &root_opt,
    )?;

    println!("\nrunning inference on the test split ...");
    let models = PipelineModels { gcn, joint, velocity, root };
    let mut sequences = Vec::new();
    for (i, scene) in test_seqs.iter().enumerate() {
        let tracks = tracks_from_scene(scene)?;
        let out = infer(&tracks, &models, &mats, &scene.camera, &PipelineConfig::default())?;
        let mut pairs = Vec::new();
        for (track, person) in out.tracks.iter().zip(&scene.persons) {
            for (frame, gt) in track.frames.iter().zip(&person.gt3d_cam) {
                pairs.push(EvalPair {
                    pred_cam: frame.pose_cam.clone(),
                    gt_cam: gt.clone(),
                    root_index: topology.root_index(),
                });
            }
        }
        sequences.push(SequenceEval { name: format!("test_{i}"), pairs });
    }
    let report = evaluate(&sequences, &EvalConfig::default())?;
    println!(
        "test split: mpjpe {:.1} mm, pa-mpjpe {:.1} mm, pck {:.1}%, pck_abs {:.1}%, ap_root {:.1}%",
        report.overall.mpjpe_mm,
        report.overall.pa_mpjpe_mm,
        report.overall.pck_percent,
        report.overall.pck_abs_percent,
        report.overall.ap_root_percent
    );
    Ok(())
}
