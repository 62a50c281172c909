//! The inference pipeline step by step on one crossing scene, with root
//! provenance per frame. Models are trained briefly so the numbers are
//! meaningful without taking minutes.
//!
//! ```bash
//! cargo run --release --example run_inference
//! ```

use skelift::gcn::GcnHyper;
use skelift::pipeline::{infer, tracks_from_scene, PipelineConfig, PipelineModels, RootProvenance};
use skelift::skeleton::{default_topology, SkeletonMatrices};
use skelift::synthgen::{generate_dataset, generate_scene, OcclusionModel, SceneConfig};
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
        rng_seed: 3,
        ..SceneConfig::default()
    };

    // brief staged training; the depth classifier needs the most updates
    let train_seqs = generate_dataset(&base, 24, (2, 2), 3)?;
    let bins = bins_from_sequences(&train_seqs, topology.root_index(), 60)?;
    let opt = OptimizerConfig { epochs: 5, seed: 3, ..OptimizerConfig::default() };
    let (gcn, _) = train_gcn(
        &build_gcn_samples(&train_seqs, &topology)?,
        &[],
        &topology,
        GcnHyper::defaults(&topology).with_widths(vec![32, 32], 64),
        &opt,
        skelift::gcn::DEFAULT_NOISE_GAIN,
    )?;
    let joint_hyper = TcnHyper::joint_defaults(17, 0, 32);
    let (joint, _) = train_tcn(
        &TcnDataset::Joint {
            train: build_joint_tcn_samples(&train_seqs, &gcn, &mats, joint_hyper.window)?,
            val: vec![],
        },
        joint_hyper,
        &opt,
    )?;
    let vel_hyper = TcnHyper::velocity_defaults(bins.clone(), 16);
    let (velocity, _) = train_tcn(
        &TcnDataset::Velocity {
            train: build_velocity_samples(&train_seqs, &bins, 0, vel_hyper.window)?,
            val: vec![],
        },
        vel_hyper,
        &OptimizerConfig { epochs: 20, seed: 3, ..OptimizerConfig::default() },
    )?;
    let root_hyper = TcnHyper::root_defaults(17, bins, 48);
    let root_window = root_hyper.window;
    let (root, _) = train_tcn(
        &TcnDataset::Root {
            train: build_root_samples(&train_seqs, 0, root_window)?,
            val: vec![],
        },
        root_hyper,
        &OptimizerConfig { epochs: 14, seed: 3, learning_rate: 2e-3, ..OptimizerConfig::default() },
    )?;
    let models = PipelineModels { gcn, joint, velocity, root };

    // a fresh crossing scene the models never saw
    let scene = generate_scene(&SceneConfig { rng_seed: 99, ..base })?;
    let tracks = tracks_from_scene(&scene)?;
    let output = infer(&tracks, &models, &mats, &scene.camera, &PipelineConfig::default())?;

    for (track, person) in output.tracks.iter().zip(&scene.persons) {
        println!("person {}:", track.person_id);
        for frame in track.frames.iter() {
            let gt_root = person.gt3d_cam[frame.t].joints()[0];
            let err_mm = (((frame.root_cam[0] - gt_root[0]).powi(2)
                + (frame.root_cam[1] - gt_root[1]).powi(2)
                + (frame.root_cam[2] - gt_root[2]).powi(2))
            .sqrt())
                * 1000.0;
            let tag = match frame.provenance {
                RootProvenance::DepthPath => "depth".to_string(),
                RootProvenance::VelocityPath => "velocity".to_string(),
                RootProvenance::Fused { w } => format!("fused w={w:.3}"),
            };
            if frame.t % 5 == 0 || frame.occluded {
                println!(
                    "  t={:2} root=({:+.2}, {:+.2}, {:.2}) m  Z/f={:.5}  err={err_mm:6.1} mm  occluded={}  [{tag}]",
                    frame.t,
                    frame.root_cam[0],
                    frame.root_cam[1],
                    frame.root_cam[2],
                    frame.rel_depth,
                    frame.occluded,
                );
            }
        }
    }
    Ok(())
}
