//! Synthetic scene generation: kinematic motion, weak-perspective rendering,
//! occlusion simulation, and the sequence JSONL format.
//!
//! ```bash
//! cargo run --example generate_dataset
//! ```

use skelift::fusion::occlusion_intervals;
use skelift::io::{save_sequence, SequenceFile};
use skelift::skeleton::default_topology;
use skelift::synthgen::{generate_scene, OcclusionModel, SceneConfig};

fn main() -> skelift::Result<()> {
    let config = SceneConfig {
        person_count: 2,
        frame_count: 60,
        occlusion: OcclusionModel::Crossing,
        rng_seed: 11,
        ..SceneConfig::default()
    };
    let scene = generate_scene(&config)?;

    for person in &scene.persons {
        let root = person.gt3d_cam[0].joints()[0];
        let occluded_frames = person.occluded.iter().filter(|&&o| o).count();
        println!(
            "person {}: starts at ({:.2}, {:.2}, {:.2}) m, {} of {} frames pose-occluded",
            person.person_id,
            root[0],
            root[1],
            root[2],
            occluded_frames,
            person.occluded.len()
        );
        for iv in occlusion_intervals(&person.occluded) {
            println!("  occlusion interval: frames {}..={}", iv.start, iv.end);
        }
    }

    let dir = std::env::temp_dir().join("skelift_example_dataset");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("crossing_scene.jsonl");
    let topo = default_topology();
    save_sequence(&SequenceFile::from_synthetic(&scene, &topo), &path)?;
    println!("\nwrote {}", path.display());

    let first_line_conf = &scene.persons[0].obs[0];
    println!(
        "frame 0, person 0: first joint at ({:.1}, {:.1}) px with confidence {:.2}",
        first_line_conf.joints2d()[0][0],
        first_line_conf.joints2d()[0][1],
        first_line_conf.joint_conf()[0]
    );
    Ok(())
}
