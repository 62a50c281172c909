//! Topology, hop distances, and the bone incidence matrix.
//!
//! ```bash
//! cargo run --example skeleton_basics
//! ```

use skelift::skeleton::{
    bone_hop_matrix, default_topology, hop_distance_matrix, incidence_matrix,
};

fn main() -> skelift::Result<()> {
    let topo = default_topology();
    println!(
        "default skeleton: {} joints, {} bones, root = {} ({})",
        topo.joint_count(),
        topo.bone_count(),
        topo.root_index(),
        topo.joint_names()[topo.root_index()]
    );

    let hops = hop_distance_matrix(&topo)?;
    println!("\nhop distances from the pelvis:");
    for (i, name) in topo.joint_names().iter().enumerate() {
        println!("  {name:<15} {}", hops.at(topo.root_index(), i));
    }

    let bone_hops = bone_hop_matrix(&topo)?;
    println!("\nbone line-graph: bone 0 to bone {} = {} hops", topo.bone_count() - 1, bone_hops.at(0, topo.bone_count() - 1));

    let inc = incidence_matrix(&topo);
    println!("\nincidence rows (parent -1, child +1), first three bones:");
    for b in 0..3 {
        let row: Vec<String> = (0..topo.joint_count())
            .map(|j| format!("{:>2}", inc.at2(b, j) as i8))
            .collect();
        println!("  bone {b}: [{}]", row.join(" "));
    }
    Ok(())
}
