//! How detection confidence shapes the directed adjacency: high-confidence
//! joints broadcast, low-confidence joints are muted, and in-degree
//! normalization makes every column a convex combination.
//!
//! ```bash
//! cargo run --example adjacency_weighting
//! ```

use skelift::gcn::{build_joint_adjacency, normalize_in_degree};
use skelift::skeleton::{hop_distance_matrix, SkeletonTopology};

fn print_matrix(label: &str, m: &skelift::diffcore::Tensor) {
    println!("{label}:");
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format!("{:6.3}", m.at2(i, j))).collect();
        println!("  [{}]", row.join(" "));
    }
}

fn main() -> skelift::Result<()> {
    // a 3-joint chain 0 - 1 - 2
    let topo = SkeletonTopology::new(
        vec!["hip".into(), "knee".into(), "ankle".into()],
        vec![(0, 1), (1, 2)],
        0,
    )?;
    let hops = hop_distance_matrix(&topo)?;

    let conf = [1.0, 0.5, 0.8];
    println!("joint confidences: {conf:?}\n");

    let raw = build_joint_adjacency(&conf, &hops)?;
    print_matrix("raw adjacency (row i = messages sent by joint i)", raw.matrix());

    let norm = normalize_in_degree(raw)?;
    print_matrix("\nafter in-degree normalization (columns sum to 1)", norm.matrix());

    // a fully occluded joint stops talking
    let muted = normalize_in_degree(build_joint_adjacency(&[1.0, 0.0, 0.8], &hops)?)?;
    print_matrix("\nwith joint 1 at confidence 0 (its row vanishes)", muted.matrix());
    Ok(())
}
