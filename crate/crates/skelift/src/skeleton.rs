//! Skeleton topology: joints, directed bones, hop-distance matrices, and the
//! bone incidence matrix consumed by the graph networks.

use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{Error, Result};

/// A directed bone from parent joint to child joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bone {
    pub parent: usize,
    pub child: usize,
}

/// Immutable skeleton description. The bone set must form a tree over the
/// joints so that hop distances are finite and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonTopology {
    joint_names: Vec<String>,
    bones: Vec<Bone>,
    root_index: usize,
}

impl SkeletonTopology {
    pub fn new(joint_names: Vec<String>, bones: Vec<(usize, usize)>, root_index: usize) -> Result<Self> {
        let n = joint_names.len();
        if n == 0 {
            return Err(Error::Topology("no joints".into()));
        }
        if root_index >= n {
            return Err(Error::Topology(format!(
                "root index {root_index} out of range for {n} joints"
            )));
        }
        let bones: Vec<Bone> = bones.into_iter().map(|(parent, child)| Bone { parent, child }).collect();
        for (i, b) in bones.iter().enumerate() {
            if b.parent >= n || b.child >= n {
                return Err(Error::Topology(format!(
                    "bone {i} ({}, {}) references a joint outside 0..{n}",
                    b.parent, b.child
                )));
            }
            if b.parent == b.child {
                return Err(Error::Topology(format!("bone {i} connects joint {} to itself", b.parent)));
            }
        }
        if bones.len() + 1 != n {
            return Err(Error::Topology(format!(
                "{} bones over {n} joints cannot form a tree",
                bones.len()
            )));
        }
        let topo = Self { joint_names, bones, root_index };
        // Tree check: n-1 edges + connectivity implies acyclicity.
        let dist = bfs_distances(&topo.undirected_adjacency(), 0);
        if dist.iter().any(|d| d.is_none()) {
            return Err(Error::Topology("bone graph is disconnected".into()));
        }
        Ok(topo)
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn bone_count(&self) -> usize {
        self.bones.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    pub fn root_index(&self) -> usize {
        self.root_index
    }

    fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.joint_count()];
        for b in &self.bones {
            adj[b.parent].push(b.child);
            adj[b.child].push(b.parent);
        }
        adj
    }

    /// Line-graph adjacency: bones are adjacent iff they share a joint.
    fn bone_adjacency(&self) -> Vec<Vec<usize>> {
        let m = self.bone_count();
        let mut adj = vec![Vec::new(); m];
        for i in 0..m {
            for j in (i + 1)..m {
                let (a, b) = (self.bones[i], self.bones[j]);
                let shares = a.parent == b.parent
                    || a.parent == b.child
                    || a.child == b.parent
                    || a.child == b.child;
                if shares {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        adj
    }

    /// Serializable file form, format_version 1.
    pub fn to_file(&self) -> TopologyFile {
        TopologyFile {
            format_version: 1,
            joints: self.joint_names.clone(),
            bones: self.bones.iter().map(|b| [b.parent, b.child]).collect(),
            root: self.root_index,
        }
    }

    pub fn from_file(file: &TopologyFile) -> Result<Self> {
        if file.format_version != 1 {
            return Err(Error::Validation(format!(
                "unsupported topology format_version {}",
                file.format_version
            )));
        }
        Self::new(
            file.joints.clone(),
            file.bones.iter().map(|b| (b[0], b[1])).collect(),
            file.root,
        )
    }
}

/// Versioned JSON document for skeleton topologies.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TopologyFile {
    pub format_version: u32,
    pub joints: Vec<String>,
    pub bones: Vec<[usize; 2]>,
    pub root: usize,
}

/// Pairwise hop counts over a vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct HopMatrix {
    order: Vec<Vec<u32>>,
}

impl HopMatrix {
    pub fn size(&self) -> usize {
        self.order.len()
    }

    pub fn at(&self, i: usize, j: usize) -> u32 {
        self.order[i][j]
    }
}

fn bfs_distances(adj: &[Vec<usize>], start: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    let mut queue = std::collections::VecDeque::new();
    dist[start] = Some(0);
    queue.push_back(start);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("queued vertices have distances");
        for &v in &adj[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

fn all_pairs_hops(adj: &[Vec<usize>]) -> Result<HopMatrix> {
    let n = adj.len();
    let mut order = vec![vec![0u32; n]; n];
    for (i, row) in order.iter_mut().enumerate() {
        let dist = bfs_distances(adj, i);
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = dist[j].ok_or_else(|| Error::Topology("graph is disconnected".into()))?;
        }
    }
    Ok(HopMatrix { order })
}

/// Hop distance between every pair of joints along the skeleton tree.
pub fn hop_distance_matrix(topology: &SkeletonTopology) -> Result<HopMatrix> {
    all_pairs_hops(&topology.undirected_adjacency())
}

/// Hop distance between bones on the line graph (bones adjacent iff they
/// share a joint).
pub fn bone_hop_matrix(topology: &SkeletonTopology) -> Result<HopMatrix> {
    all_pairs_hops(&topology.bone_adjacency())
}

/// Bone incidence matrix of shape `[bone_count, joint_count]`: row b holds
/// -1 at the bone's parent joint and +1 at its child joint.
pub fn incidence_matrix(topology: &SkeletonTopology) -> Tensor {
    let (m, n) = (topology.bone_count(), topology.joint_count());
    let mut inc = Tensor::zeros(vec![m, n]);
    for (b, bone) in topology.bones().iter().enumerate() {
        inc.set2(b, bone.parent, -1.0);
        inc.set2(b, bone.child, 1.0);
    }
    inc
}

/// The 17-joint skeleton shipped with the crate (pelvis-rooted, 16 bones).
pub fn default_topology() -> SkeletonTopology {
    let file: TopologyFile =
        serde_json::from_str(include_str!("../data/topology17.json")).expect("bundled topology parses");
    SkeletonTopology::from_file(&file).expect("bundled topology is a valid tree")
}

/// Everything the graph networks need from a topology, precomputed once.
#[derive(Debug, Clone)]
pub struct SkeletonMatrices {
    pub joint_hops: HopMatrix,
    pub bone_hops: HopMatrix,
    pub incidence: Tensor,
    pub joint_count: usize,
    pub bone_count: usize,
    pub root_index: usize,
}

impl SkeletonMatrices {
    pub fn from_topology(topology: &SkeletonTopology) -> Result<Self> {
        Ok(Self {
            joint_hops: hop_distance_matrix(topology)?,
            bone_hops: bone_hop_matrix(topology)?,
            incidence: incidence_matrix(topology),
            joint_count: topology.joint_count(),
            bone_count: topology.bone_count(),
            root_index: topology.root_index(),
        })
    }
}
