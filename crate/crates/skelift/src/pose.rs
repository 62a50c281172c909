//! Shared 3D pose type, tagged with its coordinate frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which origin a 3D pose is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoordFrame {
    /// Root joint at the origin.
    PersonCentric,
    /// Camera coordinate system.
    CameraCentric,
}

/// Per-joint 3D coordinates plus the frame they live in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pose3D {
    joints: Vec<[f64; 3]>,
    frame: CoordFrame,
}

impl Pose3D {
    pub fn person_centric(joints: Vec<[f64; 3]>) -> Self {
        Self { joints, frame: CoordFrame::PersonCentric }
    }

    pub fn camera_centric(joints: Vec<[f64; 3]>) -> Self {
        Self { joints, frame: CoordFrame::CameraCentric }
    }

    pub fn joints(&self) -> &[[f64; 3]] {
        &self.joints
    }

    pub fn frame(&self) -> CoordFrame {
        self.frame
    }

    pub fn joint_count(&self) -> usize {
        self.joints.len()
    }

    pub fn expect_frame(&self, frame: CoordFrame) -> Result<()> {
        if self.frame != frame {
            return Err(Error::Validation(format!(
                "expected {frame:?} pose, got {:?}",
                self.frame
            )));
        }
        Ok(())
    }

    pub fn expect_same_layout(&self, other: &Pose3D) -> Result<()> {
        if self.joint_count() != other.joint_count() {
            return Err(Error::Validation(format!(
                "joint count mismatch: {} vs {}",
                self.joint_count(),
                other.joint_count()
            )));
        }
        if self.frame != other.frame {
            return Err(Error::Validation(format!(
                "coordinate frame mismatch: {:?} vs {:?}",
                self.frame, other.frame
            )));
        }
        Ok(())
    }

    /// Subtracts the given root position: camera-centric -> person-centric.
    pub fn to_person_centric(&self, root: [f64; 3]) -> Pose3D {
        let joints = self
            .joints
            .iter()
            .map(|j| [j[0] - root[0], j[1] - root[1], j[2] - root[2]])
            .collect();
        Pose3D::person_centric(joints)
    }

    /// Adds the given root position: person-centric -> camera-centric.
    pub fn to_camera_centric(&self, root: [f64; 3]) -> Pose3D {
        let joints = self
            .joints
            .iter()
            .map(|j| [j[0] + root[0], j[1] + root[1], j[2] + root[2]])
            .collect();
        Pose3D::camera_centric(joints)
    }
}
