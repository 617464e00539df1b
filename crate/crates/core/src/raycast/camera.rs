use serde::{Deserialize, Serialize};

use super::RaycastError;
use crate::geom::{Mat3, RigidPose, Vec3};

/// Pinhole intrinsics. The camera frame has x to the right, y down and z
/// forward; pixel `(u, v)` covers `[u, u+1) x [v, v+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraIntrinsics {
    /// ScanNet-like 640x480 pinhole.
    fn default() -> Self {
        CameraIntrinsics {
            fx: 577.5,
            fy: 577.5,
            cx: 319.5,
            cy: 239.5,
            width: 640,
            height: 480,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), RaycastError> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.width > 0
            && self.height > 0
            && (0.0..self.width as f64).contains(&self.cx)
            && (0.0..self.height as f64).contains(&self.cy);
        if ok {
            Ok(())
        } else {
            Err(RaycastError::Intrinsics(format!("{self:?}")))
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Camera-frame direction through the center of pixel `(u, v)`, scaled
    /// so its z component is 1. A hit at ray parameter `t` has depth `t`.
    pub fn pixel_ray(&self, u: u32, v: u32) -> Vec3 {
        Vec3::new(
            (u as f64 + 0.5 - self.cx) / self.fx,
            (v as f64 + 0.5 - self.cy) / self.fy,
            1.0,
        )
    }

    /// Camera-frame point seen at pixel `(u, v)` with depth `depth`.
    pub fn unproject(&self, u: u32, v: u32, depth: f64) -> Vec3 {
        self.pixel_ray(u, v) * depth
    }

    /// Continuous image coordinates of a camera-frame point in front of the camera.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        (p.z > 0.0).then(|| (self.fx * p.x / p.z + self.cx - 0.5, self.fy * p.y / p.z + self.cy - 0.5))
    }

    /// The `[fx, fy, cx, cy]` quadruple stored in sidecar files.
    pub fn as_array(&self) -> [f64; 4] {
        [self.fx, self.fy, self.cx, self.cy]
    }
}

/// World-from-camera pose of a camera at `eye` looking along `forward`,
/// with `up` fixing the roll. `forward` must not be parallel to `up`.
pub fn look_along(eye: Vec3, forward: Vec3, up: Vec3) -> RigidPose {
    let z = forward.normalize();
    let x = z.cross(&up).normalize();
    let y = z.cross(&x);
    RigidPose {
        rotation: Mat3::from_columns(&[x, y, z]),
        translation: eye,
    }
}

/// Camera at `eye` turned by `yaw` about world +Z (0 looks along +X) and
/// tilted by `pitch` (positive looks up). Radians.
pub fn yaw_pitch_pose(eye: Vec3, yaw: f64, pitch: f64) -> RigidPose {
    let forward = Vec3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin());
    look_along(eye, forward, Vec3::z())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        CameraIntrinsics::default().validate().unwrap();
        let bad = CameraIntrinsics {
            cx: 640.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn project_inverts_unproject() {
        let k = CameraIntrinsics::default();
        for &(u, v) in &[(0u32, 0u32), (319, 239), (639, 479), (17, 400)] {
            let p = k.unproject(u, v, 2.7);
            let (pu, pv) = k.project(&p).unwrap();
            assert!((pu - u as f64).abs() < 1e-9 && (pv - v as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn look_along_axes() {
        let pose = look_along(Vec3::new(1.0, 2.0, 1.5), Vec3::x(), Vec3::z());
        assert!(pose.is_rigid(1e-12));
        // camera right is world -Y, camera down is world -Z
        assert!((pose.transform_vector(&Vec3::x()) - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-12);
        assert!((pose.transform_vector(&Vec3::y()) - Vec3::new(0.0, 0.0, -1.0)).norm() < 1e-12);
        let same = yaw_pitch_pose(Vec3::new(1.0, 2.0, 1.5), 0.0, 0.0);
        assert!((same.rotation - pose.rotation).amax() < 1e-12);
    }

    #[test]
    fn pitch_up_raises_forward() {
        let pose = yaw_pitch_pose(Vec3::zeros(), 1.0, 0.2);
        let f = pose.transform_vector(&Vec3::z());
        assert!((f.z - 0.2f64.sin()).abs() < 1e-12);
        assert!(pose.is_rigid(1e-12));
    }
}
