//! Single-view depth frames: a BVH over the scene triangles, a pinhole
//! camera, randomized view sampling and PNG/JSON frame files.

mod bvh;
mod camera;
pub mod depth_io;
mod render;
mod view;

use thiserror::Error;

pub use bvh::{build_accelerator, intersect_triangle, Bvh, Hit, Ray, T_MIN};
pub use camera::{look_along, yaw_pitch_pose, CameraIntrinsics};
pub use render::{render_depth, render_pixels, reprojection_error, DepthFrame};
pub use view::{
    evaluate_view, projected_window, sample_pose, sample_valid_view, visible_upper_bound, PixelWindow, ViewConfig, ViewSample,
};

#[derive(Debug, Error)]
pub enum RaycastError {
    #[error("scene has no triangles")]
    EmptyScene,
    #[error("invalid intrinsics: {0}")]
    Intrinsics(String),
    #[error("scene has {have} objects, a view needs {need}")]
    TooFewObjects { have: usize, need: usize },
    #[error("no valid view after {attempts} poses")]
    NoValidView { attempts: usize },
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    PngDecode(#[from] png::DecodingError),
    #[error(transparent)]
    PngEncode(#[from] png::EncodingError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
