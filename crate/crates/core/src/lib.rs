//! Randomized synthetic indoor scenes for self-supervised 3D pre-training.
//!
//! Objects come from a trigonometric radius formula ([`harmonics`]), random
//! iterated function systems ([`fractal`]) or CAD files ([`meshio`]). They are
//! augmented and stacked into rooms ([`scenegen`]), exported as voxelized
//! multi-view point clouds or ray-cast depth frames ([`raycast`]), and cut
//! into training crops ([`crops`]). [`pipeline`] runs the whole thing as a
//! deterministic parallel batch job and [`analysis`] measures object-set
//! diversity.

pub mod analysis;
pub mod crops;
pub mod fractal;
pub mod geom;
pub mod harmonics;
pub mod meshio;
pub mod pipeline;
pub mod raycast;
pub mod scenegen;
pub mod seed;
pub mod spatial;

pub use geom::{Aabb, RigidPose, Vec3};
pub use harmonics::HarmonicCoefficients;
pub use meshio::{PointCloud, SurfaceMesh};
