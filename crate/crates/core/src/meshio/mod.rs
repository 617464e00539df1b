//! Triangle meshes and point clouds, their file formats, unit-sphere
//! normalization and area-weighted surface sampling.

mod obj;
mod off;
pub mod ply;

use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use thiserror::Error;

use crate::geom::{Aabb, Vec3};

pub use obj::{parse_obj, write_obj};
pub use off::parse_off;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("geometry is empty")]
    Empty,
    #[error("all points coincide; geometry has zero extent")]
    ZeroExtent,
    #[error("mesh has zero surface area")]
    ZeroArea,
    #[error("triangle {triangle} references vertex {index}, mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        count: usize,
    },
    #[error("triangle {0} repeats a vertex index")]
    DegenerateTriangle(usize),
    #[error("non-finite coordinate at point {0}")]
    NonFinite(usize),
    #[error("attribute `{name}` has {len} entries for {points} points")]
    AttributeLength {
        name: &'static str,
        len: usize,
        points: usize,
    },
}

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl MeshIoError {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        MeshIoError::Parse {
            line,
            message: message.into(),
        }
    }
}

/// Indexed triangle mesh tagged with the id of the object it represents.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub object_id: i32,
}

impl SurfaceMesh {
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[u32; 3]>,
        object_id: i32,
    ) -> Result<Self, GeometryError> {
        let mesh = SurfaceMesh {
            vertices,
            triangles,
            object_id,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let count = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &index in tri {
                if index as usize >= count {
                    return Err(GeometryError::IndexOutOfRange {
                        triangle: t,
                        index,
                        count,
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(GeometryError::DegenerateTriangle(t));
            }
        }
        if let Some(i) = self.vertices.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite(i));
        }
        Ok(())
    }

    pub fn with_object_id(mut self, id: i32) -> Self {
        self.object_id = id;
        self
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.vertices[a as usize],
            self.vertices[b as usize],
            self.vertices[c as usize],
        ]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn map_vertices(&mut self, f: impl Fn(&Vec3) -> Vec3) {
        for v in &mut self.vertices {
            *v = f(v);
        }
    }

    /// Appends `other`'s triangles; the object id of `self` is kept.
    pub fn append(&mut self, other: &SurfaceMesh) {
        let base = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }
}

/// Point positions in meters with optional per-point colors and object ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub positions: Vec<Vec3>,
    pub colors: Option<Vec<[f32; 3]>>,
    pub object_ids: Option<Vec<i32>>,
}

impl PointCloud {
    pub fn from_positions(positions: Vec<Vec3>) -> Self {
        PointCloud {
            positions,
            colors: None,
            object_ids: None,
        }
    }

    pub fn with_object_id(positions: Vec<Vec3>, id: i32) -> Self {
        let n = positions.len();
        PointCloud {
            positions,
            colors: None,
            object_ids: Some(vec![id; n]),
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let n = self.positions.len();
        if let Some(i) = self.positions.iter().position(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::NonFinite(i));
        }
        if let Some(c) = &self.colors {
            if c.len() != n {
                return Err(GeometryError::AttributeLength {
                    name: "colors",
                    len: c.len(),
                    points: n,
                });
            }
        }
        if let Some(ids) = &self.object_ids {
            if ids.len() != n {
                return Err(GeometryError::AttributeLength {
                    name: "object_ids",
                    len: ids.len(),
                    points: n,
                });
            }
        }
        Ok(())
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.positions.iter())
    }

    /// Keeps the points at `indices`, in that order, with their attributes.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            positions: indices.iter().map(|&i| self.positions[i]).collect(),
            colors: self
                .colors
                .as_ref()
                .map(|c| indices.iter().map(|&i| c[i]).collect()),
            object_ids: self
                .object_ids
                .as_ref()
                .map(|ids| indices.iter().map(|&i| ids[i]).collect()),
        }
    }

    /// Concatenates clouds. An attribute survives only if every part has it.
    pub fn concat(parts: &[PointCloud]) -> PointCloud {
        let all_colors = parts.iter().all(|p| p.colors.is_some());
        let all_ids = parts.iter().all(|p| p.object_ids.is_some());
        let mut out = PointCloud::default();
        if all_colors {
            out.colors = Some(Vec::new());
        }
        if all_ids {
            out.object_ids = Some(Vec::new());
        }
        for p in parts {
            out.positions.extend_from_slice(&p.positions);
            if let (Some(dst), Some(src)) = (out.colors.as_mut(), p.colors.as_ref()) {
                dst.extend_from_slice(src);
            }
            if let (Some(dst), Some(src)) = (out.object_ids.as_mut(), p.object_ids.as_ref()) {
                dst.extend_from_slice(src);
            }
        }
        out
    }

    pub fn map_positions(&mut self, f: impl Fn(&Vec3) -> Vec3) {
        for p in &mut self.positions {
            *p = f(p);
        }
    }
}

/// Anything with a mutable list of positions.
pub trait Positions {
    fn positions(&self) -> &[Vec3];
    fn positions_mut(&mut self) -> &mut [Vec3];
}

impl Positions for SurfaceMesh {
    fn positions(&self) -> &[Vec3] {
        &self.vertices
    }
    fn positions_mut(&mut self) -> &mut [Vec3] {
        &mut self.vertices
    }
}

impl Positions for PointCloud {
    fn positions(&self) -> &[Vec3] {
        &self.positions
    }
    fn positions_mut(&mut self) -> &mut [Vec3] {
        &mut self.positions
    }
}

/// The similarity applied by [`normalize_unit_sphere`]: `p -> (p - center) * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub center: Vec3,
    pub scale: f64,
}

/// Centers geometry on its bounding-box center and scales it so the farthest
/// point lies on the unit sphere.
pub fn normalize_unit_sphere<T: Positions>(mut geometry: T) -> Result<T, GeometryError> {
    normalize_in_place(&mut geometry)?;
    Ok(geometry)
}

pub fn normalize_in_place<T: Positions + ?Sized>(
    geometry: &mut T,
) -> Result<Normalization, GeometryError> {
    let pts = geometry.positions();
    if pts.is_empty() {
        return Err(GeometryError::Empty);
    }
    let center = Aabb::from_points(pts.iter()).center();
    let radius = pts
        .iter()
        .map(|p| (p - center).norm())
        .fold(0.0_f64, f64::max);
    if !(radius > f64::MIN_POSITIVE) || !radius.is_finite() {
        return Err(GeometryError::ZeroExtent);
    }
    let scale = 1.0 / radius;
    for p in geometry.positions_mut() {
        *p = (*p - center) * scale;
    }
    Ok(Normalization { center, scale })
}

/// Draws `n` points uniformly over the surface: triangles by area, then a
/// uniform point inside via the square-root barycentric map.
pub fn sample_surface<R: Rng + ?Sized>(
    mesh: &SurfaceMesh,
    n: usize,
    rng: &mut R,
) -> Result<PointCloud, GeometryError> {
    let areas: Vec<f64> = (0..mesh.triangles.len())
        .map(|t| mesh.triangle_area(t))
        .collect();
    let total: f64 = areas.iter().sum();
    if !(total > 0.0) {
        return Err(GeometryError::ZeroArea);
    }
    let pick = WeightedIndex::new(&areas).map_err(|_| GeometryError::ZeroArea)?;
    let positions = (0..n)
        .map(|_| {
            let t = pick.sample(rng);
            let [a, b, c] = mesh.corners(t);
            let r1: f64 = rng.random();
            let r2: f64 = rng.random();
            point_in_triangle(&a, &b, &c, r1, r2)
        })
        .collect();
    Ok(PointCloud::with_object_id(positions, mesh.object_id))
}

/// Maps `(r1, r2)` uniform on the unit square to a uniform point of triangle `abc`.
pub fn point_in_triangle(a: &Vec3, b: &Vec3, c: &Vec3, r1: f64, r2: f64) -> Vec3 {
    let s = r1.sqrt();
    a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2)
}

/// Loads an OFF or OBJ mesh, choosing the parser by file extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<SurfaceMesh, MeshIoError> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let text = std::fs::read_to_string(path)?;
    match ext.as_str() {
        "off" => parse_off(&text),
        "obj" => parse_obj(&text),
        other => Err(MeshIoError::UnsupportedFormat(other.to_string())),
    }
}

/// Splits a polygon into a triangle fan rooted at its first corner, dropping
/// fan triangles that repeat an index.
pub(crate) fn fan_triangulate(poly: &[u32], out: &mut Vec<[u32; 3]>) {
    for k in 1..poly.len().saturating_sub(1) {
        let tri = [poly[0], poly[k], poly[k + 1]];
        if tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] {
            out.push(tri);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_cube_points() -> PointCloud {
        let mut pts = Vec::new();
        for &x in &[0.0, 1.0] {
            for &y in &[0.0, 1.0] {
                for &z in &[0.0, 1.0] {
                    pts.push(Vec3::new(x, y, z));
                }
            }
        }
        PointCloud::from_positions(pts)
    }

    #[test]
    fn normalize_unit_cube() {
        let mut pc = unit_cube_points();
        let n = normalize_in_place(&mut pc).unwrap();
        assert_eq!(n.center, Vec3::new(0.5, 0.5, 0.5));
        assert!((n.scale - 1.0 / (3f64.sqrt() / 2.0)).abs() < 1e-12);
        for p in &pc.positions {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn normalize_rejects_coincident_points() {
        let pc = PointCloud::from_positions(vec![Vec3::new(1.0, 2.0, 3.0); 5]);
        assert_eq!(normalize_unit_sphere(pc).unwrap_err(), GeometryError::ZeroExtent);
        let empty = PointCloud::default();
        assert_eq!(normalize_unit_sphere(empty).unwrap_err(), GeometryError::Empty);
    }

    #[test]
    fn normalize_is_idempotent() {
        let once = normalize_unit_sphere(unit_cube_points()).unwrap();
        let twice = normalize_unit_sphere(once.clone()).unwrap();
        for (a, b) in once.positions.iter().zip(&twice.positions) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn mesh_validation() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        assert!(SurfaceMesh::new(v.clone(), vec![[0, 1, 2]], 0).is_ok());
        assert_eq!(
            SurfaceMesh::new(v.clone(), vec![[0, 1, 3]], 0).unwrap_err(),
            GeometryError::IndexOutOfRange {
                triangle: 0,
                index: 3,
                count: 3
            }
        );
        assert_eq!(
            SurfaceMesh::new(v, vec![[0, 0, 1]], 0).unwrap_err(),
            GeometryError::DegenerateTriangle(0)
        );
    }

    #[test]
    fn single_triangle_samples_stay_inside() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(2.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 1.0, 0.0);
        let mesh = SurfaceMesh::new(vec![a, b, c], vec![[0, 1, 2]], 7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pc = sample_surface(&mesh, 2000, &mut rng).unwrap();
        assert_eq!(pc.object_ids.as_ref().unwrap()[0], 7);
        for p in &pc.positions {
            // barycentric coordinates w.r.t. a, b, c
            let wb = p.x / 2.0;
            let wc = p.y;
            let wa = 1.0 - wb - wc;
            assert!(wa >= -1e-12 && wb >= -1e-12 && wc >= -1e-12);
            assert_eq!(p.z, 0.0);
        }
    }

    #[test]
    fn zero_area_mesh_rejected() {
        let v = vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        let mesh = SurfaceMesh::new(v, vec![[0, 1, 2]], 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            sample_surface(&mesh, 10, &mut rng).unwrap_err(),
            GeometryError::ZeroArea
        );
    }

    #[test]
    fn fan_drops_repeated_indices() {
        let mut out = Vec::new();
        fan_triangulate(&[0, 1, 2, 3], &mut out);
        assert_eq!(out, vec![[0, 1, 2], [0, 2, 3]]);
        out.clear();
        fan_triangulate(&[0, 1, 1, 2], &mut out);
        assert_eq!(out, vec![[0, 1, 2]]);
    }
}
