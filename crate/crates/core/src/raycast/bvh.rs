use crate::geom::{Aabb, Vec3};
use crate::meshio::SurfaceMesh;

use super::RaycastError;

/// Hits closer than this to the ray origin are ignored.
pub const T_MIN: f64 = 1e-9;
const LEAF_SIZE: usize = 2;
/// Leaves up to this size are kept when splitting them would not pay off.
const MAX_LEAF: usize = 8;
const BINS: usize = 16;
/// Cost of one node visit relative to one triangle test.
const TRAVERSAL_COST: f64 = 1.0;
/// Below this depth nodes are split by binned surface area; deeper nodes
/// fall back to median splits, which keeps the tree depth bounded.
const SAH_MAX_DEPTH: usize = 40;
const STACK_SIZE: usize = 96;
/// Node boxes are padded so rounding in the slab test never culls a triangle
/// that the intersection routine itself would report.
const BOX_PAD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    /// Need not be unit length; hit distances are in multiples of it.
    pub dir: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub triangle: usize,
    pub object_id: i32,
}

impl Hit {
    /// Nearest first; equal distances go to the lower triangle index.
    fn better_than(&self, other: &Hit) -> bool {
        self.t < other.t || (self.t == other.t && self.triangle < other.triangle)
    }
}

/// Möller–Trumbore ray/triangle intersection. Returns the ray parameter of
/// the hit, or `None` for misses, parallel rays and hits behind `T_MIN`.
pub fn intersect_triangle(ray: &Ray, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = ray.dir.cross(&e2);
    let det = e1.dot(&p);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - a;
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > T_MIN).then_some(t)
}

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first slot in `order`. Inner: index of the left child (the
    /// right child follows the left subtree).
    start: u32,
    /// Leaf: triangle count. Inner: 0.
    count: u32,
    right: u32,
}

/// Bounding-volume hierarchy over the triangles of a set of meshes.
#[derive(Debug, Clone)]
pub struct Bvh {
    triangles: Vec<[Vec3; 3]>,
    object_ids: Vec<i32>,
    order: Vec<u32>,
    nodes: Vec<Node>,
}

/// Builds the index over all triangles of `meshes`. Triangle indices in hits
/// count through the meshes in order.
pub fn build_accelerator(meshes: &[SurfaceMesh]) -> Result<Bvh, RaycastError> {
    let bvh = Bvh::build(meshes);
    if bvh.triangle_count() == 0 {
        return Err(RaycastError::EmptyScene);
    }
    Ok(bvh)
}

impl Bvh {
    /// Like [`build_accelerator`] but accepts an empty scene, whose queries all miss.
    pub fn build(meshes: &[SurfaceMesh]) -> Bvh {
        let mut triangles = Vec::new();
        let mut object_ids = Vec::new();
        for m in meshes {
            for t in 0..m.triangles.len() {
                triangles.push(m.corners(t));
                object_ids.push(m.object_id);
            }
        }
        let n = triangles.len();
        let bounds: Vec<Aabb> = triangles.iter().map(|t| Aabb::from_points(t.iter())).collect();
        let centroids: Vec<Vec3> = bounds.iter().map(|b| b.center()).collect();
        let mut bvh = Bvh {
            triangles,
            object_ids,
            order: (0..n as u32).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
        };
        if n > 0 {
            bvh.build_node(0, n, 0, &bounds, &centroids);
        }
        bvh
    }

    fn build_node(&mut self, start: usize, end: usize, depth: usize, bounds: &[Aabb], centroids: &[Vec3]) -> usize {
        let mut b = Aabb::empty();
        let mut cb = Aabb::empty();
        for &i in &self.order[start..end] {
            b = b.union(&bounds[i as usize]);
            cb.grow(&centroids[i as usize]);
        }
        let pad = Vec3::repeat(BOX_PAD * (1.0 + b.min.abs().max().max(b.max.abs().max())));
        b.min -= pad;
        b.max += pad;

        let id = self.nodes.len();
        self.nodes.push(Node {
            bounds: b,
            start: start as u32,
            count: (end - start) as u32,
            right: 0,
        });
        let ext = cb.extent();
        if end - start <= LEAF_SIZE || ext.max() <= 0.0 {
            return id;
        }
        let mid = match (depth < SAH_MAX_DEPTH).then(|| self.sah_split(start, end, &b, &cb, bounds, centroids)) {
            Some(Some(mid)) => mid,
            Some(None) => return id,
            None => {
                let axis = ext.imax();
                let mid = (start + end) / 2;
                self.order[start..end].select_nth_unstable_by(mid - start, |&i, &j| {
                    centroids[i as usize][axis]
                        .total_cmp(&centroids[j as usize][axis])
                        .then(i.cmp(&j))
                });
                mid
            }
        };
        let left = self.build_node(start, mid, depth + 1, bounds, centroids);
        let right = self.build_node(mid, end, depth + 1, bounds, centroids);
        debug_assert_eq!(left, id + 1);
        let node = &mut self.nodes[id];
        node.count = 0;
        node.start = left as u32;
        node.right = right as u32;
        id
    }

    /// Binned surface-area split of `order[start..end]`. Returns the split
    /// point, or `None` when keeping the range as one leaf is cheaper.
    fn sah_split(
        &mut self,
        start: usize,
        end: usize,
        node: &Aabb,
        cb: &Aabb,
        bounds: &[Aabb],
        centroids: &[Vec3],
    ) -> Option<usize> {
        let n = end - start;
        let bin_of = |c: f64, axis: usize| {
            let w = cb.max[axis] - cb.min[axis];
            (((c - cb.min[axis]) / w * BINS as f64) as usize).min(BINS - 1)
        };
        let mut best: Option<(f64, usize, usize)> = None;
        for axis in 0..3 {
            if cb.max[axis] - cb.min[axis] <= 0.0 {
                continue;
            }
            let mut count = [0usize; BINS];
            let mut boxes = [Aabb::empty(); BINS];
            for &i in &self.order[start..end] {
                let k = bin_of(centroids[i as usize][axis], axis);
                count[k] += 1;
                boxes[k] = boxes[k].union(&bounds[i as usize]);
            }
            // right-to-left sweep first, then evaluate each plane left to right
            let mut right_cost = [0.0; BINS];
            let mut acc = Aabb::empty();
            let mut m = 0;
            for k in (1..BINS).rev() {
                acc = acc.union(&boxes[k]);
                m += count[k];
                right_cost[k] = if m == 0 { 0.0 } else { acc.surface_area() * m as f64 };
            }
            let mut acc = Aabb::empty();
            let mut m = 0;
            for k in 0..BINS - 1 {
                acc = acc.union(&boxes[k]);
                m += count[k];
                if m == 0 || m == n {
                    continue;
                }
                let cost = acc.surface_area() * m as f64 + right_cost[k + 1];
                if best.is_none_or(|(c, _, _)| cost < c) {
                    best = Some((cost, axis, k));
                }
            }
        }
        let (cost, axis, k) = best?;
        let leaf_cost = node.surface_area() * (n as f64 - TRAVERSAL_COST);
        if n <= MAX_LEAF && cost >= leaf_cost {
            return None;
        }
        let mut mid = start;
        for j in start..end {
            let i = self.order[j];
            if bin_of(centroids[i as usize][axis], axis) <= k {
                self.order.swap(mid, j);
                mid += 1;
            }
        }
        Some(mid)
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle(&self, index: usize) -> &[Vec3; 3] {
        &self.triangles[index]
    }

    pub fn object_id(&self, triangle: usize) -> i32 {
        self.object_ids[triangle]
    }

    fn test(&self, ray: &Ray, tri: usize) -> Option<Hit> {
        let [a, b, c] = &self.triangles[tri];
        intersect_triangle(ray, a, b, c).map(|t| Hit {
            t,
            triangle: tri,
            object_id: self.object_ids[tri],
        })
    }

    /// Nearest hit along the ray.
    pub fn nearest(&self, ray: &Ray) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = ray.dir.map(|d| 1.0 / d);
        let mut best: Option<Hit> = None;
        let mut stack = Stack::default();
        if let Some(t) = slab(&self.nodes[0].bounds, ray, &inv) {
            stack.push((0, t));
        }
        while let Some((id, t_near)) = stack.pop() {
            // equal distances must still be visited for the index tie-break
            if best.is_some_and(|h| t_near > h.t) {
                continue;
            }
            let node = &self.nodes[id];
            if node.count > 0 {
                let s = node.start as usize;
                for &tri in &self.order[s..s + node.count as usize] {
                    if let Some(h) = self.test(ray, tri as usize) {
                        if best.is_none_or(|b| h.better_than(&b)) {
                            best = Some(h);
                        }
                    }
                }
                continue;
            }
            let l = node.start as usize;
            let r = node.right as usize;
            let tl = slab(&self.nodes[l].bounds, ray, &inv);
            let tr = slab(&self.nodes[r].bounds, ray, &inv);
            // push the farther child first so the nearer one is popped next
            match (tl, tr) {
                (Some(a), Some(b)) if a <= b => {
                    stack.push((r, b));
                    stack.push((l, a));
                }
                (Some(a), Some(b)) => {
                    stack.push((l, a));
                    stack.push((r, b));
                }
                (Some(a), None) => stack.push((l, a)),
                (None, Some(b)) => stack.push((r, b)),
                (None, None) => {}
            }
        }
        best
    }

    /// Reference answer: every triangle tested, same tie rules as [`Bvh::nearest`].
    pub fn nearest_brute_force(&self, ray: &Ray) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for tri in 0..self.triangles.len() {
            if let Some(h) = self.test(ray, tri) {
                if best.is_none_or(|b| h.better_than(&b)) {
                    best = Some(h);
                }
            }
        }
        best
    }
}

/// Traversal stack. Tree depth is at most SAH_MAX_DEPTH plus a median-split
/// tail of log2(triangles), and one slot per level plus one suffices.
struct Stack {
    items: [(usize, f64); STACK_SIZE],
    len: usize,
}

impl Default for Stack {
    fn default() -> Self {
        Stack {
            items: [(0, 0.0); STACK_SIZE],
            len: 0,
        }
    }
}

impl Stack {
    fn push(&mut self, item: (usize, f64)) {
        self.items[self.len] = item;
        self.len += 1;
    }

    fn pop(&mut self) -> Option<(usize, f64)> {
        self.len = self.len.checked_sub(1)?;
        Some(self.items[self.len])
    }
}

/// Entry distance of the ray into the box (clamped at 0), if it enters at all.
fn slab(b: &Aabb, ray: &Ray, inv: &Vec3) -> Option<f64> {
    let mut t0 = 0.0f64;
    let mut t1 = f64::INFINITY;
    for k in 0..3 {
        let o = ray.origin[k];
        if ray.dir[k] == 0.0 {
            if o < b.min[k] || o > b.max[k] {
                return None;
            }
            continue;
        }
        let a = (b.min[k] - o) * inv[k];
        let c = (b.max[k] - o) * inv[k];
        let (near, far) = if a <= c { (a, c) } else { (c, a) };
        t0 = t0.max(near);
        t1 = t1.min(far);
    }
    // a little slack for the rounding in the products above
    (t0 <= t1 * (1.0 + 1e-12) + 1e-12).then_some(t0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;
    use rand::Rng;

    fn unit_triangle() -> SurfaceMesh {
        SurfaceMesh {
            vertices: vec![Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 1.0)],
            triangles: vec![[0, 1, 2]],
            object_id: 5,
        }
    }

    #[test]
    fn single_triangle() {
        let bvh = build_accelerator(&[unit_triangle()]).unwrap();
        let ray = Ray {
            origin: Vec3::new(0.25, 0.25, 0.0),
            dir: Vec3::new(0.0, 0.0, 1.0),
        };
        let hit = bvh.nearest(&ray).unwrap();
        assert_eq!(hit.object_id, 5);
        assert!((hit.t - 1.0).abs() < 1e-15);
        let tri = bvh.triangle(0);
        assert_eq!(intersect_triangle(&ray, &tri[0], &tri[1], &tri[2]), Some(hit.t));
    }

    #[test]
    fn misses_and_backfaces() {
        let bvh = Bvh::build(&[unit_triangle()]);
        let away = Ray {
            origin: Vec3::new(0.25, 0.25, 0.0),
            dir: Vec3::new(0.0, 0.0, -1.0),
        };
        assert!(bvh.nearest(&away).is_none());
        let beside = Ray {
            origin: Vec3::new(2.0, 2.0, 0.0),
            dir: Vec3::new(0.0, 0.0, 1.0),
        };
        assert!(bvh.nearest(&beside).is_none());
        // both windings are hit
        let behind = Ray {
            origin: Vec3::new(0.25, 0.25, 2.0),
            dir: Vec3::new(0.0, 0.0, -1.0),
        };
        assert!((bvh.nearest(&behind).unwrap().t - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_scene() {
        assert!(matches!(build_accelerator(&[]), Err(RaycastError::EmptyScene)));
        let ray = Ray {
            origin: Vec3::zeros(),
            dir: Vec3::x(),
        };
        assert!(Bvh::build(&[]).nearest(&ray).is_none());
    }

    #[test]
    fn coincident_triangles_resolve_to_lower_index() {
        let a = unit_triangle();
        let b = unit_triangle().with_object_id(9);
        let bvh = Bvh::build(&[b, a]);
        let ray = Ray {
            origin: Vec3::new(0.2, 0.2, 0.0),
            dir: Vec3::z(),
        };
        let hit = bvh.nearest(&ray).unwrap();
        assert_eq!((hit.triangle, hit.object_id), (0, 9));
    }

    #[test]
    fn matches_brute_force_on_random_soup() {
        let mut rng = stream(99);
        let mut mesh = SurfaceMesh {
            vertices: Vec::new(),
            triangles: Vec::new(),
            object_id: 0,
        };
        for t in 0..10_000u32 {
            let c = Vec3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            for _ in 0..3 {
                let d = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
                mesh.vertices.push(c + d);
            }
            mesh.triangles.push([3 * t, 3 * t + 1, 3 * t + 2]);
        }
        let bvh = build_accelerator(&[mesh]).unwrap();
        for _ in 0..1000 {
            let ray = Ray {
                origin: Vec3::new(rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)),
                dir: Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            };
            assert_eq!(bvh.nearest(&ray), bvh.nearest_brute_force(&ray));
        }
    }
}
