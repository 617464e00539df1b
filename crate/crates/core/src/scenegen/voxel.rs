use crate::geom::Vec3;
use crate::meshio::PointCloud;

/// Integer voxel coordinates of `p` for voxels of side `voxel`.
pub fn voxel_index(p: &Vec3, voxel: f64) -> [i64; 3] {
    [
        (p.x / voxel).floor() as i64,
        (p.y / voxel).floor() as i64,
        (p.z / voxel).floor() as i64,
    ]
}

/// Grid downsampling: one point per occupied voxel, at the centroid of the
/// voxel's members. Colors are averaged and object ids decided by majority
/// (ties to the smallest id). Output is ordered by voxel index.
///
/// A centroid coordinate that rounding pushes across its voxel boundary is
/// replaced by a member's coordinate, so every output point maps back to its
/// own voxel and a second pass is the identity.
pub fn voxel_downsample(pc: &PointCloud, voxel: f64) -> PointCloud {
    assert!(voxel > 0.0, "voxel size must be positive");
    let n = pc.len();
    let mut keyed: Vec<([i64; 3], usize)> = pc
        .positions
        .iter()
        .enumerate()
        .map(|(i, p)| (voxel_index(p, voxel), i))
        .collect();
    keyed.sort_unstable();

    let mut out = PointCloud {
        positions: Vec::new(),
        colors: pc.colors.as_ref().map(|_| Vec::new()),
        object_ids: pc.object_ids.as_ref().map(|_| Vec::new()),
    };
    let mut ids_scratch: Vec<i32> = Vec::new();
    let mut start = 0;
    while start < n {
        let key = keyed[start].0;
        let mut end = start + 1;
        while end < n && keyed[end].0 == key {
            end += 1;
        }
        let members = &keyed[start..end];
        let count = members.len() as f64;

        let sum = members
            .iter()
            .fold(Vec3::zeros(), |acc, &(_, i)| acc + pc.positions[i]);
        let mut c = sum / count;
        let first = pc.positions[members[0].1];
        for k in 0..3 {
            if (c[k] / voxel).floor() as i64 != key[k] {
                c[k] = first[k];
            }
        }
        out.positions.push(c);

        if let (Some(dst), Some(src)) = (out.colors.as_mut(), pc.colors.as_ref()) {
            let mut acc = [0.0f64; 3];
            for &(_, i) in members {
                for ch in 0..3 {
                    acc[ch] += f64::from(src[i][ch]);
                }
            }
            dst.push(acc.map(|v| (v / count) as f32));
        }
        if let (Some(dst), Some(src)) = (out.object_ids.as_mut(), pc.object_ids.as_ref()) {
            ids_scratch.clear();
            ids_scratch.extend(members.iter().map(|&(_, i)| src[i]));
            dst.push(majority(&mut ids_scratch));
        }
        start = end;
    }
    out
}

/// Most frequent value; ties go to the smallest.
fn majority(ids: &mut [i32]) -> i32 {
    ids.sort_unstable();
    let mut best = (ids[0], 0usize);
    let mut k = 0;
    while k < ids.len() {
        let mut j = k + 1;
        while j < ids.len() && ids[j] == ids[k] {
            j += 1;
        }
        if j - k > best.1 {
            best = (ids[k], j - k);
        }
        k = j;
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;
    use proptest::prelude::*;
    use rand::Rng;
    use std::collections::HashSet;

    #[test]
    fn empty_in_empty_out() {
        let out = voxel_downsample(&PointCloud::default(), 0.04);
        assert!(out.is_empty());
    }

    #[test]
    fn floor_rule_binning() {
        let pc = PointCloud::from_positions(vec![
            Vec3::new(0.01, 0.01, 0.01),
            Vec3::new(0.05, 0.01, 0.01),
        ]);
        let out = voxel_downsample(&pc, 0.04);
        assert_eq!(out.len(), 2);
        assert_eq!(voxel_index(&out.positions[0], 0.04), [0, 0, 0]);
        assert_eq!(voxel_index(&out.positions[1], 0.04), [1, 0, 0]);
    }

    #[test]
    fn duplicates_collapse() {
        let p = Vec3::new(0.123, -4.56, 7.0);
        let pc = PointCloud::from_positions(vec![p; 1000]);
        let out = voxel_downsample(&pc, 0.04);
        assert_eq!(out.len(), 1);
        // the centroid of identical points may differ by rounding; the
        // fallback keeps it inside the voxel and within an ulp or two
        assert!((out.positions[0] - p).norm() < 1e-12);
    }

    #[test]
    fn attributes_average_and_vote() {
        let pc = PointCloud {
            positions: vec![Vec3::new(0.01, 0.01, 0.01); 4],
            colors: Some(vec![[0.0, 0.2, 1.0], [1.0, 0.2, 1.0], [0.5, 0.2, 1.0], [0.5, 0.2, 1.0]]),
            object_ids: Some(vec![7, 3, 7, 3]),
        };
        let out = voxel_downsample(&pc, 0.04);
        assert_eq!(out.object_ids.unwrap(), vec![3]);
        let c = out.colors.unwrap()[0];
        assert!((c[0] - 0.5).abs() < 1e-6 && (c[1] - 0.2).abs() < 1e-6);
    }

    #[test]
    fn boundary_points_stay_in_their_voxel() {
        // members sitting exactly on a voxel's lower faces
        let v = 0.04;
        let p = Vec3::new(3.0 * v, 7.0 * v, 11.0 * v);
        let key = voxel_index(&p, v);
        let pc = PointCloud::from_positions(vec![p; 7]);
        let out = voxel_downsample(&pc, v);
        assert_eq!(voxel_index(&out.positions[0], v), key);
    }

    fn random_cloud(seed: u64, n: usize) -> PointCloud {
        let mut rng = stream(seed);
        PointCloud {
            positions: (0..n)
                .map(|_| Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.0..0.3)))
                .collect(),
            colors: None,
            object_ids: Some((0..n).map(|_| rng.random_range(0..4)).collect()),
        }
    }

    proptest! {
        #[test]
        fn unique_voxels_and_idempotent(seed in any::<u64>(), n in 1usize..3000, v in 0.01f64..0.3) {
            let pc = random_cloud(seed, n);
            let once = voxel_downsample(&pc, v);
            prop_assert!(once.len() <= pc.len());
            let keys: HashSet<_> = once.positions.iter().map(|p| voxel_index(p, v)).collect();
            prop_assert_eq!(keys.len(), once.len());
            let twice = voxel_downsample(&once, v);
            prop_assert_eq!(twice, once);
        }
    }
}
