use std::io::{self, Write};

use super::{fan_triangulate, MeshIoError, SurfaceMesh};
use crate::geom::Vec3;

/// Parses the geometry subset of Wavefront OBJ: `v` and `f` records.
/// Texture/normal references in faces (`a/b/c`) and negative indices are
/// accepted; everything else is ignored.
pub fn parse_obj(text: &str) -> Result<SurfaceMesh, MeshIoError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| MeshIoError::parse(line_no, format!("malformed vertex `{line}`")))?;
                if coords.len() < 3 {
                    return Err(MeshIoError::parse(
                        line_no,
                        format!("vertex has {} coordinates, expected 3", coords.len()),
                    ));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for t in tokens {
                    let head = t.split('/').next().unwrap_or("");
                    let idx: i64 = head.parse().map_err(|_| {
                        MeshIoError::parse(line_no, format!("malformed face index `{t}`"))
                    })?;
                    let n = vertices.len() as i64;
                    let resolved = if idx > 0 { idx - 1 } else { n + idx };
                    if idx == 0 || resolved < 0 || resolved >= n {
                        return Err(MeshIoError::parse(
                            line_no,
                            format!("vertex index {idx} out of range ({n} vertices defined)"),
                        ));
                    }
                    poly.push(resolved as u32);
                }
                if poly.len() < 3 {
                    return Err(MeshIoError::parse(
                        line_no,
                        format!("face has {} corners", poly.len()),
                    ));
                }
                fan_triangulate(&poly, &mut triangles);
            }
            _ => {}
        }
    }
    Ok(SurfaceMesh::new(vertices, triangles, 0)?)
}

pub fn write_obj<W: Write>(mesh: &SurfaceMesh, mut out: W) -> io::Result<()> {
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_becomes_two_triangles() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn slash_and_negative_indices() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nf -3/1 -2/1 -1/1\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn out_of_range_index_names_line() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 1 2 9\n").unwrap_err();
        assert!(matches!(err, MeshIoError::Parse { line: 5, .. }));
    }

    #[test]
    fn write_then_parse_keeps_connectivity() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0.25\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        let mut buf = Vec::new();
        write_obj(&m, &mut buf).unwrap();
        let back = parse_obj(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
