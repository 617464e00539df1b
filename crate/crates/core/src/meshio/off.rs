use super::{fan_triangulate, MeshIoError, SurfaceMesh};
use crate::geom::Vec3;

/// Parses an OFF mesh (ModelNet flavour, including the run-together
/// `OFF<nv> <nf> <ne>` header some ModelNet files carry).
pub fn parse_off(text: &str) -> Result<SurfaceMesh, MeshIoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, strip_comment(l).trim()))
        .filter(|(_, l)| !l.is_empty());

    let (header_line, header) = lines
        .next()
        .ok_or_else(|| MeshIoError::parse(1, "empty file, expected OFF header"))?;
    let keyword_end = header
        .find(|c: char| c.is_ascii_digit() || c.is_whitespace())
        .unwrap_or(header.len());
    let keyword = &header[..keyword_end];
    if !keyword.ends_with("OFF") {
        return Err(MeshIoError::parse(
            header_line,
            format!("expected OFF header, found `{header}`"),
        ));
    }
    // COFF / NOFF / CNOFF carry extra per-vertex values
    let extra_vertex_values = keyword != "OFF";

    let rest = header[keyword_end..].trim();
    let (count_line, counts) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| MeshIoError::parse(header_line + 1, "missing element counts"))?
    } else {
        (header_line, rest)
    };
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| MeshIoError::parse(count_line, format!("malformed counts `{counts}`")))?;
    if counts.len() < 2 {
        return Err(MeshIoError::parse(
            count_line,
            "expected vertex and face counts",
        ));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut last_line = count_line;
    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (line, l) = lines.next().ok_or_else(|| {
            MeshIoError::parse(
                last_line + 1,
                format!("unexpected end of file: declared {nv} vertices, found {k}"),
            )
        })?;
        last_line = line;
        let values: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| MeshIoError::parse(line, format!("malformed vertex `{l}`")))?;
        if values.len() < 3 || (!extra_vertex_values && values.len() != 3) {
            return Err(MeshIoError::parse(
                line,
                format!("vertex line has {} values, expected 3", values.len()),
            ));
        }
        vertices.push(Vec3::new(values[0], values[1], values[2]));
    }

    let mut triangles = Vec::with_capacity(nf);
    for k in 0..nf {
        let (line, l) = lines.next().ok_or_else(|| {
            MeshIoError::parse(
                last_line + 1,
                format!("unexpected end of file: declared {nf} faces, found {k}"),
            )
        })?;
        last_line = line;
        let mut tokens = l.split_whitespace();
        let arity: usize = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| MeshIoError::parse(line, format!("malformed face `{l}`")))?;
        let mut poly = Vec::with_capacity(arity);
        for _ in 0..arity {
            let idx: u32 = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| MeshIoError::parse(line, format!("malformed face `{l}`")))?;
            if idx as usize >= nv {
                return Err(MeshIoError::parse(
                    line,
                    format!("vertex index {idx} out of range (mesh has {nv} vertices)"),
                ));
            }
            poly.push(idx);
        }
        if arity < 3 {
            continue;
        }
        fan_triangulate(&poly, &mut triangles);
    }

    Ok(SurfaceMesh::new(vertices, triangles, 0)?)
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}
