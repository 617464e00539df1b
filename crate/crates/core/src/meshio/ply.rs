//! PLY reading and writing.
//!
//! Writers always emit `binary_little_endian 1.0` with `double` positions,
//! optional `float` colors in `[0, 1]` and an optional `int object_id`.
//! The reader accepts binary little-endian and ASCII files with any of the
//! standard scalar types.

use std::io::{self, Read, Write};

use super::{fan_triangulate, MeshIoError, PointCloud, SurfaceMesh};
use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Ascii,
    BinaryLe,
}

/// Contents of a PLY file: the vertex element as a cloud plus any faces.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlyData {
    pub cloud: PointCloud,
    pub triangles: Vec<[u32; 3]>,
}

impl PlyData {
    pub fn into_mesh(self, object_id: i32) -> Result<SurfaceMesh, MeshIoError> {
        Ok(SurfaceMesh::new(self.cloud.positions, self.triangles, object_id)?)
    }
}

fn write_vertex_header<W: Write>(out: &mut W, n: usize, colors: bool, ids: bool) -> io::Result<()> {
    writeln!(out, "ply")?;
    writeln!(out, "format binary_little_endian 1.0")?;
    writeln!(out, "comment generated by roomgen")?;
    writeln!(out, "element vertex {n}")?;
    for axis in ["x", "y", "z"] {
        writeln!(out, "property double {axis}")?;
    }
    if colors {
        for ch in ["red", "green", "blue"] {
            writeln!(out, "property float {ch}")?;
        }
    }
    if ids {
        writeln!(out, "property int object_id")?;
    }
    Ok(())
}

/// Serializes a point cloud; colors and object ids are written when present.
pub fn write_cloud<W: Write>(cloud: &PointCloud, mut out: W) -> io::Result<()> {
    let mut buf = Vec::with_capacity(cloud.len() * 40 + 256);
    write_vertex_header(
        &mut buf,
        cloud.len(),
        cloud.colors.is_some(),
        cloud.object_ids.is_some(),
    )?;
    writeln!(buf, "end_header")?;
    for i in 0..cloud.len() {
        let p = cloud.positions[i];
        for k in 0..3 {
            buf.extend_from_slice(&p[k].to_le_bytes());
        }
        if let Some(c) = &cloud.colors {
            for v in c[i] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        if let Some(ids) = &cloud.object_ids {
            buf.extend_from_slice(&ids[i].to_le_bytes());
        }
    }
    out.write_all(&buf)
}

pub fn write_mesh<W: Write>(mesh: &SurfaceMesh, mut out: W) -> io::Result<()> {
    let mut buf = Vec::with_capacity(mesh.vertices.len() * 24 + mesh.triangles.len() * 13 + 256);
    write_vertex_header(&mut buf, mesh.vertices.len(), false, false)?;
    writeln!(buf, "element face {}", mesh.triangles.len())?;
    writeln!(buf, "property list uchar int vertex_indices")?;
    writeln!(buf, "end_header")?;
    for v in &mesh.vertices {
        for k in 0..3 {
            buf.extend_from_slice(&v[k].to_le_bytes());
        }
    }
    for t in &mesh.triangles {
        buf.push(3);
        for &i in t {
            buf.extend_from_slice(&(i as i32).to_le_bytes());
        }
    }
    out.write_all(&buf)
}

pub fn read_ply<R: Read>(mut input: R) -> Result<PlyData, MeshIoError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    parse_ply(&bytes)
}

pub fn read_ply_file(path: impl AsRef<std::path::Path>) -> Result<PlyData, MeshIoError> {
    parse_ply(&std::fs::read(path)?)
}

pub fn parse_ply(bytes: &[u8]) -> Result<PlyData, MeshIoError> {
    let (format, elements, body_start, header_lines) = parse_header(bytes)?;
    let body = &bytes[body_start..];
    match format {
        Format::BinaryLe => decode_binary(&elements, body),
        Format::Ascii => decode_ascii(&elements, body, header_lines),
    }
}

fn parse_header(bytes: &[u8]) -> Result<(Format, Vec<Element>, usize, usize), MeshIoError> {
    let mut pos = 0;
    let mut line_no = 0;
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| MeshIoError::parse(line_no + 1, "unterminated PLY header"))?;
        let line = std::str::from_utf8(&bytes[pos..pos + end])
            .map_err(|_| MeshIoError::parse(line_no + 1, "non-UTF-8 header"))?
            .trim_end_matches('\r')
            .trim();
        pos += end + 1;
        line_no += 1;
        let mut tok = line.split_whitespace();
        let bad = |msg: String| MeshIoError::parse(line_no, msg);
        match tok.next() {
            Some("ply") if line_no == 1 => {}
            _ if line_no == 1 => return Err(bad("missing `ply` magic".into())),
            Some("format") => {
                format = Some(match tok.next() {
                    Some("ascii") => Format::Ascii,
                    Some("binary_little_endian") => Format::BinaryLe,
                    Some(f) => return Err(bad(format!("unsupported PLY format `{f}`"))),
                    None => return Err(bad("missing format".into())),
                });
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = tok.next().ok_or_else(|| bad("element without name".into()))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| bad("element without count".into()))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| bad("property before any element".into()))?;
                let ty = tok.next().ok_or_else(|| bad("property without type".into()))?;
                let prop = if ty == "list" {
                    let count = tok.next().and_then(Scalar::parse);
                    let item = tok.next().and_then(Scalar::parse);
                    let name = tok.next();
                    match (count, item, name) {
                        (Some(count), Some(item), Some(name)) => Property::List {
                            name: name.to_string(),
                            count,
                            item,
                        },
                        _ => return Err(bad(format!("malformed list property `{line}`"))),
                    }
                } else {
                    let ty = Scalar::parse(ty).ok_or_else(|| bad(format!("unknown type `{ty}`")))?;
                    let name = tok.next().ok_or_else(|| bad("property without name".into()))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                el.properties.push(prop);
            }
            Some("end_header") => break,
            Some(other) => return Err(bad(format!("unexpected header keyword `{other}`"))),
            None => {}
        }
    }
    let format = format.ok_or_else(|| MeshIoError::parse(line_no, "missing format line"))?;
    Ok((format, elements, pos, line_no))
}

/// Per-vertex property slots recognised by the reader.
#[derive(Default)]
struct VertexSlots {
    xyz: [Option<usize>; 3],
    rgb: [Option<usize>; 3],
    rgb_is_u8: bool,
    id: Option<usize>,
}

impl VertexSlots {
    fn from(el: &Element) -> VertexSlots {
        let mut s = VertexSlots::default();
        for (i, p) in el.properties.iter().enumerate() {
            if let Property::Scalar { name, ty } = p {
                match name.as_str() {
                    "x" => s.xyz[0] = Some(i),
                    "y" => s.xyz[1] = Some(i),
                    "z" => s.xyz[2] = Some(i),
                    "red" => {
                        s.rgb[0] = Some(i);
                        s.rgb_is_u8 = *ty == Scalar::U8;
                    }
                    "green" => s.rgb[1] = Some(i),
                    "blue" => s.rgb[2] = Some(i),
                    "object_id" => s.id = Some(i),
                    _ => {}
                }
            }
        }
        s
    }

    fn push(&self, values: &[f64], data: &mut PlyData) {
        let get = |slot: Option<usize>| slot.map(|i| values[i]).unwrap_or(0.0);
        data.cloud
            .positions
            .push(Vec3::new(get(self.xyz[0]), get(self.xyz[1]), get(self.xyz[2])));
        if let Some(colors) = data.cloud.colors.as_mut() {
            let div = if self.rgb_is_u8 { 255.0 } else { 1.0 };
            colors.push([
                (get(self.rgb[0]) / div) as f32,
                (get(self.rgb[1]) / div) as f32,
                (get(self.rgb[2]) / div) as f32,
            ]);
        }
        if let Some(ids) = data.cloud.object_ids.as_mut() {
            ids.push(get(self.id) as i32);
        }
    }
}

fn start_cloud(slots: &VertexSlots, n: usize) -> PlyData {
    let mut data = PlyData::default();
    data.cloud.positions.reserve(n);
    if slots.rgb.iter().all(|s| s.is_some()) {
        data.cloud.colors = Some(Vec::with_capacity(n));
    }
    if slots.id.is_some() {
        data.cloud.object_ids = Some(Vec::with_capacity(n));
    }
    data
}

fn decode_binary(elements: &[Element], body: &[u8]) -> Result<PlyData, MeshIoError> {
    let mut data = PlyData::default();
    let mut pos = 0usize;
    let truncated = |what: &str| MeshIoError::parse(0, format!("truncated binary body in element `{what}`"));
    for el in elements {
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        let slots = VertexSlots::from(el);
        if is_vertex {
            let keep = std::mem::take(&mut data.triangles);
            data = start_cloud(&slots, el.count);
            data.triangles = keep;
        }
        let mut values = vec![0.0; el.properties.len()];
        let mut poly: Vec<u32> = Vec::new();
        for _ in 0..el.count {
            for (pi, p) in el.properties.iter().enumerate() {
                match p {
                    Property::Scalar { ty, .. } => {
                        let sz = ty.size();
                        let chunk = body.get(pos..pos + sz).ok_or_else(|| truncated(&el.name))?;
                        values[pi] = ty.decode(chunk);
                        pos += sz;
                    }
                    Property::List { name, count, item } => {
                        let csz = count.size();
                        let chunk = body.get(pos..pos + csz).ok_or_else(|| truncated(&el.name))?;
                        let n = count.decode(chunk) as usize;
                        pos += csz;
                        let isz = item.size();
                        let take_indices = is_face
                            && (name == "vertex_indices" || name == "vertex_index");
                        poly.clear();
                        for _ in 0..n {
                            let chunk =
                                body.get(pos..pos + isz).ok_or_else(|| truncated(&el.name))?;
                            if take_indices {
                                poly.push(item.decode(chunk) as u32);
                            }
                            pos += isz;
                        }
                        if take_indices {
                            fan_triangulate(&poly, &mut data.triangles);
                        }
                    }
                }
            }
            if is_vertex {
                slots.push(&values, &mut data);
            }
        }
    }
    if pos != body.len() {
        return Err(MeshIoError::parse(
            0,
            format!("{} trailing bytes after PLY body", body.len() - pos),
        ));
    }
    Ok(data)
}

fn decode_ascii(elements: &[Element], body: &[u8], header_lines: usize) -> Result<PlyData, MeshIoError> {
    let text = std::str::from_utf8(body).map_err(|_| MeshIoError::parse(header_lines + 1, "non-UTF-8 body"))?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (header_lines + i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut data = PlyData::default();
    for el in elements {
        let is_vertex = el.name == "vertex";
        let is_face = el.name == "face";
        let slots = VertexSlots::from(el);
        if is_vertex {
            let keep = std::mem::take(&mut data.triangles);
            data = start_cloud(&slots, el.count);
            data.triangles = keep;
        }
        let mut values = vec![0.0; el.properties.len()];
        for k in 0..el.count {
            let (line, l) = lines.next().ok_or_else(|| {
                MeshIoError::parse(0, format!("element `{}` truncated after {k} records", el.name))
            })?;
            let mut tok = l.split_whitespace().map(|t| t.parse::<f64>());
            let mut next = || -> Result<f64, MeshIoError> {
                tok.next()
                    .and_then(|r| r.ok())
                    .ok_or_else(|| MeshIoError::parse(line, format!("malformed record `{l}`")))
            };
            for (pi, p) in el.properties.iter().enumerate() {
                match p {
                    Property::Scalar { .. } => values[pi] = next()?,
                    Property::List { name, .. } => {
                        let n = next()? as usize;
                        let mut poly = Vec::with_capacity(n);
                        for _ in 0..n {
                            poly.push(next()? as u32);
                        }
                        if is_face && (name == "vertex_indices" || name == "vertex_index") {
                            fan_triangulate(&poly, &mut data.triangles);
                        }
                    }
                }
            }
            if is_vertex {
                slots.push(&values, &mut data);
            }
        }
    }
    Ok(data)
}
