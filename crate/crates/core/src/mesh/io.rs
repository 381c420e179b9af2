//! Wavefront OBJ and binary little-endian PLY.
//!
//! OBJ vertex colors (`v x y z r g b`) are read and written as linear floats.
//! PLY colors are 8-bit `red`/`green`/`blue` properties holding sRGB-encoded
//! values and are decoded to linear on load.

use std::fs;
use std::io::Write;
use std::path::Path;

use glam::DVec3;

use super::{validate_manifold, TriangleMesh};
use crate::color;
use crate::error::{Error, Result};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mesh = match extension(path).as_str() {
        "obj" => parse_obj(path, &bytes)?,
        "ply" => parse_ply(path, &bytes)?,
        other => return Err(Error::UnsupportedFormat(format!("{other:?} ({})", path.display()))),
    };
    mesh.validate_indices()
        .map_err(|e| parse_error(path, "end of file", e.to_string()))?;
    let report = validate_manifold(&mesh);
    if !report.is_manifold() {
        log::warn!("{} is not a manifold mesh: {report:?}", path.display());
    }
    Ok(mesh)
}

pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    mesh.validate_indices()?;
    let bytes = match extension(path).as_str() {
        "obj" => write_obj(mesh),
        "ply" => write_ply(mesh, None),
        other => return Err(Error::UnsupportedFormat(format!("{other:?} ({})", path.display()))),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// PLY with an extra per-vertex `int view_id` property (`-1` for none).
pub fn save_ply_with_view_ids(
    mesh: &TriangleMesh,
    view_ids: &[Option<usize>],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    mesh.validate_indices()?;
    if view_ids.len() != mesh.vertex_count() {
        return Err(Error::Mismatch(format!(
            "{} view ids for {} vertices",
            view_ids.len(),
            mesh.vertex_count()
        )));
    }
    fs::write(path, write_ply(mesh, Some(view_ids))).map_err(|e| Error::io(path, e))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn parse_error(path: &Path, location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        location: location.into(),
        message: message.into(),
    }
}

fn parse_obj(path: &Path, bytes: &[u8]) -> Result<TriangleMesh> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| parse_error(path, format!("byte {}", e.valid_up_to()), "invalid UTF-8"))?;
    let mut vertices = Vec::new();
    let mut colors = Vec::new();
    let mut faces = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let loc = || format!("line {}", lineno + 1);
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let nums = tokens
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| parse_error(path, loc(), format!("bad number {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                match nums.len() {
                    3 | 4 => vertices.push(DVec3::new(nums[0], nums[1], nums[2])),
                    6 | 7 => {
                        vertices.push(DVec3::new(nums[0], nums[1], nums[2]));
                        colors.push(DVec3::new(nums[3], nums[4], nums[5]));
                    }
                    n => {
                        return Err(parse_error(path, loc(), format!("vertex with {n} numbers")))
                    }
                }
            }
            Some("f") => {
                let n = vertices.len() as i64;
                let idx = tokens
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or("");
                        let i: i64 = head
                            .parse()
                            .map_err(|_| parse_error(path, loc(), format!("bad index {t:?}")))?;
                        let resolved = if i < 0 { n + i } else { i - 1 };
                        if i == 0 || resolved < 0 || resolved >= n {
                            return Err(parse_error(
                                path,
                                loc(),
                                format!("index {i} out of range for {n} vertices"),
                            ));
                        }
                        Ok(resolved as u32)
                    })
                    .collect::<Result<Vec<_>>>()?;
                if idx.len() < 3 {
                    return Err(parse_error(
                        path,
                        loc(),
                        format!("face with {} vertices", idx.len()),
                    ));
                }
                fan_triangulate(&idx, &mut faces);
            }
            _ => {}
        }
    }

    let vertex_colors = if !colors.is_empty() {
        if colors.len() != vertices.len() {
            return Err(parse_error(
                path,
                "end of file",
                "vertex colors present on some vertices only",
            ));
        }
        Some(colors)
    } else {
        None
    };
    Ok(TriangleMesh {
        vertices,
        faces,
        vertex_colors,
    })
}

fn fan_triangulate(polygon: &[u32], out: &mut Vec<[u32; 3]>) {
    for k in 1..polygon.len() - 1 {
        out.push([polygon[0], polygon[k], polygon[k + 1]]);
    }
}

fn write_obj(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::new();
    writeln!(out, "# meshloop").unwrap();
    for (i, v) in mesh.vertices.iter().enumerate() {
        match &mesh.vertex_colors {
            Some(c) => writeln!(
                out,
                "v {} {} {} {} {} {}",
                v.x, v.y, v.z, c[i].x, c[i].y, c[i].z
            ),
            None => writeln!(out, "v {} {} {}", v.x, v.y, v.z),
        }
        .unwrap();
    }
    for f in &mesh.faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    out
}

fn write_ply(mesh: &TriangleMesh, view_ids: Option<&[Option<usize>]>) -> Vec<u8> {
    let mut out = Vec::new();
    let mut header = String::from("ply\nformat binary_little_endian 1.0\ncomment meshloop\n");
    header += &format!("element vertex {}\n", mesh.vertex_count());
    header += "property double x\nproperty double y\nproperty double z\n";
    if mesh.vertex_colors.is_some() {
        header += "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    }
    if view_ids.is_some() {
        header += "property int view_id\n";
    }
    header += &format!("element face {}\n", mesh.face_count());
    header += "property list uchar int vertex_indices\nend_header\n";
    out.extend_from_slice(header.as_bytes());

    for (i, v) in mesh.vertices.iter().enumerate() {
        for c in [v.x, v.y, v.z] {
            out.extend_from_slice(&c.to_le_bytes());
        }
        if let Some(colors) = &mesh.vertex_colors {
            out.extend_from_slice(&color::encode_rgb(colors[i]));
        }
        if let Some(ids) = view_ids {
            let id = ids[i].map_or(-1, |x| x as i32);
            out.extend_from_slice(&id.to_le_bytes());
        }
    }
    for f in &mesh.faces {
        out.push(3);
        for &i in f {
            out.extend_from_slice(&(i as i32).to_le_bytes());
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
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
    fn parse(name: &str) -> Option<Self> {
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

    fn read(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { name: String, count: Scalar, item: Scalar },
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Cursor<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take(&mut self, ty: Scalar) -> Result<f64> {
        let end = self.pos + ty.size();
        if end > self.bytes.len() {
            return Err(parse_error(
                self.path,
                format!("byte {}", self.pos),
                "unexpected end of binary data",
            ));
        }
        let v = ty.read(&self.bytes[self.pos..end]);
        self.pos = end;
        Ok(v)
    }
}

fn parse_ply(path: &Path, bytes: &[u8]) -> Result<TriangleMesh> {
    const END: &[u8] = b"end_header\n";
    let header_end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| parse_error(path, "header", "missing end_header"))?
        + END.len();
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| parse_error(path, "header", "header is not ASCII"))?;

    let mut elements: Vec<Element> = Vec::new();
    let mut offset = 0usize;
    for (lineno, line) in header.lines().enumerate() {
        let loc = format!("header line {} (byte {offset})", lineno + 1);
        offset += line.len() + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["ply"] | ["end_header"] | [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _] => {
                if *fmt != "binary_little_endian" {
                    return Err(Error::UnsupportedFormat(format!(
                        "PLY format {fmt} ({}); only binary_little_endian is supported",
                        path.display()
                    )));
                }
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_error(path, loc.clone(), "bad element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", count, item, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_error(path, loc.clone(), "property before element"))?;
                let (count, item) = Scalar::parse(count)
                    .zip(Scalar::parse(item))
                    .ok_or_else(|| parse_error(path, loc.clone(), "unknown list type"))?;
                el.properties.push(Property::List {
                    name: name.to_string(),
                    count,
                    item,
                });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_error(path, loc.clone(), "property before element"))?;
                let ty = Scalar::parse(ty)
                    .ok_or_else(|| parse_error(path, loc.clone(), format!("unknown type {ty}")))?;
                el.properties.push(Property::Scalar {
                    name: name.to_string(),
                    ty,
                });
            }
            _ => return Err(parse_error(path, loc, format!("unexpected header line {line:?}"))),
        }
    }

    let mut cur = Cursor {
        path,
        bytes,
        pos: header_end,
    };
    let mut vertices = Vec::new();
    let mut colors: Vec<DVec3> = Vec::new();
    let mut has_color = false;
    let mut faces = Vec::new();

    for el in &elements {
        match el.name.as_str() {
            "vertex" => {
                has_color = ["red", "green", "blue"].iter().all(|c| {
                    el.properties
                        .iter()
                        .any(|p| matches!(p, Property::Scalar { name, .. } if name == c))
                });
                vertices.reserve(el.count);
                for _ in 0..el.count {
                    let mut p = [0.0; 3];
                    let mut rgb = [0.0; 3];
                    for prop in &el.properties {
                        match prop {
                            Property::Scalar { name, ty } => {
                                let v = cur.take(*ty)?;
                                let color_value = |v: f64| {
                                    if *ty == Scalar::U8 {
                                        color::decode_u8(v as u8)
                                    } else {
                                        v
                                    }
                                };
                                match name.as_str() {
                                    "x" => p[0] = v,
                                    "y" => p[1] = v,
                                    "z" => p[2] = v,
                                    "red" => rgb[0] = color_value(v),
                                    "green" => rgb[1] = color_value(v),
                                    "blue" => rgb[2] = color_value(v),
                                    _ => {}
                                }
                            }
                            Property::List { count, item, .. } => {
                                let n = cur.take(*count)? as usize;
                                for _ in 0..n {
                                    cur.take(*item)?;
                                }
                            }
                        }
                    }
                    vertices.push(DVec3::from_array(p));
                    if has_color {
                        colors.push(DVec3::from_array(rgb));
                    }
                }
            }
            "face" => {
                faces.reserve(el.count);
                for _ in 0..el.count {
                    for prop in &el.properties {
                        match prop {
                            Property::List { name, count, item }
                                if name == "vertex_indices" || name == "vertex_index" =>
                            {
                                let at = cur.pos;
                                let n = cur.take(*count)? as usize;
                                let mut poly = Vec::with_capacity(n);
                                for _ in 0..n {
                                    let i = cur.take(*item)?;
                                    if i < 0.0 || i as usize >= vertices.len() {
                                        return Err(parse_error(
                                            path,
                                            format!("byte {at}"),
                                            format!("face index {i} out of range"),
                                        ));
                                    }
                                    poly.push(i as u32);
                                }
                                if n < 3 {
                                    return Err(parse_error(
                                        path,
                                        format!("byte {at}"),
                                        format!("face with {n} vertices"),
                                    ));
                                }
                                fan_triangulate(&poly, &mut faces);
                            }
                            Property::List { count, item, .. } => {
                                let n = cur.take(*count)? as usize;
                                for _ in 0..n {
                                    cur.take(*item)?;
                                }
                            }
                            Property::Scalar { ty, .. } => {
                                cur.take(*ty)?;
                            }
                        }
                    }
                }
            }
            _ => {
                for _ in 0..el.count {
                    for prop in &el.properties {
                        match prop {
                            Property::Scalar { ty, .. } => {
                                cur.take(*ty)?;
                            }
                            Property::List { count, item, .. } => {
                                let n = cur.take(*count)? as usize;
                                for _ in 0..n {
                                    cur.take(*item)?;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    Ok(TriangleMesh {
        vertices,
        faces,
        vertex_colors: has_color.then_some(colors),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives;

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn minimal_obj() {
        let dir = tmp();
        let p = dir.path().join("tri.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        let m = load_mesh(&p).unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.faces, vec![[0, 1, 2]]);
        assert!(m.vertex_colors.is_none());
    }

    #[test]
    fn obj_quad_is_fan_triangulated() {
        let dir = tmp();
        let p = dir.path().join("quad.obj");
        fs::write(
            &p,
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n",
        )
        .unwrap();
        assert_eq!(load_mesh(&p).unwrap().faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn obj_errors_carry_line_numbers() {
        let dir = tmp();
        let p = dir.path().join("bad.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nf 1 2\n").unwrap();
        let err = load_mesh(&p).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");

        fs::write(&p, "v 0 0 0\nv 1 0 x\n").unwrap();
        let err = load_mesh(&p).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");

        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 1 1 0\nf 1 2 7\n").unwrap();
        assert!(load_mesh(&p).is_err());
    }

    #[test]
    fn obj_colors_and_negative_indices() {
        let dir = tmp();
        let p = dir.path().join("c.obj");
        fs::write(
            &p,
            "v 0 0 0 1 0 0\nv 1 0 0 0 1 0\nv 0 1 0 0 0 1\nf -3 -2 -1\n",
        )
        .unwrap();
        let m = load_mesh(&p).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2]]);
        assert_eq!(m.vertex_colors.unwrap()[1], DVec3::Y);
    }

    #[test]
    fn cube_round_trips_through_both_formats() {
        let dir = tmp();
        let cube = primitives::cube();
        for ext in ["obj", "ply"] {
            let p = dir.path().join(format!("cube.{ext}"));
            save_mesh(&cube, &p).unwrap();
            let back = load_mesh(&p).unwrap();
            assert_eq!(back.faces, cube.faces);
            for (a, b) in back.vertices.iter().zip(&cube.vertices) {
                assert!((*a - *b).length() <= 1e-6);
            }
        }
    }

    #[test]
    fn colored_ply_has_rgb_properties() {
        let dir = tmp();
        let p = dir.path().join("colored.ply");
        let n = primitives::cube().vertex_count();
        let colors = (0..n).map(|i| DVec3::splat(i as f64 / n as f64)).collect();
        let mesh = primitives::cube().with_colors(colors);
        save_mesh(&mesh, &p).unwrap();
        let text = String::from_utf8_lossy(&fs::read(&p).unwrap()).to_string();
        for prop in ["property uchar red", "property uchar green", "property uchar blue"] {
            assert!(text.contains(prop));
        }
        let back = load_mesh(&p).unwrap();
        let (c0, c1) = (mesh.vertex_colors.unwrap(), back.vertex_colors.unwrap());
        for (a, b) in c0.iter().zip(&c1) {
            // 8-bit sRGB quantization
            assert!((*a - *b).abs().max_element() < 0.01);
        }
    }

    #[test]
    fn empty_mesh_round_trips() {
        let dir = tmp();
        for ext in ["obj", "ply"] {
            let p = dir.path().join(format!("empty.{ext}"));
            save_mesh(&TriangleMesh::default(), &p).unwrap();
            let back = load_mesh(&p).unwrap();
            assert_eq!(back.vertex_count(), 0);
            assert_eq!(back.face_count(), 0);
        }
    }

    #[test]
    fn ply_with_view_ids_still_loads() {
        let dir = tmp();
        let p = dir.path().join("ids.ply");
        let mesh = primitives::cube();
        let ids: Vec<Option<usize>> = (0..8).map(|i| (i % 2 == 0).then_some(i)).collect();
        save_ply_with_view_ids(&mesh, &ids, &p).unwrap();
        let back = load_mesh(&p).unwrap();
        assert_eq!(back.faces, mesh.faces);
        assert_eq!(back.vertices, mesh.vertices);
    }

    #[test]
    fn ply_rejects_ascii_and_truncation() {
        let dir = tmp();
        let p = dir.path().join("a.ply");
        fs::write(&p, "ply\nformat ascii 1.0\nelement vertex 0\nend_header\n").unwrap();
        assert!(matches!(load_mesh(&p), Err(Error::UnsupportedFormat(_))));

        let good = dir.path().join("t.ply");
        save_mesh(&primitives::cube(), &good).unwrap();
        let bytes = fs::read(&good).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 5]).unwrap();
        let err = load_mesh(&p).unwrap_err().to_string();
        assert!(err.contains("byte"), "{err}");
    }

    #[test]
    fn ply_float_positions_and_quads() {
        let dir = tmp();
        let p = dir.path().join("q.ply");
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar uint vertex_indices\nend_header\n".to_vec();
        for v in [[0f32, 0., 0.], [1., 0., 0.], [1., 1., 0.], [0., 1., 0.]] {
            for c in v {
                bytes.extend_from_slice(&c.to_le_bytes());
            }
        }
        bytes.push(4);
        for i in 0u32..4 {
            bytes.extend_from_slice(&i.to_le_bytes());
        }
        fs::write(&p, bytes).unwrap();
        let m = load_mesh(&p).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
        assert_eq!(m.vertices[2], DVec3::new(1.0, 1.0, 0.0));
    }
}
