//! Mesh file I/O: OBJ (read/write) and PLY (read, ascii + binary little endian).
//!
//! Only triangle faces are accepted. OBJ output prints coordinates with the
//! shortest round-trip representation, so a load/save/load cycle reproduces
//! vertex positions bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

/// Supported mesh file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("ply") => Ok(MeshFormat::Ply),
            other => Err(Error::Config(format!(
                "cannot infer mesh format from extension {other:?}"
            ))),
        }
    }
}

/// Loads a triangle mesh, validating all mesh invariants.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriMesh> {
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path.display().to_string();
    let (vertices, triangles) = match format {
        MeshFormat::Obj => parse_obj(&bytes, &name)?,
        MeshFormat::Ply => parse_ply(&bytes, &name)?,
    };
    TriMesh::from_parts(vertices, triangles)
}

/// Writes a mesh as OBJ. When `uv` is given, texture coordinates are emitted
/// and faces reference them (`f v/vt ...`).
pub fn save_obj(mesh: &TriMesh, path: &Path, uv: Option<&[(f64, f64)]>) -> Result<()> {
    let text = obj_string(mesh, uv);
    write_text(path, &text)
}

/// Renders a mesh as OBJ text.
pub fn obj_string(mesh: &TriMesh, uv: Option<&[(f64, f64)]>) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    if let Some(uv) = uv {
        for &(u, v) in uv {
            out.push_str(&format!("vt {} {}\n", u, v));
        }
        for t in mesh.triangles() {
            out.push_str(&format!(
                "f {}/{} {}/{} {}/{}\n",
                t[0] + 1,
                t[0] + 1,
                t[1] + 1,
                t[1] + 1,
                t[2] + 1,
                t[2] + 1
            ));
        }
    } else {
        for t in mesh.triangles() {
            out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
        }
    }
    out
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    file.write_all(text.as_bytes()).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_obj(bytes: &[u8], name: &str) -> Result<(Vec<Point3<f64>>, Vec<[usize; 3]>)> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::Parse {
        path: name.to_string(),
        line: 0,
        message: "obj file is not valid utf-8".into(),
    })?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let err = |message: String| Error::Parse {
            path: name.to_string(),
            line: ln + 1,
            message,
        };
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in coords.iter_mut() {
                    let tok = parts.next().ok_or_else(|| err("short v record".into()))?;
                    *c = tok
                        .parse()
                        .map_err(|_| err(format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<&str> = parts.collect();
                if idx.len() != 3 {
                    return Err(err(format!(
                        "face with {} vertices; only triangles are supported",
                        idx.len()
                    )));
                }
                let mut tri = [0usize; 3];
                for (k, tok) in idx.iter().enumerate() {
                    let first = tok.split('/').next().unwrap_or("");
                    let v: i64 = first
                        .parse()
                        .map_err(|_| err(format!("bad face index {tok:?}")))?;
                    if v < 1 {
                        return Err(err(format!("face index {v} is not positive 1-based")));
                    }
                    tri[k] = (v - 1) as usize;
                }
                triangles.push(tri);
            }
            // Normals, texcoords, groups, materials: ignored.
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

#[derive(Clone, Copy, PartialEq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(token: &str) -> Option<Self> {
        Some(match token {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn read_f64(self, bytes: &[u8]) -> f64 {
        match self {
            ScalarType::I8 => bytes[0] as i8 as f64,
            ScalarType::U8 => bytes[0] as f64,
            ScalarType::I16 => i16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            ScalarType::U16 => u16::from_le_bytes([bytes[0], bytes[1]]) as f64,
            ScalarType::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ScalarType::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ScalarType::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ScalarType::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
        }
    }
}

enum PlyProperty {
    Scalar(ScalarType, String),
    List(ScalarType, ScalarType, String),
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

fn parse_ply(bytes: &[u8], name: &str) -> Result<(Vec<Point3<f64>>, Vec<[usize; 3]>)> {
    let err = |line: usize, message: String| Error::Parse {
        path: name.to_string(),
        line,
        message,
    };

    // Header is always ascii, terminated by "end_header".
    let mut pos = 0usize;
    let mut lines = Vec::new();
    while pos < bytes.len() {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|e| pos + e)
            .unwrap_or(bytes.len());
        let line = String::from_utf8_lossy(&bytes[pos..end]).trim().to_string();
        pos = end + 1;
        let done = line == "end_header";
        lines.push(line);
        if done {
            break;
        }
    }
    if lines.first().map(String::as_str) != Some("ply") {
        return Err(err(1, "missing ply magic".into()));
    }

    let mut ascii = true;
    let mut elements: Vec<PlyElement> = Vec::new();
    for (ln, line) in lines.iter().enumerate().skip(1) {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("format") => match parts.next() {
                Some("ascii") => ascii = true,
                Some("binary_little_endian") => ascii = false,
                other => return Err(err(ln + 1, format!("unsupported ply format {other:?}"))),
            },
            Some("element") => {
                let ename = parts.next().unwrap_or("").to_string();
                let count: usize = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| err(ln + 1, "bad element count".into()))?;
                elements.push(PlyElement {
                    name: ename,
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| err(ln + 1, "property before element".into()))?;
                let t1 = parts.next().unwrap_or("");
                if t1 == "list" {
                    let count_t = ScalarType::parse(parts.next().unwrap_or(""))
                        .ok_or_else(|| err(ln + 1, "bad list count type".into()))?;
                    let item_t = ScalarType::parse(parts.next().unwrap_or(""))
                        .ok_or_else(|| err(ln + 1, "bad list item type".into()))?;
                    let pname = parts.next().unwrap_or("").to_string();
                    element.properties.push(PlyProperty::List(count_t, item_t, pname));
                } else {
                    let t = ScalarType::parse(t1)
                        .ok_or_else(|| err(ln + 1, format!("bad property type {t1:?}")))?;
                    let pname = parts.next().unwrap_or("").to_string();
                    element.properties.push(PlyProperty::Scalar(t, pname));
                }
            }
            Some("comment") | Some("obj_info") | Some("end_header") | Some("ply") => {}
            Some(other) => return Err(err(ln + 1, format!("unknown header record {other:?}"))),
            None => {}
        }
    }

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let header_lines = lines.len();

    if ascii {
        let body = String::from_utf8_lossy(&bytes[pos..]).to_string();
        let mut body_lines = body.lines().filter(|l| !l.trim().is_empty());
        for element in &elements {
            for row in 0..element.count {
                let line = body_lines.next().ok_or_else(|| {
                    err(header_lines + row, format!("truncated element {}", element.name))
                })?;
                let mut toks = line.split_whitespace();
                let mut xyz = [0.0f64; 3];
                let mut face: Vec<usize> = Vec::new();
                for prop in &element.properties {
                    match prop {
                        PlyProperty::Scalar(_, pname) => {
                            let tok = toks.next().ok_or_else(|| {
                                err(header_lines + row, "short property row".into())
                            })?;
                            let val: f64 = tok.parse().map_err(|_| {
                                err(header_lines + row, format!("bad value {tok:?}"))
                            })?;
                            match pname.as_str() {
                                "x" => xyz[0] = val,
                                "y" => xyz[1] = val,
                                "z" => xyz[2] = val,
                                _ => {}
                            }
                        }
                        PlyProperty::List(_, _, pname) => {
                            let count: usize = toks
                                .next()
                                .and_then(|t| t.parse().ok())
                                .ok_or_else(|| err(header_lines + row, "bad list count".into()))?;
                            let mut items = Vec::with_capacity(count);
                            for _ in 0..count {
                                let tok = toks.next().ok_or_else(|| {
                                    err(header_lines + row, "short list row".into())
                                })?;
                                let val: i64 = tok.parse().map_err(|_| {
                                    err(header_lines + row, format!("bad index {tok:?}"))
                                })?;
                                items.push(val as usize);
                            }
                            if pname == "vertex_indices" || pname == "vertex_index" {
                                face = items;
                            }
                        }
                    }
                }
                if element.name == "vertex" {
                    vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
                } else if element.name == "face" {
                    if face.len() != 3 {
                        return Err(err(
                            header_lines + row,
                            format!("face with {} vertices; only triangles are supported", face.len()),
                        ));
                    }
                    triangles.push([face[0], face[1], face[2]]);
                }
            }
        }
    } else {
        let mut cursor = pos;
        let mut take = |n: usize, what: &str| -> Result<&[u8]> {
            if cursor + n > bytes.len() {
                return Err(err(header_lines, format!("truncated binary data in {what}")));
            }
            let s = &bytes[cursor..cursor + n];
            cursor += n;
            Ok(s)
        };
        for element in &elements {
            for _ in 0..element.count {
                let mut xyz = [0.0f64; 3];
                let mut face: Vec<usize> = Vec::new();
                for prop in &element.properties {
                    match prop {
                        PlyProperty::Scalar(t, pname) => {
                            let raw = take(t.size(), &element.name)?;
                            let val = t.read_f64(raw);
                            match pname.as_str() {
                                "x" => xyz[0] = val,
                                "y" => xyz[1] = val,
                                "z" => xyz[2] = val,
                                _ => {}
                            }
                        }
                        PlyProperty::List(count_t, item_t, pname) => {
                            let raw = take(count_t.size(), &element.name)?;
                            let count = count_t.read_f64(raw) as usize;
                            let mut items = Vec::with_capacity(count);
                            for _ in 0..count {
                                let raw = take(item_t.size(), &element.name)?;
                                items.push(item_t.read_f64(raw) as usize);
                            }
                            if pname == "vertex_indices" || pname == "vertex_index" {
                                face = items;
                            }
                        }
                    }
                }
                if element.name == "vertex" {
                    vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
                } else if element.name == "face" {
                    if face.len() != 3 {
                        return Err(err(
                            header_lines,
                            format!("face with {} vertices; only triangles are supported", face.len()),
                        ));
                    }
                    triangles.push([face[0], face[1], face[2]]);
                }
            }
        }
    }

    Ok((vertices, triangles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(content: &[u8], ext: &str) -> tempfile::TempPath {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(content).unwrap();
        f.into_temp_path()
    }

    #[test]
    fn obj_single_triangle() {
        let path = write_temp(b"# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n", ".obj");
        let mesh = load_mesh(&path, MeshFormat::Obj).unwrap();
        assert_eq!(mesh.triangles().len(), 1);
        assert_eq!(mesh.boundary_loops().len(), 1);
        assert_eq!(mesh.boundary_loops()[0].len(), 3);
    }

    #[test]
    fn obj_closed_tetrahedron() {
        let path = write_temp(
            b"v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 3 2\nf 1 2 4\nf 2 3 4\nf 1 4 3\n",
            ".obj",
        );
        let mesh = load_mesh(&path, MeshFormat::Obj).unwrap();
        assert_eq!(mesh.boundary_loops().len(), 0);
    }

    #[test]
    fn obj_non_manifold_rejected() {
        let path = write_temp(
            b"v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nv 1 1 1\nf 1 2 3\nf 1 2 4\nf 1 2 5\n",
            ".obj",
        );
        assert!(matches!(
            load_mesh(&path, MeshFormat::Obj),
            Err(Error::NonManifoldEdge { count: 3, .. })
        ));
    }

    #[test]
    fn obj_quad_face_rejected() {
        let path = write_temp(b"v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n", ".obj");
        assert!(load_mesh(&path, MeshFormat::Obj).is_err());
    }

    #[test]
    fn obj_round_trip_is_bit_exact() {
        let src = format!(
            "v {} {} {}\nv 1.5 0 0\nv 0 2.25 0\nf 1 2 3\n",
            0.1f64, -0.30000000000000004f64, 1e-17f64
        );
        let path = write_temp(src.as_bytes(), ".obj");
        let mesh = load_mesh(&path, MeshFormat::Obj).unwrap();
        let out = tempfile::Builder::new().suffix(".obj").tempfile().unwrap();
        save_obj(&mesh, out.path(), None).unwrap();
        let mesh2 = load_mesh(out.path(), MeshFormat::Obj).unwrap();
        for (a, b) in mesh.vertices().iter().zip(mesh2.vertices()) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
            assert_eq!(a.z.to_bits(), b.z.to_bits());
        }
    }

    #[test]
    fn ply_ascii_and_binary_agree() {
        let ascii = b"ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
        let path = write_temp(ascii, ".ply");
        let mesh_a = load_mesh(&path, MeshFormat::Ply).unwrap();

        let mut bin: Vec<u8> = Vec::new();
        bin.extend_from_slice(b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n");
        for v in [[0f32, 0., 0.], [1., 0., 0.], [0., 1., 0.]] {
            for c in v {
                bin.extend_from_slice(&c.to_le_bytes());
            }
        }
        bin.push(3);
        for i in [0i32, 1, 2] {
            bin.extend_from_slice(&i.to_le_bytes());
        }
        let path = write_temp(&bin, ".ply");
        let mesh_b = load_mesh(&path, MeshFormat::Ply).unwrap();

        assert_eq!(mesh_a.vertices().len(), mesh_b.vertices().len());
        assert_eq!(mesh_a.triangles(), mesh_b.triangles());
    }
}
