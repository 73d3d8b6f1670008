//! Wavefront OBJ subset: `v` and triangular `f` records.

use std::fmt::Write as _;

use afm::mesh::MeshError;
use afm::{ExactPoint2, ExactPoint3, Point2, Point3, TriMesh};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("face on line {line} has {count} corners; only triangles are supported")]
    NotTriangle { line: usize, count: usize },
    #[error("line {line}: vertex index {index} out of range")]
    BadIndex { line: usize, index: i64 },
    #[error("mesh has no triangles")]
    Empty,
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Binary64 positions and zero-based triangles as read from a file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjMesh {
    pub positions: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl ObjMesh {
    pub fn parse(text: &str) -> Result<ObjMesh, ObjError> {
        let mut mesh = ObjMesh::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("");
            let mut tok = body.split_whitespace();
            match tok.next() {
                Some("v") => {
                    let mut p = [0.0; 3];
                    for (k, c) in p.iter_mut().enumerate() {
                        let s = tok
                            .next()
                            .ok_or_else(|| parse_err(line, format!("vertex needs 3 coordinates, got {k}")))?;
                        *c = s.parse().map_err(|e| parse_err(line, format!("bad coordinate {s:?}: {e}")))?;
                    }
                    mesh.positions.push(p);
                }
                Some("f") => {
                    let corners: Vec<&str> = tok.collect();
                    if corners.len() != 3 {
                        return Err(ObjError::NotTriangle { line, count: corners.len() });
                    }
                    let mut t = [0u32; 3];
                    for (slot, c) in t.iter_mut().zip(&corners) {
                        let head = c.split('/').next().unwrap_or("");
                        let idx: i64 = head.parse().map_err(|e| parse_err(line, format!("bad index {c:?}: {e}")))?;
                        let n = mesh.positions.len() as i64;
                        let zero_based = if idx > 0 { idx - 1 } else { n + idx };
                        if idx == 0 || zero_based < 0 || zero_based >= n {
                            return Err(ObjError::BadIndex { line, index: idx });
                        }
                        *slot = zero_based as u32;
                    }
                    mesh.triangles.push(t);
                }
                _ => {}
            }
        }
        Ok(mesh)
    }

    /// Text with shortest round-trip decimals and one-based indices.
    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(40 * (self.positions.len() + self.triangles.len()));
        for p in &self.positions {
            let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }

    pub fn to_exact(&self) -> Result<TriMesh<ExactPoint3>, ObjError> {
        if self.triangles.is_empty() {
            return Err(ObjError::Empty);
        }
        let pos = self
            .positions
            .iter()
            .enumerate()
            .map(|(i, &p)| Point3::from_f64(p).ok_or(ObjError::NonFinite(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TriMesh::build(pos, self.triangles.clone())?)
    }

    /// Planar exact mesh from the `x, y` coordinates; `z` is ignored.
    pub fn to_exact_2d(&self) -> Result<TriMesh<ExactPoint2>, ObjError> {
        if self.triangles.is_empty() {
            return Err(ObjError::Empty);
        }
        let pos = self
            .positions
            .iter()
            .enumerate()
            .map(|(i, &p)| Point2::from_f64([p[0], p[1]]).ok_or(ObjError::NonFinite(i)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TriMesh::build(pos, self.triangles.clone())?)
    }

    pub fn from_source(m: &TriMesh<ExactPoint3>) -> ObjMesh {
        ObjMesh { positions: m.positions.iter().map(|p| p.to_f64()).collect(), triangles: m.triangles().to_vec() }
    }

    /// Nearest binary64 image of a target mesh, with `z = 0`.
    pub fn from_target(m: &TriMesh<ExactPoint2>) -> ObjMesh {
        ObjMesh {
            positions: m
                .positions
                .iter()
                .map(|p| {
                    let [x, y] = p.to_f64();
                    [x, y, 0.0]
                })
                .collect(),
            triangles: m.triangles().to_vec(),
        }
    }

    pub fn is_planar(&self) -> bool {
        self.positions.iter().all(|p| p[2] == 0.0)
    }
}

fn parse_err(line: usize, msg: String) -> ObjError {
    ObjError::Parse { line, msg }
}
