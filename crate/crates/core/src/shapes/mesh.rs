//! Triangle meshes: validation, OFF/OBJ text formats and convex-hull meshes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::Platonic;
use crate::error::{Error, Result};
use crate::linalg::{cross, dot, norm, scale, sub, vec_cast, Mat3, Vec3};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh<T: Real> {
    vertices: Vec<Vec3<T>>,
    faces: Vec<[usize; 3]>,
    open_edges: usize,
}

impl<T: Real> TriangleMesh<T> {
    /// Validates indices, drops zero-area faces and counts edges not shared
    /// by exactly two faces.
    pub fn new(vertices: Vec<Vec3<T>>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if let Some(f) = faces
            .iter()
            .find(|f| f.iter().any(|&i| i >= vertices.len()))
        {
            return Err(Error::Format(format!(
                "face {f:?} indexes past {} vertices",
                vertices.len()
            )));
        }
        let faces: Vec<[usize; 3]> = faces
            .into_iter()
            .filter(|f| {
                let [a, b, c] = f.map(|i| vec_cast::<T, f64>(&vertices[i]));
                norm(&cross(&sub(&b, &a), &sub(&c, &a))) > 0.0
            })
            .collect();
        if faces.is_empty() {
            return Err(Error::DegenerateMesh("no faces with positive area".into()));
        }
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &faces {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let open_edges = edges.values().filter(|&&c| c != 2).count();
        Ok(Self {
            vertices,
            faces,
            open_edges,
        })
    }

    pub fn vertices(&self) -> &[Vec3<T>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    /// Every edge is shared by exactly two faces.
    pub fn is_watertight(&self) -> bool {
        self.open_edges == 0
    }

    pub fn open_edges(&self) -> usize {
        self.open_edges
    }

    pub fn triangle(&self, f: usize) -> [Vec3<T>; 3] {
        self.faces[f].map(|i| self.vertices[i])
    }

    /// Applies `m` to every vertex. Reflections reverse face orientation, which
    /// is restored so outward faces stay outward.
    pub fn transformed(&self, m: &Mat3<T>) -> Self {
        let flip = m.det() < T::zero();
        Self {
            vertices: self.vertices.iter().map(|v| m.apply(v)).collect(),
            faces: self
                .faces
                .iter()
                .map(|&[a, b, c]| if flip { [a, c, b] } else { [a, b, c] })
                .collect(),
            open_edges: self.open_edges,
        }
    }

    /// Enclosed volume by the divergence theorem; positive for outward faces.
    pub fn signed_volume(&self) -> T {
        let six = self.faces.iter().fold(T::zero(), |acc, f| {
            let [a, b, c] = f.map(|i| self.vertices[i]);
            acc + dot(&a, &cross(&b, &c))
        });
        six / T::lit(6.0)
    }

    pub fn bounds(&self) -> (Vec3<T>, Vec3<T>) {
        let mut lo = [T::infinity(); 3];
        let mut hi = [T::neg_infinity(); 3];
        for v in &self.vertices {
            for a in 0..3 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }

    /// Parses ASCII OFF. Polygons are triangulated as fans.
    pub fn parse_off(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        match tokens.next() {
            Some("OFF") => {}
            other => {
                return Err(Error::Format(format!(
                    "expected OFF header, found {other:?}"
                )))
            }
        }
        let mut next_num = |what: &str| -> Result<f64> {
            let t = tokens
                .next()
                .ok_or_else(|| Error::Format(format!("unexpected end of file reading {what}")))?;
            t.parse::<f64>()
                .map_err(|_| Error::Format(format!("bad {what}: {t:?}")))
        };
        let nv = next_num("vertex count")? as usize;
        let nf = next_num("face count")? as usize;
        let _ne = next_num("edge count")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let p = [
                next_num("coordinate")?,
                next_num("coordinate")?,
                next_num("coordinate")?,
            ];
            vertices.push(p.map(T::lit));
        }
        let mut faces = Vec::with_capacity(nf);
        for _ in 0..nf {
            let k = next_num("polygon size")? as usize;
            let poly = (0..k)
                .map(|_| next_num("vertex index").map(|x| x as usize))
                .collect::<Result<Vec<_>>>()?;
            fan(&poly, &mut faces)?;
        }
        Self::new(vertices, faces)
    }

    /// Parses the `v` and `f` records of ASCII OBJ; other records are ignored.
    /// Face entries may carry `/vt/vn` suffixes and negative indices.
    pub fn parse_obj(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            let bad = |msg: &str| Error::Format(format!("line {}: {msg}", lineno + 1));
            match it.next() {
                Some("v") => {
                    let c: Vec<f64> = it
                        .take(3)
                        .map(|t| t.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("bad vertex"))?;
                    if c.len() != 3 {
                        return Err(bad("vertex needs 3 coordinates"));
                    }
                    vertices.push([T::lit(c[0]), T::lit(c[1]), T::lit(c[2])]);
                }
                Some("f") => {
                    let poly = it
                        .map(|t| {
                            let i: i64 = t
                                .split('/')
                                .next()
                                .unwrap_or("")
                                .parse()
                                .map_err(|_| bad("bad face index"))?;
                            let n = vertices.len() as i64;
                            let idx = if i < 0 { n + i } else { i - 1 };
                            if idx < 0 {
                                return Err(bad("face index out of range"));
                            }
                            Ok(idx as usize)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    fan(&poly, &mut faces)?;
                }
                _ => {}
            }
        }
        Self::new(vertices, faces)
    }

    pub fn to_off(&self) -> String {
        let mut s = format!("OFF\n{} {} 0\n", self.vertices.len(), self.faces.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{} {} {}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
        }
        s
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", v[0], v[1], v[2]);
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
        }
        s
    }

    /// Writes OBJ for a `.obj` extension, OFF otherwise.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if has_ext(path, "obj") {
            self.to_obj()
        } else {
            self.to_off()
        };
        Ok(std::fs::write(path, text)?)
    }
}

fn fan(poly: &[usize], faces: &mut Vec<[usize; 3]>) -> Result<()> {
    if poly.len() < 3 {
        return Err(Error::Format(format!(
            "polygon with {} vertices",
            poly.len()
        )));
    }
    for i in 1..poly.len() - 1 {
        faces.push([poly[0], poly[i], poly[i + 1]]);
    }
    Ok(())
}

fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Reads an OFF or OBJ file, chosen by extension (OFF when unknown).
pub fn read_mesh<T: Real>(path: impl AsRef<Path>) -> Result<TriangleMesh<T>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    if has_ext(path, "obj") {
        TriangleMesh::parse_obj(&text)
    } else {
        TriangleMesh::parse_off(&text)
    }
}

const HULL_TOL: f64 = 1e-9;

/// Supporting planes `(unit outward normal, offset)` of the convex hull of a
/// small point set, by testing every vertex triple.
pub(crate) fn hull_planes(points: &[Vec3<f64>]) -> Vec<(Vec3<f64>, f64)> {
    let n = points.len();
    let mut planes: Vec<(Vec3<f64>, f64)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let c = cross(&sub(&points[j], &points[i]), &sub(&points[k], &points[i]));
                let len = norm(&c);
                if len < HULL_TOL {
                    continue;
                }
                let mut nrm = scale(&c, 1.0 / len);
                let mut d = dot(&nrm, &points[i]);
                let side: Vec<f64> = points.iter().map(|p| dot(&nrm, p) - d).collect();
                if side.iter().all(|&s| s <= HULL_TOL) {
                } else if side.iter().all(|&s| s >= -HULL_TOL) {
                    nrm = scale(&nrm, -1.0);
                    d = -d;
                } else {
                    continue;
                }
                if !planes
                    .iter()
                    .any(|(m, e)| dot(m, &nrm) > 1.0 - HULL_TOL && (e - d).abs() < HULL_TOL)
                {
                    planes.push((nrm, d));
                }
            }
        }
    }
    planes
}

/// Closed, outward-oriented triangulation of the convex hull of `points`.
pub fn convex_hull_mesh<T: Real>(points: &[Vec3<f64>]) -> Result<TriangleMesh<T>> {
    let planes = hull_planes(points);
    if planes.len() < 4 {
        return Err(Error::DegenerateMesh("points are coplanar".into()));
    }
    let mut faces = Vec::new();
    for (nrm, d) in &planes {
        let mut on: Vec<usize> = (0..points.len())
            .filter(|&i| (dot(nrm, &points[i]) - d).abs() < 1e-7)
            .collect();
        let c = scale(
            &on.iter()
                .fold([0.0; 3], |acc, &i| crate::linalg::add(&acc, &points[i])),
            1.0 / on.len() as f64,
        );
        let u = crate::linalg::normalized(&sub(&points[on[0]], &c)).expect("face has extent");
        let v = cross(nrm, &u);
        let ang = |i: usize| {
            let w = sub(&points[i], &c);
            dot(&w, &v).atan2(dot(&w, &u))
        };
        on.sort_by(|&a, &b| ang(a).total_cmp(&ang(b)));
        fan(&on, &mut faces)?;
    }
    TriangleMesh::new(points.iter().map(|p| p.map(T::lit)).collect(), faces)
}

/// Mesh of a platonic solid with the given circumradius.
pub fn platonic_mesh<T: Real>(solid: Platonic, circumradius: f64) -> Result<TriangleMesh<T>> {
    let pts: Vec<Vec3<f64>> = solid
        .vertices()
        .iter()
        .map(|p| scale(p, circumradius))
        .collect();
    convex_hull_mesh(&pts)
}

/// Axis-aligned box `[-e, e]`, 12 triangles.
pub fn box_mesh<T: Real>(half_extents: [f64; 3]) -> Result<TriangleMesh<T>> {
    let pts: Vec<Vec3<f64>> = Platonic::Cube
        .vertices()
        .iter()
        .map(|p| std::array::from_fn(|a| p[a].signum() * half_extents[a]))
        .collect();
    convex_hull_mesh(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_meshes_are_closed() {
        for (solid, faces) in [
            (Platonic::Icosahedron, 20),
            (Platonic::Dodecahedron, 36),
            (Platonic::Cube, 12),
        ] {
            let m = platonic_mesh::<f64>(solid, 1.0).unwrap();
            assert!(m.is_watertight());
            assert_eq!(m.faces().len(), faces);
            assert!(m.signed_volume() > 0.0);
        }
        let b = box_mesh::<f64>([1.0, 2.0, 3.0]).unwrap();
        assert!((b.signed_volume() - 48.0).abs() < 1e-9);
    }

    #[test]
    fn off_roundtrip() {
        let m = platonic_mesh::<f64>(Platonic::Icosahedron, 2.0).unwrap();
        let back = TriangleMesh::<f64>::parse_off(&m.to_off()).unwrap();
        assert_eq!(back, m);
        let back = TriangleMesh::<f64>::parse_obj(&m.to_obj()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn quads_are_fanned() {
        let text = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let m = TriangleMesh::<f64>::parse_off(text).unwrap();
        assert_eq!(m.faces(), &[[0, 1, 2], [0, 2, 3]]);
        assert!(!m.is_watertight());
    }

    #[test]
    fn bad_index_rejected() {
        assert!(
            TriangleMesh::<f64>::parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n").is_err()
        );
        assert!(TriangleMesh::<f64>::parse_off("OFX\n").is_err());
    }

    #[test]
    fn reflection_keeps_orientation() {
        let m = platonic_mesh::<f64>(Platonic::Dodecahedron, 1.0).unwrap();
        let r = m.transformed(&Mat3::householder(&[0.0, 0.0, 1.0]));
        assert!((r.signed_volume() - m.signed_volume()).abs() < 1e-12);
    }
}
