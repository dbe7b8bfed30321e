//! Analytic test solids, asymmetry injection and mesh voxelization.

mod mesh;
mod voxelize;

pub use mesh::{box_mesh, convex_hull_mesh, platonic_mesh, read_mesh, TriangleMesh};
pub use voxelize::{voxelize_mesh, VoxelizeOptions, DEFAULT_MAX_DIM};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub, Vec3};
use crate::scalar::Real;
use crate::volume::{Grid, ScalarVolume};

/// Smallest `grid_max_dim` accepted by [`gen_primitive`].
pub const MIN_GRID_DIM: usize = 16;
/// Far-field voxels added on each side of generated grids.
const PAD: usize = 2;

pub const GOLDEN: f64 = 1.618_033_988_749_895;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platonic {
    Tetrahedron,
    Cube,
    Octahedron,
    Icosahedron,
    Dodecahedron,
}

impl Platonic {
    /// Vertices on the unit sphere.
    pub fn vertices(self) -> Vec<Vec3<f64>> {
        let g = GOLDEN;
        let mut v: Vec<Vec3<f64>> = Vec::new();
        let signs = |n: usize| -> Vec<Vec<f64>> {
            (0..1usize << n)
                .map(|m| {
                    (0..n)
                        .map(|b| if m >> b & 1 == 1 { -1.0 } else { 1.0 })
                        .collect()
                })
                .collect()
        };
        let cyclic = |v: &mut Vec<Vec3<f64>>, p: [f64; 3]| {
            for s in signs(2) {
                let q = [0.0, p[1] * s[0], p[2] * s[1]];
                v.push([q[0], q[1], q[2]]);
                v.push([q[2], q[0], q[1]]);
                v.push([q[1], q[2], q[0]]);
            }
        };
        match self {
            Platonic::Tetrahedron => {
                v = vec![
                    [1.0, 1.0, 1.0],
                    [1.0, -1.0, -1.0],
                    [-1.0, 1.0, -1.0],
                    [-1.0, -1.0, 1.0],
                ];
            }
            Platonic::Cube => v = signs(3).into_iter().map(|s| [s[0], s[1], s[2]]).collect(),
            Platonic::Octahedron => {
                for a in 0..3 {
                    for s in [1.0, -1.0] {
                        let mut p = [0.0; 3];
                        p[a] = s;
                        v.push(p);
                    }
                }
            }
            Platonic::Icosahedron => cyclic(&mut v, [0.0, 1.0, g]),
            Platonic::Dodecahedron => {
                v = signs(3).into_iter().map(|s| [s[0], s[1], s[2]]).collect();
                cyclic(&mut v, [0.0, 1.0 / g, g]);
            }
        }
        v.into_iter()
            .map(|p| crate::linalg::scale(&p, 1.0 / norm(&p)))
            .collect()
    }

    /// Outward unit normals and offsets `(n, d)` of the faces of the solid with
    /// unit circumradius; the solid is `{x : n·x ≤ d for all faces}`.
    pub fn half_spaces(self) -> Vec<(Vec3<f64>, f64)> {
        mesh::hull_planes(&self.vertices())
    }

    pub fn inradius_ratio(self) -> f64 {
        self.half_spaces()[0].1
    }
}

/// Analytically defined solids, all centered on the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Primitive {
    Ball {
        radius: f64,
    },
    Box {
        half_extents: [f64; 3],
    },
    /// Axis along z.
    Cylinder {
        radius: f64,
        half_height: f64,
    },
    Platonic {
        solid: Platonic,
        circumradius: f64,
    },
    /// Cube `[-half, half]³` cut into `cells³` cells, keeping only square bars
    /// of side `strut` along every lattice line.
    Lattice {
        half: f64,
        cells: usize,
        strut: f64,
    },
    /// Union of balls `(center, radius)`.
    Balls {
        balls: Vec<(Vec3<f64>, f64)>,
    },
}

impl Primitive {
    pub fn icosahedron(circumradius: f64) -> Self {
        Primitive::Platonic {
            solid: Platonic::Icosahedron,
            circumradius,
        }
    }

    pub fn dodecahedron(circumradius: f64) -> Self {
        Primitive::Platonic {
            solid: Platonic::Dodecahedron,
            circumradius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{what} must be positive, got {x}"
                )))
            }
        };
        match self {
            Primitive::Ball { radius } => positive(*radius, "radius"),
            Primitive::Box { half_extents } => half_extents
                .iter()
                .try_for_each(|&e| positive(e, "half extent")),
            Primitive::Cylinder {
                radius,
                half_height,
            } => {
                positive(*radius, "radius")?;
                positive(*half_height, "half height")
            }
            Primitive::Platonic { circumradius, .. } => positive(*circumradius, "circumradius"),
            Primitive::Lattice { half, cells, strut } => {
                positive(*half, "half side")?;
                positive(*strut, "strut")?;
                if *cells == 0 || *strut >= 2.0 * half / *cells as f64 {
                    return Err(Error::InvalidParameter(
                        "lattice needs cells >= 1 and strut below the cell size".into(),
                    ));
                }
                Ok(())
            }
            Primitive::Balls { balls } => {
                if balls.is_empty() {
                    return Err(Error::InvalidParameter("no balls given".into()));
                }
                balls.iter().try_for_each(|(_, r)| positive(*r, "radius"))
            }
        }
    }

    /// Half side of the axis-aligned bounding cube centered on the origin.
    pub fn bounding_half(&self) -> f64 {
        match self {
            Primitive::Ball { radius } => *radius,
            Primitive::Box { half_extents } => half_extents.iter().cloned().fold(0.0, f64::max),
            Primitive::Cylinder {
                radius,
                half_height,
            } => radius.max(*half_height),
            Primitive::Platonic { circumradius, .. } => *circumradius,
            Primitive::Lattice { half, .. } => *half,
            Primitive::Balls { balls } => balls
                .iter()
                .map(|(c, r)| c.iter().map(|x| x.abs()).fold(0.0, f64::max) + r)
                .fold(0.0, f64::max),
        }
    }

    /// Radius of the smallest origin-centered ball containing the solid.
    pub fn circumradius(&self) -> f64 {
        match self {
            Primitive::Ball { radius } => *radius,
            Primitive::Box { half_extents } => norm(half_extents),
            Primitive::Cylinder {
                radius,
                half_height,
            } => radius.hypot(*half_height),
            Primitive::Platonic { circumradius, .. } => *circumradius,
            Primitive::Lattice { half, .. } => half * 3f64.sqrt(),
            Primitive::Balls { balls } => {
                balls.iter().map(|(c, r)| norm(c) + r).fold(0.0, f64::max)
            }
        }
    }

    /// Membership test for a point.
    pub fn contains(&self, p: &Vec3<f64>) -> bool {
        match self {
            Primitive::Ball { radius } => dot(p, p) <= radius * radius,
            Primitive::Box { half_extents } => (0..3).all(|a| p[a].abs() <= half_extents[a]),
            Primitive::Cylinder {
                radius,
                half_height,
            } => p[0] * p[0] + p[1] * p[1] <= radius * radius && p[2].abs() <= *half_height,
            Primitive::Platonic {
                solid,
                circumradius,
            } => solid
                .half_spaces()
                .iter()
                .all(|(n, d)| dot(n, p) <= d * circumradius),
            Primitive::Lattice { half, cells, strut } => {
                if p.iter().any(|x| x.abs() > *half) {
                    return false;
                }
                let cell = 2.0 * half / *cells as f64;
                let near_plane = |x: f64| {
                    let t = (x + half) / cell;
                    (t - t.round()).abs() * cell <= strut / 2.0
                };
                p.iter().filter(|&&x| near_plane(x)).count() >= 2
            }
            Primitive::Balls { balls } => balls.iter().any(|(c, r)| {
                let d = sub(p, c);
                dot(&d, &d) <= r * r
            }),
        }
    }
}

/// Binary volume of a primitive: interior 0, exterior and far field 1.
///
/// The bounding cube of the solid spans `grid_max_dim` voxels; the grid is a
/// centered cube large enough to hold the support ball plus a small pad.
pub fn gen_primitive<T: Real>(prim: &Primitive, grid_max_dim: usize) -> Result<ScalarVolume<T>> {
    prim.validate()?;
    if grid_max_dim < MIN_GRID_DIM {
        return Err(Error::InvalidParameter(format!(
            "grid_max_dim must be >= {MIN_GRID_DIM}, got {grid_max_dim}"
        )));
    }
    let h = 2.0 * prim.bounding_half() / grid_max_dim as f64;
    let n = 2 * ((prim.circumradius() / h).ceil() as usize + PAD);
    let grid = Grid::centered([n; 3], T::lit(h))?;
    // Platonic half-spaces are computed once instead of per voxel.
    let planes = match prim {
        Primitive::Platonic {
            solid,
            circumradius,
        } => solid
            .half_spaces()
            .into_iter()
            .map(|(nrm, d)| (nrm, d * circumradius))
            .collect(),
        _ => Vec::new(),
    };
    ScalarVolume::from_fn(grid, T::one(), |c| {
        let p = crate::linalg::vec_cast::<T, f64>(&c);
        let inside = if planes.is_empty() {
            prim.contains(&p)
        } else {
            planes.iter().all(|(nrm, d)| dot(nrm, &p) <= *d)
        };
        if inside {
            T::zero()
        } else {
            T::one()
        }
    })
}

/// Flips the binary phase of every voxel whose center lies in `B_eps(center)`.
pub fn inject_asymmetry<T: Real>(
    vol: &ScalarVolume<T>,
    center: &Vec3<T>,
    eps: T,
) -> Result<ScalarVolume<T>> {
    if !(eps >= T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "eps must be >= 0, got {eps}"
        )));
    }
    let g = vol.grid();
    let h = g.spacing;
    let lo = g.center(0, 0, 0);
    for a in 0..3 {
        let hi = lo[a] + h * T::of_usize(g.dims[a] - 1);
        if center[a] - eps < lo[a] - h / T::lit(2.0) || center[a] + eps > hi + h / T::lit(2.0) {
            return Err(Error::OutOfGrid);
        }
    }
    if eps == T::zero() {
        return Ok(vol.clone());
    }
    let values = (0..g.len())
        .map(|idx| {
            let [i, j, k] = g.coords(idx);
            let v = vol.values()[idx];
            let d = sub(&g.center(i, j, k), center);
            if dot(&d, &d) <= eps * eps {
                T::one() - v
            } else {
                v
            }
        })
        .collect();
    ScalarVolume::with_background(*g, values, vol.background())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inside_count(v: &ScalarVolume<f64>) -> usize {
        v.values().iter().filter(|&&x| x < 0.5).count()
    }

    #[test]
    fn ball_volume_matches() {
        let v = gen_primitive::<f64>(&Primitive::Ball { radius: 1.0 }, 128).unwrap();
        let h = v.spacing();
        let want = 4.0 / 3.0 * std::f64::consts::PI / (h * h * h);
        let got = inside_count(&v) as f64;
        assert!((got - want).abs() / want < 0.02, "{got} vs {want}");
    }

    #[test]
    fn platonic_face_counts() {
        assert_eq!(Platonic::Icosahedron.half_spaces().len(), 20);
        assert_eq!(Platonic::Dodecahedron.half_spaces().len(), 12);
        assert_eq!(Platonic::Cube.half_spaces().len(), 6);
        assert_eq!(Platonic::Tetrahedron.half_spaces().len(), 4);
        assert_eq!(Platonic::Octahedron.half_spaces().len(), 8);
        assert!((Platonic::Icosahedron.inradius_ratio() - 0.794_654_5).abs() < 1e-6);
    }

    #[test]
    fn rejects_small_grids() {
        assert!(gen_primitive::<f64>(&Primitive::Ball { radius: 1.0 }, 8).is_err());
        assert!(gen_primitive::<f64>(&Primitive::Ball { radius: -1.0 }, 32).is_err());
    }

    #[test]
    fn lattice_is_sparse() {
        let lat = Primitive::Lattice {
            half: 1.0,
            cells: 4,
            strut: 0.1,
        };
        assert!(lat.contains(&[0.0, 0.0, 0.3]));
        assert!(!lat.contains(&[0.25, 0.25, 0.25]));
        assert!(!lat.contains(&[0.0, 0.25, 0.3]));
    }

    #[test]
    fn inject_zero_is_identity() {
        let v = gen_primitive::<f64>(&Primitive::Ball { radius: 1.0 }, 16).unwrap();
        assert_eq!(inject_asymmetry(&v, &[0.5, 0.0, 0.0], 0.0).unwrap(), v);
        assert_eq!(
            inject_asymmetry(&v, &[50.0, 0.0, 0.0], 0.1),
            Err(Error::OutOfGrid)
        );
        let w = inject_asymmetry(&v, &[0.5, 0.0, 0.0], 0.3).unwrap();
        assert!(inside_count(&w) < inside_count(&v));
    }
}
