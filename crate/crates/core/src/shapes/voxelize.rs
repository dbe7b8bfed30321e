//! Solid voxelization of closed triangle meshes by parity counting along x.

use rayon::prelude::*;

use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::linalg::{vec_cast, Vec3};
use crate::ogroup::random_quat;
use crate::rng::stream;
use crate::scalar::Real;
use crate::volume::{Grid, ScalarVolume};

pub const DEFAULT_MAX_DIM: usize = 160;
const PAD: usize = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct VoxelizeOptions {
    /// Rotates the mesh by a random rotation drawn from this seed first.
    pub random_rotation: Option<u64>,
}

/// `orient(a, b, p)` with `p` perturbed by `(ε, ε²)`: never zero for a
/// non-degenerate edge, and antisymmetric in `(a, b)`, so a ray through a
/// shared edge or vertex is counted by exactly one of the adjacent triangles.
fn orient(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let o = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    if o != 0.0 {
        return o;
    }
    let first = -(b[1] - a[1]);
    if first != 0.0 {
        first
    } else {
        b[0] - a[0]
    }
}

/// x coordinate where the +x ray through `(y, z)` crosses the triangle, if it does.
fn crossing(t: &[Vec3<f64>; 3], y: f64, z: f64) -> Option<f64> {
    let p = [y, z];
    let q = t.map(|v| [v[1], v[2]]);
    let w0 = orient(q[1], q[2], p);
    let w1 = orient(q[2], q[0], p);
    let w2 = orient(q[0], q[1], p);
    let same = (w0 > 0.0 && w1 > 0.0 && w2 > 0.0) || (w0 < 0.0 && w1 < 0.0 && w2 < 0.0);
    if !same {
        return None;
    }
    let s = w0 + w1 + w2;
    Some((w0 * t[0][0] + w1 * t[1][0] + w2 * t[2][0]) / s)
}

/// Binary volume of the solid bounded by a watertight mesh.
///
/// The longest bounding-box side spans `grid_max_dim` voxels. The result is
/// recentered on its centroid and copied onto a cube enclosing the support
/// ball with a small far-field margin.
pub fn voxelize_mesh<T: Real>(
    mesh: &TriangleMesh<T>,
    grid_max_dim: usize,
    opts: VoxelizeOptions,
) -> Result<ScalarVolume<T>> {
    if !mesh.is_watertight() {
        return Err(Error::NotWatertight(mesh.open_edges()));
    }
    if grid_max_dim < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid_max_dim must be >= 2, got {grid_max_dim}"
        )));
    }
    let mesh: TriangleMesh<f64> = {
        let verts = mesh.vertices().iter().map(vec_cast::<T, f64>).collect();
        let m = TriangleMesh::new(verts, mesh.faces().to_vec())?;
        match opts.random_rotation {
            Some(seed) => m.transformed(&random_quat::<f64>(&mut stream(seed, &[])).to_mat()),
            None => m,
        }
    };
    let (lo, hi) = mesh.bounds();
    let extent = (0..3).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    if !(extent > 0.0) {
        return Err(Error::DegenerateMesh("zero extent".into()));
    }
    let h = extent / grid_max_dim as f64;
    let dims: [usize; 3] = std::array::from_fn(|a| ((hi[a] - lo[a]) / h).ceil() as usize + 2 * PAD);
    let origin: Vec3<f64> = std::array::from_fn(|a| {
        let mid = (lo[a] + hi[a]) / 2.0;
        mid - h * (dims[a] as f64 - 1.0) / 2.0
    });
    let tris: Vec<[Vec3<f64>; 3]> = (0..mesh.faces().len()).map(|f| mesh.triangle(f)).collect();

    // Triangles bucketed by the z rows their projection can reach.
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); dims[2]];
    for (f, t) in tris.iter().enumerate() {
        let zmin = t.iter().map(|v| v[2]).fold(f64::INFINITY, f64::min);
        let zmax = t.iter().map(|v| v[2]).fold(f64::NEG_INFINITY, f64::max);
        let k0 = (((zmin - origin[2]) / h).floor().max(0.0)) as usize;
        let k1 = (((zmax - origin[2]) / h).ceil() as usize).min(dims[2] - 1);
        for row in rows.iter_mut().take(k1 + 1).skip(k0) {
            row.push(f);
        }
    }

    let values: Vec<Vec<T>> = (0..dims[1] * dims[2])
        .into_par_iter()
        .map(|jk| {
            let (j, k) = (jk % dims[1], jk / dims[1]);
            let y = origin[1] + h * j as f64;
            let z = origin[2] + h * k as f64;
            let mut xs: Vec<f64> = rows[k]
                .iter()
                .filter(|&&f| {
                    let t = &tris[f];
                    let ymin = t.iter().map(|v| v[1]).fold(f64::INFINITY, f64::min);
                    let ymax = t.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max);
                    y >= ymin && y <= ymax
                })
                .filter_map(|&f| crossing(&tris[f], y, z))
                .collect();
            xs.sort_by(f64::total_cmp);
            let mut line = vec![T::one(); dims[0]];
            for pair in xs.chunks_exact(2) {
                let i0 = ((pair[0] - origin[0]) / h).ceil().max(0.0) as usize;
                let i1 = ((pair[1] - origin[0]) / h).floor();
                if i1 < 0.0 {
                    continue;
                }
                for v in line
                    .iter_mut()
                    .take((i1 as usize + 1).min(dims[0]))
                    .skip(i0)
                {
                    *v = T::zero();
                }
            }
            line
        })
        .collect();
    // Lines are (j, k)-major; the volume is x-fastest with the same order.
    let flat: Vec<T> = values.into_iter().flatten().collect();
    let vol = ScalarVolume::with_background(
        Grid::new(dims, T::lit(h), origin.map(T::lit))?,
        flat,
        T::one(),
    )?;
    if !vol.values().iter().any(|v| *v < T::lit(0.5)) {
        return Err(Error::EmptyShape);
    }
    let (centered, _) = vol.recenter()?;
    let r = centered.support_radius();
    let half = (r.as_f64() / h).ceil() as usize + PAD;
    Ok(centered.cube_around_origin(half))
}
