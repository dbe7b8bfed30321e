//! Scalar voxel volumes and the level-set shape representation built on them.

mod edt;
mod io;
mod levelset;

pub use edt::{signed_distance, DistanceField};
pub use io::{read_pasvol, write_pasvol, PASVOL_MAGIC};
pub use levelset::{
    auto_truncation, truncate_levelset, AutoTruncation, ShapeRepresentation, ShapeStats,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{norm, Vec3};
use crate::scalar::Real;

/// Values closer than this to the far-field value count as far field.
pub(crate) const BACKGROUND_TOL: f64 = 1e-6;

/// Uniform axis-aligned lattice: voxel `(i, j, k)` has its center at
/// `origin + spacing * (i, j, k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid<T: Real> {
    pub dims: [usize; 3],
    pub spacing: T,
    pub origin: Vec3<T>,
}

impl<T: Real> Grid<T> {
    pub fn new(dims: [usize; 3], spacing: T, origin: Vec3<T>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidVolume(format!(
                "dims must be >= 1, got {dims:?}"
            )));
        }
        if !(spacing > T::zero()) || !spacing.is_finite() {
            return Err(Error::InvalidVolume(format!(
                "spacing must be > 0, got {spacing}"
            )));
        }
        Ok(Self {
            dims,
            spacing,
            origin,
        })
    }

    /// Grid whose voxel centers are symmetric about the world origin.
    pub fn centered(dims: [usize; 3], spacing: T) -> Result<Self> {
        let half = T::lit(0.5);
        let origin = [0, 1, 2].map(|a| -T::of_usize(dims[a].saturating_sub(1)) * half * spacing);
        Self::new(dims, spacing, origin)
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline(always)]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline(always)]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    #[inline(always)]
    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3<T> {
        [
            self.origin[0] + self.spacing * T::of_usize(i),
            self.origin[1] + self.spacing * T::of_usize(j),
            self.origin[2] + self.spacing * T::of_usize(k),
        ]
    }

    pub fn voxel_volume(&self) -> T {
        self.spacing * self.spacing * self.spacing
    }

    /// Lattice index (possibly outside the grid) closest to the world origin.
    fn origin_index(&self) -> [i64; 3] {
        [0, 1, 2].map(|a| {
            (-self.origin[a] / self.spacing)
                .round()
                .to_i64()
                .unwrap_or(0)
        })
    }
}

/// Dense voxel grid holding a level-set function with values in `[0, 1]`,
/// x-fastest layout.
///
/// Points outside the grid read as the far-field value (`background`), which
/// is the constant the function takes outside its support ball.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarVolume<T: Real> {
    grid: Grid<T>,
    values: Vec<T>,
    background: T,
}

impl<T: Real> ScalarVolume<T> {
    /// Builds a volume and infers the far-field value from the grid corners.
    pub fn new(dims: [usize; 3], spacing: T, origin: Vec3<T>, values: Vec<T>) -> Result<Self> {
        let grid = Grid::new(dims, spacing, origin)?;
        let background = corner_background(&grid, &values)?;
        Self::with_background(grid, values, background)
    }

    pub fn with_background(grid: Grid<T>, values: Vec<T>, background: T) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidVolume(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(bad) = values
            .iter()
            .find(|v| !(**v >= T::zero() && **v <= T::one()))
        {
            return Err(Error::InvalidVolume(format!("value {bad} outside [0, 1]")));
        }
        if !(background >= T::zero() && background <= T::one()) {
            return Err(Error::InvalidVolume(format!(
                "background {background} outside [0, 1]"
            )));
        }
        Ok(Self {
            grid,
            values,
            background,
        })
    }

    /// Evaluates `f` at every voxel center.
    pub fn from_fn(grid: Grid<T>, background: T, f: impl Fn(Vec3<T>) -> T + Sync) -> Result<Self> {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let [i, j, k] = grid.coords(idx);
                f(grid.center(i, j, k))
            })
            .collect();
        Self::with_background(grid, values, background)
    }

    pub fn constant(grid: Grid<T>, value: T) -> Result<Self> {
        Self::with_background(grid, vec![value; grid.len()], value)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn dims(&self) -> [usize; 3] {
        self.grid.dims
    }

    pub fn spacing(&self) -> T {
        self.grid.spacing
    }

    pub fn origin(&self) -> Vec3<T> {
        self.grid.origin
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn background(&self) -> T {
        self.background
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.grid.index(i, j, k)]
    }

    pub fn is_constant(&self) -> bool {
        let tol = T::lit(BACKGROUND_TOL);
        let first = self.values[0];
        (self.values.iter().all(|v| (*v - first).abs() <= tol))
            && (first - self.background).abs() <= tol
    }

    /// `s ↦ 1 - s`, including the far field.
    pub fn flipped(&self) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| T::one() - *v).collect(),
            background: T::one() - self.background,
        }
    }

    /// Trilinear interpolation; points outside the grid return the far-field value.
    pub fn sample_trilinear(&self, p: &Vec3<T>) -> T {
        let inv = T::one() / self.grid.spacing;
        let g = [0, 1, 2].map(|a| (p[a] - self.grid.origin[a]) * inv);
        self.sample_grid(&g)
    }

    /// Trilinear interpolation at continuous grid coordinates.
    #[inline(always)]
    pub fn sample_grid(&self, g: &Vec3<T>) -> T {
        let d = self.grid.dims;
        let mut base = [0usize; 3];
        let mut frac = [T::zero(); 3];
        for a in 0..3 {
            let x = g[a];
            let hi = T::of_usize(d[a] - 1);
            if !(x >= T::zero() && x <= hi) {
                return self.background;
            }
            if d[a] == 1 {
                base[a] = 0;
                frac[a] = T::zero();
                continue;
            }
            let f = x.floor();
            let mut i = f.to_usize().unwrap_or(0);
            let mut t = x - f;
            if i >= d[a] - 1 {
                i = d[a] - 2;
                t = T::one();
            }
            base[a] = i;
            frac[a] = t;
        }
        let sx = 1;
        let sy = d[0];
        let sz = d[0] * d[1];
        let step = |a: usize, s: usize| if d[a] > 1 { s } else { 0 };
        let (ox, oy, oz) = (step(0, sx), step(1, sy), step(2, sz));
        let i0 = base[0] + d[0] * (base[1] + d[1] * base[2]);
        let v = &self.values;
        let one = T::one();
        let (tx, ty, tz) = (frac[0], frac[1], frac[2]);
        let c00 = v[i0] * (one - tx) + v[i0 + ox] * tx;
        let c10 = v[i0 + oy] * (one - tx) + v[i0 + oy + ox] * tx;
        let c01 = v[i0 + oz] * (one - tx) + v[i0 + oz + ox] * tx;
        let c11 = v[i0 + oz + oy] * (one - tx) + v[i0 + oz + oy + ox] * tx;
        let c0 = c00 * (one - ty) + c10 * ty;
        let c1 = c01 * (one - ty) + c11 * ty;
        c0 * (one - tz) + c1 * tz
    }

    /// Centroid of the shape mass `|background - s|` in world coordinates.
    pub fn mass_centroid(&self) -> Result<Vec3<T>> {
        let (w, acc) = (0..self.grid.len())
            .into_par_iter()
            .map(|idx| {
                let m = (self.background - self.values[idx]).abs().as_f64();
                let [i, j, k] = self.grid.coords(idx);
                let c = self.grid.center(i, j, k);
                (m, [m * c[0].as_f64(), m * c[1].as_f64(), m * c[2].as_f64()])
            })
            .reduce(
                || (0.0, [0.0; 3]),
                |a, b| {
                    (
                        a.0 + b.0,
                        [a.1[0] + b.1[0], a.1[1] + b.1[1], a.1[2] + b.1[2]],
                    )
                },
            );
        if w <= BACKGROUND_TOL {
            return Err(Error::EmptyShape);
        }
        Ok([T::lit(acc[0] / w), T::lit(acc[1] / w), T::lit(acc[2] / w)])
    }

    /// Shifts the lattice by whole voxels so the mass centroid lands within half
    /// a voxel of the world origin. Values are untouched; only the origin moves.
    /// Returns the shifted volume and the applied shift in voxels.
    pub fn recenter(&self) -> Result<(Self, [i64; 3])> {
        let c = self.mass_centroid()?;
        let h = self.grid.spacing;
        let shift = c.map(|x| (-x / h).round().to_i64().unwrap_or(0));
        let mut out = self.clone();
        for (a, s) in shift.iter().enumerate() {
            out.grid.origin[a] = self.grid.origin[a] + h * T::lit(*s as f64);
        }
        Ok((out, shift))
    }

    /// Smallest radius outside which every voxel center holds the far-field value.
    pub fn support_radius(&self) -> T {
        let tol = T::lit(BACKGROUND_TOL);
        let bg = self.background;
        (0..self.grid.len())
            .into_par_iter()
            .filter(|&idx| (self.values[idx] - bg).abs() > tol)
            .map(|idx| {
                let [i, j, k] = self.grid.coords(idx);
                norm(&self.grid.center(i, j, k))
            })
            .reduce(T::zero, T::max)
    }

    /// Ball-normalized integral of the gradient magnitude over `B_r`.
    ///
    /// Gradients use central differences (one-sided at the grid border); the
    /// stencil band just outside the ball is included, see `gradient_norm_sum`.
    pub fn total_variation(&self, r: T) -> Result<T> {
        if !(r > T::zero()) {
            return Err(Error::DegenerateRadius(r.as_f64()));
        }
        let sum = gradient_norm_sum(&self.grid, r, |idx| self.values[idx]);
        let ball = T::lit(4.0 / 3.0) * T::PI() * r * r * r;
        Ok(T::lit(sum) * self.grid.voxel_volume() / ball)
    }

    /// Copies the volume onto the odd-sided cube of `2 * half + 1` voxels
    /// centered on the lattice point nearest the world origin, padding with the
    /// far-field value. No resampling takes place.
    pub fn cube_around_origin(&self, half: usize) -> Self {
        let c = self.grid.origin_index();
        let n = 2 * half + 1;
        let h = self.grid.spacing;
        let start = c.map(|ci| ci - half as i64);
        let origin = [0, 1, 2].map(|a| self.grid.origin[a] + h * T::lit(start[a] as f64));
        let grid = Grid {
            dims: [n, n, n],
            spacing: h,
            origin,
        };
        let src = &self.grid;
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let [i, j, k] = grid.coords(idx);
                let s = [
                    start[0] + i as i64,
                    start[1] + j as i64,
                    start[2] + k as i64,
                ];
                if (0..3).all(|a| s[a] >= 0 && (s[a] as usize) < src.dims[a]) {
                    self.values[src.index(s[0] as usize, s[1] as usize, s[2] as usize)]
                } else {
                    self.background
                }
            })
            .collect();
        Self {
            grid,
            values,
            background: self.background,
        }
    }

    /// Cube of side `2r` plus `margin` voxels on each side.
    pub fn crop_to_support(&self, r: T, margin: usize) -> Self {
        let half = (r / self.grid.spacing).ceil().to_usize().unwrap_or(0) + margin;
        self.cube_around_origin(half)
    }

    /// Thresholds at 1/2: interior (below 1/2) becomes 0, everything else 1.
    pub fn binarized(&self) -> Self {
        let half = T::lit(0.5);
        let bin = |v: T| if v < half { T::zero() } else { T::one() };
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| bin(*v)).collect(),
            background: bin(self.background),
        }
    }

    pub fn is_binary(&self) -> bool {
        self.values
            .iter()
            .all(|v| *v == T::zero() || *v == T::one())
    }
}

fn corner_background<T: Real>(grid: &Grid<T>, values: &[T]) -> Result<T> {
    if values.len() != grid.len() {
        return Err(Error::InvalidVolume(format!(
            "expected {} values, got {}",
            grid.len(),
            values.len()
        )));
    }
    let [nx, ny, nz] = grid.dims;
    let mut corners = Vec::with_capacity(8);
    for &k in &[0, nz - 1] {
        for &j in &[0, ny - 1] {
            for &i in &[0, nx - 1] {
                corners.push(values[grid.index(i, j, k)]);
            }
        }
    }
    let first = corners[0];
    if corners.iter().all(|c| *c == first) {
        Ok(first)
    } else {
        Ok(corners.iter().copied().sum::<T>() / T::lit(8.0))
    }
}

/// Sum of central-difference gradient norms over voxel centers within one
/// spacing of `B_r`, in units of value per world unit.
///
/// A function constant outside `B_r` still has a non-zero discrete gradient on
/// the first layer of voxels past the sphere, so that layer belongs to the sum.
pub(crate) fn gradient_norm_sum<T: Real>(
    grid: &Grid<T>,
    r: T,
    value: impl Fn(usize) -> T + Sync,
) -> f64 {
    let d = grid.dims;
    let inv_h = T::one() / grid.spacing;
    let reach = r + grid.spacing;
    let r2 = reach * reach;
    (0..d[2])
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0f64;
            for j in 0..d[1] {
                for i in 0..d[0] {
                    let c = grid.center(i, j, k);
                    if c[0] * c[0] + c[1] * c[1] + c[2] * c[2] > r2 {
                        continue;
                    }
                    let ijk = [i, j, k];
                    let mut g2 = T::zero();
                    for a in 0..3 {
                        if d[a] == 1 {
                            continue;
                        }
                        let mut lo = ijk;
                        let mut hi = ijk;
                        let mut span = T::lit(2.0);
                        if ijk[a] == 0 {
                            span = T::one();
                        } else {
                            lo[a] -= 1;
                        }
                        if ijk[a] == d[a] - 1 {
                            span -= T::one();
                        } else {
                            hi[a] += 1;
                        }
                        let diff = value(grid.index(hi[0], hi[1], hi[2]))
                            - value(grid.index(lo[0], lo[1], lo[2]));
                        let g = diff * inv_h / span;
                        g2 += g * g;
                    }
                    acc += g2.sqrt().as_f64();
                }
            }
            acc
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_x() -> ScalarVolume<f64> {
        // values 0, 1 along x at two voxels, constant otherwise
        let grid = Grid::new([2, 1, 1], 1.0, [0.0, 0.0, 0.0]).unwrap();
        ScalarVolume::with_background(grid, vec![0.0, 1.0], 1.0).unwrap()
    }

    #[test]
    fn trilinear_hits_voxel_centers() {
        let grid = Grid::<f64>::centered([4, 3, 5], 0.5).unwrap();
        let vol =
            ScalarVolume::from_fn(grid, 1.0, |p| (p[0] + p[1] * 0.3 - p[2] * 0.2) * 0.1 + 0.5)
                .unwrap();
        for (i, j, k) in [(0, 0, 0), (3, 2, 4), (1, 1, 2), (3, 0, 4)] {
            let c = grid.center(i, j, k);
            assert!((vol.sample_trilinear(&c) - vol.get(i, j, k)).abs() < 1e-12);
        }
    }

    #[test]
    fn trilinear_midpoint() {
        let vol = ramp_x();
        assert!((vol.sample_trilinear(&[0.5, 0.0, 0.0]) - 0.5).abs() < 1e-12);
        assert!((vol.sample_trilinear(&[0.25, 0.0, 0.0]) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn outside_reads_background() {
        let vol = ramp_x();
        assert_eq!(vol.sample_trilinear(&[-0.1, 0.0, 0.0]), 1.0);
        assert_eq!(vol.sample_trilinear(&[0.5, 0.2, 0.0]), 1.0);
    }

    #[test]
    fn constant_volume_samples_constant() {
        let grid = Grid::<f64>::centered([5, 5, 5], 1.0).unwrap();
        let vol = ScalarVolume::constant(grid, 0.5).unwrap();
        for p in [[0.1, 0.2, -0.3], [10.0, 0.0, 0.0], [1.7, -1.2, 0.9]] {
            assert_eq!(vol.sample_trilinear(&p), 0.5);
        }
        assert_eq!(vol.support_radius(), 0.0);
        assert_eq!(vol.total_variation(1.0).unwrap(), 0.0);
        assert_eq!(vol.recenter().unwrap_err(), Error::EmptyShape);
    }

    #[test]
    fn rejects_out_of_range_values() {
        let grid = Grid::<f64>::centered([2, 1, 1], 1.0).unwrap();
        assert!(ScalarVolume::with_background(grid, vec![0.0, 1.5], 1.0).is_err());
        assert!(Grid::<f64>::new([0, 1, 1], 1.0, [0.0; 3]).is_err());
        assert!(Grid::<f64>::new([1, 1, 1], 0.0, [0.0; 3]).is_err());
    }

    #[test]
    fn degenerate_radius() {
        let grid = Grid::<f64>::centered([3, 3, 3], 1.0).unwrap();
        let vol = ScalarVolume::constant(grid, 1.0).unwrap();
        assert!(matches!(
            vol.total_variation(0.0),
            Err(Error::DegenerateRadius(_))
        ));
    }

    #[test]
    fn cube_crop_pads_with_background() {
        let grid = Grid::<f64>::centered([3, 3, 3], 1.0).unwrap();
        let vol =
            ScalarVolume::from_fn(grid, 1.0, |p| if norm(&p) < 0.5 { 0.0 } else { 1.0 }).unwrap();
        let big = vol.cube_around_origin(4);
        assert_eq!(big.dims(), [9, 9, 9]);
        assert_eq!(big.get(4, 4, 4), 0.0);
        assert_eq!(big.get(0, 0, 0), 1.0);
        assert_eq!(big.origin(), [-4.0, -4.0, -4.0]);
        let small = vol.cube_around_origin(0);
        assert_eq!(small.values(), &[0.0]);
    }
}
