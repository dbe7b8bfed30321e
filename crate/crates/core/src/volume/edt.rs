//! Exact Euclidean distance transform by separable lower envelopes of parabolas.

use rayon::prelude::*;

use super::{Grid, ScalarVolume};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Signed distance to the shape boundary in world units, negative inside.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField<T: Real> {
    grid: Grid<T>,
    values: Vec<T>,
}

impl<T: Real> DistanceField<T> {
    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.values[self.grid.index(i, j, k)]
    }
}

const FAR: f64 = f64::INFINITY;

/// Signed distance map of a binary volume (interior below 1/2).
///
/// Each voxel is treated as a cube, so a voxel touching the other phase sits
/// half a spacing away from the boundary. Voxels outside the grid are not
/// considered, which is harmless as long as the shape does not touch the border.
pub fn signed_distance<T: Real>(binary: &ScalarVolume<T>) -> Result<DistanceField<T>> {
    let grid = *binary.grid();
    let half = T::lit(0.5);
    let inside: Vec<bool> = binary.values().par_iter().map(|v| *v < half).collect();
    let n_in = inside.iter().filter(|b| **b).count();
    if n_in == 0 {
        return Err(Error::EmptyPhase("inside"));
    }
    if n_in == inside.len() {
        return Err(Error::EmptyPhase("outside"));
    }
    let h = grid.spacing.as_f64();
    let to_in = squared_edt(&inside, grid.dims, true);
    let mut values: Vec<T> = to_in
        .par_iter()
        .map(|d2| T::lit((f64::from(*d2).sqrt() - 0.5) * h))
        .collect();
    drop(to_in);
    let to_out = squared_edt(&inside, grid.dims, false);
    values
        .par_iter_mut()
        .zip(to_out.par_iter())
        .zip(inside.par_iter())
        .for_each(|((v, d2), &is_in)| {
            if is_in {
                *v = T::lit(-(f64::from(*d2).sqrt() - 0.5) * h);
            }
        });
    Ok(DistanceField { grid, values })
}

/// Squared voxel distance to the nearest voxel whose mask equals `feature`.
/// Feature voxels get 0. Stored as `f32`: all outputs are integers below 2^24
/// for any grid this crate can hold in memory.
fn squared_edt(mask: &[bool], dims: [usize; 3], feature: bool) -> Vec<f32> {
    let mut buf: Vec<f32> = mask
        .par_iter()
        .map(|&m| if m == feature { 0.0 } else { f32::INFINITY })
        .collect();
    for axis in 0..3 {
        pass_axis(&mut buf, dims, axis);
    }
    buf
}

/// Runs the 1D transform along every line parallel to `axis`.
fn pass_axis(buf: &mut [f32], dims: [usize; 3], axis: usize) {
    let n = dims[axis];
    if n == 1 {
        return;
    }
    let strides = [1, dims[0], dims[0] * dims[1]];
    let (b, c) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let line_base = |l: usize| (l % dims[b]) * strides[b] + (l / dims[b]) * strides[c];
    let stride = strides[axis];

    let mut lines = vec![0f32; buf.len()];
    {
        let src: &[f32] = buf;
        lines.par_chunks_mut(n).enumerate().for_each_init(
            || Scratch::new(n),
            |scratch, (l, out)| {
                let base = line_base(l);
                for (q, f) in scratch.f.iter_mut().enumerate() {
                    *f = f64::from(src[base + q * stride]);
                }
                scratch.transform(out);
            },
        );
    }
    if axis == 0 {
        buf.copy_from_slice(&lines);
        return;
    }
    buf.par_iter_mut().enumerate().for_each(|(idx, v)| {
        let coord = [
            idx % dims[0],
            (idx / dims[0]) % dims[1],
            idx / (dims[0] * dims[1]),
        ];
        let l = coord[b] + dims[b] * coord[c];
        *v = lines[l * n + coord[axis]];
    });
}

struct Scratch {
    f: Vec<f64>,
    v: Vec<usize>,
    z: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            f: vec![0.0; n],
            v: vec![0; n],
            z: vec![0.0; n + 1],
        }
    }

    /// `out[q] = min_p (q - p)^2 + f[p]`, skipping infinite sites.
    fn transform(&mut self, out: &mut [f32]) {
        let f = &self.f;
        let n = f.len();
        let mut k: isize = -1;
        for q in 0..n {
            if f[q] == FAR {
                continue;
            }
            let fq = f[q] + (q * q) as f64;
            loop {
                if k < 0 {
                    k = 0;
                    self.v[0] = q;
                    self.z[0] = f64::NEG_INFINITY;
                    self.z[1] = f64::INFINITY;
                    break;
                }
                let p = self.v[k as usize];
                let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
                if s <= self.z[k as usize] {
                    k -= 1;
                    continue;
                }
                k += 1;
                self.v[k as usize] = q;
                self.z[k as usize] = s;
                self.z[k as usize + 1] = f64::INFINITY;
                break;
            }
        }
        if k < 0 {
            out.iter_mut().for_each(|o| *o = f32::INFINITY);
            return;
        }
        let mut j = 0usize;
        for (q, o) in out.iter_mut().enumerate() {
            while self.z[j + 1] < q as f64 {
                j += 1;
            }
            let p = self.v[j];
            let d = q as f64 - p as f64;
            *o = (d * d + f[p]) as f32;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm;

    fn brute(mask: &[bool], dims: [usize; 3], feature: bool) -> Vec<f32> {
        let grid = Grid::<f64>::new(dims, 1.0, [0.0; 3]).unwrap();
        (0..mask.len())
            .map(|a| {
                let pa = grid.coords(a);
                (0..mask.len())
                    .filter(|&b| mask[b] == feature)
                    .map(|b| {
                        let pb = grid.coords(b);
                        (0..3)
                            .map(|t| (pa[t] as f64 - pb[t] as f64).powi(2))
                            .sum::<f64>() as f32
                    })
                    .fold(f32::INFINITY, f32::min)
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_on_random_masks() {
        let dims = [7, 5, 6];
        let len = dims.iter().product::<usize>();
        let mut state = 12345u64;
        for _ in 0..5 {
            let mask: Vec<bool> = (0..len)
                .map(|_| {
                    state = crate::rng::splitmix64(state);
                    state.is_multiple_of(7)
                })
                .collect();
            assert_eq!(squared_edt(&mask, dims, true), brute(&mask, dims, true));
            assert_eq!(squared_edt(&mask, dims, false), brute(&mask, dims, false));
        }
    }

    #[test]
    fn ball_distance_close_to_analytic() {
        let h = 0.1;
        let a = 1.0;
        let grid = Grid::<f64>::centered([31, 31, 31], h).unwrap();
        let vol =
            ScalarVolume::from_fn(grid, 1.0, |p| if norm(&p) <= a { 0.0 } else { 1.0 }).unwrap();
        let sdf = signed_distance(&vol).unwrap();
        let diag = 3f64.sqrt() * h;
        for idx in 0..grid.len() {
            let [i, j, k] = grid.coords(idx);
            let p = grid.center(i, j, k);
            assert!(
                (sdf.values()[idx] - (norm(&p) - a)).abs() <= diag,
                "at {p:?}"
            );
        }
        assert!((sdf.get(15, 15, 15) + a).abs() <= h);
    }

    #[test]
    fn single_phase_is_rejected() {
        let grid = Grid::<f64>::centered([4, 4, 4], 1.0).unwrap();
        let all_in = ScalarVolume::constant(grid, 0.0).unwrap();
        assert_eq!(
            signed_distance(&all_in).unwrap_err(),
            Error::EmptyPhase("outside")
        );
        let all_out = ScalarVolume::constant(grid, 1.0).unwrap();
        assert_eq!(
            signed_distance(&all_out).unwrap_err(),
            Error::EmptyPhase("inside")
        );
    }
}
