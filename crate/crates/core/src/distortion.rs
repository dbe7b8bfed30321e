//! Distortion of a transform: the mean of `|s(x) - s(Rx)|` over the support
//! ball, computed exactly on the voxel lattice or estimated from random points.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{Mat3, Vec3};
use crate::ogroup::OrthoTransform;
use crate::rng::stream;
use crate::scalar::Real;
use crate::volume::{ScalarVolume, ShapeRepresentation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistortionEstimate {
    pub value: f64,
    pub mode: EstimateMode,
    pub samples_used: usize,
    pub epsilon: Option<f64>,
    pub failure_prob: Option<f64>,
    /// Empirical standard deviation of the summands.
    pub std_dev: f64,
}

/// Hoeffding sample size `ceil(ln(2/p) / (2ε²))` for values in `[0, 1]`.
pub fn required_samples(epsilon: f64, p: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "failure probability must lie in (0, 1), got {p}"
        )));
    }
    Ok(((2.0 / p).ln() / (2.0 * epsilon * epsilon)).ceil() as usize)
}

/// `m` independent uniform points in the ball of radius `r`, by rejection from
/// the bounding cube. The sequence depends only on `seed`.
pub fn uniform_ball_points<T: Real>(r: T, m: usize, seed: u64) -> Vec<Vec3<T>> {
    let mut rng = stream(seed, &[]);
    let rf = r.as_f64();
    let mut out = Vec::with_capacity(m);
    while out.len() < m {
        let p: [f64; 3] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
        if p[0] * p[0] + p[1] * p[1] + p[2] * p[2] <= 1.0 {
            out.push(p.map(|x| T::lit(x * rf)));
        }
    }
    out
}

/// Lattice Riemann sum over the voxel centers inside `B_r`.
pub fn exact_distortion<T: Real>(
    shape: &ShapeRepresentation<T>,
    r: &OrthoTransform<T>,
) -> Result<DistortionEstimate> {
    exact_on_volume(shape.volume(), shape.radius(), r.matrix())
}

pub(crate) fn exact_on_volume<T: Real>(
    vol: &ScalarVolume<T>,
    radius: T,
    m: &Mat3<T>,
) -> Result<DistortionEstimate> {
    if !(radius > T::zero()) {
        return Err(Error::DegenerateRadius(radius.as_f64()));
    }
    let grid = *vol.grid();
    let inv_h = T::one() / grid.spacing;
    let offset = grid.origin.map(|o| -o * inv_h);
    let r2 = radius * radius;
    let [nx, ny, nz] = grid.dims;
    let (count, sum, sum2) = (0..nz)
        .into_par_iter()
        .map(|k| {
            let mut acc = (0usize, 0f64, 0f64);
            for j in 0..ny {
                for i in 0..nx {
                    let x = grid.center(i, j, k);
                    if x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > r2 {
                        continue;
                    }
                    let y = m.apply(&x);
                    let g = [0, 1, 2].map(|a| y[a] * inv_h + offset[a]);
                    let d = (vol.get(i, j, k) - vol.sample_grid(&g)).abs().as_f64();
                    acc.0 += 1;
                    acc.1 += d;
                    acc.2 += d * d;
                }
            }
            acc
        })
        .reduce(|| (0, 0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    if count == 0 {
        return Err(Error::DegenerateRadius(radius.as_f64()));
    }
    let mean = sum / count as f64;
    Ok(DistortionEstimate {
        value: mean.clamp(0.0, 1.0),
        mode: EstimateMode::Exact,
        samples_used: count,
        epsilon: None,
        failure_prob: None,
        std_dev: (sum2 / count as f64 - mean * mean).max(0.0).sqrt(),
    })
}

/// Monte-Carlo estimate with `required_samples(epsilon, p)` points.
pub fn approx_distortion<T: Real>(
    shape: &ShapeRepresentation<T>,
    r: &OrthoTransform<T>,
    epsilon: f64,
    p: f64,
    seed: u64,
) -> Result<DistortionEstimate> {
    let set = SampleSet::for_accuracy(shape, epsilon, p, seed)?;
    Ok(set.estimate_full(shape.volume(), r.matrix()))
}

/// Fixed sample points with `s` evaluated at each, reusable across transforms.
///
/// Points are stored in voxel units relative to the world origin, so a
/// transform only costs one matrix product plus one trilinear lookup per point.
#[derive(Clone, Debug)]
pub struct SampleSet<T: Real> {
    scaled: Vec<Vec3<T>>,
    base: Vec<T>,
    offset: Vec3<T>,
    epsilon: Option<f64>,
    failure_prob: Option<f64>,
}

/// Summands are checked against an abort limit this often.
const ABORT_STRIDE: usize = 16;

impl<T: Real> SampleSet<T> {
    pub fn new(shape: &ShapeRepresentation<T>, m: usize, seed: u64) -> Result<Self> {
        if !(shape.radius() > T::zero()) {
            return Err(Error::DegenerateRadius(shape.radius().as_f64()));
        }
        if m == 0 {
            return Err(Error::InvalidParameter("sample count must be >= 1".into()));
        }
        let vol = shape.volume();
        let points = uniform_ball_points(shape.radius(), m, seed);
        let inv_h = T::one() / vol.spacing();
        let offset = vol.origin().map(|o| -o * inv_h);
        let scaled: Vec<Vec3<T>> = points.iter().map(|p| p.map(|x| x * inv_h)).collect();
        let base = scaled
            .iter()
            .map(|y| vol.sample_grid(&[y[0] + offset[0], y[1] + offset[1], y[2] + offset[2]]))
            .collect();
        Ok(Self {
            scaled,
            base,
            offset,
            epsilon: None,
            failure_prob: None,
        })
    }

    pub fn for_accuracy(
        shape: &ShapeRepresentation<T>,
        epsilon: f64,
        p: f64,
        seed: u64,
    ) -> Result<Self> {
        let m = required_samples(epsilon, p)?;
        let mut set = Self::new(shape, m, seed)?;
        set.epsilon = Some(epsilon);
        set.failure_prob = Some(p);
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    #[inline(always)]
    fn term(&self, vol: &ScalarVolume<T>, m: &Mat3<T>, i: usize) -> T {
        let y = m.apply(&self.scaled[i]);
        let g = [
            y[0] + self.offset[0],
            y[1] + self.offset[1],
            y[2] + self.offset[2],
        ];
        (self.base[i] - vol.sample_grid(&g)).abs()
    }

    /// Mean of the summands.
    pub fn estimate(&self, vol: &ScalarVolume<T>, m: &Mat3<T>) -> f64 {
        let mut acc = 0f64;
        for i in 0..self.len() {
            acc += self.term(vol, m, i).as_f64();
        }
        acc / self.len() as f64
    }

    /// Mean of the summands, or `None` as soon as it provably exceeds `limit`.
    /// Summands are non-negative, so a partial sum above `limit · m` settles it.
    pub fn estimate_below(&self, vol: &ScalarVolume<T>, m: &Mat3<T>, limit: f64) -> Option<f64> {
        let n = self.len();
        let cut = limit * n as f64;
        let mut acc = 0f64;
        let mut i = 0;
        while i < n {
            let end = (i + ABORT_STRIDE).min(n);
            for t in i..end {
                acc += self.term(vol, m, t).as_f64();
            }
            if acc > cut {
                return None;
            }
            i = end;
        }
        Some(acc / n as f64)
    }

    pub fn estimate_full(&self, vol: &ScalarVolume<T>, m: &Mat3<T>) -> DistortionEstimate {
        let (mut s1, mut s2) = (0f64, 0f64);
        for i in 0..self.len() {
            let d = self.term(vol, m, i).as_f64();
            s1 += d;
            s2 += d * d;
        }
        let n = self.len() as f64;
        let mean = s1 / n;
        DistortionEstimate {
            value: mean.clamp(0.0, 1.0),
            mode: EstimateMode::Sampled,
            samples_used: self.len(),
            epsilon: self.epsilon,
            failure_prob: self.failure_prob,
            std_dev: (s2 / n - mean * mean).max(0.0).sqrt(),
        }
    }
}
