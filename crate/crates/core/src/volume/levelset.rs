//! Truncated signed distance level sets and the derived shape statistics.

use rayon::prelude::*;
use serde::Serialize;

use super::{gradient_norm_sum, signed_distance, DistanceField, ScalarVolume};
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::scalar::Real;

/// Relative slack on the complexity target accepted by [`auto_truncation`].
pub const AUTO_SLACK: f64 = 0.1;
/// Bisection budget of [`auto_truncation`].
pub const AUTO_MAX_STEPS: usize = 20;

/// Voxel margin kept around the support ball after cropping.
const CROP_MARGIN: usize = 2;

/// Level-set volume together with the statistics every later stage needs.
#[derive(Clone, Debug)]
pub struct ShapeRepresentation<T: Real> {
    volume: ScalarVolume<T>,
    radius: T,
    total_variation: T,
    truncation: T,
    complexity: T,
}

/// Summary statistics, serializable for reports.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShapeStats {
    pub r: f64,
    pub total_variation: f64,
    pub truncation: f64,
    pub complexity: f64,
    pub dims: [usize; 3],
}

impl<T: Real> ShapeRepresentation<T> {
    /// Uses the volume as the level-set function directly (no truncation).
    /// Recenters it and crops it to its support ball.
    pub fn from_volume(vol: &ScalarVolume<T>) -> Result<Self> {
        let (centered, _) = vol.recenter()?;
        Self::from_centered(centered, T::zero())
    }

    /// Like [`Self::from_volume`] but keeps the grid's own origin as the
    /// center, for comparisons in a fixed frame.
    pub fn uncentered(vol: &ScalarVolume<T>) -> Result<Self> {
        Self::from_centered(vol.clone(), T::zero())
    }

    /// Binarizes at 1/2 and uses the indicator (`K = 0`).
    pub fn binary(vol: &ScalarVolume<T>) -> Result<Self> {
        let (bin, _) = prepare_binary(vol)?;
        Self::from_centered(bin, T::zero())
    }

    /// Truncated signed distance representation of the binarized volume.
    pub fn truncated(vol: &ScalarVolume<T>, k: T) -> Result<Self> {
        if !(k >= T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "truncation must be >= 0, got {k}"
            )));
        }
        if k == T::zero() {
            return Self::binary(vol);
        }
        let (bin, r0) = prepare_binary(vol)?;
        let sdf = padded_sdf(&bin, r0 + k)?;
        Self::from_centered(truncate_levelset(&sdf, k), k)
    }

    fn from_centered(vol: ScalarVolume<T>, k: T) -> Result<Self> {
        let r = vol.support_radius();
        if !(r > T::zero()) {
            return Err(Error::DegenerateRadius(r.as_f64()));
        }
        let volume = vol.crop_to_support(r, CROP_MARGIN);
        let total_variation = volume.total_variation(r)?;
        Ok(Self {
            volume,
            radius: r,
            total_variation,
            truncation: k,
            complexity: r * total_variation,
        })
    }

    pub fn volume(&self) -> &ScalarVolume<T> {
        &self.volume
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn total_variation(&self) -> T {
        self.total_variation
    }

    pub fn truncation(&self) -> T {
        self.truncation
    }

    pub fn complexity(&self) -> T {
        self.complexity
    }

    pub fn stats(&self) -> ShapeStats {
        ShapeStats {
            r: self.radius.as_f64(),
            total_variation: self.total_variation.as_f64(),
            truncation: self.truncation.as_f64(),
            complexity: self.complexity.as_f64(),
            dims: self.volume.dims(),
        }
    }

    /// Same statistics, volume replaced by `1 - s`.
    pub fn flipped(&self) -> Self {
        Self {
            volume: self.volume.flipped(),
            ..self.clone()
        }
    }
}

/// `s_K = clamp(d_K / 2K + 1/2)`; `K = 0` gives the indicator with interior 0.
pub fn truncate_levelset<T: Real>(sdf: &DistanceField<T>, k: T) -> ScalarVolume<T> {
    let values = sdf
        .values()
        .par_iter()
        .map(|d| levelset_value(*d, k))
        .collect();
    ScalarVolume::with_background(*sdf.grid(), values, T::one())
        .expect("level-set values lie in [0, 1]")
}

#[inline(always)]
fn levelset_value<T: Real>(d: T, k: T) -> T {
    if k > T::zero() {
        (d / (k + k) + T::lit(0.5)).max(T::zero()).min(T::one())
    } else if d < T::zero() {
        T::zero()
    } else {
        T::one()
    }
}

/// Outcome of the automatic truncation search.
#[derive(Clone, Debug)]
pub struct AutoTruncation<T: Real> {
    pub k: T,
    pub shape: ShapeRepresentation<T>,
    /// False when even `K = r` leaves the complexity above the target.
    pub reached: bool,
    pub binary_complexity: T,
    pub target: T,
    pub bisection_steps: usize,
}

/// Smallest truncation whose complexity is within `target * (1 + 0.1)`,
/// searched by bisection over `[0, r]`.
pub fn auto_truncation<T: Real>(vol: &ScalarVolume<T>, target: T) -> Result<AutoTruncation<T>> {
    if !(target > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "target complexity must be > 0, got {target}"
        )));
    }
    let goal = target * T::lit(1.0 + AUTO_SLACK);
    let (bin, r0) = prepare_binary(vol)?;
    let binary = ShapeRepresentation::from_centered(bin.clone(), T::zero())?;
    let c0 = binary.complexity;
    if c0 <= goal {
        return Ok(AutoTruncation {
            k: T::zero(),
            shape: binary,
            reached: true,
            binary_complexity: c0,
            target,
            bisection_steps: 0,
        });
    }
    let sdf = padded_sdf(&bin, r0 + r0)?;
    let h = sdf.grid().spacing;
    if complexity_at(&sdf, r0) > goal {
        let shape = ShapeRepresentation::from_centered(truncate_levelset(&sdf, r0), r0)?;
        return Ok(AutoTruncation {
            k: r0,
            shape,
            reached: false,
            binary_complexity: c0,
            target,
            bisection_steps: 0,
        });
    }
    let (mut lo, mut hi) = (T::zero(), r0);
    let mut steps = 0;
    while steps < AUTO_MAX_STEPS && hi - lo > h {
        let mid = (lo + hi) * T::lit(0.5);
        if complexity_at(&sdf, mid) <= goal {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    let shape = ShapeRepresentation::from_centered(truncate_levelset(&sdf, hi), hi)?;
    Ok(AutoTruncation {
        k: hi,
        shape,
        reached: true,
        binary_complexity: c0,
        target,
        bisection_steps: steps,
    })
}

/// `r * V_S` of `s_K` evaluated on the fly from the distance field.
fn complexity_at<T: Real>(sdf: &DistanceField<T>, k: T) -> T {
    let grid = sdf.grid();
    let vals = sdf.values();
    let r = (0..grid.len())
        .into_par_iter()
        .filter(|&idx| vals[idx] < k)
        .map(|idx| {
            let [i, j, kk] = grid.coords(idx);
            norm(&grid.center(i, j, kk))
        })
        .reduce(T::zero, T::max);
    if r == T::zero() {
        return T::zero();
    }
    let sum = gradient_norm_sum(grid, r, |idx| levelset_value(vals[idx], k));
    let ball = T::lit(4.0 / 3.0) * T::PI() * r * r * r;
    r * T::lit(sum) * grid.voxel_volume() / ball
}

/// Binarized, recentered copy with exterior far field, plus its support radius.
fn prepare_binary<T: Real>(vol: &ScalarVolume<T>) -> Result<(ScalarVolume<T>, T)> {
    let mut bin = vol.binarized();
    if bin.background() == T::zero() {
        // far field is interior phase: swap so the background reads as exterior
        bin = bin.flipped();
    }
    let (bin, _) = bin.recenter()?;
    let r0 = bin.support_radius();
    if !(r0 > T::zero()) {
        return Err(Error::DegenerateRadius(r0.as_f64()));
    }
    Ok((bin, r0))
}

/// Distance field on a cube large enough to hold the ball of radius `extent`.
fn padded_sdf<T: Real>(bin: &ScalarVolume<T>, extent: T) -> Result<DistanceField<T>> {
    let padded = bin.crop_to_support(extent, CROP_MARGIN);
    signed_distance(&padded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Grid;

    fn ball(n: usize, a: f64) -> ScalarVolume<f64> {
        let h = 2.4 * a / n as f64;
        let grid = Grid::centered([n, n, n], h).unwrap();
        ScalarVolume::from_fn(grid, 1.0, |p| if norm(&p) <= a { 0.0 } else { 1.0 }).unwrap()
    }

    #[test]
    fn truncation_formula() {
        let vol = ball(40, 1.0);
        let bin = prepare_binary(&vol).unwrap().0;
        let sdf = signed_distance(&bin).unwrap();
        let s = truncate_levelset(&sdf, 0.5);
        let c = s.grid().origin_index().map(|x| x as usize);
        let center_d = sdf.get(c[0], c[1], c[2]);
        assert!(center_d < -0.5);
        assert_eq!(s.get(c[0], c[1], c[2]), 0.0);
        assert_eq!(levelset_value(0.0, 0.5), 0.5);
        assert_eq!(levelset_value(1.0, 0.5), 1.0);
        assert_eq!(levelset_value(-0.25, 0.5), 0.25);
        let s0 = truncate_levelset(&sdf, 0.0);
        assert_eq!(s0.values(), bin.values());
    }

    #[test]
    fn ball_needs_no_truncation() {
        let auto = auto_truncation(&ball(48, 1.0), 3.0).unwrap();
        assert_eq!(auto.k, 0.0);
        assert!(auto.reached);
        assert!(
            (auto.binary_complexity - 3.0).abs() < 0.75,
            "{}",
            auto.binary_complexity
        );
    }

    #[test]
    fn representation_identity() {
        let rep = ShapeRepresentation::truncated(&ball(32, 1.0), 0.3).unwrap();
        assert_eq!(rep.complexity(), rep.radius() * rep.total_variation());
        assert!((rep.radius() - 1.3).abs() < 0.15);
        let flipped = rep.flipped();
        assert_eq!(
            flipped.volume().support_radius(),
            rep.volume().support_radius()
        );
        assert_eq!(
            flipped.volume().total_variation(rep.radius()).unwrap(),
            rep.total_variation()
        );
    }
}
