//! Covering nets of O(3) under the displacement metric.
//!
//! The proper component is parametrized by unit quaternions modulo sign. The
//! quaternion sphere is split into four facets by the index of the largest
//! absolute coordinate; on facet `k` the remaining three coordinates divided
//! by `q_k` lie in `[-1, 1]³`, which is cut into `n³` cubic cells. Cell
//! centers are the net elements. Refining a cell by an integer factor `f`
//! yields `f³` children, which is what the branch-and-bound search walks.
//! The improper component is the proper one multiplied by `-I`.

use rand::Rng;
use rayon::prelude::*;

use super::{OrthoTransform, TransformKind, DEFAULT_CLASSIFY_TOL_DEG};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm, Quat, Vec3};
use crate::rng::{label, stream};
use crate::scalar::Real;

/// Largest net `build_net` agrees to enumerate.
pub const DEFAULT_NET_CAP: u128 = 100_000_000;

/// Rotation-angle radius of a cell at resolution `n`: the gnomonic chart is
/// 1-Lipschitz into the sphere, so a half cell diagonal `√3/n` bounds the
/// quaternion angle, and rotation angles are twice that.
pub fn cell_angle(n: u32) -> f64 {
    2.0 * 3f64.sqrt() / n as f64
}

/// Smallest resolution whose cells have rotation-angle radius at most `angle`.
pub fn resolution_for(angle: f64) -> u64 {
    (2.0 * 3f64.sqrt() / angle).ceil().max(1.0) as u64
}

/// One cell of the cubed quaternion grid. Ordered like net element indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellKey {
    pub improper: bool,
    pub facet: u8,
    pub n: u32,
    pub ijk: [u32; 3],
}

impl Ord for CellKey {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        let key = |c: &Self| (c.improper, c.facet, c.n, c.ijk[2], c.ijk[1], c.ijk[0]);
        key(self).cmp(&key(o))
    }
}

impl PartialOrd for CellKey {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl CellKey {
    /// Center quaternion, normalized, with the facet coordinate positive.
    pub fn quat<T: Real>(&self) -> Quat<T> {
        let n = self.n as f64;
        let u = self.ijk.map(|i| -1.0 + (2.0 * i as f64 + 1.0) / n);
        let mut q = [0.0f64; 4];
        let mut c = 0;
        for (k, qk) in q.iter_mut().enumerate() {
            if k == self.facet as usize {
                *qk = 1.0;
            } else {
                *qk = u[c];
                c += 1;
            }
        }
        let len = q.iter().map(|x| x * x).sum::<f64>().sqrt();
        Quat::from_array(q.map(|x| T::lit(x / len)))
    }

    pub fn transform<T: Real>(&self) -> OrthoTransform<T> {
        OrthoTransform::from_quat(&self.quat(), self.improper)
    }

    /// The `f³` cells of resolution `n·f` that tile this one.
    pub fn children(&self, f: u32) -> impl Iterator<Item = CellKey> + '_ {
        let base = self.ijk.map(|i| i * f);
        (0..f * f * f).map(move |t| CellKey {
            improper: self.improper,
            facet: self.facet,
            n: self.n * f,
            ijk: [
                base[0] + t % f,
                base[1] + (t / f) % f,
                base[2] + t / (f * f),
            ],
        })
    }
}

/// A neighborhood removed from the search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CarveRegion<T: Real> {
    /// Elements of one component whose axis (rotation axis, plane normal or
    /// rotoreflection axis) makes an undirected angle with `axis` whose cosine
    /// is at least `cos_max`. Elements within `min_angle` of the component's
    /// identity (`I` or `-I`) are excluded: their axes are arbitrary.
    Axis {
        axis: Vec3<T>,
        improper: bool,
        cos_max: T,
        min_angle: T,
    },
    /// Elements of one component within geodesic angle `angle` of `center`
    /// (the proper part of the detected transform).
    Ball {
        center: Quat<T>,
        improper: bool,
        angle: T,
    },
}

impl<T: Real> CarveRegion<T> {
    /// Regions carved around a detected transform: a geodesic ball, plus the
    /// cone of elements sharing its axis when it has one.
    pub fn around(t: &OrthoTransform<T>, radius: T) -> Vec<Self> {
        let class = t.classify(T::lit(DEFAULT_CLASSIFY_TOL_DEG.to_radians()));
        let improper = !t.is_proper();
        let ball = CarveRegion::Ball {
            center: t.proper_quat(),
            improper,
            angle: radius,
        };
        match (class.kind, class.axis) {
            (TransformKind::Identity | TransformKind::PointInversion, _) | (_, None) => vec![ball],
            (_, Some(axis)) => {
                vec![
                    ball,
                    CarveRegion::Axis {
                        axis,
                        improper,
                        cos_max: radius.cos(),
                        min_angle: radius,
                    },
                ]
            }
        }
    }

    /// Whether the element `±R(q)` lies in the region.
    pub fn contains(&self, q: &Quat<T>, improper: bool) -> bool {
        match *self {
            CarveRegion::Axis {
                axis,
                improper: comp,
                cos_max,
                min_angle,
            } => {
                if comp != improper {
                    return false;
                }
                let v = q.vector();
                let s = norm(&v);
                if T::lit(2.0) * s.atan2(q.w.abs()) <= min_angle {
                    return false;
                }
                dot(&v, &axis).abs() >= cos_max * s
            }
            CarveRegion::Ball {
                center,
                improper: comp,
                angle,
            } => {
                comp == improper && q.dot(&center).abs().min(T::one()).acos() * T::lit(2.0) <= angle
            }
        }
    }
}

#[derive(Clone, Debug)]
enum Layout<T: Real> {
    Cubed { n: u32 },
    Explicit(Vec<(Quat<T>, bool)>),
}

/// A finite subset of O(3) with per-element activity flags.
#[derive(Clone, Debug)]
pub struct TransformNet<T: Real> {
    layout: Layout<T>,
    rho: T,
    support_radius: T,
    active: Vec<bool>,
    regions: Vec<CarveRegion<T>>,
}

/// Net of radius `ρ = delta / (2 V_S)` for a shape of support radius `r`.
pub fn build_net<T: Real>(delta: T, total_variation: T, r: T) -> Result<TransformNet<T>> {
    build_net_with_cap(delta, total_variation, r, DEFAULT_NET_CAP)
}

pub fn build_net_with_cap<T: Real>(
    delta: T,
    total_variation: T,
    r: T,
    cap: u128,
) -> Result<TransformNet<T>> {
    if !(delta > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    if !(total_variation > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "total variation must be > 0, got {total_variation}"
        )));
    }
    if !(r > T::zero()) {
        return Err(Error::DegenerateRadius(r.as_f64()));
    }
    let rho = delta / (T::lit(2.0) * total_variation);
    TransformNet::with_radius(rho, r, cap)
}

impl<T: Real> TransformNet<T> {
    /// Net whose every element of O(3) lies within `rho` (world units) of an element.
    pub fn with_radius(rho: T, r: T, cap: u128) -> Result<Self> {
        let rho_rel = (rho / r).as_f64();
        if rho_rel >= std::f64::consts::PI {
            let q = Quat::new(T::one(), T::zero(), T::zero(), T::zero());
            return Ok(Self::from_quats(vec![(q, false), (q, true)], rho, r));
        }
        let n = resolution_for(rho_rel);
        let projected = 8u128 * (n as u128).pow(3);
        if projected > cap || n > u32::MAX as u64 {
            return Err(Error::ExcessiveNetSize { projected, cap });
        }
        Ok(Self::cubed(n as u32, rho, r))
    }

    /// Full cubed grid at resolution `n`.
    pub fn cubed(n: u32, rho: T, r: T) -> Self {
        let len = 8 * (n as usize).pow(3);
        Self {
            layout: Layout::Cubed { n },
            rho,
            support_radius: r,
            active: vec![true; len],
            regions: Vec::new(),
        }
    }

    pub fn from_elements(elements: &[OrthoTransform<T>], rho: T, r: T) -> Self {
        let quats = elements
            .iter()
            .map(|t| (t.proper_quat(), !t.is_proper()))
            .collect();
        Self::from_quats(quats, rho, r)
    }

    fn from_quats(quats: Vec<(Quat<T>, bool)>, rho: T, r: T) -> Self {
        let len = quats.len();
        Self {
            layout: Layout::Explicit(quats),
            rho,
            support_radius: r,
            active: vec![true; len],
            regions: Vec::new(),
        }
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    pub fn support_radius(&self) -> T {
        self.support_radius
    }

    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    /// Cells per side of the grid layout.
    pub fn resolution(&self) -> Option<u32> {
        match self.layout {
            Layout::Cubed { n } => Some(n),
            Layout::Explicit(_) => None,
        }
    }

    /// Covering radius guaranteed by construction (world units).
    pub fn covering_bound(&self) -> T {
        match self.layout {
            Layout::Cubed { n } => self.support_radius * T::lit(cell_angle(n)),
            Layout::Explicit(_) => self.rho,
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.active[i]).collect()
    }

    pub fn deactivate(&mut self, i: usize) {
        self.active[i] = false;
    }

    pub fn regions(&self) -> &[CarveRegion<T>] {
        &self.regions
    }

    /// Grid cell of element `i`, for the cubed layout.
    pub fn cell(&self, i: usize) -> Option<CellKey> {
        match self.layout {
            Layout::Cubed { n } => {
                let n3 = (n as usize).pow(3);
                let comp = i / (4 * n3);
                let rem = i % (4 * n3);
                let cell = rem % n3;
                let nn = n as usize;
                Some(CellKey {
                    improper: comp == 1,
                    facet: (rem / n3) as u8,
                    n,
                    ijk: [
                        (cell % nn) as u32,
                        ((cell / nn) % nn) as u32,
                        (cell / (nn * nn)) as u32,
                    ],
                })
            }
            Layout::Explicit(_) => None,
        }
    }

    /// Proper-part quaternion and component of element `i`.
    pub fn element_quat(&self, i: usize) -> (Quat<T>, bool) {
        match &self.layout {
            Layout::Cubed { .. } => {
                let c = self.cell(i).expect("cubed layout");
                (c.quat(), c.improper)
            }
            Layout::Explicit(q) => q[i],
        }
    }

    pub fn element(&self, i: usize) -> OrthoTransform<T> {
        let (q, improper) = self.element_quat(i);
        OrthoTransform::from_quat(&q, improper)
    }

    /// Whether a candidate falls inside any carved region so far.
    pub fn is_carved(&self, q: &Quat<T>, improper: bool) -> bool {
        self.regions.iter().any(|r| r.contains(q, improper))
    }

    /// New net with the neighborhoods of `detected` deactivated.
    pub fn carve(&self, detected: &[OrthoTransform<T>], radius_deg: T) -> Self {
        let mut out = self.clone();
        out.carve_in_place(detected, radius_deg);
        out
    }

    pub fn carve_in_place(&mut self, detected: &[OrthoTransform<T>], radius_deg: T) {
        let radius = radius_deg.to_radians();
        let new: Vec<CarveRegion<T>> = detected
            .iter()
            .flat_map(|t| CarveRegion::around(t, radius))
            .collect();
        self.carve_regions(&new);
    }

    pub fn carve_regions(&mut self, new: &[CarveRegion<T>]) {
        if new.is_empty() {
            return;
        }
        let this = &*self;
        let hits: Vec<usize> = (0..this.len())
            .into_par_iter()
            .filter(|&i| {
                if !this.active[i] {
                    return false;
                }
                let (q, improper) = this.element_quat(i);
                new.iter().any(|r| r.contains(&q, improper))
            })
            .collect();
        for i in hits {
            self.active[i] = false;
        }
        self.regions.extend_from_slice(new);
    }

    /// Displacement distance from `(q, improper)` to the nearest active element
    /// among the grid cells around it, or among all elements for explicit
    /// layouts. For grids this is an upper bound on the true nearest distance.
    fn nearest_gap(&self, q: &Quat<T>, improper: bool) -> Option<T> {
        let r = self.support_radius;
        let dist = |i: usize| {
            let (e, imp) = self.element_quat(i);
            quat_displacement(q, improper, &e, imp, r)
        };
        let brute = || {
            (0..self.len())
                .filter(|&i| self.active[i])
                .map(dist)
                .reduce(T::min)
        };
        let Layout::Cubed { n } = self.layout else {
            return brute();
        };
        let qa = q.to_array().map(|x| x.as_f64());
        let nn = n as usize;
        let n3 = nn.pow(3);
        let comp = if improper { 1 } else { 0 };
        let mut best: Option<T> = None;
        for facet in 0..4 {
            let qk = qa[facet];
            if qk.abs() < 1e-12 {
                continue;
            }
            let others: Vec<f64> = (0..4).filter(|&k| k != facet).map(|k| qa[k] / qk).collect();
            if others.iter().any(|u| u.abs() > 1.0 + 2.0 / n as f64) {
                continue;
            }
            let idx: Vec<i64> = others
                .iter()
                .map(|u| (((u + 1.0) * 0.5 * n as f64).floor()) as i64)
                .collect();
            for dk in -1..=1i64 {
                for dj in -1..=1i64 {
                    for di in -1..=1i64 {
                        let c = [idx[0] + di, idx[1] + dj, idx[2] + dk];
                        if c.iter().any(|&x| x < 0 || x >= n as i64) {
                            continue;
                        }
                        let e = comp * 4 * n3
                            + facet * n3
                            + c[0] as usize
                            + nn * (c[1] as usize + nn * c[2] as usize);
                        if self.active[e] {
                            let d = dist(e);
                            best = Some(best.map_or(d, |b| b.min(d)));
                        }
                    }
                }
            }
        }
        best.or_else(brute)
    }
}

/// `r · σ_max(R1 - R2)` for transforms given as signed quaternions:
/// `2r·sin(θ/2)` within a component, `2r` across components.
pub fn quat_displacement<T: Real>(
    q1: &Quat<T>,
    improper1: bool,
    q2: &Quat<T>,
    improper2: bool,
    r: T,
) -> T {
    if improper1 != improper2 {
        return r * T::lit(2.0);
    }
    let c = q1.dot(q2).abs().min(T::one());
    T::lit(2.0) * r * (T::one() - c * c).max(T::zero()).sqrt()
}

/// Uniformly distributed unit quaternion (rejection from the 4-cube).
pub fn random_quat<T: Real>(rng: &mut impl Rng) -> Quat<T> {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0);
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 && n2 > 1e-12 {
            let n = n2.sqrt();
            return Quat::from_array(v.map(|x| T::lit(x / n)));
        }
    }
}

/// Largest displacement distance from `trials` uniform random elements of
/// O(3) to their nearest active net element. Empty nets report `2r`.
pub fn covering_certificate<T: Real>(net: &TransformNet<T>, trials: usize, seed: u64) -> T {
    let r = net.support_radius();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, &[label::COVERING, t as u64]);
            let q = random_quat::<T>(&mut rng);
            let improper = rng.random::<bool>();
            net.nearest_gap(&q, improper).unwrap_or(r * T::lit(2.0))
        })
        .reduce(T::zero, T::max)
}
