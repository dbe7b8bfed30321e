//! Detection of the best symmetry and of the full approximate symmetry set.

mod nfold;
mod search;

pub use nfold::expand_nfold;
pub use search::{detect_best, detect_best_bnb, schedule, BestCandidate, BnbSearch, Level};

use std::time::Instant;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::distortion::{exact_on_volume, SampleSet};
use crate::error::{Error, Result};
use crate::linalg::{cross, dot, normalized, Vec3};
use crate::ogroup::{OrthoTransform, TransformClass, TransformKind, DEFAULT_CLASSIFY_TOL_DEG};
use crate::rng::{label, mix_seed};
use crate::scalar::Real;
use crate::volume::{ShapeRepresentation, ShapeStats};

/// Parameters of the search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    /// Target precision δ.
    pub delta: f64,
    /// Failure probability, split evenly over search levels.
    pub p: f64,
    /// Largest fold tried by the n-fold expansion.
    pub max_fold: usize,
    /// Carving radius around detected axes, degrees.
    pub carve_deg: f64,
    /// Geodesic radius carved around the identity before searching, degrees.
    pub identity_carve_deg: f64,
    pub seed: u64,
    /// Precision of the first branch-and-bound level.
    pub coarse_delta: f64,
    /// Precision factor between consecutive levels.
    pub bnb_shrink: f64,
    pub stop_multiplier: f64,
    pub accept_multiplier: f64,
    /// Cap on the cells refined per level.
    pub max_survivors: usize,
    /// Largest flat-equivalent net (in elements) at precision δ. The net
    /// actually materialized by branch-and-bound is level 0, which is held to
    /// the smaller `ogroup::DEFAULT_NET_CAP`.
    pub net_cap: u64,
    /// Upper bound on the number of detection iterations.
    pub max_records: usize,
    /// Flat search at δ when false.
    pub use_bnb: bool,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            p: 0.01,
            max_fold: 20,
            carve_deg: 10.0,
            identity_carve_deg: 10.0,
            seed: 0,
            coarse_delta: 0.25,
            bnb_shrink: 0.5,
            stop_multiplier: 1.5,
            accept_multiplier: 0.5,
            max_survivors: 1024,
            net_cap: 10_000_000_000,
            max_records: 256,
            use_bnb: true,
        }
    }
}

impl DetectionConfig {
    pub fn with_delta(delta: f64) -> Self {
        Self {
            delta,
            coarse_delta: delta.max(0.25),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.use_bnb && !(self.delta <= self.coarse_delta && self.coarse_delta < 1.0) {
            return bad(format!(
                "need delta <= coarse_delta < 1, got {} and {}",
                self.delta, self.coarse_delta
            ));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return bad(format!("p must lie in (0, 1), got {}", self.p));
        }
        if self.max_fold < 2 {
            return bad(format!("max_fold must be >= 2, got {}", self.max_fold));
        }
        if !(self.carve_deg > 0.0) || !(self.identity_carve_deg >= 0.0) {
            return bad("carving radii must be positive".into());
        }
        if !(self.bnb_shrink > 0.0 && self.bnb_shrink < 1.0) {
            return bad(format!(
                "bnb_shrink must lie in (0, 1), got {}",
                self.bnb_shrink
            ));
        }
        if self.max_survivors == 0 {
            return bad("max_survivors must be >= 1".into());
        }
        Ok(())
    }
}

/// A transform evaluated as part of an n-fold set.
#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub transform: OrthoTransform<f64>,
    pub distortion: f64,
}

impl Serialize for Member {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let class = self
            .transform
            .classify(DEFAULT_CLASSIFY_TOL_DEG.to_radians());
        let mut st = s.serialize_struct("Member", 3)?;
        st.serialize_field("matrix", &self.transform.to_row_major())?;
        st.serialize_field("angle_deg", &class.angle.to_degrees())?;
        st.serialize_field("distortion", &self.distortion)?;
        st.end()
    }
}

/// One reported symmetry: an axis with its fold, a plane, the inversion, or a
/// rotoreflection.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryRecord {
    pub transform: OrthoTransform<f64>,
    pub class: TransformClass<f64>,
    /// n for n-fold rotations, 0 for continuous rotation, 1 otherwise.
    pub fold: usize,
    pub distortion: f64,
    /// Estimate at most `accept_multiplier · δ`; otherwise the record sits in
    /// the band where no classification is guaranteed.
    pub certified: bool,
    pub members: Vec<Member>,
    pub wall_ms: f64,
}

impl SymmetryRecord {
    pub(crate) fn new(
        transform: OrthoTransform<f64>,
        fold: usize,
        distortion: f64,
        cfg: &DetectionConfig,
        members: Vec<Member>,
    ) -> Self {
        Self {
            class: transform.classify(DEFAULT_CLASSIFY_TOL_DEG.to_radians()),
            transform,
            fold,
            distortion,
            certified: distortion <= cfg.accept_multiplier * cfg.delta,
            members,
            wall_ms: 0.0,
        }
    }

    pub fn kind(&self) -> TransformKind {
        self.class.kind
    }

    pub fn axis(&self) -> Option<Vec3<f64>> {
        self.class.axis
    }
}

impl Serialize for SymmetryRecord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SymmetryRecord", 9)?;
        st.serialize_field("kind", &self.class.kind)?;
        st.serialize_field("fold", &self.fold)?;
        st.serialize_field("axis", &self.class.axis)?;
        st.serialize_field("angle_deg", &self.class.angle.to_degrees())?;
        st.serialize_field("matrix", &self.transform.to_row_major())?;
        st.serialize_field("distortion", &self.distortion)?;
        st.serialize_field("certified", &self.certified)?;
        st.serialize_field("members", &self.members)?;
        st.serialize_field("wall_ms", &self.wall_ms)?;
        st.end()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Best remaining estimate above `stop_multiplier · δ`.
    Gate,
    /// Every net element carved.
    Exhausted,
    /// `max_records` iterations reached.
    RecordLimit,
}

/// Output of [`detect_all`].
#[derive(Clone, Debug, Serialize)]
pub struct DetectionReport {
    pub shape: ShapeStats,
    pub config: DetectionConfig,
    pub symmetries: Vec<SymmetryRecord>,
    pub net_size: usize,
    pub evaluations: u64,
    pub levels: Vec<Level>,
    pub stop_reason: StopReason,
    /// Best estimate that ended the loop, if the gate ended it.
    pub final_estimate: Option<f64>,
    /// Whether any level dropped threshold-passing cells because of the cap.
    pub beam_truncated: bool,
    /// Lines orthogonal to at least six certified plane normals: likely
    /// continuous families of reflections, reported as a finite subset.
    pub reflection_families: Vec<Vec3<f64>>,
    pub wall_ms: f64,
}

impl DetectionReport {
    pub fn certified(&self) -> impl Iterator<Item = &SymmetryRecord> {
        self.symmetries.iter().filter(|r| r.certified)
    }

    pub fn indeterminate_count(&self) -> usize {
        self.symmetries.iter().filter(|r| !r.certified).count()
    }

    /// Certified records of one kind, optionally restricted to one fold.
    pub fn count(&self, kind: TransformKind, fold: Option<usize>) -> usize {
        self.certified()
            .filter(|r| r.class.kind == kind && fold.is_none_or(|f| r.fold == f))
            .count()
    }
}

/// Repeatedly finds the best remaining transform, records it, and carves its
/// neighborhood, until the best estimate exceeds `stop_multiplier · δ`.
pub fn detect_all<T: Real>(
    shape: &ShapeRepresentation<T>,
    cfg: &DetectionConfig,
) -> Result<DetectionReport> {
    cfg.validate()?;
    let start = Instant::now();
    let mut search = BnbSearch::new(shape, cfg)?;
    search.carve_identity(cfg.identity_carve_deg);
    let gate = cfg.stop_multiplier * cfg.delta;
    let mut records = Vec::new();
    let mut beam_truncated = false;
    let mut final_estimate = None;
    let mut stop_reason = StopReason::RecordLimit;

    for _ in 0..cfg.max_records {
        let t0 = Instant::now();
        let best = match search.best() {
            Ok(b) => b,
            Err(Error::EmptyNet) => {
                stop_reason = StopReason::Exhausted;
                break;
            }
            Err(e) => return Err(e),
        };
        beam_truncated |= best.beam_truncated;
        if best.estimate > gate {
            final_estimate = Some(best.estimate);
            stop_reason = StopReason::Gate;
            break;
        }
        let t = best.transform;
        let class = t.classify(T::lit(DEFAULT_CLASSIFY_TOL_DEG.to_radians()));
        let mut record = match (class.kind, class.axis) {
            (TransformKind::Rotation, Some(axis)) => match expand_nfold(shape, &axis, cfg) {
                Ok(mut r) => {
                    r.transform = t.cast();
                    r.class = r.transform.classify(DEFAULT_CLASSIFY_TOL_DEG.to_radians());
                    r.distortion = best.estimate;
                    r.certified = best.estimate <= cfg.accept_multiplier * cfg.delta;
                    r
                }
                Err(Error::NoFold) => {
                    SymmetryRecord::new(t.cast(), 1, best.estimate, cfg, Vec::new())
                }
                Err(e) => return Err(e),
            },
            _ => SymmetryRecord::new(t.cast(), 1, best.estimate, cfg, Vec::new()),
        };
        let mut carved = vec![t];
        carved.extend(record.members.iter().map(|m| m.transform.cast::<T>()));
        search.carve(&carved, cfg.carve_deg);
        record.wall_ms = t0.elapsed().as_secs_f64() * 1e3;
        records.push(record);
    }

    records.sort_by(|a, b| a.distortion.total_cmp(&b.distortion));
    let reflection_families = reflection_families(&records, cfg.carve_deg);
    Ok(DetectionReport {
        shape: shape.stats(),
        config: cfg.clone(),
        symmetries: records,
        net_size: search.net().len(),
        evaluations: search.evaluations(),
        levels: search.levels().to_vec(),
        stop_reason,
        final_estimate,
        beam_truncated,
        reflection_families,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Lines orthogonal (within `tol_deg`) to at least six certified plane normals.
fn reflection_families(records: &[SymmetryRecord], tol_deg: f64) -> Vec<Vec3<f64>> {
    let normals: Vec<Vec3<f64>> = records
        .iter()
        .filter(|r| r.certified && r.class.kind == TransformKind::PlaneReflection)
        .filter_map(|r| r.class.axis)
        .collect();
    let sin_tol = tol_deg.to_radians().sin();
    let cos_tol = tol_deg.to_radians().cos();
    let mut lines: Vec<Vec3<f64>> = Vec::new();
    for i in 0..normals.len() {
        for j in i + 1..normals.len() {
            let Some(line) = normalized(&cross(&normals[i], &normals[j])) else {
                continue;
            };
            if lines.iter().any(|l| dot(l, &line).abs() >= cos_tol) {
                continue;
            }
            let support = normals
                .iter()
                .filter(|n| dot(n, &line).abs() <= sin_tol)
                .count();
            if support >= 6 {
                lines.push(crate::ogroup::canonical_sign(line));
            }
        }
    }
    lines
}

/// Distortion of the reflection through the plane with each normal, in input order.
pub fn reflection_distortion_map<T: Real>(
    shape: &ShapeRepresentation<T>,
    directions: &[Vec3<T>],
    cfg: &DetectionConfig,
    exact: bool,
) -> Result<Vec<(Vec3<T>, f64)>> {
    use rayon::prelude::*;
    if directions.is_empty() {
        return Err(Error::InvalidParameter("no directions given".into()));
    }
    let set = if exact {
        None
    } else {
        Some(SampleSet::for_accuracy(
            shape,
            cfg.delta * 0.5,
            cfg.p,
            mix_seed(cfg.seed, &[label::REFL_MAP]),
        )?)
    };
    directions
        .par_iter()
        .map(|n| {
            let t = OrthoTransform::reflection(n);
            let d = match &set {
                Some(set) => set.estimate(shape.volume(), t.matrix()),
                None => exact_on_volume(shape.volume(), shape.radius(), t.matrix())?.value,
            };
            Ok((*n, d))
        })
        .collect()
}
