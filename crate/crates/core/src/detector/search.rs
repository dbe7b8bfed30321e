//! Minimum-distortion search over a net, flat or branch-and-bound.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use super::DetectionConfig;
use crate::distortion::{required_samples, SampleSet};
use crate::error::{Error, Result};
use crate::ogroup::{
    resolution_for, CarveRegion, CellKey, OrthoTransform, TransformNet, DEFAULT_NET_CAP,
};
use crate::rng::{label, mix_seed};
use crate::scalar::Real;
use crate::volume::ShapeRepresentation;

/// One resolution level of the search.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Level {
    pub delta: f64,
    pub epsilon: f64,
    pub failure_prob: f64,
    pub samples: usize,
    /// Cells per side of the quaternion grid at this level.
    pub resolution: u32,
}

/// Best element found by a search.
#[derive(Clone, Debug)]
pub struct BestCandidate<T: Real> {
    pub transform: OrthoTransform<T>,
    pub estimate: f64,
    /// Best estimate of each level that was evaluated.
    pub level_bests: Vec<f64>,
    /// Whether the survivor cap dropped candidates that passed the threshold.
    pub beam_truncated: bool,
    pub evaluations: u64,
}

/// Net radius relative to `r` that reaches precision `delta` for complexity `c`.
fn relative_radius(delta: f64, complexity: f64) -> f64 {
    delta / (2.0 * complexity)
}

/// Level schedule and the integer refinement factor between levels.
pub fn schedule(cfg: &DetectionConfig, complexity: f64) -> Result<(Vec<Level>, u32)> {
    cfg.validate()?;
    if !(complexity > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "shape complexity must be > 0, got {complexity}"
        )));
    }
    let coarse = if cfg.use_bnb {
        cfg.coarse_delta
    } else {
        cfg.delta
    };
    let mut deltas = vec![coarse];
    while *deltas.last().expect("non-empty") > cfg.delta {
        let next = (deltas.last().expect("non-empty") * cfg.bnb_shrink).max(cfg.delta);
        deltas.push(next);
    }
    let factor = (1.0 / cfg.bnb_shrink - 1e-9).ceil().max(2.0) as u32;
    let final_n = resolution_for(relative_radius(cfg.delta, complexity));
    let projected = 8u128 * (final_n as u128).pow(3);
    if projected > cfg.net_cap as u128 {
        return Err(Error::ExcessiveNetSize {
            projected,
            cap: cfg.net_cap as u128,
        });
    }
    let levels_n = deltas.len();
    let p_level = cfg.p / levels_n as f64;
    let mut base = 1u64;
    for (l, d) in deltas.iter().enumerate() {
        let need = resolution_for(relative_radius(*d, complexity));
        let scale = (factor as u64).checked_pow(l as u32).unwrap_or(u64::MAX);
        base = base.max(need.div_ceil(scale));
    }
    let mut levels = Vec::with_capacity(levels_n);
    for (l, d) in deltas.iter().enumerate() {
        let n = (factor as u64)
            .checked_pow(l as u32)
            .and_then(|s| s.checked_mul(base))
            .filter(|n| *n <= u32::MAX as u64)
            .ok_or(Error::ExcessiveNetSize {
                projected,
                cap: cfg.net_cap as u128,
            })?;
        let epsilon = d * 0.5;
        levels.push(Level {
            delta: *d,
            epsilon,
            failure_prob: p_level,
            samples: required_samples(epsilon, p_level)?,
            resolution: n as u32,
        });
    }
    // Only level 0 is materialized; it obeys the flat-net cap.
    let level0 = 8u128 * (levels[0].resolution as u128).pow(3);
    if level0 > DEFAULT_NET_CAP {
        return Err(Error::ExcessiveNetSize {
            projected: level0,
            cap: DEFAULT_NET_CAP,
        });
    }
    Ok((levels, factor))
}

pub(crate) fn level_seed(cfg: &DetectionConfig, level: usize) -> u64 {
    mix_seed(cfg.seed, &[label::BNB_LEVEL, level as u64])
}

/// Minimum by estimate, ties broken by position.
fn argmin(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    values.fold(None, |best, (i, v)| match best {
        Some((_, bv)) if bv <= v => best,
        _ => Some((i, v)),
    })
}

/// Algorithm-1 style search: every active net element is scored with
/// `m = required_samples(δ/2, p)` points and the minimum is returned.
///
/// The estimate of an element is abandoned once its partial sum exceeds the
/// best complete estimate seen so far; the minimum is unaffected.
pub fn detect_best<T: Real>(
    shape: &ShapeRepresentation<T>,
    net: &TransformNet<T>,
    cfg: &DetectionConfig,
) -> Result<BestCandidate<T>> {
    cfg.validate()?;
    let active = net.active_indices();
    if active.is_empty() {
        return Err(Error::EmptyNet);
    }
    let set = SampleSet::for_accuracy(shape, cfg.delta * 0.5, cfg.p, level_seed(cfg, 0))?;
    let vol = shape.volume();
    let best = AtomicU64::new(f64::INFINITY.to_bits());
    let values: Vec<Option<f64>> = active
        .par_iter()
        .map(|&i| {
            let t = net.element(i);
            let limit = f64::from_bits(best.load(Ordering::Relaxed));
            let v = set.estimate_below(vol, t.matrix(), limit);
            if let Some(v) = v {
                best.fetch_min(v.to_bits(), Ordering::Relaxed);
            }
            v
        })
        .collect();
    let (pos, estimate) = argmin(
        values
            .iter()
            .enumerate()
            .filter_map(|(k, v)| v.map(|v| (k, v))),
    )
    .ok_or(Error::EmptyNet)?;
    Ok(BestCandidate {
        transform: net.element(active[pos]),
        estimate,
        level_bests: vec![estimate],
        beam_truncated: false,
        evaluations: active.len() as u64,
    })
}

/// Coarse-to-fine search. Level 0 scores a full grid at `coarse_delta`;
/// each further level halves (by `bnb_shrink`) the precision and scores only
/// the sub-cells of survivors, i.e. cells whose estimate is within
/// `δ_l + ε_l` of the level's best.
pub fn detect_best_bnb<T: Real>(
    shape: &ShapeRepresentation<T>,
    cfg: &DetectionConfig,
) -> Result<BestCandidate<T>> {
    let mut search = BnbSearch::new(shape, cfg)?;
    search.carve_identity(cfg.identity_carve_deg);
    search.best()
}

/// Search state kept across the iterations of `detect_all`: the carved level-0
/// grid, its cached estimates and the per-level sample sets.
pub struct BnbSearch<'a, T: Real> {
    shape: &'a ShapeRepresentation<T>,
    levels: Vec<Level>,
    factor: u32,
    sets: Vec<SampleSet<T>>,
    net: TransformNet<T>,
    cache: Option<Vec<f64>>,
    fine: Vec<HashMap<CellKey, Score>>,
    beam: usize,
    evaluations: u64,
}

impl<'a, T: Real> BnbSearch<'a, T> {
    pub fn new(shape: &'a ShapeRepresentation<T>, cfg: &DetectionConfig) -> Result<Self> {
        let (levels, factor) = schedule(cfg, shape.complexity().as_f64())?;
        let sets = levels
            .iter()
            .enumerate()
            .map(|(l, lv)| {
                SampleSet::for_accuracy(shape, lv.epsilon, lv.failure_prob, level_seed(cfg, l))
            })
            .collect::<Result<Vec<_>>>()?;
        let rho0 = shape.radius()
            * T::lit(relative_radius(
                levels[0].delta,
                shape.complexity().as_f64(),
            ));
        let net = TransformNet::cubed(levels[0].resolution, rho0, shape.radius());
        let fine = vec![HashMap::new(); levels.len() - 1];
        Ok(Self {
            shape,
            levels,
            factor,
            sets,
            net,
            cache: None,
            fine,
            beam: cfg.max_survivors,
            evaluations: 0,
        })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn net(&self) -> &TransformNet<T> {
        &self.net
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    /// Geodesic ball around the identity; a radius of 0 carves nothing.
    pub fn carve_identity(&mut self, radius_deg: f64) {
        if radius_deg > 0.0 {
            self.carve(&[OrthoTransform::identity()], radius_deg);
        }
    }

    pub fn carve(&mut self, detected: &[OrthoTransform<T>], radius_deg: f64) {
        self.net.carve_in_place(detected, T::lit(radius_deg));
    }

    pub fn carve_regions(&mut self, regions: &[CarveRegion<T>]) {
        self.net.carve_regions(regions);
    }

    /// Exact estimates of every candidate that can survive at level `l`.
    ///
    /// Scores persist across calls. A cell abandoned under some limit is only
    /// rescored when the current threshold rises above that limit, so the
    /// result equals scoring every candidate from scratch.
    fn score_level(&mut self, l: usize, cands: &[CellKey], slack: f64) -> Vec<(CellKey, f64)> {
        let cache = &mut self.fine[l - 1];
        let known_best = |cache: &HashMap<CellKey, Score>| {
            cands
                .iter()
                .filter_map(|c| match cache.get(c) {
                    Some(Score::Exact(v)) => Some(*v),
                    _ => None,
                })
                .fold(f64::INFINITY, f64::min)
        };
        let mut todo: Vec<CellKey> = cands
            .iter()
            .filter(|c| !cache.contains_key(c))
            .copied()
            .collect();
        loop {
            let scores = evaluate_cells(&self.sets[l], self.shape, &todo, slack, known_best(cache));
            self.evaluations += todo.len() as u64;
            cache.extend(todo.iter().copied().zip(scores));
            let threshold = known_best(cache) + slack;
            todo = cands
                .iter()
                .filter(|c| matches!(cache.get(c), Some(Score::Above(lim)) if *lim < threshold))
                .copied()
                .collect();
            if todo.is_empty() {
                break;
            }
        }
        cands
            .iter()
            .filter_map(|c| match cache.get(c) {
                Some(Score::Exact(v)) => Some((*c, *v)),
                _ => None,
            })
            .collect()
    }

    fn level0_values(&mut self) -> &[f64] {
        if self.cache.is_none() {
            let vol = self.shape.volume();
            let set = &self.sets[0];
            let net = &self.net;
            let values: Vec<f64> = (0..net.len())
                .into_par_iter()
                .map(|i| {
                    set.estimate_below(vol, net.element(i).matrix(), f64::INFINITY)
                        .unwrap_or(f64::INFINITY)
                })
                .collect();
            self.evaluations += values.len() as u64;
            self.cache = Some(values);
        }
        self.cache.as_deref().expect("filled above")
    }

    /// Runs the search on the currently active part of O(3).
    pub fn best(&mut self) -> Result<BestCandidate<T>> {
        let evaluations_before = self.evaluations;
        let slack0 = self.levels[0].delta + self.levels[0].epsilon;
        let beam = self.beam;
        self.level0_values();
        let values = self.cache.as_deref().expect("filled above");
        let net = &self.net;
        let best0 = (0..net.len())
            .filter(|&i| net.is_active(i))
            .map(|i| values[i])
            .fold(f64::INFINITY, f64::min);
        if best0 == f64::INFINITY {
            return Err(Error::EmptyNet);
        }
        let scored: Vec<(CellKey, f64)> = (0..net.len())
            .filter(|&i| net.is_active(i) && values[i] <= best0 + slack0)
            .map(|i| (net.cell(i).expect("cubed grid"), values[i]))
            .collect();
        let (mut survivors, mut truncated) = select(scored, slack0, beam);
        let mut best = survivors[0];
        let mut level_bests = vec![best.1];

        for l in 1..self.levels.len() {
            let slack = self.levels[l].delta + self.levels[l].epsilon;
            let cands: Vec<CellKey> = survivors
                .iter()
                .flat_map(|(c, _)| c.children(self.factor))
                .filter(|c| !self.net.is_carved(&c.quat(), c.improper))
                .collect();
            if cands.is_empty() {
                break;
            }
            let scored = self.score_level(l, &cands, slack);
            let (next, cut) = select(scored, slack, beam);
            truncated |= cut;
            survivors = next;
            best = survivors[0];
            level_bests.push(best.1);
        }
        Ok(BestCandidate {
            transform: best.0.transform(),
            estimate: best.1,
            level_bests,
            beam_truncated: truncated,
            evaluations: self.evaluations - evaluations_before,
        })
    }
}

/// Estimate of a cell, or the limit it was abandoned at.
#[derive(Clone, Copy, Debug)]
enum Score {
    Exact(f64),
    Above(f64),
}

/// Scores cells, abandoning those that provably exceed the running best plus `slack`.
fn evaluate_cells<T: Real>(
    set: &SampleSet<T>,
    shape: &ShapeRepresentation<T>,
    cells: &[CellKey],
    slack: f64,
    best: f64,
) -> Vec<Score> {
    let vol = shape.volume();
    let best = AtomicU64::new(best.to_bits());
    cells
        .par_iter()
        .map(|c| {
            let t = c.transform::<T>();
            let limit = f64::from_bits(best.load(Ordering::Relaxed)) + slack;
            match set.estimate_below(vol, t.matrix(), limit) {
                Some(v) => {
                    best.fetch_min(v.to_bits(), Ordering::Relaxed);
                    Score::Exact(v)
                }
                None => Score::Above(limit),
            }
        })
        .collect()
}

/// Keeps candidates within `slack` of the best, sorted by estimate then cell,
/// at most `beam` of them. Also reports whether the cap removed any.
fn select(mut scored: Vec<(CellKey, f64)>, slack: f64, beam: usize) -> (Vec<(CellKey, f64)>, bool) {
    let best = scored.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    scored.retain(|s| s.1 <= best + slack);
    let order = |a: &(CellKey, f64), b: &(CellKey, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    let beam = beam.max(1);
    let truncated = scored.len() > beam;
    if truncated {
        scored.select_nth_unstable_by(beam - 1, order);
        scored.truncate(beam);
    }
    scored.sort_by(order);
    (scored, truncated)
}
