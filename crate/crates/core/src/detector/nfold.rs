//! Fold detection along a rotation axis.

use std::collections::HashMap;

use super::{DetectionConfig, Member, SymmetryRecord};
use crate::distortion::SampleSet;
use crate::error::{Error, Result};
use crate::linalg::{normalized, Vec3};
use crate::ogroup::OrthoTransform;
use crate::rng::{label, mix_seed};
use crate::scalar::Real;
use crate::volume::ShapeRepresentation;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Largest `n ≤ max_fold` whose rotations `2πi/n` all score at most δ.
/// Reports fold 0 (continuous) when every `n` in `2..=max_fold` passes.
///
/// Folds are tried from `max_fold` down; rotation angles shared between folds
/// are estimated once.
pub fn expand_nfold<T: Real>(
    shape: &ShapeRepresentation<T>,
    axis: &Vec3<T>,
    cfg: &DetectionConfig,
) -> Result<SymmetryRecord> {
    cfg.validate()?;
    let axis = normalized(axis).ok_or_else(|| Error::InvalidParameter("zero axis".into()))?;
    let set = SampleSet::for_accuracy(
        shape,
        cfg.delta * 0.5,
        cfg.p,
        mix_seed(cfg.seed, &[label::NFOLD]),
    )?;
    let vol = shape.volume();
    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut member = |i: usize, n: usize| -> (OrthoTransform<T>, f64) {
        let g = gcd(i, n);
        let t = OrthoTransform::rotation(&axis, T::TAU() * T::of_usize(i / g) / T::of_usize(n / g));
        let d = *cache
            .entry((i / g, n / g))
            .or_insert_with(|| set.estimate(vol, t.matrix()));
        (t, d)
    };
    let mut passes = |n: usize| (1..n).all(|i| member(i, n).1 <= cfg.delta);

    let mut fold = None;
    for n in (2..=cfg.max_fold).rev() {
        if passes(n) {
            fold = Some(n);
            break;
        }
    }
    let n = fold.ok_or(Error::NoFold)?;
    let continuous = n == cfg.max_fold && (2..cfg.max_fold).all(&mut passes);
    let members: Vec<(OrthoTransform<T>, f64)> = (1..n).map(|i| member(i, n)).collect();
    let distortion = members.iter().map(|m| m.1).fold(0.0, f64::max);
    let transform = members[0].0.cast::<f64>();
    Ok(SymmetryRecord::new(
        transform,
        if continuous { 0 } else { n },
        distortion,
        cfg,
        members
            .into_iter()
            .map(|(t, d)| Member {
                transform: t.cast(),
                distortion: d,
            })
            .collect(),
    ))
}
