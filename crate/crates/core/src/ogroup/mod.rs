//! Orthogonal transforms of R³: construction, classification, the displacement
//! metric, and covering nets of O(3).

mod net;

pub use net::{
    build_net, build_net_with_cap, cell_angle, covering_certificate, quat_displacement,
    random_quat, resolution_for, CarveRegion, CellKey, TransformNet, DEFAULT_NET_CAP,
};

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{cross, dot, norm, normalized, Mat3, Quat, Vec3};
use crate::scalar::Real;

/// Default angular tolerance of [`classify`], in degrees.
pub const DEFAULT_CLASSIFY_TOL_DEG: f64 = 1.0;

/// A 3×3 orthogonal matrix with its determinant sign cached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthoTransform<T: Real> {
    matrix: Mat3<T>,
    proper: bool,
}

impl<T: Real> OrthoTransform<T> {
    /// Checks orthogonality and `det = ±1` within the scalar's tolerance.
    pub fn new(matrix: Mat3<T>) -> Result<Self> {
        let dev = orthogonality_defect(&matrix);
        if dev > T::ORTHO_TOL || !dev.is_finite() {
            return Err(Error::NotOrthogonal(dev));
        }
        let det = matrix.det();
        if (det.abs() - T::one()).abs().as_f64() > T::ORTHO_TOL {
            return Err(Error::NotOrthogonal((det.abs() - T::one()).abs().as_f64()));
        }
        Ok(Self {
            matrix,
            proper: det > T::zero(),
        })
    }

    pub fn from_row_major(v: &[T; 9]) -> Result<Self> {
        Self::new(Mat3::from_row_major(v))
    }

    pub fn identity() -> Self {
        Self {
            matrix: Mat3::identity(),
            proper: true,
        }
    }

    pub fn inversion() -> Self {
        Self {
            matrix: -Mat3::identity(),
            proper: false,
        }
    }

    /// Rotation by `angle` radians about `axis` (right-handed).
    pub fn rotation(axis: &Vec3<T>, angle: T) -> Self {
        Self {
            matrix: Mat3::from_axis_angle(axis, angle),
            proper: true,
        }
    }

    /// Reflection through the plane with the given normal.
    pub fn reflection(normal: &Vec3<T>) -> Self {
        Self {
            matrix: Mat3::householder(normal),
            proper: false,
        }
    }

    /// Rotation by `angle` about `axis` followed by reflection through the
    /// plane orthogonal to `axis`.
    pub fn rotoreflection(axis: &Vec3<T>, angle: T) -> Self {
        let rot = Mat3::from_axis_angle(axis, angle);
        Self {
            matrix: Mat3::householder(axis) * rot,
            proper: false,
        }
    }

    /// `R(q)` for the proper component, `-R(q)` for the improper one.
    pub fn from_quat(q: &Quat<T>, improper: bool) -> Self {
        let m = q.to_mat();
        Self {
            matrix: if improper { -m } else { m },
            proper: !improper,
        }
    }

    pub fn matrix(&self) -> &Mat3<T> {
        &self.matrix
    }

    pub fn is_proper(&self) -> bool {
        self.proper
    }

    pub fn determinant_sign(&self) -> i8 {
        if self.proper {
            1
        } else {
            -1
        }
    }

    pub fn apply(&self, v: &Vec3<T>) -> Vec3<T> {
        self.matrix.apply(v)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix * other.matrix,
            proper: self.proper == other.proper,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
            proper: self.proper,
        }
    }

    /// Multiplication by `-I`, which swaps the component.
    pub fn flip(&self) -> Self {
        Self {
            matrix: -self.matrix,
            proper: !self.proper,
        }
    }

    /// Unit quaternion of the proper part (`self` or `-self`), with `w >= 0`.
    pub fn proper_quat(&self) -> Quat<T> {
        if self.proper {
            Quat::from_mat(&self.matrix)
        } else {
            Quat::from_mat(&(-self.matrix))
        }
    }

    pub fn to_row_major(&self) -> [T; 9] {
        self.matrix.to_row_major()
    }

    pub fn cast<S: Real>(&self) -> OrthoTransform<S> {
        OrthoTransform {
            matrix: self.matrix.cast(),
            proper: self.proper,
        }
    }

    pub fn classify(&self, tol: T) -> TransformClass<T> {
        classify_unchecked(self, tol)
    }
}

fn orthogonality_defect<T: Real>(m: &Mat3<T>) -> f64 {
    let g = m.transpose() * *m - Mat3::identity();
    g.max_abs().as_f64()
}

/// Kind of an orthogonal transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    Rotation,
    PlaneReflection,
    PointInversion,
    Rotoreflection,
}

impl TransformKind {
    pub fn is_proper(self) -> bool {
        matches!(self, TransformKind::Identity | TransformKind::Rotation)
    }

    pub fn label(self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::Rotation => "rotation",
            TransformKind::PlaneReflection => "plane_reflection",
            TransformKind::PointInversion => "point_inversion",
            TransformKind::Rotoreflection => "rotoreflection",
        }
    }
}

/// Geometric description of a transform.
///
/// `axis` is the rotation axis, the plane normal, or the rotoreflection axis.
/// `angle` is the rotation angle for proper transforms and the rotation part
/// of the rotoreflection for improper ones (0 for a plane reflection, π for
/// the point inversion).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransformClass<T: Real> {
    pub kind: TransformKind,
    pub axis: Option<Vec3<T>>,
    pub angle: T,
}

impl<T: Real> Serialize for TransformClass<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TransformClass", 3)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("axis", &self.axis.map(|a| a.map(|x| x.as_f64())))?;
        st.serialize_field("angle_deg", &self.angle.as_f64().to_degrees())?;
        st.end()
    }
}

/// Classifies `r` with angular tolerance `tol` (radians).
pub fn classify<T: Real>(r: &OrthoTransform<T>, tol: T) -> Result<TransformClass<T>> {
    let dev = orthogonality_defect(&r.matrix);
    if dev > T::ORTHO_TOL {
        return Err(Error::NotOrthogonal(dev));
    }
    Ok(classify_unchecked(r, tol))
}

fn classify_unchecked<T: Real>(r: &OrthoTransform<T>, tol: T) -> TransformClass<T> {
    let proper = if r.proper { r.matrix } else { -r.matrix };
    let (theta, axis) = rotation_angle_axis(&proper);
    if r.proper {
        if theta <= tol {
            return TransformClass {
                kind: TransformKind::Identity,
                axis: None,
                angle: theta,
            };
        }
        return TransformClass {
            kind: TransformKind::Rotation,
            axis: Some(axis),
            angle: theta,
        };
    }
    // -R(a, θ) is the reflection through a⊥ composed with rotation by π - θ about a.
    let phi = T::PI() - theta;
    if theta <= tol {
        TransformClass {
            kind: TransformKind::PointInversion,
            axis: None,
            angle: T::PI(),
        }
    } else if phi <= tol {
        TransformClass {
            kind: TransformKind::PlaneReflection,
            axis: Some(axis),
            angle: T::zero(),
        }
    } else {
        TransformClass {
            kind: TransformKind::Rotoreflection,
            axis: Some(axis),
            angle: phi,
        }
    }
}

/// Angle in `[0, π]` and unit axis of a proper rotation. The axis points so
/// that the rotation is counter-clockwise by the angle; at the angle π either
/// direction is valid and the one with a positive leading component is used.
pub fn rotation_angle_axis<T: Real>(m: &Mat3<T>) -> (T, Vec3<T>) {
    let q = Quat::from_mat(m);
    let theta = q.angle();
    let one = T::one();
    let w = [
        m.m[2][1] - m.m[1][2],
        m.m[0][2] - m.m[2][0],
        m.m[1][0] - m.m[0][1],
    ];
    let axis = if theta < T::FRAC_PI_2() {
        normalized(&q.vector()).unwrap_or([T::zero(), T::zero(), one])
    } else {
        let c = theta.cos();
        let b = [0, 1, 2].map(|i| {
            [0, 1, 2]
                .map(|j| (m.m[i][j] + m.m[j][i]) * T::lit(0.5) - if i == j { c } else { T::zero() })
        });
        let col = (0..3).fold(0, |best, i| if b[i][i] > b[best][best] { i } else { best });
        let mut a = normalized(&b[col]).unwrap_or([T::zero(), T::zero(), one]);
        if dot(&a, &w) < T::zero() {
            a = a.map(|x| -x);
        }
        if norm(&w) <= T::lit(T::ORTHO_TOL.sqrt()) {
            a = canonical_sign(a);
        }
        a
    };
    (theta, axis)
}

/// Flips `v` so its first non-negligible component is positive.
pub fn canonical_sign<T: Real>(v: Vec3<T>) -> Vec3<T> {
    let eps = T::lit(1e-9);
    for c in v {
        if c.abs() > eps {
            return if c < T::zero() { v.map(|x| -x) } else { v };
        }
    }
    v
}

/// `r * σ_max(R1 - R2)`, the largest displacement of a point in `B_r`.
pub fn displacement_distance<T: Real>(a: &OrthoTransform<T>, b: &OrthoTransform<T>, r: T) -> T {
    r * (a.matrix - b.matrix).spectral_norm()
}

/// Geodesic angle between transforms of the same component.
pub fn geodesic_distance<T: Real>(a: &OrthoTransform<T>, b: &OrthoTransform<T>) -> Result<T> {
    if a.proper != b.proper {
        return Err(Error::ComponentMismatch);
    }
    // (-A)ᵀ(-B) = AᵀB, so improper pairs need no explicit flip.
    let rel = a.matrix.transpose() * b.matrix;
    Ok(Quat::from_mat(&rel).angle())
}

/// The `n - 1` non-trivial rotations `2πi/n`, `i = 1..n`, about `axis`.
pub fn nfold_members<T: Real>(axis: &Vec3<T>, n: usize) -> Result<Vec<OrthoTransform<T>>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "fold must be >= 2, got {n}"
        )));
    }
    let a = normalized(axis).ok_or_else(|| Error::InvalidParameter("zero axis".into()))?;
    let step = T::TAU() / T::of_usize(n);
    Ok((1..n)
        .map(|i| OrthoTransform::rotation(&a, step * T::of_usize(i)))
        .collect())
}

/// Unit vector orthogonal to `a`.
pub fn any_orthogonal<T: Real>(a: &Vec3<T>) -> Vec3<T> {
    let pick = if a[0].abs() < T::lit(0.9) {
        [T::one(), T::zero(), T::zero()]
    } else {
        [T::zero(), T::one(), T::zero()]
    };
    normalized(&cross(a, &pick)).expect("non-parallel helper axis")
}

impl<T: Real> Serialize for OrthoTransform<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("OrthoTransform", 2)?;
        st.serialize_field("matrix", &self.to_row_major().map(|x| x.as_f64()))?;
        st.serialize_field(
            "class",
            &self.classify(T::lit(DEFAULT_CLASSIFY_TOL_DEG.to_radians())),
        )?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(x: f64) -> f64 {
        x.to_radians()
    }

    #[test]
    fn classify_examples() {
        let tol = deg(1.0);
        let refl = OrthoTransform::new(Mat3::diag(1.0, 1.0, -1.0)).unwrap();
        let c = classify(&refl, tol).unwrap();
        assert_eq!(c.kind, TransformKind::PlaneReflection);
        let a = c.axis.unwrap();
        assert!((a[2].abs() - 1.0).abs() < 1e-12);

        let rot = OrthoTransform::rotation(&[0.0, 0.0, 1.0], deg(72.0));
        let c = classify(&rot, tol).unwrap();
        assert_eq!(c.kind, TransformKind::Rotation);
        assert!((c.angle.to_degrees() - 72.0).abs() < 1e-9);
        assert!((c.axis.unwrap()[2] - 1.0).abs() < 1e-12);

        let inv = OrthoTransform::<f64>::inversion();
        assert_eq!(
            classify(&inv, tol).unwrap().kind,
            TransformKind::PointInversion
        );
        assert_eq!(
            classify(&OrthoTransform::<f64>::identity(), tol)
                .unwrap()
                .kind,
            TransformKind::Identity
        );
    }

    #[test]
    fn classify_rotoreflection_and_half_turn() {
        let tol = deg(1.0);
        let axis = normalized(&[1.0, 2.0, -0.5]).unwrap();
        let s = OrthoTransform::rotoreflection(&axis, deg(36.0));
        let c = classify(&s, tol).unwrap();
        assert_eq!(c.kind, TransformKind::Rotoreflection);
        assert!((c.angle.to_degrees() - 36.0).abs() < 1e-9);
        assert!((dot(&c.axis.unwrap(), &axis).abs() - 1.0).abs() < 1e-9);

        let half = OrthoTransform::rotation(&axis, std::f64::consts::PI);
        let c = classify(&half, tol).unwrap();
        assert!((c.angle - std::f64::consts::PI).abs() < 1e-9);
        assert!((dot(&c.axis.unwrap(), &axis).abs() - 1.0).abs() < 1e-9);

        let refl = OrthoTransform::reflection(&axis);
        let c = classify(&refl, tol).unwrap();
        assert_eq!(c.kind, TransformKind::PlaneReflection);
        assert!((dot(&c.axis.unwrap(), &axis).abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_orthogonal_rejected() {
        let m = Mat3::diag(1.0, 1.0, 1.1);
        assert!(matches!(
            OrthoTransform::new(m),
            Err(Error::NotOrthogonal(_))
        ));
    }

    #[test]
    fn metric_examples() {
        let i = OrthoTransform::<f64>::identity();
        let rz = OrthoTransform::rotation(&[0.0, 0.0, 1.0], std::f64::consts::FRAC_PI_2);
        assert!(displacement_distance(&i, &i, 1.0).abs() < 1e-12);
        assert!((displacement_distance(&i, &rz, 1.0) - 2f64.sqrt()).abs() < 1e-9);
        assert!((displacement_distance(&i, &OrthoTransform::inversion(), 3.0) - 6.0).abs() < 1e-9);
        assert!((geodesic_distance(&i, &rz).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        assert_eq!(
            geodesic_distance(&i, &OrthoTransform::inversion()),
            Err(Error::ComponentMismatch)
        );
    }

    #[test]
    fn nfold_closure() {
        let axis = [0.0, 0.0, 1.0];
        let m = nfold_members(&axis, 4).unwrap();
        assert_eq!(m.len(), 3);
        let prod = m[0].compose(&m[2]);
        assert!((*prod.matrix() - Mat3::identity()).max_abs() < 1e-12);
        let prod = m[0].compose(&m[1]);
        assert!((*prod.matrix() - *m[2].matrix()).max_abs() < 1e-12);
        assert_eq!(nfold_members(&axis, 2).unwrap().len(), 1);
    }
}
