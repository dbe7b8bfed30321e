//! Minimal fixed-size linear algebra: 3-vectors, 3×3 matrices and unit
//! quaternions, generic over [`Real`].

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

#[inline(always)]
pub fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline(always)]
pub fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline(always)]
pub fn norm<T: Real>(a: &Vec3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline(always)]
pub fn scale<T: Real>(a: &Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline(always)]
pub fn sub<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline(always)]
pub fn add<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Returns `None` for (near) zero vectors.
pub fn normalized<T: Real>(a: &Vec3<T>) -> Option<Vec3<T>> {
    let n = norm(a);
    if n > T::epsilon() {
        Some(scale(a, T::one() / n))
    } else {
        None
    }
}

/// Angle between two lines through the origin, in radians, ignoring direction.
pub fn line_angle<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    let c = (dot(a, b) / (norm(a) * norm(b))).abs();
    c.min(T::one()).acos()
}

pub fn vec_cast<S: Real, T: Real>(v: &Vec3<S>) -> Vec3<T> {
    [
        T::lit(v[0].as_f64()),
        T::lit(v[1].as_f64()),
        T::lit(v[2].as_f64()),
    ]
}

/// Row-major 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Mat3<T: Real> {
    pub m: [[T; 3]; 3],
}

impl<T: Real> Mat3<T> {
    pub fn new(m: [[T; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one(), T::one())
    }

    pub fn zero() -> Self {
        Self {
            m: [[T::zero(); 3]; 3],
        }
    }

    pub fn diag(a: T, b: T, c: T) -> Self {
        let z = T::zero();
        Self {
            m: [[a, z, z], [z, b, z], [z, z, c]],
        }
    }

    pub fn from_row_major(v: &[T; 9]) -> Self {
        Self {
            m: [[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]],
        }
    }

    pub fn to_row_major(&self) -> [T; 9] {
        let m = &self.m;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    /// Rodrigues' formula. `axis` need not be normalized.
    pub fn from_axis_angle(axis: &Vec3<T>, angle: T) -> Self {
        let a = normalized(axis).unwrap_or([T::zero(), T::zero(), T::one()]);
        let half = angle * T::lit(0.5);
        Quat::new(
            half.cos(),
            a[0] * half.sin(),
            a[1] * half.sin(),
            a[2] * half.sin(),
        )
        .to_mat()
    }

    /// Householder reflection `I - 2nnᵀ` through the plane with normal `n`.
    pub fn householder(n: &Vec3<T>) -> Self {
        let n = normalized(n).unwrap_or([T::zero(), T::zero(), T::one()]);
        let two = T::lit(2.0);
        let mut out = Self::identity();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] -= two * n[i] * n[j];
            }
        }
        out
    }

    #[inline(always)]
    pub fn apply(&self, v: &Vec3<T>) -> Vec3<T> {
        let m = &self.m;
        [
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ]
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn det(&self) -> T {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut out = *self;
        out.m.iter_mut().flatten().for_each(|x| *x *= s);
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |a, &x| a.max(x.abs()))
    }

    pub fn cast<S: Real>(&self) -> Mat3<S> {
        let mut out = Mat3::<S>::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = S::lit(self.m[i][j].as_f64());
            }
        }
        out
    }

    /// Largest singular value, from the top eigenvalue of `MᵀM`.
    pub fn spectral_norm(&self) -> T {
        let g = self.transpose() * *self;
        sym_eigenvalues(&g)[2].max(T::zero()).sqrt()
    }
}

impl<T: Real> Mul for Mat3<T> {
    type Output = Mat3<T>;
    fn mul(self, rhs: Mat3<T>) -> Mat3<T> {
        let mut out = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[i][0] * rhs.m[0][j]
                    + self.m[i][1] * rhs.m[1][j]
                    + self.m[i][2] * rhs.m[2][j];
            }
        }
        out
    }
}

impl<T: Real> Add for Mat3<T> {
    type Output = Mat3<T>;
    fn add(self, rhs: Mat3<T>) -> Mat3<T> {
        let mut out = self;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] += rhs.m[i][j];
            }
        }
        out
    }
}

impl<T: Real> Sub for Mat3<T> {
    type Output = Mat3<T>;
    fn sub(self, rhs: Mat3<T>) -> Mat3<T> {
        self + (-rhs)
    }
}

impl<T: Real> Neg for Mat3<T> {
    type Output = Mat3<T>;
    fn neg(self) -> Mat3<T> {
        self.scaled(-T::one())
    }
}

/// Eigenvalues of a symmetric 3×3 matrix in ascending order (closed-form
/// trigonometric solution of the characteristic cubic).
pub fn sym_eigenvalues<T: Real>(a: &Mat3<T>) -> [T; 3] {
    let m = &a.m;
    let p1 = m[0][1] * m[0][1] + m[0][2] * m[0][2] + m[1][2] * m[1][2];
    let q = a.trace() / T::lit(3.0);
    let d0 = m[0][0] - q;
    let d1 = m[1][1] - q;
    let d2 = m[2][2] - q;
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + T::lit(2.0) * p1;
    let p = (p2 / T::lit(6.0)).sqrt();
    if p <= T::epsilon() * (T::one() + q.abs()) {
        return [q, q, q];
    }
    let b = (*a - Mat3::diag(q, q, q)).scaled(T::one() / p);
    let r = (b.det() / T::lit(2.0)).max(-T::one()).min(T::one());
    let phi = r.acos() / T::lit(3.0);
    let two_pi_3 = T::lit(2.0 * std::f64::consts::PI / 3.0);
    let e_hi = q + T::lit(2.0) * p * phi.cos();
    let e_lo = q + T::lit(2.0) * p * (phi + two_pi_3).cos();
    let e_mid = T::lit(3.0) * q - e_hi - e_lo;
    [e_lo, e_mid, e_hi]
}

/// Unit quaternion `(w, x, y, z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quat<T: Real> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quat<T> {
    pub fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_array(q: [T; 4]) -> Self {
        Self::new(q[0], q[1], q[2], q[3])
    }

    pub fn to_array(&self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn normalize(&self) -> Self {
        let n = (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt();
        Self::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn dot(&self, o: &Self) -> T {
        self.w * o.w + self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn vector(&self) -> Vec3<T> {
        [self.x, self.y, self.z]
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> T {
        let v = norm(&self.vector());
        T::lit(2.0) * v.atan2(self.w.abs())
    }

    pub fn to_mat(&self) -> Mat3<T> {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let one = T::one();
        let two = T::lit(2.0);
        Mat3::new([
            [
                one - two * (y * y + z * z),
                two * (x * y - w * z),
                two * (x * z + w * y),
            ],
            [
                two * (x * y + w * z),
                one - two * (x * x + z * z),
                two * (y * z - w * x),
            ],
            [
                two * (x * z - w * y),
                two * (y * z + w * x),
                one - two * (x * x + y * y),
            ],
        ])
    }

    /// Shepperd's method. The input must be a proper rotation.
    pub fn from_mat(r: &Mat3<T>) -> Self {
        let m = &r.m;
        let one = T::one();
        let quarter = T::lit(0.25);
        let tr = r.trace();
        let q = if tr > m[0][0].max(m[1][1]).max(m[2][2]) {
            let s = (one + tr).sqrt() * T::lit(2.0);
            Self::new(
                quarter * s,
                (m[2][1] - m[1][2]) / s,
                (m[0][2] - m[2][0]) / s,
                (m[1][0] - m[0][1]) / s,
            )
        } else if m[0][0] >= m[1][1] && m[0][0] >= m[2][2] {
            let s = (one + m[0][0] - m[1][1] - m[2][2]).sqrt() * T::lit(2.0);
            Self::new(
                (m[2][1] - m[1][2]) / s,
                quarter * s,
                (m[0][1] + m[1][0]) / s,
                (m[0][2] + m[2][0]) / s,
            )
        } else if m[1][1] >= m[2][2] {
            let s = (one + m[1][1] - m[0][0] - m[2][2]).sqrt() * T::lit(2.0);
            Self::new(
                (m[0][2] - m[2][0]) / s,
                (m[0][1] + m[1][0]) / s,
                quarter * s,
                (m[1][2] + m[2][1]) / s,
            )
        } else {
            let s = (one + m[2][2] - m[0][0] - m[1][1]).sqrt() * T::lit(2.0);
            Self::new(
                (m[1][0] - m[0][1]) / s,
                (m[0][2] + m[2][0]) / s,
                (m[1][2] + m[2][1]) / s,
                quarter * s,
            )
        };
        let q = q.normalize();
        if q.w < T::zero() {
            Self::new(-q.w, -q.x, -q.y, -q.z)
        } else {
            q
        }
    }
}
