//! SU(2), su(2) and SO(3) arithmetic on unit quaternions.
//!
//! A group element is stored as a unit quaternion `a + b i + c j + d k`,
//! realized on demand as the 2×2 matrix
//!
//! ```text
//!     [[ a + i b,  c + i d ],
//!      [-c + i d,  a - i b ]]
//! ```
//!
//! so that `i ↦ diag(i, -i)`, `j ↦ [[0, 1], [-1, 0]]` and `k ↦ [[0, i], [i, 0]]`.
//! An su(2) vector `{t, z}` is the traceless skew-Hermitian matrix
//! `[[i t, z], [-conj(z), -i t]]`, i.e. the pure quaternion `t i + Re(z) j + Im(z) k`.
//!
//! The covering map to SO(3) sends the quaternion axes `(j, k, i)` to the spatial
//! axes `(x, y, z)`. With this choice `E_{1/2}(x)` projects to the rotation by `2πx`
//! about the z-axis, `E_{1/2}(1/2)` to `diag(-1,-1,1)` and `A = j` to `diag(1,-1,-1)`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("consecutive samples {index} and {next} are {angle:.4} rad apart (limit {limit:.4}); loop is undersampled", next = index + 1)]
    GapTooLarge {
        index: usize,
        angle: f64,
        limit: f64,
    },
    #[error("loop is not closed: first and last samples differ by {0:.3e}")]
    NotClosed(f64),
    #[error("a loop needs at least two samples")]
    TooFewSamples,
}

/// Element `{t, z}` of su(2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su2Vector {
    pub t: f64,
    pub z: Complex64,
}

impl Su2Vector {
    pub const ZERO: Su2Vector = Su2Vector {
        t: 0.0,
        z: Complex64::new(0.0, 0.0),
    };

    pub fn new(t: f64, z: Complex64) -> Self {
        Self { t, z }
    }

    /// Purely off-diagonal vector `{0, z}`.
    pub fn off_diagonal(z: Complex64) -> Self {
        Self { t: 0.0, z }
    }

    pub fn diagonal(t: f64) -> Self {
        Self {
            t,
            z: Complex64::new(0.0, 0.0),
        }
    }

    pub fn norm(&self) -> f64 {
        (self.t * self.t + self.z.norm_sqr()).sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            t: self.t * s,
            z: self.z * s,
        }
    }

    /// Matrix realization `[[i t, z], [-conj z, -i t]]`.
    pub fn matrix(&self) -> Mat2 {
        let i = Complex64::i();
        [[i * self.t, self.z], [-self.z.conj(), -i * self.t]]
    }

    fn as_pure(&self) -> [f64; 3] {
        [self.t, self.z.re, self.z.im]
    }

    fn from_pure(v: [f64; 3]) -> Self {
        Self {
            t: v[0],
            z: Complex64::new(v[1], v[2]),
        }
    }
}

impl Add for Su2Vector {
    type Output = Su2Vector;
    fn add(self, rhs: Su2Vector) -> Su2Vector {
        Su2Vector {
            t: self.t + rhs.t,
            z: self.z + rhs.z,
        }
    }
}

impl Sub for Su2Vector {
    type Output = Su2Vector;
    fn sub(self, rhs: Su2Vector) -> Su2Vector {
        Su2Vector {
            t: self.t - rhs.t,
            z: self.z - rhs.z,
        }
    }
}

impl Neg for Su2Vector {
    type Output = Su2Vector;
    fn neg(self) -> Su2Vector {
        self.scale(-1.0)
    }
}

pub type Mat2 = [[Complex64; 2]; 2];

/// Unit quaternion `[a, b, c, d] = a + b i + c j + d k`, an element of SU(2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    q: [f64; 4],
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        q: [1.0, 0.0, 0.0, 0.0],
    };

    /// Builds an element from quaternion components, normalizing to unit length.
    pub fn from_quaternion(q: [f64; 4]) -> Self {
        let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Self::IDENTITY;
        }
        Self {
            q: [q[0] / n, q[1] / n, q[2] / n, q[3] / n],
        }
    }

    pub fn quaternion(&self) -> [f64; 4] {
        self.q
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    /// `-Id`.
    pub fn minus_identity() -> Self {
        Self {
            q: [-1.0, 0.0, 0.0, 0.0],
        }
    }

    /// The constant `A = [[0, 1], [-1, 0]]`.
    pub fn a() -> Self {
        Self {
            q: [0.0, 0.0, 1.0, 0.0],
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            q: [self.q[0], -self.q[1], -self.q[2], -self.q[3]],
        }
    }

    pub fn norm(&self) -> f64 {
        self.q.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Product without renormalization; used where the caller renormalizes once.
    fn raw_mul(&self, o: &GroupElement) -> [f64; 4] {
        let [a0, a1, a2, a3] = self.q;
        let [b0, b1, b2, b3] = o.q;
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ]
    }

    /// `self · o · self⁻¹` applied to a pure quaternion.
    fn rotate_pure(&self, v: [f64; 3]) -> [f64; 3] {
        let p = GroupElement {
            q: [0.0, v[0], v[1], v[2]],
        };
        let left = GroupElement {
            q: self.raw_mul(&p),
        };
        let r = left.raw_mul(&self.inverse());
        [r[1], r[2], r[3]]
    }

    /// 2×2 complex matrix realization.
    pub fn matrix(&self) -> Mat2 {
        let [a, b, c, d] = self.q;
        [
            [Complex64::new(a, b), Complex64::new(c, d)],
            [Complex64::new(-c, d), Complex64::new(a, -b)],
        ]
    }

    /// Reads a unit quaternion back from an SU(2) matrix (first row suffices).
    pub fn from_matrix(m: &Mat2) -> Self {
        Self::from_quaternion([m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im])
    }

    /// Rotation angle in `[0, 2π]` of the element viewed in SU(2); `π` means `−Id` is at
    /// the far end of the geodesic from `Id`.
    pub fn su2_angle(&self) -> f64 {
        let v = (self.q[1] * self.q[1] + self.q[2] * self.q[2] + self.q[3] * self.q[3]).sqrt();
        v.atan2(self.q[0])
    }

    /// Euclidean quaternion distance.
    pub fn distance(&self, o: &GroupElement) -> f64 {
        self.q
            .iter()
            .zip(o.q.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Distance in SO(3): `min(|p - q|, |p + q|)` on the lifts.
    pub fn projective_distance(&self, o: &GroupElement) -> f64 {
        let plus = self
            .q
            .iter()
            .zip(o.q.iter())
            .map(|(a, b)| (a + b) * (a + b))
            .sum::<f64>()
            .sqrt();
        self.distance(o).min(plus)
    }

    /// The lift `±self` closest to `reference`.
    pub fn aligned_with(&self, reference: &GroupElement) -> GroupElement {
        let dot: f64 = self
            .q
            .iter()
            .zip(reference.q.iter())
            .map(|(a, b)| a * b)
            .sum();
        if dot < 0.0 {
            -*self
        } else {
            *self
        }
    }

    pub fn dot(&self, o: &GroupElement) -> f64 {
        self.q.iter().zip(o.q.iter()).map(|(a, b)| a * b).sum()
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: GroupElement) -> GroupElement {
        GroupElement::from_quaternion(self.raw_mul(&rhs))
    }
}

impl Neg for GroupElement {
    type Output = GroupElement;
    fn neg(self) -> GroupElement {
        GroupElement {
            q: [-self.q[0], -self.q[1], -self.q[2], -self.q[3]],
        }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({:+.6} {:+.6}i {:+.6}j {:+.6}k)",
            self.q[0], self.q[1], self.q[2], self.q[3]
        )
    }
}

/// Exponential map su(2) → SU(2): `cos ω · Id + (sin ω / ω) · H`, `ω = |H|`.
pub fn su2_exp(h: Su2Vector) -> GroupElement {
    let w = h.norm();
    if w == 0.0 {
        return GroupElement::IDENTITY;
    }
    let s = w.sin() / w;
    GroupElement::from_quaternion([w.cos(), s * h.t, s * h.z.re, s * h.z.im])
}

/// Principal logarithm; `None` at `−Id` where it is undefined.
pub fn su2_log(g: GroupElement) -> Option<Su2Vector> {
    let [a, b, c, d] = g.q;
    let v = (b * b + c * c + d * d).sqrt();
    if v == 0.0 {
        return if a > 0.0 { Some(Su2Vector::ZERO) } else { None };
    }
    let s = v.atan2(a) / v;
    Some(Su2Vector::from_pure([s * b, s * c, s * d]))
}

/// Half-integer index `r = twice / 2` of the one-parameter family `E_r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfInt(pub i32);

impl HalfInt {
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
}

/// `E_r(x) = diag(e^{2iπ r x}, e^{-2iπ r x})`.
pub fn e_r(r: HalfInt, x: f64) -> GroupElement {
    let theta = PI * r.0 as f64 * x;
    GroupElement {
        q: [theta.cos(), theta.sin(), 0.0, 0.0],
    }
}

/// `E_{1/2}(x)`, the SU(2) lift of the rotation `R_{2πx}`.
pub fn e_half(x: f64) -> GroupElement {
    e_r(HalfInt::HALF, x)
}

/// `Ad(g)·H = g H g⁻¹`.
pub fn ad_action(g: GroupElement, h: Su2Vector) -> Su2Vector {
    Su2Vector::from_pure(g.rotate_pure(h.as_pure()))
}

/// A 3×3 rotation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct So3(pub [[f64; 3]; 3]);

impl So3 {
    pub fn identity() -> Self {
        So3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    /// The model rotation `R_{2πx}` about the z-axis.
    pub fn rotation_z(x: f64) -> Self {
        let (s, c) = (2.0 * PI * x).sin_cos();
        So3([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn diag(d: [f64; 3]) -> Self {
        So3([[d[0], 0.0, 0.0], [0.0, d[1], 0.0], [0.0, 0.0, d[2]]])
    }

    pub fn mul(&self, o: &So3) -> So3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        So3(r)
    }

    pub fn transpose(&self) -> So3 {
        let m = self.0;
        So3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn determinant(&self) -> f64 {
        let m = self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, o: &So3) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                d = d.max((self.0[i][j] - o.0[i][j]).abs());
            }
        }
        d
    }

    /// Rotation angle of `self⁻¹ · o`, in `[0, π]`.
    pub fn angle_to(&self, o: &So3) -> f64 {
        let r = self.transpose().mul(o);
        let tr = r.0[0][0] + r.0[1][1] + r.0[2][2];
        ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
    }
}

/// Covering map SU(2) → SO(3); `g` and `−g` have the same image.
pub fn cover_project(g: GroupElement) -> So3 {
    // spatial (x, y, z) carries the quaternion (j, k, i) components
    let [w, b, c, d] = g.q;
    let (x, y, z) = (c, d, b);
    So3([
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ])
}

/// One of the two lifts of a rotation matrix (Shepperd's method).
pub fn lift_rotation(m: &So3) -> GroupElement {
    let r = m.0;
    let tr = r[0][0] + r[1][1] + r[2][2];
    // standard (w, x, y, z) with x, y, z the spatial axes
    let (w, x, y, z);
    if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        w = 0.25 * s;
        x = (r[2][1] - r[1][2]) / s;
        y = (r[0][2] - r[2][0]) / s;
        z = (r[1][0] - r[0][1]) / s;
    } else if r[0][0] > r[1][1] && r[0][0] > r[2][2] {
        let s = (1.0 + r[0][0] - r[1][1] - r[2][2]).sqrt() * 2.0;
        w = (r[2][1] - r[1][2]) / s;
        x = 0.25 * s;
        y = (r[0][1] + r[1][0]) / s;
        z = (r[0][2] + r[2][0]) / s;
    } else if r[1][1] > r[2][2] {
        let s = (1.0 + r[1][1] - r[0][0] - r[2][2]).sqrt() * 2.0;
        w = (r[0][2] - r[2][0]) / s;
        x = (r[0][1] + r[1][0]) / s;
        y = 0.25 * s;
        z = (r[1][2] + r[2][1]) / s;
    } else {
        let s = (1.0 + r[2][2] - r[0][0] - r[1][1]).sqrt() * 2.0;
        w = (r[1][0] - r[0][1]) / s;
        x = (r[0][2] + r[2][0]) / s;
        y = (r[1][2] + r[2][1]) / s;
        z = 0.25 * s;
    }
    GroupElement::from_quaternion([w, z, x, y])
}

/// Class of a loop in `π₁(SO(3)) ≅ Z/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomotopyClass {
    Trivial,
    Nontrivial,
}

impl fmt::Display for HomotopyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HomotopyClass::Trivial => write!(f, "trivial"),
            HomotopyClass::Nontrivial => write!(f, "nontrivial"),
        }
    }
}

/// Largest rotation angle allowed between consecutive loop samples.
pub const MAX_SAMPLE_GAP: f64 = PI / 2.0;

/// Lifts a closed loop of rotations to a continuous SU(2) path and reads off its
/// homotopy class from the sign of the endpoint.
pub fn path_lift(samples: &[So3]) -> Result<(Vec<GroupElement>, HomotopyClass), AlgebraError> {
    if samples.len() < 2 {
        return Err(AlgebraError::TooFewSamples);
    }
    let closure = samples[0].max_abs_diff(&samples[samples.len() - 1]);
    if closure > 1e-8 {
        return Err(AlgebraError::NotClosed(closure));
    }
    let mut lift = Vec::with_capacity(samples.len());
    lift.push(lift_rotation(&samples[0]));
    for (index, pair) in samples.windows(2).enumerate() {
        let angle = pair[0].angle_to(&pair[1]);
        if angle >= MAX_SAMPLE_GAP {
            return Err(AlgebraError::GapTooLarge {
                index,
                angle,
                limit: MAX_SAMPLE_GAP,
            });
        }
        let prev = lift[lift.len() - 1];
        lift.push(lift_rotation(&pair[1]).aligned_with(&prev));
    }
    let class = if lift[0].dot(&lift[lift.len() - 1]) < 0.0 {
        HomotopyClass::Nontrivial
    } else {
        HomotopyClass::Trivial
    };
    Ok((lift, class))
}
