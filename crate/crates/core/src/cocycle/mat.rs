use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

/// Integer 2×2 matrix, row-major `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMat2 {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl IntMat2 {
    pub const IDENTITY: IntMat2 = IntMat2 { a: 1, b: 0, c: 0, d: 1 };

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        IntMat2 { a, b, c, d }
    }

    pub fn from_rows(rows: [[i64; 2]; 2]) -> Self {
        IntMat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1])
    }

    pub fn rows(&self) -> [[i64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn det(&self) -> i64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    /// Inverse in GL(2,ℤ); `None` unless `det = ±1`.
    pub fn inverse(&self) -> Option<IntMat2> {
        match self.det() {
            1 => Some(IntMat2::new(self.d, -self.b, -self.c, self.a)),
            -1 => Some(IntMat2::new(-self.d, self.b, self.c, -self.a)),
            _ => None,
        }
    }

    pub fn to_real(&self) -> RealMat2 {
        RealMat2::new(self.a as f64, self.b as f64, self.c as f64, self.d as f64)
    }

    pub fn checked_mul(&self, rhs: &IntMat2) -> Option<IntMat2> {
        let e = |x: i64, y: i64, z: i64, w: i64| x.checked_mul(y)?.checked_add(z.checked_mul(w)?);
        Some(IntMat2::new(
            e(self.a, rhs.a, self.b, rhs.c)?,
            e(self.a, rhs.b, self.b, rhs.d)?,
            e(self.c, rhs.a, self.d, rhs.c)?,
            e(self.c, rhs.b, self.d, rhs.d)?,
        ))
    }
}

impl Mul for IntMat2 {
    type Output = IntMat2;
    fn mul(self, rhs: IntMat2) -> IntMat2 {
        self.checked_mul(&rhs).expect("integer matrix product overflowed")
    }
}

impl fmt::Display for IntMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{},{}],[{},{}]]", self.a, self.b, self.c, self.d)
    }
}

/// Real 2×2 matrix, row-major `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealMat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl RealMat2 {
    pub const IDENTITY: RealMat2 = RealMat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        RealMat2 { a, b, c, d }
    }

    pub fn diag(x: f64, y: f64) -> Self {
        RealMat2::new(x, 0.0, 0.0, y)
    }

    /// Counter-clockwise rotation by `angle` radians.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        RealMat2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn transpose(&self) -> RealMat2 {
        RealMat2::new(self.a, self.c, self.b, self.d)
    }

    pub fn inverse(&self) -> Option<RealMat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(RealMat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn scale(&self, s: f64) -> RealMat2 {
        RealMat2::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn sub(&self, o: &RealMat2) -> RealMat2 {
        RealMat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Singular values `(σ_max, σ_min)` in closed form.
    pub fn singular_values(&self) -> (f64, f64) {
        let e = 0.5 * (self.a + self.d);
        let f = 0.5 * (self.a - self.d);
        let g = 0.5 * (self.c + self.b);
        let h = 0.5 * (self.c - self.b);
        let q = e.hypot(h);
        let r = f.hypot(g);
        (q + r, (q - r).abs())
    }

    /// Operator (spectral) norm.
    pub fn opnorm(&self) -> f64 {
        self.singular_values().0
    }

    /// Angle in `[0, π)` of the right singular direction of largest gain.
    ///
    /// Computed from the top eigenvector of `MᵀM`, which is well conditioned
    /// whenever the singular values are separated.
    pub fn top_right_singular_angle(&self) -> f64 {
        let p = self.a * self.a + self.c * self.c;
        let q = self.b * self.b + self.d * self.d;
        let r = self.a * self.b + self.c * self.d;
        line_angle(0.5 * (2.0 * r).atan2(p - q))
    }

    /// Angle in `[0, π)` of the right singular direction of smallest gain.
    pub fn bottom_right_singular_angle(&self) -> f64 {
        line_angle(self.top_right_singular_angle() + 0.5 * PI)
    }

    /// `‖M u(θ)‖` for the unit vector at angle `θ`.
    pub fn gain(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let v = self.apply([c, s]);
        v[0].hypot(v[1])
    }

    /// Angle of the image line of the line at angle `θ`.
    pub fn image_angle(&self, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        let v = self.apply([c, s]);
        line_angle(v[1].atan2(v[0]))
    }
}

impl Mul for RealMat2 {
    type Output = RealMat2;
    fn mul(self, o: RealMat2) -> RealMat2 {
        RealMat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl From<IntMat2> for RealMat2 {
    fn from(m: IntMat2) -> Self {
        m.to_real()
    }
}

/// Reduce an angle to the projective line `[0, π)`.
pub fn line_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(PI);
    if r >= PI {
        0.0
    } else {
        r
    }
}

/// Distance between two lines given by angles, in `[0, π/2]`.
pub fn line_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Signed angular offset `b − a` of lines, in `(−π/2, π/2]`.
pub fn line_offset(a: f64, b: f64) -> f64 {
    let d = (b - a).rem_euclid(PI);
    if d > 0.5 * PI {
        d - PI
    } else {
        d
    }
}

/// A real matrix stored as `exp(log_scale) · mat` with `‖mat‖ = 1`.
///
/// Products of many cocycle steps stay representable: after every composition
/// step the operator norm is folded into `log_scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMat2 {
    pub mat: RealMat2,
    pub log_scale: f64,
}

impl ScaledMat2 {
    pub fn identity() -> Self {
        ScaledMat2 { mat: RealMat2::IDENTITY, log_scale: 0.0 }
    }

    pub fn from_mat(m: RealMat2) -> Self {
        let mut s = ScaledMat2 { mat: m, log_scale: 0.0 };
        s.renormalize();
        s
    }

    fn renormalize(&mut self) {
        let n = self.mat.opnorm();
        if n > 0.0 && n.is_finite() {
            self.mat = self.mat.scale(1.0 / n);
            self.log_scale += n.ln();
        }
    }

    /// `step · self`, i.e. apply `self` first and then `step`.
    pub fn then(&self, step: &RealMat2) -> ScaledMat2 {
        let mut out = ScaledMat2 { mat: *step * self.mat, log_scale: self.log_scale };
        out.renormalize();
        out
    }

    /// `self · other`: apply `other` first.
    pub fn compose(&self, other: &ScaledMat2) -> ScaledMat2 {
        let mut out = ScaledMat2 { mat: self.mat * other.mat, log_scale: self.log_scale + other.log_scale };
        out.renormalize();
        out
    }

    /// Natural log of the operator norm of the represented matrix.
    pub fn log_opnorm(&self) -> f64 {
        self.log_scale + self.mat.opnorm().ln()
    }

    /// Log of both singular values `(log σ_max, log σ_min)`.
    pub fn log_singular_values(&self) -> (f64, f64) {
        let (hi, lo) = self.mat.singular_values();
        let log_hi = self.log_scale + hi.ln();
        // σ_min from the determinant avoids cancellation in the closed form.
        let det = self.mat.det().abs();
        let log_lo = if det > 0.0 { self.log_scale + det.ln() - hi.ln() } else { self.log_scale + lo.ln() };
        (log_hi, log_lo)
    }

    /// Explicit matrix; overflows for large `log_scale`.
    pub fn unscaled(&self) -> RealMat2 {
        self.mat.scale(self.log_scale.exp())
    }
}
