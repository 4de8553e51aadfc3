//! Unimodular 2×2 matrices, singular axes, and the traceless tangent chart.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub type Vec2 = [f64; 2];

const RENORMALIZE_DRIFT: f64 = 1e-12;
const HARD_DRIFT: f64 = 1e-9;
const DEGENERATE_NORM: f64 = 1.0 + 1e-8;
const LOG_TRACE_FLOOR: f64 = -2.0 + 1e-6;

/// Row-major element of SL(2,R).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

/// Determinant noise floor for entries of the given squared Frobenius size.
fn det_noise(frob_sq: f64) -> f64 {
    8.0 * f64::EPSILON * frob_sq
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Validates unimodularity, rescaling by `1/sqrt(det)` when the drift is small but measurable.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Mat2> {
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(LabError::Invalid("non-finite matrix entry".into()));
        }
        let det = a * d - b * c;
        let drift = (det - 1.0).abs();
        let noise = det_noise(a * a + b * b + c * c + d * d);
        if drift > HARD_DRIFT && drift > noise {
            return Err(LabError::NotUnimodular { drift });
        }
        Ok(Mat2::settle(a, b, c, d))
    }

    /// Builds a matrix from entries known to be unimodular up to rounding.
    pub(crate) fn settle(a: f64, b: f64, c: f64, d: f64) -> Mat2 {
        let det = a * d - b * c;
        let drift = (det - 1.0).abs();
        if drift > RENORMALIZE_DRIFT && drift > det_noise(a * a + b * b + c * c + d * d) && det > 0.0 {
            let s = det.sqrt().recip();
            return Mat2 {
                a: a * s,
                b: b * s,
                c: c * s,
                d: d * s,
            };
        }
        Mat2 { a, b, c, d }
    }

    /// `diag(s, 1/s)`.
    pub fn diag(s: f64) -> Mat2 {
        Mat2 {
            a: s,
            b: 0.0,
            c: 0.0,
            d: 1.0 / s,
        }
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn inverse(&self) -> Mat2 {
        Mat2 {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2 {
            a: self.a,
            b: self.c,
            c: self.b,
            d: self.d,
        }
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        [self.a * v[0] + self.b * v[1], self.c * v[0] + self.d * v[1]]
    }

    pub fn frobenius(&self) -> f64 {
        (self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d).sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    /// Operator-norm distance `‖self − other‖`.
    pub fn distance(&self, other: &Mat2) -> f64 {
        general_norm([
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
        ])
    }
}

impl std::ops::Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        compose(&self, &rhs)
    }
}

/// `a·b` with determinant renormalization.
pub fn compose(a: &Mat2, b: &Mat2) -> Mat2 {
    let [p, q, r, s] = mul_raw(&a.entries(), &b.entries());
    Mat2::settle(p, q, r, s)
}

pub(crate) fn mul_raw(x: &[f64; 4], y: &[f64; 4]) -> [f64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

/// Largest singular value of an arbitrary 2×2 matrix.
///
/// With `p² = (a+d)² + (b−c)²` and `q² = (a−d)² + (b+c)²` one has
/// `g = (p² + q²)/2`, `sqrt(g² − 4·det²) = p·q`, so `σ₁ = (p + q)/2`.
pub fn general_norm(m: [f64; 4]) -> f64 {
    let [a, b, c, d] = m;
    let p = (a + d).hypot(b - c);
    let q = (a - d).hypot(b + c);
    0.5 * (p + q)
}

/// Largest singular value `σ₁ ≥ 1`.
pub fn operator_norm(m: &Mat2) -> f64 {
    general_norm(m.entries()).max(1.0)
}

/// Angle in `[0, π)` of the expanding right-singular direction of `m` (scale invariant).
pub(crate) fn expanding_angle(m: &[f64; 4]) -> f64 {
    let [a, b, c, d] = *m;
    let off = 2.0 * (a * b + c * d);
    let diff = (a * a + c * c) - (b * b + d * d);
    let mut theta = 0.5 * off.atan2(diff);
    if theta < 0.0 {
        theta += PI;
    }
    if theta >= PI {
        theta -= PI;
    }
    theta
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularAxes {
    pub u: Vec2,
    pub s: Vec2,
    pub norm: f64,
}

/// Canonical representative of a line: nonnegative first coordinate, or `(0, 1)`.
pub fn canonical_direction(theta: f64) -> Vec2 {
    let v = [theta.cos(), theta.sin()];
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        [-v[0], -v[1]]
    } else {
        v
    }
}

pub fn singular_axes(m: &Mat2) -> Result<SingularAxes> {
    let norm = operator_norm(m);
    if norm <= DEGENERATE_NORM {
        return Err(LabError::DegenerateAxes { norm });
    }
    let theta = expanding_angle(&m.entries());
    let u = canonical_direction(theta);
    Ok(SingularAxes {
        u,
        s: [-u[1], u[0]],
        norm,
    })
}

pub fn rotation(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2 {
        a: c,
        b: -s,
        c: s,
        d: c,
    }
}

/// Traceless matrix `[[p, q], [r, −p]]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TangentVec {
    pub p: f64,
    pub q: f64,
    pub r: f64,
}

impl TangentVec {
    pub const ZERO: TangentVec = TangentVec {
        p: 0.0,
        q: 0.0,
        r: 0.0,
    };

    pub fn scale(&self, t: f64) -> TangentVec {
        TangentVec {
            p: self.p * t,
            q: self.q * t,
            r: self.r * t,
        }
    }

    pub fn add(&self, o: &TangentVec) -> TangentVec {
        TangentVec {
            p: self.p + o.p,
            q: self.q + o.q,
            r: self.r + o.r,
        }
    }

    /// Entries of the represented matrix.
    pub fn matrix(&self) -> [f64; 4] {
        [self.p, self.q, self.r, -self.p]
    }

    pub fn norm(&self) -> f64 {
        general_norm(self.matrix())
    }
}

fn cosh_series(delta: f64) -> f64 {
    1.0 + delta / 2.0 * (1.0 + delta / 12.0 * (1.0 + delta / 30.0 * (1.0 + delta / 56.0 * (1.0 + delta / 90.0))))
}

fn sinhc_series(delta: f64) -> f64 {
    1.0 + delta / 6.0 * (1.0 + delta / 20.0 * (1.0 + delta / 42.0 * (1.0 + delta / 72.0 * (1.0 + delta / 110.0))))
}

/// `exp` of a traceless matrix; `X² = δ·I` with `δ = p² + q·r`.
pub fn exp_map(v: &TangentVec) -> Mat2 {
    let delta = v.p * v.p + v.q * v.r;
    let (c, s) = if delta.abs() < 1e-3 {
        (cosh_series(delta), sinhc_series(delta))
    } else if delta > 0.0 {
        let mu = delta.sqrt();
        (mu.cosh(), mu.sinh() / mu)
    } else {
        let mu = (-delta).sqrt();
        (mu.cos(), mu.sin() / mu)
    };
    Mat2::settle(c + s * v.p, s * v.q, s * v.r, c - s * v.p)
}

/// Principal logarithm, inverse of [`exp_map`] on matrices with trace above −2.
pub fn log_map(m: &Mat2) -> Result<TangentVec> {
    let t = m.trace();
    if t <= LOG_TRACE_FLOOR {
        return Err(LabError::LogDomain { trace: t });
    }
    let h = 0.5 * t;
    let sigma = h - 1.0;
    let inv_s = if sigma.abs() < 1e-5 {
        1.0 - sigma / 3.0 + 2.0 * sigma * sigma / 15.0
    } else if h > 1.0 {
        let mu = h.acosh();
        mu / mu.sinh()
    } else {
        let mu = h.acos();
        mu / mu.sin()
    };
    let [a, b, c, _] = m.entries();
    Ok(TangentVec {
        p: (a - h) * inv_s,
        q: b * inv_s,
        r: c * inv_s,
    })
}

/// Angle of a nonzero vector.
pub fn direction_angle(v: Vec2) -> f64 {
    v[1].atan2(v[0])
}

/// Distance between two lines given by angles, in `[0, π/2]`.
pub fn line_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

/// Continuous lift of the projective action of `m` on line angles.
///
/// Lines are parameterized by `θ ∈ ℝ`; the returned map is increasing for
/// `det > 0` and commutes with `θ ↦ θ + π`.
pub fn lift_apply(m: &[f64; 4], theta: f64) -> f64 {
    let k = (theta / PI).floor();
    let t0 = theta - k * PI;
    let base = m[2].atan2(m[0]);
    let (s, c) = t0.sin_cos();
    let r = (m[2] * c + m[3] * s).atan2(m[0] * c + m[1] * s);
    let mut r = base + (r - base).rem_euclid(2.0 * PI);
    if r - base >= PI {
        r -= PI;
    }
    r + k * PI
}

/// Product accumulated with a separate logarithmic scale.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledMat2 {
    pub raw: [f64; 4],
    pub log_scale: f64,
}

impl Default for ScaledMat2 {
    fn default() -> Self {
        ScaledMat2::identity()
    }
}

impl ScaledMat2 {
    pub fn identity() -> ScaledMat2 {
        ScaledMat2 {
            raw: Mat2::IDENTITY.entries(),
            log_scale: 0.0,
        }
    }

    pub fn from_mat(m: &Mat2) -> ScaledMat2 {
        ScaledMat2 {
            raw: m.entries(),
            log_scale: 0.0,
        }
    }

    /// `self ← m·self`.
    pub fn push(&mut self, m: &Mat2) {
        self.raw = mul_raw(&m.entries(), &self.raw);
    }

    /// `self ← self·m`.
    pub fn push_right(&mut self, m: &Mat2) {
        self.raw = mul_raw(&self.raw, &m.entries());
    }

    /// `self ← other·self`.
    pub fn push_scaled(&mut self, other: &ScaledMat2) {
        self.raw = mul_raw(&other.raw, &self.raw);
        self.log_scale += other.log_scale;
        self.rescale();
    }

    pub fn rescale(&mut self) {
        let m = self.raw.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if m > 0.0 && m.is_finite() {
            let e = m.log2().floor() as i32;
            let f = 2f64.powi(-e);
            for v in &mut self.raw {
                *v *= f;
            }
            self.log_scale += e as f64 * std::f64::consts::LN_2;
        }
    }

    pub fn log_norm(&self) -> f64 {
        self.log_scale + general_norm(self.raw).ln()
    }

    pub fn expanding_angle(&self) -> f64 {
        expanding_angle(&self.raw)
    }

    /// Angle of the image direction of the expanding axis, i.e. the expanding axis of the inverse.
    pub fn image_expanding_angle(&self) -> f64 {
        let [a, b, c, d] = self.raw;
        expanding_angle(&[a, c, b, d])
    }
}
