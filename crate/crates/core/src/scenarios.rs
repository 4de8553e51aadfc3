//! A cocycle over the three-sphere that is hyperbolic on its minimal circle but whose splitting has nonzero degree.

use std::f64::consts::{FRAC_PI_4, PI, TAU};
use std::fmt::Write as _;

use serde::Serialize;

use crate::base::{BaseSystem, RotationNumber};
use crate::cocycle::{hopf_matrix, ConeCertificate, Cocycle, Generator, UhOptions, UhOutcome};
use crate::error::{LabError, Result};
use crate::sl2::{self, Mat2};

/// Warm-up length for pulling back the stable direction.
const STABLE_WARMUP: usize = 64;

/// `R_{θ+α}·diag(2, 1/2)·R_{−θ}`.
pub fn hopf_generator(theta: f64, alpha: f64) -> Mat2 {
    hopf_matrix(theta, alpha)
}

/// Points `(z, w) ∈ ℂ²` modulo positive scaling, stored as unit vectors `(Re z, Im z, Re w, Im w)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HopfSystem {
    pub alpha: f64,
}

impl HopfSystem {
    pub fn new(alpha: f64) -> HopfSystem {
        HopfSystem { alpha }
    }

    pub fn normalize(p: [f64; 4]) -> Result<[f64; 4]> {
        let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(r > 0.0) || !r.is_finite() {
            return Err(LabError::Invalid("the origin is not a point of the sphere".into()));
        }
        Ok(p.map(|v| v / r))
    }

    /// `(z, w) ↦ (e^{iα}z, e^{iα}(z + w))`, renormalized.
    pub fn map(&self, p: [f64; 4]) -> Result<[f64; 4]> {
        let (c, s) = (self.alpha.cos(), self.alpha.sin());
        let rot = |re: f64, im: f64| (c * re - s * im, s * re + c * im);
        let (zr, zi) = rot(p[0], p[1]);
        let (wr, wi) = rot(p[0] + p[2], p[1] + p[3]);
        Self::normalize([zr, zi, wr, wi])
    }

    /// Whether `z = 0` within `tol`.
    pub fn on_invariant_circle(p: &[f64; 4], tol: f64) -> bool {
        p[0].hypot(p[1]) <= tol
    }

    /// Argument of `w`, in `[0, 2π)`.
    pub fn circle_angle(p: &[f64; 4]) -> f64 {
        p[3].atan2(p[2]).rem_euclid(TAU)
    }

    /// Base rotation of the invariant circle, `α/2π` mod 1.
    pub fn circle_base(&self, grid: usize) -> Result<BaseSystem> {
        let rho = (self.alpha / TAU).rem_euclid(1.0);
        Ok(BaseSystem::circle(RotationNumber::float(rho)?).with_grid(grid))
    }

    /// The cocycle restricted to the invariant circle, parameterized by `x = θ/2π`.
    pub fn restricted_cocycle(&self, grid: usize) -> Result<Cocycle> {
        Cocycle::new(self.circle_base(grid)?, Generator::Hopf { alpha: self.alpha })
    }
}

/// Directions in ℝP¹ sampled on a uniform grid of a loop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionField {
    pub thetas: Vec<f64>,
    pub angles: Vec<f64>,
}

impl DirectionField {
    pub fn from_fn(samples: usize, f: impl Fn(f64) -> f64) -> DirectionField {
        let thetas: Vec<f64> = (0..samples).map(|i| TAU * i as f64 / samples as f64).collect();
        let angles = thetas.iter().map(|t| f(*t)).collect();
        DirectionField { thetas, angles }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("theta,angle\n");
        for (t, a) in self.thetas.iter().zip(&self.angles) {
            let _ = writeln!(out, "{t},{a}");
        }
        out
    }
}

fn line_step(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(PI);
    if d > PI / 2.0 {
        d - PI
    } else {
        d
    }
}

/// Degree of a loop of lines: half-turns over one period, divided by two.
pub fn winding_number(field: &DirectionField) -> Result<i64> {
    let n = field.angles.len();
    if n == 0 {
        return Ok(0);
    }
    let mut total = 0.0;
    for i in 0..n {
        let step = line_step(field.angles[i], field.angles[(i + 1) % n]);
        if step.abs() >= FRAC_PI_4 {
            return Err(LabError::LiftFailed { index: i });
        }
        total += step;
    }
    let half_turns = (total / PI).round() as i64;
    if half_turns % 2 != 0 {
        return Err(LabError::NonOrientable { half_turns });
    }
    Ok(half_turns / 2)
}

#[derive(Clone, Debug, Serialize)]
pub struct HopfReport {
    pub alpha: f64,
    pub grid: usize,
    pub certificate: ConeCertificate,
    pub winding: i64,
    /// Largest `|⟨E^u, E^s⟩|` over the grid.
    pub orthogonality_error: f64,
    /// Largest line distance between `A·E^u(θ)` and `E^u(θ + α)`.
    pub invariance_error: f64,
}

impl HopfReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain record")
    }
}

/// Cone-field certificate of uniform hyperbolicity over the invariant circle.
pub fn certify_restricted_uh(alpha: f64, grid: usize) -> Result<ConeCertificate> {
    let co = HopfSystem::new(alpha).restricted_cocycle(grid)?;
    match co.uh_certify(&UhOptions::default()) {
        UhOutcome::Certificate(c) => Ok(c),
        other => Err(LabError::CertificationFailed(format!("no cone field for the restricted cocycle: {other:?}"))),
    }
}

/// Certified unstable field as a function of `θ = 2πx`.
pub fn unstable_field(cert: &ConeCertificate) -> DirectionField {
    DirectionField {
        thetas: cert.positions.iter().map(|x| TAU * x).collect(),
        angles: cert.centers.clone(),
    }
}

/// Stable directions from pulling the vertical line back along the orbit.
pub fn stable_field(co: &Cocycle) -> DirectionField {
    let base = co.base();
    let points = base.grid_points();
    let angles = points
        .iter()
        .map(|p| {
            let mut theta = PI / 2.0;
            for j in (0..STABLE_WARMUP as i64).rev() {
                let inv = co.value(&base.step(p, j)).inverse();
                theta = sl2::lift_apply(&inv.entries(), theta);
            }
            theta.rem_euclid(PI)
        })
        .collect();
    DirectionField { thetas: points.iter().map(|p| TAU * base.position(p)).collect(), angles }
}

/// Certificate, degree of the unstable field and the splitting checks.
pub fn hopf_report(alpha: f64, grid: usize) -> Result<(HopfReport, DirectionField)> {
    let system = HopfSystem::new(alpha);
    let co = system.restricted_cocycle(grid)?;
    let certificate = certify_restricted_uh(alpha, grid)?;
    let eu = unstable_field(&certificate);
    let es = stable_field(&co);
    let winding = winding_number(&eu)?;
    let orthogonality_error = eu
        .angles
        .iter()
        .zip(&es.angles)
        .map(|(u, s)| (u - s).cos().abs())
        .fold(0.0, f64::max);
    let base = co.base();
    let invariance_error = base
        .grid_points()
        .iter()
        .zip(&eu.angles)
        .map(|(p, u)| {
            let image = sl2::lift_apply(&co.value(p).entries(), *u);
            let theta_next = TAU * base.position(&base.step(p, 1));
            sl2::line_distance(image, theta_next)
        })
        .fold(0.0, f64::max);
    let report = HopfReport { alpha, grid, certificate, winding, orthogonality_error, invariance_error };
    Ok((report, eu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_at_zero_is_diagonal() {
        assert_eq!(hopf_generator(0.0, 0.0).entries(), [2.0, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn invariant_circle_rotates() {
        let sys = HopfSystem::new(1.0);
        let p = HopfSystem::normalize([0.0, 0.0, 0.6, 0.8]).unwrap();
        let q = sys.map(p).unwrap();
        assert!(HopfSystem::on_invariant_circle(&q, 1e-15));
        let turn = (HopfSystem::circle_angle(&q) - HopfSystem::circle_angle(&p)).rem_euclid(TAU);
        assert!((turn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn winding_examples() {
        assert_eq!(winding_number(&DirectionField::from_fn(64, |_| 0.3)).unwrap(), 0);
        assert_eq!(winding_number(&DirectionField::from_fn(64, |t| t)).unwrap(), 1);
        assert_eq!(winding_number(&DirectionField::from_fn(64, |t| 2.0 * t)).unwrap(), 2);
        assert!(matches!(winding_number(&DirectionField::from_fn(64, |t| t / 2.0)), Err(LabError::NonOrientable { .. })));
        assert!(matches!(winding_number(&DirectionField::from_fn(4, |t| t)), Err(LabError::LiftFailed { .. })));
    }
}
