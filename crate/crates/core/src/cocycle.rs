use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc as Shared;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, BaseSystem};
use crate::error::{LabError, Result};
use crate::sl2::{self, exp_map, lift_apply, log_map, operator_norm, rotation, Mat2, ScaledMat2, TangentVec};

pub const RESCALE_STRIDE: usize = 32;
pub const OVERFLOW_LIMIT: f64 = 1e300;
pub(crate) const LIPSCHITZ_SAFETY: f64 = 4.0;

/// A continuous map from the base to SL(2,ℝ) supplied by the caller.
pub trait MatrixField: Send + Sync {
    fn value(&self, base: &BaseSystem, p: &BasePoint) -> Mat2;
    fn name(&self) -> String;
    /// Upper bound for the norm, if known in closed form.
    fn norm_bound(&self) -> Option<f64> {
        None
    }
}

/// Grid samples interpolated linearly in the tangent chart.
#[derive(Clone, Debug, PartialEq)]
pub struct TableField {
    logs: Vec<TangentVec>,
}

impl TableField {
    pub fn new(values: &[Mat2]) -> Result<TableField> {
        if values.is_empty() {
            return Err(LabError::Invalid("empty generator table".into()));
        }
        let logs = values.iter().map(log_map).collect::<Result<Vec<_>>>()?;
        Ok(TableField { logs })
    }

    /// Rows `x,a,b,c,d`; an optional header line is skipped.
    pub fn from_csv(text: &str) -> Result<TableField> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
            let nums = match parsed {
                Ok(v) => v,
                Err(_) if values.is_empty() && i == 0 => continue,
                Err(e) => return Err(LabError::Parse { line: i + 1, message: e.to_string() }),
            };
            if nums.len() != 5 {
                return Err(LabError::Parse { line: i + 1, message: format!("expected 5 fields, found {}", nums.len()) });
            }
            let m = Mat2::new(nums[1], nums[2], nums[3], nums[4])
                .map_err(|e| LabError::Parse { line: i + 1, message: e.to_string() })?;
            values.push(m);
        }
        TableField::new(&values)
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    pub fn at(&self, x: f64) -> Mat2 {
        let g = self.logs.len();
        let t = x.rem_euclid(1.0) * g as f64;
        let i = (t.floor() as usize).min(g - 1);
        let w = t - i as f64;
        let a = &self.logs[i];
        if w == 0.0 {
            return exp_map(a);
        }
        let b = &self.logs[(i + 1) % g];
        exp_map(&a.scale(1.0 - w).add(&b.scale(w)))
    }
}

#[derive(Clone)]
pub enum Generator {
    /// `[[E − 2λ·cos 2πx, −1], [1, 0]]`.
    Schrodinger { energy: f64, coupling: f64 },
    /// `R(2π(offset + winding·x))`.
    Rotation { offset: f64, winding: i64 },
    Constant(Mat2),
    /// `R_{θ+α}·diag(2, 1/2)·R_{−θ}` with `θ = 2πx` and `α = 2π·rotation number`.
    Hopf { alpha: f64 },
    /// `R(2π·winding·x)·diag(σ, 1/σ)`.
    Herman { sigma: f64, winding: i64 },
    Table(TableField),
    Custom(Shared<dyn MatrixField>),
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

pub fn hopf_matrix(theta: f64, alpha: f64) -> Mat2 {
    rotation(theta + alpha) * Mat2::diag(2.0) * rotation(-theta)
}

impl Generator {
    pub fn name(&self) -> String {
        match self {
            Generator::Schrodinger { energy, coupling } => format!("schrodinger(E={energy}, lambda={coupling})"),
            Generator::Rotation { offset, winding } => format!("rotation(offset={offset}, winding={winding})"),
            Generator::Constant(m) => format!("constant({:?})", m.entries()),
            Generator::Hopf { alpha } => format!("hopf(alpha={alpha})"),
            Generator::Herman { sigma, winding } => format!("herman(sigma={sigma}, winding={winding})"),
            Generator::Table(t) => format!("table({} samples)", t.len()),
            Generator::Custom(c) => c.name(),
        }
    }

    pub fn at_position(&self, x: f64) -> Mat2 {
        match self {
            Generator::Schrodinger { energy, coupling } => {
                let t = energy - 2.0 * coupling * (TAU * x).cos();
                Mat2::settle(t, -1.0, 1.0, 0.0)
            }
            Generator::Rotation { offset, winding } => rotation(TAU * (offset + *winding as f64 * x)),
            Generator::Constant(m) => *m,
            Generator::Hopf { alpha } => hopf_matrix(TAU * x, *alpha),
            Generator::Herman { sigma, winding } => rotation(TAU * *winding as f64 * x) * Mat2::diag(*sigma),
            Generator::Table(t) => t.at(x),
            Generator::Custom(_) => panic!("custom fields need a base point"),
        }
    }

    fn norm_bound(&self) -> Option<f64> {
        match self {
            Generator::Schrodinger { energy, coupling } => {
                let t = energy.abs() + 2.0 * coupling.abs();
                Some(sl2::general_norm([t, -1.0, 1.0, 0.0]))
            }
            Generator::Rotation { .. } => Some(1.0),
            Generator::Constant(m) => Some(operator_norm(m)),
            Generator::Hopf { .. } => Some(2.0),
            Generator::Herman { sigma, .. } => Some(sigma.max(1.0 / sigma)),
            Generator::Table(_) => None,
            Generator::Custom(c) => c.norm_bound(),
        }
    }
}

/// A pair `(f, A)`.
#[derive(Clone, Debug)]
pub struct Cocycle {
    base: BaseSystem,
    generator: Generator,
    sup_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub n: usize,
    pub grid: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub argmax: f64,
    pub margin: f64,
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

impl GrowthReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,n,log_norm_over_n\n");
        for (x, v) in self.positions.iter().zip(&self.values) {
            out.push_str(&format!("{x},{},{v}\n", self.n));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    pub anchor: BasePoint,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalBound {
    pub exponent: f64,
    pub block_average: f64,
    pub block_min: f64,
    pub blocks: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub n: usize,
    pub half_width: f64,
    /// Per-step growth of the cone center, `min_x ‖A_n(x)·c(x)‖^{1/n}`.
    pub expansion: f64,
    /// Per-step growth of the weakest cone direction.
    pub edge_expansion: f64,
    pub slack: f64,
    pub positions: Vec<f64>,
    pub centers: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormWitness {
    pub x: f64,
    pub n: usize,
    pub log_norm: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum UhOutcome {
    Certificate(ConeCertificate),
    Witness(NormWitness),
    Inconclusive { n_max: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UhOptions {
    pub n_max: usize,
    pub warmup: usize,
    pub witness_threshold: f64,
}

impl Default for UhOptions {
    fn default() -> Self {
        UhOptions { n_max: 64, warmup: 64, witness_threshold: 0.01 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthWitness {
    pub x: f64,
    pub n: usize,
    pub log_norm: f64,
}

pub(crate) fn max_neighbor_jump(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    (0..n).map(|i| (values[(i + 1) % n] - values[i]).abs()).fold(0.0, f64::max)
}

impl Cocycle {
    pub fn new(base: BaseSystem, generator: Generator) -> Result<Cocycle> {
        let mut co = Cocycle { base, generator, sup_norm: 1.0 };
        let grid_sup = co
            .base
            .grid_points()
            .par_iter()
            .map(|p| operator_norm(&co.value(p)))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(1.0, f64::max);
        co.sup_norm = match co.generator.norm_bound() {
            Some(b) => b.max(grid_sup),
            None => grid_sup,
        };
        Ok(co)
    }

    pub fn base(&self) -> &BaseSystem {
        &self.base
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    #[inline]
    pub fn value(&self, p: &BasePoint) -> Mat2 {
        match &self.generator {
            Generator::Custom(c) => c.value(&self.base, p),
            g => g.at_position(self.base.position(p)),
        }
    }

    pub fn iterate(&self, p: &BasePoint, n: usize) -> Result<Mat2> {
        let mut acc = Mat2::IDENTITY;
        for j in 0..n {
            let m = self.value(&self.base.step(p, j as i64));
            acc = m * acc;
            if acc.max_abs_entry() > OVERFLOW_LIMIT || !acc.max_abs_entry().is_finite() {
                return Err(LabError::Overflow { step: j + 1 });
            }
        }
        Ok(acc)
    }

    /// `A_n(p)` with a separate logarithmic scale.
    pub fn scaled_product(&self, p: &BasePoint, n: usize) -> ScaledMat2 {
        let mut acc = ScaledMat2::identity();
        for j in 0..n {
            acc.push(&self.value(&self.base.step(p, j as i64)));
            if (j + 1) % RESCALE_STRIDE == 0 {
                acc.rescale();
            }
        }
        acc.rescale();
        acc
    }

    pub fn log_norm_of_product(&self, p: &BasePoint, n: usize) -> f64 {
        self.scaled_product(p, n).log_norm().max(0.0)
    }

    pub fn lyapunov_estimate(&self, p: &BasePoint, n: usize) -> f64 {
        self.log_norm_of_product(p, n.max(1)) / n.max(1) as f64
    }

    /// `(1/n)·log‖A_n(x)‖` over the grid.
    pub fn growth_report(&self, n: usize) -> GrowthReport {
        let n = n.max(1);
        let pts = self.base.grid_points();
        let positions: Vec<f64> = pts.iter().map(|p| self.base.position(p)).collect();
        let logs: Vec<f64> = pts.par_iter().map(|p| self.log_norm_of_product(p, n)).collect();
        let values: Vec<f64> = logs.iter().map(|v| v / n as f64).collect();
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut argmax = 0.0;
        let mut sum = 0.0;
        for (x, v) in positions.iter().zip(&values) {
            min = min.min(*v);
            if *v > max {
                max = *v;
                argmax = *x;
            }
            sum += v;
        }
        let margin = LIPSCHITZ_SAFETY * max_neighbor_jump(&logs) / n as f64;
        GrowthReport {
            n,
            grid: pts.len(),
            min,
            max,
            mean: sum / values.len() as f64,
            argmax,
            margin,
            positions,
            values,
        }
    }

    /// Passes iff the grid maximum of `(1/n)·log‖A_n‖` is below `eps − margin`.
    pub fn uniform_growth_test(&self, eps: f64, n: usize) -> (bool, GrowthReport) {
        let report = self.growth_report(n);
        (report.max < eps - report.margin, report)
    }

    /// `(1/s)∫log‖A_s‖dν` for `ν` the orbit average over `s·⌊n/s⌋` steps, with the block bounds below it.
    pub fn empirical_exponent(&self, mu: &EmpiricalMeasure, s: usize) -> Result<EmpiricalBound> {
        if s == 0 || s > mu.n {
            return Err(LabError::Invalid("block length must satisfy 1 ≤ s ≤ n".into()));
        }
        let m = mu.n / s;
        let total: f64 = (0..s * m)
            .map(|j| self.log_norm_of_product(&self.base.step(&mu.anchor, j as i64), s))
            .sum();
        let blocks: Vec<f64> = (0..s)
            .map(|i| self.log_norm_of_product(&self.base.step(&mu.anchor, i as i64), s * m))
            .collect();
        let block_sum: f64 = blocks.iter().sum();
        let block_min = blocks.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(EmpiricalBound {
            exponent: total / (s * s * m) as f64,
            block_average: block_sum / (s * s * m) as f64,
            block_min: block_min / (s * m) as f64,
            blocks: m,
        })
    }

    /// First grid point and horizon with `‖A_n(x)‖ > e^{εn}`.
    pub fn subexponential_witness_search(&self, eps: f64, horizons: &[usize]) -> Option<GrowthWitness> {
        for &n in horizons {
            let report = self.growth_report(n);
            for (x, v) in report.positions.iter().zip(&report.values) {
                if *v > eps {
                    return Some(GrowthWitness { x: *x, n: report.n, log_norm: v * report.n as f64 });
                }
            }
        }
        None
    }

    /// Cone centers: the image of the horizontal line after `warmup` steps ending at each grid point.
    fn cone_centers(&self, warmup: usize) -> (Vec<BasePoint>, Vec<f64>) {
        let pts = self.base.grid_points();
        let centers = pts
            .par_iter()
            .map(|p| {
                let start = self.base.step(p, -(warmup as i64));
                let mut theta = 0.0;
                for j in 0..warmup {
                    let m = self.value(&self.base.step(&start, j as i64));
                    theta = lift_apply(&m.entries(), theta);
                }
                theta.rem_euclid(PI)
            })
            .collect();
        (pts, centers)
    }

    fn center_at(centers: &[f64], x: f64) -> f64 {
        let g = centers.len();
        let t = x.rem_euclid(1.0) * g as f64;
        let i = (t.floor() as usize).min(g - 1);
        let w = t - i as f64;
        let a = centers[i];
        let b = centers[(i + 1) % g];
        let mut d = (b - a).rem_euclid(PI);
        if d > PI / 2.0 {
            d -= PI;
        }
        a + w * d
    }

    fn try_cone(&self, pts: &[BasePoint], positions: &[f64], centers: &[f64], n: usize, width: f64) -> Option<ConeCertificate> {
        struct Probe {
            lo: f64,
            hi: f64,
            center_growth: f64,
            edge_growth: f64,
        }
        let probes: Vec<Probe> = pts
            .par_iter()
            .zip(centers.par_iter())
            .map(|(p, &c)| {
                let prod = self.scaled_product(p, n);
                let dirs = [c - width, c, c + width];
                let img: Vec<f64> = dirs.iter().map(|&t| lift_apply(&prod.raw, t)).collect();
                let growth = |t: f64| {
                    let v = [t.cos(), t.sin()];
                    let w0 = prod.raw[0] * v[0] + prod.raw[1] * v[1];
                    let w1 = prod.raw[2] * v[0] + prod.raw[3] * v[1];
                    (prod.log_scale + w0.hypot(w1).ln()) / n as f64
                };
                let target = Self::center_at(centers, self.base.position(&self.base.step(p, n as i64)));
                let shift = ((img[1] - target) / PI).round() * PI;
                Probe {
                    lo: img[0] - shift - target,
                    hi: img[2] - shift - target,
                    center_growth: growth(c),
                    edge_growth: growth(c - width).min(growth(c + width)),
                }
            })
            .collect();
        let lo: Vec<f64> = probes.iter().map(|p| p.lo).collect();
        let hi: Vec<f64> = probes.iter().map(|p| p.hi).collect();
        let slack = LIPSCHITZ_SAFETY * max_neighbor_jump(&lo).max(max_neighbor_jump(&hi)) / 2.0;
        let inside = probes
            .iter()
            .all(|p| p.lo > -width + slack && p.hi < width - slack && p.hi - p.lo < PI);
        if !inside {
            return None;
        }
        let center_growth = probes.iter().map(|p| p.center_growth).fold(f64::INFINITY, f64::min);
        let edge_growth = probes.iter().map(|p| p.edge_growth).fold(f64::INFINITY, f64::min);
        if !(edge_growth > 0.0) {
            return None;
        }
        Some(ConeCertificate {
            n,
            half_width: width,
            expansion: center_growth.exp(),
            edge_expansion: edge_growth.exp(),
            slack,
            positions: positions.to_vec(),
            centers: centers.to_vec(),
        })
    }

    /// Cone-field certificate of uniform hyperbolicity, or a norm-collapse witness.
    pub fn uh_certify(&self, opts: &UhOptions) -> UhOutcome {
        let (pts, centers) = self.cone_centers(opts.warmup);
        let positions: Vec<f64> = pts.iter().map(|p| self.base.position(p)).collect();
        let widths = [PI / 8.0, PI / 16.0, PI / 32.0, PI / 64.0, PI / 128.0];
        let mut n = 1;
        while n <= opts.n_max.max(1) {
            for &w in &widths {
                if let Some(cert) = self.try_cone(&pts, &positions, &centers, n, w) {
                    return UhOutcome::Certificate(cert);
                }
            }
            n *= 2;
        }
        let horizon = opts.n_max.max(1);
        let report = self.growth_report(horizon);
        let (i, v) = report
            .values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
        if v < opts.witness_threshold {
            return UhOutcome::Witness(NormWitness {
                x: report.positions[i],
                n: horizon,
                log_norm: v * horizon as f64,
                threshold: opts.witness_threshold,
            });
        }
        UhOutcome::Inconclusive { n_max: opts.n_max }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::RotationNumber;

    fn diag2() -> Cocycle {
        Cocycle::new(BaseSystem::golden().with_grid(64), Generator::Constant(Mat2::diag(2.0))).unwrap()
    }

    #[test]
    fn constant_diagonal_products() {
        let co = diag2();
        let p = co.base().point(0.3);
        let m = co.iterate(&p, 3).unwrap();
        assert_eq!(m.entries(), [8.0, 0.0, 0.0, 0.125]);
        assert_eq!(co.iterate(&p, 0).unwrap(), Mat2::IDENTITY);
        let l = co.log_norm_of_product(&p, 1000);
        assert!((l - 1000.0 * 2f64.ln()).abs() < 1e-9);
        assert!(matches!(co.iterate(&p, 2000), Err(LabError::Overflow { .. })));
    }

    #[test]
    fn rotation_products_stay_isometric() {
        let co = Cocycle::new(
            BaseSystem::circle(RotationNumber::golden()).with_grid(64),
            Generator::Rotation { offset: 0.1, winding: 1 },
        )
        .unwrap();
        assert!(co.log_norm_of_product(&co.base().point(0.2), 5000) < 1e-10);
        let (pass, report) = co.uniform_growth_test(0.01, 100);
        assert!(pass, "{report:?}");
    }

    #[test]
    fn diagonal_fails_growth_test() {
        let (pass, report) = diag2().uniform_growth_test(0.1, 50);
        assert!(!pass);
        assert!((report.max - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn diagonal_is_certified() {
        match diag2().uh_certify(&UhOptions::default()) {
            UhOutcome::Certificate(c) => {
                assert!((c.expansion - 2.0).abs() < 1e-9);
                assert!(c.centers.iter().all(|t| sl2::line_distance(*t, 0.0) < 1e-9));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_rotation_is_never_certified() {
        let co = Cocycle::new(BaseSystem::golden().with_grid(64), Generator::Constant(rotation(0.3))).unwrap();
        assert!(matches!(co.uh_certify(&UhOptions::default()), UhOutcome::Witness(_)));
    }

    #[test]
    fn empirical_single_block() {
        let co = Cocycle::new(
            BaseSystem::golden().with_grid(64),
            Generator::Schrodinger { energy: 0.0, coupling: 2.0 },
        )
        .unwrap();
        let mu = EmpiricalMeasure { anchor: co.base().point(0.1), n: 40 };
        let b = co.empirical_exponent(&mu, 40).unwrap();
        assert_eq!(b.blocks, 1);
        assert!((b.exponent - b.block_average).abs() < 1e-12);
        let d = Cocycle::new(BaseSystem::golden().with_grid(8), Generator::Constant(Mat2::diag(2.0))).unwrap();
        for s in [1, 3, 7] {
            let e = d.empirical_exponent(&EmpiricalMeasure { anchor: d.base().point(0.0), n: 20 }, s).unwrap();
            assert!((e.exponent - 2f64.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn table_reproduces_samples() {
        let vals: Vec<Mat2> = (0..16).map(|i| rotation(i as f64 * 0.1) * Mat2::diag(1.5)).collect();
        let t = TableField::new(&vals).unwrap();
        for (i, v) in vals.iter().enumerate() {
            assert!(t.at(i as f64 / 16.0).distance(v) < 1e-12);
        }
        let csv = "x,a,b,c,d\n0,2,0,0,0.5\n0.5,1,0,0,1\n";
        assert_eq!(TableField::from_csv(csv).unwrap().len(), 2);
        assert!(matches!(TableField::from_csv("0,1,2,3\n"), Err(LabError::Parse { line: 1, .. })));
    }
}
