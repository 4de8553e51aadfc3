use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::cell::{circle_distance, Arc, BoxCell, Cell};
use super::rotation::{QNum, RotationNumber, DYADIC_ONE};
use crate::error::{LabError, Result};

pub const DEFAULT_GRID: usize = 4096;
pub const RETURN_HORIZON: usize = 1_000_000;
const AVOID_HORIZON: usize = 100_000;
const AVOID_DISTANCE: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BaseKind {
    CircleRotation { alpha: RotationNumber },
    TorusTranslation { shift: Vec<RotationNumber> },
    SturmianShift { slope: RotationNumber, depth: u32 },
}

/// A minimal translation `f` of a compact group, with a sampling grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseSystem {
    kind: BaseKind,
    grid: usize,
}

/// `f^k` applied to an anchor; the anchor sits on the dyadic lattice `2^{−32}·ℤ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasePoint {
    pub anchor: [f64; 3],
    pub k: i64,
}

fn dyadic_round(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    let n = (y * DYADIC_ONE as f64).round();
    let v = n / DYADIC_ONE as f64;
    if v >= 1.0 {
        0.0
    } else {
        v
    }
}

impl BaseSystem {
    pub fn circle(alpha: RotationNumber) -> BaseSystem {
        let sys = BaseSystem {
            kind: BaseKind::CircleRotation { alpha },
            grid: DEFAULT_GRID,
        };
        sys.warn_near_rational();
        sys
    }

    pub fn golden() -> BaseSystem {
        BaseSystem::circle(RotationNumber::golden())
    }

    pub fn silver() -> BaseSystem {
        BaseSystem::circle(RotationNumber::silver())
    }

    pub fn torus(shift: &[f64]) -> Result<BaseSystem> {
        if shift.is_empty() || shift.len() > 3 {
            return Err(LabError::Invalid("torus dimension must be 1, 2 or 3".into()));
        }
        let shift = shift
            .iter()
            .map(|&v| RotationNumber::float(v))
            .collect::<Result<Vec<_>>>()?;
        let sys = BaseSystem {
            kind: BaseKind::TorusTranslation { shift },
            grid: 64,
        };
        sys.warn_near_rational();
        Ok(sys)
    }

    pub fn sturmian(slope: RotationNumber, depth: u32) -> BaseSystem {
        let sys = BaseSystem {
            kind: BaseKind::SturmianShift { slope, depth },
            grid: DEFAULT_GRID,
        };
        sys.warn_near_rational();
        sys
    }

    pub fn with_grid(mut self, grid: usize) -> BaseSystem {
        self.grid = grid.max(2);
        self
    }

    pub fn kind(&self) -> &BaseKind {
        &self.kind
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn grid_spacing(&self) -> f64 {
        1.0 / self.grid as f64
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            BaseKind::TorusTranslation { shift } => shift.len(),
            _ => 1,
        }
    }

    /// The rotation of the first coordinate (the coding rotation for shifts).
    pub fn rotation(&self) -> Option<&RotationNumber> {
        match &self.kind {
            BaseKind::CircleRotation { alpha } => Some(alpha),
            BaseKind::SturmianShift { slope, .. } => Some(slope),
            BaseKind::TorusTranslation { .. } => None,
        }
    }

    fn require_rotation(&self, what: &str) -> Result<&RotationNumber> {
        self.rotation()
            .ok_or_else(|| LabError::Unsupported(format!("{what} needs a circle-coded base")))
    }

    fn first_shift(&self) -> &RotationNumber {
        match &self.kind {
            BaseKind::CircleRotation { alpha } => alpha,
            BaseKind::SturmianShift { slope, .. } => slope,
            BaseKind::TorusTranslation { shift } => &shift[0],
        }
    }

    /// Smallest `j ≤ 10⁵` with `‖jα‖ < 10⁻¹²`, signalling a near-rational rotation.
    pub fn near_rational_return(&self) -> Option<usize> {
        let shifts: Vec<&RotationNumber> = match &self.kind {
            BaseKind::TorusTranslation { shift } => shift.iter().collect(),
            _ => vec![self.first_shift()],
        };
        (1..=AVOID_HORIZON).find(|&j| {
            shifts
                .iter()
                .all(|r| circle_distance(r.advance(0.0, j as i64), 0.0) < 1e-12)
        })
    }

    fn warn_near_rational(&self) {
        if let Some(j) = self.near_rational_return() {
            log::warn!("orbit of 0 returns within 1e-12 after {j} steps; rotation is close to rational");
        }
    }

    pub fn point(&self, x: f64) -> BasePoint {
        BasePoint {
            anchor: [dyadic_round(x), 0.0, 0.0],
            k: 0,
        }
    }

    pub fn point_nd(&self, x: &[f64]) -> BasePoint {
        let mut anchor = [0.0; 3];
        for (a, v) in anchor.iter_mut().zip(x.iter()) {
            *a = dyadic_round(*v);
        }
        BasePoint { anchor, k: 0 }
    }

    #[inline]
    pub fn step(&self, p: &BasePoint, n: i64) -> BasePoint {
        BasePoint {
            anchor: p.anchor,
            k: p.k + n,
        }
    }

    /// First coordinate of `p` in `[0, 1)`.
    #[inline]
    pub fn position(&self, p: &BasePoint) -> f64 {
        self.first_shift().advance(p.anchor[0], p.k)
    }

    pub fn coords(&self, p: &BasePoint) -> [f64; 3] {
        match &self.kind {
            BaseKind::TorusTranslation { shift } => {
                let mut out = [0.0; 3];
                for (i, r) in shift.iter().enumerate() {
                    out[i] = r.advance(p.anchor[i], p.k);
                }
                out
            }
            _ => [self.position(p), 0.0, 0.0],
        }
    }

    /// Exact lattice representative of the first coordinate, reduced to `[0, 1)`.
    pub fn exact(&self, p: &BasePoint) -> QNum {
        let q = QNum {
            n: (p.anchor[0] * DYADIC_ONE as f64) as i128,
            k: p.k,
        };
        self.first_shift().q_reduce(q)
    }

    fn symbol(&self, slope: &RotationNumber, y: f64, j: i64) -> bool {
        slope.advance(y, j) >= 1.0 - slope.value()
    }

    pub fn distance(&self, p: &BasePoint, q: &BasePoint) -> f64 {
        match &self.kind {
            BaseKind::CircleRotation { .. } => circle_distance(self.position(p), self.position(q)),
            BaseKind::TorusTranslation { shift } => {
                let a = self.coords(p);
                let b = self.coords(q);
                (0..shift.len()).map(|i| circle_distance(a[i], b[i])).fold(0.0, f64::max)
            }
            BaseKind::SturmianShift { slope, depth } => {
                let (a, b) = (self.position(p), self.position(q));
                for j in 0..=(*depth as i64) {
                    for s in [j, -j] {
                        if self.symbol(slope, a, s) != self.symbol(slope, b, s) {
                            return 0.5f64.powi(j as i32);
                        }
                    }
                }
                0.0
            }
        }
    }

    pub fn grid_points(&self) -> Vec<BasePoint> {
        let g = self.grid;
        match self.dim() {
            1 => (0..g).map(|i| self.point(i as f64 / g as f64)).collect(),
            d => {
                let total = g.pow(d as u32);
                (0..total)
                    .map(|mut idx| {
                        let mut c = [0.0; 3];
                        for v in c.iter_mut().take(d) {
                            *v = (idx % g) as f64 / g as f64;
                            idx /= g;
                        }
                        self.point_nd(&c[..d])
                    })
                    .collect()
            }
        }
    }

    pub fn contains(&self, cell: &Cell, p: &BasePoint) -> bool {
        match cell {
            Cell::Arcs { arcs, .. } => {
                let rot = self.first_shift();
                rot.arcs_contain(arcs, self.exact(p))
            }
            Cell::Boxes { boxes, dim } => {
                let c = self.coords(p);
                boxes.iter().any(|b| b.contains(&c, *dim))
            }
        }
    }

    /// `f^j(cell)`.
    pub fn translate(&self, cell: &Cell, j: i64) -> Cell {
        match cell {
            Cell::Arcs { arcs, clopen } => Cell::Arcs {
                arcs: self.first_shift().translate_arcs(arcs, j),
                clopen: *clopen,
            },
            Cell::Boxes { boxes, dim } => {
                let shift = match &self.kind {
                    BaseKind::TorusTranslation { shift } => shift.clone(),
                    _ => vec![self.first_shift().clone()],
                };
                let boxes = boxes
                    .iter()
                    .map(|b| {
                        let mut out = *b;
                        for i in 0..*dim {
                            out.lo[i] = shift[i].advance(b.lo[i], j);
                        }
                        out
                    })
                    .collect();
                Cell::Boxes { boxes, dim: *dim }
            }
        }
    }

    pub fn diameter(&self, cell: &Cell) -> f64 {
        match cell {
            Cell::Arcs { arcs, .. } => self.first_shift().arcs_diameter(arcs),
            Cell::Boxes { boxes, dim } => boxes.iter().map(|b| b.diameter(*dim)).fold(0.0, f64::max),
        }
    }

    /// Boundary points of a circle cell; empty for clopen cylinders and boxes are unsupported.
    pub fn boundary(&self, cell: &Cell) -> Vec<QNum> {
        match cell {
            Cell::Arcs { clopen: true, .. } | Cell::Boxes { .. } => Vec::new(),
            Cell::Arcs { arcs, .. } => self.first_shift().arcs_boundary(arcs),
        }
    }

    pub fn measure(&self, cell: &Cell) -> f64 {
        match cell {
            Cell::Arcs { arcs, .. } => self.first_shift().arcs_measure(arcs),
            Cell::Boxes { boxes, dim } => boxes
                .iter()
                .map(|b| (0..*dim).map(|i| b.len[i].min(1.0)).product::<f64>())
                .sum(),
        }
    }

    /// Sorted positions of `f^j(x0)`, `0 ≤ j < count`.
    fn sorted_orbit(&self, x0: &BasePoint, count: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..count as i64).map(|j| self.position(&self.step(x0, j))).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    fn orbit_gap(sorted: &[f64], y: f64) -> f64 {
        let i = sorted.partition_point(|&v| v < y);
        let n = sorted.len();
        let a = sorted[i % n];
        let b = sorted[(i + n - 1) % n];
        circle_distance(a, y).min(circle_distance(b, y))
    }

    /// An open cell around `x0` of diameter at most `4·eps` with boundary off the orbit of `x0`.
    pub fn small_boundary_cell(&self, x0: &BasePoint, eps: f64) -> Result<Cell> {
        if !(eps > 0.0) {
            return Err(LabError::Invalid("cell radius must be positive".into()));
        }
        match &self.kind {
            BaseKind::CircleRotation { alpha } => {
                if eps >= 0.25 {
                    return Ok(Cell::full_circle());
                }
                let orbit = self.sorted_orbit(x0, AVOID_HORIZON);
                let center = self.exact(x0);
                let x = self.position(x0);
                let unit = 1.0 / DYADIC_ONE as f64;
                let push = |dir: f64| -> i128 {
                    let mut r = 0.9 * eps;
                    loop {
                        let y = (x + dir * r).rem_euclid(1.0);
                        if Self::orbit_gap(&orbit, y) > AVOID_DISTANCE + 4.0 * unit {
                            return (r / unit).floor() as i128;
                        }
                        r += 2.5 * AVOID_DISTANCE;
                    }
                };
                let left = push(-1.0);
                let right = push(1.0);
                let lo = QNum { n: center.n - left, k: center.k };
                let hi = QNum { n: center.n + right, k: center.k };
                let mut arcs = alpha.normalize_interval(lo, hi);
                alpha.sort_arcs(&mut arcs);
                Ok(Cell::Arcs { arcs, clopen: false })
            }
            BaseKind::TorusTranslation { shift } => {
                let dim = shift.len();
                let c = self.coords(x0);
                let mut b = BoxCell { lo: [0.0; 3], len: [1.0; 3] };
                if eps < 0.25 {
                    for i in 0..dim {
                        b.lo[i] = (c[i] - 0.9 * eps).rem_euclid(1.0);
                        b.len[i] = 1.8 * eps;
                    }
                }
                Ok(Cell::Boxes { boxes: vec![b], dim })
            }
            BaseKind::SturmianShift { slope, .. } => {
                let depth = (1.0 / eps).log2().ceil().max(0.0) as i64;
                let mut cuts: Vec<QNum> = Vec::with_capacity(4 * depth as usize + 2);
                for j in -depth..=depth {
                    cuts.push(slope.q_reduce(QNum { n: 0, k: -j }));
                    cuts.push(slope.q_reduce(QNum { n: DYADIC_ONE, k: -1 - j }));
                }
                cuts.sort_by(|a, b| slope.cmp_q(*a, *b));
                cuts.dedup_by(|a, b| slope.cmp_q(*a, *b) == Ordering::Equal);
                let x = self.exact(x0);
                let i = cuts.partition_point(|c| slope.cmp_q(*c, x) != Ordering::Greater);
                let n = cuts.len();
                let (lo, hi) = if i == 0 || i == n {
                    (cuts[n - 1], cuts[0].plus_int(1))
                } else {
                    (cuts[i - 1], cuts[i])
                };
                let mut arcs = slope.normalize_interval(lo, hi);
                slope.sort_arcs(&mut arcs);
                Ok(Cell::Arcs { arcs, clopen: true })
            }
        }
    }

    /// Smallest `m1` with `⋃_{j ≤ m1} f^j(W) = K`, certified on the grid with a one-spacing margin.
    pub fn covering_time(&self, w: &Cell) -> Result<usize> {
        if w.is_empty() {
            return Err(LabError::EmptyCell);
        }
        let exceeded = LabError::HorizonExceeded { what: "covering time", horizon: RETURN_HORIZON };
        match w {
            Cell::Arcs { arcs, .. } => {
                let rot = self.first_shift();
                let full = arcs.len() == 1
                    && rot.cmp_q(arcs[0].lo, QNum::ZERO) == Ordering::Equal
                    && rot.cmp_q(arcs[0].hi, QNum::ONE) == Ordering::Equal;
                if full {
                    return Ok(0);
                }
                let margin = (DYADIC_ONE + self.grid as i128 - 1) / self.grid as i128 + 2;
                let comps: Vec<(QNum, QNum)> = rot
                    .arc_components(arcs)
                    .into_iter()
                    .map(|(lo, hi)| (QNum { n: lo.n + margin, k: lo.k }, QNum { n: hi.n - margin, k: hi.k }))
                    .filter(|(lo, hi)| rot.cmp_q(*lo, *hi) == Ordering::Less)
                    .collect();
                if comps.is_empty() {
                    return Err(exceeded);
                }
                let inside = |z: QNum| {
                    comps.iter().any(|(lo, hi)| {
                        let lo_ok = rot.cmp_q(z, *lo) != Ordering::Less;
                        let hi_ok = rot.cmp_q(z, *hi) == Ordering::Less;
                        let z1 = z.plus_int(1);
                        (lo_ok && hi_ok)
                            || (rot.cmp_q(z1, *lo) != Ordering::Less && rot.cmp_q(z1, *hi) == Ordering::Less)
                    })
                };
                let mut pending: Vec<QNum> = self.grid_points().iter().map(|p| self.exact(p)).collect();
                for j in 0..=RETURN_HORIZON as i64 {
                    pending.retain(|y| !inside(rot.q_reduce(y.shift(-j))));
                    if pending.is_empty() {
                        return Ok(j as usize);
                    }
                }
                Err(exceeded)
            }
            Cell::Boxes { boxes, dim } => {
                let h = self.grid_spacing();
                let shrunk: Vec<BoxCell> = boxes.iter().filter_map(|b| b.shrink(h, *dim)).collect();
                if shrunk.is_empty() {
                    return Err(exceeded);
                }
                let mut pending = self.grid_points();
                for j in 0..=RETURN_HORIZON as i64 {
                    pending.retain(|y| {
                        let c = self.coords(&self.step(y, -j));
                        !shrunk.iter().any(|b| b.contains(&c, *dim))
                    });
                    if pending.is_empty() {
                        return Ok(j as usize);
                    }
                }
                Err(exceeded)
            }
        }
    }

    /// Partition of `U` by first-return time.
    pub fn first_return(&self, u: &Cell) -> Result<Vec<(Cell, usize)>> {
        let rot = self.require_rotation("first return")?;
        let (arcs, clopen) = match u {
            Cell::Arcs { arcs, clopen } => (arcs, *clopen),
            Cell::Boxes { .. } => return Err(LabError::Unsupported("first return on boxes".into())),
        };
        if arcs.is_empty() {
            return Err(LabError::EmptyCell);
        }
        let mut remaining = arcs.clone();
        let mut out = Vec::new();
        for n in 1..=RETURN_HORIZON {
            let back = rot.translate_arcs(arcs, -(n as i64));
            let hit = rot.intersect_arcs(&remaining, &back);
            if !hit.is_empty() {
                remaining = rot.subtract_arcs(&remaining, &back);
                out.push((Cell::Arcs { arcs: hit, clopen }, n));
                if remaining.is_empty() {
                    return Ok(out);
                }
            }
        }
        Err(LabError::HorizonExceeded { what: "first return", horizon: RETURN_HORIZON })
    }

    /// Sorted arcs of an arc cell.
    pub fn arcs<'a>(&self, cell: &'a Cell) -> Result<&'a [Arc]> {
        match cell {
            Cell::Arcs { arcs, .. } => Ok(arcs),
            Cell::Boxes { .. } => Err(LabError::Unsupported("arc operation on boxes".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_examples() {
        let sys = BaseSystem::circle(RotationNumber::float(0.3).unwrap());
        let x = sys.point(0.9);
        assert!((sys.position(&sys.step(&x, 1)) - 0.2).abs() < 1e-9);
        assert_eq!(sys.step(&x, 0), x);
        assert_eq!(sys.step(&sys.step(&x, 5), -5), x);
    }

    #[test]
    fn covering_full_is_zero() {
        let sys = BaseSystem::golden();
        assert_eq!(sys.covering_time(&Cell::full_circle()).unwrap(), 0);
    }

    #[test]
    fn small_cell_contains_center() {
        let sys = BaseSystem::golden();
        let x0 = sys.point(0.5);
        let c = sys.small_boundary_cell(&x0, 0.1).unwrap();
        assert!(sys.contains(&c, &x0));
        assert!(sys.diameter(&c) <= 0.4);
        for a in c.arcs() {
            let lo = sys.first_shift().q_value(a.lo);
            let hi = sys.first_shift().q_value(a.hi);
            assert!(lo > 0.3 && hi < 0.7);
        }
    }

    #[test]
    fn full_return_is_one() {
        let sys = BaseSystem::golden();
        let r = sys.first_return(&Cell::full_circle()).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].1, 1);
    }

    #[test]
    fn sturmian_cylinder_is_clopen() {
        let sys = BaseSystem::sturmian(RotationNumber::golden(), 20);
        let x0 = sys.point(0.37);
        let c = sys.small_boundary_cell(&x0, 0.05).unwrap();
        assert!(c.is_clopen());
        assert!(sys.boundary(&c).is_empty());
        assert!(sys.contains(&c, &x0));
    }
}
