//! Castles of towers with heights `N` and `N + 1`, and uniform visit-frequency bounds.

use std::cmp::Ordering;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::base::{Arc, BaseKind, BasePoint, BaseSystem, Cell, QNum, RotationNumber};
use crate::error::{LabError, Result};

const SHRINK_STEPS: usize = 40;
const FREQ_HORIZON_FACTOR: usize = 8;
const CHECKPOINT_RATIO: f64 = 1.0625;
const MAX_N0: usize = 1 << 16;

/// Least `n1` such that every `n ≥ n1` is a sum of `N`s and `(N + 1)`s.
pub fn frobenius_threshold(n: usize) -> usize {
    match n {
        0 | 1 => 1,
        _ => n * n - n,
    }
}

/// `(ℓ, ℓ′)` with `ℓ·N + ℓ′·(N + 1) = n`, taking `ℓ′` as large as possible.
pub fn decompose_height(n: usize, height: usize) -> Result<(usize, usize)> {
    if height == 0 {
        return Err(LabError::Invalid("tower height must be at least 1".into()));
    }
    let most = n / (height + 1);
    let offset = (most + height - n % height) % height;
    if offset > most {
        return Err(LabError::NotRepresentable { n, height });
    }
    let tall = most - offset;
    let short = (n - tall * (height + 1)) / height;
    Ok((short, tall))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tower {
    pub base: Cell,
    pub height: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Castle {
    pub n: usize,
    pub towers: Vec<Tower>,
    pub base_union: Cell,
    /// Base arcs sorted by left endpoint, tagged with their tower.
    index: Vec<(Arc, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CastleReport {
    pub towers: usize,
    pub floors: usize,
    pub boundary_points: usize,
    pub disjoint: bool,
    pub covering: bool,
    pub returns_exact: bool,
}

impl CastleReport {
    pub fn pass(&self) -> bool {
        self.disjoint && self.covering && self.returns_exact
    }
}

pub(crate) fn circle_rotation<'a>(sys: &'a BaseSystem, what: &str) -> Result<&'a RotationNumber> {
    match sys.kind() {
        BaseKind::CircleRotation { alpha } => Ok(alpha),
        _ => Err(LabError::Unsupported(format!("{what} needs a circle rotation"))),
    }
}

fn iterates_disjoint(rot: &RotationNumber, arcs: &[Arc], upto: usize) -> bool {
    (1..=upto as i64).all(|j| !rot.arcs_overlap(arcs, &rot.translate_arcs(arcs, j)))
}

/// Castle whose towers have heights `N` and `N + 1`.
pub fn build_castle(sys: &BaseSystem, n: usize) -> Result<Castle> {
    if n == 0 {
        return Err(LabError::Invalid("castle height must be at least 1".into()));
    }
    let rot = circle_rotation(sys, "castle construction")?;
    let n1 = frobenius_threshold(n);
    let center = sys.point(0.5);
    let mut radius = 1.0 / (n1 + 1) as f64;
    let mut u = None;
    for _ in 0..SHRINK_STEPS {
        let cell = sys.small_boundary_cell(&center, radius)?;
        if iterates_disjoint(rot, cell.arcs(), n1) {
            u = Some(cell);
            break;
        }
        radius *= 0.5;
    }
    let u = u.ok_or_else(|| LabError::DisjointnessFailed(format!("no base with {n1} disjoint iterates")))?;
    let mut towers = Vec::new();
    for (class, ret) in sys.first_return(&u)? {
        let (short, tall) = decompose_height(ret, n)?;
        let mut offset = 0;
        for height in std::iter::repeat(n + 1).take(tall).chain(std::iter::repeat(n).take(short)) {
            towers.push(Tower { base: sys.translate(&class, offset as i64), height });
            offset += height;
        }
    }
    let castle = Castle::assemble(rot, n, towers);
    let report = castle.check(sys)?;
    if !report.pass() {
        return Err(LabError::DisjointnessFailed(format!("castle invariants failed: {report:?}")));
    }
    Ok(castle)
}

impl Castle {
    fn assemble(rot: &RotationNumber, n: usize, towers: Vec<Tower>) -> Castle {
        let mut index: Vec<(Arc, usize)> =
            towers.iter().enumerate().flat_map(|(t, tw)| tw.base.arcs().iter().map(move |a| (*a, t))).collect();
        index.sort_by(|a, b| rot.cmp_q(a.0.lo, b.0.lo));
        let arcs: Vec<Arc> = index.iter().map(|(a, _)| *a).collect();
        let base_union = Cell::from_arcs(rot.union_arcs(&arcs, &[]));
        Castle { n, towers, base_union, index }
    }

    pub fn max_height(&self) -> usize {
        self.towers.iter().map(|t| t.height).max().unwrap_or(0)
    }

    /// Tower containing a reduced lattice point of the base union.
    pub fn base_tower(&self, rot: &RotationNumber, x: QNum) -> Option<usize> {
        let i = self.index.partition_point(|(a, _)| rot.cmp_q(a.lo, x) != Ordering::Greater);
        if i == 0 {
            return None;
        }
        let (a, t) = &self.index[i - 1];
        (rot.cmp_q(x, a.hi) == Ordering::Less).then_some(*t)
    }

    /// `(tower, floor)` of a point.
    pub fn locate(&self, sys: &BaseSystem, p: &BasePoint) -> Result<(usize, usize)> {
        let rot = circle_rotation(sys, "castle lookup")?;
        let x = sys.exact(p);
        for j in 0..self.max_height() {
            if let Some(t) = self.base_tower(rot, rot.q_reduce(x.shift(-(j as i64)))) {
                return Ok((t, j));
            }
        }
        Err(LabError::DecompositionFailed { step: 0, reason: "point outside every floor".into() })
    }

    /// Recomputes the castle invariants exactly.
    pub fn check(&self, sys: &BaseSystem) -> Result<CastleReport> {
        let rot = circle_rotation(sys, "castle check")?;
        let mut floors: Vec<Arc> = Vec::new();
        for tw in &self.towers {
            for j in 0..tw.height {
                floors.extend(rot.translate_arcs(tw.base.arcs(), j as i64));
            }
        }
        rot.sort_arcs(&mut floors);
        let disjoint = floors.windows(2).all(|w| rot.cmp_q(w[0].hi, w[1].lo) != Ordering::Greater);
        let covering = disjoint
            && !floors.is_empty()
            && rot.cmp_q(floors[0].lo, QNum::ZERO) == Ordering::Equal
            && rot.cmp_q(floors[floors.len() - 1].hi, QNum::ONE) == Ordering::Equal
            && floors.windows(2).all(|w| rot.cmp_q(w[0].hi, w[1].lo) == Ordering::Equal);
        let base = self.base_union.arcs();
        let returns_exact = self.towers.iter().all(|tw| {
            let top = rot.translate_arcs(tw.base.arcs(), tw.height as i64);
            rot.subtract_arcs(&top, base).is_empty()
                && (1..tw.height as i64).all(|j| !rot.arcs_overlap(&rot.translate_arcs(tw.base.arcs(), j), base))
        });
        Ok(CastleReport {
            towers: self.towers.len(),
            floors: floors.len(),
            boundary_points: rot.arcs_boundary(base).len(),
            disjoint,
            covering,
            returns_exact,
        })
    }

    /// First-return times to the base union from points spread over every tower base.
    pub fn sampled_returns(&self, sys: &BaseSystem, samples: usize) -> Result<ReturnSample> {
        let rot = circle_rotation(sys, "castle sampling")?;
        let base = self.base_union.arcs();
        let comps: Vec<(usize, f64, f64)> = self
            .towers
            .iter()
            .enumerate()
            .flat_map(|(t, tw)| {
                rot.arc_components(tw.base.arcs()).into_iter().map(move |(lo, hi)| (t, rot.q_value(lo), rot.q_value(hi)))
            })
            .collect();
        let mut out = ReturnSample { checked: 0, matched: 0, min: usize::MAX, max: 0 };
        if comps.is_empty() {
            return Ok(out);
        }
        let per = samples.div_ceil(comps.len());
        for k in 0..samples {
            let (t, lo, hi) = comps[k % comps.len()];
            let frac = ((k / comps.len()) as f64 + 0.5) / per as f64;
            let p = sys.point((lo + frac * (hi - lo)).rem_euclid(1.0));
            if !rot.arcs_contain(base, rot.q_reduce(sys.exact(&p))) {
                continue;
            }
            let limit = self.max_height() + 1;
            let ret = (1..=limit).find(|&j| rot.arcs_contain(base, rot.q_reduce(sys.exact(&sys.step(&p, j as i64)))));
            out.checked += 1;
            if let Some(r) = ret {
                out.min = out.min.min(r);
                out.max = out.max.max(r);
                let tower = self.base_tower(rot, rot.q_reduce(sys.exact(&p)));
                if tower == Some(t) && r == self.towers[t].height {
                    out.matched += 1;
                }
            }
        }
        Ok(out)
    }

    /// One row per tower: base component endpoints and height.
    pub fn to_csv(&self, sys: &BaseSystem) -> Result<String> {
        let rot = circle_rotation(sys, "castle export")?;
        let mut out = String::from("tower,lo,hi,height\n");
        for (t, tw) in self.towers.iter().enumerate() {
            for (lo, hi) in rot.arc_components(tw.base.arcs()) {
                let _ = writeln!(out, "{t},{},{},{}", rot.q_value(lo), rot.q_value(hi), tw.height);
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReturnSample {
    pub checked: usize,
    pub matched: usize,
    pub min: usize,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FreqBound {
    #[serde(skip)]
    pub v: Cell,
    pub rho: f64,
    pub n0: usize,
    pub eps: f64,
    pub sup_frequency: f64,
}

/// Sorted disjoint open intervals `(lo, hi)` on `[0, 1)` around the given positions.
fn neighbourhood(points: &[f64], r: f64) -> Vec<(f64, f64)> {
    let mut raw: Vec<(f64, f64)> = Vec::new();
    for &p in points {
        let (lo, hi) = (p - r, p + r);
        if lo < 0.0 {
            raw.push((lo + 1.0, 1.0));
            raw.push((0.0, hi));
        } else if hi > 1.0 {
            raw.push((lo, 1.0));
            raw.push((0.0, hi - 1.0));
        } else {
            raw.push((lo, hi));
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in raw {
        match out.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn intervals_cell(rot: &RotationNumber, iv: &[(f64, f64)]) -> Cell {
    let mut arcs = Vec::new();
    for &(lo, hi) in iv {
        arcs.extend(rot.normalize_interval(QNum::from_f64(lo), QNum::from_f64(hi)));
    }
    Cell::from_arcs(rot.union_arcs(&arcs, &[]))
}

/// Visit counts of every grid orbit to a fixed set, accumulated one iterate at a time.
struct VisitCounter<'a> {
    rot: &'a RotationNumber,
    intervals: &'a [(f64, f64)],
    diff: Vec<i64>,
    steps: usize,
}

impl<'a> VisitCounter<'a> {
    fn new(rot: &'a RotationNumber, intervals: &'a [(f64, f64)], grid: usize) -> Self {
        VisitCounter { rot, intervals, diff: vec![0; grid + 1], steps: 0 }
    }

    fn add_range(&mut self, from: usize, to: usize) {
        self.diff[from] += 1;
        self.diff[to + 1] -= 1;
    }

    /// Counts `x + j·α ∈ I` for the next `j`, over-counting grid points at interval ends.
    fn advance_to(&mut self, n: usize) {
        let g = self.diff.len() - 1;
        let gf = g as f64;
        while self.steps < n {
            let j = -(self.steps as i64);
            for k in 0..self.intervals.len() {
                let (lo, hi) = self.intervals[k];
                let start = self.rot.advance(lo, j);
                let first = (start * gf).floor() as i64;
                let last = ((start + (hi - lo)) * gf).ceil() as i64;
                if last - first + 1 >= g as i64 {
                    self.add_range(0, g - 1);
                } else if last < g as i64 {
                    self.add_range(first as usize, last as usize);
                } else {
                    self.add_range(first as usize, g - 1);
                    self.add_range(0, (last - g as i64) as usize);
                }
            }
            self.steps += 1;
        }
    }

    fn max_count(&self) -> i64 {
        let mut run = 0;
        let mut best = 0;
        for d in &self.diff[..self.diff.len() - 1] {
            run += d;
            best = best.max(run);
        }
        best
    }
}

/// Smallest checkpoint `n0` with `(1/n)·#{j < n : f^j(x) ∈ V⁺} < eps` for every grid `x` and `n0 ≤ n ≤ 8·n0`.
///
/// Counts are monotone in `n`, so `count_{n_{k+1}}/n_k` bounds the frequency between consecutive checkpoints.
fn certify_frequency(sys: &BaseSystem, rot: &RotationNumber, inflated: &[(f64, f64)], eps: f64) -> Option<(usize, f64)> {
    let start = ((2.0 / eps).ceil() as usize).max(16);
    let mut checkpoints = vec![start];
    while *checkpoints.last().expect("nonempty") < FREQ_HORIZON_FACTOR * MAX_N0 {
        let last = *checkpoints.last().expect("nonempty");
        checkpoints.push(((last as f64 * CHECKPOINT_RATIO).ceil() as usize).max(last + 1));
    }
    let mut counter = VisitCounter::new(rot, inflated, sys.grid());
    let mut bounds: Vec<f64> = Vec::with_capacity(checkpoints.len());
    let mut candidate = 0;
    for k in 1..checkpoints.len() {
        counter.advance_to(checkpoints[k]);
        bounds.push(counter.max_count() as f64 / checkpoints[k - 1] as f64);
        while candidate < bounds.len() && checkpoints[k] >= FREQ_HORIZON_FACTOR * checkpoints[candidate] {
            let sup = bounds[candidate..].iter().fold(0.0f64, |a, b| a.max(*b));
            if sup < eps {
                return Some((checkpoints[candidate], sup));
            }
            candidate += 1;
        }
        if candidate < checkpoints.len() && checkpoints[candidate] > MAX_N0 {
            break;
        }
    }
    None
}

/// Open neighbourhood `V` of a finite set and a horizon `n0` past which every orbit visits `V` with frequency below `eps`.
pub fn visit_freq_bound(sys: &BaseSystem, points: &[f64], eps: f64) -> Result<FreqBound> {
    if !(eps > 0.0) {
        return Err(LabError::Invalid("frequency bound needs eps > 0".into()));
    }
    let rot = circle_rotation(sys, "visit frequency")?;
    if points.is_empty() {
        return Ok(FreqBound { v: Cell::empty_arcs(), rho: 0.0, n0: 1, eps, sup_frequency: 0.0 });
    }
    let h = sys.grid_spacing();
    let mut rho = eps / (4.0 * points.len() as f64);
    while rho >= h {
        let inflated = neighbourhood(points, rho + h);
        if let Some((n0, freq)) = certify_frequency(sys, rot, &inflated, eps) {
            let v = intervals_cell(rot, &neighbourhood(points, rho));
            return Ok(FreqBound { v, rho, n0, eps, sup_frequency: freq });
        }
        rho *= 0.5;
    }
    Err(LabError::ShrinkExhausted)
}

impl FreqBound {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain record")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decomposition_examples() {
        assert_eq!(decompose_height(3, 3).unwrap(), (1, 0));
        assert_eq!(decompose_height(7, 3).unwrap(), (1, 1));
        assert_eq!(decompose_height(12, 3).unwrap(), (0, 3));
        assert!(decompose_height(5, 3).is_err());
        assert_eq!(decompose_height(5, 1).unwrap(), (1, 2));
    }

    #[test]
    fn small_castle() {
        let sys = BaseSystem::golden();
        let castle = build_castle(&sys, 3).unwrap();
        assert!(castle.towers.iter().all(|t| t.height == 3 || t.height == 4));
        let (t, j) = castle.locate(&sys, &sys.point(0.123)).unwrap();
        assert!(j < castle.towers[t].height);
    }

    #[test]
    fn empty_set_has_zero_frequency() {
        let fb = visit_freq_bound(&BaseSystem::golden(), &[], 0.1).unwrap();
        assert!(fb.v.is_empty());
        assert_eq!(fb.sup_frequency, 0.0);
    }
}
