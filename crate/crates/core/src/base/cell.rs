//! Cells: finite unions of half-open arcs of the circle, or boxes of a torus.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::rotation::{QNum, RotationNumber};

/// Half-open arc `[lo, hi)` with `0 ≤ lo < hi ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub lo: QNum,
    pub hi: QNum,
}

/// Product of half-open intervals `[lo_i, lo_i + len_i)` taken mod 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCell {
    pub lo: [f64; 3],
    pub len: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    /// Sorted disjoint arcs; `clopen` marks symbolic cylinders, whose boundary is empty.
    Arcs { arcs: Vec<Arc>, clopen: bool },
    Boxes { boxes: Vec<BoxCell>, dim: usize },
}

impl Cell {
    pub fn full_circle() -> Cell {
        Cell::Arcs {
            arcs: vec![Arc { lo: QNum::ZERO, hi: QNum::ONE }],
            clopen: true,
        }
    }

    pub fn empty_arcs() -> Cell {
        Cell::Arcs { arcs: Vec::new(), clopen: false }
    }

    pub fn from_arcs(arcs: Vec<Arc>) -> Cell {
        Cell::Arcs { arcs, clopen: false }
    }

    pub fn arcs(&self) -> &[Arc] {
        match self {
            Cell::Arcs { arcs, .. } => arcs,
            Cell::Boxes { .. } => &[],
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            Cell::Arcs { arcs, .. } => arcs.is_empty(),
            Cell::Boxes { boxes, .. } => boxes.is_empty(),
        }
    }

    pub fn is_clopen(&self) -> bool {
        matches!(self, Cell::Arcs { clopen: true, .. })
    }
}

impl RotationNumber {
    /// Arcs of `[lo, hi)` reduced into `[0, 1)`, where `0 < hi − lo ≤ 1`.
    pub fn normalize_interval(&self, lo: QNum, hi: QNum) -> Vec<Arc> {
        let f = self.q_floor(lo);
        let lo = lo.plus_int(-f);
        let hi = hi.plus_int(-f);
        if self.cmp_q(hi, QNum::ONE) != Ordering::Greater {
            vec![Arc { lo, hi }]
        } else {
            let mut out = vec![Arc { lo: QNum::ZERO, hi: hi.plus_int(-1) }];
            if self.cmp_q(lo, QNum::ONE) == Ordering::Less {
                out.push(Arc { lo, hi: QNum::ONE });
            }
            out.retain(|a| self.cmp_q(a.lo, a.hi) == Ordering::Less);
            out
        }
    }

    pub fn sort_arcs(&self, arcs: &mut [Arc]) {
        arcs.sort_by(|a, b| self.cmp_q(a.lo, b.lo));
    }

    /// `f^j` of a sorted arc set.
    pub fn translate_arcs(&self, arcs: &[Arc], j: i64) -> Vec<Arc> {
        let mut out = Vec::with_capacity(arcs.len() + 1);
        for a in arcs {
            out.extend(self.normalize_interval(a.lo.shift(j), a.hi.shift(j)));
        }
        self.sort_arcs(&mut out);
        out
    }

    pub fn intersect_arcs(&self, a: &[Arc], b: &[Arc]) -> Vec<Arc> {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let lo = if self.cmp_q(a[i].lo, b[j].lo) == Ordering::Greater { a[i].lo } else { b[j].lo };
            let a_first = self.cmp_q(a[i].hi, b[j].hi) != Ordering::Greater;
            let hi = if a_first { a[i].hi } else { b[j].hi };
            if self.cmp_q(lo, hi) == Ordering::Less {
                out.push(Arc { lo, hi });
            }
            if a_first {
                i += 1;
            } else {
                j += 1;
            }
        }
        out
    }

    pub fn subtract_arcs(&self, a: &[Arc], b: &[Arc]) -> Vec<Arc> {
        let mut out = Vec::new();
        let mut j0 = 0;
        for arc in a {
            let mut lo = arc.lo;
            while j0 < b.len() && self.cmp_q(b[j0].hi, arc.lo) != Ordering::Greater {
                j0 += 1;
            }
            let mut j = j0;
            while j < b.len() && self.cmp_q(b[j].lo, arc.hi) == Ordering::Less {
                if self.cmp_q(b[j].lo, lo) == Ordering::Greater {
                    out.push(Arc { lo, hi: b[j].lo });
                }
                if self.cmp_q(b[j].hi, lo) == Ordering::Greater {
                    lo = b[j].hi;
                }
                j += 1;
            }
            if self.cmp_q(lo, arc.hi) == Ordering::Less {
                out.push(Arc { lo, hi: arc.hi });
            }
        }
        out
    }

    /// Union of two sorted arc sets, merging overlaps and abutting arcs.
    pub fn union_arcs(&self, a: &[Arc], b: &[Arc]) -> Vec<Arc> {
        let mut all: Vec<Arc> = a.iter().chain(b.iter()).copied().collect();
        self.sort_arcs(&mut all);
        let mut out: Vec<Arc> = Vec::with_capacity(all.len());
        for arc in all {
            if let Some(last) = out.last_mut() {
                if self.cmp_q(arc.lo, last.hi) != Ordering::Greater {
                    if self.cmp_q(arc.hi, last.hi) == Ordering::Greater {
                        last.hi = arc.hi;
                    }
                    continue;
                }
            }
            out.push(arc);
        }
        out
    }

    /// Membership of a reduced point in a sorted arc set.
    pub fn arcs_contain(&self, arcs: &[Arc], x: QNum) -> bool {
        self.locate_arc(arcs, x).is_some()
    }

    /// Index of the arc containing the reduced point `x`.
    pub fn locate_arc(&self, arcs: &[Arc], x: QNum) -> Option<usize> {
        let idx = arcs.partition_point(|a| self.cmp_q(a.lo, x) != Ordering::Greater);
        if idx == 0 {
            return None;
        }
        let a = &arcs[idx - 1];
        (self.cmp_q(x, a.hi) == Ordering::Less).then_some(idx - 1)
    }

    pub fn arcs_measure(&self, arcs: &[Arc]) -> f64 {
        arcs.iter().map(|a| self.arc_length(a)).sum()
    }

    pub fn arc_length(&self, a: &Arc) -> f64 {
        let d = a.hi.sub(a.lo);
        self.q_value(d)
    }

    /// Whether two sorted arc sets share a point.
    pub fn arcs_overlap(&self, a: &[Arc], b: &[Arc]) -> bool {
        !self.intersect_arcs(a, b).is_empty()
    }

    /// Boundary points of a sorted arc set, excluding shared endpoints of abutting arcs.
    pub fn arcs_boundary(&self, arcs: &[Arc]) -> Vec<QNum> {
        let merged = self.union_arcs(arcs, &[]);
        let n = merged.len();
        if n == 0 {
            return Vec::new();
        }
        let wraps = n > 1
            && self.cmp_q(merged[0].lo, QNum::ZERO) == Ordering::Equal
            && self.cmp_q(merged[n - 1].hi, QNum::ONE) == Ordering::Equal;
        if n == 1
            && self.cmp_q(merged[0].lo, QNum::ZERO) == Ordering::Equal
            && self.cmp_q(merged[0].hi, QNum::ONE) == Ordering::Equal
        {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(2 * n);
        for (i, a) in merged.iter().enumerate() {
            if !(wraps && i == 0) {
                out.push(a.lo);
            }
            if !(wraps && i == n - 1) {
                out.push(self.q_reduce(a.hi));
            }
        }
        out
    }

    /// Circle diameter of an arc set: `min(1 − largest complementary gap, 1/2)`.
    pub fn arcs_diameter(&self, arcs: &[Arc]) -> f64 {
        if arcs.is_empty() {
            return 0.0;
        }
        let merged = self.union_arcs(arcs, &[]);
        let n = merged.len();
        let mut gap: f64 = 0.0;
        for i in 0..n {
            let next_lo = if i + 1 < n { merged[i + 1].lo } else { merged[0].lo.plus_int(1) };
            gap = gap.max(self.q_value(next_lo.sub(merged[i].hi)));
        }
        (1.0 - gap).min(0.5)
    }

    /// Connected components `[lo, hi)` with `hi` possibly beyond 1 for an arc through 0.
    pub fn arc_components(&self, arcs: &[Arc]) -> Vec<(QNum, QNum)> {
        let merged = self.union_arcs(arcs, &[]);
        let n = merged.len();
        if n == 0 {
            return Vec::new();
        }
        let wraps = n > 1
            && self.cmp_q(merged[0].lo, QNum::ZERO) == Ordering::Equal
            && self.cmp_q(merged[n - 1].hi, QNum::ONE) == Ordering::Equal;
        let mut out = Vec::new();
        let start = usize::from(wraps);
        for a in &merged[start..n] {
            out.push((a.lo, a.hi));
        }
        if wraps {
            let last = out.last_mut().expect("n > 1");
            last.1 = merged[0].hi.plus_int(1);
        }
        out
    }
}

/// Circle distance between two positions in `[0, 1)`.
pub fn circle_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).rem_euclid(1.0);
    d.min(1.0 - d)
}

impl BoxCell {
    pub fn contains(&self, x: &[f64; 3], dim: usize) -> bool {
        (0..dim).all(|i| (x[i] - self.lo[i]).rem_euclid(1.0) < self.len[i])
    }

    /// Shrinks every side by `margin` on both ends; `None` if nothing is left.
    pub fn shrink(&self, margin: f64, dim: usize) -> Option<BoxCell> {
        let mut out = *self;
        for i in 0..dim {
            if self.len[i] >= 1.0 {
                continue;
            }
            out.lo[i] = (self.lo[i] + margin).rem_euclid(1.0);
            out.len[i] = self.len[i] - 2.0 * margin;
            if out.len[i] <= 0.0 {
                return None;
            }
        }
        Some(out)
    }

    pub fn diameter(&self, dim: usize) -> f64 {
        (0..dim).map(|i| self.len[i].min(0.5)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(x: f64) -> QNum {
        QNum::from_f64(x)
    }

    #[test]
    fn set_operations() {
        let g = RotationNumber::golden();
        let a = vec![Arc { lo: q(0.1), hi: q(0.4) }, Arc { lo: q(0.6), hi: q(0.9) }];
        let b = vec![Arc { lo: q(0.3), hi: q(0.7) }];
        let i = g.intersect_arcs(&a, &b);
        assert_eq!(i, vec![Arc { lo: q(0.3), hi: q(0.4) }, Arc { lo: q(0.6), hi: q(0.7) }]);
        let d = g.subtract_arcs(&a, &b);
        assert_eq!(d, vec![Arc { lo: q(0.1), hi: q(0.3) }, Arc { lo: q(0.7), hi: q(0.9) }]);
        let u = g.union_arcs(&a, &b);
        assert_eq!(u, vec![Arc { lo: q(0.1), hi: q(0.9) }]);
        assert!((g.arcs_measure(&a) - 0.6).abs() < 1e-9);
    }

    #[test]
    fn translation_wraps() {
        let g = RotationNumber::golden();
        let a = vec![Arc { lo: q(0.2), hi: q(0.6) }];
        let t = g.translate_arcs(&a, 1);
        assert_eq!(t.len(), 2);
        assert!((g.arcs_measure(&t) - 0.4).abs() < 1e-9);
        let back = g.translate_arcs(&t, -1);
        assert_eq!(g.union_arcs(&back, &[]), a);
        let comps = g.arc_components(&t);
        assert_eq!(comps.len(), 1);
        assert_eq!(g.arcs_boundary(&t).len(), 2);
    }

    #[test]
    fn locate_and_diameter() {
        let g = RotationNumber::golden();
        let a = vec![Arc { lo: q(0.0), hi: q(0.05) }, Arc { lo: q(0.95), hi: QNum::ONE }];
        assert!(g.arcs_contain(&a, q(0.97)));
        assert!(!g.arcs_contain(&a, q(0.5)));
        assert!((g.arcs_diameter(&a) - 0.1).abs() < 1e-9);
        assert!(g.arcs_boundary(&a).len() == 2);
    }
}
