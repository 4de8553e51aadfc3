use std::f64::consts::PI;

use rayon::prelude::*;
use rug::float::Constant;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::base::{BasePoint, Cell, QNum};
use crate::cocycle::Cocycle;
use crate::error::{LabError, Result};
use crate::hp::{self, BlockMat2, HpMat2};
use crate::sl2::{self, lift_apply, line_distance, rotation, Mat2, ScaledMat2};

pub const ANGLE_TOLERANCE: f64 = 1e-6;
pub const SWEEP_DIRECTIONS: usize = 32;
pub const WINDOW_CANDIDATES: usize = 64;
const CAP_FACTOR: f64 = 1.0 - 1e-7;
const PRECISION_MARGIN: u32 = 64;
const DEGENERATE_LOG_NORM: f64 = 1e-8;

/// Largest rotation angle `φ` with `‖(R_φ − Id)·A‖ = 2·sin(φ/2)·‖A‖ < eps`.
pub fn step_cap(norm: f64, eps: f64) -> f64 {
    let r = eps / (2.0 * norm);
    if r >= 1.0 {
        PI
    } else {
        2.0 * r.asin()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringBlock {
    pub anchor: BasePoint,
    pub m: usize,
    pub matrices: Vec<Mat2>,
    pub angles: Vec<f64>,
    pub eps: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceProfile {
    pub x: BasePoint,
    pub n: usize,
    /// `log Δ_j` for `0 ≤ j ≤ n`.
    pub log_deltas: Vec<f64>,
    pub j0: usize,
    pub c: f64,
}

impl BalanceProfile {
    pub fn delta(&self, j: usize) -> f64 {
        self.log_deltas[j].exp()
    }
}

/// Extended-precision replacement for one factor of a plan.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinedFactor {
    pub index: usize,
    pub value: HpMat2,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Branch {
    Steered { j1: usize, block: SteeringBlock },
    EarlyExit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SegmentPlan {
    pub x: BasePoint,
    pub n: usize,
    pub eps: f64,
    pub matrices: Vec<Mat2>,
    pub refined: Option<RefinedFactor>,
    pub branch: Branch,
    /// Certified upper bound for `log‖L_{N−1}···L_0‖`.
    pub log_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub n: usize,
    pub eps: f64,
    pub max_distance: f64,
    pub log_norm: f64,
    pub distance_ok: bool,
    pub growth_ok: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringWindow {
    pub cell: Cell,
    pub m: usize,
    pub center: f64,
    pub radius: f64,
    pub covering_time: usize,
    pub sample_points: usize,
    pub candidates_tried: usize,
}

/// Generator values and steering caps along an orbit piece.
struct Track {
    values: Vec<Mat2>,
    caps: Vec<f64>,
}

impl Track {
    fn new(co: &Cocycle, x: &BasePoint, len: usize, eps: f64) -> Track {
        let values: Vec<Mat2> = (0..len).map(|j| co.value(&co.base().step(x, j as i64))).collect();
        let caps = values.iter().map(|a| CAP_FACTOR * step_cap(sl2::operator_norm(a), eps)).collect();
        Track { values, caps }
    }

    fn run(&self, theta: f64, t: f64, m: usize) -> f64 {
        (0..m).fold(theta, |th, k| lift_apply(&self.values[k].entries(), th) + t * self.caps[k])
    }

    /// Smallest `m ≤ m_cap` whose reachable arc from `theta_v` contains the line `theta_w`.
    fn min_steps(&self, theta_v: f64, theta_w: f64, m_cap: usize) -> Option<usize> {
        if line_distance(theta_v, theta_w) <= ANGLE_TOLERANCE {
            return Some(0);
        }
        let (mut lo, mut hi) = (theta_v, theta_v);
        for k in 0..m_cap.min(self.values.len()) {
            let a = self.values[k].entries();
            lo = lift_apply(&a, lo) - self.caps[k];
            hi = lift_apply(&a, hi) + self.caps[k];
            if hi - lo >= PI || reachable_lift(lo, hi, theta_w).is_some() {
                return Some(k + 1);
            }
        }
        None
    }

    /// Rotation angles steering `theta_v` onto the line `theta_w` in exactly `m` steps.
    fn solve(&self, theta_v: f64, theta_w: f64, m: usize) -> Option<Vec<f64>> {
        let lo = self.run(theta_v, -1.0, m);
        let hi = self.run(theta_v, 1.0, m);
        let target = if hi - lo >= PI {
            theta_w + ((lo - theta_w) / PI).ceil() * PI
        } else {
            reachable_lift(lo, hi, theta_w)?
        };
        let (mut a, mut b) = (-1.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.run(theta_v, mid, m) < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        let t = 0.5 * (a + b);
        let mut angles: Vec<f64> = self.caps[..m].iter().map(|c| t * c).collect();
        let before = self.run(theta_v, t, m - 1);
        let last = target - lift_apply(&self.values[m - 1].entries(), before);
        let cap = self.caps[m - 1];
        angles[m - 1] = last.clamp(-cap, cap);
        Some(angles)
    }
}

fn reachable_lift(lo: f64, hi: f64, theta_w: f64) -> Option<f64> {
    let t = theta_w + ((lo - theta_w) / PI).ceil() * PI;
    (t <= hi).then_some(t)
}

fn unit(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

fn image_angle(matrices: &[Mat2], theta: f64) -> f64 {
    let mut v = unit(theta);
    for m in matrices {
        let w = m.apply(v);
        let r = w[0].hypot(w[1]);
        v = [w[0] / r, w[1] / r];
    }
    sl2::direction_angle(v)
}

fn build_block(x: &BasePoint, track: &Track, angles: Vec<f64>, theta_v: f64, theta_w: f64, eps: f64) -> SteeringBlock {
    let matrices: Vec<Mat2> = angles.iter().zip(&track.values).map(|(phi, a)| rotation(*phi) * *a).collect();
    let error = if matrices.is_empty() {
        line_distance(theta_v, theta_w)
    } else {
        line_distance(image_angle(&matrices, theta_v), theta_w)
    };
    SteeringBlock { anchor: *x, m: matrices.len(), matrices, angles, eps, error }
}

fn block_within_budget(block: &SteeringBlock, track: &Track) -> bool {
    block.matrices.iter().zip(&track.values).all(|(m, a)| m.distance(a) < block.eps)
}

/// Steers the line of `v` onto the line of `w` with the fewest perturbed steps from `x`.
pub fn steer_direction(co: &Cocycle, x: &BasePoint, v: [f64; 2], w: [f64; 2], eps: f64, m_max: usize) -> Result<SteeringBlock> {
    if v == [0.0, 0.0] || w == [0.0, 0.0] || !(eps > 0.0) {
        return Err(LabError::Invalid("steering needs nonzero vectors and eps > 0".into()));
    }
    let theta_v = sl2::direction_angle(v);
    let theta_w = sl2::direction_angle(w);
    let track = Track::new(co, x, m_max, eps);
    if line_distance(theta_v, theta_w) <= ANGLE_TOLERANCE {
        return Ok(build_block(x, &track, Vec::new(), theta_v, theta_w, eps));
    }
    let mut best_error = f64::INFINITY;
    let first = track.min_steps(theta_v, theta_w, m_max).unwrap_or(m_max + 1);
    for m in first..=m_max {
        if let Some(angles) = track.solve(theta_v, theta_w, m) {
            let block = build_block(x, &track, angles, theta_v, theta_w, eps);
            if block.error <= ANGLE_TOLERANCE && block_within_budget(&block, &track) {
                return Ok(block);
            }
            best_error = best_error.min(block.error);
        }
    }
    if best_error.is_infinite() {
        let m = m_max.min(track.values.len());
        let lo = track.run(theta_v, -1.0, m);
        let hi = track.run(theta_v, 1.0, m);
        best_error = line_distance(lo, theta_w).min(line_distance(hi, theta_w));
    }
    Err(LabError::BudgetExhausted { m_max, error: best_error })
}

/// Log-scaled prefix products `A_j(x)` and suffix products `A_{N−j}(f^j x)`.
struct Segment {
    values: Vec<Mat2>,
    prefix: Vec<ScaledMat2>,
    suffix: Vec<ScaledMat2>,
}

impl Segment {
    fn new(co: &Cocycle, x: &BasePoint, n: usize) -> Segment {
        let values: Vec<Mat2> = (0..n).map(|j| co.value(&co.base().step(x, j as i64))).collect();
        let mut prefix = Vec::with_capacity(n + 1);
        let mut acc = ScaledMat2::identity();
        prefix.push(acc);
        for v in &values {
            acc.push(v);
            acc.rescale();
            prefix.push(acc);
        }
        let mut suffix = vec![ScaledMat2::identity(); n + 1];
        let mut acc = ScaledMat2::identity();
        for j in (0..n).rev() {
            acc.push_right(&values[j]);
            acc.rescale();
            suffix[j] = acc;
        }
        Segment { values, prefix, suffix }
    }

    fn log_norm(s: &ScaledMat2) -> f64 {
        s.log_norm().max(0.0)
    }

    fn sum_log_frobenius(&self) -> f64 {
        let s: f64 = self.values.iter().map(|m| m.frobenius().ln()).sum();
        s * (1.0 + 1e-12) + 1e-9
    }

    fn chain(&self, from: usize, to: usize, prec: u32) -> BlockMat2 {
        let mut acc = BlockMat2::identity(prec);
        for m in &self.values[from..to] {
            acc.push(m);
        }
        acc
    }
}

fn profile_from(x: &BasePoint, seg: &Segment, c: f64) -> Result<BalanceProfile> {
    let n = seg.values.len();
    let log_deltas: Vec<f64> = (0..=n)
        .map(|j| Segment::log_norm(&seg.prefix[j]) - Segment::log_norm(&seg.suffix[j]))
        .collect();
    let lc = c.ln();
    let ratios_ok = log_deltas.windows(2).all(|w| (w[1] - w[0]).abs() < 2.0 * lc);
    let endpoints_ok = (log_deltas[0] + log_deltas[n]).abs() <= 1e-8 * (1.0 + log_deltas[n].abs());
    if !ratios_ok || !endpoints_ok {
        return Err(LabError::NoBalancedIndex);
    }
    let j0 = log_deltas.iter().position(|d| d.abs() < lc).ok_or(LabError::NoBalancedIndex)?;
    Ok(BalanceProfile { x: *x, n, log_deltas, j0, c })
}

pub fn balance_profile(co: &Cocycle, x: &BasePoint, n: usize, c: f64) -> Result<BalanceProfile> {
    if n == 0 || !(c > 1.0) {
        return Err(LabError::Invalid("balance profile needs N ≥ 1 and C > 1".into()));
    }
    profile_from(x, &Segment::new(co, x, n), c)
}

/// `C = eps + sup‖A‖ + 1e−9`.
pub fn balance_constant(co: &Cocycle, eps: f64) -> f64 {
    eps + co.sup_norm() + 1e-9
}

/// Smallest `N` with `C^{4·m1+1} < e^{eps·N}/√2` and `eps·N > c`.
pub fn choose_n(co: &Cocycle, eps: f64, c: f64, m1: usize) -> usize {
    let big_c = balance_constant(co, eps);
    let need = (4 * m1 + 1) as f64 * big_c.ln() + 0.5 * std::f64::consts::LN_2;
    let ok = |n: usize| need < eps * n as f64 && eps * n as f64 > c;
    let mut n = (need.max(c) / eps).floor().max(1.0) as usize;
    while !ok(n) {
        n += 1;
    }
    while n > 1 && ok(n - 1) {
        n -= 1;
    }
    n
}

fn working_precision(seg: &Segment) -> u32 {
    hp::precision_for(seg.values.len() + 2, seg.sum_log_frobenius(), PRECISION_MARGIN)
}

fn early_exit(x: &BasePoint, eps: f64, seg: &Segment, fallback: LabError) -> Result<SegmentPlan> {
    let n = seg.values.len();
    let bound = seg.chain(0, n, working_precision(seg)).log_norm_upper().max(0.0);
    if bound < eps * n as f64 {
        Ok(SegmentPlan {
            x: *x,
            n,
            eps,
            matrices: seg.values.clone(),
            refined: None,
            branch: Branch::EarlyExit,
            log_norm: bound,
        })
    } else {
        Err(fallback)
    }
}

fn degenerate(s: &ScaledMat2) -> bool {
    Segment::log_norm(s) <= DEGENERATE_LOG_NORM
}

/// The segment perturbation: ε-close factors whose product grows at most like `e^{eps·N}`.
pub fn plan_segment(co: &Cocycle, x: &BasePoint, eps: f64, n: usize, window: &Cell, m1: usize, m: usize) -> Result<SegmentPlan> {
    if n == 0 || !(eps > 0.0) {
        return Err(LabError::Invalid("plan needs N ≥ 1 and eps > 0".into()));
    }
    let seg = Segment::new(co, x, n);
    let profile = profile_from(x, &seg, balance_constant(co, eps))?;
    let base = co.base();
    let visits: Vec<usize> = (profile.j0..=profile.j0 + m1)
        .filter(|&j| base.contains(window, &base.step(x, j as i64)))
        .collect();
    let Some(&first) = visits.first() else {
        return Err(LabError::SteeringFailed(format!(
            "orbit misses the window in [{}, {}]",
            profile.j0,
            profile.j0 + m1
        )));
    };
    if first + m > n {
        return early_exit(x, eps, &seg, LabError::CertificationFailed("early exit without small product".into()));
    }
    let mut found = None;
    let mut any_axes = false;
    for &j in visits.iter().filter(|&&j| j + m <= n) {
        let xs = &seg.prefix[j];
        if degenerate(xs) {
            continue;
        }
        let theta_v = xs.image_expanding_angle();
        let start = base.step(x, j as i64);
        let track = Track::new(co, &start, m, eps);
        for mm in 1..=m {
            let zs = &seg.suffix[j + mm];
            if degenerate(zs) {
                continue;
            }
            any_axes = true;
            let theta_w = zs.expanding_angle() + PI / 2.0;
            if let Some(angles) = track.solve(theta_v, theta_w, mm) {
                let block = build_block(&start, &track, angles, theta_v, theta_w, eps);
                if block.error <= ANGLE_TOLERANCE && block_within_budget(&block, &track) {
                    found = Some((j, mm, block));
                    break;
                }
            }
        }
        if found.is_some() {
            break;
        }
    }
    let (j1, mm, mut block) = match found {
        Some(f) => f,
        None if !any_axes => {
            return early_exit(x, eps, &seg, LabError::DegenerateAxes { norm: 1.0 });
        }
        None => {
            return Err(LabError::SteeringFailed(format!(
                "no block of length ≤ {m} from the {} window visits after step {first}",
                visits.len()
            )))
        }
    };

    let prec = working_precision(&seg);
    let mut qx = seg.chain(0, j1, prec);
    for k in 0..mm - 1 {
        qx.push(&block.matrices[k]);
    }
    let last_index = j1 + mm - 1;
    let a_last = seg.values[last_index];
    let d = qx.to_hp().top_image_direction();
    let a = HpMat2::from_mat(&a_last, prec).apply(&d);
    let z = seg.chain(j1 + mm, n, prec);
    let u = z.to_hp().top_input_direction();
    let s = [Float::with_val(prec, -&u[1]), u[0].clone()];
    let pi = Float::with_val(prec, Constant::Pi);
    let mut phi = Float::with_val(prec, hp::angle_of(&s) - hp::angle_of(&a));
    let turns = Float::with_val(prec, &phi / &pi).round();
    phi -= Float::with_val(prec, &turns * &pi);
    let phi_f = phi.to_f64();
    if phi_f.abs() >= step_cap(sl2::operator_norm(&a_last), eps) {
        return Err(LabError::SteeringFailed("refined final rotation exceeds the budget".into()));
    }
    let refined = hp::rotate_left(&phi, &a_last, prec);
    if !(refined.distance_to(&a_last) < eps) {
        return Err(LabError::SteeringFailed("refined final factor leaves the budget".into()));
    }
    let mut p = qx;
    p.push_block(&BlockMat2::from_hp(&refined, prec));
    p.push_block(&z);
    let bound = p.log_norm_upper().max(0.0);
    if !(bound < eps * n as f64) {
        return Err(LabError::CertificationFailed(format!(
            "log norm bound {bound} is not below eps·N = {}",
            eps * n as f64
        )));
    }
    let rounded = rotation(phi_f) * a_last;
    block.angles[mm - 1] = phi_f;
    block.matrices[mm - 1] = rounded;
    let mut matrices = seg.values.clone();
    matrices[j1..j1 + mm].copy_from_slice(&block.matrices[..mm]);
    Ok(SegmentPlan {
        x: *x,
        n,
        eps,
        matrices,
        refined: Some(RefinedFactor { index: last_index, value: refined }),
        branch: Branch::Steered { j1, block },
        log_norm: bound,
    })
}

/// Recomputes both plan bounds from the cocycle and the stored factors.
pub fn verify_segment(co: &Cocycle, plan: &SegmentPlan) -> SegmentReport {
    let base = co.base();
    let n = plan.matrices.len();
    let mut max_distance = 0.0f64;
    let mut sum = 0.0f64;
    for (j, m) in plan.matrices.iter().enumerate() {
        let a = co.value(&base.step(&plan.x, j as i64));
        let (dist, frob) = match &plan.refined {
            Some(r) if r.index == j => (r.value.distance_to(&a), r.value.log_frobenius()),
            _ => (m.distance(&a), m.frobenius().ln()),
        };
        max_distance = max_distance.max(dist);
        sum += frob;
    }
    let prec = hp::precision_for(n, sum * (1.0 + 1e-12) + 1e-9, 32);
    let mut p = BlockMat2::identity(prec);
    for (j, m) in plan.matrices.iter().enumerate() {
        match &plan.refined {
            Some(r) if r.index == j => p.push_block(&BlockMat2::from_hp(&r.value, prec)),
            _ => p.push(m),
        }
    }
    let log_norm = p.log_norm_upper().max(0.0);
    let distance_ok = max_distance < plan.eps && n == plan.n;
    let growth_ok = log_norm < plan.eps * plan.n as f64;
    SegmentReport {
        n: plan.n,
        eps: plan.eps,
        max_distance,
        log_norm,
        distance_ok,
        growth_ok,
        pass: distance_ok && growth_ok,
    }
}

/// Largest number of steps needed over all `32×32` direction pairs from the sample points.
pub fn sweep_requirement(co: &Cocycle, points: &[BasePoint], eps: f64, m_cap: usize) -> Option<usize> {
    let dirs: Vec<f64> = (0..SWEEP_DIRECTIONS).map(|i| i as f64 * PI / SWEEP_DIRECTIONS as f64).collect();
    let per_point: Option<Vec<usize>> = points
        .par_iter()
        .map(|x| {
            let track = Track::new(co, x, m_cap, eps);
            let mut worst = 0;
            for &v in &dirs {
                for &w in &dirs {
                    worst = worst.max(track.min_steps(v, w, m_cap)?);
                }
            }
            Some(worst)
        })
        .collect();
    per_point.map(|v| v.into_iter().max().unwrap_or(0))
}

/// Largest `m ≤ cap` with `f^j(W)`, `0 ≤ j < m`, pairwise disjoint.
fn disjoint_length(co: &Cocycle, cell: &Cell, cap: usize) -> Result<usize> {
    let base = co.base();
    let rot = base
        .rotation()
        .ok_or_else(|| LabError::Unsupported("steering windows need a circle-coded base".into()))?;
    let arcs = base.arcs(cell)?;
    let mut seen: Vec<crate::base::Arc> = Vec::new();
    for j in 0..cap {
        let t = rot.translate_arcs(arcs, j as i64);
        if rot.arcs_overlap(&seen, &t) {
            return Ok(j);
        }
        seen = rot.union_arcs(&seen, &t);
    }
    Ok(cap)
}

/// A window `W` and block length `m` with disjoint `f^j(W)`, `j < m`, certified by a steering sweep.
///
/// Single points are scanned first; candidate windows are the longest scan intervals whose
/// requirement fits below their own disjointness limit, tried longest first.
pub fn choose_steering_window(co: &Cocycle, eps: f64) -> Result<SteeringWindow> {
    let base = co.base();
    let rot = base
        .rotation()
        .ok_or_else(|| LabError::Unsupported("steering windows need a circle-coded base".into()))?;
    let m_cap = 10 * (1.0 / eps).ceil() as usize;
    let scan = base.grid().min(1024);
    let req: Vec<usize> = (0..scan)
        .map(|i| {
            let p = base.point(i as f64 / scan as f64);
            sweep_requirement(co, &[p], eps, m_cap).unwrap_or(usize::MAX)
        })
        .collect();
    // Largest m with ‖jα‖ > length for 1 ≤ j < m.
    let limit_for = |len: f64| -> usize {
        (1..m_cap).find(|&j| crate::base::circle_distance(rot.advance(0.0, j as i64), 0.0) <= len).unwrap_or(m_cap)
    };
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for i in 0..scan {
        let mut worst = 0;
        let mut best_len = 0;
        for len in 1..scan / 4 {
            worst = worst.max(req[(i + len - 1) % scan]);
            if worst == usize::MAX || worst > m_cap {
                break;
            }
            if worst <= limit_for(len as f64 / scan as f64) {
                best_len = len;
            }
        }
        if best_len > 0 {
            candidates.push((best_len, i, worst));
        }
    }
    candidates.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let grid = base.grid_points();
    let unit = crate::base::DYADIC_ONE as f64 / scan as f64;
    for (tried, &(len, i, _)) in candidates.iter().take(WINDOW_CANDIDATES).enumerate() {
        let lo = QNum::dyadic((i as f64 * unit).round() as i128);
        let hi = QNum::dyadic(((i + len) as f64 * unit).round() as i128);
        let mut arcs = rot.normalize_interval(lo, hi);
        rot.sort_arcs(&mut arcs);
        let cell = Cell::from_arcs(arcs);
        let limit = disjoint_length(co, &cell, m_cap)?;
        if limit == 0 {
            continue;
        }
        let points: Vec<BasePoint> = grid.iter().filter(|p| base.contains(&cell, p)).copied().collect();
        let Some(m) = sweep_requirement(co, &points, eps, limit) else {
            continue;
        };
        let covering_time = base.covering_time(&cell)?;
        return Ok(SteeringWindow {
            cell,
            m: m.max(1),
            center: rot.q_position(lo) + 0.5 * len as f64 / scan as f64,
            radius: 0.5 * len as f64 / scan as f64,
            covering_time,
            sample_points: points.len(),
            candidates_tried: tried + 1,
        });
    }
    Err(LabError::SearchFailed(format!(
        "no window among {} candidates with m ≤ {m_cap}",
        candidates.len().min(WINDOW_CANDIDATES)
    )))
}

/// Outcome of planning and verifying one anchor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchorOutcome {
    pub x: f64,
    pub branch: String,
    pub report: Option<SegmentReport>,
    pub error: Option<String>,
}

impl AnchorOutcome {
    pub fn pass(&self) -> bool {
        self.report.is_some_and(|r| r.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanBatch {
    pub eps: f64,
    pub n: usize,
    pub c: f64,
    pub window: SteeringWindow,
    pub outcomes: Vec<AnchorOutcome>,
}

impl PlanBatch {
    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.pass()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,x,branch,max_distance,log_norm_over_n,pass,error\n");
        for (i, o) in self.outcomes.iter().enumerate() {
            let (d, g) = o.report.map_or((f64::NAN, f64::NAN), |r| (r.max_distance, r.log_norm / r.n as f64));
            out.push_str(&format!("{i},{},{},{d},{g},{},{}\n", o.x, o.branch, o.pass(), o.error.as_deref().unwrap_or("")));
        }
        out
    }
}

/// Window, `N` and a verified plan for each anchor, with `c = log(sup‖A‖ + eps)`.
pub fn plan_batch(co: &Cocycle, eps: f64, anchors: &[f64]) -> Result<(PlanBatch, Vec<Option<SegmentPlan>>)> {
    let window = choose_steering_window(co, eps)?;
    let c = (co.sup_norm() + eps).ln() + 1e-9;
    let n = choose_n(co, eps, c, window.covering_time);
    let results: Vec<(AnchorOutcome, Option<SegmentPlan>)> = anchors
        .par_iter()
        .map(|&x| {
            let p = co.base().point(x);
            match plan_segment(co, &p, eps, n, &window.cell, window.covering_time, window.m) {
                Ok(plan) => {
                    let report = verify_segment(co, &plan);
                    let branch = match plan.branch {
                        Branch::Steered { .. } => "steered",
                        Branch::EarlyExit => "early_exit",
                    };
                    (AnchorOutcome { x, branch: branch.into(), report: Some(report), error: None }, Some(plan))
                }
                Err(e) => (AnchorOutcome { x, branch: "failed".into(), report: None, error: Some(e.to_string()) }, None),
            }
        })
        .collect();
    let (outcomes, plans) = results.into_iter().unzip();
    Ok((PlanBatch { eps, n, c, window, outcomes }, plans))
}

impl SegmentPlan {
    /// Header lines then one factor per line as hexadecimal floats.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "x {} {} {} {}\n",
            hp::format_hex_f64(self.x.anchor[0]),
            hp::format_hex_f64(self.x.anchor[1]),
            hp::format_hex_f64(self.x.anchor[2]),
            self.x.k
        ));
        out.push_str(&format!("N {}\n", self.n));
        out.push_str(&format!("eps {}\n", hp::format_hex_f64(self.eps)));
        match &self.branch {
            Branch::Steered { j1, block } => out.push_str(&format!("branch steered {j1} {}\n", block.m)),
            Branch::EarlyExit => out.push_str("branch early_exit\n"),
        }
        out.push_str(&format!("log_norm {}\n", hp::format_hex_f64(self.log_norm)));
        for (j, m) in self.matrices.iter().enumerate() {
            let line = match &self.refined {
                Some(r) if r.index == j => r.value.entries().iter().map(hp::format_hex_float).collect::<Vec<_>>().join(" "),
                _ => m.entries().iter().map(|v| hp::format_hex_f64(*v)).collect::<Vec<_>>().join(" "),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    /// Inverse of [`SegmentPlan::to_text`]; the steering angles of a parsed block are not stored and come back empty.
    pub fn from_text(text: &str) -> Result<SegmentPlan> {
        let lines: Vec<&str> = text.lines().collect();
        let err = |line: usize, message: &str| LabError::Parse { line: line + 1, message: message.to_string() };
        let field = |i: usize, key: &str| -> Result<Vec<&str>> {
            let toks: Vec<&str> = lines.get(i).ok_or_else(|| err(i, "missing header"))?.split_whitespace().collect();
            if toks.first() != Some(&key) {
                return Err(err(i, &format!("expected `{key}`")));
            }
            Ok(toks[1..].to_vec())
        };
        let xs = field(0, "x")?;
        if xs.len() != 4 {
            return Err(err(0, "expected three coordinates and an index"));
        }
        let anchor = [hp::parse_hex_f64(xs[0])?, hp::parse_hex_f64(xs[1])?, hp::parse_hex_f64(xs[2])?];
        let k = xs[3].parse::<i64>().map_err(|e| err(0, &e.to_string()))?;
        let n = field(1, "N")?.first().ok_or_else(|| err(1, "missing N"))?.parse::<usize>().map_err(|e| err(1, &e.to_string()))?;
        let eps = hp::parse_hex_f64(field(2, "eps")?.first().ok_or_else(|| err(2, "missing eps"))?)?;
        let br = field(3, "branch")?;
        let log_norm = hp::parse_hex_f64(field(4, "log_norm")?.first().ok_or_else(|| err(4, "missing value"))?)?;
        let mut matrices = Vec::with_capacity(n);
        let mut refined = None;
        for (i, line) in lines.iter().enumerate().skip(5) {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            if toks.len() != 4 {
                return Err(err(i, "expected four entries"));
            }
            let wide = toks.iter().map(|t| hp::hex_significant_bits(t)).collect::<Result<Vec<_>>>()?;
            if wide.iter().any(|b| *b > 53) {
                let prec = wide.iter().copied().max().unwrap_or(64).max(64);
                let e = [
                    hp::parse_hex_float(toks[0], prec)?,
                    hp::parse_hex_float(toks[1], prec)?,
                    hp::parse_hex_float(toks[2], prec)?,
                    hp::parse_hex_float(toks[3], prec)?,
                ];
                let value = HpMat2::from_entries(e);
                let [a, b, c, d] = value.to_f64_entries();
                refined = Some(RefinedFactor { index: matrices.len(), value });
                matrices.push(Mat2::settle(a, b, c, d));
            } else {
                let v = toks.iter().map(|t| hp::parse_hex_f64(t)).collect::<Result<Vec<_>>>()?;
                matrices.push(Mat2::new(v[0], v[1], v[2], v[3]).map_err(|e| err(i, &e.to_string()))?);
            }
        }
        if matrices.len() != n {
            return Err(err(lines.len(), "factor count does not match N"));
        }
        let x = BasePoint { anchor, k };
        let branch = match br.as_slice() {
            ["early_exit"] => Branch::EarlyExit,
            ["steered", j1, m] => {
                let j1 = j1.parse::<usize>().map_err(|e| err(3, &e.to_string()))?;
                let m = m.parse::<usize>().map_err(|e| err(3, &e.to_string()))?;
                if j1 + m > n {
                    return Err(err(3, "block outside the segment"));
                }
                Branch::Steered {
                    j1,
                    block: SteeringBlock {
                        anchor: BasePoint { anchor, k: k + j1 as i64 },
                        m,
                        matrices: matrices[j1..j1 + m].to_vec(),
                        angles: Vec::new(),
                        eps,
                        error: 0.0,
                    },
                }
            }
            _ => return Err(err(3, "unknown branch")),
        };
        Ok(SegmentPlan { x, n, eps, matrices, refined, branch, log_norm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseSystem;
    use crate::cocycle::Generator;

    #[test]
    fn identity_steering_length() {
        let co = Cocycle::new(BaseSystem::golden().with_grid(16), Generator::Constant(Mat2::IDENTITY)).unwrap();
        let x = co.base().point(0.1);
        let block = steer_direction(&co, &x, [1.0, 0.0], [0.0, 1.0], 0.2, 50).unwrap();
        let cap = 2.0 * 0.1f64.asin();
        assert_eq!(block.m, ((PI / 2.0) / cap).ceil() as usize);
        assert!(block.error <= ANGLE_TOLERANCE);
        let empty = steer_direction(&co, &x, [1.0, 1.0], [2.0, 2.0], 0.2, 50).unwrap();
        assert_eq!(empty.m, 0);
        assert!(matches!(
            steer_direction(&co, &x, [1.0, 0.0], [0.0, 1.0], 0.2, 3),
            Err(LabError::BudgetExhausted { .. })
        ));
    }

    #[test]
    fn diagonal_profile() {
        let co = Cocycle::new(BaseSystem::golden().with_grid(16), Generator::Constant(Mat2::diag(2.0))).unwrap();
        let x = co.base().point(0.0);
        let p = balance_profile(&co, &x, 10, balance_constant(&co, 0.1)).unwrap();
        for j in 0..=10 {
            assert!((p.delta(j) - 4f64.powi(j as i32 - 5)).abs() < 1e-12 * 4f64.powi(j as i32 - 5));
        }
        assert_eq!(p.j0, 5);
    }

    #[test]
    fn choose_n_formula() {
        let co = Cocycle::new(BaseSystem::golden().with_grid(16), Generator::Constant(Mat2::diag(3.0))).unwrap();
        let n = choose_n(&co, 0.1, 1.2, 5);
        let need = 21.0 * (3.1f64 + 1e-9).ln() + 0.5 * 2f64.ln();
        assert_eq!(n, (need.max(1.2) / 0.1).ceil() as usize);
        assert!(choose_n(&co, 0.1, 1.2, 6) >= n);
    }
}
