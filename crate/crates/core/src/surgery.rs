//! A nearby cocycle with uniformly subexponential growth, built tower by tower over a castle.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::base::{Arc, BasePoint, Cell, QNum, RotationNumber};
use crate::cocycle::{max_neighbor_jump, Cocycle, UhOptions, UhOutcome, LIPSCHITZ_SAFETY};
use crate::error::{LabError, Result};
use crate::perturb::{self, SteeringWindow};
use crate::sl2::{exp_map, log_map, Mat2, ScaledMat2};
use crate::towers::{self, circle_rotation, Castle, FreqBound};

/// Exponent estimates at or below this are treated as already subexponential.
pub const EXPONENT_FLOOR: f64 = 1e-3;
pub const EXPONENT_HORIZON: usize = 100_000;
const COVER_SLACK: f64 = 1.25;
const REPRESENTATIVE_TRIES: usize = 8;
const RESCALE_STRIDE: usize = 32;

#[derive(Clone, Debug, Serialize)]
pub struct Piece {
    pub height: usize,
    pub cover: usize,
    #[serde(skip)]
    pub cell: Cell,
    pub representative: BasePoint,
    pub measure: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SurgeryConfig {
    pub eps: f64,
    pub c: f64,
    pub n: usize,
    pub window: SteeringWindow,
    pub m1: usize,
    pub delta: f64,
    #[serde(skip)]
    pub castle: Castle,
    #[serde(skip)]
    pub cover: Vec<Cell>,
    pub boundary: Vec<f64>,
    pub freq: FreqBound,
    pub pieces: Vec<Piece>,
    pub exponent_estimate: f64,
}

/// Largest `delta` (halving from 1/2) with `‖A(x) − A(y)‖ < eps` whenever `d(x, y) < delta`, certified on grid pairs.
///
/// The base is a rotation, so the condition along iterates `f^j`, `j ≤ N`, is the same as at `j = 0`.
pub fn continuity_modulus(co: &Cocycle, eps: f64, n: usize) -> Result<f64> {
    let _ = n;
    let base = co.base();
    circle_rotation(base, "continuity modulus")?;
    let g = base.grid();
    let h = base.grid_spacing();
    let values: Vec<Mat2> = base.grid_points().iter().map(|p| co.value(p)).collect();
    let jumps: Vec<f64> = (0..g).map(|i| values[i].distance(&values[(i + 1) % g])).collect();
    let margin = LIPSCHITZ_SAFETY * jumps.iter().fold(0.0f64, |a, b| a.max(*b));
    // Largest offset `s` with every pair up to `s` apart differing by less than `eps − margin`.
    if values.iter().all(|v| *v == values[0]) {
        return Ok(0.5);
    }
    let mut reach = 0;
    while reach < g / 2 {
        let s = reach + 1;
        let worst = (0..g).map(|i| values[i].distance(&values[(i + s) % g])).fold(0.0f64, f64::max);
        if !(worst + margin < eps) {
            break;
        }
        reach = s;
    }
    let mut delta = 0.5;
    while delta >= 4.0 * h {
        let s_max = (delta / h).ceil() as usize + 1;
        if s_max <= reach || reach == g / 2 {
            return Ok(delta);
        }
        delta *= 0.5;
    }
    Err(LabError::ResolutionExceeded { delta })
}

/// Half-open arcs of diameter below `delta` partitioning the circle, with boundaries off short orbits.
fn cover_cells(co: &Cocycle, rot: &RotationNumber, delta: f64) -> Result<Vec<Cell>> {
    let base = co.base();
    let k = ((COVER_SLACK / delta).ceil() as usize).max(3);
    let mut covered: Vec<Arc> = Vec::new();
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let center = base.point((i as f64 + 0.5) / k as f64);
        let w = base.small_boundary_cell(&center, 0.6 / (0.9 * k as f64))?;
        if base.diameter(&w) >= delta {
            return Err(LabError::ResolutionExceeded { delta });
        }
        let u = rot.subtract_arcs(w.arcs(), &covered);
        covered = rot.union_arcs(&covered, w.arcs());
        out.push(Cell::from_arcs(u));
    }
    let full = [Arc { lo: QNum::ZERO, hi: QNum::ONE }];
    if !rot.subtract_arcs(&full, &covered).is_empty() {
        return Err(LabError::ResolutionExceeded { delta });
    }
    Ok(out)
}

fn component_midpoints(rot: &RotationNumber, cell: &Cell) -> Vec<f64> {
    let mut comps: Vec<(f64, f64)> = rot
        .arc_components(cell.arcs())
        .into_iter()
        .map(|(lo, hi)| {
            let len = rot.q_value(hi.sub(lo));
            ((rot.q_value(lo) + 0.5 * len).rem_euclid(1.0), len)
        })
        .collect();
    comps.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
    comps.into_iter().map(|(mid, _)| mid).collect()
}

/// All constants and sets of the construction, in dependency order.
pub fn build_config(co: &Cocycle, eps: f64) -> Result<SurgeryConfig> {
    if !(eps > 0.0) {
        return Err(LabError::Invalid("surgery needs eps > 0".into()));
    }
    let base = co.base();
    let rot = circle_rotation(base, "surgery")?;
    if let UhOutcome::Certificate(cert) = co.uh_certify(&UhOptions::default()) {
        return Err(LabError::NotApplicable(format!(
            "the cocycle is uniformly hyperbolic (cone certificate with expansion {})",
            cert.expansion
        )));
    }
    let exponent = co.lyapunov_estimate(&base.point(0.0), EXPONENT_HORIZON);
    if exponent <= EXPONENT_FLOOR {
        return Err(LabError::NotApplicable(format!("exponent estimate {exponent} is at most {EXPONENT_FLOOR}")));
    }
    let c = (co.sup_norm() + eps).ln() + 1e-9;
    let window = perturb::choose_steering_window(co, eps)?;
    let m1 = window.covering_time;
    let n = perturb::choose_n(co, eps, c, m1);
    let castle = towers::build_castle(base, n)?;
    let delta = continuity_modulus(co, eps, n)?;
    let cover = cover_cells(co, rot, delta)?;
    let mut pieces = Vec::new();
    for height in [n, n + 1] {
        let bases: Vec<Arc> = castle
            .towers
            .iter()
            .filter(|t| t.height == height)
            .flat_map(|t| t.base.arcs().iter().copied())
            .collect();
        let mut bases = bases;
        rot.sort_arcs(&mut bases);
        let layer = rot.union_arcs(&bases, &[]);
        for (i, u) in cover.iter().enumerate() {
            let arcs = rot.intersect_arcs(&layer, u.arcs());
            if arcs.is_empty() {
                continue;
            }
            let cell = Cell::from_arcs(arcs);
            let mid = component_midpoints(rot, &cell)[0];
            pieces.push(Piece {
                height,
                cover: i,
                measure: base.measure(&cell),
                representative: base.point(mid),
                cell,
            });
        }
    }
    let mut boundary: Vec<f64> = pieces
        .iter()
        .flat_map(|p| rot.arcs_boundary(p.cell.arcs()).into_iter().map(|q| rot.q_position(q)))
        .collect();
    boundary.sort_by(f64::total_cmp);
    boundary.dedup();
    let freq = towers::visit_freq_bound(base, &boundary, eps / (n + 1) as f64)?;
    Ok(SurgeryConfig {
        eps,
        c,
        n,
        window,
        m1,
        delta,
        castle,
        cover,
        boundary,
        freq,
        pieces,
        exponent_estimate: exponent,
    })
}

/// Perturbed factors along one tower column.
#[derive(Clone, Debug, Serialize)]
pub struct ColumnTable {
    pub height: usize,
    pub cover: usize,
    pub representative: BasePoint,
    pub early_exit: bool,
    pub plan_log_norm: f64,
    pub column_log_norm: f64,
    #[serde(skip)]
    pub matrices: Vec<Mat2>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlendReport {
    pub sup_distance: f64,
    pub distance_bound: f64,
    pub interior_points: usize,
    pub interior_exact: bool,
    pub max_grid_jump: f64,
    pub jump_bound: f64,
    pub continuous: bool,
}

#[derive(Clone, Debug)]
pub struct PerturbedCocycle {
    original: Cocycle,
    castle: Castle,
    rot: RotationNumber,
    tables: Vec<ColumnTable>,
    piece_index: Vec<(Arc, usize)>,
    regions: Vec<Arc>,
    spacing: f64,
    pub c_prime: f64,
    pub report: BlendReport,
}

#[derive(Clone, Copy, Debug)]
struct Column {
    height: usize,
    piece: Option<usize>,
    bump: f64,
}

fn smooth_step(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn tagged_index(rot: &RotationNumber, sets: impl Iterator<Item = (usize, Vec<Arc>)>) -> Vec<(Arc, usize)> {
    let mut index: Vec<(Arc, usize)> = sets.flat_map(|(k, arcs)| arcs.into_iter().map(move |a| (a, k))).collect();
    index.sort_by(|a, b| rot.cmp_q(a.0.lo, b.0.lo));
    index
}

fn lookup<T: Copy>(rot: &RotationNumber, index: &[(Arc, T)], x: QNum) -> Option<(Arc, T)> {
    let i = index.partition_point(|(a, _)| rot.cmp_q(a.lo, x) != Ordering::Greater);
    if i == 0 {
        return None;
    }
    let (a, t) = index[i - 1];
    (rot.cmp_q(x, a.hi) == Ordering::Less).then_some((a, t))
}

fn plan_column(co: &Cocycle, cfg: &SurgeryConfig, piece: &Piece) -> Result<ColumnTable> {
    let base = co.base();
    let rot = circle_rotation(base, "surgery")?;
    let mut candidates = vec![piece.representative];
    candidates.extend(component_midpoints(rot, &piece.cell).into_iter().skip(1).map(|m| base.point(m)));
    let mut last = LabError::CertificationFailed("no representative point".into());
    for x in candidates.into_iter().take(REPRESENTATIVE_TRIES) {
        let plan = match perturb::plan_segment(co, &x, cfg.eps, cfg.n, &cfg.window.cell, cfg.m1, cfg.window.m) {
            Ok(p) => p,
            Err(e) => {
                last = e;
                continue;
            }
        };
        if !perturb::verify_segment(co, &plan).pass {
            last = LabError::CertificationFailed("segment plan failed verification".into());
            continue;
        }
        let mut matrices = plan.matrices.clone();
        if piece.height == cfg.n + 1 {
            matrices.push(co.value(&base.step(&x, cfg.n as i64)));
        }
        let mut acc = ScaledMat2::identity();
        for (j, m) in matrices.iter().enumerate() {
            acc.push(m);
            if (j + 1) % RESCALE_STRIDE == 0 {
                acc.rescale();
            }
        }
        let column_log_norm = acc.log_norm().max(0.0);
        if !(column_log_norm < 2.0 * cfg.eps * piece.height as f64) {
            last = LabError::CertificationFailed(format!("column product log norm {column_log_norm} is too large"));
            continue;
        }
        return Ok(ColumnTable {
            height: piece.height,
            cover: piece.cover,
            representative: x,
            early_exit: matches!(plan.branch, perturb::Branch::EarlyExit),
            plan_log_norm: plan.log_norm,
            column_log_norm,
            matrices,
        });
    }
    Err(last)
}

/// Plans every column, writes the table on the regions and blends it continuously into `A`.
pub fn assemble_perturbation(co: &Cocycle, cfg: &SurgeryConfig) -> Result<PerturbedCocycle> {
    let base = co.base();
    let rot = circle_rotation(base, "surgery")?.clone();
    let tables: Vec<ColumnTable> =
        cfg.pieces.par_iter().map(|p| plan_column(co, cfg, p)).collect::<Vec<_>>().into_iter().collect::<Result<_>>()?;
    let piece_index = tagged_index(&rot, cfg.pieces.iter().enumerate().map(|(k, p)| (k, p.cell.arcs().to_vec())));
    let mut regions = Vec::new();
    for p in &cfg.pieces {
        regions.extend(rot.subtract_arcs(p.cell.arcs(), cfg.freq.v.arcs()));
    }
    rot.sort_arcs(&mut regions);
    let mut pc = PerturbedCocycle {
        original: co.clone(),
        castle: cfg.castle.clone(),
        rot,
        tables,
        piece_index,
        regions,
        spacing: base.grid_spacing(),
        c_prime: cfg.c,
        report: BlendReport {
            sup_distance: 0.0,
            distance_bound: cfg.c.exp() * (cfg.c.exp() + 1.0) * cfg.eps,
            interior_points: 0,
            interior_exact: true,
            max_grid_jump: 0.0,
            jump_bound: 0.0,
            continuous: true,
        },
    };
    let grid = base.grid_points();
    let samples: Vec<(Mat2, Mat2, Option<Mat2>)> = grid
        .par_iter()
        .map(|p| {
            let (col, floor) = pc.column_at(p)?;
            let a = co.value(p);
            let target = col.piece.map(|k| pc.tables[k].matrices[floor]);
            Ok((a, pc.blend(&a, target.as_ref(), col.bump)?, if col.bump >= 1.0 { target } else { None }))
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let g = samples.len();
    let mut report = pc.report;
    for (i, (a, blended, interior)) in samples.iter().enumerate() {
        report.sup_distance = report.sup_distance.max(blended.distance(a));
        if let Some(t) = interior {
            report.interior_points += 1;
            report.interior_exact &= t == blended;
        }
        let (a2, b2, _) = &samples[(i + 1) % g];
        report.max_grid_jump = report.max_grid_jump.max(blended.distance(b2));
        report.jump_bound = report.jump_bound.max(a.distance(a2));
    }
    report.jump_bound = LIPSCHITZ_SAFETY * report.jump_bound + 2.0 * report.sup_distance;
    report.continuous = report.max_grid_jump <= report.jump_bound;
    pc.report = report;
    pc.c_prime = cfg.c.max((co.sup_norm() + report.sup_distance).ln());
    if !(report.sup_distance < report.distance_bound) {
        return Err(LabError::BlendBoundViolated { measured: report.sup_distance, bound: report.distance_bound });
    }
    if !report.interior_exact || !report.continuous {
        return Err(LabError::CertificationFailed(format!("blended field invariants failed: {report:?}")));
    }
    Ok(pc)
}

#[derive(Clone, Copy, Debug)]
struct OrbitSummary {
    log_norm: f64,
    original_log_norm: f64,
    structural: f64,
    p: usize,
    q: usize,
    blocks: usize,
    bad_blocks: usize,
}

impl PerturbedCocycle {
    pub fn original(&self) -> &Cocycle {
        &self.original
    }

    pub fn tables(&self) -> &[ColumnTable] {
        &self.tables
    }

    fn column(&self, b: QNum) -> Result<Column> {
        let t = self.castle.base_tower(&self.rot, b).ok_or_else(|| LabError::DecompositionFailed {
            step: 0,
            reason: "column base outside the castle base".into(),
        })?;
        let height = self.castle.towers[t].height;
        let piece = lookup(&self.rot, &self.piece_index, b).map(|(_, k)| k);
        let bump = match self.rot.locate_arc(&self.regions, b).map(|i| self.regions[i]) {
            Some(arc) => {
                let d = self.rot.q_value(b.sub(arc.lo)).min(self.rot.q_value(arc.hi.sub(b)));
                smooth_step(d / self.spacing - 1.0)
            }
            None => 0.0,
        };
        Ok(Column { height, piece, bump })
    }

    fn column_at(&self, p: &BasePoint) -> Result<(Column, usize)> {
        let base = self.original.base();
        let (_, floor) = self.castle.locate(base, p)?;
        let b = self.rot.q_reduce(base.exact(p).shift(-(floor as i64)));
        Ok((self.column(b)?, floor))
    }

    fn blend(&self, a: &Mat2, target: Option<&Mat2>, bump: f64) -> Result<Mat2> {
        match target {
            Some(t) if bump >= 1.0 => Ok(*t),
            Some(t) if bump > 0.0 => {
                let xi = log_map(&(a.inverse() * *t))?;
                Ok(*a * exp_map(&xi.scale(bump)))
            }
            _ => Ok(*a),
        }
    }

    /// Value of the perturbed generator at a point.
    pub fn value(&self, p: &BasePoint) -> Result<Mat2> {
        let (col, floor) = self.column_at(p)?;
        let target = col.piece.map(|k| self.tables[k].matrices[floor]);
        self.blend(&self.original.value(p), target.as_ref(), col.bump)
    }

    /// Blending weight at a point.
    pub fn bump(&self, p: &BasePoint) -> Result<f64> {
        Ok(self.column_at(p)?.0.bump)
    }

    fn orbit(&self, x: &BasePoint, n: usize, eps: f64) -> Result<OrbitSummary> {
        let base = self.original.base();
        let (mut col, mut floor) = self.column_at(x)?;
        let mut starts: Vec<(usize, usize, bool)> = Vec::new();
        if floor == 0 {
            starts.push((0, col.height, col.bump >= 1.0));
        }
        let mut acc = ScaledMat2::identity();
        let mut orig = ScaledMat2::identity();
        for step in 0..n {
            let y = base.step(x, step as i64);
            if floor == col.height {
                col = self.column(self.rot.q_reduce(base.exact(&y)))?;
                floor = 0;
                starts.push((step, col.height, col.bump >= 1.0));
            }
            let a = self.original.value(&y);
            let target = col.piece.map(|k| self.tables[k].matrices[floor]);
            acc.push(&self.blend(&a, target.as_ref(), col.bump)?);
            orig.push(&a);
            if (step + 1) % RESCALE_STRIDE == 0 {
                acc.rescale();
                orig.rescale();
            }
            floor += 1;
        }
        acc.rescale();
        orig.rescale();
        let big_n = self.castle.n;
        let mut structural = 0.0;
        let mut blocks = 0;
        let mut bad_blocks = 0;
        let p = starts.first().map_or(n, |s| s.0);
        let mut end = p;
        for (k, &(start, height, good)) in starts.iter().enumerate() {
            if height != big_n && height != big_n + 1 {
                return Err(LabError::DecompositionFailed { step: start, reason: format!("block height {height}") });
            }
            if let Some(next) = starts.get(k + 1) {
                if next.0 - start != height {
                    return Err(LabError::DecompositionFailed { step: next.0, reason: "visits not spaced by the block height".into() });
                }
            }
            if start + height > n {
                break;
            }
            blocks += 1;
            end = start + height;
            if good {
                structural += 2.0 * eps * height as f64;
            } else {
                bad_blocks += 1;
                structural += self.c_prime * height as f64;
            }
        }
        let q = n - end;
        structural += self.c_prime * (p + q) as f64;
        Ok(OrbitSummary {
            log_norm: acc.log_norm().max(0.0),
            original_log_norm: orig.log_norm().max(0.0),
            structural,
            p,
            q,
            blocks,
            bad_blocks,
        })
    }

    /// Grid table: position, matrix entries and blending weight.
    pub fn to_csv(&self) -> Result<String> {
        let base = self.original.base();
        let rows: Vec<String> = base
            .grid_points()
            .par_iter()
            .map(|p| {
                let m = self.value(p)?.entries();
                let w = self.bump(p)?;
                Ok(format!("{},{},{},{},{},{}", base.position(p), m[0], m[1], m[2], m[3], w))
            })
            .collect::<Vec<Result<String>>>()
            .into_iter()
            .collect::<Result<_>>()?;
        let mut out = String::from("x,a,b,c,d,bump\n");
        for r in rows {
            out.push_str(&r);
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthCertificate {
    pub n: usize,
    pub grid: usize,
    pub max: f64,
    pub margin: f64,
    pub bound: f64,
    pub c: f64,
    pub c_prime: f64,
    pub direct_pass: bool,
    pub structural_max: f64,
    pub structural_pass: bool,
    pub dominated: bool,
    pub pass: bool,
    pub pre_max: f64,
    pub improved_fraction: f64,
    pub max_bad_blocks: usize,
    pub bad_block_limit: f64,
    pub p_max: usize,
    pub q_max: usize,
    pub block_histogram: BTreeMap<usize, usize>,
}

impl GrowthCertificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain record")
    }
}

/// `(1/n)·log‖A_n‖` before and after the surgery on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthCurves {
    pub n: usize,
    pub positions: Vec<f64>,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
}

impl GrowthCurves {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,before,after\n");
        for ((x, b), a) in self.positions.iter().zip(&self.before).zip(&self.after) {
            let _ = writeln!(out, "{x},{b},{a}");
        }
        out
    }
}

/// Direct and structural growth checks at horizon `n`.
pub fn verify_growth(pc: &PerturbedCocycle, cfg: &SurgeryConfig, n: usize) -> Result<(GrowthCertificate, GrowthCurves)> {
    let floor = (cfg.freq.n0 as f64).max((cfg.n + 1) as f64 / cfg.eps);
    if !(n as f64 > floor) {
        return Err(LabError::Invalid(format!("horizon {n} must exceed {floor}")));
    }
    let base = pc.original.base();
    let grid = base.grid_points();
    let rows: Vec<OrbitSummary> = grid
        .par_iter()
        .map(|x| pc.orbit(x, n, cfg.eps))
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<_>>()?;
    let nf = n as f64;
    let logs: Vec<f64> = rows.iter().map(|r| r.log_norm).collect();
    let after: Vec<f64> = logs.iter().map(|v| v / nf).collect();
    let before: Vec<f64> = rows.iter().map(|r| r.original_log_norm / nf).collect();
    let max = after.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
    let margin = LIPSCHITZ_SAFETY * max_neighbor_jump(&logs) / nf;
    let structural_max = rows.iter().fold(f64::NEG_INFINITY, |a, r| a.max(r.structural / nf));
    let dominated = rows.iter().all(|r| r.structural + 1e-9 * (1.0 + r.log_norm) >= r.log_norm);
    let bound = (3.0 * cfg.c + 2.0) * cfg.eps;
    let mut hist = BTreeMap::new();
    for r in &rows {
        *hist.entry(r.blocks).or_insert(0) += 1;
    }
    let improved = before.iter().zip(&after).filter(|(b, a)| a < b).count();
    let direct_pass = max + margin < bound;
    let structural_pass = structural_max < bound;
    let cert = GrowthCertificate {
        n,
        grid: grid.len(),
        max,
        margin,
        bound,
        c: cfg.c,
        c_prime: pc.c_prime,
        direct_pass,
        structural_max,
        structural_pass,
        dominated,
        pass: direct_pass && structural_pass && dominated,
        pre_max: before.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b)),
        improved_fraction: improved as f64 / grid.len() as f64,
        max_bad_blocks: rows.iter().map(|r| r.bad_blocks).max().unwrap_or(0),
        bad_block_limit: cfg.eps / (cfg.n + 1) as f64 * nf,
        p_max: rows.iter().map(|r| r.p).max().unwrap_or(0),
        q_max: rows.iter().map(|r| r.q).max().unwrap_or(0),
        block_histogram: hist,
    };
    let curves = GrowthCurves { n, positions: grid.iter().map(|p| base.position(p)).collect(), before, after };
    Ok((cert, curves))
}

/// Certificate horizon `⌈10·(N + 1)/eps⌉`, pushed past `n0` if needed.
pub fn certificate_horizon(cfg: &SurgeryConfig) -> usize {
    let n = (10.0 * (cfg.n + 1) as f64 / cfg.eps).ceil() as usize;
    n.max(cfg.freq.n0 + 1)
}

pub struct SurgeryRun {
    pub config: SurgeryConfig,
    pub perturbed: PerturbedCocycle,
    pub certificate: GrowthCertificate,
    pub curves: GrowthCurves,
}

/// The whole pipeline at the default certificate horizon.
pub fn run_surgery(co: &Cocycle, eps: f64) -> Result<SurgeryRun> {
    let config = build_config(co, eps)?;
    let perturbed = assemble_perturbation(co, &config)?;
    let (certificate, curves) = verify_growth(&perturbed, &config, certificate_horizon(&config))?;
    Ok(SurgeryRun { config, perturbed, certificate, curves })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseSystem;
    use crate::cocycle::Generator;

    #[test]
    fn rotation_cocycle_is_not_applicable() {
        let co = Cocycle::new(BaseSystem::golden(), Generator::Rotation { offset: 0.3, winding: 1 }).unwrap();
        assert!(matches!(build_config(&co, 0.1), Err(LabError::NotApplicable(_))));
    }

    #[test]
    fn constant_generator_has_full_modulus() {
        let co = Cocycle::new(BaseSystem::golden(), Generator::Constant(Mat2::diag(2.0))).unwrap();
        assert_eq!(continuity_modulus(&co, 0.1, 10).unwrap(), 0.5);
    }

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert_eq!(smooth_step(0.5), 0.5);
    }
}
