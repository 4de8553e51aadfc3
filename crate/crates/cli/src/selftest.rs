use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use cocycle_lab::base::BaseSystem;
use cocycle_lab::cocycle::{Cocycle, Generator};
use cocycle_lab::scenarios::{winding_number, DirectionField};
use cocycle_lab::sl2::{self, Mat2};
use cocycle_lab::towers::{build_castle, decompose_height, frobenius_threshold};

const SEED: u64 = 7;
const MATRICES: usize = 2000;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub pass: bool,
    pub checks: Vec<Check>,
}

fn check(name: &str, result: Result<String, String>) -> Check {
    match result {
        Ok(detail) => Check { name: name.into(), pass: true, detail },
        Err(detail) => Check { name: name.into(), pass: false, detail },
    }
}

fn random_matrix(rng: &mut ChaCha8Rng) -> Mat2 {
    let t = rng.random_range(-3.0..3.0f64);
    sl2::rotation(rng.random_range(0.0..TAU)) * Mat2::diag(t.exp()) * sl2::rotation(rng.random_range(0.0..TAU))
}

fn norm_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for _ in 0..MATRICES {
        let m = random_matrix(&mut rng);
        let [a, b, c, d] = m.entries();
        let (p, q, r) = (a * a + c * c, a * b + c * d, b * b + d * d);
        let top = 0.5 * (p + r) + (0.25 * (p - r) * (p - r) + q * q).sqrt();
        let rel = (sl2::operator_norm(&m) - top.sqrt()).abs() / top.sqrt();
        worst = worst.max(rel);
    }
    if worst < 1e-10 {
        Ok(format!("worst relative error {worst:e}"))
    } else {
        Err(format!("relative error {worst:e}"))
    }
}

fn axes_realize_norm() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for _ in 0..MATRICES {
        let m = random_matrix(&mut rng);
        let Ok(axes) = sl2::singular_axes(&m) else { continue };
        let image = m.apply(axes.u);
        let stretch = image[0].hypot(image[1]);
        if (stretch - axes.norm).abs() > 1e-9 * axes.norm {
            return Err(format!("|A u| = {stretch} but |A| = {}", axes.norm));
        }
        let dot = axes.u[0] * axes.s[0] + axes.u[1] * axes.s[1];
        if dot.abs() > 1e-12 {
            return Err(format!("axes not orthogonal: {dot:e}"));
        }
    }
    Ok(format!("{MATRICES} matrices"))
}

fn exp_log_roundtrip() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let mut worst = 0.0f64;
    for _ in 0..MATRICES {
        let v = sl2::TangentVec { p: rng.random_range(-1.0..1.0), q: rng.random_range(-1.0..1.0), r: rng.random_range(-1.0..1.0) };
        let m = sl2::exp_map(&v);
        let back = sl2::log_map(&m).map_err(|e| e.to_string())?;
        worst = worst.max(sl2::exp_map(&back).distance(&m));
    }
    if worst < 1e-9 {
        Ok(format!("worst distance {worst:e}"))
    } else {
        Err(format!("distance {worst:e}"))
    }
}

fn representable_threshold(height: usize) -> usize {
    let limit = 3 * (height + 1) * (height + 1);
    let mut reach = vec![false; limit + 1];
    reach[0] = true;
    for n in 1..=limit {
        reach[n] = (n >= height && reach[n - height]) || (n > height && reach[n - height - 1]);
    }
    (0..=limit).rev().find(|&n| !reach[n]).map_or(0, |n| n + 1)
}

fn frobenius_against_dp() -> Result<String, String> {
    for height in 2..=30 {
        let want = representable_threshold(height);
        if frobenius_threshold(height) != want {
            return Err(format!("height {height}: {} against {want}", frobenius_threshold(height)));
        }
        for n in want..want + 3 * height {
            let (short, tall) = decompose_height(n, height).map_err(|e| e.to_string())?;
            if short * height + tall * (height + 1) != n {
                return Err(format!("{n} = {short}·{height} + {tall}·{}", height + 1));
            }
        }
    }
    Ok("heights 2..=30".into())
}

fn castles_exact() -> Result<String, String> {
    for (name, sys) in [("golden", BaseSystem::golden()), ("silver", BaseSystem::silver())] {
        for height in [3, 7] {
            let castle = build_castle(&sys, height).map_err(|e| e.to_string())?;
            let report = castle.check(&sys).map_err(|e| e.to_string())?;
            if !report.pass() {
                return Err(format!("{name} N={height}: {report:?}"));
            }
        }
    }
    Ok("golden and silver, N in {3, 7}".into())
}

fn growth_dichotomy_examples() -> Result<String, String> {
    let base = BaseSystem::golden().with_grid(256);
    let rot = Cocycle::new(base.clone(), Generator::Rotation { offset: 0.2, winding: 1 }).map_err(|e| e.to_string())?;
    let hyp = Cocycle::new(base, Generator::Constant(Mat2::diag(2.0))).map_err(|e| e.to_string())?;
    if !rot.uniform_growth_test(0.1, 500).0 {
        return Err("rotation cocycle failed the growth test".into());
    }
    if hyp.uniform_growth_test(0.5, 500).0 {
        return Err("hyperbolic constant passed the growth test".into());
    }
    Ok("rotation passes, diag(2, 1/2) fails".into())
}

fn winding_examples() -> Result<String, String> {
    for degree in -2i64..=2 {
        let field = DirectionField::from_fn(256, |t| (degree as f64 * t + 0.4).rem_euclid(PI));
        let got = winding_number(&field).map_err(|e| e.to_string())?;
        if got != degree {
            return Err(format!("expected {degree}, got {got}"));
        }
    }
    Ok("degrees -2..=2".into())
}

pub fn run_all() -> SelftestReport {
    let checks = vec![
        check("operator norm matches the Gram eigenvalue", norm_oracle()),
        check("singular axes realize the norm", axes_realize_norm()),
        check("exp and log are inverse", exp_log_roundtrip()),
        check("frobenius threshold and decomposition", frobenius_against_dp()),
        check("castles are exact", castles_exact()),
        check("growth test separates rotations from hyperbolic constants", growth_dichotomy_examples()),
        check("winding numbers of model fields", winding_examples()),
    ];
    SelftestReport { pass: checks.iter().all(|c| c.pass), checks }
}
