use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use cocycle_lab::cocycle::{UhOptions, UhOutcome};
use cocycle_lab::perturb::{plan_batch, steer_direction};
use cocycle_lab::scenarios::hopf_report;
use cocycle_lab::surgery::run_surgery;
use cocycle_lab::towers::{build_castle, visit_freq_bound};

use crate::config::ExperimentConfig;
use crate::selftest;
use crate::Command;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    fn from_pass(pass: bool) -> Status {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

pub type CmdResult = Result<Status, String>;

struct Artifacts<'a> {
    dir: &'a Path,
}

impl Artifacts<'_> {
    fn text(&self, name: &str, contents: &str) -> Result<(), String> {
        fs::create_dir_all(self.dir).map_err(|e| format!("{}: {e}", self.dir.display()))?;
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| format!("{}: {e}", path.display()))?;
        log::info!("wrote {}", path.display());
        Ok(())
    }

    fn json(&self, name: &str, value: &impl Serialize) -> Result<(), String> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
        text.push('\n');
        self.text(name, &text)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

pub fn run(command: Command, cfg: &ExperimentConfig, out: &Path) -> CmdResult {
    let art = Artifacts { dir: out };
    match command {
        Command::Exponent => exponent(cfg, &art),
        Command::GrowthTest => growth_test(cfg, &art),
        Command::UhCheck => uh_check(cfg, &art),
        Command::Steer => steer(cfg, &art),
        Command::PlanSegment => plan_segment(cfg, &art),
        Command::Castle => castle(cfg, &art),
        Command::FreqBound => freq_bound(cfg, &art),
        Command::Surgery => surgery(cfg, &art),
        Command::DemoHopf => demo_hopf(cfg, &art),
        Command::Selftest => {
            let report = selftest::run_all();
            art.json("selftest.json", &report)?;
            for check in &report.checks {
                println!("{} {}", if check.pass { "PASS" } else { "FAIL" }, check.name);
            }
            Ok(Status::from_pass(report.pass))
        }
    }
}

fn exponent(cfg: &ExperimentConfig, art: &Artifacts) -> CmdResult {
    let co = cfg.cocycle().map_err(err)?;
    let report = co.growth_report(cfg.n);
    art.text("exponent.csv", &report.to_csv())?;
    art.json(
        "exponent.json",
        &json!({
            "generator": co.generator().name(),
            "n": report.n,
            "grid": report.grid,
            "min": report.min,
            "max": report.max,
            "mean": report.mean,
            "argmax": report.argmax,
            "margin": report.margin,
        }),
    )?;
    println!("max (1/n)log|A_n| = {} over {} points", report.max, report.grid);
    Ok(Status::Pass)
}

fn growth_test(cfg: &ExperimentConfig, art: &Artifacts) -> CmdResult {
    let co = cfg.cocycle().map_err(err)?;
    let (pass, report) = co.uniform_growth_test(cfg.eps, cfg.n);
    art.text("growth_test.csv", &report.to_csv())?;
    art.json(
        "growth_test.json",
        &json!({
            "generator": co.generator().name(),
            "eps": cfg.eps,
            "n": report.n,
            "grid": report.grid,
            "max": report.max,
            "margin": report.margin,
            "pass": pass,
        }),
    )?;
    println!("growth test at eps={} n={}: {}", cfg.eps, report.n, if pass { "pass" } else { "fail" });
    Ok(Status::from_pass(pass))
}

fn uh_check(cfg: &ExperimentConfig, art: &Artifacts) -> CmdResult {
    let co = cfg.cocycle().map_err(err)?;
    let opts = UhOptions { n_max: cfg.uh_n_max, warmup: cfg.uh_warmup, ..UhOptions::default() };
    let outcome = co.uh_certify(&opts);
    art.json("uh_check.json", &outcome)?;
    let status = match &outcome {
        UhOutcome::Certificate(c) => {
            println!("uniformly hyperbolic: cone certificate at n={} with expansion {}", c.n, c.expansion);
            Status::Pass
        }
        UhOutcome::Witness(w) => {
            println!("not uniformly hyperbolic: log|A_{}({})| = {}", w.n, w.x, w.log_norm);
            Status::Fail
        }
        UhOutcome::Inconclusive { n_max } => {
            println!("inconclusive up to n={n_max}");
            Status::Fail
        }
    };
    Ok(status)
}

fn steer(cfg: &ExperimentConfig, art: &Artifacts) -> CmdResult {
    let co = cfg.cocycle().map_err(err)?;
    let x = co.base().point(cfg.x);
    let block = steer_direction(&co, &x, cfg.v, cfg.w, cfg.eps, cfg.m_max).map_err(err)?;
    art.json("steer.json", &block)?;
    println!("steered in {} steps, angular error {:e}", block.m, block.error);
    Ok(Status::Pass)
}

/// `count` anchors drawn uniformly from `[0, 1)` with a ChaCha8 stream.
pub fn random_anchors(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random::<f64>()).collect()
}

fn plan_segment(cfg: &ExperimentConfig, art: &Artifacts) -> CmdResult {
    let co = cfg.cocycle().map_err(err)?;
    let anchors = random_anchors(cfg.seed, cfg.anchors);
    let (batch, plans) = plan_batch(&co, cfg.eps, &anchors).map_err(err)?;
    art.text("plans.csv", &batch.to_csv())?;
    let passed = batch.passed();
    art.json(
        "plan_segment.json",
        &json!({
            "eps": batch.eps,
            "n": batch.n,
            "c": batch.c,
            "seed": cfg.seed,
            "window": batch.window,
            "anchors": anchors.len(),
            "passed": passed,
            "pass": passed == anchors.len(),
        }),
    )?;
    if let Some(plan) = plans.iter().flatten().next() {
        art.text("plan_0.txt", &plan.to_text())?;
    }
    println!("{passed}/{} anchors verified at N={}", anchors.len(), batch.n);
    Ok(Status::from_pass(passed == anchors.len()))
}

fn castle(cfg: &ExperimentConfig, art: &Artifacts) -> CmdResult {
    let sys = cfg.base_system().map_err(err)?;
    let castle = build_castle(&sys, cfg.height).map_err(err)?;
    let report = castle.check(&sys).map_err(err)?;
    let returns = castle.sampled_returns(&sys, cfg.samples).map_err(err)?;
    art.text("castle.csv", &castle.to_csv(&sys).map_err(err)?)?;
    let pass = report.pass() && returns.matched == returns.checked;
    art.json("castle.json", &json!({ "n": cfg.height, "check": report, "sampled_returns": returns, "pass": pass }))?;
    println!("castle N={}: {} towers, {}", cfg.height, report.towers, if pass { "pass" } else { "fail" });
    Ok(Status::from_pass(pass))
}

fn freq_bound(cfg: &ExperimentConfig, art: &Artifacts) -> CmdResult {
    let sys = cfg.base_system().map_err(err)?;
    let bound = visit_freq_bound(&sys, &cfg.points, cfg.eps).map_err(err)?;
    art.json("freq_bound.json", &bound)?;
    println!("radius {} certified from n0={} with frequency {}", bound.rho, bound.n0, bound.sup_frequency);
    Ok(Status::Pass)
}

fn surgery(cfg: &ExperimentConfig, art: &Artifacts) -> CmdResult {
    let co = cfg.cocycle().map_err(err)?;
    match run_surgery(&co, cfg.eps) {
        Ok(run) => {
            art.json("surgery_config.json", &run.config)?;
            art.text("growth_curves.csv", &run.curves.to_csv())?;
            art.text("perturbed.csv", &run.perturbed.to_csv().map_err(err)?)?;
            art.json("growth_certificate.json", &run.certificate)?;
            let c = &run.certificate;
            println!("growth certificate at n={}: max {} against bound {}: {}", c.n, c.max, c.bound, if c.pass { "pass" } else { "fail" });
            Ok(Status::from_pass(c.pass))
        }
        Err(e) => {
            art.json("surgery_outcome.json", &json!({ "generator": co.generator().name(), "eps": cfg.eps, "error": e.to_string() }))?;
            Err(err(e))
        }
    }
}

fn demo_hopf(cfg: &ExperimentConfig, art: &Artifacts) -> CmdResult {
    let (report, field) = hopf_report(cfg.generator.alpha, cfg.base.grid).map_err(err)?;
    art.text("eu_field.csv", &field.to_csv())?;
    art.json("hopf_certificate.json", &report)?;
    println!("expansion {} with unstable winding number {}", report.certificate.expansion, report.winding);
    Ok(Status::from_pass(report.winding != 0))
}
