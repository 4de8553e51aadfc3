use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use cocycle_lab::base::{BaseSystem, RotationNumber, DEFAULT_GRID};
use cocycle_lab::cocycle::{Cocycle, Generator, TableField};
use cocycle_lab::sl2::Mat2;

pub const OUTPUT_ENV: &str = "COCYCLE_LAB_OUT";
const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad(field: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("field `{field}`: {msg}"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaseSpec {
    /// golden, silver, circle, torus or sturmian.
    pub kind: String,
    pub alpha: Option<f64>,
    pub shift: Option<Vec<f64>>,
    pub slope: Option<f64>,
    pub depth: u32,
    pub grid: usize,
}

impl Default for BaseSpec {
    fn default() -> Self {
        BaseSpec { kind: "golden".into(), alpha: None, shift: None, slope: None, depth: 16, grid: DEFAULT_GRID }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorSpec {
    /// schrodinger, rotation, constant, hopf, herman or table.
    pub family: String,
    pub energy: f64,
    pub coupling: f64,
    pub offset: f64,
    pub winding: i64,
    pub matrix: [f64; 4],
    pub alpha: f64,
    pub sigma: f64,
    pub path: Option<PathBuf>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            family: "schrodinger".into(),
            energy: 0.0,
            coupling: 3.0,
            offset: 0.0,
            winding: 1,
            matrix: [2.0, 0.0, 0.0, 0.5],
            alpha: TAU * GOLDEN,
            sigma: 1.2,
            path: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub base: BaseSpec,
    pub generator: GeneratorSpec,
    pub eps: f64,
    /// Iterate count for exponent and growth runs.
    pub n: usize,
    /// Anchor position for `steer`.
    pub x: f64,
    pub v: [f64; 2],
    pub w: [f64; 2],
    pub m_max: usize,
    pub anchors: usize,
    pub seed: u64,
    /// Castle height `N`.
    pub height: usize,
    pub samples: usize,
    pub points: Vec<f64>,
    pub uh_n_max: usize,
    pub uh_warmup: usize,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            base: BaseSpec::default(),
            generator: GeneratorSpec::default(),
            eps: 0.1,
            n: 1000,
            x: 0.0,
            v: [1.0, 0.0],
            w: [0.0, 1.0],
            m_max: 1000,
            anchors: 1000,
            seed: 0,
            height: 10,
            samples: 10_000,
            points: vec![0.0],
            uh_n_max: 64,
            uh_warmup: 64,
            output: None,
        }
    }
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), ConfigError> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, key) in parts.iter().enumerate() {
        let obj = node.as_object_mut().ok_or_else(|| bad(path, "not an object path"))?;
        if i + 1 == parts.len() {
            obj.insert((*key).to_string(), value);
            return Ok(());
        }
        node = obj.entry((*key).to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

impl ExperimentConfig {
    /// Reads the optional JSON file and applies `key.sub=value` overrides in order.
    pub fn load(file: Option<&Path>, overrides: &[(String, String)]) -> Result<ExperimentConfig, ConfigError> {
        let mut root = match file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
                let parsed: ExperimentConfig =
                    serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
                serde_json::to_value(parsed).expect("plain record")
            }
            None => Value::Object(Map::new()),
        };
        for (key, raw) in overrides {
            set_path(&mut root, &key.replace('-', "_"), parse_value(raw))?;
        }
        let text = serde_json::to_string_pretty(&root).expect("JSON value");
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
            let msg = e.to_string();
            let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(head, _)| head).to_string();
            ConfigError(format!("command-line override: {msg}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.eps > 0.0 && self.eps <= 10.0) {
            return Err(bad("eps", "must lie in (0, 10]"));
        }
        if !(8..=1 << 24).contains(&self.base.grid) {
            return Err(bad("base.grid", "must lie in [8, 2^24]"));
        }
        for (name, v) in [("n", self.n), ("anchors", self.anchors), ("height", self.height), ("m_max", self.m_max)] {
            if v == 0 {
                return Err(bad(name, "must be at least 1"));
            }
        }
        if !(0.0..1.0).contains(&self.x) {
            return Err(bad("x", "must lie in [0, 1)"));
        }
        if self.points.iter().any(|p| !(0.0..1.0).contains(p)) {
            return Err(bad("points", "positions must lie in [0, 1)"));
        }
        if let Some(p) = &self.generator.path {
            if !p.exists() {
                return Err(bad("generator.path", format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.clone())
            .or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn base_system(&self) -> Result<BaseSystem, ConfigError> {
        let b = &self.base;
        let rotation = |v: Option<f64>, field: &str| -> Result<RotationNumber, ConfigError> {
            let a = v.ok_or_else(|| bad(field, "required for this base"))?;
            RotationNumber::float(a).map_err(|e| bad(field, e))
        };
        let sys = match b.kind.as_str() {
            "golden" => BaseSystem::golden(),
            "silver" => BaseSystem::silver(),
            "circle" => BaseSystem::circle(rotation(b.alpha, "base.alpha")?),
            "torus" => {
                let shift = b.shift.as_ref().ok_or_else(|| bad("base.shift", "required for a torus"))?;
                BaseSystem::torus(shift).map_err(|e| bad("base.shift", e))?
            }
            "sturmian" => BaseSystem::sturmian(rotation(b.slope, "base.slope")?, b.depth),
            other => return Err(bad("base.kind", format!("unknown base `{other}`"))),
        };
        Ok(sys.with_grid(b.grid))
    }

    pub fn generator(&self) -> Result<Generator, ConfigError> {
        let g = &self.generator;
        Ok(match g.family.as_str() {
            "schrodinger" => Generator::Schrodinger { energy: g.energy, coupling: g.coupling },
            "rotation" => Generator::Rotation { offset: g.offset, winding: g.winding },
            "constant" => {
                let [a, b, c, d] = g.matrix;
                Generator::Constant(Mat2::new(a, b, c, d).map_err(|e| bad("generator.matrix", e))?)
            }
            "hopf" => Generator::Hopf { alpha: g.alpha },
            "herman" => {
                if !(g.sigma >= 1.0) {
                    return Err(bad("generator.sigma", "must be at least 1"));
                }
                Generator::Herman { sigma: g.sigma, winding: g.winding }
            }
            "table" => {
                let path = g.path.as_ref().ok_or_else(|| bad("generator.path", "required for a table"))?;
                let text = fs::read_to_string(path).map_err(|e| bad("generator.path", e))?;
                Generator::Table(TableField::from_csv(&text).map_err(|e| bad("generator.path", e))?)
            }
            other => return Err(bad("generator.family", format!("unknown family `{other}`"))),
        })
    }

    pub fn cocycle(&self) -> Result<Cocycle, ConfigError> {
        Cocycle::new(self.base_system()?, self.generator()?).map_err(|e| ConfigError(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let overrides = vec![
            ("base.grid".to_string(), "128".to_string()),
            ("generator.family".to_string(), "constant".to_string()),
            ("eps".to_string(), "0.25".to_string()),
        ];
        let cfg = ExperimentConfig::load(None, &overrides).unwrap();
        assert_eq!(cfg.base.grid, 128);
        assert_eq!(cfg.generator.family, "constant");
        assert_eq!(cfg.eps, 0.25);
    }

    #[test]
    fn unknown_and_out_of_range_fields_are_reported() {
        let e = ExperimentConfig::load(None, &[("bogus".into(), "1".into())]).unwrap_err();
        assert!(e.0.contains("bogus"), "{e}");
        let e = ExperimentConfig::load(None, &[("eps".into(), "-1".into())]).unwrap_err();
        assert!(e.0.contains("eps"), "{e}");
    }
}
