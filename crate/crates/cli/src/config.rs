//! Flat `key = value` experiment config with dotted sections.
//!
//! ```text
//! seed = 7
//! output_dir = out
//! data.n_source = 10000
//! scenario.kind = paper_default
//! train.alpha = 0.1
//! grid.axis = theta
//! grid.values = 0, 0.2, 0.4
//! ```

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use dabound_core::bounds::RiskMode;
use dabound_core::bundle::AChoice;
use dabound_core::objectives::{AlignmentMode, GeneratorLoss};
use dabound_core::synth::ScenarioSpec;
use dabound_core::train::{AlphaSchedule, ReconCost, TrainConfig};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridAxis {
    Theta,
    Ratio,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub axis: GridAxis,
    pub values: Vec<f64>,
    pub modes: Vec<AlignmentMode>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub train: TrainConfig,
    pub n_source: usize,
    pub n_target: usize,
    pub output_dir: PathBuf,
    pub emit_svg: bool,
    pub repeats: usize,
    pub grid: Option<GridSpec>,
    /// Hex SHA-256 of the config text plus any command-line overrides.
    pub hash: String,
}

const TOP_KEYS: &[&str] = &["seed", "output_dir", "emit_svg", "repeats", "data.n_source", "data.n_target"];
const SCENARIO_KEYS: &[&str] = &["kind", "label_flip", "labeled_ratio", "true_map.matrix", "true_map.offset"];
const GRID_KEYS: &[&str] = &["grid.axis", "grid.values", "grid.modes"];

fn parse_val<T: FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value `{v}` for key `{key}`")))
}

fn parse_bool(key: &str, v: &str) -> CliResult<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config(format!("invalid value `{v}` for key `{key}`"))),
    }
}

fn keyed<T>(key: &str, r: dabound_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::Config(format!("key `{key}`: {e}")))
}

/// Splits text into ordered `(key, value)` pairs. `#` starts a comment.
pub fn parse_pairs(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut seen = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", n + 1)))?;
        let k = k.trim().to_string();
        if seen.insert(k.clone(), ()).is_some() {
            return Err(CliError::Config(format!("duplicate key `{k}`")));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

fn apply_train(t: &mut TrainConfig, name: &str, key: &str, v: &str) -> CliResult<()> {
    match name {
        "alpha" => t.alpha = parse_val(key, v)?,
        "beta" => t.beta = parse_val(key, v)?,
        "theta" => t.theta = parse_val(key, v)?,
        "gamma" => t.gamma = parse_val(key, v)?,
        "p_exponent" => t.p_exponent = parse_val(key, v)?,
        "recon_cost" => t.recon_cost = keyed(key, ReconCost::parse(v))?,
        "a_choice" => t.a_choice = keyed(key, AChoice::parse(v))?,
        "joint_dim" => t.arch.joint_dim = parse_val(key, v)?,
        "hidden_dim" => t.arch.hidden_dim = parse_val(key, v)?,
        "batch_size" => t.batch_size = parse_val(key, v)?,
        "iterations" => t.iterations = parse_val(key, v)?,
        "eval_every" => t.eval_every = parse_val(key, v)?,
        "seed" => t.seed = parse_val(key, v)?,
        "lr" => t.adam.lr = parse_val(key, v)?,
        "beta1" => t.adam.beta1 = parse_val(key, v)?,
        "beta2" => t.adam.beta2 = parse_val(key, v)?,
        "adam_eps" => t.adam.eps = parse_val(key, v)?,
        "d_steps" => t.d_steps = parse_val(key, v)?,
        "g_steps" => t.g_steps = parse_val(key, v)?,
        "alignment" => t.alignment = keyed(key, AlignmentMode::parse(v))?,
        "align_weight" => t.align_weight = parse_val(key, v)?,
        "alpha_schedule" => t.alpha_schedule = keyed(key, AlphaSchedule::parse(v))?,
        "tie_generators" => t.tie_generators = parse_bool(key, v)?,
        "generator_loss" => t.generator_loss = keyed(key, GeneratorLoss::parse(v))?,
        "clamp_epsilon" => t.clamp_epsilon = parse_val(key, v)?,
        "risk_mode" => t.risk_mode = keyed(key, RiskMode::parse(v))?,
        "ws_batch" => t.ws_batch = parse_val(key, v)?,
        "ws_repeats" => t.ws_repeats = parse_val(key, v)?,
        "slack" => t.slack = parse_val(key, v)?,
        "reporting_m" => t.reporting_m = parse_val(key, v)?,
        _ => return Err(CliError::Config(format!("unknown key `{key}`"))),
    }
    Ok(())
}

fn parse_list<T>(key: &str, v: &str, f: impl Fn(&str) -> CliResult<T>) -> CliResult<Vec<T>> {
    let items: Vec<T> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(f)
        .collect::<CliResult<_>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("key `{key}` needs at least one value")));
    }
    Ok(items)
}

impl ExperimentConfig {
    /// Parses config text; `seed` overrides both the data and the training seed.
    pub fn parse(text: &str, seed: Option<u64>) -> CliResult<Self> {
        let pairs = parse_pairs(text)?;
        let mut train = TrainConfig::default();
        let mut scenario_kv = BTreeMap::new();
        let mut cfg = ExperimentConfig {
            scenario: ScenarioSpec::paper_default(),
            train: TrainConfig::default(),
            n_source: 10_000,
            n_target: 10_000,
            output_dir: PathBuf::from("out"),
            emit_svg: false,
            repeats: 1,
            grid: None,
            hash: String::new(),
        };
        let mut grid_kv = BTreeMap::new();
        let mut base_seed = None;
        for (k, v) in &pairs {
            if let Some(name) = k.strip_prefix("train.") {
                apply_train(&mut train, name, k, v)?;
            } else if let Some(name) = k.strip_prefix("scenario.") {
                if !SCENARIO_KEYS.contains(&name) {
                    return Err(CliError::Config(format!("unknown key `{k}`")));
                }
                scenario_kv.insert(name.to_string(), v.clone());
            } else if GRID_KEYS.contains(&k.as_str()) {
                grid_kv.insert(k.clone(), v.clone());
            } else if TOP_KEYS.contains(&k.as_str()) {
                match k.as_str() {
                    "seed" => base_seed = Some(parse_val::<u64>(k, v)?),
                    "output_dir" => cfg.output_dir = PathBuf::from(v),
                    "emit_svg" => cfg.emit_svg = parse_bool(k, v)?,
                    "repeats" => cfg.repeats = parse_val(k, v)?,
                    "data.n_source" => cfg.n_source = parse_val(k, v)?,
                    "data.n_target" => cfg.n_target = parse_val(k, v)?,
                    _ => unreachable!(),
                }
            } else {
                return Err(CliError::Config(format!("unknown key `{k}`")));
            }
        }
        if let Some(s) = seed.or(base_seed) {
            train.seed = s;
        }
        if cfg.repeats == 0 {
            return Err(CliError::Config("key `repeats` must be at least 1".into()));
        }
        if cfg.n_source == 0 || cfg.n_target == 0 {
            return Err(CliError::Config("keys `data.n_source` and `data.n_target` must be positive".into()));
        }
        if !scenario_kv.is_empty() {
            cfg.scenario = ScenarioSpec::from_kv(&scenario_kv)
                .map_err(|e| CliError::Config(format!("scenario keys: {e}")))?;
        }
        train.validate().map_err(|e| CliError::Config(e.to_string()))?;
        cfg.train = train;
        if !grid_kv.is_empty() {
            let axis = match grid_kv.get("grid.axis").map(|s| s.trim()) {
                Some("theta") => GridAxis::Theta,
                Some("r") => GridAxis::Ratio,
                Some(other) => return Err(CliError::Config(format!("invalid value `{other}` for key `grid.axis`"))),
                None => return Err(CliError::Config("missing key `grid.axis`".into())),
            };
            let values = parse_list(
                "grid.values",
                grid_kv.get("grid.values").map_or("", String::as_str),
                |s| parse_val("grid.values", s),
            )?;
            let modes = match grid_kv.get("grid.modes") {
                Some(v) => parse_list("grid.modes", v, |s| keyed("grid.modes", AlignmentMode::parse(s)))?,
                None => vec![AlignmentMode::Proper, AlignmentMode::Improper],
            };
            cfg.grid = Some(GridSpec { axis, values, modes });
        }
        let mut h = Sha256::new();
        h.update(text.as_bytes());
        if let Some(s) = seed {
            h.update(format!("\nseed-override={s}").as_bytes());
        }
        cfg.hash = hex::encode(h.finalize());
        Ok(cfg)
    }

    /// Seed of the `rep`-th repeat; repeat 0 uses the configured seed.
    pub fn repeat_seed(&self, rep: usize) -> u64 {
        if rep == 0 {
            self.train.seed
        } else {
            dabound_core::derive_seed(self.train.seed, rep as u64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let c = ExperimentConfig::parse("train.alpha = 0.2\n# note\nseed = 4\n", None).unwrap();
        assert_eq!(c.train.alpha, 0.2);
        assert_eq!(c.train.seed, 4);
        assert_eq!(c.n_source, 10_000);
        let c2 = ExperimentConfig::parse("train.alpha = 0.2\n# note\nseed = 4\n", Some(9)).unwrap();
        assert_eq!(c2.train.seed, 9);
        assert_ne!(c.hash, c2.hash);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = ExperimentConfig::parse("train.alpah = 0.1\n", None).unwrap_err();
        assert!(e.to_string().contains("train.alpah"));
        assert_eq!(e.exit_code(), 1);
        let e = ExperimentConfig::parse("bogus = 1\n", None).unwrap_err();
        assert!(e.to_string().contains("bogus"));
    }

    #[test]
    fn bad_value_is_named() {
        let e = ExperimentConfig::parse("train.iterations = many\n", None).unwrap_err();
        assert!(e.to_string().contains("train.iterations"));
        let e = ExperimentConfig::parse("train.alpha = -1\n", None).unwrap_err();
        assert!(e.to_string().contains("alpha"));
    }

    #[test]
    fn scenario_and_grid() {
        let text = "scenario.kind = alignment_study\nscenario.labeled_ratio = 0.25\ngrid.axis = r\ngrid.values = 0.05, 0.5\n";
        let c = ExperimentConfig::parse(text, None).unwrap();
        assert_eq!(c.scenario.labeled_ratio, 0.25);
        let g = c.grid.unwrap();
        assert_eq!(g.axis, GridAxis::Ratio);
        assert_eq!(g.values, vec![0.05, 0.5]);
        assert_eq!(g.modes, vec![AlignmentMode::Proper, AlignmentMode::Improper]);
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(ExperimentConfig::parse("seed = 1\nseed = 2\n", None).is_err());
    }
}
