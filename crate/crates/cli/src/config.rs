//! The JSON run configuration and its `--set` overrides.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tukeylab::MeasureSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Depth,
    Region,
    Body,
    Cramer,
    Inclusion,
    Nmu,
    Hlo,
    Volume,
    Epsnet,
    Vc,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Depth => "depth",
            Command::Region => "region",
            Command::Body => "body",
            Command::Cramer => "cramer",
            Command::Inclusion => "inclusion",
            Command::Nmu => "nmu",
            Command::Hlo => "hlo",
            Command::Volume => "volume",
            Command::Epsnet => "epsnet",
            Command::Vc => "vc",
        }
    }
}

/// Convex bodies attached to a measure that the `body` command and the
/// figure overlays can draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BodyKind {
    /// Depth level set `T_p`.
    Tp,
    /// One-sided centroid body `Z_p^+`.
    ZpPlus,
    /// Cramér level set `B_p`.
    Bp,
    /// Ball body `K_p`.
    Kp,
}

/// The polytope for the `vc` command: `"square"`, `"cube"` (sized by `n`)
/// or an explicit vertex list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VcBody {
    Named(String),
    Vertices { vertices: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
    #[serde(default)]
    pub x: Option<Vec<f64>>,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default, rename = "N")]
    pub n_points: Option<usize>,
    #[serde(default, rename = "N_list")]
    pub n_list: Option<Vec<usize>>,
    #[serde(default)]
    pub p: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub trials: Option<usize>,
    /// Direction grid size `M`.
    #[serde(default)]
    pub directions: Option<usize>,
    #[serde(default)]
    pub mc_budget: Option<usize>,
    #[serde(default)]
    pub max_n: Option<usize>,
    #[serde(default)]
    pub body: Option<VcBody>,
    #[serde(default)]
    pub body_kind: Option<BodyKind>,
    #[serde(default)]
    pub overlays: Vec<BodyKind>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub emit_svg: bool,
    /// Worker threads; defaults to the available cores.
    #[serde(default)]
    pub workers: Option<usize>,
}

fn need<T: Clone>(v: &Option<T>, key: &str, cmd: Command) -> Result<T> {
    match v {
        Some(v) => Ok(v.clone()),
        None => bail!("command {:?} requires {key:?}", cmd.name()),
    }
}

impl RunConfig {
    /// Parses JSON text, applies `key=value` overrides and validates.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text).context("config is not valid JSON")?;
        apply_overrides(&mut value, overrides)?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_value(value).context("config does not match the schema")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn measure(&self) -> Result<MeasureSpec> {
        need(&self.measure, "measure", self.command)
    }

    pub fn x(&self) -> Result<Vec<f64>> {
        need(&self.x, "x", self.command)
    }

    pub fn n_points(&self) -> Result<usize> {
        need(&self.n_points, "N", self.command)
    }

    pub fn p(&self) -> Result<f64> {
        need(&self.p, "p", self.command)
    }

    pub fn trials(&self) -> Result<usize> {
        need(&self.trials, "trials", self.command)
    }

    /// Checks that every parameter the command reads is present and that
    /// dimensions agree.
    pub fn validate(&self) -> Result<()> {
        use Command::*;
        let cmd = self.command;
        if cmd != Vc {
            let spec = self.measure()?;
            if let Some(n) = self.n {
                if n != spec.dim() {
                    bail!("n = {n} disagrees with the measure dimension {}", spec.dim());
                }
            }
            if let Some(x) = &self.x {
                if x.len() != spec.dim() {
                    bail!("x has {} coordinates but the measure lives in dimension {}", x.len(), spec.dim());
                }
            }
        }
        match cmd {
            Depth | Cramer => {
                self.x()?;
            }
            Region => {
                self.p()?;
            }
            Body => {
                self.p()?;
                need(&self.body_kind, "body_kind", cmd)?;
            }
            Inclusion => {
                self.n_points()?;
                need(&self.beta, "beta", cmd)?;
                self.trials()?;
            }
            Nmu => {
                self.x()?;
                self.trials()?;
            }
            Hlo => {
                self.x()?;
                self.n_points()?;
                self.trials()?;
            }
            Volume => {
                need(&self.n_list, "N_list", cmd)?;
                self.trials()?;
            }
            Epsnet => {
                need(&self.epsilon, "epsilon", cmd)?;
                need(&self.gamma, "gamma", cmd)?;
                self.n_points()?;
                self.trials()?;
            }
            Vc => {
                need(&self.n, "n", cmd)?;
                need(&self.body, "body", cmd)?;
            }
        }
        if self.workers == Some(0) {
            bail!("workers must be positive");
        }
        if !self.overlays.is_empty() && self.p.is_none() && self.command != Command::Inclusion {
            bail!("overlays need a level p");
        }
        Ok(())
    }
}

/// Applies `a.b.c=value` overrides; values are parsed as JSON and fall back
/// to plain strings.
pub fn apply_overrides(value: &mut Value, overrides: &[String]) -> Result<()> {
    for item in overrides {
        let (key, raw) = item.split_once('=').with_context(|| format!("override {item:?} is not key=value"))?;
        let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut slot = &mut *value;
        for part in key.split('.') {
            let map = slot.as_object_mut().with_context(|| format!("override {key:?}: {part:?} is not inside an object"))?;
            slot = map.entry(part.to_string()).or_insert(Value::Null);
        }
        *slot = parsed;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEPTH: &str = r#"{"command": "depth", "measure": {"family": "gaussian_std", "dim": 2}, "x": [1, 0]}"#;

    #[test]
    fn parses_and_overrides() {
        let cfg = RunConfig::parse(DEPTH, &["x=[0,2]".into(), "seed=7".into()]).unwrap();
        assert_eq!(cfg.x, Some(vec![0.0, 2.0]));
        assert_eq!(cfg.seed, 7);
        let cfg = RunConfig::parse(DEPTH, &["measure.dim=3".into(), "x=[0,0,1]".into()]).unwrap();
        assert_eq!(cfg.measure().unwrap().dim(), 3);
    }

    #[test]
    fn rejects_unknown_keys_and_missing_parameters() {
        assert!(RunConfig::parse(DEPTH, &["colour=1".into()]).is_err());
        assert!(RunConfig::parse(r#"{"command": "hlo", "measure": {"family": "gaussian_std", "dim": 2}, "x": [0, 0]}"#, &[]).is_err());
        assert!(RunConfig::parse(DEPTH, &["x=[1,2,3]".into()]).is_err());
        assert!(RunConfig::parse("{not json", &[]).is_err());
    }
}
