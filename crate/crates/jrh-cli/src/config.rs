use anyhow::{Context, Result};
use jrh::JrhError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Everything a run needs. A saved config replays the run exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: CommandConfig,
    pub precision_bits: u32,
    pub tol: f64,
    pub out: PathBuf,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CommandConfig {
    Geometry {
        a: String,
        b: String,
        levels: Vec<f64>,
    },
    Phase {
        a: String,
        b: String,
        points: Vec<[f64; 2]>,
        samples: u32,
    },
    Zeros {
        alpha: String,
        beta: String,
        n: u32,
    },
    Asym {
        a: String,
        b: String,
        n: u32,
        points: Vec<[f64; 2]>,
        compare: bool,
    },
    Converge {
        a: String,
        b: String,
        ns: Vec<u32>,
        points: Vec<[f64; 2]>,
    },
}

impl CommandConfig {
    pub fn name(&self) -> &'static str {
        match self {
            CommandConfig::Geometry { .. } => "geometry",
            CommandConfig::Phase { .. } => "phase",
            CommandConfig::Zeros { .. } => "zeros",
            CommandConfig::Asym { .. } => "asym",
            CommandConfig::Converge { .. } => "converge",
        }
    }
}

impl RunConfig {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<RunConfig> {
        serde_json::from_str(s).map_err(|e| JrhError::InvalidArgument(format!("config: {e}")).into())
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let s = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        RunConfig::from_json(&s)
    }
}

/// Parses "x,y" into a point.
pub fn parse_point(s: &str) -> std::result::Result<[f64; 2], JrhError> {
    let bad = || JrhError::InvalidArgument(format!("point '{s}' is not of the form x,y"));
    let (x, y) = s.split_once(',').ok_or_else(bad)?;
    let x: f64 = x.trim().parse().map_err(|_| bad())?;
    let y: f64 = y.trim().parse().map_err(|_| bad())?;
    if !x.is_finite() || !y.is_finite() {
        return Err(bad());
    }
    Ok([x, y])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let c = RunConfig {
            command: CommandConfig::Converge {
                a: "-0.6913".into(),
                b: "-8071/10000".into(),
                ns: vec![40, 80, 160],
                points: vec![[0.1, -0.30000000000000004]],
            },
            precision_bits: 128,
            tol: 1e-24,
            out: PathBuf::from("out/converge"),
            seed: 7,
        };
        let s = c.to_json();
        let back = RunConfig::from_json(&s).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_json(), s);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let s = r#"{"command":{"kind":"zeros","alpha":"-7","beta":"-8","n":10,"extra":1},
                    "precision_bits":128,"tol":1e-20,"out":"o","seed":0}"#;
        assert!(RunConfig::from_json(s).is_err());
    }

    #[test]
    fn points_parse() {
        assert_eq!(parse_point("-0.5, -0.8").unwrap(), [-0.5, -0.8]);
        assert!(parse_point("1").is_err());
        assert!(parse_point("1,nan").is_err());
    }
}
