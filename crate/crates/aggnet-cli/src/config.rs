//! Sweep configuration: a flat key-value document where each key is either
//! a fixed number or a range to sweep.
//!
//! Precedence (lowest to highest): config file, `--set` overrides, the
//! `--seed` flag. Ranges are written as JSON objects
//! `{"lo": .., "hi": .., "steps": .., "scale": "linear"|"log"}` in the
//! file, or `lo:hi:steps:scale` on the command line.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Scale for sweep ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// A configured parameter: one value or a swept range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Fixed(f64),
    Range { lo: f64, hi: f64, steps: usize, scale: Scale },
}

impl ParamValue {
    /// The concrete grid this parameter contributes. A range with zero
    /// steps contributes nothing, making the whole sweep empty.
    pub fn values(&self) -> Vec<f64> {
        match *self {
            ParamValue::Fixed(v) => vec![v],
            ParamValue::Range { lo, hi, steps, scale } => {
                if steps == 0 {
                    return vec![];
                }
                if steps == 1 {
                    return vec![lo];
                }
                (0..steps)
                    .map(|i| {
                        let t = i as f64 / (steps - 1) as f64;
                        match scale {
                            Scale::Linear => lo + (hi - lo) * t,
                            Scale::Log => (lo.ln() + (hi.ln() - lo.ln()) * t).exp(),
                        }
                    })
                    .collect()
            }
        }
    }

    /// Canonical textual form used in the config echo.
    pub fn canonical(&self) -> String {
        match *self {
            ParamValue::Fixed(v) => format!("{v:.16e}"),
            ParamValue::Range { lo, hi, steps, scale } => {
                let scale = match scale {
                    Scale::Linear => "linear",
                    Scale::Log => "log",
                };
                format!("{lo:.16e}:{hi:.16e}:{steps}:{scale}")
            }
        }
    }
}

/// Parsed configuration before mode-specific validation.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub entries: BTreeMap<String, ParamValue>,
    pub seed: u64,
}

impl RawConfig {
    /// Loads the file (when given), applies `--set` overrides in order,
    /// then the seed flag.
    pub fn load(
        path: Option<&Path>,
        sets: &[String],
        seed_flag: Option<u64>,
    ) -> Result<Self, String> {
        let mut cfg = RawConfig::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            cfg.apply_json(&text)?;
        }
        for set in sets {
            let (key, value) = set
                .split_once('=')
                .ok_or_else(|| format!("--set expects key=value, got: {set}"))?;
            if key == "seed" {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| format!("seed must be a nonnegative integer, got: {value}"))?;
            } else {
                cfg.entries.insert(key.to_string(), parse_set_value(value)?);
            }
        }
        if let Some(seed) = seed_flag {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn apply_json(&mut self, text: &str) -> Result<(), String> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| format!("config is not valid JSON: {e}"))?;
        let obj = value
            .as_object()
            .ok_or("config must be a JSON object of parameter entries")?;
        for (key, entry) in obj {
            if key == "seed" {
                self.seed = entry
                    .as_u64()
                    .ok_or_else(|| format!("seed must be a nonnegative integer, got {entry}"))?;
                continue;
            }
            let parsed = if let Some(v) = entry.as_f64() {
                ParamValue::Fixed(v)
            } else if let Some(range) = entry.as_object() {
                let get = |field: &str| {
                    range
                        .get(field)
                        .and_then(|v| v.as_f64())
                        .ok_or_else(|| format!("range for {key} is missing numeric `{field}`"))
                };
                let lo = get("lo")?;
                let hi = get("hi")?;
                let steps = range
                    .get("steps")
                    .and_then(|v| v.as_u64())
                    .ok_or_else(|| format!("range for {key} is missing integer `steps`"))?;
                let scale = match range.get("scale").and_then(|v| v.as_str()) {
                    None | Some("linear") => Scale::Linear,
                    Some("log") => Scale::Log,
                    Some(other) => {
                        return Err(format!("scale for {key} must be linear or log, got {other}"))
                    }
                };
                ParamValue::Range { lo, hi, steps: steps as usize, scale }
            } else {
                return Err(format!("entry {key} must be a number or a range object"));
            };
            self.entries.insert(key.clone(), parsed);
        }
        Ok(())
    }

    /// Canonical one-line echo of the effective configuration.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        write!(out, "seed={}", self.seed).unwrap();
        for (k, v) in &self.entries {
            write!(out, ";{k}={}", v.canonical()).unwrap();
        }
        out
    }
}

fn parse_set_value(value: &str) -> Result<ParamValue, String> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 4 {
            return Err(format!("range must be lo:hi:steps:scale, got: {value}"));
        }
        let lo = parts[0].parse::<f64>().map_err(|_| format!("bad range lo: {}", parts[0]))?;
        let hi = parts[1].parse::<f64>().map_err(|_| format!("bad range hi: {}", parts[1]))?;
        let steps =
            parts[2].parse::<usize>().map_err(|_| format!("bad range steps: {}", parts[2]))?;
        let scale = match parts[3] {
            "linear" => Scale::Linear,
            "log" => Scale::Log,
            other => return Err(format!("scale must be linear or log, got: {other}")),
        };
        Ok(ParamValue::Range { lo, hi, steps, scale })
    } else {
        value
            .parse::<f64>()
            .map(ParamValue::Fixed)
            .map_err(|_| format!("bad numeric value: {value}"))
    }
}
