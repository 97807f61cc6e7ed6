//! Flat `key = value` run configuration.
//!
//! Values are layered: built-in defaults, then an optional config file, then
//! command-line flags. The resolved map is echoed in canonical form (sorted
//! `key=value` lines) and the SHA-256 of that echo identifies the run.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use thiserror::Error;
use wermer_core::analysis::Box4;
use wermer_core::potentials::{PotentialParams, RhoProfile, RhoTildeProfile};
use wermer_core::wermer::DEFAULT_N_MAX;
use wermer_core::{EpsilonSchedule, SheetLabel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("config.{key}: {message}")]
    Field { key: String, message: String },

    #[error("{source_name}:{line}: {message}")]
    Syntax { source_name: String, line: usize, message: String },
}

impl ConfigError {
    pub fn field(key: &str, message: impl Display) -> Self {
        Self::Field { key: key.to_string(), message: message.to_string() }
    }
}

pub type ConfigResult<T> = std::result::Result<T, ConfigError>;

/// One configurable key with its default and help text.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub key: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn p(key: &'static str, default: &'static str, help: &'static str) -> ParamSpec {
    ParamSpec { key, default, help }
}

/// Keys understood by every command.
pub const GLOBAL_PARAMS: &[ParamSpec] = &[
    p("schedule", "geometric:0.125,0.125", "epsilon schedule: gaussian:RATE | geometric:FIRST,RATIO | custom:E1,E2,..;DECAY"),
    p("rho", "quadratic:0.01", "rho profile: quadratic:C | exponential:L | custom:T,V;T,V;.."),
    p("rho_tilde", "1,1", "rho-tilde profile T0,GROWTH"),
    p("level", "8", "finite stage n of the variety used by the potential"),
    p("t_u", "-1", "sublevel defining U = {phi < t_u}"),
    p("t_a", "-1", "sublevel defining A = {phi_tilde < t_a}"),
    p("seed", "1", "base RNG seed"),
];

/// Resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    command: String,
    mode: String,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    /// Layers `defaults`, `preset`, the applicable lines of `file` and
    /// `overrides`. Keys outside `specs` are rejected.
    pub fn resolve(
        command: &str,
        mode: &str,
        specs: &[ParamSpec],
        preset: &[(&str, &str)],
        file: Option<(&str, &str)>,
        overrides: &[(String, String)],
    ) -> ConfigResult<Self> {
        let mut values: BTreeMap<String, String> =
            specs.iter().map(|s| (s.key.to_string(), s.default.to_string())).collect();
        let known = |k: &str| specs.iter().any(|s| s.key == k);
        for (k, v) in preset {
            values.insert(k.to_string(), v.to_string());
        }
        if let Some((name, text)) = file {
            for (line, key, value) in parse_ini(name, text, command)? {
                if !known(&key) {
                    return Err(ConfigError::Syntax {
                        source_name: name.to_string(),
                        line,
                        message: format!("unknown key '{key}' for command '{command}'"),
                    });
                }
                values.insert(key, value);
            }
        }
        for (k, v) in overrides {
            if !known(k) {
                return Err(ConfigError::field(k, format!("unknown key for command '{command}'")));
            }
            values.insert(k.clone(), v.clone());
        }
        Ok(Self { command: command.to_string(), mode: mode.to_string(), values })
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    pub fn mode(&self) -> &str {
        &self.mode
    }

    /// Canonical echo: a header line naming the command, then sorted
    /// `key=value` lines. Feeding it back as a config file reproduces the run.
    pub fn echo(&self) -> String {
        let mut out = format!("# command={} mode={}\n", self.command, self.mode);
        for (k, v) in &self.values {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    /// Hex SHA-256 of [`Self::echo`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.echo().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn raw(&self, key: &str) -> ConfigResult<&str> {
        self.values
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| ConfigError::field(key, "missing"))
    }

    pub fn get<T>(&self, key: &str) -> ConfigResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self.raw(key)?;
        raw.trim()
            .parse()
            .map_err(|e| ConfigError::field(key, format!("cannot parse '{raw}': {e}")))
    }

    /// Comma-separated list.
    pub fn list<T>(&self, key: &str) -> ConfigResult<Vec<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self.raw(key)?;
        raw.split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|e| ConfigError::field(key, format!("cannot parse list entry '{s}': {e}")))
            })
            .collect()
    }

    /// Non-negative integer count; accepts float notation such as `1e6`.
    pub fn count(&self, key: &str) -> ConfigResult<u64> {
        let raw = self.raw(key)?.trim();
        if let Ok(n) = raw.parse::<u64>() {
            return Ok(n);
        }
        match raw.parse::<f64>() {
            Ok(x) if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 => Ok(x as u64),
            _ => Err(ConfigError::field(key, format!("expected a non-negative integer, got '{raw}'"))),
        }
    }

    pub fn positive(&self, key: &str) -> ConfigResult<f64> {
        let x: f64 = self.get(key)?;
        if x.is_finite() && x > 0.0 {
            Ok(x)
        } else {
            Err(ConfigError::field(key, format!("must be finite and > 0, got {x}")))
        }
    }

    pub fn complex(&self, key: &str) -> ConfigResult<Complex64> {
        let raw = self.raw(key)?;
        parse_complex(raw).map_err(|m| ConfigError::field(key, m))
    }

    pub fn seed(&self) -> ConfigResult<u64> {
        self.get("seed")
    }

    /// Sheet label of length `len`; an empty value means all plus signs.
    pub fn sheet(&self, key: &str, len: usize) -> ConfigResult<SheetLabel> {
        let raw = self.raw(key)?.trim();
        let label = if raw.is_empty() {
            SheetLabel::zeros(len)
        } else {
            let signs = raw
                .chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    other => Err(ConfigError::field(key, format!("sign must be '+' or '-', got '{other}'"))),
                })
                .collect::<ConfigResult<Vec<i8>>>()?;
            SheetLabel::from_signs(&signs)
        }
        .map_err(|e| ConfigError::field(key, e))?;
        if label.len() != len {
            return Err(ConfigError::field(key, format!("expected {len} signs, got {}", label.len())));
        }
        Ok(label)
    }

    /// Box in C^2 from `LO,HI` (the same interval on every real coordinate)
    /// or eight numbers `LO1,HI1,..,LO4,HI4`.
    pub fn box4(&self, key: &str) -> ConfigResult<Box4> {
        let v: Vec<f64> = self.list(key)?;
        let (lo, hi) = match v.len() {
            2 => ([v[0]; 4], [v[1]; 4]),
            8 => (
                std::array::from_fn(|i| v[2 * i]),
                std::array::from_fn(|i| v[2 * i + 1]),
            ),
            n => return Err(ConfigError::field(key, format!("expected 2 or 8 numbers, got {n}"))),
        };
        Box4::new(lo, hi).map_err(|e| ConfigError::field(key, e))
    }

    pub fn schedule(&self) -> ConfigResult<EpsilonSchedule> {
        self.get("schedule")
    }

    /// Potential parameters from the global keys, validated.
    pub fn potential_params(&self) -> ConfigResult<PotentialParams> {
        let level = self.level("level")?;
        let params = PotentialParams {
            sched: self.schedule()?,
            rho: self.get::<RhoProfile>("rho")?,
            rho_tilde: self.get::<RhoTildeProfile>("rho_tilde")?,
            level,
            t_u: self.get("t_u")?,
            t_a: self.get("t_a")?,
        };
        params.validate().map_err(|e| ConfigError::field("level", e))?;
        Ok(params)
    }

    /// Level in `1..=DEFAULT_N_MAX`.
    pub fn level(&self, key: &str) -> ConfigResult<usize> {
        let n: usize = self.get(key)?;
        if n == 0 || n > DEFAULT_N_MAX {
            return Err(ConfigError::field(key, format!("level must lie in 1..={DEFAULT_N_MAX}, got {n}")));
        }
        Ok(n)
    }
}

/// `(line, key, value)` entries that apply to `command`: lines before any
/// section header, and lines under `[command]`.
fn parse_ini(name: &str, text: &str, command: &str) -> ConfigResult<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    let mut active = true;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(section) = t.strip_prefix('[') {
            let Some(section) = section.strip_suffix(']') else {
                return Err(ConfigError::Syntax {
                    source_name: name.to_string(),
                    line: line_no,
                    message: "unterminated section header".into(),
                });
            };
            active = section.trim() == command;
            continue;
        }
        let Some((k, v)) = t.split_once('=') else {
            return Err(ConfigError::Syntax {
                source_name: name.to_string(),
                line: line_no,
                message: format!("expected key = value, got '{t}'"),
            });
        };
        if active {
            out.push((line_no, k.trim().to_string(), v.trim().to_string()));
        }
    }
    Ok(out)
}

/// Parses `a+bi`, `a-bi`, `bi`, `i`, `-i` or a plain real `a`.
pub fn parse_complex(raw: &str) -> Result<Complex64, String> {
    let s: String = raw.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("cannot parse complex number '{raw}'");
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|re| Complex64::new(re, 0.0)).map_err(|_| bad());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let (re_part, im_part) = match split {
        Some(i) => (&body[..i], &body[i..]),
        None => ("", body),
    };
    let re = if re_part.is_empty() { 0.0 } else { re_part.parse::<f64>().map_err(|_| bad())? };
    let im = match im_part {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn complex_forms() {
        assert_eq!(parse_complex("2+0i").unwrap(), c(2.0, 0.0));
        assert_eq!(parse_complex("2.3-0.7i").unwrap(), c(2.3, -0.7));
        assert_eq!(parse_complex("-1.5e-3+2E+1i").unwrap(), c(-1.5e-3, 20.0));
        assert_eq!(parse_complex("-i").unwrap(), c(0.0, -1.0));
        assert_eq!(parse_complex("3i").unwrap(), c(0.0, 3.0));
        assert_eq!(parse_complex(" 4 ").unwrap(), c(4.0, 0.0));
        assert!(parse_complex("2+x").is_err());
        assert!(parse_complex("").is_err());
    }

    fn specs() -> Vec<ParamSpec> {
        let mut v = GLOBAL_PARAMS.to_vec();
        v.push(p("n", "8", ""));
        v
    }

    #[test]
    fn layering_and_sections() {
        let file = "n = 5\n[slice]\nseed = 9\n[walk]\nseed = 3\n";
        let cfg = RunConfig::resolve("slice", "run", &specs(), &[], Some(("f.ini", file)), &[("n".into(), "6".into())])
            .unwrap();
        assert_eq!(cfg.get::<usize>("n").unwrap(), 6);
        assert_eq!(cfg.seed().unwrap(), 9);
    }

    #[test]
    fn unknown_keys_rejected_with_path() {
        let err = RunConfig::resolve("slice", "run", &specs(), &[], Some(("f.ini", "\nbogus = 1\n")), &[])
            .unwrap_err();
        assert_eq!(err.to_string(), "f.ini:2: unknown key 'bogus' for command 'slice'");
        let cfg = RunConfig::resolve("slice", "run", &specs(), &[], None, &[("level".into(), "99".into())]).unwrap();
        assert!(cfg.potential_params().unwrap_err().to_string().starts_with("config.level:"));
    }

    #[test]
    fn echo_round_trips_and_hash_is_stable() {
        let cfg = RunConfig::resolve("slice", "run", &specs(), &[], None, &[("seed".into(), "4".into())]).unwrap();
        let again = RunConfig::resolve("slice", "run", &specs(), &[], Some(("echo", &cfg.echo())), &[]).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.hash(), again.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn counts_and_sheets() {
        let mut v = specs();
        v.push(p("N", "1e6", ""));
        v.push(p("sheet", "+-+", ""));
        let cfg = RunConfig::resolve("x", "run", &v, &[], None, &[]).unwrap();
        assert_eq!(cfg.count("N").unwrap(), 1_000_000);
        assert_eq!(cfg.sheet("sheet", 3).unwrap().to_string(), "+-+");
        assert!(cfg.sheet("sheet", 4).is_err());
    }
}
