//! Run configuration: a JSON config file overlaid with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use reebkit::{ContactSystem, Family, LensParams};
use serde::Deserialize;

use crate::UsageError;

/// Contents of a `--config` file. Every field is optional; flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub system: Option<serde_json::Value>,
    pub lens: Option<LensParams>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub svg: Option<bool>,
    pub csv: Option<bool>,
    pub jobs: Option<usize>,
    pub action_bound: Option<f64>,
    pub samples: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.is_file() {
            bail!(UsageError(format!("config file {} not found", path.display())));
        }
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())).into())
    }
}

/// Resolved settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub system: Option<ContactSystem>,
    pub seed: u64,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub svg: bool,
    pub csv: bool,
    pub jobs: Option<usize>,
    pub action_bound: Option<f64>,
    pub samples: Option<usize>,
}

/// Flag values before merging with the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub system: Option<String>,
    pub lens: Option<String>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub svg: bool,
    pub csv: bool,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn resolve(config: Option<&Path>, flags: Overrides) -> Result<Self> {
        let file = match config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let system = match (&flags.system, &file.system) {
            (Some(s), _) => Some(parse_system(s)?),
            (None, Some(v)) => Some(system_from_value(v.clone())?),
            (None, None) => None,
        };
        let lens = match &flags.lens {
            Some(s) => Some(parse_lens(s)?),
            None => file.lens,
        };
        let system = match (system, lens) {
            (Some(sys), Some(l)) => Some(sys.with_lens(l)),
            (None, Some(_)) => bail!(UsageError("--lens given without a system".into())),
            (s, None) => s,
        };
        let tol = flags.tol.or(file.tol).unwrap_or(1e-9);
        if !(tol > 0.0 && tol.is_finite()) {
            bail!(UsageError(format!("tolerance must be positive, got {tol}")));
        }
        let jobs = flags.jobs.or(file.jobs);
        if jobs == Some(0) {
            bail!(UsageError("--jobs must be at least 1".into()));
        }
        Ok(Self {
            system,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            tol,
            out: flags.out.or(file.out),
            svg: flags.svg || file.svg.unwrap_or(false),
            csv: flags.csv || file.csv.unwrap_or(false),
            jobs,
            action_bound: file.action_bound,
            samples: file.samples,
        })
    }

    pub fn require_system(&self) -> Result<ContactSystem> {
        match self.system {
            Some(s) => Ok(s),
            None => bail!(UsageError(
                "no system given; pass --system or set it in --config".into()
            )),
        }
    }
}

/// Parses a system given as inline JSON, a path to a JSON file, `round`, or `ellipsoid:A,B`.
pub fn parse_system(spec: &str) -> Result<ContactSystem> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        let v: serde_json::Value =
            serde_json::from_str(spec).map_err(|e| UsageError(format!("invalid system JSON: {e}")))?;
        return system_from_value(v);
    }
    if spec == "round" {
        return Ok(ContactSystem::new(Family::Round, None)?);
    }
    if let Some(rest) = spec.strip_prefix("ellipsoid:") {
        let ab = parse_floats(rest)?;
        if ab.len() != 2 {
            bail!(UsageError(format!("expected ellipsoid:A,B, got '{spec}'")));
        }
        return Ok(ContactSystem::new(
            Family::Ellipsoid { a: ab[0], b: ab[1] },
            None,
        )?);
    }
    let path = Path::new(spec);
    if !path.is_file() {
        bail!(UsageError(format!("system file {} not found", path.display())));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| UsageError(format!("invalid system file {}: {e}", path.display())))?;
    system_from_value(v)
}

fn system_from_value(v: serde_json::Value) -> Result<ContactSystem> {
    if let serde_json::Value::String(s) = &v {
        return parse_system(s);
    }
    serde_json::from_value(v).map_err(|e| UsageError(format!("invalid system: {e}")).into())
}

/// Parses `P,Q`.
pub fn parse_lens(spec: &str) -> Result<LensParams> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!(UsageError(format!("expected lens as P,Q, got '{spec}'")));
    }
    let p: u32 = parts[0]
        .parse()
        .map_err(|_| UsageError(format!("bad p in '{spec}'")))?;
    let q: u32 = parts[1]
        .parse()
        .map_err(|_| UsageError(format!("bad q in '{spec}'")))?;
    Ok(LensParams::new(p, q)?)
}

/// Parses a comma-separated list of reals.
pub fn parse_floats(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| UsageError(format!("not a number: '{}'", s.trim())).into())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_specs() {
        let s = parse_system("ellipsoid:1,2").unwrap();
        assert_eq!(s.principal_periods(), (1.0, 2.0));
        let j = parse_system(r#"{"family":"ellipsoid","a":1,"b":3,"lens":{"p":3,"q":1}}"#).unwrap();
        assert_eq!(j.lens_or_sphere().p(), 3);
        assert!(parse_system("round").is_ok());
        assert!(parse_system("ellipsoid:1").is_err());
        assert!(parse_system("/nonexistent/system.json").is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = std::env::temp_dir().join(format!("reebkit-config-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.json");
        fs::write(
            &path,
            r#"{"system":"ellipsoid:1,2","lens":{"p":2,"q":1},"seed":5,"tol":1e-8}"#,
        )
        .unwrap();
        let cfg = RunConfig::resolve(
            Some(&path),
            Overrides {
                seed: Some(9),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.tol, 1e-8);
        assert_eq!(cfg.system.unwrap().lens_or_sphere().p(), 2);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn bad_tolerance_is_usage_error() {
        let err = RunConfig::resolve(
            None,
            Overrides {
                tol: Some(-1.0),
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(err.downcast_ref::<UsageError>().is_some());
    }
}
