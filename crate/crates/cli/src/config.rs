use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use derham_qi::fespace::Kind;

use crate::AppError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsilonPolicy {
    Auto,
    Value(f64),
}

impl FromStr for EpsilonPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(EpsilonPolicy::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(EpsilonPolicy::Value(v)),
            _ => Err(format!("epsilon must be `auto` or a positive number, got `{s}`")),
        }
    }
}

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse::<Kind>().map_err(|_| format!("unknown space `{s}` (expected g, c, d, b or P1, N0, RT0, P0)"))
}

/// Flags shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct Flags {
    /// key=value file with defaults for the flags below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// uniform cube subdivisions, comma separated for a sequence
    #[arg(long, value_delimiter = ',')]
    pub cube: Vec<usize>,
    /// mesh file (`tetmesh 3` format)
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind)]
    pub space: Option<Kind>,
    /// homogeneous boundary conditions / zero-extension mollifiers
    #[arg(long)]
    pub bc: bool,
    #[arg(long)]
    pub epsilon: Option<EpsilonPolicy>,
    #[arg(long = "ball-order")]
    pub ball_order: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MeshSpec {
    Cubes(Vec<usize>),
    File(PathBuf),
}

/// Validated settings of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mesh: Option<MeshSpec>,
    pub space: Option<Kind>,
    pub bc: bool,
    pub epsilon: EpsilonPolicy,
    pub ball_order: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub threads: Option<usize>,
}

const KEYS: [&str; 9] = ["cube", "mesh", "space", "bc", "epsilon", "ball-order", "out", "seed", "threads"];

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, AppError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| AppError::Validation(format!("config line {}: expected key=value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(AppError::Validation(format!("config line {}: unknown key `{k}`", i + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(AppError::Validation(format!("config line {}: duplicate key `{k}`", i + 1)));
        }
    }
    Ok(out)
}

fn load(path: &Path) -> Result<BTreeMap<String, String>, AppError> {
    let text = std::fs::read_to_string(path).map_err(|e| AppError::Validation(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

fn bad(key: &str, v: &str) -> AppError {
    AppError::Validation(format!("invalid value `{v}` for `{key}`"))
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, AppError> {
    v.parse().map_err(|_| bad(key, v))
}

impl RunConfig {
    /// File values first, then flags on top.
    pub fn resolve(flags: &Flags) -> Result<Self, AppError> {
        let file = match &flags.config {
            Some(p) => load(p)?,
            None => BTreeMap::new(),
        };
        let get = |k: &str| file.get(k).map(String::as_str);

        let mut cubes = flags.cube.clone();
        if cubes.is_empty() {
            if let Some(v) = get("cube") {
                cubes = v.split(',').map(|t| num("cube", t.trim())).collect::<Result<_, _>>()?;
            }
        }
        let mesh_path = flags.mesh.clone().or_else(|| get("mesh").map(PathBuf::from));
        let mesh = match (cubes.is_empty(), mesh_path) {
            (false, Some(_)) => return Err(AppError::Validation("give either --cube or --mesh, not both".into())),
            (false, None) => Some(MeshSpec::Cubes(cubes)),
            (true, Some(p)) => Some(MeshSpec::File(p)),
            (true, None) => None,
        };
        let space = match (flags.space, get("space")) {
            (Some(k), _) => Some(k),
            (None, Some(v)) => Some(parse_kind(v).map_err(AppError::Validation)?),
            (None, None) => None,
        };
        let bc = flags.bc
            || match get("bc") {
                Some("true") | Some("1") | Some("yes") => true,
                Some("false") | Some("0") | Some("no") | None => false,
                Some(v) => return Err(bad("bc", v)),
            };
        let epsilon = match (flags.epsilon, get("epsilon")) {
            (Some(e), _) => e,
            (None, Some(v)) => v.parse().map_err(AppError::Validation)?,
            (None, None) => EpsilonPolicy::Auto,
        };
        let ball_order = match (flags.ball_order, get("ball-order")) {
            (Some(k), _) => Some(k),
            (None, Some(v)) => Some(num("ball-order", v)?),
            (None, None) => None,
        };
        let out = flags.out.clone().or_else(|| get("out").map(PathBuf::from));
        let seed = match (flags.seed, get("seed")) {
            (Some(s), _) => s,
            (None, Some(v)) => num("seed", v)?,
            (None, None) => 1,
        };
        let threads = match (flags.threads, get("threads")) {
            (Some(t), _) => Some(t),
            (None, Some(v)) => Some(num("threads", v)?),
            (None, None) => None,
        };
        let cfg = RunConfig { mesh, space, bc, epsilon, ball_order, out, seed, threads };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), AppError> {
        if let Some(MeshSpec::Cubes(ns)) = &self.mesh {
            if let Some(n) = ns.iter().find(|n| **n == 0 || **n > 64) {
                return Err(AppError::Validation(format!("cube subdivisions must be in 1..=64, got {n}")));
            }
        }
        if let Some(k) = self.ball_order {
            if !(3..=40).contains(&k) {
                return Err(AppError::Validation(format!("ball order must be in 3..=40, got {k}")));
            }
        }
        if self.threads == Some(0) {
            return Err(AppError::Validation("threads must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_are_overridden_by_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("run.cfg");
        std::fs::write(&p, "# defaults\ncube = 2,4\nspace = c\nseed = 9\nepsilon = 0.01\n").unwrap();
        let flags = Flags { config: Some(p), seed: Some(3), space: Some(Kind::RT0), ..Flags::default() };
        let c = RunConfig::resolve(&flags).unwrap();
        assert_eq!(c.mesh, Some(MeshSpec::Cubes(vec![2, 4])));
        assert_eq!(c.space, Some(Kind::RT0));
        assert_eq!(c.seed, 3);
        assert_eq!(c.epsilon, EpsilonPolicy::Value(0.01));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(matches!(parse_config_text("cubes = 3"), Err(AppError::Validation(_))));
        assert!(matches!(parse_config_text("cube 3"), Err(AppError::Validation(_))));
        assert!("-1".parse::<EpsilonPolicy>().is_err());
        let flags = Flags { cube: vec![0], ..Flags::default() };
        assert!(RunConfig::resolve(&flags).is_err());
    }
}
