//! Problem configuration files (TOML).
//!
//! ```toml
//! seed = 7
//! out_dir = "out/half"
//! initial_point = [1.0]
//!
//! [space]
//! family = "ppower"        # ppower | orlicz | weighted_sum | planted
//! p = 1.0
//!
//! [map]
//! kind = "scalarwise"      # affine | scalarwise
//! scalar = "half"          # half | logistic_damped | const
//! c = 0.5
//!
//! [solve]
//! tol = 1e-10
//! max_iter = 1000
//!
//! [check]
//! trials = 10000
//!
//! [chain]
//! N = 30
//! ```
//!
//! Errors always name the offending key.

use std::path::{Path, PathBuf};

use thiserror::Error;
use toml::{Table, Value};

use crate::map::{ContractionClaim, MapSpec, ScalarMap};
use crate::modular::{ModularSpec, Planted, Young};
use crate::point::Point;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_CHAIN_N: usize = 30;
pub const DEFAULT_FATOU_RATIO: f64 = 0.5;
pub const DEFAULT_FATOU_STEPS: usize = 200;
pub const DEFAULT_OUT_DIR: &str = "modfix-out";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub space: ModularSpec,
    pub dim: usize,
    pub map: Option<MapSpec>,
    pub initial_point: Point,
    pub tol: f64,
    pub max_iter: usize,
    pub trials: usize,
    /// Exponent for the s-convexity check, when requested.
    pub check_s: Option<f64>,
    pub fatou_ratio: f64,
    pub fatou_steps: usize,
    pub chain_n: usize,
    /// Overrides the computed chain `alpha`.
    pub chain_alpha: Option<f64>,
    pub seed: u64,
    pub out_dir: PathBuf,
}

/// A view of one table that remembers its dotted prefix for diagnostics.
struct Section<'a> {
    prefix: &'a str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn key(&self, name: &str) -> String {
        if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}.{}", self.prefix, name)
        }
    }

    fn allow(&self, names: &[&str]) -> Result<(), ConfigError> {
        if let Some(table) = self.table {
            if let Some(k) = table.keys().find(|k| !names.contains(&k.as_str())) {
                return Err(ConfigError::Unknown(self.key(k)));
            }
        }
        Ok(())
    }

    fn get(&self, name: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(name))
    }

    fn f64(&self, name: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Float(v)) => Ok(Some(*v)),
            Some(Value::Integer(v)) => Ok(Some(*v as f64)),
            Some(other) => Err(invalid(
                &self.key(name),
                format!("expected a number, found {}", other.type_str()),
            )),
        }
    }

    fn usize(&self, name: &str) -> Result<Option<usize>, ConfigError> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::Integer(v)) => usize::try_from(*v)
                .map(Some)
                .map_err(|_| invalid(&self.key(name), "expected a nonnegative integer")),
            Some(other) => Err(invalid(
                &self.key(name),
                format!("expected an integer, found {}", other.type_str()),
            )),
        }
    }

    fn str(&self, name: &str) -> Result<Option<&'a str>, ConfigError> {
        match self.get(name) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(other) => Err(invalid(
                &self.key(name),
                format!("expected a string, found {}", other.type_str()),
            )),
        }
    }

    fn required_str(&self, name: &str) -> Result<&'a str, ConfigError> {
        self.str(name)?
            .ok_or_else(|| ConfigError::Missing(self.key(name)))
    }

    fn vector(&self, name: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(name) {
            None => Ok(None),
            Some(v) => numbers(v, &self.key(name)).map(Some),
        }
    }

    fn matrix(&self, name: &str) -> Result<Option<Vec<Vec<f64>>>, ConfigError> {
        let key = self.key(name);
        match self.get(name) {
            None => Ok(None),
            Some(Value::Array(rows)) => rows
                .iter()
                .enumerate()
                .map(|(i, row)| numbers(row, &format!("{key}[{i}]")))
                .collect::<Result<_, _>>()
                .map(Some),
            Some(other) => Err(invalid(
                &key,
                format!("expected an array of rows, found {}", other.type_str()),
            )),
        }
    }
}

fn numbers(value: &Value, key: &str) -> Result<Vec<f64>, ConfigError> {
    let Value::Array(items) = value else {
        return Err(invalid(
            key,
            format!("expected an array of numbers, found {}", value.type_str()),
        ));
    };
    items
        .iter()
        .map(|v| match v {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            other => Err(invalid(
                key,
                format!("expected numbers, found {}", other.type_str()),
            )),
        })
        .collect()
}

fn sub_table<'a>(root: &'a Table, name: &'a str) -> Result<Section<'a>, ConfigError> {
    match root.get(name) {
        None => Ok(Section {
            prefix: name,
            table: None,
        }),
        Some(Value::Table(t)) => Ok(Section {
            prefix: name,
            table: Some(t),
        }),
        Some(other) => Err(invalid(
            name,
            format!("expected a table, found {}", other.type_str()),
        )),
    }
}

fn parse_space(sec: &Section) -> Result<ModularSpec, ConfigError> {
    if sec.table.is_none() {
        return Err(ConfigError::Missing("space.family".into()));
    }
    sec.allow(&[
        "family",
        "p",
        "phi",
        "weights",
        "quadrature_nodes",
        "dim",
        "planted",
    ])?;
    let family = sec.required_str("family")?;
    let p = sec.f64("p")?;
    if let Some(p) = p {
        if !(p.is_finite() && p > 0.0) {
            return Err(invalid(
                &sec.key("p"),
                format!("must be finite and positive, got {p}"),
            ));
        }
    }
    let need_p = || p.ok_or_else(|| ConfigError::Missing(sec.key("p")));
    let spec = match family {
        "ppower" => {
            ModularSpec::p_power(need_p()?).map_err(|e| invalid(&sec.key("p"), e.to_string()))
        }
        "weighted_sum" => {
            let weights = sec
                .vector("weights")?
                .ok_or_else(|| ConfigError::Missing(sec.key("weights")))?;
            let p = need_p()?;
            ModularSpec::weighted_sum(p, weights)
                .map_err(|e| invalid(&sec.key("weights"), e.to_string()))
        }
        "orlicz" => {
            let phi = match sec.required_str("phi")? {
                "power" => Young::Power { p: need_p()? },
                "exp_minus_one" => Young::ExpMinusOne,
                "u_log" => Young::ULog,
                other => {
                    return Err(invalid(
                        &sec.key("phi"),
                        format!("unknown integrand `{other}` (power | exp_minus_one | u_log)"),
                    ))
                }
            };
            let nodes = sec
                .usize("quadrature_nodes")?
                .ok_or_else(|| ConfigError::Missing(sec.key("quadrature_nodes")))?;
            ModularSpec::orlicz(phi, nodes)
                .map_err(|e| invalid(&sec.key("quadrature_nodes"), e.to_string()))
        }
        "planted" => {
            let name = sec.required_str("planted")?;
            let planted = Planted::from_name(name).ok_or_else(|| {
                invalid(
                    &sec.key("planted"),
                    format!("unknown functional `{name}` (sine_bump | asymmetric | dead_zone)"),
                )
            })?;
            Ok(ModularSpec::planted(planted))
        }
        other => {
            return Err(invalid(
                &sec.key("family"),
                format!("unknown family `{other}` (ppower | orlicz | weighted_sum | planted)"),
            ))
        }
    };
    spec
}

fn parse_map(sec: &Section) -> Result<Option<MapSpec>, ConfigError> {
    if sec.table.is_none() {
        return Ok(None);
    }
    sec.allow(&[
        "kind", "matrix", "offset", "scalar", "lambda", "value", "c", "k", "s",
    ])?;
    let map = match sec.required_str("kind")? {
        "affine" => {
            let matrix = sec
                .matrix("matrix")?
                .ok_or_else(|| ConfigError::Missing(sec.key("matrix")))?;
            let offset = sec
                .vector("offset")?
                .ok_or_else(|| ConfigError::Missing(sec.key("offset")))?;
            MapSpec::affine(matrix, offset)
                .map_err(|e| invalid(&sec.key("matrix"), e.to_string()))?
        }
        "scalarwise" => {
            let scalar = match sec.required_str("scalar")? {
                "half" => ScalarMap::Half,
                "logistic_damped" => ScalarMap::LogisticDamped {
                    lambda: sec
                        .f64("lambda")?
                        .ok_or_else(|| ConfigError::Missing(sec.key("lambda")))?,
                },
                "const" => ScalarMap::Const {
                    value: sec
                        .f64("value")?
                        .ok_or_else(|| ConfigError::Missing(sec.key("value")))?,
                },
                other => {
                    return Err(invalid(
                        &sec.key("scalar"),
                        format!("unknown map `{other}` (half | logistic_damped | const)"),
                    ))
                }
            };
            MapSpec::scalarwise(scalar).map_err(|e| invalid(&sec.key("scalar"), e.to_string()))?
        }
        other => {
            return Err(invalid(
                &sec.key("kind"),
                format!("unknown kind `{other}` (affine | scalarwise)"),
            ))
        }
    };

    let claim = match (sec.f64("c")?, sec.f64("k")?, sec.f64("s")?) {
        (None, None, None) => None,
        (Some(c), None, None) => Some(ContractionClaim::Banach { c }),
        (Some(c), Some(k), Some(s)) => Some(ContractionClaim::SConvex { c, k, s }),
        (None, _, _) => return Err(ConfigError::Missing(sec.key("c"))),
        (Some(_), None, Some(_)) => return Err(ConfigError::Missing(sec.key("k"))),
        (Some(_), Some(_), None) => return Err(ConfigError::Missing(sec.key("s"))),
    };
    match claim {
        Some(claim) => map
            .with_claim(claim)
            .map(Some)
            .map_err(|e| invalid(&sec.key("c"), e.to_string())),
        None => Ok(Some(map)),
    }
}

impl ProblemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let root: Table = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let top = Section {
            prefix: "",
            table: Some(&root),
        };
        top.allow(&[
            "space",
            "map",
            "solve",
            "check",
            "chain",
            "seed",
            "out_dir",
            "initial_point",
        ])?;

        let space_sec = sub_table(&root, "space")?;
        let space = parse_space(&space_sec)?;
        let map = parse_map(&sub_table(&root, "map")?)?;

        let solve = sub_table(&root, "solve")?;
        solve.allow(&["tol", "max_iter"])?;
        let check = sub_table(&root, "check")?;
        check.allow(&["trials", "s", "fatou_ratio", "fatou_steps"])?;
        let chain = sub_table(&root, "chain")?;
        chain.allow(&["N", "alpha"])?;

        // every source of a dimension must agree
        let initial = top.vector("initial_point")?;
        let sources = [
            ("space", crate::modular::Modular::dim(&space)),
            ("space.dim", space_sec.usize("dim")?),
            (
                "map.matrix",
                map.as_ref().and_then(crate::map::SelfMap::dim),
            ),
            ("initial_point", initial.as_ref().map(Vec::len)),
        ];
        let mut dim: Option<(&str, usize)> = None;
        for (key, d) in sources {
            let Some(d) = d else { continue };
            match dim {
                None => dim = Some((key, d)),
                Some((first, expected)) if expected != d => {
                    return Err(invalid(
                        key,
                        format!("dimension {d} disagrees with {expected} from `{first}`"),
                    ))
                }
                Some(_) => {}
            }
        }
        let dim = match dim {
            Some((_, 0)) => return Err(invalid("space.dim", "dimension must be positive")),
            Some((_, d)) => d,
            None => return Err(ConfigError::Missing("space.dim".into())),
        };

        let initial_point = match initial {
            Some(v) => Point::new(v).map_err(|e| invalid("initial_point", e.to_string()))?,
            None => Point::zeros(dim).expect("positive dimension"),
        };

        let tol = solve.f64("tol")?.unwrap_or(DEFAULT_TOL);
        if !(tol.is_finite() && tol > 0.0) {
            return Err(invalid("solve.tol", "must be positive"));
        }
        let trials = check.usize("trials")?.unwrap_or(DEFAULT_TRIALS);
        if trials == 0 {
            return Err(invalid("check.trials", "must be at least 1"));
        }
        let check_s = check.f64("s")?;
        if let Some(s) = check_s {
            if !(s > 0.0 && s <= 1.0) {
                return Err(invalid("check.s", "must lie in (0, 1]"));
            }
        }
        let fatou_ratio = check.f64("fatou_ratio")?.unwrap_or(DEFAULT_FATOU_RATIO);
        if !(fatou_ratio > 0.0 && fatou_ratio < 1.0) {
            return Err(invalid("check.fatou_ratio", "must lie in (0, 1)"));
        }
        let fatou_steps = check.usize("fatou_steps")?.unwrap_or(DEFAULT_FATOU_STEPS);
        if fatou_steps == 0 {
            return Err(invalid("check.fatou_steps", "must be at least 1"));
        }
        let chain_alpha = chain.f64("alpha")?;
        if let Some(a) = chain_alpha {
            if !(a.is_finite() && a >= 0.0) {
                return Err(invalid("chain.alpha", "must be finite and nonnegative"));
            }
        }
        let seed = match top.get("seed") {
            None => 0,
            Some(Value::Integer(v)) => {
                u64::try_from(*v).map_err(|_| invalid("seed", "must be nonnegative"))?
            }
            Some(other) => {
                return Err(invalid(
                    "seed",
                    format!("expected an integer, found {}", other.type_str()),
                ))
            }
        };

        Ok(ProblemConfig {
            space,
            dim,
            map,
            initial_point,
            tol,
            max_iter: solve.usize("max_iter")?.unwrap_or(DEFAULT_MAX_ITER),
            trials,
            check_s,
            fatou_ratio,
            fatou_steps,
            chain_n: chain.usize("N")?.unwrap_or(DEFAULT_CHAIN_N),
            chain_alpha,
            seed,
            out_dir: PathBuf::from(top.str("out_dir")?.unwrap_or(DEFAULT_OUT_DIR)),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }
}
