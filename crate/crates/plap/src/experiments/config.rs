//! Flat `key=value` experiment configuration. Unknown keys are rejected;
//! every run writes the fully-resolved configuration next to its outputs.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use crate::geometry::{Domain, DomainKind};
use crate::kernels::Kernel;
use crate::solvers::{Init, SolverConfig, Sweep};

use super::io::{g17, read_kernel_table};
use super::CliError;

const KNOWN_KEYS: &[&str] = &[
    "scheme",
    "p",
    "lambda",
    "k",
    "kernel",
    "kernel.sigma",
    "kernel.table",
    "n",
    "d",
    "seed",
    "domain",
    "density",
    "epsilon",
    "epsilon.amplitude",
    "epsilon.exponent",
    "labels",
    "labels.positions",
    "labels.values",
    "cloud",
    "tol",
    "max_iter",
    "sweep",
    "damping",
    "init",
    "out",
    "n.list",
    "eps.list",
    "grid.m",
    "phi",
    "alpha",
    "knn",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Graph2,
    GraphP,
    GraphInf,
    Game,
    Hyper,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Graph2 => "graph2",
            Scheme::GraphP => "graphp",
            Scheme::GraphInf => "graphinf",
            Scheme::Game => "game",
            Scheme::Hyper => "hyper",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key=value, got `{line}`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Config(format!("unknown config key `{key}`")));
            }
            if values.insert(key.to_string(), value.to_string()).is_some() {
                return Err(CliError::Config(format!("duplicate config key `{key}`")));
            }
        }
        Ok(ExperimentConfig { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Config(format!("key `{key}`: expected a number, got `{v}`"))),
        }
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Config(format!("key `{key}`: expected a number, got `{v}`"))
            }),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                CliError::Config(format!("key `{key}`: expected an integer, got `{v}`"))
            }),
        }
    }

    pub fn usize_opt(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                CliError::Config(format!("key `{key}`: expected an integer, got `{v}`"))
            }),
        }
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| {
                CliError::Config(format!("key `{key}`: expected an integer, got `{v}`"))
            }),
        }
    }

    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| {
                        CliError::Config(format!("key `{key}`: bad number `{s}` in list"))
                    })
                })
                .collect(),
        }
    }

    pub fn usize_list(&self, key: &str, default: &[usize]) -> Result<Vec<usize>, CliError> {
        match self.values.get(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| {
                        CliError::Config(format!("key `{key}`: bad integer `{s}` in list"))
                    })
                })
                .collect(),
        }
    }

    pub fn scheme(&self) -> Result<Scheme, CliError> {
        match self.get("scheme") {
            None => Err(CliError::Config("missing required key `scheme`".into())),
            Some("graph2") => Ok(Scheme::Graph2),
            Some("graphp") => Ok(Scheme::GraphP),
            Some("graphinf") => Ok(Scheme::GraphInf),
            Some("game") => Ok(Scheme::Game),
            Some("hyper") => Ok(Scheme::Hyper),
            Some(v) => Err(CliError::Config(format!(
                "key `scheme`: expected graph2|graphp|graphinf|game|hyper, got `{v}`"
            ))),
        }
    }

    pub fn domain(&self, d: usize) -> Result<Domain, CliError> {
        let kind = match self.get("domain") {
            None | Some("box") => DomainKind::UnitBox,
            Some("ball") => DomainKind::UnitBall,
            Some(v) => {
                return Err(CliError::Config(format!(
                    "key `domain`: expected box|ball, got `{v}`"
                )))
            }
        };
        match kind {
            DomainKind::UnitBox => Domain::unit_box(d),
            DomainKind::UnitBall => Domain::unit_ball(d),
        }
        .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn kernel(&self, base: &Path) -> Result<Kernel, CliError> {
        match self.get("kernel") {
            None | Some("constant") => Ok(Kernel::Constant),
            Some("gaussian") => {
                let sigma = self.f64("kernel.sigma", 1.0)?;
                Kernel::gaussian(sigma).map_err(|e| CliError::Config(e.to_string()))
            }
            Some("tabulated") => {
                let rel = self.get("kernel.table").ok_or_else(|| {
                    CliError::Config("kernel=tabulated requires `kernel.table`".into())
                })?;
                let samples = read_kernel_table(&base.join(rel))?;
                Kernel::tabulated(&samples).map_err(|e| CliError::Config(e.to_string()))
            }
            Some(v) => Err(CliError::Config(format!(
                "key `kernel`: expected constant|gaussian|tabulated, got `{v}`"
            ))),
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let sweep = match self.get("sweep") {
            None | Some("gauss_seidel") => Sweep::GaussSeidel,
            Some("jacobi") => Sweep::Jacobi,
            Some(v) => {
                return Err(CliError::Config(format!(
                    "key `sweep`: expected jacobi|gauss_seidel, got `{v}`"
                )))
            }
        };
        let init = match self.get("init") {
            None | Some("label_mean") => Init::LabelMean,
            Some("zeros") => Init::Zeros,
            Some(v) => {
                return Err(CliError::Config(format!(
                    "key `init`: expected label_mean|zeros, got `{v}`"
                )))
            }
        };
        Ok(SolverConfig {
            tol: self.f64("tol", 1e-8)?,
            max_iter: self.usize("max_iter", 200_000)?,
            sweep,
            damping: self.f64("damping", 1.0)?,
            init,
        })
    }

    pub fn out_dir(&self, flag: Option<&Path>) -> Result<PathBuf, CliError> {
        if let Some(p) = flag {
            return Ok(p.to_path_buf());
        }
        match self.get("out") {
            Some(p) => Ok(PathBuf::from(p)),
            None => Err(CliError::Config(
                "no output directory: set `out=` in the config or pass --out".into(),
            )),
        }
    }
}

/// Accumulates the fully-resolved key set a command actually used; written
/// as `config.resolved` so the run can be reproduced from it.
#[derive(Clone, Debug, Default)]
pub struct ResolvedConfig {
    values: BTreeMap<String, String>,
}

impl ResolvedConfig {
    pub fn set(&mut self, key: &str, value: impl Display) {
        debug_assert!(KNOWN_KEYS.contains(&key), "unknown resolved key {key}");
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.set(key, g17(value));
    }

    pub fn render(&self) -> String {
        let mut text = String::new();
        for (k, v) in &self.values {
            text.push_str(k);
            text.push('=');
            text.push_str(v);
            text.push('\n');
        }
        text
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        super::io::write_text(&out_dir.join("config.resolved"), &self.render())
    }
}
