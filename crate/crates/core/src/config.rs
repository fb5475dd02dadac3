//! JSON job configuration for the command-line tool.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::TorusAction;
use crate::indexcore::{MultiIndex, Partition, Space};
use crate::oracle::OracleMethod;
use crate::quad::{Method, QuadratureSpec};
use crate::symbolexpr::{parse, Expr, SymbolSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SpaceConfig {
    Projective { n: usize, m: u32 },
    Ball { n: usize, lambda: f64, cap: u32 },
}

impl SpaceConfig {
    pub fn n(&self) -> usize {
        match *self {
            SpaceConfig::Projective { n, .. } | SpaceConfig::Ball { n, .. } => n,
        }
    }

    pub fn space(&self) -> Space {
        match *self {
            SpaceConfig::Projective { m, .. } => Space::Projective { m },
            SpaceConfig::Ball { lambda, cap, .. } => Space::Ball { lambda, cap },
        }
    }
}

/// Symbol as written in a config file. Blocks are 1-based here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SymbolConfig {
    QuasiRadial {
        a: String,
    },
    MultiSphere {
        block: usize,
        #[serde(default = "one")]
        b: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<Vec<i64>>,
    },
    SingleSphere {
        block: usize,
        #[serde(default = "one")]
        b: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<Vec<i64>>,
    },
    Extended {
        block: usize,
        #[serde(default = "one")]
        b: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p: Option<Vec<i64>>,
    },
    Phase {
        p: Vec<i64>,
    },
    Product {
        factors: Vec<SymbolConfig>,
    },
}

fn one() -> String {
    "1".into()
}

impl SymbolConfig {
    pub fn to_spec(&self, k: &Partition) -> Result<SymbolSpec> {
        let block = |b: usize| -> Result<usize> {
            if b == 0 || b > k.len() {
                return Err(Error::Config(format!("block {b} out of range 1..={} for partition {k}", k.len())));
            }
            Ok(b - 1)
        };
        let shift = |j: usize, p: &Option<Vec<i64>>| p.clone().unwrap_or_else(|| vec![0; k.part(j)]);
        let expr = |s: &str| -> Result<Expr> { Ok(parse(s)?) };
        let spec = match self {
            SymbolConfig::QuasiRadial { a } => SymbolSpec::QuasiRadial { a: expr(a)? },
            SymbolConfig::MultiSphere { block: j, b, p } => {
                let j = block(*j)?;
                SymbolSpec::MultiSphere { block: j, b: expr(b)?, p: shift(j, p) }
            }
            SymbolConfig::SingleSphere { block: j, b, p } => {
                let j = block(*j)?;
                SymbolSpec::SingleSphere { block: j, b: expr(b)?, p: shift(j, p) }
            }
            SymbolConfig::Extended { block: j, b, p } => {
                let j = block(*j)?;
                SymbolSpec::Extended { block: j, b: expr(b)?, p: shift(j, p) }
            }
            SymbolConfig::Phase { p } => SymbolSpec::Phase { p: p.clone() },
            SymbolConfig::Product { factors } => {
                SymbolSpec::Product(factors.iter().map(|f| f.to_spec(k)).collect::<Result<_>>()?)
            }
        };
        spec.validate(k)?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// Orthonormal-basis entries for matrices; raw monomial coefficients when false.
    #[serde(default = "yes")]
    pub normalized: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    #[serde(flatten)]
    pub method: OracleMethod,
    /// Restricts the comparison to these α; all basis elements otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<Vec<u32>>>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { path: None, format: Format::Csv, normalized: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Actions to test; both tori by default.
    #[serde(default = "default_actions")]
    pub actions: Vec<TorusAction>,
}

fn default_trials() -> usize {
    1000
}

fn default_actions() -> Vec<TorusAction> {
    vec![TorusAction::FullTorus, TorusAction::PartitionTorus]
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { trials: default_trials(), seed: 0, actions: default_actions() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub space: SpaceConfig,
    pub partition: Vec<usize>,
    #[serde(default)]
    pub symbols: Vec<SymbolConfig>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Command-line overrides applied on top of a config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub quad_order: Option<usize>,
    pub mc_samples: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl JobConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.quadrature.seed = seed;
            self.geometry.seed = seed;
            if let OracleMethod::MonteCarlo { seed: s, .. } = &mut self.oracle.method {
                *s = seed;
            }
        }
        if let Some(q) = o.quad_order {
            if self.quadrature.method == Method::GaussJacobiTensor {
                self.quadrature.order = q;
            }
        }
        if let Some(nsamp) = o.mc_samples {
            if self.quadrature.method == Method::MonteCarlo {
                self.quadrature.order = nsamp;
            }
            if let OracleMethod::MonteCarlo { samples, .. } = &mut self.oracle.method {
                *samples = nsamp;
            }
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        if let Some(p) = &o.out {
            self.output.path = Some(p.clone());
        }
    }

    /// Single-line JSON of the effective config; part of every output header.
    /// The output path is left out so that reruns into other files match.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.output.path = None;
        serde_json::to_string(&c).expect("config serializes")
    }

    pub fn partition(&self) -> Result<Partition> {
        let k = Partition::new(self.partition.clone())?;
        if k.n() != self.space.n() {
            return Err(Error::Validation(format!(
                "partition {k} sums to {} but the space has n = {}",
                k.n(),
                self.space.n()
            )));
        }
        Ok(k)
    }

    pub fn symbols(&self, k: &Partition) -> Result<Vec<SymbolSpec>> {
        self.symbols
            .iter()
            .enumerate()
            .map(|(i, s)| s.to_spec(k).map_err(|e| tag(i, e)))
            .collect()
    }

    pub fn oracle_alphas(&self) -> Result<Option<Vec<MultiIndex>>> {
        let Some(list) = &self.oracle.alphas else { return Ok(None) };
        let n = self.space.n();
        list.iter()
            .map(|a| {
                if a.len() != n {
                    return Err(Error::Config(format!("oracle alpha {a:?} must have length {n}")));
                }
                Ok(MultiIndex::new(a.clone()))
            })
            .collect::<Result<_>>()
            .map(Some)
    }
}

fn tag(i: usize, e: Error) -> Error {
    match e {
        Error::Validation(m) => Error::Validation(format!("symbol {}: {m}", i + 1)),
        Error::Config(m) => Error::Config(format!("symbol {}: {m}", i + 1)),
        other => other,
    }
}
