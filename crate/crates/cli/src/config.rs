//! Run configuration: a TOML document with a versioned `schema` key.
//!
//! ```toml
//! schema = 1
//! seed = 42
//! n_units = 200
//!
//! [network]
//! k = 4
//!
//! [model]
//! rho = 0.4
//!
//! [[assignment]]
//! label = "exogenous"
//! mode = "exogenous"
//!
//! [[assignment]]
//! label = "confounded"
//! mode = "confounded"
//! kappa = 1.0
//!
//! [mc]
//! n_reps = 500
//! ```
//!
//! Every section is optional; unknown keys are rejected. Errors carry the
//! line of the offending key where it can be located.

use std::fmt;
use std::path::{Path, PathBuf};

use interdep::mcharness::{Estimator, ExperimentConfig};
use interdep::{AssignmentMode, AssignmentSpec, NetworkParams, StructuralParams};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{l}: {}", self.source, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema: u32,
    #[serde(default = "default_seed")]
    seed: u64,
    #[serde(default = "default_n_units")]
    n_units: usize,
    #[serde(default)]
    network: NetworkSection,
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    assignment: Vec<AssignmentBlock>,
    #[serde(default)]
    mc: McSection,
    #[serde(default)]
    fit: FitSection,
}

fn default_seed() -> u64 {
    42
}

fn default_n_units() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub k: usize,
    pub decay: f64,
    pub econ_weight: f64,
    pub row_normalize: bool,
    pub coord_dim: usize,
    pub econ_dim: usize,
}

impl Default for NetworkSection {
    fn default() -> Self {
        let p = NetworkParams::default();
        Self { k: p.k, decay: p.decay, econ_weight: p.econ_weight, row_normalize: p.row_normalize, coord_dim: 2, econ_dim: 1 }
    }
}

impl NetworkSection {
    pub fn params(&self) -> NetworkParams {
        NetworkParams { k: self.k, decay: self.decay, econ_weight: self.econ_weight, row_normalize: self.row_normalize }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ModelSection {
    beta: Option<f64>,
    rho: Option<f64>,
    /// Defaults to 0.5 per economic attribute.
    gamma: Option<Vec<f64>>,
    sigma: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssignmentBlock {
    label: String,
    mode: AssignmentMode,
    #[serde(default = "default_p")]
    p: f64,
    kappa: Option<f64>,
}

fn default_p() -> f64 {
    0.5
}

/// Confounding strength when a confounded block does not set `kappa`.
pub const DEFAULT_KAPPA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub n_reps: usize,
    pub estimators: Vec<Estimator>,
    /// Linked and unlinked pairs sampled for the spillover check.
    pub spillover_linked: usize,
    pub spillover_unlinked: usize,
    pub bins: usize,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            n_reps: 500,
            estimators: vec![Estimator::SarMl, Estimator::Ols],
            spillover_linked: 10,
            spillover_unlinked: 5,
            bins: 30,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// Label of the assignment block used to simulate the fitted population.
    pub assignment: Option<String>,
    /// Population CSV to fit instead of simulating one.
    pub population: Option<PathBuf>,
}

/// A labelled assignment mechanism.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub label: String,
    pub spec: AssignmentSpec,
}

/// Validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub n_units: usize,
    pub network: NetworkSection,
    pub params: StructuralParams,
    pub blocks: Vec<Block>,
    pub mc: McSection,
    pub fit: FitSection,
    /// Directory relative paths in the config resolve against.
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_toml("schema = 1\n", "<defaults>", Path::new(".")).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let source = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { source: source.clone(), line: None, message: e.to_string() })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &source, &base)
    }

    pub fn from_toml(text: &str, source: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let err = |line: Option<usize>, message: String| ConfigError { source: source.to_string(), line, message };
        let raw: RawConfig = toml::from_str(text)
            .map_err(|e| err(e.span().map(|s| line_of(text, s.start)), e.message().trim().to_string()))?;
        let at = |table: Option<(&str, usize)>, key: &str, message: String| err(key_line(text, table, key), message);

        if raw.schema != SCHEMA_VERSION {
            return Err(at(None, "schema", format!("unsupported schema {}; expected {SCHEMA_VERSION}", raw.schema)));
        }
        if raw.n_units < 2 {
            return Err(at(None, "n_units", format!("n_units must be at least 2, got {}", raw.n_units)));
        }

        let net = &raw.network;
        let nt = Some(("network", 0));
        if net.k == 0 || net.k >= raw.n_units {
            return Err(at(nt, "k", format!("k = {} must lie in [1, n_units) with n_units = {}", net.k, raw.n_units)));
        }
        if !(net.decay.is_finite() && net.decay >= 0.0) {
            return Err(at(nt, "decay", format!("decay must be finite and >= 0, got {}", net.decay)));
        }
        if !(0.0..=1.0).contains(&net.econ_weight) {
            return Err(at(nt, "econ_weight", format!("econ_weight must lie in [0, 1], got {}", net.econ_weight)));
        }
        if net.coord_dim == 0 {
            return Err(at(nt, "coord_dim", "coord_dim must be at least 1".into()));
        }

        let defaults = StructuralParams::default();
        let m = &raw.model;
        let mt = Some(("model", 0));
        let params = StructuralParams {
            beta: m.beta.unwrap_or(defaults.beta),
            rho: m.rho.unwrap_or(defaults.rho),
            gamma: m.gamma.clone().unwrap_or_else(|| vec![0.5; net.econ_dim]),
            sigma: m.sigma.unwrap_or(defaults.sigma),
        };
        for (key, v) in [("beta", params.beta), ("rho", params.rho)] {
            if !v.is_finite() {
                return Err(at(mt, key, format!("{key} must be finite, got {v}")));
            }
        }
        if !(params.sigma.is_finite() && params.sigma >= 0.0) {
            return Err(at(mt, "sigma", format!("sigma must be finite and >= 0, got {}", params.sigma)));
        }
        if params.gamma.len() != net.econ_dim {
            return Err(at(
                mt,
                "gamma",
                format!("gamma has {} entries but network.econ_dim is {}", params.gamma.len(), net.econ_dim),
            ));
        }
        if params.gamma.iter().any(|g| !g.is_finite()) {
            return Err(at(mt, "gamma", "gamma entries must be finite".into()));
        }

        let mut blocks = Vec::new();
        for (i, b) in raw.assignment.iter().enumerate() {
            let bt = Some(("assignment", i));
            if b.label.is_empty() || b.label.contains(['/', ',', '"']) || b.label.contains(char::is_whitespace) {
                return Err(at(bt, "label", format!("label '{}' must be non-empty without '/', ',', quotes or spaces", b.label)));
            }
            if blocks.iter().any(|x: &Block| x.label == b.label) {
                return Err(at(bt, "label", format!("duplicate assignment label '{}'", b.label)));
            }
            if !(b.p > 0.0 && b.p < 1.0) {
                return Err(at(bt, "p", format!("p must lie strictly between 0 and 1, got {}", b.p)));
            }
            let spec = match (b.mode, b.kappa) {
                (AssignmentMode::Exogenous, Some(_)) => {
                    return Err(at(bt, "kappa", "kappa applies only to confounded assignment".into()));
                }
                (AssignmentMode::Exogenous, None) => AssignmentSpec::exogenous(b.p),
                (AssignmentMode::Confounded, k) => {
                    let k = k.unwrap_or(DEFAULT_KAPPA);
                    if !k.is_finite() {
                        return Err(at(bt, "kappa", format!("kappa must be finite, got {k}")));
                    }
                    AssignmentSpec::confounded(b.p, k)
                }
            };
            blocks.push(Block { label: b.label.clone(), spec });
        }
        if blocks.is_empty() {
            blocks.push(Block { label: "exogenous".into(), spec: AssignmentSpec::exogenous(0.5) });
        }

        let mc = raw.mc.clone();
        let ct = Some(("mc", 0));
        if mc.n_reps == 0 {
            return Err(at(ct, "n_reps", "n_reps must be at least 1".into()));
        }
        if mc.estimators.is_empty() {
            return Err(at(ct, "estimators", "at least one estimator is required".into()));
        }
        if mc.bins == 0 {
            return Err(at(ct, "bins", "bins must be at least 1".into()));
        }
        if let Some(label) = &raw.fit.assignment {
            if !blocks.iter().any(|b| &b.label == label) {
                return Err(at(Some(("fit", 0)), "assignment", format!("no assignment block labelled '{label}'")));
            }
        }

        let cfg = RunConfig {
            seed: raw.seed,
            n_units: raw.n_units,
            network: raw.network,
            params,
            blocks,
            mc,
            fit: raw.fit,
            base_dir: base_dir.to_path_buf(),
        };
        for i in 0..cfg.blocks.len() {
            cfg.experiment(i).validate().map_err(|e| err(None, e.to_string()))?;
        }
        Ok(cfg)
    }

    /// The Monte Carlo design for assignment block `i`.
    pub fn experiment(&self, i: usize) -> ExperimentConfig {
        ExperimentConfig {
            n_units: self.n_units,
            n_reps: self.mc.n_reps,
            seed: self.seed,
            coord_dim: self.network.coord_dim,
            econ_dim: self.network.econ_dim,
            network: self.network.params(),
            params: self.params.clone(),
            assignment: self.blocks[i].spec,
            estimators: self.mc.estimators.clone(),
        }
    }

    pub fn fit_block(&self) -> &Block {
        match &self.fit.assignment {
            Some(label) => self.blocks.iter().find(|b| &b.label == label).expect("label checked on load"),
            None => &self.blocks[0],
        }
    }

    pub fn population_path(&self) -> Option<PathBuf> {
        self.fit.population.as_ref().map(|p| self.base_dir.join(p))
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `key = ...` inside `table` (`None` for the root table;
/// `(name, i)` for the `i`-th `[name]` or `[[name]]` header).
fn key_line(text: &str, table: Option<(&str, usize)>, key: &str) -> Option<usize> {
    let mut current: Option<(String, usize)> = None;
    let mut seen: Vec<(String, usize)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(h) = t.strip_prefix('[') {
            let name = h.trim_start_matches('[').split(']').next().unwrap_or("").trim().to_string();
            let idx = match seen.iter_mut().find(|(n, _)| *n == name) {
                Some((_, c)) => {
                    *c += 1;
                    *c
                }
                None => {
                    seen.push((name.clone(), 0));
                    0
                }
            };
            current = Some((name, idx));
            continue;
        }
        let here = current.as_ref().map(|(n, i)| (n.as_str(), *i));
        if here != table {
            continue;
        }
        if let Some(rest) = t.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(ln + 1);
            }
        }
    }
    match table {
        // Fall back to the table header itself.
        Some((name, i)) => text
            .lines()
            .enumerate()
            .filter(|(_, l)| {
                let t = l.trim();
                t.starts_with('[') && t.trim_start_matches('[').split(']').next().map(str::trim) == Some(name)
            })
            .nth(i)
            .map(|(ln, _)| ln + 1),
        None => None,
    }
}
