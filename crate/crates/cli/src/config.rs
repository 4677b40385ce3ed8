//! Experiment configuration: JSON file plus `--set key.path=value` flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rapidmix_core::correlations::ClusteringMeasure;
use rapidmix_core::davies::{BohrMode, ChiKind, Couplings};
use rapidmix_core::hamiltonian::{GibbsEnsemble, ModelSpec, Potential};
use rapidmix_core::lattice::{GraphKind, Region, SpinGraph};
use rapidmix_core::linalg::MAX_DIM;
use rapidmix_core::superop::DENSE_SUPEROP_MAX_DIM;
use rapidmix_core::tensor::ipow;
use rapidmix_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Verify,
    ScanClustering,
    DaviesGap,
    Mlsi,
    Mix,
    Tensorize,
    Report,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Verify => "verify",
            Experiment::ScanClustering => "scan-clustering",
            Experiment::DaviesGap => "davies-gap",
            Experiment::Mlsi => "mlsi",
            Experiment::Mix => "mix",
            Experiment::Tensorize => "tensorize",
            Experiment::Report => "report",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphName {
    Chain,
    BaryTree,
    Grid2d,
    Custom,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    #[serde(default = "default_graph_kind")]
    pub kind: GraphName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    #[serde(default = "default_d")]
    pub d: usize,
}

fn default_graph_kind() -> GraphName {
    GraphName::Chain
}

fn default_d() -> usize {
    2
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            kind: GraphName::Chain,
            n: Some(4),
            b: None,
            height: None,
            w: None,
            h: None,
            edges: None,
            d: 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Ising,
    Potts,
    RandomCommuting,
    Heisenberg,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "default_model_kind")]
    pub kind: ModelName,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(rename = "J", default, skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jz: Option<f64>,
}

fn default_model_kind() -> ModelName {
    ModelName::Ising
}

fn default_beta() -> f64 {
    0.5
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelName::Ising,
            beta: default_beta(),
            j: None,
            g: None,
            seed: None,
            jx: None,
            jy: None,
            jz: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingName {
    X,
    Xyz,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DaviesConfig {
    #[serde(default = "default_chi")]
    pub chi: ChiKind,
    #[serde(default = "default_couplings")]
    pub couplings: CouplingName,
    #[serde(default = "default_bohr")]
    pub bohr: BohrMode,
}

fn default_chi() -> ChiKind {
    ChiKind::Glauber
}
fn default_couplings() -> CouplingName {
    CouplingName::Xyz
}
fn default_bohr() -> BohrMode {
    BohrMode::Local
}

impl Default for DaviesConfig {
    fn default() -> Self {
        DaviesConfig {
            chi: default_chi(),
            couplings: default_couplings(),
            bohr: default_bohr(),
        }
    }
}

impl DaviesConfig {
    pub fn couplings(&self) -> Couplings {
        match self.couplings {
            CouplingName::X => Couplings::X,
            CouplingName::Xyz => Couplings::Xyz,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    #[serde(default = "default_max_hilbert")]
    pub max_hilbert_dim: usize,
    #[serde(default = "default_max_superop")]
    pub max_superop_dim: usize,
    #[serde(default = "default_max_seconds")]
    pub max_seconds: f64,
}

fn default_max_hilbert() -> usize {
    MAX_DIM
}
fn default_max_superop() -> usize {
    DENSE_SUPEROP_MAX_DIM
}
fn default_max_seconds() -> f64 {
    900.0
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_hilbert_dim: default_max_hilbert(),
            max_superop_dim: default_max_superop(),
            max_seconds: default_max_seconds(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measures: Option<Vec<ClusteringMeasure>>,
    #[serde(default)]
    pub start: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ls: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixConfig {
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_mix_states")]
    pub random_states: usize,
    #[serde(default = "default_mix_grid")]
    pub grid: usize,
    #[serde(default = "default_traj_points")]
    pub trajectory_points: usize,
    #[serde(default)]
    pub local_regions: Vec<Region>,
}

fn default_eps() -> Vec<f64> {
    vec![0.01]
}
fn default_mix_states() -> usize {
    8
}
fn default_mix_grid() -> usize {
    400
}
fn default_traj_points() -> usize {
    100
}

impl Default for MixConfig {
    fn default() -> Self {
        MixConfig {
            eps: default_eps(),
            random_states: default_mix_states(),
            grid: default_mix_grid(),
            trajectory_points: default_traj_points(),
            local_regions: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlsiConfig {
    #[serde(default = "d_random_seeds")]
    pub random_seeds: usize,
    #[serde(default = "d_product_seeds")]
    pub product_seeds: usize,
    #[serde(default = "d_near_fixed")]
    pub near_fixed_seeds: usize,
    #[serde(default = "d_optimized")]
    pub optimized: usize,
    #[serde(default = "d_iterations")]
    pub iterations: usize,
    /// Ancilla dimension for the complete-MLSI probe; none skips it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ancilla: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
}

fn d_random_seeds() -> usize {
    8
}
fn d_product_seeds() -> usize {
    4
}
fn d_near_fixed() -> usize {
    4
}
fn d_optimized() -> usize {
    6
}
fn d_iterations() -> usize {
    80
}

impl Default for MlsiConfig {
    fn default() -> Self {
        MlsiConfig {
            random_seeds: d_random_seeds(),
            product_seeds: d_product_seeds(),
            near_fixed_seeds: d_near_fixed(),
            optimized: d_optimized(),
            iterations: d_iterations(),
            ancilla: None,
            sizes: None,
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    /// Chain lengths to sweep (chains only); defaults to the configured graph.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TensorizeConfig {
    #[serde(default = "d_restarts")]
    pub restarts: usize,
    #[serde(default = "d_t_states")]
    pub random_states: usize,
    #[serde(default = "d_l0")]
    pub l0: usize,
    /// Prefix lengths of the lattice for the C(L) curve; empty skips it.
    #[serde(default)]
    pub c_of_l_sizes: Vec<usize>,
    #[serde(default)]
    pub assembly: bool,
}

fn d_restarts() -> usize {
    2
}
fn d_t_states() -> usize {
    2
}
fn d_l0() -> usize {
    2
}

impl Default for TensorizeConfig {
    fn default() -> Self {
        TensorizeConfig {
            restarts: d_restarts(),
            random_states: d_t_states(),
            l0: d_l0(),
            c_of_l_sizes: Vec::new(),
            assembly: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub davies: DaviesConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub scan: ScanConfig,
    #[serde(default)]
    pub mix: MixConfig,
    #[serde(default)]
    pub mlsi: MlsiConfig,
    #[serde(default)]
    pub gap: GapConfig,
    #[serde(default)]
    pub tensorize: TensorizeConfig,
}

fn default_seed() -> u64 {
    7
}
fn default_output() -> PathBuf {
    PathBuf::from("rapidmix-out")
}
fn default_threads() -> usize {
    1
}

fn config_err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{path}: {msg}"))
}

/// Parses `value` as JSON when possible, otherwise as a string.
fn flag_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

/// Sets `key.path` in a JSON tree, creating objects along the way.
pub fn apply_override(tree: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key.path=value")))?;
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_err(path, "empty key in override path"));
    }
    let mut node = tree;
    for (i, k) in keys.iter().enumerate() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| config_err(&keys[..i].join("."), "not an object"))?;
        if i + 1 == keys.len() {
            obj.insert(k.to_string(), flag_value(raw));
            return Ok(());
        }
        node = obj.entry(k.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("the loop returns on the last key")
}

/// Reads the optional file, applies the overrides in order and validates.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut tree = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str::<Value>(&text)
                .map_err(|e| Error::Config(format!("{}: invalid JSON: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !tree.is_object() {
        return Err(Error::Config("the configuration must be a JSON object".into()));
    }
    for o in overrides {
        apply_override(&mut tree, o)?;
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(tree).map_err(|e| {
        let p = e.path().to_string();
        Error::Config(format!("{p}: {}", e.into_inner()))
    })?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let m = &self.model;
        if !(m.beta >= 0.0) || !m.beta.is_finite() {
            return Err(config_err("model.beta", format!("must be finite and >= 0, got {}", m.beta)));
        }
        let allowed: &[&str] = match m.kind {
            ModelName::Ising => &["J", "g"],
            ModelName::Potts => &["J"],
            ModelName::RandomCommuting => &["seed"],
            ModelName::Heisenberg => &["jx", "jy", "jz"],
        };
        let given = [
            ("J", m.j.is_some()),
            ("g", m.g.is_some()),
            ("seed", m.seed.is_some()),
            ("jx", m.jx.is_some()),
            ("jy", m.jy.is_some()),
            ("jz", m.jz.is_some()),
        ];
        for (k, set) in given {
            if set && !allowed.contains(&k) {
                return Err(config_err(&format!("model.{k}"), "not a parameter of this model"));
            }
        }
        let g = &self.graph;
        let allowed: &[&str] = match g.kind {
            GraphName::Chain => &["n"],
            GraphName::BaryTree => &["b", "height"],
            GraphName::Grid2d => &["w", "h"],
            GraphName::Custom => &["n", "edges"],
        };
        let given = [
            ("n", g.n.is_some()),
            ("b", g.b.is_some()),
            ("height", g.height.is_some()),
            ("w", g.w.is_some()),
            ("h", g.h.is_some()),
            ("edges", g.edges.is_some()),
        ];
        for (k, set) in given {
            if set && !allowed.contains(&k) {
                return Err(config_err(&format!("graph.{k}"), "not a parameter of this graph kind"));
            }
            if !set && allowed.contains(&k) {
                return Err(config_err(&format!("graph.{k}"), "required for this graph kind"));
            }
        }
        if g.d < 2 {
            return Err(config_err("graph.d", "must be >= 2"));
        }
        if self.limits.max_hilbert_dim > MAX_DIM || self.limits.max_hilbert_dim == 0 {
            return Err(config_err("limits.max_hilbert_dim", format!("must lie in 1..={MAX_DIM}")));
        }
        if self.limits.max_superop_dim > DENSE_SUPEROP_MAX_DIM || self.limits.max_superop_dim == 0 {
            return Err(config_err(
                "limits.max_superop_dim",
                format!("must lie in 1..={DENSE_SUPEROP_MAX_DIM}"),
            ));
        }
        if !(self.limits.max_seconds > 0.0) {
            return Err(config_err("limits.max_seconds", "must be positive"));
        }
        if self.threads == 0 {
            return Err(config_err("threads", "must be >= 1"));
        }
        if self.mix.eps.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(config_err("mix.eps", "every ε must lie in (0, 1)"));
        }
        if let Some(ls) = &self.scan.ls {
            if ls.len() < 3 {
                return Err(config_err("scan.ls", "needs at least three separations"));
            }
        }
        if let Some(0) | Some(1) = self.mlsi.ancilla {
            return Err(config_err("mlsi.ancilla", "must be >= 2"));
        }
        Ok(())
    }

    /// Worker count: the configured value, capped by RAPIDMIX_THREADS.
    pub fn workers(&self) -> usize {
        match std::env::var("RAPIDMIX_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
            Some(t) if t > 0 => self.threads.min(t),
            _ => self.threads,
        }
    }

    pub fn graph_kind(&self) -> GraphKind {
        let g = &self.graph;
        match g.kind {
            GraphName::Chain => GraphKind::Chain { n: g.n.unwrap() },
            GraphName::BaryTree => GraphKind::BaryTree {
                b: g.b.unwrap(),
                height: g.height.unwrap(),
            },
            GraphName::Grid2d => GraphKind::Grid2d {
                w: g.w.unwrap(),
                h: g.h.unwrap(),
            },
            GraphName::Custom => GraphKind::Custom {
                n: g.n.unwrap(),
                edges: g.edges.clone().unwrap(),
            },
        }
    }

    pub fn model_spec(&self) -> ModelSpec {
        let m = &self.model;
        match m.kind {
            ModelName::Ising => ModelSpec::Ising {
                j: m.j.unwrap_or(1.0),
                g: m.g.unwrap_or(0.0),
            },
            ModelName::Potts => ModelSpec::Potts { j: m.j.unwrap_or(1.0) },
            ModelName::RandomCommuting => ModelSpec::RandomCommuting {
                seed: m.seed.unwrap_or(self.seed),
            },
            ModelName::Heisenberg => ModelSpec::Heisenberg {
                jx: m.jx.unwrap_or(1.0),
                jy: m.jy.unwrap_or(1.0),
                jz: m.jz.unwrap_or(1.0),
            },
        }
    }

    fn check_dim(&self, g: &SpinGraph) -> Result<()> {
        let dim = ipow(g.d, g.n());
        if g.n() > 40 || dim > self.limits.max_hilbert_dim {
            return Err(Error::Resource(format!(
                "Hilbert dimension {}^{} exceeds limits.max_hilbert_dim = {}",
                g.d,
                g.n(),
                self.limits.max_hilbert_dim
            )));
        }
        Ok(())
    }

    pub fn graph(&self) -> Result<SpinGraph> {
        let g = SpinGraph::build(self.graph_kind(), self.graph.d)?;
        self.check_dim(&g)?;
        Ok(g)
    }

    /// The configured model on `g` at the configured β.
    pub fn ensemble_on(&self, g: &SpinGraph) -> Result<Arc<GibbsEnsemble>> {
        self.check_dim(g)?;
        let p = Potential::build(g, self.model_spec())?;
        Ok(Arc::new(GibbsEnsemble::new(p, self.model.beta)?))
    }

    pub fn ensemble(&self) -> Result<Arc<GibbsEnsemble>> {
        self.ensemble_on(&self.graph()?)
    }

    /// The clustering measures to scan, the six of the equivalence by default.
    pub fn measures(&self) -> Vec<ClusteringMeasure> {
        self.scan.measures.clone().unwrap_or_else(|| ClusteringMeasure::SIX.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_chain() {
        let cfg = parse_config(None, &["graph.kind=chain".into(), "graph.n=4".into(), "model.kind=ising".into(), "model.beta=0.5".into()]).unwrap();
        assert_eq!(cfg.graph.n, Some(4));
        assert_eq!(cfg.model.beta, 0.5);
        assert!(cfg.ensemble().is_ok());
    }

    #[test]
    fn rejects_bad_values_with_paths() {
        let e = parse_config(None, &["model.beta=-1".into()]).unwrap_err();
        assert!(e.to_string().contains("model.beta"), "{e}");
        let e = parse_config(None, &["model.bogus=1".into()]).unwrap_err();
        assert!(e.to_string().contains("model"), "{e}");
        let e = parse_config(None, &["graph.kind=grid2d".into(), "graph.n=null".into(), "graph.w=2".into()]).unwrap_err();
        assert!(e.to_string().contains("graph.h"), "{e}");
        let e = parse_config(None, &["model.kind=potts".into(), "model.g=1".into()]).unwrap_err();
        assert!(e.to_string().contains("model.g"), "{e}");
        assert!(matches!(parse_config(None, &["noequals".into()]), Err(Error::Config(_))));
        let e = parse_config(None, &["limits.max_superop_dim=4096".into()]).unwrap_err();
        assert!(e.to_string().contains("limits.max_superop_dim"));
    }

    #[test]
    fn resource_limit() {
        let cfg = parse_config(None, &["graph.n=13".into()]).unwrap();
        assert!(matches!(cfg.ensemble(), Err(Error::Resource(_))));
        let cfg = parse_config(None, &["graph.n=6".into(), "limits.max_hilbert_dim=32".into()]).unwrap();
        assert!(matches!(cfg.ensemble(), Err(Error::Resource(_))));
    }
}
