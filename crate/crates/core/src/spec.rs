//! Declarative state, observable and topology specifications shared by the
//! CLI and the acceptance suite.
//!
//! State grammar (JSON):
//!
//! ```json
//! {"family": "ghz", "params": {"parties": 3, "dim": 2}, "visibility": 0.6}
//! ```
//!
//! Families and their params: `ghz` (`parties`, `dim`, `levels`: `"full"` or
//! `[i, j]`), `w`, `dicke` (`k`), `cluster4`, `bell` (`dim`), `btn`
//! (`sources`: three bipartite specs in order `a, b, c`), and `file` (`path`
//! to an NCMX matrix, `dims`, optional `labels`). An optional top-level
//! `split: [d1, d2]` refines every factor into two.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::covariance::{covariance_matrix, BlockCovarianceMatrix};
use crate::criteria::{
    prop2_report, trace_norm_criterion, xi_psd_report, CriterionReport, NetworkTopology, SplitBases,
};
use crate::error::{Error, Result};
use crate::observables::{cluster_set, full_product_set, pauli_z_set, w_set, ObservableSet};
use crate::states::{self, DensityOperator, GhzLevels};
use crate::tensor::{ncmx::load_ncmx, SubsystemLayout};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<[usize; 2]>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GhzParams {
    #[serde(default = "three")]
    parties: usize,
    #[serde(default = "two")]
    dim: usize,
    #[serde(default)]
    levels: Option<LevelsParam>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum LevelsParam {
    Name(String),
    Pair([usize; 2]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DickeParams {
    k: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BellParams {
    #[serde(default = "two")]
    dim: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BtnParams {
    sources: [StateSpec; 3],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileParams {
    path: PathBuf,
    dims: Vec<usize>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

fn two() -> usize {
    2
}

fn three() -> usize {
    3
}

fn params<T: serde::de::DeserializeOwned>(family: &str, p: &Map<String, Value>) -> Result<T> {
    serde_json::from_value(Value::Object(p.clone()))
        .map_err(|e| Error::Spec(format!("bad params for family `{family}`: {e}")))
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|k| ((b'A' + (k % 26) as u8) as char).to_string()).collect()
}

impl StateSpec {
    pub fn new(family: &str) -> Self {
        Self {
            family: family.to_string(),
            params: Map::new(),
            visibility: None,
            split: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn visibility(mut self, v: f64) -> Self {
        self.visibility = Some(v);
        self
    }

    pub fn split(mut self, d1: usize, d2: usize) -> Self {
        self.split = Some([d1, d2]);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("state spec serializes")
    }

    /// Relative `file` paths resolve against `base`.
    pub fn build_in(&self, base: &Path) -> Result<DensityOperator> {
        let f = self.family.as_str();
        let rho = match f {
            "ghz" => {
                let p: GhzParams = params(f, &self.params)?;
                let levels = match p.levels {
                    None => GhzLevels::Pair(0, p.dim.saturating_sub(1)),
                    Some(LevelsParam::Name(n)) if n == "full" => GhzLevels::Full,
                    Some(LevelsParam::Name(n)) => return Err(Error::Spec(format!("unknown GHZ levels `{n}`"))),
                    Some(LevelsParam::Pair([i, j])) => GhzLevels::Pair(i, j),
                };
                states::ghz_state(p.parties, p.dim, levels)?
            }
            "w" => {
                params::<NoParams>(f, &self.params)?;
                states::w_state()
            }
            "dicke" => states::dicke_state(params::<DickeParams>(f, &self.params)?.k)?,
            "cluster4" => {
                params::<NoParams>(f, &self.params)?;
                states::cluster4_state()
            }
            "bell" => states::bell_pair(params::<BellParams>(f, &self.params)?.dim)?,
            "btn" => {
                let p: BtnParams = params(f, &self.params)?;
                let [a, b, c] = &p.sources;
                states::btn_assemble(&a.build_in(base)?, &b.build_in(base)?, &c.build_in(base)?)?
            }
            "file" => {
                let p: FileParams = params(f, &self.params)?;
                let path = if p.path.is_relative() { base.join(&p.path) } else { p.path.clone() };
                let m = load_ncmx(&path)?;
                let labels = p.labels.unwrap_or_else(|| default_labels(p.dims.len()));
                DensityOperator::new(m, SubsystemLayout::new(p.dims, labels)?)?
            }
            other => return Err(Error::Spec(format!("unknown state family `{other}`"))),
        };
        let rho = match self.visibility {
            Some(v) => states::mix_white_noise(&rho, v)?,
            None => rho,
        };
        match self.split {
            Some([d1, d2]) => rho.split_factors(d1, d2),
            None => Ok(rho),
        }
    }

    pub fn build(&self) -> Result<DensityOperator> {
        self.build_in(Path::new("."))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservablesSpec {
    PauliZ,
    WSet,
    FullProduct,
    ClusterSet,
}

impl ObservablesSpec {
    pub fn name(self) -> &'static str {
        match self {
            Self::PauliZ => "pauli-z",
            Self::WSet => "w-set",
            Self::FullProduct => "full-product",
            Self::ClusterSet => "cluster-set",
        }
    }

    pub fn build(self, rho: &DensityOperator) -> Result<ObservableSet> {
        let nodes = rho.nodes();
        match self {
            Self::PauliZ => pauli_z_set(rho.layout(), &nodes),
            Self::WSet => w_set(rho.layout(), &nodes),
            Self::FullProduct => full_product_set(rho.layout(), &nodes),
            Self::ClusterSet => cluster_set(rho.layout(), &nodes),
        }
    }
}

impl FromStr for ObservablesSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pauli-z" => Ok(Self::PauliZ),
            "w-set" => Ok(Self::WSet),
            "full-product" => Ok(Self::FullProduct),
            "cluster-set" => Ok(Self::ClusterSet),
            other => Err(Error::Spec(format!(
                "unknown observable set `{other}` (expected pauli-z, w-set, full-product or cluster-set)"
            ))),
        }
    }
}

/// Named topology or a JSON file.
#[derive(Clone, Debug, PartialEq)]
pub enum TopologySpec {
    Triangle,
    /// One bipartite source per node pair of the state.
    Pairwise,
    Ring,
    FiveNode,
    File(PathBuf),
}

impl FromStr for TopologySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "triangle" => Self::Triangle,
            "pairwise" => Self::Pairwise,
            "ring" => Self::Ring,
            "five-node" => Self::FiveNode,
            path if path.ends_with(".json") => Self::File(PathBuf::from(path)),
            other => {
                return Err(Error::Spec(format!(
                    "unknown topology `{other}` (expected triangle, pairwise, ring, five-node or a .json file)"
                )))
            }
        })
    }
}

impl TopologySpec {
    pub fn build<S: AsRef<str>>(&self, node_labels: &[S]) -> Result<NetworkTopology> {
        match self {
            Self::Triangle => Ok(NetworkTopology::triangle()),
            Self::Pairwise => NetworkTopology::pairwise(node_labels),
            Self::Ring => NetworkTopology::ring(node_labels),
            Self::FiveNode => Ok(NetworkTopology::five_node_example()),
            Self::File(path) => NetworkTopology::from_json(&std::fs::read_to_string(path)?),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriterionKind {
    TraceNorm,
    XiPsd,
    BtnResidual,
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace-norm" => Ok(Self::TraceNorm),
            "xi-psd" => Ok(Self::XiPsd),
            "btn-residual" => Ok(Self::BtnResidual),
            other => Err(Error::Spec(format!(
                "unknown criterion `{other}` (expected trace-norm, xi-psd or btn-residual)"
            ))),
        }
    }
}

/// A state family, an observable set, a topology and a criterion; evaluated
/// at a visibility to produce a report.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub state: StateSpec,
    pub observables: ObservablesSpec,
    pub topology: TopologySpec,
    pub criterion: CriterionKind,
}

impl Scenario {
    pub fn covariance(&self, rho: &DensityOperator) -> Result<BlockCovarianceMatrix> {
        covariance_matrix(&self.observables.build(rho)?, rho)
    }

    /// Evaluates the criterion on the spec's state.
    pub fn evaluate(&self) -> Result<CriterionReport> {
        self.evaluate_spec(&self.state)
    }

    /// Evaluates the criterion with the visibility replaced by `v`.
    pub fn evaluate_at(&self, v: f64) -> Result<CriterionReport> {
        let mut spec = self.state.clone();
        spec.visibility = Some(v);
        self.evaluate_spec(&spec)
    }

    fn evaluate_spec(&self, spec: &StateSpec) -> Result<CriterionReport> {
        let rho = spec.build()?;
        let mut report = match self.criterion {
            CriterionKind::TraceNorm => {
                let gamma = self.covariance(&rho)?;
                let topo = self.topology.build(gamma.node_labels())?;
                let mut r = trace_norm_criterion(&gamma, &topo)?;
                r.topology = Some(serde_json::to_value(&topo)?);
                r.observables_spec = Some(self.observables.name().to_string());
                r
            }
            CriterionKind::XiPsd | CriterionKind::BtnResidual => {
                let split = SplitBases::gell_mann(rho.layout(), rho.nodes())?;
                let mut r = if self.criterion == CriterionKind::XiPsd {
                    xi_psd_report(&rho, &split)?
                } else {
                    prop2_report(&rho, &split)?
                };
                r.observables_spec = Some(ObservablesSpec::FullProduct.name().to_string());
                r
            }
        };
        report.state_spec = Some(spec.to_value());
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_grammar() {
        let s = StateSpec::from_json(r#"{"family":"ghz","params":{"parties":4,"dim":2},"visibility":0.5}"#).unwrap();
        let rho = s.build().unwrap();
        assert_eq!(rho.layout().dims(), [2, 2, 2, 2]);
        assert!(StateSpec::from_json(r#"{"family":"ghz","bogus":1}"#).is_err());
        let bad = StateSpec::from_json(r#"{"family":"ghz","params":{"partys":4}}"#).unwrap();
        assert!(matches!(bad.build(), Err(Error::Spec(_))));
        assert!(StateSpec::new("nope").build().is_err());
    }

    #[test]
    fn ghz_levels_param() {
        let full = StateSpec::new("ghz").param("dim", 4).param("levels", "full").build().unwrap();
        assert!((full.matrix()[(0, 21)].re - 0.25).abs() < 1e-15);
        let pair = StateSpec::new("ghz").param("dim", 4).build().unwrap();
        assert!((pair.matrix()[(0, 63)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn btn_spec() {
        let bell = serde_json::json!({"family": "bell"});
        let s = StateSpec::from_json(&serde_json::json!({"family": "btn", "params": {"sources": [bell, bell, bell]}}).to_string())
            .unwrap();
        assert_eq!(s.build().unwrap().layout().labels(), ["A1", "A2", "B1", "B2", "C1", "C2"]);
    }

    #[test]
    fn scenario_report_carries_specs() {
        let sc = Scenario {
            state: StateSpec::new("ghz").visibility(0.6),
            observables: ObservablesSpec::PauliZ,
            topology: TopologySpec::Triangle,
            criterion: CriterionKind::TraceNorm,
        };
        let r = sc.evaluate().unwrap();
        assert!(!r.pass);
        assert!((r.rhs - 3.6).abs() < 1e-12);
        assert_eq!(r.observables_spec.as_deref(), Some("pauli-z"));
        assert!(r.state_spec.is_some() && r.topology.is_some());
    }
}
