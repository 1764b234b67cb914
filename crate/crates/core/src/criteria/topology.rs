use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub name: String,
    pub nodes: Vec<String>,
}

/// Nodes plus sources, each source being the set of nodes it feeds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyJson", into = "TopologyJson")]
pub struct NetworkTopology {
    nodes: Vec<String>,
    sources: Vec<Source>,
}

/// On-disk form: `{"nodes": [...], "sources": {"a": [...], ...}}` or with
/// `sources` as a list of node lists (named `s0`, `s1`, ...).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologyJson {
    nodes: Vec<String>,
    sources: SourcesJson,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum SourcesJson {
    Named(Vec<Source>),
    Plain(Vec<Vec<String>>),
}

impl TryFrom<TopologyJson> for NetworkTopology {
    type Error = Error;

    fn try_from(t: TopologyJson) -> Result<Self> {
        let sources = match t.sources {
            SourcesJson::Named(s) => s,
            SourcesJson::Plain(lists) => lists
                .into_iter()
                .enumerate()
                .map(|(k, nodes)| Source { name: format!("s{k}"), nodes })
                .collect(),
        };
        NetworkTopology::new(t.nodes, sources)
    }
}

impl From<NetworkTopology> for TopologyJson {
    fn from(t: NetworkTopology) -> Self {
        TopologyJson {
            nodes: t.nodes,
            sources: SourcesJson::Named(t.sources),
        }
    }
}

/// Masks of one source's summand `T_s`: which node blocks are free diagonal
/// blocks and which off-diagonal blocks are pinned to `γ_xy`. Every other
/// block of `T_s` is zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SourceMask {
    pub source: String,
    /// Node indices covered by the source, in topology order.
    pub nodes: Vec<usize>,
}

impl SourceMask {
    pub fn is_free_diagonal(&self, x: usize) -> bool {
        self.nodes.contains(&x)
    }

    pub fn is_fixed(&self, x: usize, y: usize) -> bool {
        x != y && self.nodes.contains(&x) && self.nodes.contains(&y)
    }
}

impl NetworkTopology {
    pub fn new(nodes: Vec<String>, sources: Vec<Source>) -> Result<Self> {
        let mut seen = HashSet::new();
        for n in &nodes {
            if !seen.insert(n.as_str()) {
                return Err(Error::Topology(format!("duplicate node `{n}`")));
            }
        }
        let mut names = HashSet::new();
        for s in &sources {
            if !names.insert(s.name.as_str()) {
                return Err(Error::Topology(format!("duplicate source `{}`", s.name)));
            }
            if s.nodes.len() < 2 {
                return Err(Error::Topology(format!("source `{}` must connect at least two nodes", s.name)));
            }
            if s.nodes.len() >= nodes.len() {
                return Err(Error::Topology(format!(
                    "source `{}` touches all {} nodes; sources may reach at most N-1 nodes",
                    s.name,
                    nodes.len()
                )));
            }
            let mut inner = HashSet::new();
            for n in &s.nodes {
                if !seen.contains(n.as_str()) {
                    return Err(Error::UnknownLabel(n.clone()));
                }
                if !inner.insert(n.as_str()) {
                    return Err(Error::Topology(format!("source `{}` lists `{n}` twice", s.name)));
                }
            }
        }
        Ok(Self { nodes, sources })
    }

    fn from_lists(nodes: &[&str], sources: &[(&str, &[&str])]) -> Self {
        Self::new(
            nodes.iter().map(|s| s.to_string()).collect(),
            sources
                .iter()
                .map(|(name, ns)| Source {
                    name: name.to_string(),
                    nodes: ns.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
        )
        .expect("built-in topology is valid")
    }

    /// Triangle on `A, B, C`: source `c` on `{A, B}`, `a` on `{B, C}`, `b` on `{C, A}`.
    pub fn triangle() -> Self {
        Self::from_lists(&["A", "B", "C"], &[("c", &["A", "B"]), ("a", &["B", "C"]), ("b", &["C", "A"])])
    }

    /// Five nodes `1..5` with sources `a = {1,2,3}`, `b = {3,4,5}`, `c = {1,5}`.
    pub fn five_node_example() -> Self {
        Self::from_lists(
            &["1", "2", "3", "4", "5"],
            &[("a", &["1", "2", "3"]), ("b", &["3", "4", "5"]), ("c", &["1", "5"])],
        )
    }

    /// One bipartite source per pair of nodes.
    pub fn pairwise<S: AsRef<str>>(nodes: &[S]) -> Result<Self> {
        let names: Vec<String> = nodes.iter().map(|s| s.as_ref().to_string()).collect();
        let mut sources = Vec::new();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                sources.push(Source {
                    name: format!("{}{}", names[i], names[j]),
                    nodes: vec![names[i].clone(), names[j].clone()],
                });
            }
        }
        Self::new(names, sources)
    }

    /// Bipartite sources between consecutive nodes, closing the cycle.
    pub fn ring<S: AsRef<str>>(nodes: &[S]) -> Result<Self> {
        let names: Vec<String> = nodes.iter().map(|s| s.as_ref().to_string()).collect();
        let n = names.len();
        if n < 3 {
            return Err(Error::Topology(format!("a ring needs at least 3 nodes, got {n}")));
        }
        let sources = (0..n)
            .map(|i| Source {
                name: format!("{}{}", names[i], names[(i + 1) % n]),
                nodes: vec![names[i].clone(), names[(i + 1) % n].clone()],
            })
            .collect();
        Self::new(names, sources)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn sources(&self) -> &[Source] {
        &self.sources
    }

    /// True iff every pair of nodes shares at most one source.
    pub fn is_ncds(&self) -> bool {
        self.check_ncds().is_ok()
    }

    pub fn check_ncds(&self) -> Result<()> {
        let mut pairs: HashSet<(&str, &str)> = HashSet::new();
        for s in &self.sources {
            for (i, x) in s.nodes.iter().enumerate() {
                for y in &s.nodes[i + 1..] {
                    let key = if x < y { (x.as_str(), y.as_str()) } else { (y.as_str(), x.as_str()) };
                    if !pairs.insert(key) {
                        return Err(Error::NotNcds(key.0.to_string(), key.1.to_string()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn node_index(&self, label: &str) -> Result<usize> {
        self.nodes
            .iter()
            .position(|n| n == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Per-source block masks of the decomposition `Γ = sum_s T_s`.
    pub fn block_pattern(&self) -> Result<Vec<SourceMask>> {
        self.check_ncds()?;
        self.sources
            .iter()
            .map(|s| {
                let mut nodes: Vec<usize> = s.nodes.iter().map(|n| self.node_index(n)).collect::<Result<_>>()?;
                nodes.sort_unstable();
                Ok(SourceMask {
                    source: s.name.clone(),
                    nodes,
                })
            })
            .collect()
    }

    /// Checks that `labels` name exactly the topology's nodes.
    pub fn check_nodes<S: AsRef<str>>(&self, labels: &[S]) -> Result<()> {
        let a: HashSet<&str> = labels.iter().map(|s| s.as_ref()).collect();
        let b: HashSet<&str> = self.nodes.iter().map(|s| s.as_str()).collect();
        if a != b || a.len() != labels.len() {
            return Err(Error::Topology(format!(
                "covariance nodes {:?} do not match topology nodes {:?}",
                labels.iter().map(|s| s.as_ref()).collect::<Vec<_>>(),
                self.nodes
            )));
        }
        Ok(())
    }
}
