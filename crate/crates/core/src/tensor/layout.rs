use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Partition of a matrix dimension into consecutive blocks, one per node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLayout {
    block_sizes: Vec<usize>,
}

impl BlockLayout {
    pub fn new(block_sizes: Vec<usize>) -> Result<Self> {
        if block_sizes.contains(&0) {
            return Err(Error::Layout("block sizes must be positive".into()));
        }
        Ok(Self { block_sizes })
    }

    /// A single block covering `n` rows.
    pub fn single(n: usize) -> Self {
        Self { block_sizes: vec![n] }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.block_sizes
    }

    pub fn len(&self) -> usize {
        self.block_sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_sizes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    pub fn offset(&self, block: usize) -> usize {
        self.block_sizes[..block].iter().sum()
    }

    pub fn range(&self, block: usize) -> std::ops::Range<usize> {
        let start = self.offset(block);
        start..start + self.block_sizes[block]
    }
}

/// Tensor-factor structure of a Hilbert space: local dimensions and unique labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsystemLayout {
    dims: Vec<usize>,
    labels: Vec<String>,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(dims: Vec<usize>, labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if dims.len() != labels.len() {
            return Err(Error::Layout(format!(
                "{} dims but {} labels",
                dims.len(),
                labels.len()
            )));
        }
        if dims.contains(&0) {
            return Err(Error::Layout("local dimensions must be positive".into()));
        }
        let mut seen = HashSet::new();
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(Error::Layout(format!("duplicate label `{l}`")));
            }
        }
        Ok(Self { dims, labels })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.dims[self.index_of(label)?])
    }

    /// Layout restricted to `labels`, in the given order.
    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let mut dims = Vec::with_capacity(labels.len());
        for l in labels {
            dims.push(self.dim_of(l.as_ref())?);
        }
        Self::new(dims, labels.iter().map(|l| l.as_ref().to_string()).collect())
    }

    /// Concatenation of two layouts (labels must stay unique).
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        Self::new(dims, labels)
    }
}

/// A network node: a label and the tensor factors it holds, in layout order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub label: String,
    pub factors: Vec<String>,
}

impl Node {
    pub fn new<S: Into<String>>(label: impl Into<String>, factors: Vec<S>) -> Self {
        Self {
            label: label.into(),
            factors: factors.into_iter().map(Into::into).collect(),
        }
    }

    pub fn dim(&self, layout: &SubsystemLayout) -> Result<usize> {
        self.factors.iter().map(|f| layout.dim_of(f)).product()
    }
}

/// Groups the factors of `layout` into nodes by stripping trailing digits
/// from each label (`A1`, `A2` -> node `A`). Labels that are all digits form
/// their own node.
pub fn nodes_by_prefix(layout: &SubsystemLayout) -> Vec<Node> {
    let mut nodes: Vec<Node> = Vec::new();
    for label in layout.labels() {
        let stem = label.trim_end_matches(|c: char| c.is_ascii_digit());
        let stem = if stem.is_empty() { label.as_str() } else { stem };
        match nodes.iter_mut().find(|n| n.label == stem) {
            Some(n) => n.factors.push(label.clone()),
            None => nodes.push(Node::new(stem, vec![label.clone()])),
        }
    }
    nodes
}

/// One node per factor.
pub fn singleton_nodes(layout: &SubsystemLayout) -> Vec<Node> {
    layout
        .labels()
        .iter()
        .map(|l| Node::new(l.clone(), vec![l.clone()]))
        .collect()
}

/// Checks that the nodes cover `layout` contiguously, in layout order.
pub fn check_node_major(layout: &SubsystemLayout, nodes: &[Node]) -> Result<()> {
    let flat: Vec<&String> = nodes.iter().flat_map(|n| n.factors.iter()).collect();
    if flat.len() != layout.len() || flat.iter().zip(layout.labels()).any(|(a, b)| *a != b) {
        return Err(Error::Layout(format!(
            "nodes {:?} do not cover layout {:?} in node-major order",
            nodes.iter().map(|n| &n.label).collect::<Vec<_>>(),
            layout.labels()
        )));
    }
    Ok(())
}
