//! Local observable sets, orthogonal operator bases, reduced observables and
//! the orthogonal representation of local unitaries.
//!
//! Ordering convention: bases start with the identity, and product bases run
//! lexicographically over factors (first factor slowest).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::covariance::BlockCovarianceMatrix;
use crate::error::{Error, Result};
use crate::tensor::{
    check_node_major, gates, kron, kron_all, BlockLayout, ComplexMatrix, Node, SubsystemLayout, I, ONE,
};

const HERMITIAN_TOL: f64 = 1e-10;

/// Hermitian operator acting on the full space of one node.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    pub matrix: ComplexMatrix,
    pub node: String,
    pub factor_support: Option<Vec<String>>,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix, node: impl Into<String>) -> Result<Self> {
        let deviation = matrix.hermiticity_error();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self {
            matrix,
            node: node.into(),
            factor_support: None,
        })
    }
}

/// Observables grouped contiguously by node, with the node structure they act on.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSet {
    nodes: Vec<Node>,
    observables: Vec<Observable>,
    layout: BlockLayout,
}

impl ObservableSet {
    /// One group per node; every group must be non-empty and match the node's dimension.
    pub fn new(groups: Vec<(Node, Vec<ComplexMatrix>)>, state_layout: &SubsystemLayout) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut observables = Vec::new();
        let mut sizes = Vec::new();
        for (node, ops) in groups {
            let d = node.dim(state_layout)?;
            if ops.is_empty() {
                return Err(Error::InvalidArgument(format!("node `{}` has no observables", node.label)));
            }
            for m in ops {
                if m.rows() != d || !m.is_square() {
                    return Err(Error::Dimension(format!(
                        "{}x{} observable on node `{}` of dimension {d}",
                        m.rows(),
                        m.cols(),
                        node.label
                    )));
                }
                let mut o = Observable::new(m, node.label.clone())?;
                o.factor_support = Some(node.factors.clone());
                observables.push(o);
            }
            sizes.push(observables.len() - sizes.iter().sum::<usize>());
            nodes.push(node);
        }
        Ok(Self {
            nodes,
            observables,
            layout: BlockLayout::new(sizes)?,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn observables(&self) -> &[Observable] {
        &self.observables
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.observables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observables.is_empty()
    }

    pub fn node_labels(&self) -> Vec<String> {
        self.nodes.iter().map(|n| n.label.clone()).collect()
    }

    /// Observables of node `k`.
    pub fn group(&self, k: usize) -> &[Observable] {
        &self.observables[self.layout.range(k)]
    }
}

/// `d^2` Hermitian operators with `tr(G_a G_b) = d δ_ab`, identity first.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalBasis {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl OrthogonalBasis {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Tensor-product basis `G_a ⊗ G_b ⊗ ...`, lexicographic in the factors.
    pub fn product(factors: &[&OrthogonalBasis]) -> OrthogonalBasis {
        let mut elements = vec![ComplexMatrix::identity(1)];
        for f in factors {
            elements = elements
                .iter()
                .flat_map(|a| f.elements.iter().map(move |b| kron(a, b)))
                .collect();
        }
        OrthogonalBasis {
            dim: factors.iter().map(|f| f.dim).product(),
            elements,
        }
    }

    /// Expansion coefficients `tr(G_a m) / d`.
    pub fn coefficients(&self, m: &ComplexMatrix) -> Vec<Complex64> {
        self.elements
            .iter()
            .map(|g| g.trace_product(m) / self.dim as f64)
            .collect()
    }
}

/// `{1, σx, σy, σz}`.
pub fn pauli_basis() -> OrthogonalBasis {
    OrthogonalBasis {
        dim: 2,
        elements: vec![ComplexMatrix::identity(2), gates::sigma_x(), gates::sigma_y(), gates::sigma_z()],
    }
}

/// Identity followed by generalized Gell-Mann matrices scaled by `sqrt(d/2)`:
/// for each `j < k` the symmetric then antisymmetric pair, then the diagonal
/// family. For `d = 2` this is exactly `{1, σx, σy, σz}`.
pub fn orthogonal_basis(d: usize) -> Result<OrthogonalBasis> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("basis dimension {d} < 2")));
    }
    let scale = (d as f64 / 2.0).sqrt();
    let mut elements = vec![ComplexMatrix::identity(d)];
    for j in 0..d {
        for k in j + 1..d {
            let mut s = ComplexMatrix::zeros(d, d);
            s[(j, k)] = ONE * scale;
            s[(k, j)] = ONE * scale;
            elements.push(s);
            let mut a = ComplexMatrix::zeros(d, d);
            a[(j, k)] = -I * scale;
            a[(k, j)] = I * scale;
            elements.push(a);
        }
    }
    for l in 1..d {
        let norm = (2.0 / (l * (l + 1)) as f64).sqrt() * scale;
        let mut diag = vec![0.0; d];
        for x in diag.iter_mut().take(l) {
            *x = norm;
        }
        diag[l] = -(l as f64) * norm;
        elements.push(ComplexMatrix::diag_real(&diag));
    }
    Ok(OrthogonalBasis { dim: d, elements })
}

/// `I_before ⊗ obs ⊗ I_after` on the node-major layout described by `nodes`.
pub fn embed(obs: &Observable, layout: &SubsystemLayout, nodes: &[Node]) -> Result<ComplexMatrix> {
    check_node_major(layout, nodes)?;
    let k = nodes
        .iter()
        .position(|n| n.label == obs.node)
        .ok_or_else(|| Error::UnknownLabel(obs.node.clone()))?;
    let dims: Vec<usize> = nodes.iter().map(|n| n.dim(layout)).collect::<Result<_>>()?;
    if obs.matrix.rows() != dims[k] {
        return Err(Error::Dimension(format!(
            "observable of dimension {} on node `{}` of dimension {}",
            obs.matrix.rows(),
            obs.node,
            dims[k]
        )));
    }
    let before: usize = dims[..k].iter().product();
    let after: usize = dims[k + 1..].iter().product();
    Ok(kron_all([
        &ComplexMatrix::identity(before),
        &obs.matrix,
        &ComplexMatrix::identity(after),
    ]))
}

/// Full product basis on `node`: one orthogonal basis per factor.
pub fn product_observables(bases: &[&OrthogonalBasis]) -> Vec<ComplexMatrix> {
    OrthogonalBasis::product(bases).elements
}

/// Complete orthogonal product basis on every node, Gell-Mann per factor.
pub fn full_product_set(layout: &SubsystemLayout, nodes: &[Node]) -> Result<ObservableSet> {
    let mut groups = Vec::new();
    for node in nodes {
        let bases: Vec<OrthogonalBasis> = node
            .factors
            .iter()
            .map(|f| orthogonal_basis(layout.dim_of(f)?))
            .collect::<Result<_>>()?;
        let refs: Vec<&OrthogonalBasis> = bases.iter().collect();
        groups.push((node.clone(), product_observables(&refs)));
    }
    ObservableSet::new(groups, layout)
}

fn qubit_nodes(layout: &SubsystemLayout, nodes: &[Node], set: &str) -> Result<()> {
    for n in nodes {
        if n.dim(layout)? != 2 {
            return Err(Error::InvalidArgument(format!("`{set}` needs qubit nodes; `{}` is not", n.label)));
        }
    }
    Ok(())
}

/// One σz per qubit node.
pub fn pauli_z_set(layout: &SubsystemLayout, nodes: &[Node]) -> Result<ObservableSet> {
    qubit_nodes(layout, nodes, "pauli-z")?;
    ObservableSet::new(nodes.iter().map(|n| (n.clone(), vec![gates::sigma_z()])).collect(), layout)
}

/// σx and σy on every qubit node.
pub fn w_set(layout: &SubsystemLayout, nodes: &[Node]) -> Result<ObservableSet> {
    qubit_nodes(layout, nodes, "w-set")?;
    ObservableSet::new(
        nodes
            .iter()
            .map(|n| (n.clone(), vec![gates::sigma_x(), gates::sigma_y()]))
            .collect(),
        layout,
    )
}

/// σx, σz, σz, σx on the four qubits of the cluster state.
pub fn cluster_set(layout: &SubsystemLayout, nodes: &[Node]) -> Result<ObservableSet> {
    qubit_nodes(layout, nodes, "cluster-set")?;
    if nodes.len() != 4 {
        return Err(Error::InvalidArgument(format!("`cluster-set` needs 4 nodes, got {}", nodes.len())));
    }
    let ops = [gates::sigma_x(), gates::sigma_z(), gates::sigma_z(), gates::sigma_x()];
    ObservableSet::new(
        nodes.iter().cloned().zip(ops).map(|(n, o)| (n, vec![o])).collect(),
        layout,
    )
}

/// Which factor of a two-factor node a reduced observable keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Reduced observable: `tr_1(obs (rho_1 ⊗ 1))` when keeping the second
/// factor, `tr_2(obs (1 ⊗ rho_2))` when keeping the first. `d1`, `d2` are the
/// factor dimensions of `obs`; `marginal` lives on the traced factor.
pub fn reduced_observable(
    obs: &ComplexMatrix,
    d1: usize,
    d2: usize,
    marginal: &ComplexMatrix,
    keep: Keep,
) -> Result<ComplexMatrix> {
    if obs.rows() != d1 * d2 || !obs.is_square() {
        return Err(Error::Dimension(format!("observable is not {d1}x{d2} composite")));
    }
    let traced = if keep == Keep::Second { d1 } else { d2 };
    if marginal.rows() != traced || !marginal.is_square() {
        return Err(Error::Dimension(format!(
            "marginal of dimension {} for a traced factor of dimension {traced}",
            marginal.rows()
        )));
    }
    let out = match keep {
        // [A^(2)]_{b b'} = sum_{a a'} A_{(a b),(a' b')} rho_{a' a}
        Keep::Second => ComplexMatrix::from_fn(d2, d2, |b, bp| {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..d1 {
                for ap in 0..d1 {
                    acc += obs[(a * d2 + b, ap * d2 + bp)] * marginal[(ap, a)];
                }
            }
            acc
        }),
        Keep::First => ComplexMatrix::from_fn(d1, d1, |a, ap| {
            let mut acc = Complex64::new(0.0, 0.0);
            for b in 0..d2 {
                for bp in 0..d2 {
                    acc += obs[(a * d2 + b, ap * d2 + bp)] * marginal[(bp, b)];
                }
            }
            acc
        }),
    };
    Ok(out)
}

/// Real matrix `O` with `O_ab = tr(U^dagger G_a U G_b) / d`, so that
/// `U^dagger G_a U = sum_b O_ab G_b` and the covariance matrix transforms as
/// `Γ(U rho U^dagger) = O Γ(rho) O^T`. `O` is orthogonal and composes as
/// `O(U1 U2) = O(U1) O(U2)`.
pub fn orthogonal_from_unitary(u: &ComplexMatrix, basis: &OrthogonalBasis) -> Result<DMatrix<f64>> {
    let d = basis.dim;
    if u.rows() != d || !u.is_square() {
        return Err(Error::Dimension(format!("{}x{} unitary for a basis of dimension {d}", u.rows(), u.cols())));
    }
    let deviation = u.adjoint().matmul(u).max_abs_diff(&ComplexMatrix::identity(d));
    if deviation > 1e-9 {
        return Err(Error::NotUnitary { deviation });
    }
    let n = basis.len();
    let conj: Vec<ComplexMatrix> = basis.elements.iter().map(|g| u.adjoint().matmul(g).matmul(u)).collect();
    Ok(DMatrix::from_fn(n, n, |a, b| conj[a].trace_product(&basis.elements[b]).re / d as f64))
}

/// `C^T Γ C`, the covariance matrix of the recombined observables
/// `M_j = sum_i C_ij N_i`. When every column of `c` is supported on a single
/// node, with columns grouped by node in order, the node blocks are kept;
/// otherwise the result is a single block.
pub fn recombine_cm(gamma: &BlockCovarianceMatrix, c: &DMatrix<f64>) -> Result<BlockCovarianceMatrix> {
    let n = gamma.dim();
    if c.nrows() != n {
        return Err(Error::Dimension(format!("{} rows in C for a {n}x{n} covariance matrix", c.nrows())));
    }
    let cc = ComplexMatrix::from_real_matrix(c);
    let m = cc.transpose().matmul(gamma.matrix()).matmul(&cc).hermitian_part();
    let layout = gamma.layout();
    let mut counts = vec![0usize; layout.len()];
    let mut last = 0;
    let mut per_node = true;
    for j in 0..c.ncols() {
        let support: Vec<usize> = (0..layout.len())
            .filter(|&k| layout.range(k).any(|i| c[(i, j)] != 0.0))
            .collect();
        match support.as_slice() {
            [] => counts[last] += 1,
            [k] if *k >= last => {
                last = *k;
                counts[*k] += 1;
            }
            _ => {
                per_node = false;
                break;
            }
        }
    }
    if per_node && counts.iter().all(|&k| k > 0) {
        BlockCovarianceMatrix::new(m, BlockLayout::new(counts)?, gamma.node_labels().to_vec())
    } else {
        BlockCovarianceMatrix::new(m, BlockLayout::single(c.ncols()), vec![gamma.node_labels().join("")])
    }
}
