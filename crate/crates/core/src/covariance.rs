//! Covariance matrices `Γ_mn = <O_m O_n> - <O_m><O_n>` with node-block structure.
//!
//! Products of non-commuting observables on the same node are kept in the
//! given order, so `Γ` is Hermitian rather than real symmetric. This is the
//! Gram matrix of the centered observables in the state's GNS inner product,
//! which is what makes the block decompositions and the Ξ test valid. Blocks
//! between different nodes are real, and [`BlockCovarianceMatrix::real_part`]
//! is what the trace-norm criterion and the feasibility solver consume.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observables::ObservableSet;
use crate::states::DensityOperator;
use crate::tensor::{kron, marginal, psd_tolerance, BlockLayout, ComplexMatrix, ZERO};

const HERMITIAN_TOL: f64 = 1e-10;

/// Hermitian PSD matrix partitioned into node blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockCovarianceMatrix {
    matrix: ComplexMatrix,
    layout: BlockLayout,
    node_labels: Vec<String>,
}

impl BlockCovarianceMatrix {
    pub fn new(matrix: ComplexMatrix, layout: BlockLayout, node_labels: Vec<String>) -> Result<Self> {
        if !matrix.is_square() || matrix.rows() != layout.dim() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for blocks {:?}",
                matrix.rows(),
                matrix.cols(),
                layout.sizes()
            )));
        }
        if node_labels.len() != layout.len() {
            return Err(Error::Layout(format!("{} labels for {} blocks", node_labels.len(), layout.len())));
        }
        let deviation = matrix.hermiticity_error();
        if deviation > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation });
        }
        let matrix = matrix.hermitian_part();
        let min = crate::tensor::min_eigenvalue(&matrix)?;
        let tol = psd_tolerance(&matrix);
        if min < -tol {
            return Err(Error::InvalidArgument(format!(
                "covariance matrix is not PSD (min eigenvalue {min:.3e})"
            )));
        }
        Ok(Self {
            matrix,
            layout,
            node_labels,
        })
    }

    pub fn from_real(matrix: &DMatrix<f64>, layout: BlockLayout, node_labels: Vec<String>) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_matrix(matrix), layout, node_labels)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Real symmetric part `(Γ + Γ^T)/2`; PSD whenever `Γ` is.
    pub fn real_part(&self) -> DMatrix<f64> {
        self.matrix.real_part()
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn node_labels(&self) -> &[String] {
        &self.node_labels
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn node_index(&self, label: &str) -> Result<usize> {
        self.node_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Block `(x, y)` by node label; `(x, x)` is the marginal covariance matrix.
    pub fn block(&self, x: &str, y: &str) -> Result<ComplexMatrix> {
        Ok(self.block_at(self.node_index(x)?, self.node_index(y)?))
    }

    pub fn block_at(&self, x: usize, y: usize) -> ComplexMatrix {
        let (rx, ry) = (self.layout.range(x), self.layout.range(y));
        self.matrix.submatrix(rx.start, ry.start, rx.len(), ry.len())
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// JSON sidecar describing the block structure of an exported matrix.
    pub fn sidecar(&self) -> CmSidecar {
        CmSidecar {
            block_sizes: self.layout.sizes().to_vec(),
            node_labels: self.node_labels.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmSidecar {
    pub block_sizes: Vec<usize>,
    pub node_labels: Vec<String>,
}

/// `<O_i>` for each operator, all acting on the space of `rho`.
pub fn mean_vector(ops: &[ComplexMatrix], rho: &ComplexMatrix) -> Vec<f64> {
    ops.iter().map(|o| o.trace_product(rho).re).collect()
}

/// Dense covariance matrix of operators acting on the full space of `rho`.
pub fn operator_cm(ops: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let means = mean_vector(ops, rho);
    let applied: Vec<ComplexMatrix> = ops.iter().map(|o| o.matmul(rho)).collect();
    let n = ops.len();
    let mut g = ComplexMatrix::zeros(n, n);
    for m in 0..n {
        for k in m..n {
            let v = ops[m].trace_product(&applied[k]) - means[m] * means[k];
            g[(m, k)] = v;
            g[(k, m)] = v.conj();
        }
    }
    g
}

/// Block-structured covariance matrix of `obs` in `rho`.
///
/// Each block only touches a marginal: diagonal block `x` uses `rho^(x)`
/// and block `(x, y)` uses `rho^(xy)`, so the global state is never
/// multiplied. Blocks are computed in parallel; each entry has a fixed
/// reduction order, so the result is deterministic.
pub fn covariance_matrix(obs: &ObservableSet, rho: &DensityOperator) -> Result<BlockCovarianceMatrix> {
    let nodes = obs.nodes();
    let layout = rho.layout();
    for n in nodes {
        for f in &n.factors {
            layout.dim_of(f)?;
        }
    }
    let node_dims: Vec<usize> = nodes.iter().map(|n| n.dim(layout)).collect::<Result<_>>()?;
    let single: Vec<ComplexMatrix> = nodes
        .iter()
        .map(|n| marginal(rho.matrix(), layout, &n.factors).map(|(m, _)| m))
        .collect::<Result<_>>()?;
    let group_ops = |k: usize| -> Vec<ComplexMatrix> { obs.group(k).iter().map(|o| o.matrix.clone()).collect() };
    let means: Vec<Vec<f64>> = (0..nodes.len()).map(|k| mean_vector(&group_ops(k), &single[k])).collect();

    let pairs: Vec<(usize, usize)> = (0..nodes.len()).flat_map(|x| (x..nodes.len()).map(move |y| (x, y))).collect();
    let blocks: Vec<((usize, usize), ComplexMatrix)> = pairs
        .par_iter()
        .map(|&(x, y)| -> Result<_> {
            let ox = group_ops(x);
            if x == y {
                return Ok(((x, y), operator_cm(&ox, &single[x])));
            }
            let oy = group_ops(y);
            let factors: Vec<&String> = nodes[x].factors.iter().chain(&nodes[y].factors).collect();
            let (rho_xy, _) = marginal(rho.matrix(), layout, &factors)?;
            let (dx, dy) = (node_dims[x], node_dims[y]);
            let mut block = ComplexMatrix::zeros(ox.len(), oy.len());
            for (n, o_n) in oy.iter().enumerate() {
                // M_n = tr_y((1 ⊗ O_n) rho_xy)
                let m_n = ComplexMatrix::from_fn(dx, dx, |a, ap| {
                    let mut acc = ZERO;
                    for b in 0..dy {
                        for bp in 0..dy {
                            acc += o_n[(b, bp)] * rho_xy[(ap * dy + bp, a * dy + b)];
                        }
                    }
                    acc
                });
                // m_n holds tr_y(...) transposed; tr(O_m M) = sum O_m[(a, ap)] M[(ap, a)]
                for (m, o_m) in ox.iter().enumerate() {
                    let mut acc = ZERO;
                    for a in 0..dx {
                        for ap in 0..dx {
                            acc += o_m[(a, ap)] * m_n[(a, ap)];
                        }
                    }
                    block[(m, n)] = Complex64::new(acc.re - means[x][m] * means[y][n], acc.im);
                }
            }
            Ok(((x, y), block))
        })
        .collect::<Result<_>>()?;

    let bl = obs.layout();
    let mut g = ComplexMatrix::zeros(bl.dim(), bl.dim());
    for ((x, y), block) in blocks {
        g.set_submatrix(bl.offset(x), bl.offset(y), &block);
        if x != y {
            g.set_submatrix(bl.offset(y), bl.offset(x), &block.adjoint());
        }
    }
    BlockCovarianceMatrix::new(g, bl.clone(), obs.node_labels())
}

/// Covariance matrix of product observables `O_1 ⊗ ... ⊗ O_k` in a product
/// state, without building the state: with second moments `S_j` and mean
/// vectors `a_j` per factor, `Γ = ⊗_j S_j - ⊗_j a_j a_j^T`, where
/// `S_j = Γ_j + a_j a_j^T`.
pub fn product_state_cm(factor_obs: &[Vec<ComplexMatrix>], marginals: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    if factor_obs.len() != marginals.len() || factor_obs.is_empty() {
        return Err(Error::Dimension(format!(
            "{} observable lists for {} marginals",
            factor_obs.len(),
            marginals.len()
        )));
    }
    let mut second = ComplexMatrix::identity(1);
    let mut mean_outer = ComplexMatrix::identity(1);
    for (ops, rho) in factor_obs.iter().zip(marginals) {
        if ops.iter().any(|o| o.rows() != rho.rows()) {
            return Err(Error::Dimension("observable and marginal dimensions differ".into()));
        }
        let g = operator_cm(ops, rho);
        let a = mean_vector(ops, rho);
        let aa = ComplexMatrix::from_fn(a.len(), a.len(), |i, j| Complex64::new(a[i] * a[j], 0.0));
        second = kron(&second, &(&g + &aa));
        mean_outer = kron(&mean_outer, &aa);
    }
    Ok(&second - &mean_outer)
}
