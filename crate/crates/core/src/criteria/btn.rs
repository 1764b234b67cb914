//! Triangle-specific structure of full-basis covariance matrices: the
//! source-wise decomposition of basic triangle states, its Khatri-Rao form,
//! and the Ξ test.
//!
//! Every node `X` holds two factors `X1 X2`. Source `c` feeds `(A2, B1)`,
//! `a` feeds `(B2, C1)` and `b` feeds `(C2, A1)`, so the source leaving node
//! `k` (second factor) arrives at node `k+1` (first factor), cyclically.
//! Node observables are `G_α ⊗ G_β` with index `α * n2 + β`.

use num_complex::Complex64;

use crate::covariance::{covariance_matrix, mean_vector, operator_cm, BlockCovarianceMatrix};
use crate::error::{Error, Result};
use crate::observables::{orthogonal_basis, ObservableSet, OrthogonalBasis};
use crate::states::{btn_assemble, DensityOperator};
use crate::tensor::{
    check_node_major, khatri_rao, kron, min_eigenvalue, psd_tolerance, BlockLayout, BlockPartition, ComplexMatrix,
    Node, SubsystemLayout,
};

use super::report::CriterionReport;
use super::topology::NetworkTopology;

/// Orthogonal bases for the two factors of every node.
#[derive(Clone, Debug)]
pub struct SplitBases {
    nodes: Vec<Node>,
    bases: Vec<[OrthogonalBasis; 2]>,
}

impl SplitBases {
    pub fn new(layout: &SubsystemLayout, nodes: Vec<Node>, bases: Vec<[OrthogonalBasis; 2]>) -> Result<Self> {
        check_node_major(layout, &nodes)?;
        if bases.len() != nodes.len() {
            return Err(Error::Dimension(format!("{} basis pairs for {} nodes", bases.len(), nodes.len())));
        }
        for (n, pair) in nodes.iter().zip(&bases) {
            if n.factors.len() != 2 {
                return Err(Error::Layout(format!(
                    "node `{}` must split into two factors, has {:?}",
                    n.label, n.factors
                )));
            }
            for (f, b) in n.factors.iter().zip(pair) {
                if layout.dim_of(f)? != b.dim() {
                    return Err(Error::Dimension(format!("basis of dimension {} on factor `{f}`", b.dim())));
                }
            }
        }
        Ok(Self { nodes, bases })
    }

    /// Gell-Mann bases on every factor.
    pub fn gell_mann(layout: &SubsystemLayout, nodes: Vec<Node>) -> Result<Self> {
        let mut bases = Vec::new();
        for n in &nodes {
            if n.factors.len() != 2 {
                return Err(Error::Layout(format!(
                    "node `{}` must split into two factors, has {:?}",
                    n.label, n.factors
                )));
            }
            bases.push([orthogonal_basis(layout.dim_of(&n.factors[0])?)?, orthogonal_basis(layout.dim_of(&n.factors[1])?)?]);
        }
        Self::new(layout, nodes, bases)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// The full product observable set `{G_α ⊗ G_β}` per node.
    pub fn observable_set(&self, layout: &SubsystemLayout) -> Result<ObservableSet> {
        let groups = self
            .nodes
            .iter()
            .zip(&self.bases)
            .map(|(n, [b1, b2])| (n.clone(), OrthogonalBasis::product(&[b1, b2]).elements().to_vec()))
            .collect();
        ObservableSet::new(groups, layout)
    }

    fn block_layout(&self) -> Result<BlockLayout> {
        BlockLayout::new(self.bases.iter().map(|[a, b]| a.len() * b.len()).collect())
    }
}

/// Single-factor statistics of one node: Bloch vectors and covariance
/// matrices of both factor bases in the factor marginals.
struct NodeStats {
    mean: [Vec<f64>; 2],
    cm: [ComplexMatrix; 2],
}

fn node_stats(rho: &DensityOperator, split: &SplitBases) -> Result<Vec<NodeStats>> {
    split
        .nodes
        .iter()
        .zip(&split.bases)
        .map(|(n, bases)| {
            let m0 = rho.marginal(&[&n.factors[0]])?;
            let m1 = rho.marginal(&[&n.factors[1]])?;
            Ok(NodeStats {
                mean: [mean_vector(bases[0].elements(), m0.matrix()), mean_vector(bases[1].elements(), m1.matrix())],
                cm: [operator_cm(bases[0].elements(), m0.matrix()), operator_cm(bases[1].elements(), m1.matrix())],
            })
        })
        .collect()
}

fn outer(a: &[f64], b: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.len(), b.len(), |i, j| Complex64::new(a[i] * b[j], 0.0))
}

fn check_triangle(split: &SplitBases) -> Result<()> {
    if split.nodes.len() != 3 {
        return Err(Error::Topology(format!("triangle wiring needs 3 nodes, got {}", split.nodes.len())));
    }
    Ok(())
}

/// Summands of the basic-triangle decomposition `Γ = T_c + T_b + T_a + R`,
/// each padded to the full covariance dimension.
#[derive(Clone, Debug)]
pub struct BtnDecomposition {
    pub t_c: ComplexMatrix,
    pub t_b: ComplexMatrix,
    pub t_a: ComplexMatrix,
    pub r: ComplexMatrix,
    pub layout: BlockLayout,
    pub node_labels: Vec<String>,
}

impl BtnDecomposition {
    pub fn sum(&self) -> ComplexMatrix {
        &(&(&self.t_c + &self.t_b) + &self.t_a) + &self.r
    }

    pub fn parts(&self) -> [(&'static str, &ComplexMatrix); 4] {
        [("T_c", &self.t_c), ("T_b", &self.t_b), ("T_a", &self.t_a), ("R", &self.r)]
    }

    /// Feasibility witness for [`NetworkTopology::triangle`]: the real parts
    /// of the `T_s` restricted to their nodes, with each diagonal block of
    /// `R` folded into one source touching that node.
    pub fn triangle_witness(&self) -> Result<Vec<nalgebra::DMatrix<f64>>> {
        let topo = NetworkTopology::triangle();
        let masks = topo.block_pattern()?;
        // masks come in source order c, a, b
        let ts = [&self.t_c, &self.t_a, &self.t_b];
        // R_A -> c, R_B -> a, R_C -> b
        let owner = [0usize, 1, 2];
        let mut out = Vec::new();
        for (s, mask) in masks.iter().enumerate() {
            let mut full = ts[s].clone();
            for (x, &o) in owner.iter().enumerate() {
                if o == s {
                    let r = self.layout.range(x);
                    let block = self.r.submatrix(r.start, r.start, r.len(), r.len());
                    let cur = full.submatrix(r.start, r.start, r.len(), r.len());
                    full.set_submatrix(r.start, r.start, &(&cur + &block));
                }
            }
            let idx: Vec<usize> = mask.nodes.iter().flat_map(|&x| self.layout.range(x)).collect();
            let real = full.real_part();
            out.push(nalgebra::DMatrix::from_fn(idx.len(), idx.len(), |i, j| real[(idx[i], idx[j])]));
        }
        Ok(out)
    }
}

/// Source-wise decomposition of the full-basis covariance matrix of `rho`,
/// built from reduced observables on `rho`'s own marginals. For a basic
/// triangle state it sums to `Γ` and every part is PSD.
pub fn decompose_state(rho: &DensityOperator, split: &SplitBases) -> Result<BtnDecomposition> {
    check_triangle(split)?;
    let layout = split.block_layout()?;
    let stats = node_stats(rho, split)?;
    let n = layout.dim();
    let mut ts: Vec<ComplexMatrix> = Vec::new();
    for x in 0..3 {
        let y = (x + 1) % 3;
        let (bx, by) = (&split.bases[x], &split.bases[y]);
        let (n_x2, n_y1) = (bx[1].len(), by[0].len());
        let pair = rho.marginal(&[&split.nodes[x].factors[1], &split.nodes[y].factors[0]])?;
        let (dx2, dy1) = (bx[1].dim(), by[0].dim());
        // reduced observables: a^(x1)_α G_β on X2, G_α' b^(y2)_β' on Y1
        let mut ops = Vec::new();
        for alpha in 0..bx[0].len() {
            for beta in 0..n_x2 {
                let g = kron(&bx[1].elements()[beta], &ComplexMatrix::identity(dy1));
                ops.push(g.scale(stats[x].mean[0][alpha]));
            }
        }
        for alpha in 0..n_y1 {
            for beta in 0..by[1].len() {
                let g = kron(&ComplexMatrix::identity(dx2), &by[0].elements()[alpha]);
                ops.push(g.scale(stats[y].mean[1][beta]));
            }
        }
        let local = operator_cm(&ops, pair.matrix());
        let nx = layout.sizes()[x];
        let idx: Vec<usize> = layout.range(x).chain(layout.range(y)).collect();
        let mut t = ComplexMatrix::zeros(n, n);
        for (i, &gi) in idx.iter().enumerate() {
            for (j, &gj) in idx.iter().enumerate() {
                t[(gi, gj)] = local[(i, j)];
            }
        }
        debug_assert_eq!(local.rows(), nx + layout.sizes()[y]);
        ts.push(t);
    }
    let mut r = ComplexMatrix::zeros(n, n);
    for (x, s) in stats.iter().enumerate() {
        r.set_submatrix(layout.offset(x), layout.offset(x), &kron(&s.cm[0], &s.cm[1]));
    }
    let mut ts = ts.into_iter();
    let (t_c, t_a, t_b) = (ts.next().unwrap(), ts.next().unwrap(), ts.next().unwrap());
    Ok(BtnDecomposition {
        t_c,
        t_b,
        t_a,
        r,
        layout,
        node_labels: split.nodes.iter().map(|n| n.label.clone()).collect(),
    })
}

/// Decomposition of the basic triangle state assembled from sources `a`, `b`,
/// `c` with Gell-Mann bases on every factor.
pub fn btn_decompose(
    rho_a: &DensityOperator,
    rho_b: &DensityOperator,
    rho_c: &DensityOperator,
) -> Result<BtnDecomposition> {
    let rho = btn_assemble(rho_a, rho_b, rho_c)?;
    let split = SplitBases::gell_mann(rho.layout(), rho.nodes())?;
    decompose_state(&rho, &split)
}

/// Residual of the Khatri-Rao identity for basic triangle states.
#[derive(Clone, Debug)]
pub struct Prop2Residual {
    pub residual: ComplexMatrix,
    pub max_abs: f64,
}

/// `Γ(rho)` minus the right-hand side built from `rho`'s marginals: one
/// Khatri-Rao term `(|a><a| blocks) ⋆ Γ(pair marginal)` per source plus the
/// block-diagonal `Γ(X1) ⊗ Γ(X2)`. The sum runs symmetrically over all three
/// sources. Zero for basic triangle states; a nonzero residual rules out the
/// basic triangle with this wiring.
pub fn prop2_residual(rho: &DensityOperator, split: &SplitBases) -> Result<Prop2Residual> {
    check_triangle(split)?;
    let layout = split.block_layout()?;
    let stats = node_stats(rho, split)?;
    let gamma = covariance_matrix(&split.observable_set(rho.layout())?, rho)?;
    let mut rhs = ComplexMatrix::zeros(layout.dim(), layout.dim());
    for x in 0..3 {
        let y = (x + 1) % 3;
        let (bx, by) = (&split.bases[x], &split.bases[y]);
        let (ax, by2) = (&stats[x].mean[0], &stats[y].mean[1]);
        // rank-one Bloch-vector blocks
        let k = {
            let mut k = ComplexMatrix::zeros(ax.len() + by2.len(), ax.len() + by2.len());
            k.set_submatrix(0, 0, &outer(ax, ax));
            k.set_submatrix(0, ax.len(), &outer(ax, by2));
            k.set_submatrix(ax.len(), 0, &outer(by2, ax));
            k.set_submatrix(ax.len(), ax.len(), &outer(by2, by2));
            k
        };
        let k_part = BlockPartition::square(BlockLayout::new(vec![ax.len(), by2.len()])?);
        // pair CM of G_β on X2 and G_α' on Y1
        let pair = rho.marginal(&[&split.nodes[x].factors[1], &split.nodes[y].factors[0]])?;
        let (dx2, dy1) = (bx[1].dim(), by[0].dim());
        let mut ops: Vec<ComplexMatrix> =
            bx[1].elements().iter().map(|g| kron(g, &ComplexMatrix::identity(dy1))).collect();
        ops.extend(by[0].elements().iter().map(|g| kron(&ComplexMatrix::identity(dx2), g)));
        let l = operator_cm(&ops, pair.matrix());
        let l_part = BlockPartition::square(BlockLayout::new(vec![bx[1].len(), by[0].len()])?);
        let (kr, _) = khatri_rao(&k, &k_part, &l, &l_part)?;
        // The Y block comes out as (β', α'); node order is (α', β').
        let (n_y1, n_y2) = (by[0].len(), by2.len());
        let nx = layout.sizes()[x];
        let to_global = |i: usize| -> usize {
            if i < nx {
                layout.offset(x) + i
            } else {
                let j = i - nx;
                let (beta, alpha) = (j / n_y1, j % n_y1);
                layout.offset(y) + alpha * n_y2 + beta
            }
        };
        for i in 0..kr.rows() {
            for j in 0..kr.cols() {
                rhs[(to_global(i), to_global(j))] += kr[(i, j)];
            }
        }
    }
    for (x, s) in stats.iter().enumerate() {
        let r = layout.range(x);
        let cur = rhs.submatrix(r.start, r.start, r.len(), r.len());
        rhs.set_submatrix(r.start, r.start, &(&cur + &kron(&s.cm[0], &s.cm[1])));
    }
    let residual = gamma.matrix() - &rhs;
    let max_abs = residual.max_abs();
    Ok(Prop2Residual { residual, max_abs })
}

/// `Ξ = Γ(full product basis) - diag_x{Γ(G on X1) ⊗ Γ(G on X2)}`, PSD for
/// every basic triangle state.
pub fn xi_matrix(rho: &DensityOperator, split: &SplitBases) -> Result<ComplexMatrix> {
    let layout = split.block_layout()?;
    let stats = node_stats(rho, split)?;
    let gamma = covariance_matrix(&split.observable_set(rho.layout())?, rho)?;
    let mut xi = gamma.matrix().clone();
    for (x, s) in stats.iter().enumerate() {
        let r = layout.range(x);
        let cur = xi.submatrix(r.start, r.start, r.len(), r.len());
        xi.set_submatrix(r.start, r.start, &(&cur - &kron(&s.cm[0], &s.cm[1])));
    }
    Ok(xi.hermitian_part())
}

pub const XI_CRITERION: &str = "xi-psd";

/// PSD test of Ξ: `lhs` is the minimum eigenvalue, `rhs` is zero, and the
/// tolerance is `1e-8 (1 + ||Ξ||_2)`.
pub fn xi_psd_report(rho: &DensityOperator, split: &SplitBases) -> Result<CriterionReport> {
    let xi = xi_matrix(rho, split)?;
    let min = min_eigenvalue(&xi)?;
    Ok(CriterionReport::new(XI_CRITERION, min, 0.0, psd_tolerance(&xi)).with_detail("dimension", xi.rows()))
}

pub const PROP2_CRITERION: &str = "btn-residual";

/// Khatri-Rao residual as a report: `lhs = -max|residual|`, `rhs = 0`, pass
/// iff the residual is below `1e-9`.
pub fn prop2_report(rho: &DensityOperator, split: &SplitBases) -> Result<CriterionReport> {
    let r = prop2_residual(rho, split)?;
    Ok(CriterionReport::new(PROP2_CRITERION, -r.max_abs, 0.0, 1e-9))
}

/// Full-basis covariance matrix with the split's block structure.
pub fn full_basis_cm(rho: &DensityOperator, split: &SplitBases) -> Result<BlockCovarianceMatrix> {
    covariance_matrix(&split.observable_set(rho.layout())?, rho)
}
