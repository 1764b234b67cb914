//! Independent oracles shared by the integration tests. Nothing here goes
//! through the covariance fast path: expectations are traces against the full
//! density matrix with explicitly embedded operators.
#![allow(dead_code)]

use netcm::states::{self, DensityOperator};
use netcm::tensor::{kron, kron_all, ComplexMatrix};
use netcm::{random, Result};
use num_complex::Complex64;
use rand::Rng;

pub fn expect(rho: &ComplexMatrix, op: &ComplexMatrix) -> Complex64 {
    rho.matmul(op).trace()
}

/// `<O_m O_n> - <O_m><O_n>` with the operators already acting on the full space.
pub fn dense_cm(rho: &ComplexMatrix, ops: &[ComplexMatrix]) -> ComplexMatrix {
    // tr(ρ O_m O_n) = tr((O_n ρ) O_m)
    let left: Vec<ComplexMatrix> = ops.iter().map(|o| o.matmul(rho)).collect();
    let means: Vec<Complex64> = left.iter().map(|l| l.trace()).collect();
    ComplexMatrix::from_fn(ops.len(), ops.len(), |m, n| {
        left[n].trace_product(&ops[m]) - means[m] * means[n]
    })
}

/// `I ⊗ ... ⊗ op ⊗ ... ⊗ I` with `op` on slot `k` of `dims`.
pub fn embed(op: &ComplexMatrix, dims: &[usize], k: usize) -> ComplexMatrix {
    let before: usize = dims[..k].iter().product();
    let after: usize = dims[k + 1..].iter().product();
    kron_all([&ComplexMatrix::identity(before), op, &ComplexMatrix::identity(after)])
}

/// Per-node operator lists embedded on the node-major space.
pub fn embed_groups(groups: &[Vec<ComplexMatrix>], node_dims: &[usize]) -> Vec<ComplexMatrix> {
    groups
        .iter()
        .enumerate()
        .flat_map(|(k, ops)| ops.iter().map(move |o| embed(o, node_dims, k)))
        .collect()
}

/// Pauli basis written out by hand, identity first.
pub fn paulis() -> Vec<ComplexMatrix> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    vec![
        ComplexMatrix::identity(2),
        ComplexMatrix::from_vec(2, 2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap(),
        ComplexMatrix::from_vec(2, 2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap(),
        ComplexMatrix::from_vec(2, 2, vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]).unwrap(),
    ]
}

/// `G_a ⊗ G_b` over two Pauli bases, first factor slowest.
pub fn pauli_pairs() -> Vec<ComplexMatrix> {
    let p = paulis();
    p.iter().flat_map(|a| p.iter().map(move |b| kron(a, b))).collect()
}

pub fn bloch(rho: &ComplexMatrix) -> Vec<f64> {
    paulis().iter().map(|g| expect(rho, g).re).collect()
}

pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> ComplexMatrix {
    random::ginibre(d, d, rng).hermitian_part()
}

/// Random two-qubit source state.
pub fn random_source<R: Rng>(rng: &mut R) -> DensityOperator {
    let layout = netcm::tensor::SubsystemLayout::new(vec![2, 2], vec!["1", "2"]).unwrap();
    DensityOperator::new(random::density_matrix(4, rng), layout).unwrap()
}

pub struct Triangle {
    pub a: DensityOperator,
    pub b: DensityOperator,
    pub c: DensityOperator,
    pub rho: DensityOperator,
}

pub fn random_triangle<R: Rng>(rng: &mut R) -> Result<Triangle> {
    let (a, b, c) = (random_source(rng), random_source(rng), random_source(rng));
    let rho = states::btn_assemble(&a, &b, &c)?;
    Ok(Triangle { a, b, c, rho })
}

/// Full Pauli-product covariance matrix of a qubit triangle state, by brute force.
pub fn triangle_cm(rho: &DensityOperator) -> ComplexMatrix {
    let groups = vec![pauli_pairs(); 3];
    dense_cm(rho.matrix(), &embed_groups(&groups, &[4, 4, 4]))
}

/// Single-qubit CM on the Pauli basis.
pub fn qubit_cm(rho: &ComplexMatrix) -> ComplexMatrix {
    dense_cm(rho, &paulis())
}

pub fn outer(a: &[f64], b: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(a.len(), b.len(), |i, j| Complex64::new(a[i] * b[j], 0.0))
}

pub fn min_eig(m: &ComplexMatrix) -> f64 {
    netcm::tensor::min_eigenvalue(m).unwrap()
}
