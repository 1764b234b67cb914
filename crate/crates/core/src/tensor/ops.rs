use crate::error::{Error, Result};

use super::layout::{BlockLayout, SubsystemLayout};
use super::matrix::{ComplexMatrix, ZERO};

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (br, bc) = (b.rows(), b.cols());
    ComplexMatrix::from_fn(a.rows() * br, a.cols() * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Kronecker product of a list of matrices, left to right.
pub fn kron_all<'a>(factors: impl IntoIterator<Item = &'a ComplexMatrix>) -> ComplexMatrix {
    factors
        .into_iter()
        .fold(ComplexMatrix::identity(1), |acc, m| kron(&acc, m))
}

/// Row and column partitions of a block matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    pub rows: BlockLayout,
    pub cols: BlockLayout,
}

impl BlockPartition {
    pub fn new(rows: BlockLayout, cols: BlockLayout) -> Self {
        Self { rows, cols }
    }

    pub fn square(layout: BlockLayout) -> Self {
        Self {
            rows: layout.clone(),
            cols: layout,
        }
    }
}

/// Block-wise Kronecker (Khatri-Rao) product: block (i, j) of the result is
/// `A_ij ⊗ B_ij`. Returns the product and its partition.
pub fn khatri_rao(
    a: &ComplexMatrix,
    a_part: &BlockPartition,
    b: &ComplexMatrix,
    b_part: &BlockPartition,
) -> Result<(ComplexMatrix, BlockPartition)> {
    if a_part.rows.len() != b_part.rows.len() || a_part.cols.len() != b_part.cols.len() {
        return Err(Error::Dimension(format!(
            "block counts differ: {}x{} vs {}x{}",
            a_part.rows.len(),
            a_part.cols.len(),
            b_part.rows.len(),
            b_part.cols.len()
        )));
    }
    if a_part.rows.dim() != a.rows()
        || a_part.cols.dim() != a.cols()
        || b_part.rows.dim() != b.rows()
        || b_part.cols.dim() != b.cols()
    {
        return Err(Error::Dimension("partition does not match matrix shape".into()));
    }
    let row_sizes: Vec<usize> = a_part
        .rows
        .sizes()
        .iter()
        .zip(b_part.rows.sizes())
        .map(|(x, y)| x * y)
        .collect();
    let col_sizes: Vec<usize> = a_part
        .cols
        .sizes()
        .iter()
        .zip(b_part.cols.sizes())
        .map(|(x, y)| x * y)
        .collect();
    let out_part = BlockPartition::new(BlockLayout::new(row_sizes)?, BlockLayout::new(col_sizes)?);
    let mut out = ComplexMatrix::zeros(out_part.rows.dim(), out_part.cols.dim());
    for bi in 0..a_part.rows.len() {
        for bj in 0..a_part.cols.len() {
            let ra = a_part.rows.range(bi);
            let ca = a_part.cols.range(bj);
            let rb = b_part.rows.range(bi);
            let cb = b_part.cols.range(bj);
            let a_blk = a.submatrix(ra.start, ca.start, ra.len(), ca.len());
            let b_blk = b.submatrix(rb.start, cb.start, rb.len(), cb.len());
            out.set_submatrix(
                out_part.rows.offset(bi),
                out_part.cols.offset(bj),
                &kron(&a_blk, &b_blk),
            );
        }
    }
    Ok((out, out_part))
}

/// Mixed-radix digits of `index` for the given local dimensions (first factor most significant).
fn digits(mut index: usize, dims: &[usize], out: &mut [usize]) {
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
}

fn compose(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (&d, &n)| acc * n + d)
}

/// Map from new basis index to old basis index when the factors are reordered
/// so that new factor `k` is old factor `order[k]`.
fn basis_permutation(dims: &[usize], order: &[usize]) -> Vec<usize> {
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let total: usize = dims.iter().product();
    let mut new_digits = vec![0; dims.len()];
    let mut old_digits = vec![0; dims.len()];
    (0..total)
        .map(|idx| {
            digits(idx, &new_dims, &mut new_digits);
            for (k, &old) in order.iter().enumerate() {
                old_digits[old] = new_digits[k];
            }
            compose(&old_digits, dims)
        })
        .collect()
}

fn check_square(rho: &ComplexMatrix, layout: &SubsystemLayout) -> Result<()> {
    if !rho.is_square() || rho.rows() != layout.total_dim() {
        return Err(Error::Dimension(format!(
            "{}x{} matrix for layout of dimension {}",
            rho.rows(),
            rho.cols(),
            layout.total_dim()
        )));
    }
    Ok(())
}

/// Re-expresses `rho` in the tensor factorization `new_order`.
pub fn permute_subsystems<S: AsRef<str>>(
    rho: &ComplexMatrix,
    layout: &SubsystemLayout,
    new_order: &[S],
) -> Result<(ComplexMatrix, SubsystemLayout)> {
    check_square(rho, layout)?;
    if new_order.len() != layout.len() {
        return Err(Error::Layout("new order is not a permutation of the layout".into()));
    }
    let mut order = Vec::with_capacity(new_order.len());
    for l in new_order {
        let k = layout.index_of(l.as_ref())?;
        if order.contains(&k) {
            return Err(Error::Layout(format!("label `{}` repeated", l.as_ref())));
        }
        order.push(k);
    }
    let new_layout = layout.select(new_order)?;
    if order.iter().enumerate().all(|(i, &k)| i == k) {
        return Ok((rho.clone(), new_layout));
    }
    let perm = basis_permutation(layout.dims(), &order);
    let out = ComplexMatrix::from_fn(rho.rows(), rho.cols(), |i, j| rho[(perm[i], perm[j])]);
    Ok((out, new_layout))
}

/// Reduced operator on the `keep` factors. Kept factors stay in layout order.
pub fn partial_trace<S: AsRef<str>>(
    rho: &ComplexMatrix,
    layout: &SubsystemLayout,
    keep: &[S],
) -> Result<(ComplexMatrix, SubsystemLayout)> {
    check_square(rho, layout)?;
    let mut keep_idx = Vec::with_capacity(keep.len());
    for l in keep {
        let k = layout.index_of(l.as_ref())?;
        if !keep_idx.contains(&k) {
            keep_idx.push(k);
        }
    }
    keep_idx.sort_unstable();
    let traced: Vec<usize> = (0..layout.len()).filter(|k| !keep_idx.contains(k)).collect();
    let kept_labels: Vec<String> = keep_idx.iter().map(|&k| layout.labels()[k].clone()).collect();
    let kept_layout = layout.select(&kept_labels)?;
    let order: Vec<usize> = keep_idx.iter().chain(&traced).copied().collect();
    let perm = basis_permutation(layout.dims(), &order);
    let dk = kept_layout.total_dim();
    let dt: usize = traced.iter().map(|&k| layout.dims()[k]).product();
    let mut out = ComplexMatrix::zeros(dk, dk);
    for a in 0..dk {
        for b in 0..dk {
            let mut acc = ZERO;
            for t in 0..dt {
                acc += rho[(perm[a * dt + t], perm[b * dt + t])];
            }
            out[(a, b)] = acc;
        }
    }
    Ok((out, kept_layout))
}

/// Reduced operator on `factors`, returned in exactly the given factor order.
pub fn marginal<S: AsRef<str>>(
    rho: &ComplexMatrix,
    layout: &SubsystemLayout,
    factors: &[S],
) -> Result<(ComplexMatrix, SubsystemLayout)> {
    let (reduced, kept) = partial_trace(rho, layout, factors)?;
    permute_subsystems(&reduced, &kept, factors)
}

/// Commutation permutation: the matrix acting on `a ⊗ b` rewritten on `b ⊗ a`
/// index order, for a row/column space of dims (da, db).
pub fn swap_factors(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let layout = SubsystemLayout::new(vec![da, db], vec!["a", "b"]).unwrap();
    permute_subsystems(m, &layout, &["b", "a"]).unwrap().0
}
