//! Random instances for property suites: Ginibre density operators, Haar
//! unitaries and Kraus channels.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::states::KrausChannel;
use crate::tensor::{eigh, ComplexMatrix};

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// `G G^dagger / tr(G G^dagger)` with `G` a square Ginibre matrix.
pub fn density_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, d, rng);
    let m = g.matmul(&g.adjoint());
    let tr = m.trace().re;
    m.scale(1.0 / tr).hermitian_part()
}

/// Haar-random unitary from the phase-corrected QR decomposition of a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(d, d, rng).to_nalgebra();
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = ComplexMatrix::from_nalgebra(&q);
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..d {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Random channel `C^{d_in} -> C^{d_out}` with `n` Kraus operators. Needs
/// `n * d_out >= d_in`, otherwise no trace-preserving set exists.
pub fn channel<R: Rng + ?Sized>(d_in: usize, d_out: usize, n: usize, rng: &mut R) -> Result<KrausChannel> {
    if n * d_out < d_in {
        return Err(Error::InvalidArgument(format!(
            "{n} Kraus operators of size {d_out}x{d_in} cannot be trace preserving"
        )));
    }
    let raw: Vec<ComplexMatrix> = (0..n).map(|_| ginibre(d_out, d_in, rng)).collect();
    let mut s = ComplexMatrix::zeros(d_in, d_in);
    for k in &raw {
        s = &s + &k.adjoint().matmul(k);
    }
    let (vals, vecs) = eigh(&s.hermitian_part()).expect("Gram matrix is Hermitian");
    let inv_sqrt: Vec<f64> = vals.iter().map(|&l| 1.0 / l.sqrt()).collect();
    let s_inv_sqrt = vecs.matmul(&ComplexMatrix::diag_real(&inv_sqrt)).matmul(&vecs.adjoint());
    let ops = raw.iter().map(|k| k.matmul(&s_inv_sqrt)).collect();
    KrausChannel::new(ops)
}

/// Random real orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
