//! Largest GHZ fidelity compatible with the trace-norm criterion on `{σz11, 1σz1, 11σz}`.
//!
//! States are `F |GHZ><GHZ| + (1 - F) ϱ̃` with `<GHZ|ϱ̃|GHZ> = 0`. The
//! criterion only sees σz statistics, and among GHZ-orthogonal states those
//! are spanned by the six mixed strings `|001>, ..., |110>` and the phase
//! partner `|GHZ->` (whose statistics are half `000`, half `111`). The noise
//! family is therefore a 7-weight simplex. A GHZ-orthogonal PSD `ϱ̃` cannot
//! put weight on `000` or `111` except through `|GHZ->`, which forces
//! `p(000) = p(111)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::states::DensityOperator;
use crate::tensor::{ComplexMatrix, SubsystemLayout, ONE, ZERO};

pub const WEIGHTS: usize = 7;
const MIXED_STRINGS: [usize; 6] = [1, 2, 3, 4, 5, 6];

/// z eigenvalue of qubit `q` (0 = A, most significant) in basis string `s`.
fn z(s: usize, q: usize) -> f64 {
    if (s >> (2 - q)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn distribution(f: f64, w: &[f64; WEIGHTS]) -> [f64; 8] {
    let mut p = [0.0; 8];
    let g = 0.5 * (f + (1.0 - f) * w[6]);
    p[0] = g;
    p[7] = g;
    for (k, &s) in MIXED_STRINGS.iter().enumerate() {
        p[s] = (1.0 - f) * w[k];
    }
    p
}

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// `tr Γ - 2 sum_{i<j} |Γ_ij|` for the σz covariance matrix of the family member.
pub fn margin(f: f64, w: &[f64; WEIGHTS]) -> f64 {
    margin_and_gradient(f, w).0
}

fn margin_and_gradient(f: f64, w: &[f64; WEIGHTS]) -> (f64, [f64; WEIGHTS]) {
    let p = distribution(f, w);
    let mut m = [0.0; 3];
    for (q, mq) in m.iter_mut().enumerate() {
        *mq = (0..8).map(|s| p[s] * z(s, q)).sum();
    }
    let mut cov = [0.0; 3];
    for (k, &(i, j)) in PAIRS.iter().enumerate() {
        let c: f64 = (0..8).map(|s| p[s] * z(s, i) * z(s, j)).sum();
        cov[k] = c - m[i] * m[j];
    }
    let value = m.iter().map(|x| 1.0 - x * x).sum::<f64>() - 2.0 * cov.iter().map(|c| c.abs()).sum::<f64>();
    // d value / d p_s
    let mut dp = [0.0; 8];
    for (s, d) in dp.iter_mut().enumerate() {
        let mut g = m.iter().enumerate().map(|(q, mq)| -2.0 * mq * z(s, q)).sum::<f64>();
        for (k, &(i, j)) in PAIRS.iter().enumerate() {
            let dc = z(s, i) * z(s, j) - z(s, i) * m[j] - m[i] * z(s, j);
            g -= 2.0 * cov[k].signum() * dc;
        }
        *d = g;
    }
    let mut grad = [0.0; WEIGHTS];
    for (k, &s) in MIXED_STRINGS.iter().enumerate() {
        grad[k] = (1.0 - f) * dp[s];
    }
    grad[6] = 0.5 * (1.0 - f) * (dp[0] + dp[7]);
    (value, grad)
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64; WEIGHTS]) {
    let mut u = *v;
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

#[derive(Clone, Debug)]
pub struct FidelitySearch {
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for FidelitySearch {
    fn default() -> Self {
        Self {
            restarts: 20,
            iterations: 4000,
            seed: 0,
        }
    }
}

/// Best noise weights found for one fidelity.
#[derive(Clone, Debug, Serialize)]
pub struct InnerOptimum {
    pub margin: f64,
    pub weights: [f64; WEIGHTS],
}

/// Maximizes the criterion margin over the noise simplex by projected
/// subgradient ascent with random restarts (the first start is uniform).
pub fn maximize_margin(f: f64, search: &FidelitySearch) -> InnerOptimum {
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    let mut best = InnerOptimum {
        margin: f64::NEG_INFINITY,
        weights: [0.0; WEIGHTS],
    };
    for restart in 0..search.restarts.max(1) {
        let mut w = [1.0 / WEIGHTS as f64; WEIGHTS];
        if restart > 0 {
            let mut total = 0.0;
            for x in w.iter_mut() {
                // uniform on the simplex via normalized exponentials
                *x = -rng.random::<f64>().max(1e-300).ln();
                total += *x;
            }
            for x in w.iter_mut() {
                *x /= total;
            }
        }
        for t in 0..search.iterations {
            let (value, grad) = margin_and_gradient(f, &w);
            if value > best.margin {
                best = InnerOptimum { margin: value, weights: w };
            }
            let step = 0.5 / ((t + 1) as f64).sqrt();
            for (x, g) in w.iter_mut().zip(grad) {
                *x += step * g;
            }
            project_simplex(&mut w);
        }
        let value = margin(f, &w);
        if value > best.margin {
            best = InnerOptimum { margin: value, weights: w };
        }
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct FidelityBound {
    pub bound: f64,
    pub tolerance: f64,
    pub weights_at_bound: [f64; WEIGHTS],
    pub margin_at_bound: f64,
    pub bisection_steps: usize,
}

/// Largest `F` for which some family member satisfies the criterion, to
/// bisection accuracy `tol`. States with larger fidelity violate the
/// criterion for every noise in the family.
pub fn ghz_fidelity_bound(search: &FidelitySearch, tol: f64) -> Result<FidelityBound> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let sat = |f: f64| maximize_margin(f, search);
    let slack = 1e-12;
    let at_zero = sat(0.0);
    if at_zero.margin < -slack {
        return Err(Error::NonConvergence(format!(
            "no satisfying noise found at F = 0 (best margin {:.3e})",
            at_zero.margin
        )));
    }
    if sat(1.0).margin >= -slack {
        return Err(Error::NoSignChange { lo: 0.0, hi: 1.0 });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut best = at_zero;
    let mut steps = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let opt = sat(mid);
        if opt.margin >= -slack {
            lo = mid;
            best = opt;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    Ok(FidelityBound {
        bound: lo,
        tolerance: tol,
        weights_at_bound: best.weights,
        margin_at_bound: best.margin,
        bisection_steps: steps,
    })
}

/// The family member as a density operator on qubits `A, B, C`.
pub fn family_state(f: f64, w: &[f64; WEIGHTS]) -> Result<DensityOperator> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut ghz = vec![ZERO; 8];
    ghz[0] = ONE * s;
    ghz[7] = ONE * s;
    let mut ghz_minus = ghz.clone();
    ghz_minus[7] = -ONE * s;
    let mut m = ComplexMatrix::outer(&ghz).scale(f);
    m = &m + &ComplexMatrix::outer(&ghz_minus).scale((1.0 - f) * w[6]);
    for (k, &st) in MIXED_STRINGS.iter().enumerate() {
        m[(st, st)] += ONE * ((1.0 - f) * w[k]);
    }
    DensityOperator::new(m, SubsystemLayout::new(vec![2; 3], vec!["A", "B", "C"])?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_of_pure_ghz() {
        let w = [0.0; WEIGHTS];
        assert!((margin(1.0, &w) + 3.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_projection() {
        let mut v = [0.5, 0.5, 0.5, 0.0, 0.0, 0.0, -1.0];
        project_simplex(&mut v);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(v.iter().all(|&x| x >= 0.0));
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let w = [0.1, 0.2, 0.05, 0.15, 0.2, 0.1, 0.2];
        let (_, g) = margin_and_gradient(0.4, &w);
        for k in 0..WEIGHTS {
            let mut wp = w;
            wp[k] += 1e-7;
            let mut wm = w;
            wm[k] -= 1e-7;
            let fd = (margin(0.4, &wp) - margin(0.4, &wm)) / 2e-7;
            assert!((fd - g[k]).abs() < 1e-5, "k = {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn zero_fidelity_is_satisfiable() {
        assert!(maximize_margin(0.0, &FidelitySearch::default()).margin >= -1e-12);
    }
}
