//! Exact Fock-basis amplitudes of Gaussian objects via the multivariate
//! Hermite recurrence.
//!
//! A Gaussian object is represented by its generating function
//! `c * exp(z^T A z / 2 + b^T z)`; the coefficient of `z^k / sqrt(k!)` is the
//! Fock amplitude with occupations `k`. The recurrence
//!
//! ```text
//! g[k + e_i] = (b_i g[k] + sum_j A_ij sqrt(k_j) g[k - e_j]) / sqrt(k_i + 1)
//! ```
//!
//! fills any box of occupations without truncation error inside the box.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{CovarianceState, SymplecticMatrix, C64};

#[derive(Debug, Clone)]
pub struct Bargmann {
    pub a: DMatrix<C64>,
    pub b: DVector<C64>,
    pub c: C64,
}

impl Bargmann {
    pub fn vars(&self) -> usize {
        self.b.len()
    }

    /// Pure state `D(xi) G |0>` where `G` has symplectic matrix `s`.
    ///
    /// The amplitudes are exact; the global phase is fixed by taking
    /// `<0|G|0>` real and positive.
    pub fn pure_state(s: &SymplecticMatrix, xi: &DVector<f64>) -> Result<Self> {
        let n = s.modes();
        if xi.len() != 2 * n {
            return Err(Error::DimensionMismatch { expected: 2 * n, got: xi.len() });
        }
        let (u, w) = s.bogoliubov();
        let u_adj_inv = u
            .adjoint()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("singular Bogoliubov block".into()))?;
        let a = u_adj_inv * w.transpose();
        let a = (&a + a.transpose()).scale(0.5);
        let beta = DVector::from_fn(n, |k, _| C64::new(0.5 * xi[k], 0.5 * xi[n + k]));
        let beta_c = beta.conjugate();
        let b = &beta - &a * &beta_c;
        let det = u.determinant().norm();
        let quad = (beta_c.transpose() * &a * &beta_c)[(0, 0)];
        let c = C64::from(det.powf(-0.5)) * (C64::from(-0.5 * beta.norm_squared()) + 0.5 * quad).exp();
        Ok(Self { a, b, c })
    }

    /// Density matrix of a (possibly mixed) Gaussian state.
    ///
    /// Variables are ordered `(ket_1..ket_N, bra_1..bra_N)`, so the
    /// coefficient at `(m, n)` is `<m|rho|n>`.
    pub fn density(state: &CovarianceState) -> Result<Self> {
        let n = state.modes();
        let t = transfer(n);
        let v = state.v.map(C64::from);
        let xi = state.xi.map(C64::from);
        let sigma = &t * v * t.adjoint();
        let q = sigma + DMatrix::identity(2 * n, 2 * n).scale(0.5);
        let q_inv = q
            .clone()
            .try_inverse()
            .ok_or(Error::SingularCovariance)?;
        let x = swap_blocks(n);
        let a = (DMatrix::identity(2 * n, 2 * n) - &q_inv) * x;
        let a = (&a + a.transpose()).scale(0.5);
        let beta = &t * xi;
        let b = &q_inv * &beta;
        let quad = (beta.adjoint() * &q_inv * &beta)[(0, 0)];
        let det = q.determinant();
        if det.re <= 0.0 {
            return Err(Error::SingularCovariance);
        }
        let c = (-0.5 * quad).exp() / det.sqrt();
        Ok(Self { a, b, c })
    }

    /// Fills the occupation box `dims` (row-major, last variable fastest).
    pub fn amplitudes(&self, dims: &[usize]) -> Vec<C64> {
        let d = dims.len();
        assert_eq!(d, self.vars(), "box rank must match the variable count");
        let size: usize = dims.iter().product();
        let mut out = vec![C64::new(0.0, 0.0); size];
        if size == 0 {
            return out;
        }
        let mut strides = vec![1usize; d];
        for k in (0..d.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let max_dim = dims.iter().copied().max().unwrap_or(1);
        let sqrt: Vec<f64> = (0..=max_dim).map(|k| (k as f64).sqrt()).collect();
        let inv_sqrt: Vec<f64> = sqrt.iter().map(|s| if *s > 0.0 { 1.0 / s } else { 0.0 }).collect();

        out[0] = self.c;
        let mut idx = vec![0usize; d];
        for lin in 1..size {
            // advance the multi-index
            let mut k = d - 1;
            loop {
                idx[k] += 1;
                if idx[k] < dims[k] {
                    break;
                }
                idx[k] = 0;
                k -= 1;
            }
            // lower along the first nonzero axis
            let i = idx.iter().position(|&x| x > 0).unwrap();
            let prev = lin - strides[i];
            let mut acc = self.b[i] * out[prev];
            for j in 0..d {
                let kj = if j == i { idx[j] - 1 } else { idx[j] };
                if kj > 0 {
                    acc += self.a[(i, j)] * sqrt[kj] * out[prev - strides[j]];
                }
            }
            out[lin] = acc * inv_sqrt[idx[i]];
        }
        out
    }
}

/// `T` with `(a, a^dag) = T (q, p)` for `hbar = 2`.
fn transfer(n: usize) -> DMatrix<C64> {
    let mut t = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        t[(k, k)] = C64::new(0.5, 0.0);
        t[(k, n + k)] = C64::new(0.0, 0.5);
        t[(n + k, k)] = C64::new(0.5, 0.0);
        t[(n + k, n + k)] = C64::new(0.0, -0.5);
    }
    t
}

fn swap_blocks(n: usize) -> DMatrix<C64> {
    let mut x = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        x[(k, n + k)] = C64::new(1.0, 0.0);
        x[(n + k, k)] = C64::new(1.0, 0.0);
    }
    x
}

/// Fock matrix `<m|G|n>` of a single-mode Gaussian unitary given its
/// two-variable kernel; rows are output occupations.
pub(crate) fn single_mode_kernel(a: [[C64; 2]; 2], b: [C64; 2], c: C64, cutoff: usize) -> DMatrix<C64> {
    let g = Bargmann {
        a: DMatrix::from_row_slice(2, 2, &[a[0][0], a[0][1], a[1][0], a[1][1]]),
        b: DVector::from_row_slice(&b),
        c,
    };
    let amps = g.amplitudes(&[cutoff, cutoff]);
    DMatrix::from_row_slice(cutoff, cutoff, &amps)
}

/// Probability that the listed modes of `state` show exactly `pattern`.
pub fn pattern_probability(state: &CovarianceState, modes: &[usize], pattern: &[usize]) -> Result<f64> {
    if modes.len() != pattern.len() {
        return Err(Error::DimensionMismatch { expected: modes.len(), got: pattern.len() });
    }
    let red = state.reduced(modes)?;
    let g = Bargmann::density(&red)?;
    let dims: Vec<usize> = pattern.iter().chain(pattern.iter()).map(|n| n + 1).collect();
    let amps = g.amplitudes(&dims);
    Ok(amps[amps.len() - 1].re.max(0.0))
}

/// Diagonal of the reduced density matrix on `modes` over the box
/// `0..=n_max` per mode, keyed by row-major pattern index.
pub fn pattern_distribution(state: &CovarianceState, modes: &[usize], n_max: usize) -> Result<Vec<(Vec<usize>, f64)>> {
    let red = state.reduced(modes)?;
    let g = Bargmann::density(&red)?;
    let m = modes.len();
    let dims = vec![n_max + 1; 2 * m];
    let amps = g.amplitudes(&dims);
    let side: usize = (n_max + 1).pow(m as u32);
    let mut out = Vec::with_capacity(side);
    for lin in 0..side {
        let mut pat = vec![0usize; m];
        let mut rest = lin;
        for k in (0..m).rev() {
            pat[k] = rest % (n_max + 1);
            rest /= n_max + 1;
        }
        out.push((pat, amps[lin * side + lin].re.max(0.0)));
    }
    Ok(out)
}
