//! Gaussian states and operations in the covariance-matrix picture.
//!
//! Conventions used throughout the crate:
//!
//! * quadratures are ordered `q1..qN, p1..pN` (not interleaved);
//! * `hbar = 2`, so the vacuum has `V = I` and `a = (q + i p) / 2`;
//! * every matrix describes the Heisenberg action `x -> S x` of the gate,
//!   and a state transforms as `V -> S V S^T`, `xi -> S xi`;
//! * the squeezer `S(r, phi)` acts as `a -> a cosh r - e^{i phi} a^dag sinh r`,
//!   so `phi = 0` squeezes `q` and the squeeze axis rotates by `phi / 2`;
//! * a passive interferometer `U` acts as `a -> U a`, which sends a single
//!   photon in mode `i` to `sum_j U_ji |1_j>`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Symplectic form for `n` modes in `qqpp` ordering.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        w[(k, n + k)] = 1.0;
        w[(n + k, k)] = -1.0;
    }
    w
}

fn check_mode(mode: usize, modes: usize) -> Result<()> {
    if mode >= modes {
        return Err(Error::ModeOutOfRange { mode, modes });
    }
    Ok(())
}

/// Real `2N x 2N` matrix preserving the symplectic form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticMatrix(DMatrix<f64>);

impl SymplecticMatrix {
    pub fn identity(modes: usize) -> Self {
        Self(DMatrix::identity(2 * modes, 2 * modes))
    }

    /// Wraps a raw matrix after checking `S Omega S^T = Omega` to `tol`.
    pub fn new(matrix: DMatrix<f64>, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() % 2 != 0 {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows() + matrix.nrows() % 2,
                got: matrix.ncols(),
            });
        }
        let s = Self(matrix);
        let dev = s.symplectic_deviation();
        if dev > tol {
            return Err(Error::NotSymplectic(dev));
        }
        Ok(s)
    }

    pub(crate) fn from_raw(matrix: DMatrix<f64>) -> Self {
        Self(matrix)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn modes(&self) -> usize {
        self.0.nrows() / 2
    }

    /// Max-abs entry of `S Omega S^T - Omega`.
    pub fn symplectic_deviation(&self) -> f64 {
        let w = omega(self.modes());
        (&self.0 * &w * self.0.transpose() - w).amax()
    }

    pub fn is_symplectic(&self, tol: f64) -> bool {
        self.symplectic_deviation() <= tol
    }

    /// Single-mode squeezer embedded at `mode`.
    pub fn squeezer(r: f64, phi: f64, mode: usize, modes: usize) -> Result<Self> {
        check_mode(mode, modes)?;
        let mut s = DMatrix::identity(2 * modes, 2 * modes);
        let (ch, sh) = (r.cosh(), r.sinh());
        let (c, sn) = (phi.cos(), phi.sin());
        let (q, p) = (mode, modes + mode);
        s[(q, q)] = ch - c * sh;
        s[(q, p)] = -sn * sh;
        s[(p, q)] = -sn * sh;
        s[(p, p)] = ch + c * sh;
        Ok(Self(s))
    }

    /// Phase rotation `a -> e^{i phi} a` on one mode.
    pub fn phase(phi: f64, mode: usize, modes: usize) -> Result<Self> {
        check_mode(mode, modes)?;
        let u = DMatrix::from_element(1, 1, C64::from_polar(1.0, phi));
        Self::passive_on(&u, &[mode], modes)
    }

    /// Beamsplitter with transmission `cos^2 theta`: a photon entering `i`
    /// leaves as `cos(theta) |1_i> + e^{i phi} sin(theta) |1_j>`.
    pub fn beamsplitter(theta: f64, phi: f64, i: usize, j: usize, modes: usize) -> Result<Self> {
        check_mode(i, modes)?;
        check_mode(j, modes)?;
        if i == j {
            return Err(Error::ModeCollision(i));
        }
        Self::passive_on(&beamsplitter_unitary(theta, phi), &[i, j], modes)
    }

    /// Passive interferometer with unitary `u` acting on all modes.
    pub fn passive(u: &DMatrix<C64>) -> Result<Self> {
        let modes: Vec<usize> = (0..u.nrows()).collect();
        Self::passive_on(u, &modes, u.nrows())
    }

    /// Passive interferometer with a `k x k` unitary acting on the listed modes.
    pub fn passive_on(u: &DMatrix<C64>, on: &[usize], modes: usize) -> Result<Self> {
        if u.nrows() != on.len() || u.ncols() != on.len() {
            return Err(Error::DimensionMismatch { expected: on.len(), got: u.nrows() });
        }
        check_distinct(on, modes)?;
        let mut s = DMatrix::identity(2 * modes, 2 * modes);
        for (a, &ma) in on.iter().enumerate() {
            for (b, &mb) in on.iter().enumerate() {
                let z = u[(a, b)];
                s[(ma, mb)] = z.re;
                s[(ma, modes + mb)] = -z.im;
                s[(modes + ma, mb)] = z.im;
                s[(modes + ma, modes + mb)] = z.re;
            }
        }
        Ok(Self(s))
    }

    /// Embeds a local symplectic acting on `on` into `modes` modes.
    pub fn embed(&self, on: &[usize], modes: usize) -> Result<Self> {
        let k = self.modes();
        if on.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: on.len() });
        }
        check_distinct(on, modes)?;
        let mut s = DMatrix::identity(2 * modes, 2 * modes);
        let idx = |local: usize| -> usize {
            if local < k {
                on[local]
            } else {
                modes + on[local - k]
            }
        };
        for a in 0..2 * k {
            for b in 0..2 * k {
                s[(idx(a), idx(b))] = self.0[(a, b)];
            }
        }
        Ok(Self(s))
    }

    /// `self` applied after `first`, i.e. the matrix product `self * first`.
    pub fn after(&self, first: &SymplecticMatrix) -> SymplecticMatrix {
        Self(&self.0 * &first.0)
    }

    pub fn inverse(&self) -> SymplecticMatrix {
        let w = omega(self.modes());
        Self(-(&w * self.0.transpose() * &w))
    }

    /// Orthogonal symplectic matrices are exactly the passive ones.
    pub fn is_passive(&self, tol: f64) -> bool {
        let n = self.0.nrows();
        (&self.0 * self.0.transpose() - DMatrix::<f64>::identity(n, n)).amax() <= tol
    }

    /// Bogoliubov form `a -> U a + W a^dag`.
    pub fn bogoliubov(&self) -> (DMatrix<C64>, DMatrix<C64>) {
        let n = self.modes();
        let s = &self.0;
        let u = DMatrix::from_fn(n, n, |i, j| {
            C64::new(
                0.5 * (s[(i, j)] + s[(n + i, n + j)]),
                0.5 * (s[(n + i, j)] - s[(i, n + j)]),
            )
        });
        let w = DMatrix::from_fn(n, n, |i, j| {
            C64::new(
                0.5 * (s[(i, j)] - s[(n + i, n + j)]),
                0.5 * (s[(n + i, j)] + s[(i, n + j)]),
            )
        });
        (u, w)
    }

    /// Unitary of a passive symplectic matrix (no check).
    pub fn passive_unitary(&self) -> DMatrix<C64> {
        self.bogoliubov().0
    }
}

fn check_distinct(on: &[usize], modes: usize) -> Result<()> {
    for (a, &m) in on.iter().enumerate() {
        check_mode(m, modes)?;
        if on[..a].contains(&m) {
            return Err(Error::ModeCollision(m));
        }
    }
    Ok(())
}

/// `2 x 2` unitary of [`SymplecticMatrix::beamsplitter`].
pub fn beamsplitter_unitary(theta: f64, phi: f64) -> DMatrix<C64> {
    let (c, s) = (theta.cos(), theta.sin());
    let e = C64::from_polar(1.0, phi);
    DMatrix::from_row_slice(2, 2, &[C64::from(c), -e.conj() * s, e * s, C64::from(c)])
}

/// Gaussian state as covariance matrix and displacement (`hbar = 2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceState {
    pub v: DMatrix<f64>,
    pub xi: DVector<f64>,
}

impl CovarianceState {
    pub fn vacuum(modes: usize) -> Self {
        Self {
            v: DMatrix::identity(2 * modes, 2 * modes),
            xi: DVector::zeros(2 * modes),
        }
    }

    pub fn new(v: DMatrix<f64>, xi: DVector<f64>) -> Result<Self> {
        if v.nrows() != v.ncols() || v.nrows() % 2 != 0 || xi.len() != v.nrows() {
            return Err(Error::DimensionMismatch { expected: v.nrows(), got: xi.len() });
        }
        Ok(Self { v, xi })
    }

    pub fn modes(&self) -> usize {
        self.v.nrows() / 2
    }

    pub fn apply_symplectic(&self, s: &SymplecticMatrix) -> Result<Self> {
        if s.modes() != self.modes() {
            return Err(Error::DimensionMismatch { expected: self.modes(), got: s.modes() });
        }
        let m = s.matrix();
        Ok(Self {
            v: m * &self.v * m.transpose(),
            xi: m * &self.xi,
        })
    }

    /// Displaces `mode` by the complex amplitude `alpha`.
    pub fn displace(&self, alpha: C64, mode: usize) -> Result<Self> {
        check_mode(mode, self.modes())?;
        let mut out = self.clone();
        let n = self.modes();
        out.xi[mode] += 2.0 * alpha.re;
        out.xi[n + mode] += 2.0 * alpha.im;
        Ok(out)
    }

    /// Pure-loss channel of transmissivity `eta` on one mode.
    pub fn apply_loss(&self, eta: f64, mode: usize) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidTransmissivity(eta));
        }
        let n = self.modes();
        check_mode(mode, n)?;
        let t = eta.sqrt();
        let mut v = self.v.clone();
        let mut xi = self.xi.clone();
        for idx in [mode, n + mode] {
            for k in 0..2 * n {
                v[(idx, k)] *= t;
                v[(k, idx)] *= t;
            }
            v[(idx, idx)] += 1.0 - eta;
            xi[idx] *= t;
        }
        Ok(Self { v, xi })
    }

    /// Marginal state on the listed modes, in the listed order.
    pub fn reduced(&self, on: &[usize]) -> Result<Self> {
        let n = self.modes();
        check_distinct(on, n)?;
        let k = on.len();
        let idx: Vec<usize> = on.iter().copied().chain(on.iter().map(|m| n + m)).collect();
        let v = DMatrix::from_fn(2 * k, 2 * k, |a, b| self.v[(idx[a], idx[b])]);
        let xi = DVector::from_fn(2 * k, |a, _| self.xi[idx[a]]);
        Ok(Self { v, xi })
    }

    /// Reorders modes so that mode `order[k]` becomes mode `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.modes() {
            return Err(Error::DimensionMismatch { expected: self.modes(), got: order.len() });
        }
        self.reduced(order)
    }

    /// Smallest eigenvalue of `V + i Omega`; the state is physical when it is `>= 0`.
    pub fn uncertainty_min_eigenvalue(&self) -> f64 {
        let n = self.modes();
        let w = omega(n);
        let mut h = DMatrix::zeros(4 * n, 4 * n);
        h.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&self.v);
        h.view_mut((2 * n, 2 * n), (2 * n, 2 * n)).copy_from(&self.v);
        h.view_mut((0, 2 * n), (2 * n, 2 * n)).copy_from(&(-&w));
        h.view_mut((2 * n, 0), (2 * n, 2 * n)).copy_from(&w);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    /// Purity is `1 / sqrt(det V)`; pure states have `det V = 1`.
    pub fn det(&self) -> f64 {
        self.v.determinant()
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.det() - 1.0).abs() <= tol
    }

    /// Wigner function at a phase-space point (normalized to 1 over `dq dp`).
    pub fn wigner(&self, x: &[f64]) -> Result<f64> {
        let dim = self.v.nrows();
        if x.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
        }
        if !self.v.iter().all(|z| z.is_finite()) {
            return Err(Error::SingularCovariance);
        }
        let det = self.v.determinant();
        if det <= 0.0 {
            return Err(Error::SingularCovariance);
        }
        let inv = self.v.clone().try_inverse().ok_or(Error::SingularCovariance)?;
        let d = DVector::from_fn(dim, |k, _| x[k] - self.xi[k]);
        let quad = (d.transpose() * inv * &d)[(0, 0)];
        let norm = (2.0 * std::f64::consts::PI).powi(self.modes() as i32) * det.sqrt();
        Ok((-0.5 * quad).exp() / norm)
    }
}

/// `S = O_out * diag(e^{-r}, e^{r}) * O_in` with passive outer factors.
#[derive(Debug, Clone)]
pub struct BlochMessiah {
    pub o_in: SymplecticMatrix,
    pub squeezing: Vec<f64>,
    pub o_out: SymplecticMatrix,
}

impl BlochMessiah {
    pub fn squeeze_layer(&self) -> SymplecticMatrix {
        let n = self.squeezing.len();
        let mut d = DMatrix::identity(2 * n, 2 * n);
        for (k, r) in self.squeezing.iter().enumerate() {
            d[(k, k)] = (-r).exp();
            d[(n + k, n + k)] = r.exp();
        }
        SymplecticMatrix(d)
    }

    pub fn reconstruct(&self) -> SymplecticMatrix {
        self.o_out.after(&self.squeeze_layer()).after(&self.o_in)
    }
}

const BM_CLUSTER_TOL: f64 = 1e-7;

/// Bloch-Messiah decomposition of a symplectic matrix.
///
/// The output passive factor diagonalizes `S S^T`; eigenvalues are sorted
/// ascending (strongest squeezing first) with a stable tie-break on the
/// eigenvector index, and the unsqueezed cluster is completed by symplectic
/// Gram-Schmidt.
pub fn bloch_messiah(s: &SymplecticMatrix) -> Result<BlochMessiah> {
    let n = s.modes();
    let scale = s.matrix().amax().max(1.0);
    let dev = s.symplectic_deviation();
    if dev > 1e-8 * scale * scale {
        return Err(Error::NotSymplectic(dev));
    }
    let m = s.matrix() * s.matrix().transpose();
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut neutral: Vec<DVector<f64>> = Vec::new();
    for &k in &order {
        let lam = eig.eigenvalues[k];
        let vec = eig.eigenvectors.column(k).into_owned();
        if lam < 1.0 - BM_CLUSTER_TOL {
            basis.push(vec);
        } else if lam <= 1.0 + BM_CLUSTER_TOL {
            neutral.push(vec);
        }
    }
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(n);
    for v in basis.into_iter().chain(neutral) {
        if chosen.len() == n {
            break;
        }
        if let Some(w) = symplectic_orthonormalize(&v, &chosen, n) {
            chosen.push(w);
        }
    }
    if chosen.len() != n {
        return Err(Error::Numeric("Bloch-Messiah: could not complete the passive basis".into()));
    }

    let mut o_out = DMatrix::zeros(2 * n, 2 * n);
    for (k, v) in chosen.iter().enumerate() {
        o_out.set_column(k, v);
        o_out.set_column(n + k, &rotate_quarter(v, n));
    }
    let d2 = o_out.transpose() * &m * &o_out;
    let squeezing: Vec<f64> = (0..n)
        .map(|k| 0.25 * (d2[(n + k, n + k)] / d2[(k, k)]).ln())
        .collect();
    let mut inv_sq = DMatrix::identity(2 * n, 2 * n);
    for (k, r) in squeezing.iter().enumerate() {
        inv_sq[(k, k)] = r.exp();
        inv_sq[(n + k, n + k)] = (-r).exp();
    }
    let o_in = inv_sq * o_out.transpose() * s.matrix();
    Ok(BlochMessiah {
        o_in: SymplecticMatrix(o_in),
        squeezing,
        o_out: SymplecticMatrix(o_out),
    })
}

/// `Omega^T v`: maps the `q`-like column of a passive matrix to its `p` partner.
fn rotate_quarter(v: &DVector<f64>, n: usize) -> DVector<f64> {
    DVector::from_fn(2 * n, |k, _| if k < n { -v[n + k] } else { v[k - n] })
}

fn symplectic_orthonormalize(
    v: &DVector<f64>,
    chosen: &[DVector<f64>],
    n: usize,
) -> Option<DVector<f64>> {
    let mut w = v.clone();
    for _ in 0..2 {
        for c in chosen {
            let partner = rotate_quarter(c, n);
            w -= c * c.dot(&w);
            w -= &partner * partner.dot(&w);
        }
    }
    let norm = w.norm();
    if norm < 0.5 {
        return None;
    }
    Some(w / norm)
}

/// Positive square root of a pure-state covariance matrix, which is itself
/// symplectic and prepares the state from vacuum.
pub fn preparation_symplectic(state: &CovarianceState, tol: f64) -> Result<SymplecticMatrix> {
    let det = state.det();
    if (det - 1.0).abs() > tol {
        return Err(Error::MixedState(det));
    }
    let eig = SymmetricEigen::new(state.v.clone());
    if eig.eigenvalues.min() <= 0.0 {
        return Err(Error::SingularCovariance);
    }
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    Ok(SymplecticMatrix(&eig.eigenvectors * root * eig.eigenvectors.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn squeezer_at_zero_phase_is_diagonal() {
        let s = SymplecticMatrix::squeezer(0.5, 0.0, 0, 1).unwrap();
        assert_abs_diff_eq!(s.matrix()[(0, 0)], (-0.5f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.matrix()[(1, 1)], 0.5f64.exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.matrix()[(0, 1)], 0.0);
    }

    #[test]
    fn zero_squeezing_is_identity() {
        let s = SymplecticMatrix::squeezer(0.0, 1.3, 1, 3).unwrap();
        assert_eq!(s, SymplecticMatrix::identity(3));
    }

    #[test]
    fn constructors_reject_bad_modes() {
        assert!(matches!(
            SymplecticMatrix::squeezer(0.1, 0.0, 2, 2),
            Err(Error::ModeOutOfRange { .. })
        ));
        assert!(matches!(
            SymplecticMatrix::beamsplitter(0.1, 0.0, 1, 1, 2),
            Err(Error::ModeCollision(1))
        ));
        assert!(SymplecticMatrix::beamsplitter(0.1, 0.0, 0, 3, 2).is_err());
    }

    #[test]
    fn balanced_beamsplitter_mixes_with_inverse_sqrt2() {
        let s = SymplecticMatrix::beamsplitter(std::f64::consts::FRAC_PI_4, 0.0, 0, 1, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = s.matrix();
        assert_abs_diff_eq!(m[(0, 0)], h, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(0, 1)], -h, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 0)], h, epsilon = 1e-15);
        assert_abs_diff_eq!(m[(1, 1)], h, epsilon = 1e-15);
        assert!(s.is_passive(1e-14));
    }

    #[test]
    fn squeezed_vacuum_covariance() {
        let s = SymplecticMatrix::squeezer(0.5, 0.0, 0, 1).unwrap();
        let st = CovarianceState::vacuum(1).apply_symplectic(&s).unwrap();
        assert_abs_diff_eq!(st.v[(0, 0)], (-1.0f64).exp(), epsilon = 1e-14);
        assert_abs_diff_eq!(st.v[(1, 1)], 1.0f64.exp(), epsilon = 1e-14);
    }

    #[test]
    fn apply_rejects_dimension_mismatch() {
        let s = SymplecticMatrix::identity(2);
        assert!(CovarianceState::vacuum(1).apply_symplectic(&s).is_err());
    }

    #[test]
    fn loss_endpoints() {
        let s = SymplecticMatrix::squeezer(0.7, 0.3, 0, 2).unwrap();
        let st = CovarianceState::vacuum(2)
            .apply_symplectic(&s)
            .unwrap()
            .displace(C64::new(0.4, -0.2), 0)
            .unwrap();
        assert_eq!(st.apply_loss(1.0, 0).unwrap(), st);
        let dead = st.apply_loss(0.0, 0).unwrap();
        assert_abs_diff_eq!(dead.v[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dead.v[(2, 2)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dead.v[(0, 2)], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dead.xi[0], 0.0);
        assert!(matches!(st.apply_loss(1.2, 0), Err(Error::InvalidTransmissivity(_))));
    }

    #[test]
    fn lossy_squeezed_variances() {
        let (r, eta) = (0.6, 0.8);
        let s = SymplecticMatrix::squeezer(r, 0.0, 0, 1).unwrap();
        let st = CovarianceState::vacuum(1).apply_symplectic(&s).unwrap().apply_loss(eta, 0).unwrap();
        assert_abs_diff_eq!(st.v[(0, 0)], eta * (-2.0 * r).exp() + 1.0 - eta, epsilon = 1e-14);
        assert_abs_diff_eq!(st.v[(1, 1)], eta * (2.0 * r).exp() + 1.0 - eta, epsilon = 1e-14);
    }

    #[test]
    fn vacuum_wigner_peak() {
        let st = CovarianceState::vacuum(2);
        let w = st.wigner(&[0.0; 4]).unwrap();
        assert_abs_diff_eq!(w, (2.0 * std::f64::consts::PI).powi(-2), epsilon = 1e-15);
    }

    #[test]
    fn singular_covariance_rejected() {
        let st = CovarianceState::new(DMatrix::zeros(2, 2), DVector::zeros(2)).unwrap();
        assert!(matches!(st.wigner(&[0.0, 0.0]), Err(Error::SingularCovariance)));
    }

    #[test]
    fn bloch_messiah_single_squeezer() {
        let s = SymplecticMatrix::squeezer(0.8, 0.9, 0, 1).unwrap();
        let bm = bloch_messiah(&s).unwrap();
        assert_abs_diff_eq!(bm.squeezing[0], 0.8, epsilon = 1e-12);
        assert!(bm.o_in.is_passive(1e-12));
        assert!(bm.o_out.is_passive(1e-12));
    }

    #[test]
    fn bloch_messiah_passive_has_no_squeezing() {
        let s = SymplecticMatrix::beamsplitter(0.4, 1.1, 0, 2, 3)
            .unwrap()
            .after(&SymplecticMatrix::phase(0.3, 1, 3).unwrap());
        let bm = bloch_messiah(&s).unwrap();
        for r in &bm.squeezing {
            assert_abs_diff_eq!(*r, 0.0, epsilon = 1e-12);
        }
        assert!((bm.reconstruct().matrix() - s.matrix()).amax() < 1e-12);
    }

    #[test]
    fn bloch_messiah_rejects_non_symplectic() {
        let s = SymplecticMatrix::from_raw(DMatrix::from_diagonal_element(2, 2, 2.0));
        assert!(matches!(bloch_messiah(&s), Err(Error::NotSymplectic(_))));
    }

    #[test]
    fn preparation_root_rebuilds_covariance() {
        let s = SymplecticMatrix::squeezer(0.4, 0.2, 0, 2)
            .unwrap()
            .after(&SymplecticMatrix::beamsplitter(0.3, 0.5, 0, 1, 2).unwrap())
            .after(&SymplecticMatrix::squeezer(0.9, -1.0, 1, 2).unwrap());
        let st = CovarianceState::vacuum(2).apply_symplectic(&s).unwrap();
        let root = preparation_symplectic(&st, 1e-9).unwrap();
        assert!(root.is_symplectic(1e-10));
        let back = CovarianceState::vacuum(2).apply_symplectic(&root).unwrap();
        assert!((back.v - st.v.clone()).amax() < 1e-12);
        let mixed = st.apply_loss(0.5, 0).unwrap();
        assert!(matches!(preparation_symplectic(&mixed, 1e-9), Err(Error::MixedState(_))));
    }
}
