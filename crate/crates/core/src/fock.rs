//! Truncated multimode Fock-space states and Gaussian gates acting on them.
//!
//! A [`FockTensor`] stores the amplitudes of a pure state on the box
//! `c_0 x c_1 x ... x c_{N-1}` in row-major order (last mode fastest). Every
//! gate application accumulates the squared norm that leaked past the cutoffs
//! into [`FockTensor::truncation`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::bargmann::single_mode_kernel;
use crate::error::{Error, Result};
use crate::gaussian::{beamsplitter_unitary, bloch_messiah, preparation_symplectic, CovarianceState, C64};
use crate::mesh::Mesh;

/// Default truncation tolerance for states intended to be normalized.
pub const TRUNCATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockTensor {
    cutoffs: Vec<usize>,
    amps: Vec<C64>,
    #[serde(default)]
    truncation: f64,
}

fn strides_of(cutoffs: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; cutoffs.len()];
    for k in (0..cutoffs.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * cutoffs[k + 1];
    }
    s
}

/// Offsets of every multi-index whose entries on `skip` are zero.
fn base_offsets(cutoffs: &[usize], strides: &[usize], skip: &[usize]) -> Vec<usize> {
    let mut offsets = vec![0usize];
    for (m, (&c, &s)) in cutoffs.iter().zip(strides).enumerate() {
        if skip.contains(&m) {
            continue;
        }
        offsets = offsets
            .iter()
            .flat_map(|&o| (0..c).map(move |k| o + k * s))
            .collect();
    }
    offsets
}

impl FockTensor {
    pub fn vacuum(cutoffs: &[usize]) -> Result<Self> {
        Self::fock_input(&vec![0; cutoffs.len()], cutoffs)
    }

    /// Product Fock state `|n_0, n_1, ...>`.
    pub fn fock_input(occupations: &[usize], cutoffs: &[usize]) -> Result<Self> {
        if occupations.len() != cutoffs.len() {
            return Err(Error::DimensionMismatch { expected: cutoffs.len(), got: occupations.len() });
        }
        for (&n, &c) in occupations.iter().zip(cutoffs) {
            if n >= c {
                return Err(Error::OccupationBeyondCutoff { occupation: n, cutoff: c });
            }
        }
        let size: usize = cutoffs.iter().product();
        let mut amps = vec![C64::new(0.0, 0.0); size];
        let strides = strides_of(cutoffs);
        let idx: usize = occupations.iter().zip(&strides).map(|(n, s)| n * s).sum();
        amps[idx] = C64::new(1.0, 0.0);
        Ok(Self { cutoffs: cutoffs.to_vec(), amps, truncation: 0.0 })
    }

    pub fn from_amplitudes(cutoffs: &[usize], amps: Vec<C64>) -> Result<Self> {
        if cutoffs.iter().any(|&c| c == 0) {
            return Err(Error::InvalidParameter("cutoffs must be at least 1".into()));
        }
        let size: usize = cutoffs.iter().product();
        if amps.len() != size {
            return Err(Error::DimensionMismatch { expected: size, got: amps.len() });
        }
        Ok(Self { cutoffs: cutoffs.to_vec(), amps, truncation: 0.0 })
    }

    pub fn single_mode(amps: Vec<C64>) -> Self {
        let c = amps.len().max(1);
        let mut amps = amps;
        amps.resize(c, C64::new(0.0, 0.0));
        Self { cutoffs: vec![c], amps, truncation: 0.0 }
    }

    pub fn modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.cutoffs)
    }

    /// Accumulated norm lost past the cutoffs by gate applications.
    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn with_truncation(mut self, truncation: f64) -> Self {
        self.truncation = truncation;
        self
    }

    pub fn get(&self, occupations: &[usize]) -> C64 {
        let idx: usize = occupations.iter().zip(self.strides()).map(|(n, s)| n * s).sum();
        self.amps[idx]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        let mut out = self.clone();
        if n > 0.0 {
            out.amps.iter_mut().for_each(|z| *z /= n);
        }
        out
    }

    /// Inner product `<self|other>` for single-mode states, padding the shorter one.
    pub fn overlap(&self, other: &FockTensor) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// Total photon number of every basis index that carries weight above `tol`.
    pub fn photon_numbers(&self, tol: f64) -> Vec<usize> {
        let strides = self.strides();
        let mut out = Vec::new();
        for (lin, z) in self.amps.iter().enumerate() {
            if z.norm_sqr() > tol {
                let total: usize = strides
                    .iter()
                    .zip(&self.cutoffs)
                    .map(|(s, c)| (lin / s) % c)
                    .sum();
                if !out.contains(&total) {
                    out.push(total);
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.modes() {
            return Err(Error::ModeOutOfRange { mode, modes: self.modes() });
        }
        Ok(())
    }

    fn record(mut self, before: f64) -> Self {
        let after = self.norm_sqr();
        self.truncation += (before - after).max(0.0);
        self
    }

    /// Applies a matrix `<m|G|n>` (rows = output) on one mode.
    pub fn apply_single_mode_matrix(&self, g: &DMatrix<C64>, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let c = self.cutoffs[mode];
        if g.ncols() < c {
            return Err(Error::DimensionMismatch { expected: c, got: g.ncols() });
        }
        let before = self.norm_sqr();
        let strides = self.strides();
        let s = strides[mode];
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        let mut buf = vec![C64::new(0.0, 0.0); c];
        for base in base_offsets(&self.cutoffs, &strides, &[mode]) {
            for (n, b) in buf.iter_mut().enumerate() {
                *b = self.amps[base + n * s];
            }
            for m in 0..c.min(g.nrows()) {
                let mut acc = C64::new(0.0, 0.0);
                for (n, b) in buf.iter().enumerate() {
                    acc += g[(m, n)] * b;
                }
                out[base + m * s] = acc;
            }
        }
        let t = Self { cutoffs: self.cutoffs.clone(), amps: out, truncation: self.truncation };
        Ok(t.record(before))
    }

    pub fn apply_squeezer(&self, r: f64, phi: f64, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        if !r.is_finite() {
            return Err(Error::InvalidParameter(format!("squeezing {r}")));
        }
        let g = squeezer_matrix(r, phi, self.cutoffs[mode]);
        self.apply_single_mode_matrix(&g, mode)
    }

    pub fn apply_displacement(&self, alpha: C64, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let g = displacement_matrix(alpha, self.cutoffs[mode]);
        self.apply_single_mode_matrix(&g, mode)
    }

    pub fn apply_phase(&self, phi: f64, mode: usize) -> Result<Self> {
        self.check_mode(mode)?;
        let c = self.cutoffs[mode];
        let g = DMatrix::from_diagonal(&DVector::from_fn(c, |n, _| C64::from_polar(1.0, phi * n as f64)));
        self.apply_single_mode_matrix(&g, mode)
    }

    pub fn apply_beamsplitter(&self, theta: f64, phi: f64, i: usize, j: usize) -> Result<Self> {
        let u = beamsplitter_unitary(theta, phi);
        self.apply_two_mode_unitary([[u[(0, 0)], u[(0, 1)]], [u[(1, 0)], u[(1, 1)]]], i, j)
    }

    /// Photon-number-conserving action of the `2 x 2` unitary `u` on `(i, j)`.
    pub fn apply_two_mode_unitary(&self, u: [[C64; 2]; 2], i: usize, j: usize) -> Result<Self> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(Error::ModeCollision(i));
        }
        let (ci, cj) = (self.cutoffs[i], self.cutoffs[j]);
        let blocks = two_mode_blocks(u, ci, cj);
        let before = self.norm_sqr();
        let strides = self.strides();
        let (si, sj) = (strides[i], strides[j]);
        let mut out = vec![C64::new(0.0, 0.0); self.amps.len()];
        for base in base_offsets(&self.cutoffs, &strides, &[i, j]) {
            for p in 0..ci {
                for q in 0..cj {
                    let amp = self.amps[base + p * si + q * sj];
                    if amp.norm_sqr() == 0.0 {
                        continue;
                    }
                    let total = p + q;
                    for (x, coeff) in blocks[p * cj + q].iter().enumerate() {
                        let y = total - x;
                        if x < ci && y < cj {
                            out[base + x * si + y * sj] += coeff * amp;
                        }
                    }
                }
            }
        }
        let t = Self { cutoffs: self.cutoffs.clone(), amps: out, truncation: self.truncation };
        Ok(t.record(before))
    }

    /// Applies an `N x N` interferometer to all modes via its mesh decomposition.
    pub fn apply_interferometer(&self, u: &DMatrix<C64>) -> Result<Self> {
        let modes: Vec<usize> = (0..self.modes()).collect();
        self.apply_interferometer_on(u, &modes)
    }

    /// Applies a `k x k` interferometer to the listed modes.
    pub fn apply_interferometer_on(&self, u: &DMatrix<C64>, on: &[usize]) -> Result<Self> {
        if u.nrows() != on.len() {
            return Err(Error::DimensionMismatch { expected: on.len(), got: u.nrows() });
        }
        for (k, &m) in on.iter().enumerate() {
            self.check_mode(m)?;
            if on[..k].contains(&m) {
                return Err(Error::ModeCollision(m));
            }
        }
        let mesh = Mesh::decompose(u, 1e-10)?;
        self.apply_mesh(&mesh, on)
    }

    pub fn apply_mesh(&self, mesh: &Mesh, on: &[usize]) -> Result<Self> {
        if mesh.modes != on.len() {
            return Err(Error::DimensionMismatch { expected: on.len(), got: mesh.modes });
        }
        let mut psi = self.clone();
        for unit in &mesh.units {
            psi = psi.apply_two_mode_unitary(unit.matrix(), on[unit.mode], on[unit.mode + 1])?;
        }
        for (k, ph) in mesh.phases.iter().enumerate() {
            if *ph != 0.0 {
                psi = psi.apply_phase(*ph, on[k])?;
            }
        }
        Ok(psi)
    }

    /// Appends a new mode prepared in `|n>` as the last mode.
    pub fn append_fock_mode(&self, n: usize, cutoff: usize) -> Result<Self> {
        if n >= cutoff {
            return Err(Error::OccupationBeyondCutoff { occupation: n, cutoff });
        }
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len() * cutoff];
        for (k, a) in self.amps.iter().enumerate() {
            amps[k * cutoff + n] = *a;
        }
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.push(cutoff);
        Ok(Self { cutoffs, amps, truncation: self.truncation })
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &FockTensor) -> Self {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.extend_from_slice(&other.cutoffs);
        Self { cutoffs, amps, truncation: self.truncation + other.truncation }
    }

    /// Same amplitudes in a larger (or equal) box.
    pub fn padded(&self, cutoffs: &[usize]) -> Result<Self> {
        if cutoffs.len() != self.modes() || cutoffs.iter().zip(&self.cutoffs).any(|(n, o)| n < o) {
            return Err(Error::InvalidParameter("padding must not shrink any cutoff".into()));
        }
        let new_strides = strides_of(cutoffs);
        let old_strides = self.strides();
        let mut amps = vec![C64::new(0.0, 0.0); cutoffs.iter().product()];
        for (lin, a) in self.amps.iter().enumerate() {
            let idx: usize = old_strides
                .iter()
                .zip(&self.cutoffs)
                .zip(&new_strides)
                .map(|((s, c), ns)| ((lin / s) % c) * ns)
                .sum();
            amps[idx] = *a;
        }
        Ok(Self { cutoffs: cutoffs.to_vec(), amps, truncation: self.truncation })
    }
}

/// Truncated Fock matrix of `S(r, phi)`.
pub fn squeezer_matrix(r: f64, phi: f64, cutoff: usize) -> DMatrix<C64> {
    let t = r.tanh();
    let sech = 1.0 / r.cosh();
    let e = C64::from_polar(1.0, phi);
    single_mode_kernel(
        [[-e * t, C64::from(sech)], [C64::from(sech), e.conj() * t]],
        [C64::new(0.0, 0.0); 2],
        C64::from(sech.sqrt()),
        cutoff,
    )
}

/// Truncated Fock matrix of `D(alpha)`.
pub fn displacement_matrix(alpha: C64, cutoff: usize) -> DMatrix<C64> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    single_mode_kernel(
        [[zero, one], [one, zero]],
        [alpha, -alpha.conj()],
        C64::from((-0.5 * alpha.norm_sqr()).exp()),
        cutoff,
    )
}

/// Output vectors of `U |p, q>` for every input below the cutoffs, indexed
/// `p * cj + q`; entry `x` of a vector is the amplitude of `|x, p + q - x>`.
fn two_mode_blocks(u: [[C64; 2]; 2], ci: usize, cj: usize) -> Vec<Vec<C64>> {
    let mut blocks: Vec<Vec<C64>> = vec![Vec::new(); ci * cj];
    blocks[0] = vec![C64::new(1.0, 0.0)];
    // creation operators map as a_i^dag -> u00 a_i^dag + u10 a_j^dag
    let create = |v: &[C64], ci_coef: C64, cj_coef: C64, norm: f64| -> Vec<C64> {
        let n = v.len() - 1;
        let mut out = vec![C64::new(0.0, 0.0); n + 2];
        for (x, a) in v.iter().enumerate() {
            let y = n - x;
            out[x + 1] += ci_coef * a * ((x + 1) as f64).sqrt();
            out[x] += cj_coef * a * ((y + 1) as f64).sqrt();
        }
        out.iter_mut().for_each(|z| *z /= norm);
        out
    };
    for p in 0..ci {
        for q in 0..cj {
            if p == 0 && q == 0 {
                continue;
            }
            blocks[p * cj + q] = if p > 0 {
                create(&blocks[(p - 1) * cj + q], u[0][0], u[1][0], (p as f64).sqrt())
            } else {
                create(&blocks[q - 1], u[0][1], u[1][1], (q as f64).sqrt())
            };
        }
    }
    blocks
}

/// Fock amplitudes of a pure Gaussian state built gate by gate:
/// Bloch-Messiah squeezers on vacuum, the output interferometer, then the
/// displacement.
pub fn gaussian_to_fock(state: &CovarianceState, cutoffs: &[usize]) -> Result<FockTensor> {
    let n = state.modes();
    if cutoffs.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cutoffs.len() });
    }
    let s = preparation_symplectic(state, 1e-8)?;
    let bm = bloch_messiah(&s)?;
    let mut psi = FockTensor::vacuum(cutoffs)?;
    for (k, r) in bm.squeezing.iter().enumerate() {
        if *r != 0.0 {
            psi = psi.apply_squeezer(*r, 0.0, k)?;
        }
    }
    psi = psi.apply_interferometer(&bm.o_out.passive_unitary())?;
    for k in 0..n {
        let alpha = C64::new(0.5 * state.xi[k], 0.5 * state.xi[n + k]);
        if alpha.norm() > 0.0 {
            psi = psi.apply_displacement(alpha, k)?;
        }
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn vacuum_and_fock_constructors() {
        let v = FockTensor::vacuum(&[5]).unwrap();
        assert_eq!(v.amplitudes()[0], C64::new(1.0, 0.0));
        assert_abs_diff_eq!(v.norm_sqr(), 1.0);
        let f = FockTensor::fock_input(&[1, 0, 0], &[3, 3, 3]).unwrap();
        assert_eq!(f.get(&[1, 0, 0]), C64::new(1.0, 0.0));
        assert_abs_diff_eq!(f.norm_sqr(), 1.0);
        assert!(matches!(
            FockTensor::fock_input(&[3], &[3]),
            Err(Error::OccupationBeyondCutoff { .. })
        ));
    }

    #[test]
    fn squeezed_vacuum_analytic() {
        let r: f64 = 0.6;
        let psi = FockTensor::vacuum(&[12]).unwrap().apply_squeezer(r, 0.0, 0).unwrap();
        let a = psi.amplitudes();
        assert_abs_diff_eq!(a[0].re, 1.0 / r.cosh().sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(a[2].re, -r.tanh() / 2f64.sqrt() / r.cosh().sqrt(), epsilon = 1e-14);
        for n in (1..12).step_by(2) {
            assert_eq!(a[n].norm(), 0.0);
        }
    }

    #[test]
    fn coherent_amplitudes() {
        let alpha = C64::new(0.8, 0.3);
        let psi = FockTensor::vacuum(&[10]).unwrap().apply_displacement(alpha, 0).unwrap();
        let mut fact = 1.0;
        for n in 0..10 {
            if n > 0 {
                fact *= n as f64;
            }
            let expect = (-0.5 * alpha.norm_sqr()).exp() * alpha.powu(n as u32) / fact.sqrt();
            assert_abs_diff_eq!((psi.amplitudes()[n] - expect).norm(), 0.0, epsilon = 1e-14);
        }
        let same = psi.apply_displacement(C64::new(0.0, 0.0), 0).unwrap();
        assert_eq!(same.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn hong_ou_mandel() {
        let psi = FockTensor::fock_input(&[1, 1], &[3, 3])
            .unwrap()
            .apply_beamsplitter(std::f64::consts::FRAC_PI_4, 0.0, 0, 1)
            .unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(psi.get(&[1, 1]).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(psi.get(&[2, 0]).re, -h, epsilon = 1e-15);
        assert_abs_diff_eq!(psi.get(&[0, 2]).re, h, epsilon = 1e-15);
    }

    #[test]
    fn single_photon_through_beamsplitter() {
        let (theta, phi) = (0.4, 1.2);
        let psi = FockTensor::fock_input(&[1, 0], &[2, 2])
            .unwrap()
            .apply_beamsplitter(theta, phi, 0, 1)
            .unwrap();
        assert_abs_diff_eq!((psi.get(&[1, 0]) - C64::from(theta.cos())).norm(), 0.0, epsilon = 1e-15);
        let expect = C64::from_polar(theta.sin(), phi);
        assert_abs_diff_eq!((psi.get(&[0, 1]) - expect).norm(), 0.0, epsilon = 1e-15);
        let same = psi.apply_beamsplitter(0.0, 0.7, 0, 1).unwrap();
        assert_eq!(same.amplitudes(), psi.amplitudes());
        assert!(matches!(psi.apply_beamsplitter(0.1, 0.0, 1, 1), Err(Error::ModeCollision(1))));
    }

    #[test]
    fn permutation_interferometer() {
        let psi = FockTensor::fock_input(&[2, 1, 0], &[4, 4, 4]).unwrap();
        let mut u = DMatrix::zeros(3, 3);
        // mode 0 -> 1, 1 -> 2, 2 -> 0
        u[(1, 0)] = C64::new(1.0, 0.0);
        u[(2, 1)] = C64::new(1.0, 0.0);
        u[(0, 2)] = C64::new(1.0, 0.0);
        let out = psi.apply_interferometer(&u).unwrap();
        assert_abs_diff_eq!(out.get(&[0, 2, 1]).norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn truncation_is_recorded() {
        let psi = FockTensor::vacuum(&[4]).unwrap().apply_squeezer(1.2, 0.0, 0).unwrap();
        assert!(psi.truncation() > 1e-3);
        assert_abs_diff_eq!(psi.truncation() + psi.norm_sqr(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gaussian_to_fock_vacuum() {
        let psi = gaussian_to_fock(&CovarianceState::vacuum(2), &[3, 3]).unwrap();
        assert_abs_diff_eq!(psi.get(&[0, 0]).norm(), 1.0, epsilon = 1e-14);
        let mixed = CovarianceState::vacuum(1)
            .apply_symplectic(&crate::gaussian::SymplecticMatrix::squeezer(0.5, 0.0, 0, 1).unwrap())
            .unwrap()
            .apply_loss(0.5, 0)
            .unwrap();
        assert!(matches!(gaussian_to_fock(&mixed, &[5]), Err(Error::MixedState(_))));
    }
}
