//! Rectangular (Clements-style) meshes of two-mode units.
//!
//! Each unit on the adjacent pair `(m, m + 1)` is a phase `phi` on mode `m`
//! followed by a real beamsplitter of angle `theta`:
//!
//! ```text
//! T(theta, phi) = [[e^{i phi} cos theta, -sin theta],
//!                  [e^{i phi} sin theta,  cos theta]]
//! ```
//!
//! A mesh applies its units in order and then a diagonal of output phases,
//! so `U = D * T_K * ... * T_1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshUnit {
    pub mode: usize,
    pub theta: f64,
    pub phi: f64,
}

impl MeshUnit {
    pub fn matrix(&self) -> [[C64; 2]; 2] {
        let (c, s) = (self.theta.cos(), self.theta.sin());
        let e = C64::from_polar(1.0, self.phi);
        [[e * c, C64::from(-s)], [e * s, C64::from(c)]]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub modes: usize,
    pub units: Vec<MeshUnit>,
    pub phases: Vec<f64>,
}

/// Pair positions of the rectangular layout for `n` modes, in application order.
pub fn rectangular_layout(n: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for layer in 0..n {
        let mut m = layer % 2;
        while m + 1 < n {
            out.push(m);
            m += 2;
        }
    }
    out
}

impl Mesh {
    /// Rectangular mesh from `n(n-1)/2` angles, as many unit phases, and `n`
    /// output phases.
    pub fn rectangular(n: usize, thetas: &[f64], phis: &[f64], phases: &[f64]) -> Result<Self> {
        let layout = rectangular_layout(n);
        if thetas.len() != layout.len() || phis.len() != layout.len() {
            return Err(Error::DimensionMismatch { expected: layout.len(), got: thetas.len().min(phis.len()) });
        }
        if phases.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: phases.len() });
        }
        let units = layout
            .iter()
            .zip(thetas.iter().zip(phis))
            .map(|(&mode, (&theta, &phi))| MeshUnit { mode, theta, phi })
            .collect();
        Ok(Self { modes: n, units, phases: phases.to_vec() })
    }

    pub fn identity(n: usize) -> Self {
        let k = rectangular_layout(n).len();
        Self::rectangular(n, &vec![0.0; k], &vec![0.0; k], &vec![0.0; n]).unwrap()
    }

    pub fn unitary(&self) -> DMatrix<C64> {
        let n = self.modes;
        let mut u = DMatrix::<C64>::identity(n, n);
        for unit in &self.units {
            left_multiply(&mut u, unit.mode, unit.matrix());
        }
        for (k, ph) in self.phases.iter().enumerate() {
            let e = C64::from_polar(1.0, *ph);
            for c in 0..n {
                u[(k, c)] *= e;
            }
        }
        u
    }

    /// Clements decomposition of an `n x n` unitary.
    pub fn decompose(u: &DMatrix<C64>, tol: f64) -> Result<Self> {
        let n = u.nrows();
        if u.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: u.ncols() });
        }
        let dev = unitarity_deviation(u);
        if dev > tol {
            return Err(Error::NotUnitary(dev));
        }
        let mut w = u.clone();
        let mut right: Vec<MeshUnit> = Vec::new();
        let mut left: Vec<MeshUnit> = Vec::new();
        for i in 0..n.saturating_sub(1) {
            if i % 2 == 0 {
                for j in 0..=i {
                    let col = i - j;
                    let row = n - 1 - j;
                    let a = w[(row, col)];
                    let b = w[(row, col + 1)];
                    let theta = a.norm().atan2(b.norm());
                    let phi = a.arg() - b.arg();
                    let unit = MeshUnit { mode: col, theta, phi };
                    right_multiply_adjoint(&mut w, col, unit.matrix());
                    right.push(unit);
                }
            } else {
                for j in 1..=i + 1 {
                    let row = n + j - i - 2;
                    let col = j - 1;
                    let top = w[(row - 1, col)];
                    let bot = w[(row, col)];
                    let theta = bot.norm().atan2(top.norm());
                    let phi = std::f64::consts::PI + bot.arg() - top.arg();
                    let unit = MeshUnit { mode: row - 1, theta, phi };
                    left_multiply(&mut w, row - 1, unit.matrix());
                    left.push(unit);
                }
            }
        }
        // w is now diagonal: L_k..L_1 U R_1^-1..R_p^-1 = D
        let mut diag: Vec<f64> = (0..n).map(|k| w[(k, k)].arg()).collect();
        let mut moved: Vec<MeshUnit> = Vec::with_capacity(left.len());
        for unit in left.iter().rev() {
            let m = unit.mode;
            let (alpha, beta) = (diag[m], diag[m + 1]);
            diag[m] = beta - unit.phi + std::f64::consts::PI;
            diag[m + 1] = beta;
            moved.push(MeshUnit { mode: m, theta: unit.theta, phi: alpha - beta - std::f64::consts::PI });
        }
        // U = D' T'_1 .. T'_k R_p .. R_1; `moved` starts with T'_k
        let mut units = right;
        units.extend(moved);
        Ok(Self { modes: n, units, phases: diag })
    }
}

pub fn unitarity_deviation(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<C64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn left_multiply(u: &mut DMatrix<C64>, m: usize, t: [[C64; 2]; 2]) {
    for c in 0..u.ncols() {
        let (x, y) = (u[(m, c)], u[(m + 1, c)]);
        u[(m, c)] = t[0][0] * x + t[0][1] * y;
        u[(m + 1, c)] = t[1][0] * x + t[1][1] * y;
    }
}

fn right_multiply_adjoint(u: &mut DMatrix<C64>, m: usize, t: [[C64; 2]; 2]) {
    // columns (m, m+1) times T^dagger
    for r in 0..u.nrows() {
        let (x, y) = (u[(r, m)], u[(r, m + 1)]);
        u[(r, m)] = x * t[0][0].conj() + y * t[0][1].conj();
        u[(r, m + 1)] = x * t[1][0].conj() + y * t[1][1].conj();
    }
}
