//! Photon-number-resolved projection, photon loss and fidelities.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FockTensor;
use crate::gaussian::C64;

/// Photon counts observed on the measured modes, in the order the modes are listed.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pattern(pub Vec<usize>);

impl Pattern {
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

impl std::fmt::Display for Pattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|n| n.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Density matrix on a few modes, row-major over `dims` like [`FockTensor`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityBlock {
    pub dims: Vec<usize>,
    pub rho: DMatrix<C64>,
}

impl DensityBlock {
    pub fn new(dims: Vec<usize>, rho: DMatrix<C64>) -> Result<Self> {
        let size: usize = dims.iter().product();
        if rho.nrows() != size || rho.ncols() != size {
            return Err(Error::DimensionMismatch { expected: size, got: rho.nrows() });
        }
        Ok(Self { dims, rho })
    }

    pub fn from_pure(psi: &FockTensor) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        Self { dims: psi.cutoffs().to_vec(), rho: &v * v.adjoint() }
    }

    pub fn single_mode(rho: DMatrix<C64>) -> Self {
        Self { dims: vec![rho.nrows()], rho }
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn normalized(&self) -> Self {
        let t = self.trace();
        Self { dims: self.dims.clone(), rho: self.rho.unscale(t) }
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()).scale(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Photon-number distribution of a single-mode block.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|k| self.rho[(k, k)].re).collect()
    }
}

/// Conditional output of a heralding event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputState {
    Pure(FockTensor),
    Mixed(DensityBlock),
}

impl OutputState {
    pub fn fidelity(&self, target: &FockTensor) -> f64 {
        match self {
            OutputState::Pure(psi) => fidelity_pure(psi, target),
            OutputState::Mixed(rho) => fidelity_mixed(rho, target),
        }
    }

    pub fn density(&self) -> DensityBlock {
        match self {
            OutputState::Pure(psi) => DensityBlock::from_pure(psi),
            OutputState::Mixed(rho) => rho.clone(),
        }
    }
}

/// Result of projecting on a pattern. Zero-probability events carry no state.
#[derive(Debug, Clone, PartialEq)]
pub enum Heralded<T> {
    Success { state: T, probability: f64 },
    ZeroProbability,
}

impl<T> Heralded<T> {
    pub fn probability(&self) -> f64 {
        match self {
            Heralded::Success { probability, .. } => *probability,
            Heralded::ZeroProbability => 0.0,
        }
    }

    pub fn state(&self) -> Option<&T> {
        match self {
            Heralded::Success { state, .. } => Some(state),
            Heralded::ZeroProbability => None,
        }
    }
}

fn check_measurement(psi: &FockTensor, measured: &[usize], pattern: &Pattern) -> Result<()> {
    if measured.len() != pattern.0.len() {
        return Err(Error::DimensionMismatch { expected: measured.len(), got: pattern.0.len() });
    }
    for (k, &m) in measured.iter().enumerate() {
        if m >= psi.modes() {
            return Err(Error::ModeOutOfRange { mode: m, modes: psi.modes() });
        }
        if measured[..k].contains(&m) {
            return Err(Error::ModeCollision(m));
        }
        if pattern.0[k] >= psi.cutoffs()[m] {
            return Err(Error::OccupationBeyondCutoff { occupation: pattern.0[k], cutoff: psi.cutoffs()[m] });
        }
    }
    Ok(())
}

/// Unnormalized slice of `psi` with the measured modes fixed to `counts`,
/// over the remaining modes in their original order.
fn slice(psi: &FockTensor, measured: &[usize], counts: &[usize]) -> (Vec<usize>, Vec<C64>) {
    let cut = psi.cutoffs();
    let strides = psi.strides();
    let rest: Vec<usize> = (0..psi.modes()).filter(|m| !measured.contains(m)).collect();
    let dims: Vec<usize> = rest.iter().map(|&m| cut[m]).collect();
    let offset: usize = measured.iter().zip(counts).map(|(&m, &n)| n * strides[m]).sum();
    let size: usize = dims.iter().product();
    let mut out = Vec::with_capacity(size);
    let mut idx = vec![0usize; rest.len()];
    for _ in 0..size {
        let lin: usize = offset + rest.iter().zip(&idx).map(|(&m, &k)| k * strides[m]).sum::<usize>();
        out.push(psi.amplitudes()[lin]);
        for k in (0..rest.len()).rev() {
            idx[k] += 1;
            if idx[k] < dims[k] {
                break;
            }
            idx[k] = 0;
        }
    }
    (dims, out)
}

/// Projects the measured modes of `psi` onto `pattern`.
pub fn herald(psi: &FockTensor, measured: &[usize], pattern: &Pattern) -> Result<Heralded<FockTensor>> {
    check_measurement(psi, measured, pattern)?;
    let (dims, amps) = slice(psi, measured, &pattern.0);
    let p: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    if p <= 0.0 {
        return Ok(Heralded::ZeroProbability);
    }
    let dims = if dims.is_empty() { vec![1] } else { dims };
    let state = FockTensor::from_amplitudes(&dims, amps)?.normalized();
    Ok(Heralded::Success { state, probability: p })
}

/// Kraus operator `A_k` of the pure-loss channel with transmissivity `eta`,
/// truncated at `cutoff`.
pub fn loss_kraus(eta: f64, k: usize, cutoff: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(cutoff, cutoff);
    for n in k..cutoff {
        let amp = (binomial(n, k) * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt();
        a[(n - k, n)] = C64::from(amp);
    }
    a
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for j in 0..k.min(n - k) {
        c = c * (n - j) as f64 / (j + 1) as f64;
    }
    c
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidTransmissivity(eta));
    }
    Ok(())
}

/// Pure-loss channel on one mode of a density block.
pub fn apply_loss_fock(state: &DensityBlock, eta: f64, mode: usize) -> Result<DensityBlock> {
    check_eta(eta)?;
    if mode >= state.dims.len() {
        return Err(Error::ModeOutOfRange { mode, modes: state.dims.len() });
    }
    if eta == 1.0 {
        return Ok(state.clone());
    }
    let c = state.dims[mode];
    let before: usize = state.dims[..mode].iter().product();
    let after: usize = state.dims[mode + 1..].iter().product();
    let size = before * c * after;
    let mut out = DMatrix::<C64>::zeros(size, size);
    for k in 0..c {
        let a = loss_kraus(eta, k, c);
        // I ⊗ A_k ⊗ I, applied on both sides
        let mut full = DMatrix::<C64>::zeros(size, size);
        for b in 0..before {
            for (i, j) in (0..c).flat_map(|i| (0..c).map(move |j| (i, j))) {
                let v = a[(i, j)];
                if v.norm_sqr() == 0.0 {
                    continue;
                }
                for t in 0..after {
                    full[((b * c + i) * after + t, (b * c + j) * after + t)] = v;
                }
            }
        }
        out += &full * &state.rho * full.adjoint();
    }
    DensityBlock::new(state.dims.clone(), out)
}

/// Heralding with detector loss folded into the measurement operator and
/// pure loss on the remaining output modes.
///
/// A detector with transmissivity `eta` reports `n` when `n` of the `m >= n`
/// incident photons survive.
pub fn herald_lossy(
    psi: &FockTensor,
    measured: &[usize],
    pattern: &Pattern,
    eta_detect: &[f64],
    eta_out: f64,
) -> Result<Heralded<DensityBlock>> {
    check_measurement(psi, measured, pattern)?;
    if eta_detect.len() != measured.len() {
        return Err(Error::DimensionMismatch { expected: measured.len(), got: eta_detect.len() });
    }
    for &e in eta_detect.iter().chain(std::iter::once(&eta_out)) {
        check_eta(e)?;
    }
    let cut = psi.cutoffs();
    let ranges: Vec<std::ops::Range<usize>> = measured
        .iter()
        .zip(&pattern.0)
        .zip(eta_detect)
        .map(|((&m, &n), &e)| if e == 1.0 { n..n + 1 } else { n..cut[m] })
        .collect();
    let mut counts: Vec<usize> = ranges.iter().map(|r| r.start).collect();
    let mut rho: Option<DMatrix<C64>> = None;
    let mut dims = Vec::new();
    'outer: loop {
        let weight: f64 = counts
            .iter()
            .zip(&pattern.0)
            .zip(eta_detect)
            .map(|((&m, &n), &e)| binomial(m, n) * e.powi(n as i32) * (1.0 - e).powi((m - n) as i32))
            .product();
        if weight > 0.0 {
            let (d, amps) = slice(psi, measured, &counts);
            dims = d;
            let v = nalgebra::DVector::from_vec(amps);
            let term = (&v * v.adjoint()).scale(weight);
            rho = Some(match rho {
                Some(r) => r + term,
                None => term,
            });
        }
        for k in (0..counts.len()).rev() {
            counts[k] += 1;
            if counts[k] < ranges[k].end {
                continue 'outer;
            }
            counts[k] = ranges[k].start;
        }
        break;
    }
    let rho = match rho {
        Some(r) => r,
        None => return Ok(Heralded::ZeroProbability),
    };
    let dims = if dims.is_empty() { vec![1] } else { dims };
    let mut block = DensityBlock::new(dims, rho)?;
    for mode in 0..block.dims.len() {
        block = apply_loss_fock(&block, eta_out, mode)?;
    }
    let p = block.trace();
    if p <= 0.0 {
        return Ok(Heralded::ZeroProbability);
    }
    Ok(Heralded::Success { state: block.normalized(), probability: p })
}

/// `|<t|psi>|^2` for normalized single-mode states; the shorter vector is
/// padded with zeros.
pub fn fidelity_pure(psi: &FockTensor, target: &FockTensor) -> f64 {
    let n = psi.norm_sqr();
    if n == 0.0 {
        return 0.0;
    }
    let o: C64 = psi
        .amplitudes()
        .iter()
        .zip(target.amplitudes())
        .map(|(a, t)| t.conj() * a)
        .sum();
    o.norm_sqr() / (n * target.norm_sqr())
}

/// `<t|rho|t>` for a normalized single-mode density.
pub fn fidelity_mixed(rho: &DensityBlock, target: &FockTensor) -> f64 {
    let t = target.amplitudes();
    let n = rho.rho.nrows().min(t.len());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += t[i].conj() * rho.rho[(i, j)] * t[j];
        }
    }
    acc.re / (rho.trace() * target.norm_sqr())
}

/// Probability of every pattern on `measured` with at most `n_max` photons per mode.
pub fn outcome_distribution(psi: &FockTensor, measured: &[usize], n_max: usize) -> Result<BTreeMap<Pattern, f64>> {
    let mut out = BTreeMap::new();
    let limits: Vec<usize> = measured
        .iter()
        .map(|&m| {
            if m >= psi.modes() {
                Err(Error::ModeOutOfRange { mode: m, modes: psi.modes() })
            } else {
                Ok((n_max + 1).min(psi.cutoffs()[m]))
            }
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0usize; measured.len()];
    'outer: loop {
        let (_, amps) = slice(psi, measured, &counts);
        out.insert(Pattern(counts.clone()), amps.iter().map(|z| z.norm_sqr()).sum());
        for k in (0..counts.len()).rev() {
            counts[k] += 1;
            if counts[k] < limits[k] {
                continue 'outer;
            }
            counts[k] = 0;
        }
        break;
    }
    Ok(out)
}

/// Wigner function of a single-mode density on a `(q, p)` grid, `hbar = 2`.
///
/// Returned as `w[iq][ip]`.
pub fn wigner_grid(rho: &DensityBlock, qs: &[f64], ps: &[f64]) -> Vec<Vec<f64>> {
    let c = rho.rho.nrows();
    let mut out = vec![vec![0.0; ps.len()]; qs.len()];
    for (iq, &q) in qs.iter().enumerate() {
        for (ip, &p) in ps.iter().enumerate() {
            let alpha = C64::new(q, p) * 0.5;
            // W_mn = <m| D(alpha) P D(alpha)^dag |n> built column by column
            let x = alpha * 2.0;
            let mut w = vec![vec![C64::new(0.0, 0.0); c]; c];
            w[0][0] = C64::from((-0.5 * x.norm_sqr()).exp());
            for m in 1..c {
                w[m][0] = x * w[m - 1][0] / (m as f64).sqrt();
            }
            for n in 1..c {
                w[0][n] = x.conj() * w[0][n - 1] / (n as f64).sqrt();
                for m in 1..c {
                    w[m][n] = (x.conj() * w[m][n - 1] - (m as f64).sqrt() * w[m - 1][n - 1]) / (n as f64).sqrt();
                }
            }
            let mut acc = 0.0;
            for m in 0..c {
                for n in 0..c {
                    acc += (rho.rho[(n, m)] * w[m][n]).re;
                }
            }
            out[iq][ip] = acc / (2.0 * std::f64::consts::PI);
        }
    }
    out
}
