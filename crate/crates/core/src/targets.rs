//! Target states: squeezed cat states, finite-energy GKP states and the
//! finite-support GKP core.
//!
//! GKP conventions: peaks sit at `q = 2 n sqrt(pi)` in units where the vacuum
//! variance is 1/2, each peak is a squeezed vacuum of width `Delta`, and the
//! envelope weight of peak `n` is `exp(-2 pi Delta^2 n^2)`. Decibels convert
//! as `Delta^2 = 10^(-dB / 10)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bargmann::Bargmann;
use crate::error::{Error, Result};
use crate::fock::FockTensor;
use crate::gaussian::{SymplecticMatrix, C64};

/// Largest cutoff tried when a target picks its own cutoff.
const AUTO_CUTOFF_MAX: usize = 400;
const AUTO_TAIL: f64 = 1e-12;
const CAT_DEFICIT_LIMIT: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// A complex amplitude written as a number, `[re, im]`, or `{"sqrt": x}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Complex([f64; 2]),
    Sqrt { sqrt: f64 },
}

impl Amplitude {
    pub fn value(&self) -> C64 {
        match *self {
            Amplitude::Real(x) => C64::new(x, 0.0),
            Amplitude::Complex([re, im]) => C64::new(re, im),
            Amplitude::Sqrt { sqrt } => C64::new(sqrt.sqrt(), 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TargetConfig {
    Cat {
        alpha: Amplitude,
        parity: Parity,
        #[serde(default)]
        r: f64,
        #[serde(default)]
        cutoff: Option<usize>,
    },
    GkpDelta {
        delta_db: f64,
        #[serde(default)]
        cutoff: Option<usize>,
    },
    GkpCore {
        #[serde(default = "default_n_max")]
        n_max: usize,
        #[serde(default = "default_delta_db")]
        delta_db: f64,
        /// Explicit core coefficients; computed when absent.
        #[serde(default)]
        coefficients: Option<Vec<f64>>,
    },
}

fn default_n_max() -> usize {
    4
}

fn default_delta_db() -> f64 {
    10.0
}

/// A built target: its Fock vector and a short label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub label: String,
    pub state: FockTensor,
    /// Squeezing factored out of a GKP core target.
    #[serde(default)]
    pub core_squeezing: Option<f64>,
}

impl TargetConfig {
    pub fn build(&self) -> Result<Target> {
        match self {
            TargetConfig::Cat { alpha, parity, r, cutoff } => {
                let a = alpha.value();
                let c = match cutoff {
                    Some(c) => *c,
                    None => auto_cutoff(|c| cat_state(a, *parity, *r, c).map(|(_, d)| d))?,
                };
                let (state, _) = cat_state(a, *parity, *r, c)?;
                let label = format!("{:?} cat alpha={:.4} r={:.3}", parity, a, r).to_lowercase();
                Ok(Target { label, state, core_squeezing: None })
            }
            TargetConfig::GkpDelta { delta_db, cutoff } => {
                let c = match cutoff {
                    Some(c) => *c,
                    None => auto_cutoff(|c| gkp_delta(*delta_db, c).map(|(_, d)| d))?,
                };
                let (state, _) = gkp_delta(*delta_db, c)?;
                Ok(Target { label: format!("gkp |0> {delta_db} dB"), state, core_squeezing: None })
            }
            TargetConfig::GkpCore { n_max, delta_db, coefficients } => {
                let core = match coefficients {
                    Some(cs) => {
                        let amps = cs.iter().map(|&x| C64::from(x)).collect();
                        let state = FockTensor::single_mode(amps).normalized();
                        GkpCore { coefficients: cs.clone(), squeezing: f64::NAN, overlap: f64::NAN, state }
                    }
                    None => gkp_core_state(*n_max, *delta_db)?,
                };
                let sq = if core.squeezing.is_nan() { None } else { Some(core.squeezing) };
                Ok(Target { label: format!("gkp core n<={n_max} {delta_db} dB"), state: core.state, core_squeezing: sq })
            }
        }
    }
}

fn auto_cutoff(deficit_at: impl Fn(usize) -> Result<f64>) -> Result<usize> {
    let mut c = 8;
    loop {
        let d = match deficit_at(c) {
            Ok(d) => d,
            Err(Error::CutoffTooSmall { .. }) => 1.0,
            Err(e) => return Err(e),
        };
        if d < AUTO_TAIL {
            return Ok(c);
        }
        if c >= AUTO_CUTOFF_MAX {
            return Err(Error::CutoffTooSmall { cutoff: c, deficit: d, limit: AUTO_TAIL });
        }
        c += 4;
    }
}

/// Fock amplitudes of `D(xi) S |0>` for a single-mode squeezer `S(r, 0)`.
fn squeezed_coherent(r: f64, xi: [f64; 2], cutoff: usize) -> Result<Vec<C64>> {
    let s = SymplecticMatrix::squeezer(r, 0.0, 0, 1)?;
    let g = Bargmann::pure_state(&s, &DVector::from_row_slice(&xi))?;
    Ok(g.amplitudes(&[cutoff]))
}

/// Normalized `S(r) (|alpha> +- |-alpha>)` truncated at `cutoff`, and the
/// norm deficit of the truncation.
pub fn cat_state(alpha: C64, parity: Parity, r: f64, cutoff: usize) -> Result<(FockTensor, f64)> {
    if cutoff == 0 || !r.is_finite() {
        return Err(Error::InvalidParameter("cat state needs a positive cutoff and finite r".into()));
    }
    let sign = match parity {
        Parity::Even => 1.0,
        Parity::Odd => -1.0,
    };
    let norm2 = 2.0 + sign * 2.0 * (-2.0 * alpha.norm_sqr()).exp();
    if norm2 <= 1e-300 {
        return Err(Error::InvalidParameter("odd cat with alpha = 0 has no state".into()));
    }
    // S(r) D(alpha) = D(alpha') S(r)
    let s = SymplecticMatrix::squeezer(r, 0.0, 0, 1)?;
    let xi = DVector::from_row_slice(&[2.0 * alpha.re, 2.0 * alpha.im]);
    let moved = s.matrix() * xi;
    let plus = squeezed_coherent(r, [moved[0], moved[1]], cutoff)?;
    let minus = squeezed_coherent(r, [-moved[0], -moved[1]], cutoff)?;
    let amps: Vec<C64> = plus.iter().zip(&minus).map(|(a, b)| a + sign * b).collect();
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let deficit = (1.0 - kept / norm2).max(0.0);
    if deficit > CAT_DEFICIT_LIMIT {
        return Err(Error::CutoffTooSmall { cutoff, deficit, limit: CAT_DEFICIT_LIMIT });
    }
    Ok((FockTensor::single_mode(amps).normalized(), deficit))
}

pub fn delta_from_db(db: f64) -> f64 {
    10f64.powf(-db / 20.0)
}

/// Peak positions (in the `hbar = 1` q quadrature) and envelope weights.
fn gkp_peaks(delta: f64) -> Vec<(f64, f64)> {
    let spacing = 2.0 * std::f64::consts::PI.sqrt();
    let mut out = vec![(0.0, 1.0)];
    for n in 1.. {
        let w = (-2.0 * std::f64::consts::PI * delta * delta * (n * n) as f64).exp();
        if w < 1e-18 {
            break;
        }
        out.push((n as f64 * spacing, w));
        out.push((-(n as f64) * spacing, w));
    }
    out
}

fn gkp_norm2(peaks: &[(f64, f64)], delta: f64) -> f64 {
    let mut acc = 0.0;
    for (qa, wa) in peaks {
        for (qb, wb) in peaks {
            acc += wa * wb * (-(qa - qb).powi(2) / (4.0 * delta * delta)).exp();
        }
    }
    acc
}

/// Unnormalized sum of peaks after an extra `S(-r)`, truncated at `cutoff`.
fn gkp_peak_sum(delta: f64, extra_r: f64, cutoff: usize) -> Result<Vec<C64>> {
    let r_delta = -delta.ln();
    let back = SymplecticMatrix::squeezer(-extra_r, 0.0, 0, 1)?;
    let mut out = vec![C64::new(0.0, 0.0); cutoff];
    for (q, w) in gkp_peaks(delta) {
        // hbar = 2 displacement of a peak at hbar = 1 position q
        let xi = back.matrix() * DVector::from_row_slice(&[q * 2f64.sqrt(), 0.0]);
        let amps = squeezed_coherent(r_delta - extra_r, [xi[0], xi[1]], cutoff)?;
        for (o, a) in out.iter_mut().zip(amps) {
            *o += w * a;
        }
    }
    Ok(out)
}

/// Normalized finite-energy GKP `|0>` at `cutoff`, and the norm deficit.
pub fn gkp_delta(delta_db: f64, cutoff: usize) -> Result<(FockTensor, f64)> {
    if delta_db <= 0.0 || !delta_db.is_finite() {
        return Err(Error::InvalidParameter(format!("delta_db must be positive, got {delta_db}")));
    }
    let delta = delta_from_db(delta_db);
    let amps = gkp_peak_sum(delta, 0.0, cutoff)?;
    let norm2 = gkp_norm2(&gkp_peaks(delta), delta);
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let deficit = (1.0 - kept / norm2).max(0.0);
    if deficit > 1e-4 {
        return Err(Error::CutoffTooSmall { cutoff, deficit, limit: 1e-4 });
    }
    Ok((FockTensor::single_mode(amps).normalized(), deficit))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkpCore {
    pub coefficients: Vec<f64>,
    /// `S(squeezing)` applied to the core approximates the GKP state.
    pub squeezing: f64,
    /// `|<0_Delta| S(r) core>|` at the optimum.
    pub overlap: f64,
    pub state: FockTensor,
}

/// Best core overlap for a fixed squeezing: the projection of `S(-r)|0_Delta>`
/// onto `n <= n_max`.
fn core_at(delta: f64, norm: f64, n_max: usize, r: f64) -> Result<(Vec<f64>, f64)> {
    let amps = gkp_peak_sum(delta, r, n_max + 1)?;
    let v: Vec<f64> = amps.iter().map(|z| z.re).collect();
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok((v.iter().map(|x| x / len).collect(), len / norm))
}

/// Core coefficients `c_0..c_{n_max}` and squeezing maximizing the overlap of
/// `S(r) sum c_n |n>` with the finite-energy GKP `|0>`.
pub fn gkp_core_state(n_max: usize, delta_db: f64) -> Result<GkpCore> {
    if n_max < 2 {
        return Err(Error::InvalidParameter("core state needs n_max >= 2".into()));
    }
    if delta_db <= 0.0 || !delta_db.is_finite() {
        return Err(Error::InvalidParameter(format!("delta_db must be positive, got {delta_db}")));
    }
    let delta = delta_from_db(delta_db);
    let norm = gkp_norm2(&gkp_peaks(delta), delta).sqrt();
    let f = |r: f64| core_at(delta, norm, n_max, r).map(|(_, o)| o);
    // coarse scan, then golden section around the best grid point
    let (lo, hi, steps) = (-1.0, 3.0, 400);
    let h = (hi - lo) / steps as f64;
    let mut best = (lo, f(lo)?);
    for k in 1..=steps {
        let r = lo + h * k as f64;
        let o = f(r)?;
        if o > best.1 {
            best = (r, o);
        }
    }
    let (mut a, mut b) = (best.0 - h, best.0 + h);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let r = 0.5 * (a + b);
    let (mut coefficients, overlap) = core_at(delta, norm, n_max, r)?;
    if coefficients[0] < 0.0 {
        coefficients.iter_mut().for_each(|x| *x = -*x);
    }
    let state = FockTensor::single_mode(coefficients.iter().map(|&x| C64::from(x)).collect());
    Ok(GkpCore { coefficients, squeezing: r, overlap, state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn odd_cat_has_no_vacuum() {
        let (cat, _) = cat_state(C64::new(6f64.sqrt(), 0.0), Parity::Odd, 0.0, 40).unwrap();
        assert_eq!(cat.amplitudes()[0].norm(), 0.0);
        assert_abs_diff_eq!(cat.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn small_even_cat_is_vacuum() {
        let (cat, _) = cat_state(C64::new(1e-6, 0.0), Parity::Even, 0.0, 10).unwrap();
        assert_abs_diff_eq!(cat.amplitudes()[0].norm(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn cat_cutoff_error() {
        assert!(matches!(
            cat_state(C64::new(3.0, 0.0), Parity::Even, 0.0, 6),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn gkp_parity_and_norm() {
        let (g, _) = gkp_delta(10.0, 80).unwrap();
        assert_abs_diff_eq!(g.norm_sqr(), 1.0, epsilon = 1e-12);
        for n in (1..80).step_by(2) {
            assert!(g.amplitudes()[n].norm() < 1e-12);
        }
    }

    #[test]
    fn core_support_and_norm() {
        let core = gkp_core_state(4, 10.0).unwrap();
        assert_eq!(core.coefficients.len(), 5);
        assert_abs_diff_eq!(core.coefficients.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(core.overlap > 0.5 && core.overlap <= 1.0);
    }
}
