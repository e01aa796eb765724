mod common;

use std::f64::consts::{FRAC_PI_4, PI};

use adaptive_gbs::fock::{gaussian_to_fock, FockTensor};
use adaptive_gbs::gaussian::{CovarianceState, SymplecticMatrix, C64};
use adaptive_gbs::scheme::{Backend, Enumeration, EvalOptions, Input, Layer, LossModel, Node, Op, Scheme};
use adaptive_gbs::targets::{cat_state, gkp_core_state, gkp_delta, Parity, TargetConfig};
use approx::assert_abs_diff_eq;

#[test]
fn analytic_micro_suite() {
    let c = common::analytic_suite();
    assert!(c.ok, "{}", c.detail);
}

#[test]
fn structural_suite() {
    let c = common::structural_suite();
    assert!(c.ok, "{}", c.detail);
}

#[test]
fn loss_commutes_with_passive_layers() {
    let c = common::loss_commutation();
    assert!(c.ok, "{}", c.detail);
}

#[test]
fn lossy_tmsv_herald() {
    let r: f64 = 0.7;
    let l2 = r.tanh().powi(2);
    for eta in [1.0, 0.8, 0.35] {
        for n in 0..5 {
            let mut s = common::tmsv(r, n);
            s.loss = LossModel { pre_detect: eta, ..LossModel::none() };
            let target = FockTensor::fock_input(&[n], &[n + 1]).unwrap();
            let b = s.evaluate_branch(&[0], &target, &EvalOptions::fast()).unwrap();
            let expect = (1.0 - l2) * (eta * l2).powi(n as i32) / (1.0 - (1.0 - eta) * l2).powi(n as i32 + 1);
            assert_abs_diff_eq!(b.probability, expect, epsilon = 1e-13);
        }
    }
}

#[test]
fn lossy_herald_mixes_photon_numbers() {
    // Heralding one photon behind a lossy detector leaves sum_k w_k |k><k| with
    // w_k proportional to C(k, 1) eta (1 - eta)^(k - 1) lambda^(2k).
    let r: f64 = 0.5;
    let eta = 0.6;
    let l2 = r.tanh().powi(2);
    let mut s = common::tmsv(r, 1);
    s.loss = LossModel { pre_detect: eta, ..LossModel::none() };
    let weights: Vec<f64> = (0..30).map(|k| if k == 0 { 0.0 } else { k as f64 * ((1.0 - eta) * l2).powi(k as i32 - 1) }).collect();
    let total: f64 = weights.iter().sum();
    let target = FockTensor::fock_input(&[1], &[2]).unwrap();
    let b = s.evaluate_branch(&[0], &target, &EvalOptions { output_cutoff: Some(30), ..EvalOptions::fast() }).unwrap();
    assert_abs_diff_eq!(b.fidelity.unwrap(), weights[1] / total, epsilon = 1e-12);
}

#[test]
fn squeezed_wigner() {
    let r = 0.4;
    let st = CovarianceState::vacuum(1).apply_symplectic(&SymplecticMatrix::squeezer(r, 0.0, 0, 1).unwrap()).unwrap();
    for (q, p) in [(0.0, 0.0), (0.5, -1.0), (-1.2, 0.3)] {
        let vq = (-2.0 * r).exp();
        let vp = (2.0 * r).exp();
        let expect = (-q * q / (2.0 * vq) - p * p / (2.0 * vp)).exp() / (2.0 * PI);
        assert_abs_diff_eq!(st.wigner(&[q, p]).unwrap(), expect, epsilon = 1e-14);
    }
}

#[test]
fn squeezed_vacuum_photon_statistics() {
    let r: f64 = 0.8;
    let st = CovarianceState::vacuum(1).apply_symplectic(&SymplecticMatrix::squeezer(r, 1.1, 0, 1).unwrap()).unwrap();
    let psi = gaussian_to_fock(&st, &[30]).unwrap();
    let mut ratio = 1.0;
    for k in 0..15 {
        if k > 0 {
            ratio *= (2 * k - 1) as f64 / (2 * k) as f64;
        }
        let expect = ratio * r.tanh().powi(2 * k as i32) / r.cosh();
        assert_abs_diff_eq!(psi.get(&[2 * k]).norm_sqr(), expect, epsilon = 1e-13);
        assert!(psi.get(&[2 * k + 1]).norm() < 1e-14);
    }
}

#[test]
fn two_photon_bunching_heralds_fock_two() {
    let layer = Layer {
        inputs: vec![Input::fock(0, 1), Input::fock(1, 1)],
        ops: vec![Op::Beamsplitter { modes: [0, 1], theta: FRAC_PI_4, phi: 0.0 }],
        measure: vec![1],
    };
    let s = Scheme { modes: 2, output: 0, root: Node::leaf(layer, &[&[0], &[1]]), loss: LossModel::none(), r_max: None, enumeration: Enumeration::default() };
    let target = FockTensor::fock_input(&[2], &[4]).unwrap();
    for backend in [Backend::Gaussian, Backend::Fock { cutoff: 6 }] {
        let opts = EvalOptions { backend, ..EvalOptions::fast() };
        let zero = s.evaluate_branch(&[0], &target, &opts).unwrap();
        assert_abs_diff_eq!(zero.probability, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(zero.fidelity.unwrap(), 1.0, epsilon = 1e-10);
        let one = s.evaluate_branch(&[1], &target, &opts).unwrap();
        assert!(one.probability < 1e-12);
    }
}

#[test]
fn cat_amplitudes() {
    let a = 1.3f64;
    let (cat, deficit) = cat_state(C64::new(a, 0.0), Parity::Odd, 0.0, 30).unwrap();
    assert!(deficit < 1e-10);
    let norm = (2.0 * (1.0 - (-2.0 * a * a).exp())).sqrt();
    let mut fact = 1.0;
    for n in 0..30 {
        if n > 0 {
            fact *= n as f64;
        }
        let coh = (-a * a / 2.0).exp() * a.powi(n as i32) / fact.sqrt();
        let expect = if n % 2 == 1 { 2.0 * coh / norm } else { 0.0 };
        assert_abs_diff_eq!(cat.get(&[n]).norm(), expect, epsilon = 1e-12);
    }
}

#[test]
fn targets_from_config() {
    let desc: TargetConfig = serde_json::from_str(r#"{"kind": "cat", "alpha": {"sqrt": 6}, "parity": "odd", "r": 0.5}"#).unwrap();
    let t = desc.build().unwrap();
    assert_abs_diff_eq!(t.state.norm_sqr(), 1.0, epsilon = 1e-10);

    let core = gkp_core_state(4, 10.0).unwrap();
    assert_eq!(core.coefficients.len(), 5);
    assert!(core.overlap > 0.0 && core.overlap <= 1.0);
    assert!(core.coefficients[1].abs() < 1e-12 && core.coefficients[3].abs() < 1e-12);
    let (gkp, _) = gkp_delta(10.0, 100).unwrap();
    let sq = FockTensor::single_mode(core.state.amplitudes().to_vec()).padded(&[100]).unwrap().apply_squeezer(core.squeezing, 0.0, 0).unwrap();
    assert_abs_diff_eq!(sq.overlap(&gkp).norm(), core.overlap, epsilon = 1e-6);
}
