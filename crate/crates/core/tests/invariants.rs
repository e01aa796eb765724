mod common;

use std::f64::consts::PI;

use adaptive_gbs::fock::FockTensor;
use adaptive_gbs::gaussian::{bloch_messiah, CovarianceState, SymplecticMatrix, C64};
use adaptive_gbs::mesh::{rectangular_layout, Mesh};
use adaptive_gbs::scheme::{rerun_probability, Backend, EvalOptions, LossModel};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn target() -> FockTensor {
    FockTensor::single_mode(vec![C64::new(0.5, 0.0), C64::new(0.0, 0.5), C64::new(0.5, 0.0), C64::new(0.5, 0.0)]).normalized()
}

fn symplectic(gates: &[(u8, f64, f64)], modes: usize) -> SymplecticMatrix {
    let mut s = SymplecticMatrix::identity(modes);
    for (k, &(kind, a, b)) in gates.iter().enumerate() {
        let i = k % modes;
        let j = (k + 1) % modes;
        let g = match kind % 3 {
            0 => SymplecticMatrix::squeezer(a, b, i, modes),
            1 => SymplecticMatrix::beamsplitter(a, b, i, j, modes),
            _ => SymplecticMatrix::phase(b, i, modes),
        };
        s = g.unwrap().after(&s);
    }
    s
}

fn gates() -> impl Strategy<Value = Vec<(u8, f64, f64)>> {
    prop::collection::vec((0u8..3, -1.2f64..1.2, 0.0..2.0 * PI), 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gate_products_stay_symplectic(g in gates(), modes in 2usize..5) {
        let s = symplectic(&g, modes);
        prop_assert!(s.symplectic_deviation() < 1e-11);
        let d = bloch_messiah(&s).unwrap();
        prop_assert!((d.reconstruct().matrix() - s.matrix()).abs().max() < 1e-9);
        prop_assert!(d.squeezing.iter().all(|r| r.is_finite()));
    }

    #[test]
    fn evolved_states_are_physical(g in gates(), eta in 0.0f64..1.0) {
        let st = CovarianceState::vacuum(3).apply_symplectic(&symplectic(&g, 3)).unwrap();
        prop_assert!(st.uncertainty_min_eigenvalue() > -1e-9);
        prop_assert!(st.is_pure(1e-8));
        let lossy = st.apply_loss(eta, 1).unwrap();
        prop_assert!(lossy.uncertainty_min_eigenvalue() > -1e-9);
    }

    #[test]
    fn mesh_roundtrip(n in 2usize..6, seed in 0u64..1000) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let units = rectangular_layout(n).len();
        let t: Vec<f64> = (0..units).map(|_| rng.random_range(0.0..PI / 2.0)).collect();
        let p: Vec<f64> = (0..units).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let ph: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
        let u = Mesh::rectangular(n, &t, &p, &ph).unwrap().unitary();
        let back = Mesh::decompose(&u, 1e-10).unwrap().unitary();
        prop_assert!((back - &u).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
    }

    #[test]
    fn branch_values_are_bounded(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_circuit(&mut rng, &[&[0, 0], &[1, 2], &[2, 2], &[3, 1]]);
        let r = s.evaluate(&target(), &EvalOptions::default()).unwrap();
        let mut sum = 0.0;
        for b in &r.branches {
            prop_assert!((0.0..=1.0).contains(&b.probability));
            if let Some(f) = b.fidelity {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&f));
            }
            sum += b.probability;
        }
        prop_assert!(sum <= 1.0 + 1e-9);
        prop_assert!(r.totals.p_tail > -1e-9);
    }

    #[test]
    fn loss_moves_to_detection(seed in 0u64..10_000, eta in 0.3f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = common::random_circuit(&mut rng, &[&[1, 1], &[2, 0]]);
        a.loss = LossModel { post_squeeze: eta, ..LossModel::none() };
        let b = a.with_loss_moved_to_detection();
        let ra = a.evaluate(&target(), &EvalOptions::fast()).unwrap();
        let rb = b.evaluate(&target(), &EvalOptions::fast()).unwrap();
        for (x, y) in ra.branches.iter().zip(&rb.branches) {
            prop_assert!((x.probability - y.probability).abs() < 1e-9);
            prop_assert!((x.fidelity.unwrap() - y.fidelity.unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn more_loss_never_raises_fidelity_of_photon(eta_hi in 0.5f64..1.0, frac in 0.1f64..0.9) {
        let mut hi = common::tmsv(0.3, 1);
        hi.loss = LossModel { output: eta_hi, ..LossModel::none() };
        let mut lo = hi.clone();
        lo.loss.output = eta_hi * frac;
        let t = FockTensor::fock_input(&[1], &[2]).unwrap();
        let fh = hi.evaluate_branch(&[0], &t, &EvalOptions::fast()).unwrap().fidelity.unwrap();
        let fl = lo.evaluate_branch(&[0], &t, &EvalOptions::fast()).unwrap().fidelity.unwrap();
        prop_assert!(fl < fh);
    }

    #[test]
    fn rerun_is_monotone(p in 0.0f64..1.0, k in 1u32..20) {
        let a = rerun_probability(p, k);
        let b = rerun_probability(p, k + 1);
        prop_assert!(a <= b + 1e-15 && b <= 1.0);
        prop_assert!(a >= p - 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn backends_agree(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = common::random_circuit(&mut rng, &[&[1, 1], &[0, 2]]);
        let g = EvalOptions { output_cutoff: Some(10), ..EvalOptions::fast() };
        let f = EvalOptions { backend: Backend::Fock { cutoff: 26 }, ..g.clone() };
        for leaf in s.leaf_paths() {
            let a = s.evaluate_branch(&leaf, &target(), &g).unwrap();
            let b = s.evaluate_branch(&leaf, &target(), &f).unwrap();
            prop_assert!((a.probability - b.probability).abs() < 1e-7);
            prop_assert!((a.fidelity.unwrap() - b.fidelity.unwrap()).abs() < 1e-6);
        }
    }
}
