//! Criterion checks shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_4, PI};
use std::path::PathBuf;
use std::time::Instant;

use adaptive_gbs::bargmann::pattern_distribution;
use adaptive_gbs::cli::{optimize_config, ExperimentConfig, Optimized};
use adaptive_gbs::fock::{gaussian_to_fock, FockTensor};
use adaptive_gbs::gaussian::{bloch_messiah, CovarianceState, SymplecticMatrix, C64};
use adaptive_gbs::herald::{apply_loss_fock, DensityBlock};
use adaptive_gbs::mesh::{rectangular_layout, Mesh};
use adaptive_gbs::scheme::{
    concatenated_total, rerun_probability, Backend, Enumeration, EvalOptions, Input, Layer, LossModel, LossPosition, LossSite,
    Node, Op, Scheme,
};
use adaptive_gbs::targets::{cat_state, Parity};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Check {
    pub ok: bool,
    pub detail: String,
}

impl Check {
    fn new(ok: bool, detail: impl Into<String>) -> Self {
        Self { ok, detail: detail.into() }
    }
}

pub fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

pub fn load(name: &str) -> (ExperimentConfig, String) {
    ExperimentConfig::load(&config(name)).unwrap()
}

pub fn optimized(name: &str) -> Optimized {
    let (cfg, hash) = load(name);
    optimize_config(&cfg, &hash, None).unwrap()
}

/// Success branches as (label, probability, fidelity).
pub fn successes(o: &Optimized) -> Vec<(String, f64, f64)> {
    o.summary
        .branches
        .iter()
        .filter(|b| !b.abort)
        .map(|b| (b.branch.clone(), b.probability, b.fidelity.unwrap_or(0.0)))
        .collect()
}

fn show(rows: &[(String, f64, f64)]) -> String {
    rows.iter().map(|(l, p, f)| format!("({l}) P={p:.5} F={f:.5}")).collect::<Vec<_>>().join(" ")
}

pub fn tmsv(r: f64, n: usize) -> Scheme {
    let layer = Layer {
        inputs: vec![Input::squeezed(0, r, 0.0), Input::squeezed(1, -r, 0.0)],
        ops: vec![Op::Beamsplitter { modes: [0, 1], theta: FRAC_PI_4, phi: 0.0 }],
        measure: vec![1],
    };
    Scheme { modes: 2, output: 0, root: Node::leaf(layer, &[&[n]]), loss: LossModel::none(), r_max: None, enumeration: Enumeration::default() }
}

/// Three squeezed inputs, one displaced, and a random mesh; modes 1 and 2 measured.
pub fn random_circuit(rng: &mut ChaCha8Rng, patterns: &[&[usize]]) -> Scheme {
    let mut inputs: Vec<Input> = (0..3).map(|m| Input::squeezed(m, rng.random_range(0.05..0.6), rng.random_range(0.0..2.0 * PI))).collect();
    inputs[0].displacement = Some([rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]);
    let units = rectangular_layout(3).len();
    let op = Op::Interferometer {
        modes: vec![0, 1, 2],
        thetas: (0..units).map(|_| rng.random_range(0.0..PI / 2.0)).collect(),
        phis: (0..units).map(|_| rng.random_range(0.0..2.0 * PI)).collect(),
        phases: (0..3).map(|_| rng.random_range(0.0..2.0 * PI)).collect(),
    };
    let layer = Layer { inputs, ops: vec![op], measure: vec![1, 2] };
    Scheme { modes: 3, output: 0, root: Node::leaf(layer, patterns), loss: LossModel::none(), r_max: None, enumeration: Enumeration::default() }
}

/// Same circuit built directly from gates.
pub fn circuit_state(s: &Scheme) -> CovarianceState {
    let layer = &s.root.layer;
    let mut st = CovarianceState::vacuum(s.modes);
    for i in &layer.inputs {
        st = st.apply_symplectic(&SymplecticMatrix::squeezer(i.r, i.phi, i.mode, s.modes).unwrap()).unwrap();
        if let Some([re, im]) = i.displacement {
            st = st.displace(C64::new(re, im), i.mode).unwrap();
        }
    }
    for op in &layer.ops {
        if let Op::Interferometer { modes, thetas, phis, phases } = op {
            let u = Mesh::rectangular(modes.len(), thetas, phis, phases).unwrap().unitary();
            st = st.apply_symplectic(&SymplecticMatrix::passive_on(&u, modes, s.modes).unwrap()).unwrap();
        }
    }
    st
}

fn random_symplectic(rng: &mut ChaCha8Rng, modes: usize) -> SymplecticMatrix {
    let mut s = SymplecticMatrix::identity(modes);
    for _ in 0..3 * modes {
        let i = rng.random_range(0..modes);
        let j = (i + rng.random_range(1..modes)) % modes;
        let g = match rng.random_range(0..3) {
            0 => SymplecticMatrix::squeezer(rng.random_range(-1.0..1.0), rng.random_range(0.0..2.0 * PI), i, modes),
            1 => SymplecticMatrix::beamsplitter(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI), i, j, modes),
            _ => SymplecticMatrix::phase(rng.random_range(0.0..2.0 * PI), i, modes),
        };
        s = g.unwrap().after(&s);
    }
    s
}

fn max_abs(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> f64 {
    (a - b).abs().max()
}

pub fn analytic_suite() -> Check {
    let t = Instant::now();
    let mut worst_p: f64 = 0.0;
    let mut worst_f: f64 = 0.0;
    let r: f64 = 0.5;
    for n in 0..8 {
        let target = FockTensor::fock_input(&[n], &[20]).unwrap();
        let expect = r.tanh().powi(2 * n as i32) / r.cosh().powi(2);
        for backend in [Backend::Gaussian, Backend::Fock { cutoff: 40 }] {
            let opts = EvalOptions { backend, output_cutoff: Some(20), ..EvalOptions::fast() };
            let b = tmsv(r, n).evaluate_branch(&[0], &target, &opts).unwrap();
            worst_p = worst_p.max((b.probability - expect).abs());
            worst_f = worst_f.max(1.0 - b.fidelity.unwrap());
        }
    }

    let hom = FockTensor::fock_input(&[1, 1], &[3, 3]).unwrap().apply_beamsplitter(FRAC_PI_4, 0.0, 0, 1).unwrap();
    let hom_err = hom.get(&[1, 1]).norm_sqr() + (hom.get(&[2, 0]).norm_sqr() - 0.5).abs() + (hom.get(&[0, 2]).norm_sqr() - 0.5).abs();

    let alpha = C64::new(0.8, -0.5);
    let coh = gaussian_to_fock(&CovarianceState::vacuum(1).displace(alpha, 0).unwrap(), &[24]).unwrap();
    let mut coh_err: f64 = 0.0;
    let mut fact = 1.0;
    for k in 0..24 {
        if k > 0 {
            fact *= k as f64;
        }
        let expect = (-alpha.norm_sqr() / 2.0).exp() * alpha.powu(k as u32) / fact.sqrt();
        coh_err = coh_err.max((coh.get(&[k]) - expect).norm());
    }

    let eta = 0.73;
    let one = FockTensor::fock_input(&[1], &[4]).unwrap();
    let rho = apply_loss_fock(&DensityBlock::from_pure(&one), eta, 0).unwrap();
    let mut loss_err = (rho.rho[(1, 1)].re - eta).abs() + (rho.rho[(0, 0)].re - (1.0 - eta)).abs();
    let layer = Layer { inputs: vec![Input::fock(0, 1)], ops: vec![], measure: vec![1] };
    let mut s = Scheme { modes: 2, output: 0, root: Node::leaf(layer, &[&[0]]), loss: LossModel::none(), r_max: None, enumeration: Enumeration::default() };
    s.loss.sites.push(LossSite { mode: 0, position: LossPosition::Output, eta });
    let b = s.evaluate_branch(&[0], &one, &EvalOptions::fast()).unwrap();
    loss_err += (b.fidelity.unwrap() - eta).abs();

    let ok = worst_p < 1e-10 && worst_f < 1e-10 && hom_err < 1e-14 && coh_err < 1e-12 && loss_err < 1e-12 && t.elapsed().as_secs_f64() < 1.0;
    Check::new(
        ok,
        format!(
            "tmsv dP={worst_p:.1e} 1-F={worst_f:.1e}; hom {hom_err:.1e}; coherent {coh_err:.1e}; loss split {loss_err:.1e}; {:.2}s",
            t.elapsed().as_secs_f64()
        ),
    )
}

pub fn structural_suite() -> Check {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut bm: f64 = 0.0;
    let mut form: f64 = 0.0;
    let mut passive_ok = true;
    for k in 0..100 {
        let s = random_symplectic(&mut rng, 2 + k % 3);
        form = form.max(s.symplectic_deviation());
        let d = bloch_messiah(&s).unwrap();
        bm = bm.max(max_abs(d.reconstruct().matrix(), s.matrix()));
        passive_ok &= d.o_in.is_passive(1e-9) && d.o_out.is_passive(1e-9);
    }

    let n = 5;
    let units = rectangular_layout(n).len();
    let thetas: Vec<f64> = (0..units).map(|_| rng.random_range(0.0..PI / 2.0)).collect();
    let phis: Vec<f64> = (0..units).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let phases: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
    let mesh = Mesh::rectangular(n, &thetas, &phis, &phases).unwrap();
    let u = mesh.unitary();
    let mut mesh_err: f64 = 0.0;
    for j in 0..n {
        let mut occ = vec![0; n];
        occ[j] = 1;
        let out = FockTensor::fock_input(&occ, &vec![2; n]).unwrap().apply_mesh(&mesh, &(0..n).collect::<Vec<_>>()).unwrap();
        for i in 0..n {
            let mut o = vec![0; n];
            o[i] = 1;
            mesh_err = mesh_err.max((out.get(&o) - u[(i, j)]).norm());
        }
    }

    let side = 5;
    let boxed: Vec<Vec<usize>> = (0..=side).flat_map(|a| (0..=side).map(move |b| vec![a, b])).collect();
    let refs: Vec<&[usize]> = boxed.iter().map(|p| p.as_slice()).collect();
    let target = FockTensor::fock_input(&[1], &[8]).unwrap();
    let mut sum_err: f64 = 0.0;
    for _ in 0..5 {
        let mut s = random_circuit(&mut rng, &refs);
        s.enumeration = Enumeration { per_mode: side, total: 2 * side };
        let inside: f64 = s.evaluate(&target, &EvalOptions::fast()).unwrap().branches.iter().map(|b| b.probability).sum();
        let outside: f64 = pattern_distribution(&circuit_state(&s), &[1, 2], 40)
            .unwrap()
            .iter()
            .filter(|(p, _)| p.iter().any(|&k| k > side))
            .map(|(_, q)| q)
            .sum();
        sum_err = sum_err.max((inside + outside - 1.0).abs());
    }

    let ok = bm < 1e-9 && form < 1e-12 && passive_ok && mesh_err < 1e-10 && sum_err < 1e-8 && t.elapsed().as_secs_f64() < 10.0;
    Check::new(
        ok,
        format!(
            "bloch-messiah {bm:.1e}; form {form:.1e}; mesh {mesh_err:.1e}; sum+tail {sum_err:.1e}; {:.2}s",
            t.elapsed().as_secs_f64()
        ),
    )
}

pub fn loss_commutation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (target, _) = cat_state(C64::new(1.2, 0.0), Parity::Odd, 0.2, 16).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let mut a = random_circuit(&mut rng, &[&[1, 2], &[1, 1], &[0, 2]]);
        let eta = rng.random_range(0.5..1.0);
        let mut b = a.clone();
        a.loss = LossModel { post_squeeze: eta, ..LossModel::none() };
        b.loss = LossModel { pre_detect: eta, output: eta, ..LossModel::none() };
        let ra = a.evaluate(&target, &EvalOptions::fast()).unwrap();
        let rb = b.evaluate(&target, &EvalOptions::fast()).unwrap();
        for (x, y) in ra.branches.iter().zip(&rb.branches) {
            worst = worst.max((x.probability - y.probability).abs());
            worst = worst.max((x.fidelity.unwrap() - y.fidelity.unwrap()).abs());
        }
    }
    Check::new(worst < 1e-9, format!("max |dP|,|dF| over 50 circuits {worst:.1e}"))
}

pub fn cat_bounded() -> Check {
    let t = Instant::now();
    let three = successes(&optimized("cat3_bounded"));
    let two = successes(&optimized("cat2_bounded"));
    let adaptive = successes(&optimized("cat3_bounded_adaptive"));
    let (_, p3, f3) = three[0].clone();
    let (_, p2, f2) = two[0].clone();
    let primary = adaptive.iter().find(|b| b.0 == "1;2").cloned().unwrap();
    let secondary = adaptive.iter().find(|b| b.0 == "2;1").cloned().unwrap();
    let secs = t.elapsed().as_secs_f64();
    let ok = f3 >= 0.970
        && p3 >= 0.0045
        && f2 >= 0.970
        && p2 >= 0.0040
        && (secondary.2 - primary.2).abs() <= 1e-2
        && secondary.1 >= 0.0005
        && secs <= 600.0;
    Check::new(ok, format!("3-mode {} | 2-mode {} | adaptive {} | {secs:.0}s", show(&three), show(&two), show(&adaptive)))
}

pub fn cat_unbounded() -> Check {
    let rows = successes(&optimized("cat3_unbounded"));
    let (_, p, f) = rows[0].clone();
    Check::new(f >= 0.99 && p >= 0.05, show(&rows))
}

pub fn gkp_core() -> Check {
    let na = successes(&optimized("gkp3_nonadaptive"));
    let passive = successes(&optimized("gkp3_passive"));
    let symplectic = successes(&optimized("gkp3_symplectic"));
    let total = |r: &[(String, f64, f64)]| r.iter().map(|b| b.1).sum::<f64>();
    let ok = na[0].2 >= 0.99 && na[0].1 >= 0.020 && total(&passive) >= 0.035 && total(&symplectic) >= 0.050;
    Check::new(
        ok,
        format!(
            "non-adaptive {} | passive total {:.5} {} | symplectic total {:.5} {}",
            show(&na),
            total(&passive),
            show(&passive),
            total(&symplectic),
            show(&symplectic)
        ),
    )
}

pub fn fock_input_cat() -> Check {
    let na = successes(&optimized("cat_fock_input_nonadaptive"));
    let ad = successes(&optimized("cat_fock_input"));
    let total: f64 = ad.iter().map(|b| b.1).sum();
    let fid_ok = na.iter().chain(&ad).all(|b| b.2 >= 0.95);
    let ok = fid_ok && na[0].1 >= 0.024 && total >= 0.030 && total >= na[0].1;
    Check::new(ok, format!("non-adaptive {} | adaptive total {total:.5} {}", show(&na), show(&ad)))
}

pub fn loss_trends() -> Check {
    let lossy = optimized("cat3_bounded_loss10");
    let target = load("cat3_bounded_loss10").0.target().unwrap().state;
    let opts = EvalOptions::fast();
    let leaf = lossy.scheme.leaf_paths()[0].clone();
    let at = |loss: LossModel| {
        let mut s = lossy.scheme.clone();
        s.loss = loss;
        let b = s.evaluate_branch(&leaf, &target, &opts).unwrap();
        (b.probability, b.fidelity.unwrap())
    };
    let (p0, f0) = at(LossModel::none());
    let (p10, f10) = at(LossModel::uniform(0.1));
    let (ph, fh) = at(LossModel { pre_detect: 0.9, ..LossModel::none() });
    let (po, fo) = at(LossModel { output: 0.9, ..LossModel::none() });
    let uniform_ok = (0.60..=0.72).contains(&f10) && (p10 / p0 - 1.0).abs() <= 0.25;
    let direction_ok = ph < po && (po - p0).abs() <= 1e-12 * p0 && fo < f0 && fo < fh;

    let aware = optimized("gkp3_nonadaptive_loss1");
    let blind = aware.summary.optimization.as_ref().and_then(|o| o.loss_blind.clone()).unwrap_or_default();
    let f_blind = blind.iter().filter(|b| !b.abort).filter_map(|b| b.fidelity).fold(f64::NAN, f64::max);
    let f_aware = successes(&aware)[0].2;
    let aware_ok = f_aware > f_blind;

    Check::new(
        uniform_ok && direction_ok && aware_ok,
        format!(
            "10% uniform F={f10:.4} P={p10:.5} (lossless P={p0:.5} F={f0:.4}); herald-only P={ph:.5} F={fh:.4}; output-only P={po:.5} F={fo:.4}; \
             1% loss-aware F={f_aware:.5} > blind F={f_blind:.5}"
        ),
    )
}

pub fn composition() -> Check {
    let rerun = rerun_probability(0.0043, 2);
    let concat = concatenated_total(0.0529, 0.31, 0.0277);
    let (cfg, _) = load("gkp4_concat");
    let mut scheme = cfg.scheme.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let params: Vec<f64> = scheme.params().iter().map(|_| rng.random_range(0.05..0.6)).collect();
    scheme.set_params(&params);
    let report = scheme.evaluate_concatenated(&cfg.target().unwrap().state, &EvalOptions::fast()).unwrap();
    let summed: f64 = report.report.branches.iter().filter(|b| !b.abort).map(|b| b.probability).sum();
    let recomposed = concatenated_total(report.p_base, report.p_zero_first, report.p_extra);
    let ok = (rerun - 0.00858).abs() <= 1e-5
        && (concat - (0.0529 + 0.31 * 0.0529 + 0.0277)).abs() <= 1e-6
        && (recomposed - report.p_total).abs() <= 1e-6
        && (summed - report.p_total).abs() <= 1e-12
        && report.p_zero_first > 0.0;
    Check::new(
        ok,
        format!(
            "rerun(0.0043, 2)={rerun:.6}; composition(0.0529, 0.31, 0.0277)={concat:.6}; 4-mode tree total {:.5} = {:.5} + {:.3}*{:.5} + {:.5}",
            report.p_total, report.p_base, report.p_zero_first, report.p_base, report.p_extra
        ),
    )
}
