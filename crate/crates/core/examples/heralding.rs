//! Photon-number heralding from a two-mode squeezed vacuum, with and without
//! detector loss.
use std::f64::consts::FRAC_PI_4;

use adaptive_gbs::fock::FockTensor;
use adaptive_gbs::scheme::{Enumeration, EvalOptions, Input, Layer, LossModel, Node, Op, Scheme};

fn main() -> adaptive_gbs::Result<()> {
    let r = 0.6;
    let layer = Layer {
        inputs: vec![Input::squeezed(0, r, 0.0), Input::squeezed(1, -r, 0.0)],
        ops: vec![Op::Beamsplitter { modes: [0, 1], theta: FRAC_PI_4, phi: 0.0 }],
        measure: vec![1],
    };
    let mut scheme = Scheme {
        modes: 2,
        output: 0,
        root: Node::leaf(layer, &[&[1], &[2], &[3]]),
        loss: LossModel::none(),
        r_max: None,
        enumeration: Enumeration::default(),
    };
    for eta in [1.0, 0.9, 0.7] {
        scheme.loss = LossModel { pre_detect: eta, ..LossModel::none() };
        println!("detector efficiency {eta}");
        for (k, leaf) in scheme.leaf_paths().iter().enumerate() {
            let n = k + 1;
            let target = FockTensor::fock_input(&[n], &[n + 1])?;
            let b = scheme.evaluate_branch(leaf, &target, &EvalOptions { output_cutoff: Some(25), ..EvalOptions::fast() })?;
            println!("  herald {n}: P = {:.5}, F(|{n}>) = {:.4}", b.probability, b.fidelity.unwrap_or(0.0));
        }
    }
    Ok(())
}
