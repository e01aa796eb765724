//! Gate-by-gate evolution on truncated Fock tensors.
use std::f64::consts::FRAC_PI_4;

use adaptive_gbs::fock::FockTensor;
use adaptive_gbs::gaussian::C64;

fn main() -> adaptive_gbs::Result<()> {
    let pair = FockTensor::fock_input(&[1, 1], &[3, 3])?.apply_beamsplitter(FRAC_PI_4, 0.0, 0, 1)?;
    for occ in [[2, 0], [1, 1], [0, 2]] {
        println!("|{}{}>  {:.4}", occ[0], occ[1], pair.get(&occ).norm_sqr());
    }

    let psi = FockTensor::vacuum(&[20])?.apply_squeezer(0.5, 0.0, 0)?.apply_displacement(C64::new(0.7, 0.2), 0)?;
    println!("squeezed coherent state: norm {:.6}, truncation {:.1e}", psi.norm_sqr(), psi.truncation());
    for n in 0..6 {
        println!("  P({n}) = {:.5}", psi.get(&[n]).norm_sqr());
    }
    Ok(())
}
