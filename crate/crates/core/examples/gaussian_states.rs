//! Squeezed states, beamsplitters and the Bloch-Messiah factors of the result.
use std::f64::consts::FRAC_PI_4;

use adaptive_gbs::gaussian::{bloch_messiah, CovarianceState, SymplecticMatrix};

fn main() -> adaptive_gbs::Result<()> {
    let s = SymplecticMatrix::squeezer(0.6, 0.0, 0, 2)?;
    let s = SymplecticMatrix::squeezer(-0.6, 0.0, 1, 2)?.after(&s);
    let s = SymplecticMatrix::beamsplitter(FRAC_PI_4, 0.0, 0, 1, 2)?.after(&s);
    println!("symplectic deviation {:.1e}", s.symplectic_deviation());

    let tmsv = CovarianceState::vacuum(2).apply_symplectic(&s)?;
    println!("two-mode squeezed vacuum covariance {}", tmsv.v);
    println!("pure: {}", tmsv.is_pure(1e-10));

    let d = bloch_messiah(&s)?;
    println!("squeezing {:?}", d.squeezing);
    let err = (d.reconstruct().matrix() - s.matrix()).abs().max();
    println!("reconstruction error {err:.1e}");

    let lossy = tmsv.apply_loss(0.8, 1)?;
    println!("after 20% loss on mode 1, det V = {:.4}", lossy.det());
    for q in [-1.0, 0.0, 1.0] {
        println!("W({q:+}, 0, 0, 0) = {:.5}", lossy.wigner(&[q, 0.0, 0.0, 0.0])?);
    }
    Ok(())
}
