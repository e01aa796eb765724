//! Rectangular meshes: build one from angles, decompose a unitary back.
use adaptive_gbs::mesh::{rectangular_layout, unitarity_deviation, Mesh};

fn main() -> adaptive_gbs::Result<()> {
    let n = 4;
    let units = rectangular_layout(n).len();
    let thetas: Vec<f64> = (0..units).map(|k| 0.2 + 0.15 * k as f64).collect();
    let phis: Vec<f64> = (0..units).map(|k| 0.4 * k as f64).collect();
    let phases = vec![0.1, 0.2, 0.3, 0.4];
    let u = Mesh::rectangular(n, &thetas, &phis, &phases)?.unitary();
    println!("{units} beamsplitters on {n} modes, unitarity deviation {:.1e}", unitarity_deviation(&u));

    let back = Mesh::decompose(&u, 1e-10)?;
    let err = (back.unitary() - &u).iter().map(|z| z.norm()).fold(0.0, f64::max);
    println!("decomposition error {err:.1e}");
    Ok(())
}
