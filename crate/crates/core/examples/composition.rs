//! Repeating a source, and the four-mode concatenated GKP tree.
use std::path::PathBuf;

use adaptive_gbs::cli::ExperimentConfig;
use adaptive_gbs::scheme::{concatenated_total, rerun_probability, EvalOptions};

fn main() -> adaptive_gbs::Result<()> {
    for k in 1..=4 {
        println!("{k} attempts at 0.43%: {:.4}%", 100.0 * rerun_probability(0.0043, k));
    }
    println!("5.29% + 31% x 5.29% + 2.77% = {:.2}%", 100.0 * concatenated_total(0.0529, 0.31, 0.0277));

    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/gkp4_concat.json");
    let (cfg, _) = ExperimentConfig::load(&path)?;
    let mut scheme = cfg.scheme.clone();
    let params: Vec<f64> = (0..scheme.params().len()).map(|k| 0.1 + 0.05 * (k % 7) as f64).collect();
    scheme.set_params(&params);
    let c = scheme.evaluate_concatenated(&cfg.target()?.state, &EvalOptions::fast())?;
    println!(
        "arbitrary parameters: base {:.5}, empty first detection {:.3}, replica {:.5}, extra {:.5}, total {:.5}",
        c.p_base, c.p_zero_first, c.p_replica, c.p_extra, c.p_total
    );
    Ok(())
}
