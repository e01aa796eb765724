//! Loss on an optimized cat source: where the loss sits decides whether it
//! costs probability or fidelity.
use std::path::PathBuf;

use adaptive_gbs::cli::{optimize_config, ExperimentConfig, SweepModel};
use adaptive_gbs::scheme::EvalOptions;

fn main() -> adaptive_gbs::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/cat3_bounded.json");
    let (mut cfg, hash) = ExperimentConfig::load(&path)?;
    cfg.optimizer.restarts = 16;
    let scheme = optimize_config(&cfg, &hash, None)?.scheme;
    let target = cfg.target()?.state;
    let leaf = scheme.leaf_paths()[0].clone();

    println!("{:<10} {:>6} {:>10} {:>8}", "model", "loss", "P", "F");
    for model in [SweepModel::Uniform, SweepModel::Detection, SweepModel::Herald, SweepModel::Output] {
        for loss in [0.0, 0.05, 0.1] {
            let mut s = scheme.clone();
            s.loss = model.loss_model(loss);
            let b = s.evaluate_branch(&leaf, &target, &EvalOptions::fast())?;
            println!("{:<10} {:>6.2} {:>10.5} {:>8.4}", format!("{model:?}"), loss, b.probability, b.fidelity.unwrap_or(0.0));
        }
    }
    Ok(())
}
