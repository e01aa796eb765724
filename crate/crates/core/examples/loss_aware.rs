//! Re-optimizing a GKP core source with the loss known, against parameters
//! tuned for a lossless device.
use std::path::PathBuf;

use adaptive_gbs::cli::{optimize_config, ExperimentConfig};

fn main() -> adaptive_gbs::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/gkp3_nonadaptive_loss1.json");
    let (mut cfg, hash) = ExperimentConfig::load(&path)?;
    cfg.optimizer.restarts = 24;
    let out = optimize_config(&cfg, &hash, None)?;
    let opt = out.summary.optimization.as_ref().expect("optimization summary");
    for (label, rows) in [("loss-blind", opt.loss_blind.as_ref()), ("without loss", opt.lossless.as_ref())] {
        for b in rows.into_iter().flatten().filter(|b| !b.abort) {
            println!("{label:<13} ({}) P = {:.5}  F = {:.5}", b.branch, b.probability, b.fidelity.unwrap_or(0.0));
        }
    }
    for b in out.summary.branches.iter().filter(|b| !b.abort) {
        println!("{:<13} ({}) P = {:.5}  F = {:.5}", "loss-aware", b.branch, b.probability, b.fidelity.unwrap_or(0.0));
    }
    Ok(())
}
