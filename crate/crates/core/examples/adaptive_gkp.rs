//! Adaptive GKP core source with a symplectic block in the second layer,
//! driven through the optimizer API directly.
use std::path::PathBuf;

use adaptive_gbs::cli::ExperimentConfig;
use adaptive_gbs::optimize::{optimize_adaptive, Settings};
use adaptive_gbs::scheme::EvalOptions;

fn main() -> adaptive_gbs::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/gkp3_symplectic.json");
    let (cfg, _) = ExperimentConfig::load(&path)?;
    let target = cfg.target()?;
    let settings = Settings { restarts: 24, seed: 2, ..cfg.optimizer.clone() };
    let res = optimize_adaptive(&cfg.scheme, &target.state, &settings, &EvalOptions::fast())?;
    for (k, s) in res.stages.iter().enumerate() {
        println!("stage {k}: {} branches, P {:.5}, F {:.5}, {} evaluations", s.branches.len(), s.probability, s.fidelity, s.evaluations);
    }
    for b in res.report.branches.iter().filter(|b| !b.abort) {
        println!("({}) P = {:.5}  F = {:.5}", b.label(), b.probability, b.fidelity.unwrap_or(0.0));
    }
    let t = &res.report.totals;
    println!("total P = {:.5}, aborted {:.5}, with flagged outcomes {:.5}", t.p_success, t.p_abort, t.p_with_flagged);
    Ok(())
}
