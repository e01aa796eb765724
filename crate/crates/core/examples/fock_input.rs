//! Even cat source with a single photon fed into one input, non-adaptive
//! against adaptive, both held at the same fidelity.
use std::path::PathBuf;

use adaptive_gbs::cli::{optimize_config, ExperimentConfig};

fn main() -> adaptive_gbs::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    for name in ["cat_fock_input_nonadaptive", "cat_fock_input"] {
        let (mut cfg, hash) = ExperimentConfig::load(&dir.join(format!("{name}.json")))?;
        cfg.optimizer.restarts = 24;
        let out = optimize_config(&cfg, &hash, None)?;
        println!("{name}: total P = {:.5}", out.summary.totals.p_success);
        for b in out.summary.branches.iter().filter(|b| !b.abort) {
            println!("  ({}) P = {:.5}  F = {:.5}", b.branch, b.probability, b.fidelity.unwrap_or(0.0));
        }
    }
    Ok(())
}
