//! Optimizes the bounded-squeezing cat source, non-adaptive and adaptive.
use std::path::PathBuf;

use adaptive_gbs::cli::{optimize_config, render_report, ExperimentConfig};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn main() -> adaptive_gbs::Result<()> {
    for name in ["cat3_bounded", "cat2_bounded", "cat3_bounded_adaptive"] {
        let (mut cfg, hash) = ExperimentConfig::load(&configs().join(format!("{name}.json")))?;
        cfg.optimizer.restarts = 16;
        let out = optimize_config(&cfg, &hash, None)?;
        print!("{}", render_report(&out.summary));
        println!();
    }
    Ok(())
}
