//! Cat and GKP target states.
use adaptive_gbs::targets::{gkp_core_state, TargetConfig};

fn main() -> adaptive_gbs::Result<()> {
    let configs = [
        r#"{"kind": "cat", "alpha": {"sqrt": 6}, "parity": "odd", "r": 0.5}"#,
        r#"{"kind": "cat", "alpha": 2.0, "parity": "odd", "r": 0.5}"#,
        r#"{"kind": "gkp-delta", "delta_db": 10.0}"#,
        r#"{"kind": "gkp-core", "n_max": 4, "delta_db": 10.0}"#,
    ];
    for s in configs {
        let desc: TargetConfig = serde_json::from_str(s)?;
        let t = desc.build()?;
        let probs: Vec<String> = t.state.amplitudes().iter().take(8).map(|a| format!("{:.3}", a.norm_sqr())).collect();
        println!("{:<28} cutoff {:>3}  P(n<8) [{}]", t.label, t.state.cutoffs()[0], probs.join(" "));
    }
    let core = gkp_core_state(4, 10.0)?;
    println!("core coefficients {:?}, squeezing {:.4}, overlap {:.4}", core.coefficients, core.squeezing, core.overlap);
    Ok(())
}
