//! Mean |<v~^t, v>| per iteration at gamma = 1 for several dimensions.

use tensor_power::experiments::{experiment_correlation, ExperimentConfig, ExperimentKind};

fn main() -> tensor_power::Result<()> {
    let mut cfg = ExperimentConfig::new(
        ExperimentKind::Correlation,
        vec![100, 400, 1600],
        vec![3],
        vec![1.0],
    );
    cfg.reps = 200;
    cfg.rules.max_iters = 12;
    for p in experiment_correlation(&cfg)? {
        let row: Vec<String> = p.mean_abs_corr.iter().map(|c| format!("{c:.2}")).collect();
        println!("n = {:>4}: {}", p.config.n, row.join(" "));
    }
    Ok(())
}
