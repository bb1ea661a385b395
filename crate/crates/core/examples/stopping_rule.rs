//! Where the data-driven stopping rule fires compared with the oracle
//! convergence time, for a few overlap thresholds.

use tensor_power::experiments::{experiment_stopping, ExperimentConfig, ExperimentKind};
use tensor_power::stats::median;

fn main() -> tensor_power::Result<()> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Stopping, vec![200], vec![3], vec![1.0]);
    cfg.reps = 200;
    cfg.rules.conv_delta = 0.1;
    let res = experiment_stopping(&cfg)?;
    for p in &res.points {
        let stop: Vec<f64> = p
            .runs
            .iter()
            .map(|r| r.t_stop.map_or(f64::INFINITY, |t| t as f64))
            .collect();
        let conv: Vec<f64> = p
            .runs
            .iter()
            .map(|r| r.t_conv.map_or(f64::INFINITY, |t| t as f64))
            .collect();
        let good = p
            .runs
            .iter()
            .filter(|r| r.corr_at_stop.is_some_and(|c| c >= 0.9))
            .count();
        println!(
            "threshold {}: median T_stop {}, median T_conv {}, {good}/{} stopped with correlation >= 0.9",
            p.threshold,
            median(&stop),
            median(&conv),
            p.runs.len()
        );
    }
    Ok(())
}
