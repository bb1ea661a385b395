//! Probability that power iteration ever reaches correlation 0.99, as a
//! function of gamma.

use tensor_power::experiments::{experiment_probability, ExperimentConfig, ExperimentKind};

fn main() -> tensor_power::Result<()> {
    let gammas = vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 4.0];
    let mut cfg =
        ExperimentConfig::new(ExperimentKind::Probability, vec![50, 200], vec![3], gammas);
    cfg.reps = 200;
    for p in experiment_probability(&cfg)? {
        println!(
            "n = {:>3}, gamma = {:>4}: {:.3} +/- {:.3}",
            p.config.n, p.config.gamma, p.converged.estimate, p.converged.std_error
        );
    }
    Ok(())
}
