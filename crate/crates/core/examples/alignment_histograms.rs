//! Marginals of alpha_t against the recurrence X_t, written as CSV for
//! plotting, with KS distances on stdout.
//!
//! cargo run --release --example alignment_histograms -- out.csv

use tensor_power::experiments::{
    experiment_histograms, histogram_samples_table, ExperimentConfig, ExperimentKind,
};
use tensor_power::table::{write_results, OutputFormat};

fn main() -> tensor_power::Result<()> {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Histograms, vec![200], vec![3], vec![1.0]);
    cfg.reps = 1000;
    cfg.master_seed = 7;
    let points = experiment_histograms(&cfg)?;
    let p = &points[0];
    for (i, t) in p.steps.iter().enumerate() {
        // alpha_t never exceeds lambda; X_t has no such ceiling
        let above = p.recurrence[i]
            .iter()
            .filter(|&&x| x > p.config.lambda)
            .count();
        println!(
            "t = {t}: KS = {:.3}, X_t above lambda in {above} of {} runs",
            p.ks[i], cfg.reps
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        write_results(
            &histogram_samples_table(&points),
            path.as_ref(),
            OutputFormat::Csv,
        )?;
    }
    Ok(())
}
