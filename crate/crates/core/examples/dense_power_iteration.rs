//! Samples one spiked tensor and runs power iteration on it directly.
//!
//! cargo run --release --example dense_power_iteration -- [n] [gamma]

use tensor_power::rng::labels;
use tensor_power::{
    dense, sample_signal, t_conv, t_stop, ModelConfig, SpikedTensor, StopRuleConfig, Stream,
};

fn main() -> tensor_power::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(60, |s| s.parse().expect("n"));
    let gamma: f64 = args.next().map_or(1.0, |s| s.parse().expect("gamma"));

    let config = ModelConfig::from_gamma(n, 3, gamma)?;
    let stream = Stream::from_seed(1);
    let signal = sample_signal(n, &mut stream.split(labels::SIGNAL))?;
    let init = sample_signal(n, &mut stream.split(labels::INIT))?;
    let tensor = SpikedTensor::sample(config, signal, &mut stream.split(labels::NOISE))?;

    let rules = StopRuleConfig {
        max_iters: 15,
        ..Default::default()
    };
    let trace = dense::run(&tensor, &init, &rules)?;

    println!(
        "n = {n}, k = 3, lambda = {:.1} (gamma = {gamma})",
        config.lambda
    );
    println!(
        "{:>3} {:>12} {:>12} {:>10}",
        "t", "alignment", "correlation", "overlap"
    );
    for r in &trace.records {
        let o = r.overlap.map_or("-".to_string(), |o| format!("{o:.4}"));
        println!(
            "{:>3} {:>12.4} {:>12.6} {:>10}",
            r.t, r.alignment, r.correlation, o
        );
    }
    println!(
        "T_conv(0.01) = {:?}, T_stop(0.5) = {:?}",
        t_conv(&trace, 0.01),
        t_stop(&trace, 0.5)
    );
    Ok(())
}
