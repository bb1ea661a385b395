//! Steps the Gaussian-conditioning engine by hand and prints the error
//! terms of the alignment recurrence next to the exact identity.

use tensor_power::conditioned::ConditioningState;
use tensor_power::{ModelConfig, Stream};

fn main() -> tensor_power::Result<()> {
    let config = ModelConfig::from_gamma(2000, 3, 1.0)?;
    let mut state = ConditioningState::init(config, &Stream::from_seed(3))?;

    println!(
        "{:>2} {:>10} {:>9} {:>9} {:>8} {:>8} {:>10} {:>10}",
        "t", "alpha", "zeta", "b", "c", "z", "next", "identity"
    );
    let mut alpha = 0.0;
    for _ in 0..8 {
        let e = state.error_terms();
        let (rec, _) = state.step()?;
        let identity = config.gamma * e.zeta * (alpha + e.b + e.c * e.z).powi(2);
        println!(
            "{:>2} {:>10.4} {:>9.5} {:>9.5} {:>8.5} {:>8.4} {:>10.4} {:>10.4}",
            e.t, alpha, e.zeta, e.b, e.c, e.z, rec.alignment, identity
        );
        alpha = rec.alignment;
    }
    println!(
        "stored w vectors: {}, basis size: {}, max Gram deviation: {:.1e}",
        state.w_count(),
        state.basis().len(),
        state.basis().max_gram_deviation()
    );
    Ok(())
}
