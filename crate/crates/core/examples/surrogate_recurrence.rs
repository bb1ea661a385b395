//! The scalar recurrence X_{t+1} = gamma (X_t + Z_t)^{k-1} and its
//! hitting time of n^eps.

use tensor_power::bounds::epsilon_k;
use tensor_power::recurrence::{hitting_time, run_recurrence};
use tensor_power::stats::median;
use tensor_power::Stream;

fn main() -> tensor_power::Result<()> {
    let mut rng = Stream::from_seed(5);
    let tr = run_recurrence(1.0, 3, 6, &mut rng)?;
    for (t, x) in tr.x.iter().enumerate() {
        println!("X_{t} = {x:.4e}");
    }

    let n = 10_000usize;
    let level = (n as f64).powf(epsilon_k(3)?);
    for gamma in [0.5, 1.0, 2.0] {
        let times: Vec<f64> = (0..2000)
            .map(|_| {
                let tr = run_recurrence(gamma, 3, 100, &mut rng).unwrap();
                hitting_time(&tr, level).map_or(f64::INFINITY, |t| t as f64)
            })
            .collect();
        println!(
            "gamma = {gamma}: median time to reach {level:.2} is {}",
            median(&times)
        );
    }
    Ok(())
}
