//! Convergence-time bracket and envelope constants over a small grid.

use tensor_power::bounds::{self, report};
use tensor_power::recurrence::{dominant_closed_form, DominantSeqParams, EnvelopeSide};

fn main() -> tensor_power::Result<()> {
    println!(
        "{:>9} {:>2} {:>6} {:>8} {:>8} {:>8} {:>8}",
        "n", "k", "gamma", "lower", "upper", "M", "N"
    );
    for k in [3, 4] {
        for n in [1_000usize, 1_000_000] {
            for gamma in [0.5, 1.0, 4.0] {
                let r = report(n, k, gamma, 0.5, 0.0, 0.5, 2.0)?;
                println!(
                    "{n:>9} {k:>2} {gamma:>6} {:>8.3} {:>8.3} {:>8.4} {:>8.4}",
                    r.lower_bound, r.upper_bound, r.m, r.n_const
                );
            }
        }
    }
    println!(
        "C_3 = {}, eps_3 = {:.4}",
        bounds::c_k(3)?,
        bounds::epsilon_k(3)?
    );

    let upper = DominantSeqParams {
        delta_env: 1.0,
        gamma: 1.0,
        k: 3,
        b0: 1.0,
        side: EnvelopeSide::Upper,
    };
    let seq: Vec<f64> = (0..5)
        .map(|t| dominant_closed_form(&upper, t).unwrap())
        .collect();
    println!("upper envelope from b0 = 1: {seq:?}");
    Ok(())
}
