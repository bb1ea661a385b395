use tensor_power::conditioned::{self, ConditioningState};
use tensor_power::dense;
use tensor_power::rng::labels;
use tensor_power::stats::{ks_statistic, median};
use tensor_power::{
    sample_signal, t_conv, t_hit, t_stop, IterateTrace, ModelConfig, SpikedTensor, StopRuleConfig,
    Stream,
};

fn rules(max_iters: usize) -> StopRuleConfig {
    StopRuleConfig {
        max_iters,
        conv_delta: 0.1,
        ..Default::default()
    }
}

fn sampled(n: usize, k: usize, gamma: f64, seed: u64) -> (SpikedTensor, tensor_power::UnitVector) {
    let st = Stream::replication(seed, 0);
    let config = ModelConfig::from_gamma(n, k, gamma).unwrap();
    let v = sample_signal(n, &mut st.split(labels::SIGNAL)).unwrap();
    let init = sample_signal(n, &mut st.split(labels::INIT)).unwrap();
    (
        SpikedTensor::sample(config, v, &mut st.split(labels::NOISE)).unwrap(),
        init,
    )
}

fn check_alignment_identity(trace: &IterateTrace) {
    let cfg = trace.config;
    let sqrt_n = (cfg.n as f64).sqrt();
    for w in trace.records.windows(2) {
        let want = cfg.gamma * (sqrt_n * w[0].correlation).powi(cfg.k as i32 - 1);
        let got = w[1].alignment;
        assert!(
            (got - want).abs() <= 1e-9 * got.abs().max(want.abs()).max(1e-300),
            "{got} vs {want}"
        );
        assert!(w[1].overlap.unwrap().abs() <= 1.0 + 1e-12);
    }
}

#[test]
fn power_of_two_scaling_is_bit_exact() {
    let (t, init) = sampled(25, 3, 1.0, 1);
    let base = dense::run(&t, &init, &rules(15)).unwrap();
    for c in [0.25, 8.0] {
        let scaled = dense::run(&t.scaled(c), &init, &rules(15)).unwrap();
        for (a, b) in base.records.iter().zip(&scaled.records) {
            assert_eq!(a.correlation.to_bits(), b.correlation.to_bits());
            assert_eq!(a.overlap.map(f64::to_bits), b.overlap.map(f64::to_bits));
        }
        assert_eq!(base.final_iterate, scaled.final_iterate);
    }
}

#[test]
fn arbitrary_scaling_keeps_iterates_and_times() {
    let (t, init) = sampled(25, 4, 1.5, 2);
    let base = dense::run(&t, &init, &rules(20)).unwrap();
    for c in [0.37, 3.1] {
        let scaled = dense::run(&t.scaled(c), &init, &rules(20)).unwrap();
        for (a, b) in base.final_iterate.iter().zip(&scaled.final_iterate) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(t_conv(&base, 0.1), t_conv(&scaled, 0.1));
        assert_eq!(t_stop(&base, 0.5), t_stop(&scaled, 0.5));
    }
}

#[test]
fn alignment_identity_holds_on_both_engines() {
    for seed in 0..5 {
        let (t, init) = sampled(30, 3, 1.0, seed);
        check_alignment_identity(&dense::run(&t, &init, &rules(12)).unwrap());
        let config = ModelConfig::from_gamma(60, 4, 2.0).unwrap();
        let (trace, _) = conditioned::run_replication(config, &rules(12), seed, 0).unwrap();
        check_alignment_identity(&trace);
    }
}

#[test]
fn engines_agree_in_law_at_n30() {
    let reps = 500;
    for gamma in [0.5, 1.0] {
        let config = ModelConfig::from_gamma(30, 3, gamma).unwrap();
        let d: Vec<IterateTrace> = (0..reps)
            .map(|r| dense::run_replication(config, &rules(3), 100, r).unwrap())
            .collect();
        let c: Vec<IterateTrace> = (0..reps)
            .map(|r| {
                conditioned::run_replication(config, &rules(3), 200, r)
                    .unwrap()
                    .0
            })
            .collect();
        for t in 1..=3 {
            let a: Vec<f64> = d.iter().map(|x| x.records[t].alignment).collect();
            let b: Vec<f64> = c.iter().map(|x| x.records[t].alignment).collect();
            let ks = ks_statistic(&a, &b).unwrap();
            assert!(ks <= 0.12, "gamma {gamma}, t {t}: KS {ks}");
        }
    }
}

#[test]
fn gram_drift_stays_small_over_thirty_steps() {
    let config = ModelConfig::from_gamma(80, 3, 0.8).unwrap();
    let mut s = ConditioningState::init(config, &Stream::from_seed(9)).unwrap();
    for _ in 0..30 {
        s.step().unwrap();
        assert!(s.basis().max_gram_deviation() <= 1e-8);
    }
}

/// Largest `|zeta - 1|`, `|b|`, `1 - c` seen before the hitting time.
fn error_term_sizes(n: usize, seed: u64) -> [f64; 3] {
    let config = ModelConfig::from_gamma(n, 3, 1.0).unwrap();
    let (trace, terms) = conditioned::run_replication(config, &rules(10), seed, 0).unwrap();
    let level = rules(10).hit_level(n, 3).unwrap();
    let stop = t_hit(&trace, level).unwrap_or(trace.records.len());
    let mut out = [0.0f64; 3];
    for e in terms.iter().take(stop).skip(1) {
        out[0] = out[0].max((e.zeta - 1.0).abs());
        out[1] = out[1].max(e.b.abs());
        out[2] = out[2].max(1.0 - e.c);
    }
    out
}

#[test]
fn error_terms_concentrate_as_n_grows() {
    let med = |n: usize| -> [f64; 3] {
        let rows: Vec<[f64; 3]> = (0..60).map(|s| error_term_sizes(n, s)).collect();
        std::array::from_fn(|i| median(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()))
    };
    let small = med(100);
    let large = med(1600);
    for i in 0..3 {
        assert!(
            large[i] < small[i],
            "term {i}: {} at n=1600 vs {} at n=100",
            large[i],
            small[i]
        );
    }
    assert!(
        large[0] < 0.2 && large[1] < 0.2 && large[2] < 0.05,
        "{large:?}"
    );
}

#[test]
fn conditioned_first_step_matches_dense_formula() {
    // alpha_1 = gamma (sqrt(n) <v, v~^0>)^{k-1} on both engines for the same replication
    let config = ModelConfig::from_gamma(40, 3, 1.0).unwrap();
    let d = dense::run_replication(config, &rules(1), 5, 3).unwrap();
    let (c, _) = conditioned::run_replication(config, &rules(1), 5, 3).unwrap();
    assert_eq!(d.records[0].correlation, c.records[0].correlation);
    assert!(
        (d.records[1].alignment - c.records[1].alignment).abs()
            <= 1e-12 * d.records[1].alignment.abs()
    );
}
