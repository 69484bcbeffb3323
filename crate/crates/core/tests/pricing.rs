use lsv_core::asymptotics::otm_put_leading;
use lsv_core::pricing_oracle::{mc_prices, MCConfig, OptionKind};
use lsv_core::ModelSpec;

fn cfg(seed: u64) -> MCConfig {
    MCConfig {
        paths: 40_000,
        steps: 20,
        seed,
        antithetic: true,
    }
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn thread_count_does_not_change_results() {
    let m = ModelSpec::sabr(0.2, 1.0).with_lambda(0.05);
    let strikes = [0.8, 1.0, 1.25];
    for kind in [OptionKind::Call, OptionKind::Put] {
        let one = in_pool(1, || mc_prices(&m, &strikes, 0.25, kind, &cfg(3)).unwrap());
        let many = in_pool(5, || mc_prices(&m, &strikes, 0.25, kind, &cfg(3)).unwrap());
        assert_eq!(one, many);
    }
}

#[test]
fn put_call_parity_without_default() {
    // same paths for both, so parity holds up to the sampling error of S_t
    let m = ModelSpec::sabr(0.2, 1.0);
    let k = [0.9, 1.1];
    let calls = mc_prices(&m, &k, 0.5, OptionKind::Call, &cfg(4)).unwrap();
    let puts = mc_prices(&m, &k, 0.5, OptionKind::Put, &cfg(4)).unwrap();
    let forward = mc_prices(&m, &[0.0], 0.5, OptionKind::Call, &cfg(4)).unwrap()[0];
    for ((c, p), k) in calls.iter().zip(&puts).zip(k) {
        let parity = c.price - p.price - (forward.price - k);
        assert!(parity.abs() < 1e-12, "{parity}");
        // puts convert to calls through S0, not the sampled forward
        let gap = (c.implied_vol.unwrap() - p.implied_vol.unwrap()).abs();
        assert!(gap < 5e-3, "{gap}");
    }
}

#[test]
fn deep_otm_put_is_the_default_leg() {
    let (lambda, k, t) = (0.2, 0.4, 0.02);
    let m = ModelSpec::sabr(0.2, 1.0).with_lambda(lambda);
    let mut c = cfg(8);
    c.paths = 200_000;
    let put = mc_prices(&m, &[k], t, OptionKind::Put, &c).unwrap()[0];
    let lead = otm_put_leading(lambda, k, t).unwrap();
    assert!(
        (put.price - lead).abs() < 3.0 * put.stderr,
        "{put:?} vs {lead}"
    );
}
