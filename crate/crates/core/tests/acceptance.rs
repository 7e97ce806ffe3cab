//! Acceptance suite: every release-gating property of the toolkit, one test
//! per criterion, each printing a PASS/FAIL line with its measurements.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.
//! Criteria with declared runtime budgets assert them (the budgets assume a
//! release-grade optimization level, which the workspace test profile sets).

use std::time::Instant;

use petersburg::closed_form::{self, shifted_threshold, truncated_expected_gain, Dyadic};
use petersburg::engine::discount::{
    doubling_game_present_value, sample_u_via_scaling, DiscountScaling,
};
use petersburg::engine::game::{play_truncated_session, sample_gain_count, sample_stopping_time};
use petersburg::engine::levy::{LevyTruncation, USampler};
use petersburg::exponents::{char_fn_u, levy_exponent_discounted, QuadratureSpec};
use petersburg::experiments::{run, ExperimentKind, RunSettings};
use petersburg::rng::par_batch;
use petersburg::statcheck::{
    empirical_cf, ks_one_sample, ks_two_sample, mean_with_ci, tail_frequency, BatchMeta,
    SampleBatch,
};

const SEED: u64 = 20210802;

fn batch(values: Vec<f64>) -> SampleBatch {
    SampleBatch::new(values, BatchMeta::default()).expect("nonempty finite batch")
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[test]
fn a01_truncated_game_fairness() {
    let started = Instant::now();
    let exact_ok = (1..=52).all(|c| truncated_expected_gain(c).unwrap() == 0.0);

    let values = par_batch(SEED, 1 << 40, 1_000_000, |rng| {
        play_truncated_session(8, rng).unwrap().net_gain() as f64
    });
    let est = mean_with_ci(&batch(values), 0.999).unwrap();
    let mc_ok = est.contains(0.0);
    let elapsed = started.elapsed().as_secs_f64();
    let time_ok = elapsed < 10.0;

    println!(
        "acceptance 01 truncated-game fairness: {} (exact gain 0 for c in 1..=52: {}; \
         mean V_c at c=8 = {:.5} in 99.9% CI [{:.5}, {:.5}]; {:.2}s)",
        verdict(exact_ok && mc_ok && time_ok),
        exact_ok,
        est.mean,
        est.ci_lo,
        est.ci_hi,
        elapsed
    );
    assert!(exact_ok, "exact fairness identity broke");
    assert!(mc_ok, "MC mean {} outside CI of 0", est.mean);
    assert!(time_ok, "took {elapsed}s, budget 10s");
}

#[test]
fn a02_exponential_limit_of_gain_counts() {
    let started = Instant::now();
    let c = 20u32;
    let scale = (-(c as f64)).exp2();
    let values = par_batch(SEED, 2 << 40, 100_000, |rng| {
        sample_gain_count(c, rng).unwrap() as f64 * scale
    });
    let ks = ks_one_sample(&batch(values), |u| if u <= 0.0 { 0.0 } else { -(-u).exp_m1() })
        .unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let ok = !ks.rejects();
    let time_ok = elapsed < 5.0;

    println!(
        "acceptance 02 exponential limit: {} (KS = {:.5} vs critical {:.5} at c=20, 1e5 draws; {:.2}s)",
        verdict(ok && time_ok),
        ks.statistic,
        ks.critical_001,
        elapsed
    );
    assert!(ok, "KS {} rejected at 0.001", ks.statistic);
    assert!(time_ok, "took {elapsed}s, budget 5s");
}

#[test]
fn a03_fast_sampler_matches_honest_sessions() {
    let n = 100_000u64;
    let mut all_ok = true;
    let mut summary = String::new();
    for (i, c) in [4u32, 8, 16].into_iter().enumerate() {
        let scale = (-(c as f64)).exp2();
        let fast = par_batch(SEED, (3 << 40) | ((2 * i as u64) << 32), n, |rng| {
            sample_gain_count(c, rng).unwrap() as f64 * scale
        });
        let honest = par_batch(SEED, (3 << 40) | ((2 * i as u64 + 1) << 32), n, |rng| {
            play_truncated_session(c, rng).unwrap().gain_count() as f64 * scale
        });
        let ks = ks_two_sample(&batch(fast), &batch(honest)).unwrap();
        all_ok &= !ks.rejects();
        summary.push_str(&format!(
            "c={c}: {:.5}<{:.5} ",
            ks.statistic, ks.critical_001
        ));
    }
    println!(
        "acceptance 03 sampler oracle equivalence: {} ({summary})",
        verdict(all_ok)
    );
    assert!(all_ok, "two-sample KS rejected: {summary}");
}

#[test]
fn a04_discounted_single_game_mean() {
    let r = 0.6f64;
    let target = 1.5f64; // r/(1-r), finite-variance regime (2r^2 < 1)
    let values = par_batch(SEED, 4 << 40, 1_000_000, |rng| {
        (2.0 * r).powi(sample_stopping_time(rng) as i32)
    });
    let est = mean_with_ci(&batch(values), 0.999).unwrap();
    let ok = (est.mean - target).abs() <= 3.0 * est.stderr;
    println!(
        "acceptance 04 discounted single-game mean: {} (mean = {:.5}, target 1.5, 3se = {:.5})",
        verdict(ok),
        est.mean,
        3.0 * est.stderr
    );
    assert!(ok, "mean {} vs 1.5 beyond 3se {}", est.mean, est.stderr);
}

#[test]
fn a05_discounted_doubling_fairness() {
    let r = 0.6f64;
    let values = par_batch(SEED, 5 << 40, 1_000_000, |rng| {
        doubling_game_present_value(sample_stopping_time(rng), r).unwrap()
    });
    let est = mean_with_ci(&batch(values), 0.999).unwrap();
    let ok = est.mean.abs() <= 3.0 * est.stderr;
    println!(
        "acceptance 05 discounted doubling fairness: {} (mean = {:.6}, 3se = {:.6})",
        verdict(ok),
        est.mean,
        3.0 * est.stderr
    );
    assert!(ok, "mean {} beyond 3se {}", est.mean, est.stderr);
}

#[test]
fn a06_quasi_semi_stability_of_g() {
    let started = Instant::now();
    let quad = QuadratureSpec::default();
    let mut worst = 0.0f64;
    for z in [0.25, 0.5, 1.0, 2.0] {
        let g = levy_exponent_discounted(z, &quad).unwrap();
        for m in 1..=8 {
            let scaled = levy_exponent_discounted(z * (-(m as f64)).exp2(), &quad).unwrap();
            let residual = ((m as f64).exp2() * scaled
                - g
                - petersburg::Complex64::new(0.0, z * m as f64))
            .norm()
                / (1.0 + g.norm());
            worst = worst.max(residual);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let ok = worst < 1e-8;
    let time_ok = elapsed < 1.0;
    println!(
        "acceptance 06 quasi-semi-stability: {} (max residual {:.3e} < 1e-8; {:.3}s)",
        verdict(ok && time_ok),
        worst,
        elapsed
    );
    assert!(ok, "residual {worst}");
    assert!(time_ok, "took {elapsed}s, budget 1s");
}

#[test]
fn a07_characteristic_function_match() {
    let started = Instant::now();
    let a = 1.0;
    let quad = QuadratureSpec::default();
    let sampler = USampler::new(a, LevyTruncation::default()).unwrap();
    let values = batch(par_batch(SEED, 7 << 40, 1_000_000, |rng| sampler.sample(rng)));

    let mut all_ok = true;
    let mut summary = String::new();
    for z in [0.1, 0.5, 1.0] {
        let target = char_fn_u(z, a, &quad).unwrap();
        let ecf = empirical_cf(&values, z).unwrap();
        let ok_re = (ecf.value.re - target.re).abs() <= 3.0 * ecf.stderr_re;
        let ok_im = (ecf.value.im - target.im).abs() <= 3.0 * ecf.stderr_im;
        all_ok &= ok_re && ok_im;
        summary.push_str(&format!(
            "z={z}: dRe {:.2e} (3se {:.2e}), dIm {:.2e} (3se {:.2e}); ",
            ecf.value.re - target.re,
            3.0 * ecf.stderr_re,
            ecf.value.im - target.im,
            3.0 * ecf.stderr_im
        ));
    }
    let elapsed = started.elapsed().as_secs_f64();
    let time_ok = elapsed < 60.0;
    println!(
        "acceptance 07 characteristic-function match: {} ({summary}{:.1}s)",
        verdict(all_ok && time_ok),
        elapsed
    );
    assert!(all_ok, "{summary}");
    assert!(time_ok, "took {elapsed}s, budget 60s");
}

#[test]
fn a08_dyadic_tail_of_u() {
    let started = Instant::now();
    let a = 1.0;
    let target = 2.0 * std::f64::consts::LN_2 / (2.0 * a); // = ln 2 at x = 1
    let sampler = USampler::new(a, LevyTruncation::default()).unwrap();
    let values = batch(par_batch(SEED, 8 << 40, 10_000_000, |rng| sampler.sample(rng)));

    let mut all_ok = true;
    let mut summary = String::new();
    for m in [4i32, 6, 8] {
        let d = Dyadic { m, x: 1.0 };
        let est = tail_frequency(&values, shifted_threshold(&d, a), 0.999).unwrap();
        let scaled = (m as f64).exp2() * est.p_hat;
        let ok = (scaled - target).abs() <= 0.15 * target;
        all_ok &= ok;
        summary.push_str(&format!(
            "m={m}: 2^m p = {:.4} (target {:.4} +-15%); ",
            scaled, target
        ));
    }
    let elapsed = started.elapsed().as_secs_f64();
    let time_ok = elapsed < 300.0;
    println!(
        "acceptance 08 dyadic tail: {} ({summary}{:.1}s)",
        verdict(all_ok && time_ok),
        elapsed
    );
    assert!(all_ok, "{summary}");
    assert!(time_ok, "took {elapsed}s, budget 300s");
}

#[test]
fn a09_cross_sampler_agreement() {
    let started = Instant::now();
    let a = 1.0;
    let draws = 20_000u64;
    let epsilon = 1e-12;
    let sampler = USampler::new(a, LevyTruncation::default()).unwrap();
    let levy = batch(par_batch(SEED, 9 << 40, draws, |rng| sampler.sample(rng)));

    let mut stats = Vec::new();
    for (i, n) in [8u32, 10, 12].into_iter().enumerate() {
        let scaling = DiscountScaling::new(a, n).unwrap();
        let values = par_batch(SEED, (9 << 40) | ((i as u64 + 1) << 32), draws, |rng| {
            sample_u_via_scaling(&scaling, epsilon, rng).unwrap()
        });
        let ks = ks_two_sample(&batch(values), &levy).unwrap();
        stats.push((n, ks.statistic));
    }
    let monotone = stats.windows(2).all(|w| w[1].1 <= w[0].1);
    let last = stats.last().unwrap().1;
    let ok = monotone && last < 0.03;
    let elapsed = started.elapsed().as_secs_f64();
    let time_ok = elapsed < 300.0;
    println!(
        "acceptance 09 cross-sampler agreement: {} (KS over n: {:?}; final {:.4} < 0.03, monotone {}; {:.1}s)",
        verdict(ok && time_ok),
        stats,
        last,
        monotone,
        elapsed
    );
    assert!(ok, "stats {stats:?}");
    assert!(time_ok, "took {elapsed}s, budget 300s");
}

#[test]
fn a10_ruin_formula_adjudication() {
    let scaling = DiscountScaling::new(1.0, 13).unwrap();
    let est = closed_form::ruin_probability_scaled(&scaling).unwrap();
    assert_eq!(est.threshold, 4096.0);

    let sampler = USampler::new(scaling.a(), LevyTruncation::default()).unwrap();
    let values = batch(par_batch(SEED, 10 << 40, 10_000_000, |rng| sampler.sample(rng)));
    let tail = tail_frequency(&values, est.threshold, 0.999).unwrap();

    let matches_rate = (tail.p_hat / est.rate_form - 1.0).abs() <= 0.15;
    let matches_tail = (tail.p_hat / est.tail_form - 1.0).abs() <= 0.15;
    let excluded = [est.rate_form, est.tail_form]
        .iter()
        .filter(|f| **f < tail.ci_lo || **f > tail.ci_hi)
        .count();
    let ok = excluded >= 1;

    println!(
        "acceptance 10 ruin adjudication: {} (P(U>4096) = {:.4e}, CI [{:.4e}, {:.4e}]; \
         rate form {:.4e} matched: {}; tail form {:.4e} matched: {}; {} form(s) excluded)",
        verdict(ok),
        tail.p_hat,
        tail.ci_lo,
        tail.ci_hi,
        est.rate_form,
        matches_rate,
        est.tail_form,
        matches_tail,
        excluded
    );
    assert!(
        ok,
        "CI [{}, {}] excludes neither candidate",
        tail.ci_lo, tail.ci_hi
    );
}

#[test]
fn a11_full_suite_determinism() {
    let settings = RunSettings {
        seed: SEED,
        samples: None,
        workers: Some(2),
        params: Default::default(),
    };
    let first = run(ExperimentKind::All, &settings).unwrap();
    let second = run(ExperimentKind::All, &settings).unwrap();
    let ok = first.to_csv() == second.to_csv() && first.to_json() == second.to_json();
    println!(
        "acceptance 11 report determinism: {} (two `all` runs, {} metric rows, {} bytes CSV, suite all_pass = {})",
        verdict(ok),
        first.rows.len(),
        first.to_csv().len(),
        first.all_pass()
    );
    assert!(ok, "report bodies differ between identical runs");
    assert!(
        first.all_pass(),
        "the aggregated suite reports failures:\n{}",
        first
            .rows
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("{}/{} = {}", r.experiment, r.metric, r.value))
            .collect::<Vec<_>>()
            .join("\n")
    );
}
