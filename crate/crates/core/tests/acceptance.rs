//! Acceptance suite: one test per release criterion, each printing a
//! pass/fail line. Every tolerance is pinned here, not configurable.

use chase_escape::catalan::{enumerate_dyck_paths, path_weight, weighted_catalan_table};
use chase_escape::contfrac::{critical_lambda, estimate_m, evaluate_f, DEFAULT_MAX_DEPTH};
use chase_escape::jumpchain::{
    comparison_bound_check, mc_renewal_frequencies, reach_oracle, reach_table,
};
use chase_escape::numeric::Scalar;
use chase_escape::rates::{check_hypotheses, RateProfile, StepWeights};
use chase_escape::treesim::{
    expected_blue_estimate, simulate_tree_batch, truncated_series, TreeSimConfig,
};
use num::rational::BigRational;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn reference_profiles() -> Vec<RateProfile> {
    vec![
        RateProfile::constant(1.0, 0.0).with_name("no-death"),
        RateProfile::constant(1.0, 1.0).with_name("unit"),
        RateProfile::new(vec![2.0, 1.0], 0.5, vec![0.3], 1.0)
            .unwrap()
            .with_name("mixed-head"),
    ]
}

fn report(criterion: &str, detail: &str) {
    println!("[PASS] {criterion}: {detail}");
}

/// Criterion 1: the Catalan DP equals brute-force Dyck enumeration exactly
/// in rational arithmetic for k <= 8 on all reference profiles.
#[test]
fn criterion_1_catalan_oracle_equivalence() {
    for profile in reference_profiles() {
        let weights: StepWeights<BigRational> = StepWeights::new(&profile);
        let table = weighted_catalan_table(&weights, 8).unwrap();
        for k in 0..=8usize {
            let brute = enumerate_dyck_paths(k)
                .unwrap()
                .map(|path| path_weight(&path, &weights))
                .fold(<BigRational as Scalar>::zero(), |acc, x| acc.add(&x));
            assert_eq!(
                table.value(k),
                &brute,
                "profile {:?}, k = {k}",
                profile.name
            );
        }
    }
    report(
        "criterion 1 (oracle equivalence)",
        "DP == enumeration exactly for k <= 8 on 3 profiles",
    );
}

/// Criterion 2: Monte Carlo renewal frequencies match C_k within 3 standard
/// errors for k in 1..=6 at N = 10^6 on all reference profiles.
#[test]
fn criterion_2_renewal_identity_monte_carlo() {
    let n: u64 = 1_000_000;
    let seed = 0x5EED_0002;
    let mut worst_z: f64 = 0.0;
    for profile in reference_profiles() {
        let weights: StepWeights<f64> = StepWeights::new(&profile);
        let exact = weighted_catalan_table(&weights, 6).unwrap();
        let mc = mc_renewal_frequencies(&profile, 6, n, seed);
        for k in 1..=6usize {
            let p = *exact.value(k);
            let stderr = (p * (1.0 - p) / n as f64).sqrt();
            let diff = (mc.frequency(k) - p).abs();
            assert!(
                diff <= 3.0 * stderr,
                "profile {:?}, k = {k}: |{} - {p}| > 3·{stderr}",
                profile.name,
                mc.frequency(k)
            );
            worst_z = worst_z.max(diff / stderr);
        }
    }
    report(
        "criterion 2 (renewal identity)",
        &format!("N = 10^6, k <= 6, 3 profiles, worst |z| = {worst_z:.2}"),
    );
}

/// Criterion 3: for constant λ and ρ ≡ 0, the critical λ solves
/// (1+λ)² = 4λd, giving 3 - 2√2 at d = 2 and 5 - 2√6 at d = 3, within 1e-6.
#[test]
fn criterion_3_closed_form_phase_boundary() {
    let base = RateProfile::constant(1.0, 0.0);
    let crit2 = critical_lambda(&base, 2, 0.01, 1.0, 1e-6).unwrap();
    let exact2 = 3.0 - 2.0 * 2.0f64.sqrt();
    assert!(
        (crit2.t_star - exact2).abs() <= 1e-6,
        "d = 2: {} vs {exact2}",
        crit2.t_star
    );
    let crit3 = critical_lambda(&base, 3, 0.01, 1.0, 1e-6).unwrap();
    let exact3 = 5.0 - 2.0 * 6.0f64.sqrt();
    assert!(
        (crit3.t_star - exact3).abs() <= 1e-6,
        "d = 3: {} vs {exact3}",
        crit3.t_star
    );
    report(
        "criterion 3 (closed-form boundary)",
        &format!(
            "t*(2) = {:.9} (err {:.1e}), t*(3) = {:.9} (err {:.1e})",
            crit2.t_star,
            (crit2.t_star - exact2).abs(),
            crit3.t_star,
            (crit3.t_star - exact3).abs()
        ),
    );
}

/// Criterion 4: the continued fraction agrees with the truncated power
/// series to 1e-9 at z = M/2, with the truncation order chosen so the
/// geometric tail bound sits below 1e-10.
#[test]
fn criterion_4_generating_function_consistency() {
    let k_cut = 96usize;
    for profile in reference_profiles() {
        let weights: StepWeights<f64> = StepWeights::new(&profile);
        let m = estimate_m(&weights, 1e-7);
        let m_val = m.radius.as_f64();
        assert!(m_val.is_finite(), "reference profiles have finite radius");
        let z = 0.5 * m_val;

        let table = weighted_catalan_table(&weights, k_cut).unwrap();
        let partial: f64 = table
            .values()
            .iter()
            .enumerate()
            .map(|(k, c)| c * z.powi(k as i32))
            .sum();
        // Geometric tail bound with ratio z/M = 1/2.
        let coeff_scale = table
            .values()
            .iter()
            .enumerate()
            .map(|(k, c)| c * m_val.powi(k as i32))
            .fold(0.0f64, f64::max);
        let tail_bound = coeff_scale * 0.5f64.powi(k_cut as i32) * 2.0;
        assert!(
            tail_bound < 1e-10,
            "truncation order too small: bound {tail_bound}"
        );

        let value = evaluate_f(&weights, z, 1e-12, DEFAULT_MAX_DEPTH)
            .converged_value()
            .expect("z = M/2 converges");
        let gap = (value - partial).abs();
        assert!(
            gap <= 1e-9,
            "profile {:?}: |f - series| = {gap} at z = {z}",
            profile.name
        );
    }
    report(
        "criterion 4 (generating function)",
        "|f(M/2) - partial series| <= 1e-9 on 3 profiles (tail bound < 1e-10)",
    );
}

/// Criterion 5: the reach-probability DP matches the absorbing-chain linear
/// solve to 1e-10 relative for k <= 5 on all reference profiles.
#[test]
fn criterion_5_reach_probability_oracle() {
    let mut worst: f64 = 0.0;
    for profile in reference_profiles() {
        let weights: StepWeights<f64> = StepWeights::new(&profile);
        let table = reach_table(&weights, 5);
        for k in 1..=5usize {
            let oracle = reach_oracle(&weights, k as u64);
            let rel = (table.p_reach[k] - oracle).abs() / oracle;
            assert!(
                rel <= 1e-10,
                "profile {:?}, k = {k}: relative gap {rel}",
                profile.name
            );
            worst = worst.max(rel);
        }
    }
    report(
        "criterion 5 (reach oracle)",
        &format!("decomposition DP vs linear solve, worst relative gap {worst:.2e}"),
    );
}

/// Criterion 6: for λ ≡ 1, ρ ≡ 1 the ratios P(Y >= k)/(k^{1+m} C_k) stay
/// below the computed constant for k <= 30, and C_k <= P(Y >= k) throughout.
#[test]
fn criterion_6_polynomial_comparison_bound() {
    let profile = RateProfile::constant(1.0, 1.0);
    let hypotheses = check_hypotheses(&profile, 200, 100);
    assert!(hypotheses.all_consistent());
    let report_data = comparison_bound_check(&profile, 30, &hypotheses);
    assert!(
        report_data.all_within_c0,
        "ratios exceed c0 = {}: {:?}",
        report_data.c0,
        report_data
            .rows
            .iter()
            .filter(|r| !r.within_c0)
            .collect::<Vec<_>>()
    );
    assert!(report_data.all_sandwich_ok, "C_k <= P(Y >= k) violated");
    assert!(report_data.all_lower_ok, "lower renewal bound violated");
    let worst = report_data
        .rows
        .iter()
        .map(|r| r.ratio)
        .fold(0.0f64, f64::max);
    report(
        "criterion 6 (comparison bound)",
        &format!(
            "c0 = {:.3}, worst ratio {:.3}, sandwich holds for k <= 30",
            report_data.c0, worst
        ),
    );
}

/// Criterion 7: subcritical tree mean matches the truncated series within
/// 3 standard errors at 10^5 runs; the supercritical series grows by more
/// than a factor of 2 per 5 levels of cap.
#[test]
fn criterion_7_tree_series_agreement() {
    let subcritical = RateProfile::constant(0.05, 0.0);
    let cfg = TreeSimConfig::new(2, 20);
    let estimate = expected_blue_estimate(&subcritical, cfg, 100_000, 0x5EED_0007);
    let slack = 3.0 * estimate.mc_stderr;
    assert!(
        estimate.gap.abs() <= slack,
        "gap {} exceeds 3·stderr {} (mean {}, series {})",
        estimate.gap,
        slack,
        estimate.mc_mean,
        estimate.series.value
    );

    let supercritical = RateProfile::constant(1.0, 0.0);
    let s10 = truncated_series(&supercritical, 2, 10).value;
    let s15 = truncated_series(&supercritical, 2, 15).value;
    let s20 = truncated_series(&supercritical, 2, 20).value;
    assert!(s15 > 2.0 * s10 && s20 > 2.0 * s15, "{s10}, {s15}, {s20}");

    report(
        "criterion 7 (tree/series agreement)",
        &format!(
            "subcritical gap {:.5} within 3·stderr {:.5}; supercritical series {:.3e} -> {:.3e} -> {:.3e}",
            estimate.gap, slack, s10, s15, s20
        ),
    );
}

/// Criterion 8: at d = 1 the tree simulator reproduces the exact reach
/// distribution (chi-squared over k <= 6, 10^5 runs, p > 0.01 on at least
/// 19 of 20 seeded repetitions).
#[test]
fn criterion_8_d1_marginal_equivalence() {
    let profile = RateProfile::constant(1.0, 1.0);
    let weights: StepWeights<f64> = StepWeights::new(&profile);
    let reach = reach_table(&weights, 7);
    // P(Y = k) for k = 0..=6 plus the tail P(Y >= 7).
    let mut probs: Vec<f64> = (0..=6)
        .map(|k| reach.p_reach[k] - reach.p_reach[k + 1])
        .collect();
    probs.push(reach.p_reach[7]);

    let runs = 100_000u64;
    let cfg = TreeSimConfig::new(1, 8);
    let mut passes = 0;
    let mut p_values = Vec::new();
    for rep in 0..20u64 {
        let outcomes = simulate_tree_batch(&profile, cfg, 0x5EED_0008 + rep, runs);
        let mut observed = [0u64; 8];
        for outcome in &outcomes {
            let y = outcome.line_reach() as usize;
            observed[y.min(7)] += 1;
        }
        // Merge the sparse tail so every expected count is at least 5.
        let mut bins: Vec<(f64, f64)> = observed
            .iter()
            .zip(&probs)
            .map(|(&o, &p)| (o as f64, p * runs as f64))
            .collect();
        while bins.len() > 2 && bins.last().unwrap().1 < 5.0 {
            let (o, e) = bins.pop().unwrap();
            let last = bins.last_mut().unwrap();
            last.0 += o;
            last.1 += e;
        }
        let stat: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
        let dof = (bins.len() - 1) as f64;
        let p_value = 1.0 - ChiSquared::new(dof).unwrap().cdf(stat);
        p_values.push(p_value);
        if p_value > 0.01 {
            passes += 1;
        }
    }
    assert!(
        passes >= 19,
        "only {passes}/20 repetitions with p > 0.01: {p_values:?}"
    );
    report(
        "criterion 8 (d = 1 equivalence)",
        &format!("chi-squared p > 0.01 on {passes}/20 repetitions of 10^5 runs"),
    );
}
