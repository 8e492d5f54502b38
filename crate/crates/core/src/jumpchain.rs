//! The half-line process through its embedded gap chain.
//!
//! On the nonnegative integers with blue at 0 and red at 1, let the gap be
//! the distance between the rightmost red and rightmost blue sites. Between
//! state changes the gap performs a Markov chain with, at gap `j ≥ 1`,
//!
//! ```text
//! p_up   = λ_j / (1 + λ_j + D_j)   (red advances)     = u(j-1)
//! p_down = 1   / (1 + λ_j + D_j)   (blue advances)    = v(j-2)
//! p_kill = D_j / (1 + λ_j + D_j)   (some red site dies)
//! ```
//!
//! The chain absorbs at gap 0 (blue caught the frontier, or a death occurred;
//! either way no further renewal is possible). A renewal at `k` is a return
//! to gap 1 after `2k` living steps, and its probability is exactly the
//! weighted Catalan number `C_k`.
//!
//! The reach probabilities `P(Y ≥ k)` (blue eventually advances `k` times)
//! decompose over the gap value `ℓ` when red first arrives at `k`:
//! `P(Y ≥ k) = Σ_{ℓ=2}^{k} q_ℓ` with `q_ℓ = σ(ℓ)·Σ_γ p(γ)` summing over
//! living chain paths of length `2k-ℓ-1` from gap 1 that end with an up-step
//! into `ℓ`, and `σ(ℓ) = Π_{n=1}^{ℓ} 1/(1+D_n)` the probability that blue
//! then covers the remaining `ℓ` sites before any of them dies. An absorbing
//! Markov-chain solve over the full `(blue, red)` state space provides an
//! independent oracle for the same quantity.

use crate::catalan::weighted_catalan_table;
use crate::numeric::Scalar;
use crate::rates::{HypothesesReport, RateProfile, StepWeights};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exact one-step distribution of the gap chain at gap `j ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDistribution<T: Scalar> {
    pub up: T,
    pub down: T,
    pub kill: T,
}

pub fn step_distribution<T: Scalar>(weights: &StepWeights<T>, j: u64) -> StepDistribution<T> {
    assert!(j >= 1, "the gap chain lives on j >= 1");
    let total = weights.total_rate(j);
    StepDistribution {
        up: weights.lambda(j).div(&total),
        down: T::one().div(&total),
        kill: weights.cumulative_death(j).div(&total),
    }
}

/// Trajectory summary of one seeded gap-chain run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JumpChainSummary {
    /// Every `k ≥ 1` at which a renewal occurred (return to gap 1, living).
    pub renewals: Vec<u64>,
    /// A red site died (absorption by kill).
    pub killed: bool,
    /// Blue caught the red frontier (absorption by gap 0 via a down-step).
    pub caught: bool,
    /// Rightmost red position when the run stopped.
    pub frontier: u64,
    /// Number of blue advances when the run stopped.
    pub blue: u64,
    pub steps: u64,
    /// The frontier reached `k_target`.
    pub reached_target: bool,
    /// Stopped by the step budget rather than absorption.
    pub exhausted: bool,
}

/// Simulates the gap chain from gap 1 until absorption, until blue passes
/// `k_target` (no renewal at `k ≤ k_target` can happen afterwards), or until
/// `max_steps`. Identical `(weights, rng state)` reproduce the trajectory.
pub fn simulate_jump_chain(
    weights: &StepWeights<f64>,
    rng: &mut impl Rng,
    max_steps: u64,
    k_target: u64,
) -> JumpChainSummary {
    let mut gap: u64 = 1;
    let mut ups: u64 = 0;
    let mut downs: u64 = 0;
    let mut steps: u64 = 0;
    let mut renewals = Vec::new();
    let mut killed = false;
    let mut caught = false;
    let mut exhausted = false;

    loop {
        if downs > k_target {
            break;
        }
        if steps >= max_steps {
            exhausted = true;
            break;
        }
        let dist = step_distribution(weights, gap);
        let r: f64 = rng.gen();
        steps += 1;
        if r < dist.up {
            gap += 1;
            ups += 1;
        } else if r < dist.up + dist.down {
            gap -= 1;
            downs += 1;
            if gap == 0 {
                caught = true;
                break;
            }
            if gap == 1 {
                renewals.push(downs);
            }
        } else {
            killed = true;
            break;
        }
    }

    JumpChainSummary {
        renewals,
        killed,
        caught,
        frontier: 1 + ups,
        blue: downs,
        steps,
        reached_target: 1 + ups >= k_target,
        exhausted,
    }
}

/// Empirical renewal frequencies with exact-rate standard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RenewalFrequencies {
    pub seed: u64,
    pub runs: u64,
    /// `counts[k]` = number of runs that renewed at `k`, `k = 0..=k_max`
    /// (`k = 0` counts every run: the initial state is a renewal).
    pub counts: Vec<u64>,
}

impl RenewalFrequencies {
    pub fn frequency(&self, k: usize) -> f64 {
        self.counts[k] as f64 / self.runs as f64
    }

    /// Binomial standard error with the empirical frequency.
    pub fn stderr(&self, k: usize) -> f64 {
        let f = self.frequency(k);
        (f * (1.0 - f) / self.runs as f64).sqrt()
    }
}

const MC_BATCH: u64 = 1 << 13;
const JUMP_MAX_STEPS: u64 = 1 << 20;

/// Runs `n` seeded gap chains in parallel batches and tallies renewals for
/// `k ≤ k_max`. Batch `i` draws from stream `i` of the master seed, so the
/// result does not depend on the number of worker threads.
pub fn mc_renewal_frequencies(
    profile: &RateProfile,
    k_max: u64,
    runs: u64,
    seed: u64,
) -> RenewalFrequencies {
    let weights: StepWeights<f64> = StepWeights::new(profile);
    let batches: u64 = runs.div_ceil(MC_BATCH);
    let counts = (0..batches)
        .into_par_iter()
        .map(|batch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(batch);
            let lo = batch * MC_BATCH;
            let hi = (lo + MC_BATCH).min(runs);
            let mut counts = vec![0u64; k_max as usize + 1];
            for _ in lo..hi {
                counts[0] += 1;
                let summary = simulate_jump_chain(&weights, &mut rng, JUMP_MAX_STEPS, k_max);
                for &k in &summary.renewals {
                    if k <= k_max {
                        counts[k as usize] += 1;
                    }
                }
            }
            counts
        })
        .reduce(
            || vec![0u64; k_max as usize + 1],
            |mut acc, item| {
                for (a, b) in acc.iter_mut().zip(item) {
                    *a += b;
                }
                acc
            },
        );
    RenewalFrequencies { seed, runs, counts }
}

/// `P(renewal at k) = C_k`, exposed as a named contract.
pub fn renewal_probability<T: Scalar>(weights: &StepWeights<T>, k: usize) -> T {
    weighted_catalan_table(weights, k)
        .expect("renewal probabilities stay in [0,1]; no underflow at these indices")
        .value(k)
        .clone()
}

/// `σ(ℓ) = Π_{n=1}^{ℓ} 1/(1 + D_n)`; the empty product is 1.
pub fn sigma_of_ell<T: Scalar>(weights: &StepWeights<T>, ell: u64) -> T {
    let mut prod = T::one();
    for n in 1..=ell {
        let denom = T::one().add(&weights.cumulative_death(n));
        prod = prod.div(&denom);
    }
    prod
}

/// Exact reach probabilities and their decomposition.
#[derive(Debug, Clone)]
pub struct ReachTable<T: Scalar> {
    /// `p_reach[k] = P(Y ≥ k)` for `k = 0..=k_max`.
    pub p_reach: Vec<T>,
    /// `q[k]` lists `(ℓ, q_ℓ)` for `k ≥ 2`.
    pub q: Vec<Vec<(u64, T)>>,
    /// `sigma[ℓ]` for `ℓ = 0..=k_max`.
    pub sigma: Vec<T>,
}

impl<T: Scalar> ReachTable<T> {
    pub fn p_eq(&self, k: usize) -> T {
        self.p_reach[k].sub(&self.p_reach[k + 1])
    }
}

/// Forward DP over living chain paths. `W(n, h)` is the probability that the
/// living gap chain moves from 1 to `h` in `n` steps; then
/// `q_ℓ(k) = W(2k-ℓ-2, ℓ-1)·u(ℓ-2)·σ(ℓ)`. The case `k = 1` is the direct
/// competing-exponentials value `P(Y ≥ 1) = 1/(1+D_1)` (blue's rate-1 catch
/// against the total death rate at gap 1).
pub fn reach_table<T: Scalar>(weights: &StepWeights<T>, k_max: usize) -> ReachTable<T> {
    let sigma: Vec<T> = (0..=k_max as u64)
        .map(|l| sigma_of_ell(weights, l))
        .collect();
    let mut p_reach = Vec::with_capacity(k_max + 1);
    let mut q: Vec<Vec<(u64, T)>> = vec![Vec::new(); k_max + 1];
    p_reach.push(T::one());
    if k_max == 0 {
        return ReachTable { p_reach, q, sigma };
    }
    // P(Y >= 1): blue advances before any death at gap 1.
    p_reach.push(T::one().div(&T::one().add(&weights.cumulative_death(1))));

    // Living paths never touch 0, so heights run over 1..=h_cap.
    let h_cap = k_max + 1;
    let max_n = if k_max >= 2 { 2 * k_max - 4 } else { 0 };
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(max_n + 1);
    let mut first = vec![T::zero(); h_cap + 1];
    first[1] = T::one();
    rows.push(first);
    for n in 0..max_n {
        let mut next = vec![T::zero(); h_cap + 1];
        for h in 1..=h_cap {
            let w = &rows[n][h];
            if w.is_zero() {
                continue;
            }
            if h < h_cap {
                // p_{h,h+1} = u(h-1)
                let up = weights.u(h as u64 - 1);
                if !up.is_zero() {
                    next[h + 1] = next[h + 1].add(&w.mul(&up));
                }
            }
            if h >= 2 {
                // p_{h,h-1} = v(h-2)
                let down = weights.v(h as i64 - 2);
                next[h - 1] = next[h - 1].add(&w.mul(&down));
            }
        }
        rows.push(next);
    }

    for (k, slot) in q.iter_mut().enumerate().skip(2) {
        let mut total = T::zero();
        let mut parts = Vec::with_capacity(k - 1);
        for ell in 2..=k {
            let n = 2 * k - ell - 2;
            let prefix = &rows[n][ell - 1];
            let q_ell = prefix.mul(&weights.u(ell as u64 - 2)).mul(&sigma[ell]);
            total = total.add(&q_ell);
            parts.push((ell as u64, q_ell));
        }
        *slot = parts;
        p_reach.push(total);
    }

    ReachTable { p_reach, q, sigma }
}

/// `P(Y ≥ k)` by the decomposition DP.
pub fn reach_probability<T: Scalar>(weights: &StepWeights<T>, k: usize) -> T {
    reach_table(weights, k).p_reach[k].clone()
}

/// Independent oracle: absorbing-chain hitting probability over the full
/// `(blue, red)` state space with red frozen at `k` (its advances beyond `k`
/// cannot influence whether blue reaches `k`), solved as a dense linear
/// system. Definition-level; shares no code with the decomposition DP.
pub fn reach_oracle(weights: &StepWeights<f64>, k: u64) -> f64 {
    assert!(k >= 1);
    // States (b, r) with 0 <= b < r <= k, death-free so far.
    let index = |b: u64, r: u64| -> usize {
        // Row-major over b, with r ranging b+1..=k.
        let b = b as usize;
        let k = k as usize;
        let before: usize = (0..b).map(|bb| k - bb).sum();
        before + (r as usize - b - 1)
    };
    let n_states: usize = (0..k).map(|b| (k - b) as usize).sum();
    let mut matrix = vec![0.0f64; n_states * n_states];
    let mut rhs = vec![0.0f64; n_states];

    for b in 0..k {
        for r in b + 1..=k {
            let row = index(b, r);
            matrix[row * n_states + row] = 1.0;
            let gap = r - b;
            let lambda = if r < k { weights.lambda(gap) } else { 0.0 };
            let death = weights.cumulative_death(gap);
            let total = 1.0 + lambda + death;

            // Blue advances.
            let p_blue = 1.0 / total;
            if b + 1 == k {
                rhs[row] += p_blue;
            } else if b + 1 == r {
                // Red extinct below k: failure, contributes nothing.
            } else {
                matrix[row * n_states + index(b + 1, r)] -= p_blue;
            }
            // Red advances.
            if r < k && lambda > 0.0 {
                matrix[row * n_states + index(b, r + 1)] -= lambda / total;
            }
            // Any death is failure: no transition.
        }
    }

    solve_dense(&mut matrix, &mut rhs, n_states);
    rhs[index(0, 1)]
}

/// Gaussian elimination with partial pivoting; `rhs` becomes the solution.
fn solve_dense(matrix: &mut [f64], rhs: &mut [f64], n: usize) {
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if matrix[row * n + col].abs() > matrix[pivot * n + col].abs() {
                pivot = row;
            }
        }
        assert!(
            matrix[pivot * n + col].abs() > 1e-300,
            "singular hitting-probability system"
        );
        if pivot != col {
            for j in 0..n {
                matrix.swap(col * n + j, pivot * n + j);
            }
            rhs.swap(col, pivot);
        }
        let diag = matrix[col * n + col];
        for row in col + 1..n {
            let factor = matrix[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                matrix[row * n + j] -= factor * matrix[col * n + j];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    for col in (0..n).rev() {
        let mut acc = rhs[col];
        for j in col + 1..n {
            acc -= matrix[col * n + j] * rhs[j];
        }
        rhs[col] = acc / matrix[col * n + col];
    }
}

/// One row of the comparison-bound report.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub k: u64,
    pub c_k: f64,
    pub p_reach: f64,
    pub p_eq: f64,
    /// `P(Y ≥ k) / (k^{1+m}·C_k)`.
    pub ratio: f64,
    pub within_c0: bool,
    /// `C_{k-1}/(1 + λ_1 + ρ_1) ≤ P(Y = k)`.
    pub lower_ok: bool,
    /// `C_k ≤ P(Y ≥ k)`.
    pub sandwich_ok: bool,
}

/// Report for the polynomial comparison `P(Y ≥ k) ≤ c₀·k^{1+m}·C_k`.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub c: f64,
    pub m: f64,
    /// Path-comparison constant resolved at `ℓ = 2`, where the
    /// `(1+D_ℓ)(1+D_{ℓ-1})` denominator is smallest.
    pub c0_path: f64,
    /// Full constant: `c0_path` times the factor converting the `ℓ = 2`
    /// contribution into a renewal probability,
    /// `(1+λ_1+D_1)(1+λ_2+D_2)²/λ_2`.
    pub c0: f64,
    /// Exact `ℓ`-dependent comparison factor, for reference.
    pub per_ell_factor: Vec<(u64, f64)>,
    pub hypotheses_consistent: bool,
    pub rows: Vec<ComparisonRow>,
    pub all_within_c0: bool,
    pub all_lower_ok: bool,
    pub all_sandwich_ok: bool,
}

/// Checks the comparison between reach and renewal probabilities with the
/// fitted `(c, m)` envelope. Violated hypotheses are recorded in the report
/// (the bound is not expected to hold then); ratios are emitted either way.
pub fn comparison_bound_check(
    profile: &RateProfile,
    k_max: usize,
    hypotheses: &HypothesesReport,
) -> ComparisonReport {
    assert!(k_max >= 2);
    let weights: StepWeights<f64> = StepWeights::new(profile);
    let c = hypotheses.fit_c;
    let m = hypotheses.fit_m;

    let lam1 = profile.lambda(1);
    let lam2 = profile.lambda(2);
    let d1 = weights.cumulative_death(1);
    let d2 = weights.cumulative_death(2);
    let numer = (1.0 + d1 + lam1) * (1.0 + d2 + lam2);
    let c0_path = c * numer / ((1.0 + d2) * (1.0 + d1));
    let conversion = if lam2 > 0.0 {
        (1.0 + lam1 + d1) * (1.0 + lam2 + d2) * (1.0 + lam2 + d2) / lam2
    } else {
        f64::INFINITY
    };
    let c0 = c0_path * conversion;

    let per_ell_factor: Vec<(u64, f64)> = (2..=k_max as u64)
        .map(|ell| {
            let de = weights.cumulative_death(ell);
            let de1 = weights.cumulative_death(ell - 1);
            (ell, numer / ((1.0 + de) * (1.0 + de1)))
        })
        .collect();

    let reach = reach_table(&weights, k_max + 1);
    let catalan = weighted_catalan_table(&weights, k_max)
        .expect("comparison indices are small enough for direct floating DP");

    let mut rows = Vec::with_capacity(k_max - 1);
    for k in 2..=k_max {
        let c_k = *catalan.value(k);
        let p_reach = reach.p_reach[k];
        let p_eq = reach.p_eq(k);
        let scale = (k as f64).powf(1.0 + m);
        let ratio = if c_k > 0.0 {
            p_reach / (scale * c_k)
        } else if p_reach == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        let lower = *catalan.value(k - 1) / (1.0 + lam1 + profile.rho(1));
        rows.push(ComparisonRow {
            k: k as u64,
            c_k,
            p_reach,
            p_eq,
            ratio,
            within_c0: ratio <= c0,
            lower_ok: lower <= p_eq * (1.0 + 1e-12) + 1e-300,
            sandwich_ok: c_k <= p_reach * (1.0 + 1e-12),
        });
    }

    ComparisonReport {
        c,
        m,
        c0_path,
        c0,
        per_ell_factor,
        hypotheses_consistent: hypotheses.all_consistent(),
        all_within_c0: rows.iter().all(|r| r.within_c0),
        all_lower_ok: rows.iter().all(|r| r.lower_ok),
        all_sandwich_ok: rows.iter().all(|r| r.sandwich_ok),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::check_hypotheses;
    use num::rational::BigRational;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn rational(p: &RateProfile) -> StepWeights<BigRational> {
        StepWeights::new(p)
    }

    fn floating(p: &RateProfile) -> StepWeights<f64> {
        StepWeights::new(p)
    }

    #[test]
    fn step_distribution_hand_values() {
        let p = RateProfile::constant(1.0, 0.0);
        let d = step_distribution(&rational(&p), 3);
        assert_eq!(d.up, q(1, 2));
        assert_eq!(d.down, q(1, 2));
        assert_eq!(d.kill, q(0, 1));

        let p = RateProfile::constant(0.0, 0.0);
        let d = step_distribution(&rational(&p), 1);
        assert_eq!(d.up, q(0, 1));
        assert_eq!(d.down, q(1, 1));

        let p = RateProfile::constant(1.0, 1.0);
        let d = step_distribution(&rational(&p), 2);
        assert_eq!(d.up, q(1, 4));
        assert_eq!(d.down, q(1, 4));
        assert_eq!(d.kill, q(1, 2));
    }

    #[test]
    fn step_distribution_sums_to_one_and_matches_weights() {
        let p = RateProfile::new(vec![2.0, 1.0], 0.5, vec![0.3], 1.0).unwrap();
        let w = rational(&p);
        for j in 1..=12u64 {
            let d = step_distribution(&w, j);
            assert_eq!(d.up.add(&d.down).add(&d.kill), q(1, 1), "j = {j}");
            assert_eq!(d.up, w.u(j - 1), "p_up = u(j-1) at j = {j}");
            assert_eq!(d.down, w.v(j as i64 - 2), "p_down = v(j-2) at j = {j}");
        }
    }

    #[test]
    fn zero_lambda_chain_stops_immediately() {
        let p = RateProfile::constant(0.0, 1.0);
        let w = floating(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let s = simulate_jump_chain(&w, &mut rng, 1 << 16, 8);
            assert!(s.renewals.is_empty());
            assert_eq!(s.frontier, 1);
            assert_eq!(s.steps, 1);
            assert!(s.killed || s.caught);
        }
    }

    #[test]
    fn trajectories_are_seed_deterministic() {
        let p = RateProfile::constant(1.0, 1.0);
        let a = mc_renewal_frequencies(&p, 6, 20_000, 42);
        let b = mc_renewal_frequencies(&p, 6, 20_000, 42);
        assert_eq!(a.counts, b.counts);
        let c = mc_renewal_frequencies(&p, 6, 20_000, 43);
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn renewal_frequencies_match_exact_values() {
        // Moderate-N in-module check; the acceptance suite runs N = 10^6.
        let p = RateProfile::constant(1.0, 1.0);
        let w = floating(&p);
        let n = 200_000u64;
        let mc = mc_renewal_frequencies(&p, 5, n, 1234);
        for k in 1..=5usize {
            let exact = renewal_probability(&w, k);
            let stderr = (exact * (1.0 - exact) / n as f64).sqrt();
            let diff = (mc.frequency(k) - exact).abs();
            assert!(
                diff <= 3.0 * stderr,
                "k = {k}: |{} - {exact}| > 3·{stderr}",
                mc.frequency(k)
            );
        }
    }

    #[test]
    fn renewal_frequencies_agree_across_replications() {
        // Replicated moderate-N runs: nearly every (replication, k) pair
        // must sit within 3 standard errors of the exact value.
        let p = RateProfile::constant(1.0, 1.0);
        let w = floating(&p);
        let exact: Vec<f64> = (0..=5).map(|k| renewal_probability(&w, k)).collect();
        let n = 50_000u64;
        let mut total = 0;
        let mut within = 0;
        for rep in 0..12u64 {
            let mc = mc_renewal_frequencies(&p, 5, n, 9000 + rep);
            for (k, &p_exact) in exact.iter().enumerate().skip(1) {
                let stderr = (p_exact * (1.0 - p_exact) / n as f64).sqrt();
                total += 1;
                if (mc.frequency(k) - p_exact).abs() <= 3.0 * stderr {
                    within += 1;
                }
            }
        }
        assert!(
            within * 100 >= total * 95,
            "only {within}/{total} pairs within 3 standard errors"
        );
    }

    #[test]
    fn renewal_probability_examples() {
        let p = RateProfile::constant(1.0, 0.0);
        assert_eq!(renewal_probability(&rational(&p), 0), q(1, 1));
        assert_eq!(renewal_probability(&rational(&p), 3), q(5, 64));
    }

    #[test]
    fn sigma_examples() {
        let p = RateProfile::constant(1.0, 0.0);
        assert_eq!(sigma_of_ell(&rational(&p), 5), q(1, 1));

        let p = RateProfile::constant(0.3, 1.0);
        assert_eq!(sigma_of_ell(&rational(&p), 2), q(1, 6));

        let p = RateProfile::new(vec![], 0.0, vec![1.0], 0.0).unwrap();
        assert_eq!(sigma_of_ell(&rational(&p), 3), q(1, 8));
    }

    #[test]
    fn reach_probability_hand_values() {
        // No deaths: blue takes site 1 with certainty.
        let p = RateProfile::constant(1.0, 0.0);
        assert_eq!(reach_probability(&rational(&p), 1), q(1, 1));

        // Competing exponentials at gap 1: rate 1 vs ρ_1 = 1.
        let p = RateProfile::constant(0.0, 1.0);
        assert_eq!(reach_probability(&rational(&p), 1), q(1, 2));

        // λ ≡ 1, ρ ≡ 1: P(Y >= 2) = u(0)·σ(2) = (1/3)(1/6) = 1/18 and
        // P(Y >= 3) = q_2 + q_3 = 1/216 + 1/288 = 7/864.
        let p = RateProfile::constant(1.0, 1.0);
        let table = reach_table(&rational(&p), 3);
        assert_eq!(table.p_reach[2], q(1, 18));
        assert_eq!(table.p_reach[3], q(7, 864));
    }

    #[test]
    fn reach_matches_linear_solve_oracle() {
        let profiles = [
            RateProfile::constant(1.0, 0.0),
            RateProfile::constant(1.0, 1.0),
            RateProfile::new(vec![2.0, 1.0], 0.5, vec![0.3], 1.0).unwrap(),
            RateProfile::constant(0.05, 0.0),
        ];
        for profile in &profiles {
            let w = floating(profile);
            let table = reach_table(&w, 5);
            for k in 1..=5usize {
                let oracle = reach_oracle(&w, k as u64);
                let dp = table.p_reach[k];
                assert!(
                    (dp - oracle).abs() <= 1e-10 * oracle.max(1e-30),
                    "profile {profile:?}, k = {k}: DP {dp} vs oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn reach_is_monotone_and_dominates_renewals() {
        let p = RateProfile::constant(1.0, 1.0);
        let w = floating(&p);
        let table = reach_table(&w, 12);
        let catalan = weighted_catalan_table(&w, 12).unwrap();
        for k in 1..=12usize {
            assert!(table.p_reach[k] <= table.p_reach[k - 1] + 1e-15);
            assert!(*catalan.value(k) <= table.p_reach[k] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn comparison_bound_constant_unit_rates() {
        let p = RateProfile::constant(1.0, 1.0);
        let hypotheses = check_hypotheses(&p, 200, 100);
        let report = comparison_bound_check(&p, 30, &hypotheses);
        assert!(report.hypotheses_consistent);
        assert!(report.all_within_c0, "rows: {:?}", report.rows);
        assert!(report.all_lower_ok);
        assert!(report.all_sandwich_ok);
        // c ≈ 1/4, m ≈ 1 from the telescoping product; the ℓ = 2 path
        // constant is then c·2 = 1/2 and the renewal conversion is 48.
        assert!((report.c0_path - 0.5).abs() < 0.05, "{}", report.c0_path);
        assert!((report.c0 - 24.0).abs() < 2.0, "{}", report.c0);
    }

    #[test]
    fn comparison_bound_flags_violated_hypotheses() {
        // ρ ≡ 0 breaks the decay hypothesis; the report says so instead of
        // pretending the bound failed.
        let p = RateProfile::constant(1.0, 0.0);
        let hypotheses = check_hypotheses(&p, 200, 100);
        let report = comparison_bound_check(&p, 20, &hypotheses);
        assert!(!report.hypotheses_consistent);
        // The sandwich C_k <= P(Y >= k) is unconditional.
        assert!(report.all_sandwich_ok);
    }
}
