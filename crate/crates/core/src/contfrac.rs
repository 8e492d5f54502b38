//! Continued-fraction view of the generating function and the phase test.
//!
//! With `a_j = u(j)·v(j)`, the generating function `g(z) = Σ C_k z^k` equals
//! the continued fraction
//!
//! ```text
//! f(z) = 1 / (1 - a_0 z / (1 - a_1 z / (1 - …)))
//! ```
//!
//! for `0 < z < M`, where `M` is the radius of convergence. The depth-`n`
//! approximant `F_n = A_n / B_n` follows the three-term recursion
//! `X_n = X_{n-1} - a_{n-2} z · X_{n-2}`, and equals the generating function
//! of excursions capped at height `n - 1`, so on the positive axis the
//! approximants increase monotonically. That structure drives the numerics:
//!
//! * `F_n` settling (depth-doubling Cauchy test past the Worpitzky tail
//!   index) witnesses convergence;
//! * a sign change in `B_n` means `z` passed a pole of some approximant,
//!   which only happens at or beyond `M`;
//! * `F_n` blowing past a threshold on a monotone climb witnesses
//!   divergence.
//!
//! Expected coexistence on the `d`-ary tree holds exactly when `M ≤ d`;
//! [`classify_phase`] combines a divergence check of `g(d)` with a bisection
//! estimate of `M` and reports the boundary band `|M - d| < tol` as
//! inconclusive rather than guessing.

use crate::catalan::{root_test_from_ln, weighted_catalan_ln, Radius, RootTest};
use crate::rates::{check_hypotheses, HypothesesReport, RateProfile, StepWeights};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ContfracError {
    #[error("the phase criterion requires branching factor d >= 2, got d = {d}")]
    InvalidBranching { d: u32 },
    #[error(
        "critical-scale bisection needs opposite verdicts at the endpoints: \
         t = {t_lo} gives {lo:?}, t = {t_hi} gives {hi:?}"
    )]
    EndpointsAgree {
        t_lo: f64,
        t_hi: f64,
        lo: Phase,
        hi: Phase,
    },
    #[error("verdicts are not monotone in the scale parameter: {0:?}")]
    NonMonotoneProbes(Vec<(f64, Phase)>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Approximants above this are treated as numerically divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;
/// Default recursion depth bound.
pub const DEFAULT_MAX_DEPTH: u64 = 1 << 20;

const RENORM_UP: f64 = 1.3407807929942597e154; // 2^512
const RENORM_DOWN: f64 = 7.458340731200207e-155; // 2^-512

/// Numerators and denominators of the three-term recursion.
#[derive(Debug, Clone)]
pub struct ApproximantState {
    a_prev: f64,
    a_curr: f64,
    b_prev: f64,
    b_curr: f64,
    n: u64,
}

impl ApproximantState {
    /// Starts at `F_1 = 1`, the depth-1 approximant.
    pub fn new() -> Self {
        ApproximantState {
            a_prev: 0.0,
            a_curr: 1.0,
            b_prev: 1.0,
            b_curr: 1.0,
            n: 1,
        }
    }

    pub fn depth(&self) -> u64 {
        self.n
    }

    /// `F_n = A_n / B_n`, or `None` on a vanishing denominator.
    pub fn value(&self) -> Option<f64> {
        if self.b_curr == 0.0 {
            None
        } else {
            Some(self.a_curr / self.b_curr)
        }
    }

    pub fn denominator_positive(&self) -> bool {
        self.b_curr > 0.0
    }

    /// One recursion step: consumes the partial numerator `a_{n-1}·z` and
    /// advances to depth `n+1`.
    pub fn advance(&mut self, partial: f64) {
        let a_next = self.a_curr - partial * self.a_prev;
        let b_next = self.b_curr - partial * self.b_prev;
        self.a_prev = self.a_curr;
        self.a_curr = a_next;
        self.b_prev = self.b_curr;
        self.b_curr = b_next;
        self.n += 1;

        // A and B are jointly rescaled by powers of two; F is scale-invariant.
        let m = self
            .a_curr
            .abs()
            .max(self.b_curr.abs())
            .max(self.a_prev.abs())
            .max(self.b_prev.abs());
        if m > RENORM_UP {
            self.rescale(RENORM_DOWN);
        } else if m > 0.0 && m < RENORM_DOWN {
            self.rescale(RENORM_UP);
        }
    }

    fn rescale(&mut self, factor: f64) {
        self.a_prev *= factor;
        self.a_curr *= factor;
        self.b_prev *= factor;
        self.b_curr *= factor;
    }
}

impl Default for ApproximantState {
    fn default() -> Self {
        Self::new()
    }
}

/// Why an evaluation was declared divergent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceReason {
    /// Some `B_n(z)` changed sign: `z` sits at or beyond a pole, hence `z ≥ M`.
    DenominatorSignChange,
    /// The monotone approximants exceeded [`DIVERGENCE_THRESHOLD`].
    ThresholdExceeded,
    /// `a_j z` never enters the Worpitzky disk `|w| ≤ 1/4`; the constant-tail
    /// excursions alone already force `z > M`.
    TailOutsideWorpitzkyDisk,
}

/// Outcome of evaluating the continued fraction at one point. All outcomes
/// are data, not errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Evaluation {
    Converged {
        value: f64,
        depth: u64,
    },
    Diverged {
        reason: DivergenceReason,
        depth: u64,
    },
    Inconclusive {
        last: f64,
        depth: u64,
    },
}

impl Evaluation {
    pub fn converged_value(&self) -> Option<f64> {
        match self {
            Evaluation::Converged { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn is_diverged(&self) -> bool {
        matches!(self, Evaluation::Diverged { .. })
    }
}

/// Smallest `J` with `a_j z ≤ 1/4` for all `j ≥ J`, decided exactly from the
/// head/tail structure: beyond the heads the sequence `a_j` is constant
/// (`ρ_tail = 0`) or strictly decreasing to zero (`ρ_tail > 0`). `None` means
/// the constant tail never enters the disk.
pub fn tail_index(weights: &StepWeights<f64>, z: f64) -> Option<u64> {
    assert!(z > 0.0, "tail_index requires z > 0");
    let quarter = 0.25;
    let horizon = weights.head_horizon();

    if weights.a_limit() * z > quarter {
        return None;
    }
    // Find the first tail index from which the condition holds forever.
    let mut from = horizon;
    let probe_cap = horizon + 100_000_000;
    while weights.a(from) * z > quarter {
        from += 1;
        if from > probe_cap {
            return None;
        }
    }
    // Extend downward through the head while the condition keeps holding.
    let mut j = from;
    while j > 0 && weights.a(j - 1) * z <= quarter {
        j -= 1;
    }
    Some(j)
}

/// Evaluates `f(z)` by running the approximant recursion with depth-doubling
/// Cauchy checks past the tail index. See the module docs for why the three
/// stopping rules are sound on the positive axis.
pub fn evaluate_f(weights: &StepWeights<f64>, z: f64, tol: f64, max_depth: u64) -> Evaluation {
    assert!(z > 0.0, "evaluate_f requires z > 0");
    assert!(tol > 0.0, "evaluate_f requires tol > 0");

    let Some(j0) = tail_index(weights, z) else {
        return Evaluation::Diverged {
            reason: DivergenceReason::TailOutsideWorpitzkyDisk,
            depth: 0,
        };
    };

    let mut state = ApproximantState::new();
    // Checkpoint comparisons only count once both depths sit past the tail.
    let warmup = 2 * (j0 + 2);
    let mut checkpoint = state.value();
    let mut next_checkpoint: u64 = 8;
    let mut last = 1.0;

    while state.depth() < max_depth {
        let j = state.depth() - 1; // advance consumes a_{n-1} z
        state.advance(weights.a(j) * z);

        if !state.denominator_positive() {
            return Evaluation::Diverged {
                reason: DivergenceReason::DenominatorSignChange,
                depth: state.depth(),
            };
        }
        let value = state.value().expect("positive denominator");
        last = value;
        if value > DIVERGENCE_THRESHOLD {
            return Evaluation::Diverged {
                reason: DivergenceReason::ThresholdExceeded,
                depth: state.depth(),
            };
        }

        if state.depth() == next_checkpoint {
            if state.depth() >= warmup {
                if let Some(prev) = checkpoint {
                    if (value - prev).abs() <= tol * value.abs().max(1.0) {
                        return Evaluation::Converged {
                            value,
                            depth: state.depth(),
                        };
                    }
                }
                checkpoint = Some(value);
            }
            next_checkpoint *= 2;
        }
    }

    Evaluation::Inconclusive {
        last,
        depth: max_depth,
    }
}

/// First `n` approximants `F_1..F_n` (diagnostics; stops early at a pole).
pub fn approximant_sequence(weights: &StepWeights<f64>, z: f64, n: u64) -> Vec<f64> {
    let mut state = ApproximantState::new();
    let mut out = Vec::with_capacity(n as usize);
    if let Some(v) = state.value() {
        out.push(v);
    }
    while state.depth() < n {
        let j = state.depth() - 1;
        state.advance(weights.a(j) * z);
        match state.value() {
            Some(v) => out.push(v),
            None => break,
        }
    }
    out
}

/// One bisection probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub z: f64,
    pub evaluation: Evaluation,
}

/// Bisection estimate of the radius of convergence, with evidence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MEstimate {
    pub radius: Radius,
    /// Largest `z` that evaluated convergent.
    pub lower: f64,
    /// Smallest `z` that evaluated divergent.
    pub upper: f64,
    /// `false` when the bracket could not be refined to width `tol`
    /// (an inconclusive evaluation got in the way); the bracket is still
    /// reported as an interval.
    pub conclusive: bool,
    pub tol: f64,
    pub probes: Vec<ProbeRecord>,
    /// Independent cross-check from the coefficient root test.
    pub root_test: Option<RootTest>,
}

impl MEstimate {
    fn infinite(probes: Vec<ProbeRecord>) -> Self {
        MEstimate {
            radius: Radius::Infinite,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            conclusive: true,
            tol: 0.0,
            probes,
            root_test: None,
        }
    }
}

const ROOT_TEST_K_MAX: usize = 256;
const ROOT_TEST_WINDOW: usize = 32;

/// Estimates `M` by bisecting between a `z` where the continued fraction
/// converges and a `z` where it diverges. Returns `Infinite` exactly when
/// `λ_1 = 0` (all coefficients past `C_0` vanish and `g ≡ 1`).
pub fn estimate_m(weights: &StepWeights<f64>, tol: f64) -> MEstimate {
    assert!(tol > 0.0, "estimate_m requires tol > 0");
    let mut probes = Vec::new();

    let a0 = weights.a(0);
    if a0 == 0.0 {
        return MEstimate::infinite(probes);
    }

    let eval_tol = (tol * 1e-3).clamp(1e-14, 1e-9);
    let eval = |z: f64, probes: &mut Vec<ProbeRecord>| -> Evaluation {
        let e = evaluate_f(weights, z, eval_tol, DEFAULT_MAX_DEPTH);
        probes.push(ProbeRecord { z, evaluation: e });
        e
    };

    // Guaranteed-convergent start: strictly inside the Worpitzky region,
    // where z < M by coefficient comparison with the Catalan series.
    let sup_a = weights.sup_a();
    let mut lo = 0.125 / sup_a;
    // Guaranteed-divergent start: the zigzag excursions give C_k >= a_0^k,
    // so M <= 1/a_0.
    let mut hi = 1.0 / a0 + 1.0;

    let mut lo_ok = false;
    for _ in 0..8 {
        if matches!(eval(lo, &mut probes), Evaluation::Converged { .. }) {
            lo_ok = true;
            break;
        }
        lo *= 0.5;
    }
    let mut hi_ok = false;
    for _ in 0..8 {
        if eval(hi, &mut probes).is_diverged() {
            hi_ok = true;
            break;
        }
        hi *= 2.0;
    }

    let root_test = {
        let ln = weighted_catalan_ln(weights, ROOT_TEST_K_MAX);
        root_test_from_ln(&ln, ROOT_TEST_WINDOW).ok()
    };

    if !lo_ok || !hi_ok {
        return MEstimate {
            radius: Radius::Finite {
                value: 0.5 * (lo + hi),
            },
            lower: lo,
            upper: hi,
            conclusive: false,
            tol,
            probes,
            root_test,
        };
    }

    let mut conclusive = true;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match eval(mid, &mut probes) {
            Evaluation::Converged { .. } => lo = mid,
            Evaluation::Diverged { .. } => hi = mid,
            Evaluation::Inconclusive { .. } => {
                conclusive = false;
                break;
            }
        }
    }

    MEstimate {
        radius: Radius::Finite {
            value: 0.5 * (lo + hi),
        },
        lower: lo,
        upper: hi,
        conclusive,
        tol,
        probes,
        root_test,
    }
}

/// Phase of the process on the `d`-ary tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    ExpectedCoexistence,
    NoExpectedCoexistence,
    /// `|M - d| < tol`: the true boundary `M = d` is coexistence, but a
    /// float cannot witness the equality.
    BoundaryInconclusive,
}

/// Full verdict document, serializable as JSON.
#[derive(Debug, Clone, Serialize)]
pub struct PhaseVerdict {
    pub verdict: Phase,
    pub d: u32,
    pub tol: f64,
    pub m_estimate: MEstimate,
    /// Evaluation of the generating function at `z = d`.
    pub g_at_d: Evaluation,
    pub hypotheses: HypothesesReport,
    pub warnings: Vec<String>,
    pub profile_name: Option<String>,
    pub profile_fingerprint: String,
    pub version: String,
}

impl PhaseVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

const HYPOTHESES_ELL_MAX: u64 = 200;
const HYPOTHESES_K_PROBE: u64 = 200;

/// Classifies expected coexistence: `M ≤ d` exactly when it occurs, assuming
/// the probed hypotheses. Verdicts are still issued when a hypothesis flag is
/// violated, with a warning attached.
pub fn classify_phase(
    profile: &RateProfile,
    d: u32,
    tol: f64,
) -> Result<PhaseVerdict, ContfracError> {
    if d < 2 {
        return Err(ContfracError::InvalidBranching { d });
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(ContfracError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }

    let weights: StepWeights<f64> = StepWeights::new(profile);
    let hypotheses = check_hypotheses(profile, HYPOTHESES_ELL_MAX, HYPOTHESES_K_PROBE);
    let mut warnings = Vec::new();
    if !hypotheses.growth.is_consistent() {
        warnings.push(
            "growth hypothesis violated on the probed range; the phase criterion \
             is not proven to apply to this profile"
                .to_string(),
        );
    }
    if !hypotheses.decay.is_consistent() {
        warnings.push(
            "weight-decay hypothesis violated (a_j does not tend to 0); the phase \
             criterion is not proven to apply to this profile"
                .to_string(),
        );
    }

    let g_at_d = evaluate_f(&weights, d as f64, 1e-9, DEFAULT_MAX_DEPTH);
    let m_estimate = estimate_m(&weights, tol);

    let d_f = d as f64;
    let verdict = match m_estimate.radius {
        Radius::Infinite => {
            // g ≡ 1 here; it certainly converges at d.
            Phase::NoExpectedCoexistence
        }
        Radius::Finite { value } => {
            if g_at_d.is_diverged() || value <= d_f - tol {
                Phase::ExpectedCoexistence
            } else if value >= d_f + tol && g_at_d.converged_value().is_some() {
                Phase::NoExpectedCoexistence
            } else {
                Phase::BoundaryInconclusive
            }
        }
    };

    Ok(PhaseVerdict {
        verdict,
        d,
        tol,
        m_estimate,
        g_at_d,
        hypotheses,
        warnings,
        profile_name: profile.name.clone(),
        profile_fingerprint: profile.fingerprint(),
        version: crate::VERSION.to_string(),
    })
}

/// Result of locating the verdict flip along the family `t ↦ t·λ`.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalScale {
    pub t_star: f64,
    pub lower: f64,
    pub upper: f64,
    pub d: u32,
    pub tol: f64,
    pub probes: Vec<(f64, Phase)>,
}

/// Bisects `classify_phase` along the one-parameter family `t·λ` to locate
/// the verdict flip to width `tol`. Verdict monotonicity in `t` is assumed
/// and checked on all probes; a non-monotone pattern is an error carrying the
/// probe table. Boundary verdicts at interior probes are resolved by the sign
/// of `M - d`.
pub fn critical_lambda(
    base: &RateProfile,
    d: u32,
    t_lo: f64,
    t_hi: f64,
    tol: f64,
) -> Result<CriticalScale, ContfracError> {
    if d < 2 {
        return Err(ContfracError::InvalidBranching { d });
    }
    if !(t_lo >= 0.0 && t_hi > t_lo) {
        return Err(ContfracError::InvalidArgument(format!(
            "need 0 <= t_lo < t_hi, got [{t_lo}, {t_hi}]"
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(ContfracError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }

    // Resolve M vs d finer than the t-grid so verdicts flip crisply.
    let m_tol = (tol * 1e-2).clamp(1e-12, 1e-6);
    let mut probes: Vec<(f64, Phase)> = Vec::new();
    let classify_at =
        |t: f64, probes: &mut Vec<(f64, Phase)>| -> Result<(Phase, bool), ContfracError> {
            let verdict = classify_phase(&base.scale_lambda(t), d, m_tol)?;
            probes.push((t, verdict.verdict));
            // Coexistence side of the boundary: M <= d.
            let coexistence_side = match verdict.verdict {
                Phase::ExpectedCoexistence => true,
                Phase::NoExpectedCoexistence => false,
                Phase::BoundaryInconclusive => verdict.m_estimate.radius.as_f64() <= d as f64,
            };
            Ok((verdict.verdict, coexistence_side))
        };

    let (lo_verdict, lo_side) = classify_at(t_lo, &mut probes)?;
    let (hi_verdict, hi_side) = classify_at(t_hi, &mut probes)?;
    let endpoints_decided = matches!(
        (lo_verdict, hi_verdict),
        (Phase::ExpectedCoexistence, Phase::NoExpectedCoexistence)
            | (Phase::NoExpectedCoexistence, Phase::ExpectedCoexistence)
    );
    if !endpoints_decided {
        return Err(ContfracError::EndpointsAgree {
            t_lo,
            t_hi,
            lo: lo_verdict,
            hi: hi_verdict,
        });
    }
    debug_assert_ne!(lo_side, hi_side);

    let mut lo = t_lo;
    let mut hi = t_hi;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (_, mid_side) = classify_at(mid, &mut probes)?;
        if mid_side == lo_side {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    probes.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    // Monotone pattern: the low-endpoint verdict, optionally a boundary
    // band, then the high-endpoint verdict.
    let mut stage_seen = 0u8;
    for &(_, phase) in &probes {
        let stage = if phase == lo_verdict {
            0
        } else if phase == hi_verdict {
            2
        } else {
            1
        };
        if stage < stage_seen {
            return Err(ContfracError::NonMonotoneProbes(probes));
        }
        stage_seen = stage;
    }

    Ok(CriticalScale {
        t_star: 0.5 * (lo + hi),
        lower: lo,
        upper: hi,
        d,
        tol,
        probes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(profile: &RateProfile) -> StepWeights<f64> {
        StepWeights::new(profile)
    }

    #[test]
    fn tail_index_examples() {
        // λ ≡ 1, ρ ≡ 1: a_j = 1/((j+3)(j+4)); a_j·10 ≤ 1/4 first at j = 3.
        let p = RateProfile::constant(1.0, 1.0);
        assert_eq!(tail_index(&weights(&p), 10.0), Some(3));

        // λ ≡ 1, ρ ≡ 0: a_j ≡ 1/4 sits exactly on the disk boundary at z = 1.
        let p = RateProfile::constant(1.0, 0.0);
        assert_eq!(tail_index(&weights(&p), 1.0), Some(0));
        // At z = 2 the constant sequence never enters the disk.
        assert_eq!(tail_index(&weights(&p), 2.0), None);
    }

    #[test]
    fn evaluate_closed_form_quarter_weights() {
        // a_j ≡ 1/4 gives g(z) = 2/(1 + sqrt(1-z)) on (0, 1).
        let p = RateProfile::constant(1.0, 0.0);
        let w = weights(&p);
        let eval = evaluate_f(&w, 0.5, 1e-12, DEFAULT_MAX_DEPTH);
        let value = eval.converged_value().expect("converges at z = 0.5");
        let exact = 2.0 / (1.0 + 0.5f64.sqrt());
        assert!((value - exact).abs() < 1e-9, "{value} vs {exact}");

        // Tiny z: g(0+) = C_0 = 1.
        let eval = evaluate_f(&w, 1e-12, 1e-12, DEFAULT_MAX_DEPTH);
        let value = eval.converged_value().unwrap();
        assert!((value - 1.0).abs() < 1e-9);

        // Past the radius M = 1.
        let eval = evaluate_f(&w, 1.5, 1e-10, DEFAULT_MAX_DEPTH);
        assert!(eval.is_diverged(), "{eval:?}");
    }

    #[test]
    fn approximants_increase_on_positive_axis() {
        let p = RateProfile::constant(1.0, 1.0);
        let seq = approximant_sequence(&weights(&p), 2.0, 64);
        for pair in seq.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-12, "{pair:?}");
        }
        // Differences eventually decrease in the convergent regime.
        let diffs: Vec<f64> = seq.windows(2).map(|p| p[1] - p[0]).collect();
        for pair in diffs[20..].windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "{pair:?}");
        }
    }

    #[test]
    fn estimate_m_closed_forms() {
        // λ ≡ 1, ρ ≡ 0: M = 1.
        let p = RateProfile::constant(1.0, 0.0);
        let m = estimate_m(&weights(&p), 1e-7);
        assert!(m.conclusive);
        assert!((m.radius.as_f64() - 1.0).abs() <= 1e-6, "{:?}", m.radius);

        // ρ ≡ 0 constant λ: M = (1+λ)²/(4λ).
        let lam = 0.1716;
        let p = RateProfile::constant(lam, 0.0);
        let m = estimate_m(&weights(&p), 1e-7);
        let exact = (1.0 + lam) * (1.0 + lam) / (4.0 * lam);
        assert!(
            (m.radius.as_f64() - exact).abs() <= 1e-5,
            "{:?} vs {exact}",
            m.radius
        );

        // λ ≡ 0: the series is identically 1.
        let p = RateProfile::constant(0.0, 1.0);
        let m = estimate_m(&weights(&p), 1e-7);
        assert_eq!(m.radius, Radius::Infinite);
    }

    #[test]
    fn truncated_lambda_gives_finite_radius_from_terminating_fraction() {
        // λ = (1, 1, 0, 0, …), ρ ≡ 0: heights cap at 2 and
        // g(z) = (1 - z/2)/(1 - 3z/4), a rational function with pole 4/3.
        let p = RateProfile::new(vec![1.0, 1.0], 0.0, vec![], 0.0).unwrap();
        let w = weights(&p);
        let eval = evaluate_f(&w, 1.0, 1e-12, DEFAULT_MAX_DEPTH);
        let value = eval.converged_value().expect("z = 1 < 4/3 converges");
        assert!(
            (value - 2.0).abs() < 1e-9,
            "g(1) = (1/2)/(1/4) = 2, got {value}"
        );

        let m = estimate_m(&w, 1e-9);
        assert!(
            (m.radius.as_f64() - 4.0 / 3.0).abs() <= 1e-7,
            "{:?}",
            m.radius
        );
    }

    #[test]
    fn classify_examples() {
        let p = RateProfile::constant(1.0, 0.0);
        let v = classify_phase(&p, 2, 1e-6).unwrap();
        assert_eq!(v.verdict, Phase::ExpectedCoexistence);
        assert!(
            !v.warnings.is_empty(),
            "ρ ≡ 0 violates the decay hypothesis"
        );

        let p = RateProfile::constant(0.05, 0.0);
        let v = classify_phase(&p, 2, 1e-6).unwrap();
        assert_eq!(v.verdict, Phase::NoExpectedCoexistence);

        let p = RateProfile::constant(0.0, 0.7);
        let v = classify_phase(&p, 2, 1e-6).unwrap();
        assert_eq!(v.verdict, Phase::NoExpectedCoexistence);
        assert_eq!(v.m_estimate.radius, Radius::Infinite);

        assert!(matches!(
            classify_phase(&RateProfile::constant(1.0, 0.0), 1, 1e-6),
            Err(ContfracError::InvalidBranching { d: 1 })
        ));
    }

    #[test]
    fn classify_is_representation_invariant() {
        let p = RateProfile::constant(1.0, 1.0);
        let q = p.extend_head_with_tail(5);
        let vp = classify_phase(&p, 4, 1e-6).unwrap();
        let vq = classify_phase(&q, 4, 1e-6).unwrap();
        assert_eq!(vp.verdict, vq.verdict);
        assert!(
            (vp.m_estimate.radius.as_f64() - vq.m_estimate.radius.as_f64()).abs() <= 2e-6,
            "{:?} vs {:?}",
            vp.m_estimate.radius,
            vq.m_estimate.radius
        );
    }

    #[test]
    fn m_and_root_test_agree_within_five_percent() {
        for profile in [
            RateProfile::constant(1.0, 0.0),
            RateProfile::constant(1.0, 1.0),
            RateProfile::constant(0.3, 0.2),
            // Terminating fraction: both estimators must find the pole 4/3.
            RateProfile::new(vec![1.0, 1.0], 0.0, vec![], 0.0).unwrap(),
        ] {
            let w = weights(&profile);
            let m = estimate_m(&w, 1e-7);
            let rt = m.root_test.as_ref().expect("root test attached");
            let m_val = m.radius.as_f64();
            let rt_val = rt.estimate.as_f64();
            assert!(
                (m_val - rt_val).abs() <= 0.05 * m_val,
                "profile {profile:?}: bisection {m_val} vs root test {rt_val}"
            );
        }
    }

    #[test]
    fn critical_scale_closed_forms() {
        // ρ ≡ 0: M(λ) = (1+λ)²/(4λ) = d at λ = 2d - 1 - 2√(d² - d).
        let base = RateProfile::constant(1.0, 0.0);
        let crit = critical_lambda(&base, 2, 0.01, 1.0, 1e-6).unwrap();
        let exact = 3.0 - 2.0 * 2.0f64.sqrt();
        assert!(
            (crit.t_star - exact).abs() <= 1e-6,
            "{} vs {exact}",
            crit.t_star
        );

        let crit = critical_lambda(&base, 3, 0.01, 1.0, 1e-6).unwrap();
        let exact = 5.0 - 2.0 * 6.0f64.sqrt();
        assert!(
            (crit.t_star - exact).abs() <= 1e-6,
            "{} vs {exact}",
            crit.t_star
        );

        assert!(matches!(
            critical_lambda(&base, 1, 0.01, 1.0, 1e-6),
            Err(ContfracError::InvalidBranching { d: 1 })
        ));
        // Both endpoints on the same side of the boundary.
        assert!(matches!(
            critical_lambda(&base, 2, 0.3, 1.0, 1e-6),
            Err(ContfracError::EndpointsAgree { .. })
        ));
    }

    #[test]
    fn verdict_json_is_stable() {
        let p = RateProfile::constant(0.05, 0.0).with_name("sub");
        let v = classify_phase(&p, 2, 1e-6).unwrap();
        let json = v.to_json();
        assert!(json.contains("\"verdict\": \"no_expected_coexistence\""));
        assert!(json.contains("\"profile_name\": \"sub\""));
        let again = classify_phase(&p, 2, 1e-6).unwrap().to_json();
        assert_eq!(json, again, "classification is deterministic");
    }
}
