//! Rate vectors and the step weights they induce.
//!
//! A [`RateProfile`] holds the red spreading rates `λ_1, λ_2, …` and death
//! rates `ρ_1, ρ_2, …` as a finite head followed by a constant tail, which
//! keeps the cumulative death sums `D_j = ρ_1 + … + ρ_j` in closed form.
//! [`StepWeights`] derives the lattice-path weights
//!
//! ```text
//! u(j) = λ_{j+1} / (1 + λ_{j+1} + D_{j+1}),   j ≥ 0
//! v(j) = 1 / (1 + λ_{j+2} + D_{j+2}),         j ≥ -1
//! a_j  = u(j)·v(j)
//! ```
//!
//! in either arithmetic mode. `v` extends to `j = -1` by the same formula so
//! that the gap-chain identity `p_{j,j-1} = v(j-2)` holds down to `j = 1`.
//!
//! [`check_hypotheses`] probes the two empirical conditions under which the
//! phase criterion is known to hold: polynomial growth of the products
//! `Π_{i=3}^{ℓ-2} (1 + λ_i/(1+D_i))` and decay of `a_j` to zero. Both checks
//! report evidence over a probed range, never a proof.

use crate::numeric::{fmt_f64, Scalar};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RateError {
    #[error("{field}: negative rate {value} is not allowed")]
    Negative { field: String, value: f64 },
    #[error("{field}: rate must be a finite number, got {value}")]
    NotFinite { field: String, value: f64 },
    #[error("malformed rate profile: {0}")]
    Parse(#[from] toml::de::Error),
}

/// Selects one of the two rate vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateKind {
    Lambda,
    Rho,
}

/// Red spreading and death rates, indexed from 1, as head + constant tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateProfile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub lambda_head: Vec<f64>,
    pub lambda_tail: f64,
    pub rho_head: Vec<f64>,
    pub rho_tail: f64,
}

/// On-disk form: `[lambda] head = […] tail = …` plus `[rho]`.
#[derive(Debug, Serialize, Deserialize)]
struct ProfileDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    lambda: VectorDoc,
    rho: VectorDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct VectorDoc {
    #[serde(default)]
    head: Vec<f64>,
    tail: f64,
}

impl RateProfile {
    pub fn new(
        lambda_head: Vec<f64>,
        lambda_tail: f64,
        rho_head: Vec<f64>,
        rho_tail: f64,
    ) -> Result<Self, RateError> {
        let profile = RateProfile {
            name: None,
            lambda_head,
            lambda_tail,
            rho_head,
            rho_tail,
        };
        profile.validate()?;
        Ok(profile)
    }

    /// Constant vectors `λ_i ≡ lambda`, `ρ_i ≡ rho`.
    pub fn constant(lambda: f64, rho: f64) -> Self {
        RateProfile::new(Vec::new(), lambda, Vec::new(), rho).expect("constant rates")
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    fn validate(&self) -> Result<(), RateError> {
        let check = |field: String, value: f64| -> Result<(), RateError> {
            if !value.is_finite() {
                return Err(RateError::NotFinite { field, value });
            }
            if value < 0.0 {
                return Err(RateError::Negative { field, value });
            }
            Ok(())
        };
        for (i, &x) in self.lambda_head.iter().enumerate() {
            check(format!("lambda.head[{i}]"), x)?;
        }
        check("lambda.tail".to_string(), self.lambda_tail)?;
        for (i, &x) in self.rho_head.iter().enumerate() {
            check(format!("rho.head[{i}]"), x)?;
        }
        check("rho.tail".to_string(), self.rho_tail)?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RateError> {
        let doc: ProfileDoc = toml::from_str(text)?;
        let mut profile =
            RateProfile::new(doc.lambda.head, doc.lambda.tail, doc.rho.head, doc.rho.tail)?;
        profile.name = doc.name;
        Ok(profile)
    }

    pub fn to_toml_string(&self) -> String {
        let doc = ProfileDoc {
            name: self.name.clone(),
            lambda: VectorDoc {
                head: self.lambda_head.clone(),
                tail: self.lambda_tail,
            },
            rho: VectorDoc {
                head: self.rho_head.clone(),
                tail: self.rho_tail,
            },
        };
        toml::to_string(&doc).expect("profile serializes")
    }

    /// `λ_i` (1-based).
    pub fn lambda(&self, i: u64) -> f64 {
        assert!(i >= 1, "rates are indexed from 1");
        self.lambda_head
            .get(i as usize - 1)
            .copied()
            .unwrap_or(self.lambda_tail)
    }

    /// `ρ_i` (1-based).
    pub fn rho(&self, i: u64) -> f64 {
        assert!(i >= 1, "rates are indexed from 1");
        self.rho_head
            .get(i as usize - 1)
            .copied()
            .unwrap_or(self.rho_tail)
    }

    pub fn rate(&self, which: RateKind, i: u64) -> f64 {
        match which {
            RateKind::Lambda => self.lambda(i),
            RateKind::Rho => self.rho(i),
        }
    }

    /// The profile with every `λ_i` multiplied by `t` (shape-preserving scan
    /// parameter for critical-value searches).
    pub fn scale_lambda(&self, t: f64) -> Self {
        let mut scaled = self.clone();
        scaled.name = None;
        for x in &mut scaled.lambda_head {
            *x *= t;
        }
        scaled.lambda_tail *= t;
        scaled
    }

    /// Pads both heads with `n` copies of the corresponding tail value.
    /// Represents the same rate vectors; used for representation-invariance
    /// checks.
    pub fn extend_head_with_tail(&self, n: usize) -> Self {
        let mut extended = self.clone();
        let lambda_target = self.lambda_head.len() + n;
        let rho_target = self.rho_head.len() + n;
        while extended.lambda_head.len() < lambda_target {
            extended.lambda_head.push(self.lambda_tail);
        }
        while extended.rho_head.len() < rho_target {
            extended.rho_head.push(self.rho_tail);
        }
        extended
    }

    /// Hash of the mathematical content (rates only, not the name).
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        let mut feed = |tag: &str, xs: &[f64], tail: f64| {
            hasher.update(tag.as_bytes());
            for &x in xs {
                hasher.update(x.to_bits().to_le_bytes());
            }
            hasher.update(b";");
            hasher.update(tail.to_bits().to_le_bytes());
        };
        feed("lambda:", &self.lambda_head, self.lambda_tail);
        feed("rho:", &self.rho_head, self.rho_tail);
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// The derived weights `u`, `v`, `a` and death sums `D_j` in arithmetic `T`.
///
/// Immutable after construction; all accessors are O(1) thanks to the
/// head-prefix-sum representation of `D_j`.
#[derive(Debug, Clone)]
pub struct StepWeights<T: Scalar> {
    profile: RateProfile,
    lambda_head: Vec<T>,
    lambda_tail: T,
    /// `death_prefix[m] = D_m` for `m = 0..=rho_head.len()`.
    death_prefix: Vec<T>,
    rho_tail: T,
    one: T,
}

impl<T: Scalar> StepWeights<T> {
    pub fn new(profile: &RateProfile) -> Self {
        let lambda_head: Vec<T> = profile
            .lambda_head
            .iter()
            .map(|&x| T::from_rate(x))
            .collect();
        let mut death_prefix = Vec::with_capacity(profile.rho_head.len() + 1);
        death_prefix.push(T::zero());
        for &r in &profile.rho_head {
            let prev = death_prefix.last().unwrap().clone();
            death_prefix.push(prev.add(&T::from_rate(r)));
        }
        StepWeights {
            profile: profile.clone(),
            lambda_head,
            lambda_tail: T::from_rate(profile.lambda_tail),
            death_prefix,
            rho_tail: T::from_rate(profile.rho_tail),
            one: T::one(),
        }
    }

    pub fn profile(&self) -> &RateProfile {
        &self.profile
    }

    pub fn fingerprint(&self) -> String {
        self.profile.fingerprint()
    }

    /// `λ_i` in arithmetic `T` (1-based).
    pub fn lambda(&self, i: u64) -> T {
        assert!(i >= 1);
        self.lambda_head
            .get(i as usize - 1)
            .cloned()
            .unwrap_or_else(|| self.lambda_tail.clone())
    }

    /// `D_j = Σ_{i=1}^j ρ_i`, closed form beyond the head.
    pub fn cumulative_death(&self, j: u64) -> T {
        let head_len = (self.death_prefix.len() - 1) as u64;
        if j <= head_len {
            self.death_prefix[j as usize].clone()
        } else {
            let head_sum = self.death_prefix.last().unwrap();
            let extra = T::from_rate((j - head_len) as f64).mul(&self.rho_tail);
            head_sum.add(&extra)
        }
    }

    /// `1 + λ_i + D_i`, the total rate seen by the gap chain at gap `i`.
    pub fn total_rate(&self, i: u64) -> T {
        self.one.add(&self.lambda(i)).add(&self.cumulative_death(i))
    }

    /// Rise weight `u(j) = λ_{j+1} / (1 + λ_{j+1} + D_{j+1})`, `j ≥ 0`.
    pub fn u(&self, j: u64) -> T {
        self.lambda(j + 1).div(&self.total_rate(j + 1))
    }

    /// Fall weight `v(j) = 1 / (1 + λ_{j+2} + D_{j+2})`, defined for `j ≥ -1`.
    pub fn v(&self, j: i64) -> T {
        assert!(j >= -1, "v(j) is defined for j >= -1, got {j}");
        let idx = (j + 2) as u64;
        self.one.clone().div(&self.total_rate(idx))
    }

    /// `a_j = u(j)·v(j)`, `j ≥ 0`.
    pub fn a(&self, j: u64) -> T {
        self.u(j).mul(&self.v(j as i64))
    }

    /// Index past which both rate vectors are in their constant tails, so
    /// that `a_j` is monotone (strictly decreasing if `ρ_tail > 0`, constant
    /// otherwise).
    pub fn head_horizon(&self) -> u64 {
        self.profile
            .lambda_head
            .len()
            .max(self.profile.rho_head.len()) as u64
    }

    /// Limit of `a_j` as `j → ∞`: zero unless `ρ_tail = 0 < λ_tail`, in which
    /// case the weights are eventually constant and positive.
    pub fn a_limit(&self) -> T {
        if self.profile.lambda_tail == 0.0 || self.profile.rho_tail > 0.0 {
            return T::zero();
        }
        let horizon = self.head_horizon();
        // Beyond the horizon every index is in the tail; evaluate there.
        self.a(horizon + 1)
    }

    /// `sup_j a_j`, exact from the head/tail structure: beyond the horizon
    /// the sequence is monotone, so the supremum is attained at `j ≤ horizon`
    /// or equals the tail value.
    pub fn sup_a(&self) -> T {
        let mut best = T::zero();
        for j in 0..=self.head_horizon() + 1 {
            let aj = self.a(j);
            if aj > best {
                best = aj;
            }
        }
        best
    }
}

/// Outcome of probing one empirical hypothesis.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HypothesisFlag {
    /// No violation observed over the probed range.
    ConsistentAtProbedRange { detail: String },
    /// A concrete violation, with where it showed up.
    Violated { detail: String },
}

impl HypothesisFlag {
    pub fn is_consistent(&self) -> bool {
        matches!(self, HypothesisFlag::ConsistentAtProbedRange { .. })
    }
}

/// Evidence report for the two hypotheses behind the phase criterion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesesReport {
    pub ell_max: u64,
    pub k_probe: u64,
    /// `(ℓ, Π_{i=3}^{ℓ-2}(1 + λ_i/(1+D_i)))` for `ℓ = 5..=ell_max`.
    pub products: Vec<(u64, f64)>,
    /// Fitted constants with `product(ℓ) ≤ c·ℓ^m` on the probed range.
    pub fit_c: f64,
    pub fit_m: f64,
    pub growth: HypothesisFlag,
    /// `a_j` for `j = 0..=k_probe`.
    pub a_seq: Vec<f64>,
    /// Exact limit of `a_j` from the tail structure.
    pub a_limit: f64,
    pub decay: HypothesisFlag,
}

impl HypothesesReport {
    pub fn all_consistent(&self) -> bool {
        self.growth.is_consistent() && self.decay.is_consistent()
    }
}

/// Least-squares slope and intercept of `y` against `x`.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        (0.0, my)
    } else {
        let slope = sxy / sxx;
        (slope, my - slope * mx)
    }
}

/// Probes the growth of the products `Π_{i=3}^{ℓ-2}(1 + λ_i/(1+D_i))` and the
/// decay of `a_j`, fitting a polynomial envelope `c·ℓ^m` to the former.
///
/// A violated flag is data about the profile, not an error: the dominated
/// checks downstream are skipped with a reason instead.
pub fn check_hypotheses(profile: &RateProfile, ell_max: u64, k_probe: u64) -> HypothesesReport {
    assert!(ell_max >= 5, "the product check starts at ell = 5");
    let weights: StepWeights<f64> = StepWeights::new(profile);

    let mut products = Vec::with_capacity((ell_max - 4) as usize);
    let mut running = 1.0;
    for ell in 5..=ell_max {
        // Going from ell-1 to ell adds the factor at i = ell-2.
        let i = ell - 2;
        if i >= 3 {
            let d_i = weights.cumulative_death(i);
            running *= 1.0 + profile.lambda(i) / (1.0 + d_i);
        }
        products.push((ell, running));
    }

    let ln_ell: Vec<f64> = products.iter().map(|(l, _)| (*l as f64).ln()).collect();
    let ln_p: Vec<f64> = products.iter().map(|(_, p)| p.ln()).collect();
    let (slope, _) = linear_fit(&ln_ell, &ln_p);
    let fit_m = slope.max(0.0);
    let fit_c = products
        .iter()
        .map(|(l, p)| p / (*l as f64).powf(fit_m))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);

    // Polynomial growth shows a stable log-log slope; a slope that keeps
    // climbing across the probe range is the super-polynomial signature.
    let growth = {
        let half = products.len() / 2;
        if half >= 4 {
            let (m1, _) = linear_fit(&ln_ell[..half], &ln_p[..half]);
            let (m2, _) = linear_fit(&ln_ell[half..], &ln_p[half..]);
            if m2 > m1 + 0.5 && m2 > 1.25 * m1 {
                HypothesisFlag::Violated {
                    detail: format!(
                        "super-polynomial growth suspected: log-log slope rises from {m1:.3} to {m2:.3} at ell = {}",
                        products[half].0
                    ),
                }
            } else {
                HypothesisFlag::ConsistentAtProbedRange {
                    detail: format!(
                        "product(ell) <= {:.6e} * ell^{:.4} for all probed ell <= {ell_max}",
                        fit_c, fit_m
                    ),
                }
            }
        } else {
            HypothesisFlag::ConsistentAtProbedRange {
                detail: format!(
                    "probe range too short for a slope-drift test (ell_max = {ell_max})"
                ),
            }
        }
    };

    let a_seq: Vec<f64> = (0..=k_probe).map(|j| weights.a(j)).collect();
    let a_limit = weights.a_limit();
    let decay = if a_limit > 0.0 {
        HypothesisFlag::Violated {
            detail: format!(
                "a_j does not tend to 0: constant tail value {} beyond j = {}",
                fmt_f64(a_limit),
                weights.head_horizon()
            ),
        }
    } else {
        HypothesisFlag::ConsistentAtProbedRange {
            detail: format!(
                "a_j tends to 0 (a_{k_probe} = {})",
                fmt_f64(*a_seq.last().unwrap())
            ),
        }
    };

    HypothesesReport {
        ell_max,
        k_probe,
        products,
        fit_c,
        fit_m,
        growth,
        a_seq,
        a_limit,
        decay,
    }
}
