//! Weighted Catalan numbers by transfer DP, with a brute-force oracle.
//!
//! A Dyck path of length `2k` is a nonnegative lattice excursion of `k` rise
//! and `k` fall steps. Its weight is the product of `u(h)` over rises from
//! height `h` and `v(h)` over falls from `h+1` to `h`; the weighted Catalan
//! number `C_k` sums the weights over all paths of length `2k`. `C_k` is also
//! the probability that the gap chain of the half-line process performs a
//! renewal at distance `k`, so `C_0 = 1` and `0 ≤ C_k ≤ 1`.
//!
//! The production path is an `O(k_max²)` forward DP over (step, height).
//! [`enumerate_dyck_paths`] walks `Γ_k` explicitly and exists to check the DP
//! against the definition; it is guarded because `|Γ_16| = 35,357,670`.

use crate::numeric::{fmt_f64, ln_add_exp, ArithmeticMode, Scalar};
use crate::rates::StepWeights;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalanError {
    #[error("enumeration of Dyck paths is guarded to k <= {max}, got k = {k}")]
    EnumerationGuard { k: usize, max: usize },
    #[error("invalid Dyck path: {0}")]
    InvalidPath(String),
    #[error(
        "floating underflow at step {step}, height {height}: \
         an intermediate path weight rounded to zero; rerun in exact or log-domain mode"
    )]
    Underflow { step: usize, height: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

/// Enumeration guard: `|Γ_16| = 35,357,670` paths.
pub const ENUMERATION_MAX_K: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Rise,
    Fall,
}

/// A nonnegative lattice excursion: every prefix has at least as many rises
/// as falls, and the totals balance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DyckPath {
    steps: Vec<Step>,
}

impl DyckPath {
    pub fn new(steps: Vec<Step>) -> Result<Self, CatalanError> {
        let mut height: i64 = 0;
        for (i, s) in steps.iter().enumerate() {
            height += match s {
                Step::Rise => 1,
                Step::Fall => -1,
            };
            if height < 0 {
                return Err(CatalanError::InvalidPath(format!(
                    "prefix of length {} dips below zero",
                    i + 1
                )));
            }
        }
        if height != 0 {
            return Err(CatalanError::InvalidPath(format!(
                "path ends at height {height}, not 0"
            )));
        }
        Ok(DyckPath { steps })
    }

    /// Parses `'u'` (rise) / `'d'` (fall), e.g. `"uudd"`.
    pub fn parse(text: &str) -> Result<Self, CatalanError> {
        let steps = text
            .chars()
            .map(|c| match c {
                'u' => Ok(Step::Rise),
                'd' => Ok(Step::Fall),
                other => Err(CatalanError::InvalidPath(format!(
                    "unexpected step character {other:?}"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        DyckPath::new(steps)
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    /// `k`: the number of rise steps.
    pub fn half_length(&self) -> usize {
        self.steps.len() / 2
    }
}

/// Product of `u(h)` over rises from height `h` and `v(h-1)` over falls from
/// height `h`. The empty path has weight 1.
pub fn path_weight<T: Scalar>(path: &DyckPath, weights: &StepWeights<T>) -> T {
    let mut w = T::one();
    let mut height: u64 = 0;
    for step in path.steps() {
        match step {
            Step::Rise => {
                w = w.mul(&weights.u(height));
                height += 1;
            }
            Step::Fall => {
                w = w.mul(&weights.v(height as i64 - 1));
                height -= 1;
            }
        }
    }
    w
}

/// Lexicographic enumeration of `Γ_k` (rise sorts before fall).
pub struct DyckPathIter {
    k: usize,
    current: Option<Vec<Step>>,
}

impl Iterator for DyckPathIter {
    type Item = DyckPath;

    fn next(&mut self) -> Option<DyckPath> {
        let cur = self.current.take()?;
        let out = DyckPath { steps: cur.clone() };
        self.current = next_dyck_word(cur, self.k);
        Some(out)
    }
}

/// Successor in lexicographic order, or `None` after `u^k d^k`'s last word.
fn next_dyck_word(mut word: Vec<Step>, k: usize) -> Option<Vec<Step>> {
    let n = word.len();
    // Prefix statistics before each position.
    let mut rises_before = 0usize;
    let mut height_before = vec![0i64; n];
    let mut rises = vec![0usize; n];
    let mut h = 0i64;
    for i in 0..n {
        height_before[i] = h;
        rises[i] = rises_before;
        match word[i] {
            Step::Rise => {
                h += 1;
                rises_before += 1;
            }
            Step::Fall => h -= 1,
        }
    }
    for i in (0..n).rev() {
        if word[i] == Step::Rise && height_before[i] >= 1 {
            let falls_before = i - rises[i];
            if falls_before < k {
                word[i] = Step::Fall;
                // Lexicographically smallest completion: remaining rises
                // first, then the falls that close the path.
                let rises_left = k - rises[i];
                for (offset, slot) in word[i + 1..].iter_mut().enumerate() {
                    *slot = if offset < rises_left {
                        Step::Rise
                    } else {
                        Step::Fall
                    };
                }
                return Some(word);
            }
        }
    }
    None
}

/// All of `Γ_k`, each path exactly once, in lexicographic order.
pub fn enumerate_dyck_paths(k: usize) -> Result<DyckPathIter, CatalanError> {
    if k > ENUMERATION_MAX_K {
        return Err(CatalanError::EnumerationGuard {
            k,
            max: ENUMERATION_MAX_K,
        });
    }
    let mut first = vec![Step::Rise; k];
    first.extend(std::iter::repeat_n(Step::Fall, k));
    Ok(DyckPathIter {
        k,
        current: Some(first),
    })
}

/// `C_0..C_k_max` with the arithmetic mode recorded.
#[derive(Debug, Clone)]
pub struct CatalanTable<T: Scalar> {
    values: Vec<T>,
    mode: ArithmeticMode,
    weights_fingerprint: String,
}

impl<T: Scalar> CatalanTable<T> {
    pub fn value(&self, k: usize) -> &T {
        &self.values[k]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn mode(&self) -> ArithmeticMode {
        self.mode
    }

    pub fn weights_fingerprint(&self) -> &str {
        &self.weights_fingerprint
    }

    /// `ln C_k` for each k (`-inf` where `C_k = 0`).
    pub fn ln_values(&self) -> Vec<f64> {
        self.values.iter().map(|c| c.to_f64().ln()).collect()
    }

    /// CSV with columns `k, C_k, C_k^(-1/k)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,c_k,c_k_inv_root\n");
        for (k, c) in self.values.iter().enumerate() {
            let inv_root = if k == 0 {
                String::new()
            } else {
                let x = c.to_f64();
                if x == 0.0 {
                    "inf".to_string()
                } else {
                    fmt_f64((-x.ln() / k as f64).exp())
                }
            };
            out.push_str(&format!("{k},{},{inv_root}\n", c.render()));
        }
        out
    }
}

/// Forward DP over (step, height): `W(n+1, h+1) += W(n, h)·u(h)` and
/// `W(n+1, h-1) += W(n, h)·v(h-1)`, seeded `W(0, 0) = 1`, reading
/// `C_k = W(2k, 0)`. `O(k_max²)` time, exact in rational mode.
pub fn weighted_catalan_table<T: Scalar>(
    weights: &StepWeights<T>,
    k_max: usize,
) -> Result<CatalanTable<T>, CatalanError> {
    let heights = k_max + 1;
    let u: Vec<T> = (0..heights as u64).map(|h| weights.u(h)).collect();
    let v: Vec<T> = (0..heights as u64)
        .map(|h| weights.v(h as i64 - 1))
        .collect();

    let mut cur = vec![T::zero(); heights + 1];
    let mut next = vec![T::zero(); heights + 1];
    cur[0] = T::one();
    let mut values = Vec::with_capacity(k_max + 1);
    values.push(T::one());
    let mut underflow: Option<(usize, usize)> = None;

    for n in 0..2 * k_max {
        for slot in next.iter_mut() {
            *slot = T::zero();
        }
        for h in 0..heights {
            if cur[h].is_zero() {
                continue;
            }
            if h < k_max && !u[h].is_zero() {
                let w = cur[h].mul(&u[h]);
                if w.is_zero() && underflow.is_none() {
                    underflow = Some((n + 1, h + 1));
                }
                next[h + 1] = next[h + 1].add(&w);
            }
            if h >= 1 {
                let w = cur[h].mul(&v[h]);
                if w.is_zero() && !v[h].is_zero() && underflow.is_none() {
                    underflow = Some((n + 1, h - 1));
                }
                next[h - 1] = next[h - 1].add(&w);
            }
        }
        std::mem::swap(&mut cur, &mut next);
        if (n + 1) % 2 == 0 {
            values.push(cur[0].clone());
        }
    }

    if let Some((step, height)) = underflow {
        return Err(CatalanError::Underflow { step, height });
    }

    Ok(CatalanTable {
        values,
        mode: T::MODE,
        weights_fingerprint: weights.fingerprint(),
    })
}

/// The same DP carried as `ln W`, immune to underflow. Returns `ln C_k`
/// (`-inf` where `C_k = 0`).
pub fn weighted_catalan_ln(weights: &StepWeights<f64>, k_max: usize) -> Vec<f64> {
    let heights = k_max + 1;
    let ln_u: Vec<f64> = (0..heights as u64).map(|h| weights.u(h).ln()).collect();
    let ln_v: Vec<f64> = (0..heights as u64)
        .map(|h| weights.v(h as i64 - 1).ln())
        .collect();

    let mut cur = vec![f64::NEG_INFINITY; heights + 1];
    let mut next = vec![f64::NEG_INFINITY; heights + 1];
    cur[0] = 0.0;
    let mut values = Vec::with_capacity(k_max + 1);
    values.push(0.0);

    for n in 0..2 * k_max {
        for slot in next.iter_mut() {
            *slot = f64::NEG_INFINITY;
        }
        for h in 0..heights {
            if cur[h] == f64::NEG_INFINITY {
                continue;
            }
            if h < k_max {
                next[h + 1] = ln_add_exp(next[h + 1], cur[h] + ln_u[h]);
            }
            if h >= 1 {
                next[h - 1] = ln_add_exp(next[h - 1], cur[h] + ln_v[h]);
            }
        }
        std::mem::swap(&mut cur, &mut next);
        if (n + 1) % 2 == 0 {
            values.push(cur[0]);
        }
    }
    values
}

/// A radius of convergence: finite or provably infinite (`C_k ≡ 0` beyond
/// some index, which for these weights happens exactly when `λ_1 = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Radius {
    Finite { value: f64 },
    Infinite,
}

impl Radius {
    pub fn as_f64(&self) -> f64 {
        match self {
            Radius::Finite { value } => *value,
            Radius::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Radius::Finite { .. })
    }
}

/// Root-test estimate of the radius of convergence of `Σ C_k z^k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootTest {
    pub estimate: Radius,
    /// `C_k^{-1/k}` for `k = 1..=k_max` (`inf` where `C_k = 0`).
    pub inv_roots: Vec<f64>,
    pub window: usize,
    pub k_max: usize,
}

/// `1 / max_{k in trailing window} C_k^{1/k}`, from `ln C_k` values. The max
/// over a window tracks the limsup; single terms oscillate for non-constant
/// weights.
pub fn root_test_from_ln(ln_values: &[f64], window: usize) -> Result<RootTest, CatalanError> {
    if window < 2 {
        return Err(CatalanError::InsufficientData(
            "root-test window must be at least 2".into(),
        ));
    }
    let k_max = ln_values.len().saturating_sub(1);
    if k_max < window {
        return Err(CatalanError::InsufficientData(format!(
            "need at least {window} entries past k = 0, have {k_max}"
        )));
    }
    let inv_roots: Vec<f64> = (1..=k_max)
        .map(|k| {
            let ln_c = ln_values[k];
            if ln_c == f64::NEG_INFINITY {
                f64::INFINITY
            } else {
                (-ln_c / k as f64).exp()
            }
        })
        .collect();

    let trailing = &ln_values[k_max + 1 - window..];
    if trailing.iter().all(|&x| x == f64::NEG_INFINITY) {
        // Eventually-zero coefficients: the series is a polynomial.
        return Ok(RootTest {
            estimate: Radius::Infinite,
            inv_roots,
            window,
            k_max,
        });
    }
    if trailing.contains(&f64::NEG_INFINITY) {
        return Err(CatalanError::InsufficientData(
            "zero entries inside the trailing window; rerun in exact or log-domain mode".into(),
        ));
    }
    let max_root = trailing
        .iter()
        .zip(k_max + 1 - window..)
        .map(|(&ln_c, k)| (ln_c / k as f64).exp())
        .fold(0.0f64, f64::max);
    Ok(RootTest {
        estimate: Radius::Finite {
            value: 1.0 / max_root,
        },
        inv_roots,
        window,
        k_max,
    })
}

pub fn root_test_estimate<T: Scalar>(
    table: &CatalanTable<T>,
    window: usize,
) -> Result<RootTest, CatalanError> {
    root_test_from_ln(&table.ln_values(), window)
}
