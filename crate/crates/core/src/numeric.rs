//! Arithmetic modes shared by the exact and floating computation paths.
//!
//! Probabilities here are products and sums of the rational step weights of
//! the model, so every quantity can be carried either in exact rational
//! arithmetic (oracles, small indices) or in `f64` (large tables, bisection).
//! The [`Scalar`] trait abstracts the handful of operations the dynamic
//! programs need; every result records which mode produced it.

use num::rational::BigRational;
use num::ToPrimitive;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

/// Which arithmetic carried a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArithmeticMode {
    /// Exact rational arithmetic over the binary values of the input rates.
    Exact,
    /// IEEE 754 double precision.
    Floating,
}

/// Field operations required by the weight and table computations.
pub trait Scalar: Clone + PartialOrd + std::fmt::Debug + Send + Sync + 'static {
    const MODE: ArithmeticMode;

    fn zero() -> Self;
    fn one() -> Self;
    /// Embeds an input rate exactly. Rates are finite nonnegative `f64`
    /// values, each of which is a dyadic rational.
    fn from_rate(x: f64) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    fn add(&self, rhs: &Self) -> Self;
    fn sub(&self, rhs: &Self) -> Self;
    fn mul(&self, rhs: &Self) -> Self;
    fn div(&self, rhs: &Self) -> Self;
    /// Display form: 17 significant digits for floats, `p/q` for rationals.
    fn render(&self) -> String;
}

impl Scalar for f64 {
    const MODE: ArithmeticMode = ArithmeticMode::Floating;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_rate(x: f64) -> Self {
        x
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn render(&self) -> String {
        fmt_f64(*self)
    }
}

impl Scalar for BigRational {
    const MODE: ArithmeticMode = ArithmeticMode::Exact;

    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn from_rate(x: f64) -> Self {
        BigRational::from_float(x).expect("rates are finite")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, rhs: &Self) -> Self {
        self + rhs
    }
    fn sub(&self, rhs: &Self) -> Self {
        self - rhs
    }
    fn mul(&self, rhs: &Self) -> Self {
        self * rhs
    }
    fn div(&self, rhs: &Self) -> Self {
        self / rhs
    }
    fn render(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }
}

/// Formats a float with 17 significant digits so it round-trips exactly.
pub fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// `ln(e^a + e^b)` without intermediate overflow.
pub fn ln_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
