//! Numeric primitives shared by the analysis: binary entropy and its inverse, the binomial
//! tail mass `b(n, r) = Σ_{k≤r} C(n, k)` in log space, concentration-bound widths, and the
//! phase-error correction term.
//!
//! Probability bounds in this crate are carried as base-2 logarithms ([`LogBoundExponent`])
//! because exponents around `-10^4` are routine and underflow any float.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Above this many trials [`log2_binom_tail`] switches from exact summation to `n·h(r/n)`.
pub const EXACT_BINOM_TAIL_LIMIT: u64 = 10_000;

/// Maximum number of bisection steps in [`inverse_binary_entropy`].
pub const INVERSE_ENTROPY_MAX_ITERATIONS: usize = 200;

/// A value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
#[serde(transparent)]
pub struct Probability<T>(T);

impl<T: Scalar> Probability<T> {
    pub fn new(value: T) -> Result<Self> {
        if value >= T::zero() && value <= T::one() {
            Ok(Self(value))
        } else {
            Err(Error::domain("probability", value.as_f64(), "[0, 1]"))
        }
    }

    pub fn value(self) -> T {
        self.0
    }
}

/// Base-2 logarithm of a probability-scale quantity.
///
/// `-inf` encodes an exact zero. Values above zero are allowed (a vacuous bound above 1 is
/// kept uncapped for diagnostics); [`LogBoundExponent::linear`] caps at 1.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogBoundExponent<T> {
    log2: T,
}

impl<T: Scalar> LogBoundExponent<T> {
    pub fn from_log2(log2: T) -> Self {
        debug_assert!(!log2.is_nan(), "log-bound exponent must not be NaN");
        Self { log2 }
    }

    /// `value` must be non-negative; zero maps to `-inf`.
    pub fn from_linear(value: T) -> Self {
        debug_assert!(value >= T::zero());
        Self { log2: value.log2() }
    }

    pub fn zero() -> Self {
        Self {
            log2: T::neg_infinity(),
        }
    }

    pub fn log2(self) -> T {
        self.log2
    }

    /// Linear value without the cap; may overflow to `inf` or underflow to zero.
    pub fn linear_uncapped(self) -> T {
        self.log2.exp2()
    }

    /// Linear value capped at 1.
    pub fn linear(self) -> T {
        if self.log2 >= T::zero() {
            T::one()
        } else {
            self.log2.exp2()
        }
    }

    pub fn is_vacuous(self) -> bool {
        self.log2 >= T::zero()
    }

    /// Adds a constant in log space (multiplies the linear value by `2^shift`).
    pub fn shift(self, shift: T) -> Self {
        Self {
            log2: self.log2 + shift,
        }
    }

    /// Sum of linear values, computed without leaving log space.
    pub fn sum<I: IntoIterator<Item = Self>>(terms: I) -> Self {
        let terms: Vec<T> = terms.into_iter().map(|t| t.log2).collect();
        let max = terms
            .iter()
            .copied()
            .fold(T::neg_infinity(), |acc, x| if x > acc { x } else { acc });
        if max == T::neg_infinity() {
            return Self::zero();
        }
        let acc = terms
            .iter()
            .fold(T::zero(), |acc, &x| acc + (x - max).exp2());
        Self {
            log2: max + acc.log2(),
        }
    }

    pub fn convert<U: Scalar>(self) -> LogBoundExponent<U> {
        LogBoundExponent {
            log2: U::lit(self.log2.as_f64()),
        }
    }
}

impl<T: Scalar> Serialize for LogBoundExponent<T> {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("LogBoundExponent", 2)?;
        s.serialize_field("log2", &finite_or_none(self.log2.as_f64()))?;
        s.serialize_field("linear", &self.linear().as_f64())?;
        s.end()
    }
}

impl<'de, T: Scalar> Deserialize<'de> for LogBoundExponent<T> {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            log2: Option<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Ok(Self {
            log2: T::lit(raw.log2.unwrap_or(f64::NEG_INFINITY)),
        })
    }
}

fn finite_or_none(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn check_unit<T: Scalar>(name: &'static str, x: T) -> Result<()> {
    if x >= T::zero() && x <= T::one() {
        Ok(())
    } else {
        Err(Error::domain(name, x.as_f64(), "[0, 1]"))
    }
}

fn check_open_unit<T: Scalar>(name: &'static str, x: T) -> Result<()> {
    if x > T::zero() && x < T::one() {
        Ok(())
    } else {
        Err(Error::domain(name, x.as_f64(), "(0, 1)"))
    }
}

/// Binary entropy `h(x) = -x log2 x - (1-x) log2(1-x)` with `h(0) = h(1) = 0`.
pub fn binary_entropy<T: Scalar>(x: T) -> Result<T> {
    check_unit("x", x)?;
    Ok(binary_entropy_unchecked(x))
}

pub(crate) fn binary_entropy_unchecked<T: Scalar>(x: T) -> T {
    if x <= T::zero() || x >= T::one() {
        return T::zero();
    }
    let y = T::one() - x;
    -(x * x.log2()) - y * y.log2()
}

/// The unique `x ∈ [0, 1/2]` with `h(x) = y`, found by bisection.
pub fn inverse_binary_entropy<T: Scalar>(y: T) -> Result<T> {
    check_unit("y", y)?;
    if y == T::zero() {
        return Ok(T::zero());
    }
    if y == T::one() {
        return Ok(T::half());
    }
    let (mut lo, mut hi) = (T::zero(), T::half());
    for _ in 0..INVERSE_ENTROPY_MAX_ITERATIONS {
        let mid = (lo + hi) * T::half();
        if mid <= lo || mid >= hi {
            break;
        }
        if binary_entropy_unchecked(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) * T::half())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinomTailMethod {
    Exact,
    EntropyApprox,
}

/// `log2 Σ_{k=0}^{r} C(n, k)` together with the evaluation path taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinomTail<T> {
    pub log2: T,
    pub method: BinomTailMethod,
}

/// Log2 of the binomial tail mass `b(n, r) = Σ_{k=0}^{r} C(n, k)`.
///
/// Exact for `n ≤ EXACT_BINOM_TAIL_LIMIT` (log-space accumulation of `ln C(n, k)` via the
/// ratio recurrence); beyond that returns `n·h(r/n)`, with `r/n` capped at 1/2 where the
/// entropy form stops tracking the sum.
pub fn log2_binom_tail<T: Scalar>(n: u64, r: u64) -> Result<BinomTail<T>> {
    if r > n {
        return Err(Error::domain("r", r as f64, "0 <= r <= n"));
    }
    if n <= EXACT_BINOM_TAIL_LIMIT {
        return Ok(BinomTail {
            log2: T::lit(log2_binom_tail_exact(n, r)),
            method: BinomTailMethod::Exact,
        });
    }
    let ratio = (r as f64 / n as f64).min(0.5);
    Ok(BinomTail {
        log2: T::from_count(n) * binary_entropy_unchecked(T::lit(ratio)),
        method: BinomTailMethod::EntropyApprox,
    })
}

fn log2_binom_tail_exact(n: u64, r: u64) -> f64 {
    // ln C(n, k+1) = ln C(n, k) + ln(n - k) - ln(k + 1); terms grow up to k = n/2 so a running
    // max keeps the accumulator in range.
    let mut ln_c = 0.0_f64;
    let mut max = 0.0_f64;
    let mut acc = 1.0_f64;
    for k in 0..r {
        ln_c += ((n - k) as f64).ln() - ((k + 1) as f64).ln();
        if ln_c > max {
            acc = acc * (max - ln_c).exp() + 1.0;
            max = ln_c;
        } else {
            acc += (ln_c - max).exp();
        }
    }
    (max + acc.ln()) / std::f64::consts::LN_2
}

/// Hoeffding width `sqrt(sample · ln(1/eps) / 2)`.
pub fn hoeffding_delta<T: Scalar>(sample: T, eps: T) -> Result<T> {
    if !(sample >= T::zero()) {
        return Err(Error::domain("sample", sample.as_f64(), ">= 0"));
    }
    check_open_unit("eps", eps)?;
    Ok((sample * (-eps.ln()) * T::half()).sqrt())
}

/// Serfling width for sampling `k` of `n + k` without replacement:
/// `sqrt( ln(1/eps) / (2k) · (1 - (k-1)/n) )`.
pub fn serfling_delta<T: Scalar>(n: T, k: T, eps: T) -> Result<T> {
    if !(k >= T::one()) {
        return Err(Error::domain("k", k.as_f64(), ">= 1"));
    }
    if !(n >= k) {
        return Err(Error::domain("n", n.as_f64(), ">= k"));
    }
    check_open_unit("eps_pe", eps)?;
    let correction = T::one() - (k - T::one()) / n;
    Ok(((-eps.ln()) / (T::lit(2.0) * k) * correction).sqrt())
}

/// What [`gamma_correction`] does when its log argument falls below 1 or `b ∈ {0, 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaClamp {
    /// Report a domain error; the analysis stops.
    #[default]
    Abort,
    /// Return 0 for the correction.
    Clamp,
}

/// Phase-error correction
/// `γ(a, b, c, d) = sqrt( (c+d)(1-b)b / (c d ln2) · log2( (c+d) / (c d (1-b) b) / a² ) )`.
pub fn gamma_correction<T: Scalar>(a: T, b: T, c: T, d: T, clamp: GammaClamp) -> Result<T> {
    if !(a > T::zero()) {
        return Err(Error::domain("a", a.as_f64(), "> 0"));
    }
    if !(c > T::zero()) {
        return Err(Error::domain("c", c.as_f64(), "> 0"));
    }
    if !(d > T::zero()) {
        return Err(Error::domain("d", d.as_f64(), "> 0"));
    }
    check_unit("b", b)?;
    if b == T::zero() || b == T::one() {
        return match clamp {
            GammaClamp::Clamp => Ok(T::zero()),
            GammaClamp::Abort => Err(Error::domain("b", b.as_f64(), "(0, 1) unless clamping")),
        };
    }
    let spread = (T::one() - b) * b;
    // log2 of the argument, assembled term by term to stay clear of overflow for tiny `a`.
    let log_arg = (c + d).log2() - c.log2() - d.log2() - spread.log2() - T::lit(2.0) * a.log2();
    if log_arg < T::zero() {
        return match clamp {
            GammaClamp::Clamp => Ok(T::zero()),
            GammaClamp::Abort => Err(Error::domain(
                "gamma log argument",
                log_arg.exp2().as_f64(),
                ">= 1 unless clamping",
            )),
        };
    }
    let scale = (c + d) * spread / (c * d * T::LN_2());
    Ok((scale * log_arg).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn entropy_reference_points() {
        assert_eq!(binary_entropy(0.5_f64).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0_f64).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0_f64).unwrap(), 0.0);
        // 40-digit evaluation: 0.49991595816452799...
        assert_abs_diff_eq!(binary_entropy(0.11_f64).unwrap(), 0.499_915_958_164_528, epsilon = 1e-12);
        assert!(binary_entropy(-0.1_f64).is_err());
        assert!(binary_entropy(1.01_f64).is_err());
    }

    #[test]
    fn inverse_entropy_reference_points() {
        assert_eq!(inverse_binary_entropy(1.0_f64).unwrap(), 0.5);
        assert_eq!(inverse_binary_entropy(0.0_f64).unwrap(), 0.0);
        let y = binary_entropy(0.0696_f64).unwrap();
        assert_abs_diff_eq!(inverse_binary_entropy(y).unwrap(), 0.0696, epsilon = 1e-9);
        assert!(inverse_binary_entropy(1.5_f64).is_err());
    }

    #[test]
    fn binom_tail_small_cases() {
        let t = log2_binom_tail::<f64>(10, 0).unwrap();
        assert_eq!(t.log2, 0.0);
        assert_eq!(t.method, BinomTailMethod::Exact);
        assert_abs_diff_eq!(log2_binom_tail::<f64>(10, 10).unwrap().log2, 10.0, epsilon = 1e-12);
        // 1 + 10 + 45 + 120 = 176
        assert_abs_diff_eq!(log2_binom_tail::<f64>(10, 3).unwrap().log2, 176f64.log2(), epsilon = 1e-12);
        assert!(log2_binom_tail::<f64>(3, 4).is_err());
        let big = log2_binom_tail::<f64>(20_000, 1_000).unwrap();
        assert_eq!(big.method, BinomTailMethod::EntropyApprox);
        assert_abs_diff_eq!(big.log2, 20_000.0 * binary_entropy(0.05).unwrap(), epsilon = 1e-9);
    }

    #[test]
    fn hoeffding_plug_in() {
        let e2 = (-2.0_f64).exp();
        assert_abs_diff_eq!(hoeffding_delta(2.0, e2).unwrap(), 2f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(hoeffding_delta(1.0, e2).unwrap(), 1.0, epsilon = 1e-12);
        assert!(hoeffding_delta(10.0, 1.0 - 1e-15).unwrap() < 1e-6);
        assert!(hoeffding_delta(10.0, 0.0).is_err());
        assert!(hoeffding_delta(10.0, 1.0).is_err());
        // sqrt(8.1e5 · ln(1e5) / 2), 40-digit evaluation
        assert_abs_diff_eq!(hoeffding_delta(8.1e5, 1e-5).unwrap(), 2159.336_660_484_636, epsilon = 1e-8);
    }

    #[test]
    fn serfling_plug_in() {
        assert_abs_diff_eq!(
            serfling_delta(3.86e5, 3.86e4, 1e-5).unwrap(),
            0.011_585_267_771_422_322,
            epsilon = 1e-14
        );
        let limit = serfling_delta(1e15, 100.0, 1e-3).unwrap();
        assert_abs_diff_eq!(limit, ((1e3f64).ln() / 200.0).sqrt(), epsilon = 1e-12);
        assert!(serfling_delta(10.0, 20.0, 1e-3).is_err());
        assert!(serfling_delta(10.0, 0.0, 1e-3).is_err());
        assert!(serfling_delta(10.0, 5.0, 1.0).is_err());
        assert!(serfling_delta(100.0, 10.0, 1.0 - 1e-15).unwrap() < 1e-6);
    }

    #[test]
    fn gamma_reference_points() {
        // c = d = 8, b = 1/2, a = 1: log argument is exactly 1.
        assert_abs_diff_eq!(gamma_correction(1.0, 0.5, 8.0, 8.0, GammaClamp::Abort).unwrap(), 0.0, epsilon = 1e-12);
        // symmetric reduction sqrt(log2(8/c) / (2 c ln2)) at c = 2
        let expect = ((8.0f64 / 2.0).log2() / (2.0 * 2.0 * std::f64::consts::LN_2)).sqrt();
        assert_abs_diff_eq!(gamma_correction(1.0, 0.5, 2.0, 2.0, GammaClamp::Abort).unwrap(), expect, epsilon = 1e-12);
        // 40-digit evaluation
        assert_abs_diff_eq!(
            gamma_correction(1e-10, 0.05, 1e5, 1e5, GammaClamp::Abort).unwrap(),
            0.008_699_941_752_906_154,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            gamma_correction(2.5e-11, 0.05, 1e5, 1e5, GammaClamp::Abort).unwrap(),
            0.009_009_507_625_799_418,
            epsilon = 1e-14
        );
    }

    #[test]
    fn gamma_clamp_policy() {
        assert!(gamma_correction(1.0, 0.0, 10.0, 10.0, GammaClamp::Abort).is_err());
        assert_eq!(gamma_correction(1.0, 0.0, 10.0, 10.0, GammaClamp::Clamp).unwrap(), 0.0);
        assert!(gamma_correction(1e-9_f64, 1e-300, 1e5, 1e5, GammaClamp::Abort).unwrap() < 1e-100);
        // log argument below 1: c = d = 100, b = 1/2, a = 1 gives 2/(100·1/4) < 1
        assert!(gamma_correction(1.0, 0.5, 100.0, 100.0, GammaClamp::Abort).is_err());
        assert_eq!(gamma_correction(1.0, 0.5, 100.0, 100.0, GammaClamp::Clamp).unwrap(), 0.0);
    }

    #[test]
    fn log_bound_arithmetic() {
        let a = LogBoundExponent::from_linear(0.25_f64);
        let b = LogBoundExponent::from_linear(0.5_f64);
        assert_abs_diff_eq!(LogBoundExponent::sum([a, b]).linear(), 0.75, epsilon = 1e-15);
        let tiny = LogBoundExponent::<f64>::from_log2(-14_000.0);
        assert_eq!(tiny.linear(), 0.0);
        assert_abs_diff_eq!(LogBoundExponent::sum([tiny, b]).log2(), -1.0, epsilon = 1e-15);
        let big = LogBoundExponent::<f64>::from_log2(3.0);
        assert_eq!(big.linear(), 1.0);
        assert_eq!(big.linear_uncapped(), 8.0);
        assert_eq!(LogBoundExponent::<f64>::sum([]).log2(), f64::NEG_INFINITY);
        assert!(Probability::new(1.2_f64).is_err());
        assert_eq!(Probability::new(0.3_f64).unwrap().value(), 0.3);
    }

    #[test]
    fn f32_path_tracks_f64() {
        for &x in &[0.01_f64, 0.1, 0.3, 0.49] {
            let h32 = binary_entropy(x as f32).unwrap() as f64;
            assert_abs_diff_eq!(h32, binary_entropy(x).unwrap(), epsilon = 1e-6);
            let inv32 = inverse_binary_entropy(h32 as f32).unwrap() as f64;
            assert_abs_diff_eq!(inv32, x, epsilon = 1e-5);
        }
    }
}
