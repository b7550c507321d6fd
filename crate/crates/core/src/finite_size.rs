//! Decoy-state bounds with finite statistics: vacuum and single-photon contributions to the
//! key block, the single-photon phase error, and the Serfling bound on the X error rate.
//!
//! Each observed count `n` is replaced by the worst-case end of its Hoeffding interval
//! `n ± δ(sample, ε_PE)`. Which end enters a term follows from the sign of that term's
//! coefficient, so a lower bound never increases when an upper-bounded count grows:
//!
//! | quantity      | `u1`  | `u2`  | `u3`  |
//! |---------------|-------|-------|-------|
//! | `s0` (lower)  |  n/a  | `n⁺`  | `n⁻`  |
//! | `s1` (lower)  | `n⁺`  | `n⁻`  | `n⁺`  |
//! | `v1` (upper)  |  n/a  | `m⁺`  | `m⁻`  |

use serde::{Deserialize, Serialize};

use crate::channel::{DecoySettings, ExpectedStatistics};
use crate::error::{Error, Result};
use crate::math::{gamma_correction, hoeffding_delta, serfling_delta, GammaClamp};
use crate::scalar::Scalar;

/// Number of bound applications that can fail and are charged to the `8 ε_PE` term:
/// `e_X` (1), `s_X0` (2), `s_X1` (3) and the phase error through `v_Z1` (2).
pub const FAILURE_BUDGET: u32 = 8;

/// Hoeffding applications on Z counts needed for `s_Z1` (2 for `s_Z0`, 3 for `s_Z1`); these
/// are reported but not charged, in line with the published accounting.
pub const AUXILIARY_APPLICATIONS: u32 = 5;

/// Observed statistics of one key-generation run. Index `k` is intensity `u_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountStatistics<T> {
    /// Sifted X counts inside the `L + k` sample drawn for the signature.
    pub n_x: [T; 3],
    /// Sifted Z counts over the whole run.
    pub n_z: [T; 3],
    /// Z-basis error counts over the whole run.
    pub m_z: [T; 3],
    /// Error rate `ẽ_X` measured on the `k` sacrificed X bits.
    pub observed_ex: T,
    /// `L`, the signature length; the key block is `n = L/2`.
    pub signature_length: u64,
    /// `k`, the number of X bits used for parameter estimation.
    pub sample_length: u64,
    /// Sifted X events before the `L + k` sample was drawn.
    pub x_sifted_total: T,
}

impl<T: Scalar> CountStatistics<T> {
    /// Builds mean-value counts: X counts proportionally reduced to the `L + k` sample, Z
    /// counts as expected over the whole run.
    pub fn from_expected(
        expected: &ExpectedStatistics<T>,
        signature_length: u64,
        sample_length: u64,
    ) -> Result<Self> {
        let total = expected.expected_x_raw;
        let needed = signature_length + sample_length;
        if T::from_count(needed) > total {
            return Err(Error::InsufficientCounts {
                needed,
                available: total.to_u64().unwrap_or(0),
            });
        }
        let scale = T::from_count(needed) / total;
        let stats = Self {
            n_x: expected.x_sifted_counts.map(|c| c * scale),
            n_z: expected.z_sifted_counts,
            m_z: expected.z_error_counts(),
            observed_ex: expected.expected_observed_ex,
            signature_length,
            sample_length,
            x_sifted_total: total,
        };
        stats.validate()?;
        Ok(stats)
    }

    pub fn block_length(&self) -> u64 {
        self.signature_length / 2
    }

    pub fn validate(&self) -> Result<()> {
        if self.signature_length == 0 || self.signature_length % 2 != 0 {
            return Err(Error::Config(format!(
                "signature length must be even and positive, got {}",
                self.signature_length
            )));
        }
        if self.sample_length == 0 {
            return Err(Error::Config("parameter-estimation sample k must be >= 1".into()));
        }
        for k in 0..3 {
            for (name, v) in [("n_x", self.n_x[k]), ("n_z", self.n_z[k]), ("m_z", self.m_z[k])] {
                if !(v >= T::zero() && v.is_finite()) {
                    return Err(Error::domain(name, v.as_f64(), "finite and >= 0"));
                }
            }
            if self.m_z[k] > self.n_z[k] {
                return Err(Error::Config(format!(
                    "Z error count {} exceeds Z count {} at intensity {}",
                    self.m_z[k],
                    self.n_z[k],
                    k + 1
                )));
            }
        }
        let sample = T::from_count(self.signature_length + self.sample_length);
        let sum = self.n_x.iter().fold(T::zero(), |a, &b| a + b);
        let tol = T::lit(1e-9).max(T::epsilon() * T::lit(16.0)) * sample;
        if (sum - sample).abs() > tol {
            return Err(Error::LengthMismatch(format!(
                "X counts sum to {sum}, expected L + k = {sample}"
            )));
        }
        if !(self.x_sifted_total >= sample * (T::one() - T::lit(1e-9))) {
            return Err(Error::LengthMismatch(format!(
                "sifted X total {} is smaller than L + k = {sample}",
                self.x_sifted_total
            )));
        }
        if !(self.observed_ex >= T::zero() && self.observed_ex <= T::one()) {
            return Err(Error::domain("observed_ex", self.observed_ex.as_f64(), "[0, 1]"));
        }
        Ok(())
    }
}

/// Which total sets the Hoeffding width for Z-basis error counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZErrorSample {
    /// Total number of Z errors in the block.
    #[default]
    TotalErrors,
    /// Total number of Z detections in the block (wider, more conservative).
    TotalDetections,
}

/// Confidence and clamping knobs of the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorOptions<T> {
    pub eps_pe: T,
    /// Smoothing share `α₁` passed to the phase-error correction.
    pub alpha1: T,
    pub gamma_clamp: GammaClamp,
    pub z_error_sample: ZErrorSample,
}

/// A bound value plus whether it was pushed back into its physical range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bounded<T> {
    pub value: T,
    pub clamped: bool,
}

/// Hoeffding interval around an observed count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountInterval<T> {
    pub lower: T,
    pub upper: T,
    pub lower_clamped: bool,
}

/// `τ_n = Σ_k p_k e^(-u_k) u_k^n / n!`, the probability a pulse carries `n` photons.
pub fn tau<T: Scalar>(n_photons: u32, decoy: &DecoySettings<T>) -> T {
    let mut ln_fact = T::zero();
    for i in 2..=n_photons {
        ln_fact = ln_fact + T::from_count(u64::from(i)).ln();
    }
    let n = T::from_count(u64::from(n_photons));
    decoy
        .intensities
        .iter()
        .zip(&decoy.intensity_probs)
        .fold(T::zero(), |acc, (&u, &p)| {
            let term = if n_photons == 0 {
                (-u).exp()
            } else if u == T::zero() {
                T::zero()
            } else {
                (n * u.ln() - u - ln_fact).exp()
            };
            acc + p * term
        })
}

/// `obs ± δ(sample, ε_PE)` with the lower end clamped at zero.
pub fn bound_observed_counts<T: Scalar>(obs: T, sample: T, eps_pe: T) -> Result<CountInterval<T>> {
    let d = hoeffding_delta(sample, eps_pe)?;
    Ok(interval(obs, d))
}

fn interval<T: Scalar>(obs: T, d: T) -> CountInterval<T> {
    let raw = obs - d;
    CountInterval {
        lower: raw.max(T::zero()),
        upper: obs + d,
        lower_clamped: raw < T::zero(),
    }
}

fn check_decoy<T: Scalar>(decoy: &DecoySettings<T>) -> Result<()> {
    let [u1, u2, u3] = decoy.intensities;
    if !(u2 > u3) {
        return Err(Error::Config(format!("decoy bounds need u2 > u3, got {u2} and {u3}")));
    }
    if !(u1 * (u2 - u3) - (u2 * u2 - u3 * u3) > T::zero()) {
        return Err(Error::Config(format!(
            "decoy bounds need u1 > u2 + u3, got ({u1}, {u2}, {u3})"
        )));
    }
    Ok(())
}

fn clamp_nonneg<T: Scalar>(x: T) -> Bounded<T> {
    if x < T::zero() {
        Bounded { value: T::zero(), clamped: true }
    } else {
        Bounded { value: x, clamped: false }
    }
}

/// Lower bound on vacuum events among `counts`, each count known to within
/// `δ(sample, ε_PE)`.
pub fn s0_lower<T: Scalar>(
    counts: &[T; 3],
    sample: T,
    decoy: &DecoySettings<T>,
    eps_pe: T,
) -> Result<Bounded<T>> {
    check_decoy(decoy)?;
    let d = hoeffding_delta(sample, eps_pe)?;
    Ok(s0_with_delta(counts, d, decoy))
}

fn s0_with_delta<T: Scalar>(counts: &[T; 3], d: T, decoy: &DecoySettings<T>) -> Bounded<T> {
    let [_, u2, u3] = decoy.intensities;
    let [_, p2, p3] = decoy.intensity_probs;
    let n2 = interval(counts[1], d).upper;
    let n3 = interval(counts[2], d).lower;
    let raw = tau(0, decoy) / (u2 - u3) * (u2 * u3.exp() * n3 / p3 - u3 * u2.exp() * n2 / p2);
    clamp_nonneg(raw)
}

/// Lower bound on single-photon events among `counts`, given the vacuum lower bound `s0`.
pub fn s1_lower<T: Scalar>(
    counts: &[T; 3],
    sample: T,
    decoy: &DecoySettings<T>,
    s0: T,
    eps_pe: T,
) -> Result<Bounded<T>> {
    check_decoy(decoy)?;
    let d = hoeffding_delta(sample, eps_pe)?;
    Ok(s1_with_delta(counts, d, decoy, s0))
}

fn s1_with_delta<T: Scalar>(counts: &[T; 3], d: T, decoy: &DecoySettings<T>, s0: T) -> Bounded<T> {
    let [u1, u2, u3] = decoy.intensities;
    let [p1, p2, p3] = decoy.intensity_probs;
    let n1 = interval(counts[0], d).upper;
    let n2 = interval(counts[1], d).lower;
    let n3 = interval(counts[2], d).upper;
    let sq = u2 * u2 - u3 * u3;
    let denom = u1 * (u2 - u3) - sq;
    let inner = u2.exp() * n2 / p2 - u3.exp() * n3 / p3
        + sq / (u1 * u1) * (s0 / tau(0, decoy) - u1.exp() * n1 / p1);
    clamp_nonneg(u1 * tau(1, decoy) / denom * inner)
}

/// Upper bound on bit errors among single-photon events, from per-intensity error counts.
pub fn v1_upper<T: Scalar>(
    errors: &[T; 3],
    sample: T,
    decoy: &DecoySettings<T>,
    eps_pe: T,
) -> Result<Bounded<T>> {
    check_decoy(decoy)?;
    let d = hoeffding_delta(sample, eps_pe)?;
    Ok(v1_with_delta(errors, d, decoy))
}

fn v1_with_delta<T: Scalar>(errors: &[T; 3], d: T, decoy: &DecoySettings<T>) -> Bounded<T> {
    let [_, u2, u3] = decoy.intensities;
    let [_, p2, p3] = decoy.intensity_probs;
    let m2 = interval(errors[1], d).upper;
    let m3 = interval(errors[2], d).lower;
    let raw = tau(1, decoy) / (u2 - u3) * (u2.exp() * m2 / p2 - u3.exp() * m3 / p3);
    clamp_nonneg(raw)
}

/// Phase-error bound `v/s_Z1 + γ(α₁, v/s_Z1, s_Z1, s_X1)`, clamped into `[0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseErrorBound<T> {
    pub value: T,
    pub ratio: T,
    pub gamma: T,
    pub clamped: bool,
}

pub fn phase_error_upper<T: Scalar>(
    s_z1_lower: T,
    s_x1_lower: T,
    v_z1: T,
    alpha1: T,
    clamp: GammaClamp,
) -> Result<PhaseErrorBound<T>> {
    if !(s_z1_lower > T::zero()) {
        return Err(Error::Estimation(format!(
            "single-photon Z lower bound is {s_z1_lower}; the phase error cannot be bounded"
        )));
    }
    if !(s_x1_lower > T::zero()) {
        return Err(Error::Estimation(format!(
            "single-photon X lower bound is {s_x1_lower}; the phase error cannot be bounded"
        )));
    }
    let ratio = v_z1 / s_z1_lower;
    if ratio >= T::half() {
        // Nothing is left to correct: the bound is already at its maximum.
        return Ok(PhaseErrorBound { value: T::half(), ratio, gamma: T::zero(), clamped: true });
    }
    let gamma = gamma_correction(alpha1, ratio, s_z1_lower, s_x1_lower, clamp)?;
    let raw = ratio + gamma;
    Ok(PhaseErrorBound {
        value: raw.min(T::half()),
        ratio,
        gamma,
        clamped: raw > T::half(),
    })
}

/// Serfling bound `ẽ_X + δ(n, k, ε_PE)` on the key-block error rate, clamped at 1/2.
pub fn error_rate_upper<T: Scalar>(observed_ex: T, n: u64, k: u64, eps_pe: T) -> Result<Bounded<T>> {
    if !(observed_ex >= T::zero() && observed_ex <= T::one()) {
        return Err(Error::domain("observed_ex", observed_ex.as_f64(), "[0, 1]"));
    }
    let raw = observed_ex + serfling_delta(T::from_count(n), T::from_count(k), eps_pe)?;
    Ok(if raw > T::half() {
        Bounded { value: T::half(), clamped: true }
    } else {
        Bounded { value: raw, clamped: false }
    })
}

/// Everything the security analysis needs from the finite-size estimation step. Counts
/// refer to the `n = L/2` key block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteSizeEstimates<T> {
    pub block_length: u64,
    pub sample_length: u64,
    pub s_x0_lower: T,
    pub s_x1_lower: T,
    pub s_z0_lower: T,
    pub s_z1_lower: T,
    pub v_z1_upper: T,
    pub phase_ratio: T,
    pub gamma: T,
    pub phi_x1_upper: T,
    pub observed_ex: T,
    pub e_x_upper: T,
    /// `τ_0` and `τ_1`.
    pub tau: [T; 2],
    pub delta_x: T,
    pub delta_z: T,
    pub delta_z_errors: T,
    pub failure_budget: u32,
    pub auxiliary_applications: u32,
    /// Names of the quantities that had to be clamped into range.
    pub clamped: Vec<String>,
}

impl<T: Scalar> FiniteSizeEstimates<T> {
    /// `c0 = s_X0 / n`.
    pub fn c0(&self) -> T {
        self.s_x0_lower / T::from_count(self.block_length)
    }

    /// `c1 = s_X1 / n`.
    pub fn c1(&self) -> T {
        self.s_x1_lower / T::from_count(self.block_length)
    }
}

/// Runs the full estimation for the key block.
///
/// Counts are first rescaled to the key block: X counts by `n/(L + k)`, Z counts and Z
/// errors by `n / x_sifted_total` (the Z events accompanying the block). Hoeffding widths
/// are taken on the block totals of X counts, Z counts and Z errors.
pub fn estimate<T: Scalar>(
    stats: &CountStatistics<T>,
    decoy: &DecoySettings<T>,
    opts: &EstimatorOptions<T>,
) -> Result<FiniteSizeEstimates<T>> {
    stats.validate()?;
    decoy.validate()?;
    check_decoy(decoy)?;
    let n = stats.block_length();
    let nf = T::from_count(n);
    let x_scale = nf / T::from_count(stats.signature_length + stats.sample_length);
    let z_scale = nf / stats.x_sifted_total;
    let nx = stats.n_x.map(|c| c * x_scale);
    let nz = stats.n_z.map(|c| c * z_scale);
    let mz = stats.m_z.map(|c| c * z_scale);
    let sum = |a: &[T; 3]| a.iter().fold(T::zero(), |acc, &b| acc + b);

    let eps = opts.eps_pe;
    let delta_x = hoeffding_delta(sum(&nx), eps)?;
    let delta_z = hoeffding_delta(sum(&nz), eps)?;
    let error_sample = match opts.z_error_sample {
        ZErrorSample::TotalErrors => sum(&mz),
        ZErrorSample::TotalDetections => sum(&nz),
    };
    let delta_m = hoeffding_delta(error_sample, eps)?;

    let mut clamped = Vec::new();
    let mut note = |name: &str, b: Bounded<T>| {
        if b.clamped {
            clamped.push(name.to_string());
        }
        b.value
    };
    let s_x0 = note("s_x0_lower", s0_with_delta(&nx, delta_x, decoy));
    let s_x1 = note("s_x1_lower", s1_with_delta(&nx, delta_x, decoy, s_x0));
    let s_z0 = note("s_z0_lower", s0_with_delta(&nz, delta_z, decoy));
    let s_z1 = note("s_z1_lower", s1_with_delta(&nz, delta_z, decoy, s_z0));
    let v = note("v_z1_upper", v1_with_delta(&mz, delta_m, decoy));
    let e_x = note(
        "e_x_upper",
        error_rate_upper(stats.observed_ex, n, stats.sample_length, eps)?,
    );
    let phase = phase_error_upper(s_z1, s_x1, v, opts.alpha1, opts.gamma_clamp)?;
    if phase.clamped {
        clamped.push("phi_x1_upper".into());
    }
    if s_x0 + s_x1 > nf {
        return Err(Error::Estimation(format!(
            "vacuum plus single-photon lower bounds ({}) exceed the block length {n}",
            s_x0 + s_x1
        )));
    }

    Ok(FiniteSizeEstimates {
        block_length: n,
        sample_length: stats.sample_length,
        s_x0_lower: s_x0,
        s_x1_lower: s_x1,
        s_z0_lower: s_z0,
        s_z1_lower: s_z1,
        v_z1_upper: v,
        phase_ratio: phase.ratio,
        gamma: phase.gamma,
        phi_x1_upper: phase.value,
        observed_ex: stats.observed_ex,
        e_x_upper: e_x,
        tau: [tau(0, decoy), tau(1, decoy)],
        delta_x,
        delta_z,
        delta_z_errors: delta_m,
        failure_budget: FAILURE_BUDGET,
        auxiliary_applications: AUXILIARY_APPLICATIONS,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{expected_statistics, ChannelParams, SiftingConvention};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn reference_decoy() -> DecoySettings<f64> {
        DecoySettings::reference()
    }

    #[test]
    fn tau_reference_points() {
        let single = DecoySettings {
            intensities: [0.5, 0.2, 0.1],
            intensity_probs: [1.0, 0.0, 0.0],
            basis_prob_x: 0.5,
        };
        assert_abs_diff_eq!(tau(0, &single), (-0.5f64).exp(), epsilon = 1e-15);
        let d = reference_decoy();
        let expect = 0.25 * (-0.425f64).exp() + 0.40 * (-0.0435f64).exp() + 0.35 * (-0.0022f64).exp();
        assert_abs_diff_eq!(tau(0, &d), expect, epsilon = 1e-15);
        assert_abs_diff_eq!(tau(0, &d), 0.895_646_314_298_056_7, epsilon = 1e-15);
        let total: f64 = (0..=50).map(|n| tau(n, &d)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn observed_count_intervals() {
        let b = bound_observed_counts(0.0, 100.0, 0.01).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!(b.lower_clamped);
        let b = bound_observed_counts(50.0, 100.0, 1.0 - 1e-15).unwrap();
        assert_abs_diff_eq!(b.lower, 50.0, epsilon = 1e-5);
        assert_abs_diff_eq!(b.upper, 50.0, epsilon = 1e-5);
        let b = bound_observed_counts(1e5, 8.1e5, 1e-5).unwrap();
        let d = 2159.336_660_484_636;
        assert_abs_diff_eq!(b.lower, 1e5 - d, epsilon = 1e-8);
        assert_abs_diff_eq!(b.upper, 1e5 + d, epsilon = 1e-8);
    }

    #[test]
    fn s1_hand_evaluated() {
        // Synthetic case evaluated by hand: u = (0.5, 0.1, 0.01), p = (0.5, 0.3, 0.2),
        // counts (5000, 600, 100), zero-width intervals.
        let d = DecoySettings { intensities: [0.5, 0.1, 0.01], intensity_probs: [0.5, 0.3, 0.2], basis_prob_x: 0.5 };
        let counts = [5000.0, 600.0, 100.0];
        let s0 = s0_with_delta(&counts, 0.0, &d).value;
        let t0 = 0.5 * (-0.5f64).exp() + 0.3 * (-0.1f64).exp() + 0.2 * (-0.01f64).exp();
        let s0_hand = t0 / 0.09 * (0.1 * 0.01f64.exp() * 100.0 / 0.2 - 0.01 * 0.1f64.exp() * 600.0 / 0.3);
        assert_relative_eq!(s0, s0_hand, max_relative = 1e-14);
        let t1 = 0.5 * 0.5 * (-0.5f64).exp() + 0.3 * 0.1 * (-0.1f64).exp() + 0.2 * 0.01 * (-0.01f64).exp();
        let s1 = s1_with_delta(&counts, 0.0, &d, s0).value;
        let sq = 0.01 - 0.0001;
        let hand = 0.5 * t1 / (0.5 * 0.09 - sq)
            * (0.1f64.exp() * 600.0 / 0.3 - 0.01f64.exp() * 100.0 / 0.2
                + sq / 0.25 * (s0_hand / t0 - 0.5f64.exp() * 5000.0 / 0.5));
        assert_relative_eq!(s1, hand, max_relative = 1e-14);
        let zero = s1_with_delta(&[0.0; 3], 0.0, &d, 0.0);
        assert_eq!(zero.value, 0.0);
    }

    #[test]
    fn v1_hand_evaluated() {
        let d = reference_decoy();
        let v = v1_upper(&[0.0, 100.0, 10.0], 110.0, &d, 1.0 - 1e-15).unwrap().value;
        let t1 = tau(1, &d);
        let hand = t1 / (0.0435 - 0.0022) * (0.0435f64.exp() * 100.0 / 0.40 - 0.0022f64.exp() * 10.0 / 0.35);
        assert_relative_eq!(v, hand, max_relative = 1e-6);
        assert_abs_diff_eq!(v1_upper(&[0.0; 3], 1.0, &d, 1.0 - 1e-15).unwrap().value, 0.0, epsilon = 1e-6);
    }

    #[test]
    fn perturbation_respects_sign_table() {
        let d = reference_decoy();
        let base = [2.0e5, 1.0e5, 6.0e4];
        let s0 = s0_with_delta(&base, 300.0, &d).value;
        let s1 = s1_with_delta(&base, 300.0, &d, s0).value;
        // Counts that enter through their upper end: raising them must not raise the bound.
        let mut up = base;
        up[1] += 500.0;
        assert!(s0_with_delta(&up, 300.0, &d).value <= s0);
        let mut up = base;
        up[0] += 500.0;
        assert!(s1_with_delta(&up, 300.0, &d, s0).value <= s1);
        let mut up = base;
        up[2] += 500.0;
        assert!(s1_with_delta(&up, 300.0, &d, s0).value <= s1);
        // Wider intervals never tighten a bound.
        assert!(s0_with_delta(&base, 600.0, &d).value <= s0);
        assert!(s1_with_delta(&base, 600.0, &d, s0).value <= s1);
        let m = [0.0, 500.0, 200.0];
        assert!(v1_with_delta(&m, 60.0, &d).value >= v1_with_delta(&m, 30.0, &d).value);
    }

    #[test]
    fn phase_error_cases() {
        let p = phase_error_upper(1e5, 1e5, 0.0, 1e-10, GammaClamp::Clamp).unwrap();
        assert_eq!(p.value, 0.0);
        let p = phase_error_upper(1e5, 1e5, 5e3, 2.5e-11, GammaClamp::Abort).unwrap();
        assert_abs_diff_eq!(p.value, 0.05 + 0.009_009_507_625_799_418, epsilon = 1e-12);
        assert!(matches!(
            phase_error_upper(0.0, 1e5, 1.0, 1e-10, GammaClamp::Abort),
            Err(Error::Estimation(_))
        ));
        assert!(phase_error_upper(1e5, 1e5, 0.0, 1e-10, GammaClamp::Abort).is_err());
    }

    #[test]
    fn serfling_error_bound() {
        let e = error_rate_upper(0.0287, 386_000, 38_600, 1e-5).unwrap();
        assert_abs_diff_eq!(e.value, 0.0402, epsilon = 5e-4);
        assert_abs_diff_eq!(error_rate_upper(0.0, 1000, 100, 1.0 - 1e-15).unwrap().value, 0.0, epsilon = 1e-6);
        let n = 1000u64;
        let e = error_rate_upper(0.10, n, n, 1e-3).unwrap().value;
        let hand = 0.10 + ((1e3f64).ln() / (2.0 * 1000.0) * (1.0 / 1000.0)).sqrt();
        assert_abs_diff_eq!(e, hand, epsilon = 1e-15);
        assert!(error_rate_upper(0.49, 100, 10, 1e-5).unwrap().clamped);
    }

    fn reference_estimates(pulses: u64) -> FiniteSizeEstimates<f64> {
        let exp = expected_statistics(
            pulses,
            &ChannelParams::reference_50km(),
            &reference_decoy(),
            SiftingConvention::SinglePx,
        )
        .unwrap();
        let n = (exp.expected_x_raw / 2.1).floor() as u64;
        let stats = CountStatistics::from_expected(&exp, 2 * n, (0.1 * n as f64).floor() as u64).unwrap();
        let opts = EstimatorOptions {
            eps_pe: 1e-5,
            alpha1: 1e-10 / 84.0,
            gamma_clamp: GammaClamp::Abort,
            z_error_sample: ZErrorSample::TotalErrors,
        };
        estimate(&stats, &reference_decoy(), &opts).unwrap()
    }

    #[test]
    fn reference_pipeline_matches_prototype() {
        let est = reference_estimates(630_957_344);
        assert_eq!(est.failure_budget, 8);
        // Only the Z-basis vacuum bound hits zero at these settings.
        assert_eq!(est.clamped, vec!["s_z0_lower".to_string()]);
        eprintln!("{est:?}");
        assert_relative_eq!(est.e_x_upper, 0.0402, max_relative = 0.01);
        assert!(est.phi_x1_upper > 0.08 && est.phi_x1_upper < 0.1);
        assert!(est.s_x0_lower + est.s_x1_lower <= est.block_length as f64);
    }

    #[test]
    fn bounds_monotone_in_confidence() {
        let d = reference_decoy();
        let counts = [2.0e5, 1.0e5, 6.0e4];
        let m = [2000.0, 900.0, 500.0];
        let mut prev: Option<(f64, f64, f64, f64)> = None;
        for &eps in &[0.5, 0.1, 1e-2, 1e-4, 1e-6, 1e-10] {
            let s0 = s0_lower(&counts, 3.6e5, &d, eps).unwrap().value;
            let s1 = s1_lower(&counts, 3.6e5, &d, s0, eps).unwrap().value;
            let v = v1_upper(&m, 3400.0, &d, eps).unwrap().value;
            let e = error_rate_upper(0.03, 3.0e5 as u64, 3.0e4 as u64, eps).unwrap().value;
            if let Some((p0, p1, pv, pe)) = prev {
                assert!(s0 <= p0 && s1 <= p1 && v >= pv && e >= pe);
            }
            prev = Some((s0, s1, v, e));
        }
    }

    #[test]
    fn count_statistics_validation() {
        let exp = expected_statistics(
            1_000_000,
            &ChannelParams::<f64>::reference_50km(),
            &reference_decoy(),
            SiftingConvention::SinglePx,
        )
        .unwrap();
        assert!(matches!(
            CountStatistics::from_expected(&exp, 100_000, 100),
            Err(Error::InsufficientCounts { .. })
        ));
        assert!(CountStatistics::from_expected(&exp, 501, 10).is_err());
        let ok = CountStatistics::from_expected(&exp, 500, 50).unwrap();
        assert_abs_diff_eq!(ok.n_x.iter().sum::<f64>(), 550.0, epsilon = 1e-9);
    }
}
