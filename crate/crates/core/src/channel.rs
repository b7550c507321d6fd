//! Lossy-fibre channel with threshold detectors: transmittance, per-intensity detection and
//! bit-error rates, and the expected sifted statistics for a run of `n` pulses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Physical link and detector parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams<T> {
    pub distance_km: T,
    pub attenuation_db_per_km: T,
    pub receiver_loss_db: T,
    pub detector_efficiency: T,
    /// Dark-count probability per pulse and detector.
    pub dark_count_prob: T,
    /// Intrinsic optical error `Q_X` of the X basis.
    pub optical_error_x: T,
    /// Intrinsic optical error `Q_Z` of the Z basis.
    pub optical_error_z: T,
    /// Only used to convert pulse counts into wall-clock time.
    pub pulse_rate_hz: T,
}

impl<T: Scalar> ChannelParams<T> {
    /// The 50 km fibre link with the published detector figures (1 GHz source, 0.2 dB/km,
    /// 2.8 dB receiver loss, 20.4 % detection efficiency, `p_d = 2.1e-5`, `Q_X = 1.38 %`,
    /// `Q_Z = 0.76 %`).
    pub fn reference_50km() -> Self {
        Self {
            distance_km: T::lit(50.0),
            attenuation_db_per_km: T::lit(0.2),
            receiver_loss_db: T::lit(2.8),
            detector_efficiency: T::lit(0.204),
            dark_count_prob: T::lit(2.1e-5),
            optical_error_x: T::lit(0.0138),
            optical_error_z: T::lit(0.0076),
            pulse_rate_hz: T::lit(1e9),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("distance_km", self.distance_km),
            ("attenuation_db_per_km", self.attenuation_db_per_km),
            ("receiver_loss_db", self.receiver_loss_db),
        ] {
            if !(v >= T::zero() && v.is_finite()) {
                return Err(Error::domain(name, v.as_f64(), "finite and >= 0"));
            }
        }
        for (name, v) in [
            ("detector_efficiency", self.detector_efficiency),
            ("dark_count_prob", self.dark_count_prob),
            ("optical_error_x", self.optical_error_x),
            ("optical_error_z", self.optical_error_z),
        ] {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(Error::domain(name, v.as_f64(), "[0, 1]"));
            }
        }
        if !(self.dark_count_prob <= T::half()) {
            return Err(Error::domain(
                "dark_count_prob",
                self.dark_count_prob.as_f64(),
                "[0, 1/2]",
            ));
        }
        if !(self.pulse_rate_hz > T::zero() && self.pulse_rate_hz.is_finite()) {
            return Err(Error::domain("pulse_rate_hz", self.pulse_rate_hz.as_f64(), "> 0"));
        }
        Ok(())
    }

    pub fn convert<U: Scalar>(&self) -> ChannelParams<U> {
        let c = |x: T| U::lit(x.as_f64());
        ChannelParams {
            distance_km: c(self.distance_km),
            attenuation_db_per_km: c(self.attenuation_db_per_km),
            receiver_loss_db: c(self.receiver_loss_db),
            detector_efficiency: c(self.detector_efficiency),
            dark_count_prob: c(self.dark_count_prob),
            optical_error_x: c(self.optical_error_x),
            optical_error_z: c(self.optical_error_z),
            pulse_rate_hz: c(self.pulse_rate_hz),
        }
    }
}

/// Intensity and basis choices of the decoy-state source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoySettings<T> {
    /// Mean photon numbers `(u1, u2, u3)`, strictly decreasing.
    pub intensities: [T; 3],
    pub intensity_probs: [T; 3],
    /// Probability `p_X` of encoding in the X basis; `p_Z = 1 - p_X`.
    pub basis_prob_x: T,
}

impl<T: Scalar> DecoySettings<T> {
    /// Signal 0.425, decoys 0.0435 and 0.0022 with probabilities 0.25 / 0.40 / 0.35 and
    /// `p_X = 15/16`.
    pub fn reference() -> Self {
        Self {
            intensities: [T::lit(0.425), T::lit(0.0435), T::lit(0.0022)],
            intensity_probs: [T::lit(0.25), T::lit(0.40), T::lit(0.35)],
            basis_prob_x: T::lit(0.9375),
        }
    }

    pub fn basis_prob_z(&self) -> T {
        T::one() - self.basis_prob_x
    }

    pub fn validate(&self) -> Result<()> {
        let [u1, u2, u3] = self.intensities;
        if !(u3 >= T::zero() && u2 > u3 && u1 > u2) {
            return Err(Error::Config(format!(
                "intensities must satisfy u1 > u2 > u3 >= 0, got ({u1}, {u2}, {u3})"
            )));
        }
        if !(u1 > u2 + u3) {
            return Err(Error::Config(format!(
                "intensities must satisfy u1 > u2 + u3, got ({u1}, {u2}, {u3})"
            )));
        }
        let mut sum = T::zero();
        for &p in &self.intensity_probs {
            if !(p > T::zero() && p <= T::one()) {
                return Err(Error::domain("intensity_probs", p.as_f64(), "(0, 1]"));
            }
            sum = sum + p;
        }
        // 1e-12 is below f32 resolution; scale the tolerance with the type's epsilon.
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(8.0));
        if (sum - T::one()).abs() > tol {
            return Err(Error::Config(format!(
                "intensity probabilities must sum to 1, got {sum}"
            )));
        }
        let px = self.basis_prob_x;
        if !(px >= T::half() && px < T::one()) {
            return Err(Error::domain("basis_prob_x", px.as_f64(), "[1/2, 1)"));
        }
        Ok(())
    }

    pub fn convert<U: Scalar>(&self) -> DecoySettings<U> {
        let c = |x: T| U::lit(x.as_f64());
        DecoySettings {
            intensities: self.intensities.map(c),
            intensity_probs: self.intensity_probs.map(c),
            basis_prob_x: c(self.basis_prob_x),
        }
    }
}

/// How basis agreement is counted when turning detections into sifted events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiftingConvention {
    /// One factor of `p_X` (`p_Z`): reproduces the published raw-key size.
    #[default]
    SinglePx,
    /// Both parties choose independently, so `p_X²` (`p_Z²`) of detections survive.
    SquaredPx,
}

impl SiftingConvention {
    fn factor<T: Scalar>(self, p: T) -> T {
        match self {
            SiftingConvention::SinglePx => p,
            SiftingConvention::SquaredPx => p * p,
        }
    }
}

/// Mean-value statistics for a run of `n_pulses` pulses; index `k` is intensity `u_{k+1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedStatistics<T> {
    pub n_pulses: u64,
    pub sifting: SiftingConvention,
    pub transmittance: T,
    pub detection_rate: [T; 3],
    pub x_sifted_counts: [T; 3],
    pub z_sifted_counts: [T; 3],
    pub x_error_rate: [T; 3],
    pub z_error_rate: [T; 3],
    pub expected_x_raw: T,
    pub expected_z_raw: T,
    /// Detection-weighted mean of the per-intensity X error rates.
    pub expected_observed_ex: T,
}

impl<T: Scalar> ExpectedStatistics<T> {
    /// Expected Z-basis error counts per intensity.
    pub fn z_error_counts(&self) -> [T; 3] {
        std::array::from_fn(|k| self.z_sifted_counts[k] * self.z_error_rate[k])
    }
}

/// `η = η_det · 10^(-(α d + loss)/10)`.
pub fn system_transmittance<T: Scalar>(params: &ChannelParams<T>) -> T {
    let loss_db = params.attenuation_db_per_km * params.distance_km + params.receiver_loss_db;
    params.detector_efficiency * T::lit(10.0).powf(-loss_db / T::lit(10.0))
}

/// `R = 1 - (1 - 2 p_d) e^(-u η)`.
pub fn detection_rate<T: Scalar>(u: T, eta: T, p_d: T) -> T {
    T::one() - (T::one() - T::lit(2.0) * p_d) * (-u * eta).exp()
}

/// `e = ((1 - e^(-u η)) Q + e^(-u η) p_d) / R`.
pub fn bit_error_rate<T: Scalar>(u: T, eta: T, p_d: T, q: T) -> Result<T> {
    let r = detection_rate(u, eta, p_d);
    if !(r > T::zero()) {
        return Err(Error::domain(
            "detection rate",
            r.as_f64(),
            "> 0 (no light and no dark counts)",
        ));
    }
    let vac = (-u * eta).exp();
    Ok(((T::one() - vac) * q + vac * p_d) / r)
}

pub fn expected_statistics<T: Scalar>(
    n_pulses: u64,
    params: &ChannelParams<T>,
    decoy: &DecoySettings<T>,
    sifting: SiftingConvention,
) -> Result<ExpectedStatistics<T>> {
    params.validate()?;
    decoy.validate()?;
    let eta = system_transmittance(params);
    let n = T::from_count(n_pulses);
    let fx = sifting.factor(decoy.basis_prob_x);
    let fz = sifting.factor(decoy.basis_prob_z());
    let mut stats = ExpectedStatistics {
        n_pulses,
        sifting,
        transmittance: eta,
        detection_rate: [T::zero(); 3],
        x_sifted_counts: [T::zero(); 3],
        z_sifted_counts: [T::zero(); 3],
        x_error_rate: [T::zero(); 3],
        z_error_rate: [T::zero(); 3],
        expected_x_raw: T::zero(),
        expected_z_raw: T::zero(),
        expected_observed_ex: T::zero(),
    };
    let p_d = params.dark_count_prob;
    let mut weighted_ex = T::zero();
    let mut weight = T::zero();
    for k in 0..3 {
        let u = decoy.intensities[k];
        let r = detection_rate(u, eta, p_d);
        let pk = decoy.intensity_probs[k];
        stats.detection_rate[k] = r;
        stats.x_sifted_counts[k] = n * pk * r * fx;
        stats.z_sifted_counts[k] = n * pk * r * fz;
        // A class that never clicks contributes no errors; its rate is reported as zero.
        if r > T::zero() {
            stats.x_error_rate[k] = bit_error_rate(u, eta, p_d, params.optical_error_x)?;
            stats.z_error_rate[k] = bit_error_rate(u, eta, p_d, params.optical_error_z)?;
        }
        // Weights independent of n so the mean stays defined for an empty run.
        weighted_ex = weighted_ex + pk * r * stats.x_error_rate[k];
        weight = weight + pk * r;
    }
    stats.expected_x_raw = stats.x_sifted_counts.iter().fold(T::zero(), |a, &b| a + b);
    stats.expected_z_raw = stats.z_sifted_counts.iter().fold(T::zero(), |a, &b| a + b);
    stats.expected_observed_ex = weighted_ex / weight;
    Ok(stats)
}
