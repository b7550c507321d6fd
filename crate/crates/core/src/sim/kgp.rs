//! Stochastic key-generation run.
//!
//! Pulses are sampled in aggregate: for each intensity, photon number and basis pair the
//! number of pulses, detections and errors is drawn from the exact multinomial/binomial
//! laws a per-pulse loop would produce. Detection and error probabilities per photon
//! number average to the channel-model rates:
//!
//! * detection: `1 - (1 - 2 p_d)(1 - η)^j`;
//! * a detection with at least one signal photon registered errs with probability `Q`;
//! * a detection caused by dark counts alone yields a uniformly random bit.
//!
//! Sifting is physical: both parties choose their basis independently, so `p_X²` of pulses
//! are X-matched. Photon numbers stay attached to every sifted event as ground truth for
//! checking the estimator; they are never part of the statistics handed to it.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::rng::seeded_rng;
use super::types::{KeyString, PartyId};
use crate::channel::{expected_statistics, system_transmittance, ChannelParams, DecoySettings, SiftingConvention};
use crate::error::{Error, Result};
use crate::finite_size::CountStatistics;
use crate::security::split_raw_key;

/// Photon numbers above this are pooled into the last class of the Poisson split.
const MAX_PHOTONS: usize = 64;

/// Margin, in standard deviations of the expected raw X count, kept when sizing `L` and
/// `k` automatically.
pub const SIZING_SIGMAS: f64 = 5.0;

/// How the signature length and estimation sample are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeySizing {
    /// Fixed `L`; when `None`, `L` and `k` are carved from the expected raw X count less a
    /// safety margin.
    pub signature_length: Option<u64>,
    /// `k / (L/2)`.
    pub sample_ratio: f64,
}

impl Default for KeySizing {
    fn default() -> Self {
        Self { signature_length: None, sample_ratio: 0.1 }
    }
}

impl KeySizing {
    /// `(L, k)` for a run of `n_pulses` pulses.
    pub fn resolve(&self, n_pulses: u64, channel: &ChannelParams<f64>, decoy: &DecoySettings<f64>) -> Result<(u64, u64)> {
        if !(self.sample_ratio > 0.0 && self.sample_ratio <= 1.0) {
            return Err(Error::domain("sample_ratio", self.sample_ratio, "(0, 1]"));
        }
        match self.signature_length {
            Some(l) => {
                if l == 0 || l % 2 != 0 {
                    return Err(Error::Config(format!("signature length {l} must be even and positive")));
                }
                let k = ((self.sample_ratio * (l / 2) as f64).floor() as u64).max(1);
                Ok((l, k))
            }
            None => {
                let exp = expected_statistics(n_pulses, channel, decoy, SiftingConvention::SquaredPx)?;
                let mean = exp.expected_x_raw;
                split_raw_key((mean - SIZING_SIGMAS * mean.sqrt()).max(0.0), self.sample_ratio)
            }
        }
    }
}

/// Photon-number class of a sifted event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonClass {
    Vacuum,
    Single,
    Multi,
}

impl PhotonClass {
    fn of(j: usize) -> Self {
        match j {
            0 => PhotonClass::Vacuum,
            1 => PhotonClass::Single,
            _ => PhotonClass::Multi,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// A sifted X event as seen by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiftedEvent {
    pub intensity: u8,
    pub class: PhotonClass,
    pub error: bool,
}

/// Hidden photon-number information about one run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GroundTruth {
    /// Vacuum events in the key block.
    pub keep_vacuum: u64,
    /// Single-photon events in the key block.
    pub keep_single: u64,
    /// Bit errors in the key block.
    pub keep_errors: u64,
    /// Single-photon Z detections over the whole run.
    pub z_single: u64,
    /// Errors among single-photon Z detections.
    pub z_single_errors: u64,
}

impl GroundTruth {
    /// Error rate of the single-photon Z events, `0` when there are none.
    pub fn z_single_error_rate(&self) -> f64 {
        if self.z_single == 0 {
            0.0
        } else {
            self.z_single_errors as f64 / self.z_single as f64
        }
    }
}

/// Everything produced by one key-generation run between Alice and one recipient.
#[derive(Debug, Clone, PartialEq)]
pub struct KgpOutcome {
    /// Alice's `L` bits: the key block (first `L/2`) followed by the forwarding half.
    pub sender_key: KeyString,
    /// The recipient's `L` bits, aligned with `sender_key`.
    pub receiver_key: KeyString,
    pub stats: CountStatistics<f64>,
    pub truth: GroundTruth,
    pub n_pulses: u64,
}

/// Counts of sifted events by intensity, photon class and error flag.
#[derive(Debug, Clone, Copy, Default)]
struct CellCounts {
    x: [[[u64; 2]; 3]; 3],
    z: [[[u64; 2]; 3]; 3],
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("probability checked above").sample(rng)
}

/// Splits `n` draws over `weights` (which sum to at most 1; the remainder goes to the last
/// bucket) by sequential conditional binomials.
fn multinomial<R: Rng + ?Sized>(n: u64, weights: &[f64], rng: &mut R) -> Vec<u64> {
    let mut out = vec![0u64; weights.len()];
    let mut remaining = n;
    let mut mass = 1.0;
    for (i, &w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == weights.len() || mass <= 0.0 {
            out[i] = remaining;
            remaining = 0;
            break;
        }
        let c = binomial(remaining, (w / mass).clamp(0.0, 1.0), rng);
        out[i] = c;
        remaining -= c;
        mass -= w;
    }
    out[weights.len() - 1] += remaining;
    out
}

fn poisson_weights(u: f64) -> Vec<f64> {
    let mut w = Vec::with_capacity(MAX_PHOTONS + 1);
    let mut term = (-u).exp();
    for j in 0..=MAX_PHOTONS {
        w.push(term);
        term *= u / (j + 1) as f64;
    }
    w
}

fn sample_cells<R: Rng + ?Sized>(
    n_pulses: u64,
    channel: &ChannelParams<f64>,
    decoy: &DecoySettings<f64>,
    rng: &mut R,
) -> CellCounts {
    let eta = system_transmittance(channel);
    let p_d = channel.dark_count_prob;
    let px = decoy.basis_prob_x;
    let pz = decoy.basis_prob_z();
    let basis_weights = [px * px, pz * pz, 1.0 - px * px - pz * pz];
    let mut cells = CellCounts::default();
    let per_intensity = multinomial(n_pulses, &decoy.intensity_probs, rng);
    for (k, &pulses) in per_intensity.iter().enumerate() {
        let by_photons = multinomial(pulses, &poisson_weights(decoy.intensities[k]), rng);
        for (j, &count) in by_photons.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let miss = (1.0 - eta).powi(j as i32);
            let p_detect = 1.0 - (1.0 - 2.0 * p_d) * miss;
            let p_signal = if p_detect > 0.0 { (1.0 - miss) / p_detect } else { 0.0 };
            let by_basis = multinomial(count, &basis_weights, rng);
            let class = PhotonClass::of(j).index();
            for (basis, q, cell) in [
                (0usize, channel.optical_error_x, &mut cells.x),
                (1usize, channel.optical_error_z, &mut cells.z),
            ] {
                let detected = binomial(by_basis[basis], p_detect, rng);
                let signal = binomial(detected, p_signal, rng);
                let errors = binomial(signal, q, rng) + binomial(detected - signal, 0.5, rng);
                cell[k][class][1] += errors;
                cell[k][class][0] += detected - errors;
            }
        }
    }
    cells
}

/// One key-generation run of `n_pulses` pulses between Alice and `receiver`.
pub fn run_kgp(
    n_pulses: u64,
    channel: &ChannelParams<f64>,
    decoy: &DecoySettings<f64>,
    sizing: &KeySizing,
    rng_seed: u64,
) -> Result<KgpOutcome> {
    run_kgp_with_rng(n_pulses, channel, decoy, sizing, PartyId::Bob, &mut seeded_rng(rng_seed))
}

pub fn run_kgp_with_rng<R: Rng + ?Sized>(
    n_pulses: u64,
    channel: &ChannelParams<f64>,
    decoy: &DecoySettings<f64>,
    sizing: &KeySizing,
    receiver: PartyId,
    rng: &mut R,
) -> Result<KgpOutcome> {
    if n_pulses == 0 {
        return Err(Error::domain("n_pulses", 0.0, ">= 1"));
    }
    channel.validate()?;
    decoy.validate()?;
    let (l, k) = sizing.resolve(n_pulses, channel, decoy)?;
    let cells = sample_cells(n_pulses, channel, decoy, rng);

    let mut events: Vec<SiftedEvent> = Vec::new();
    for (intensity, by_class) in cells.x.iter().enumerate() {
        for (class, by_err) in by_class.iter().enumerate() {
            let class = [PhotonClass::Vacuum, PhotonClass::Single, PhotonClass::Multi][class];
            for (err, &count) in by_err.iter().enumerate() {
                let e = SiftedEvent { intensity: intensity as u8, class, error: err == 1 };
                events.extend(std::iter::repeat_n(e, count as usize));
            }
        }
    }
    let total = events.len() as u64;
    let needed = l + k;
    if total < needed {
        return Err(Error::InsufficientCounts { needed, available: total });
    }
    // Uniform random L + k subset in random order: V, then key block, then forwarding half.
    let (chosen, _) = events.partial_shuffle(rng, needed as usize);
    let (v, key) = chosen.split_at(k as usize);
    let half = (l / 2) as usize;

    let mut n_x = [0.0; 3];
    for e in chosen.iter() {
        n_x[e.intensity as usize] += 1.0;
    }
    let observed_ex = v.iter().filter(|e| e.error).count() as f64 / k as f64;
    let mut sender = Vec::with_capacity(l as usize);
    let mut recv = Vec::with_capacity(l as usize);
    for e in key {
        let bit: bool = rng.random();
        sender.push(bit);
        recv.push(bit ^ e.error);
    }
    let block = &key[..half];
    let truth = GroundTruth {
        keep_vacuum: block.iter().filter(|e| e.class == PhotonClass::Vacuum).count() as u64,
        keep_single: block.iter().filter(|e| e.class == PhotonClass::Single).count() as u64,
        keep_errors: block.iter().filter(|e| e.error).count() as u64,
        z_single: (0..3).map(|i| cells.z[i][1][0] + cells.z[i][1][1]).sum(),
        z_single_errors: (0..3).map(|i| cells.z[i][1][1]).sum(),
    };
    let mut n_z = [0.0; 3];
    let mut m_z = [0.0; 3];
    for i in 0..3 {
        for class in &cells.z[i] {
            n_z[i] += (class[0] + class[1]) as f64;
            m_z[i] += class[1] as f64;
        }
    }
    let stats = CountStatistics {
        n_x,
        n_z,
        m_z,
        observed_ex,
        signature_length: l,
        sample_length: k,
        x_sifted_total: total as f64,
    };
    Ok(KgpOutcome {
        sender_key: KeyString::new(sender, PartyId::Alice, 0),
        receiver_key: KeyString::new(recv, receiver, 0),
        stats,
        truth,
        n_pulses,
    })
}
