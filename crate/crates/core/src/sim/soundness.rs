//! Checks the finite-size estimator against the photon-number ground truth of simulated
//! key-generation runs.

use serde::Serialize;

use super::kgp::{run_kgp_with_rng, GroundTruth, KeySizing};
use super::rng::{stream_rng, Stream};
use super::scenarios::wilson_interval;
use super::types::PartyId;
use crate::channel::{ChannelParams, DecoySettings};
use crate::error::Result;
use crate::finite_size::{estimate, EstimatorOptions, FiniteSizeEstimates};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct SoundnessConfig {
    pub n_pulses: u64,
    pub channel: ChannelParams<f64>,
    pub decoy: DecoySettings<f64>,
    pub sizing: KeySizing,
    pub estimator: EstimatorOptions<f64>,
}

/// Which bounds held in one trial: `s_X0`, `s_X1`, `φ_X1`, `e_X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BoundsHeld {
    pub s_x0: bool,
    pub s_x1: bool,
    pub phi_x1: bool,
    pub e_x: bool,
}

impl BoundsHeld {
    pub fn check(est: &FiniteSizeEstimates<f64>, truth: &GroundTruth) -> Self {
        let n = est.block_length as f64;
        Self {
            s_x0: est.s_x0_lower <= truth.keep_vacuum as f64,
            s_x1: est.s_x1_lower <= truth.keep_single as f64,
            phi_x1: est.phi_x1_upper >= truth.z_single_error_rate(),
            e_x: est.e_x_upper >= truth.keep_errors as f64 / n,
        }
    }

    fn as_array(self) -> [bool; 4] {
        [self.s_x0, self.s_x1, self.phi_x1, self.e_x]
    }
}

/// Per-bound hold counts over all trials. Trials where estimation aborted count as
/// failures for every bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessSummary {
    pub trials: u64,
    pub estimation_failures: u64,
    /// Hold counts for `s_X0`, `s_X1`, `φ_X1`, `e_X`.
    pub held: [u64; 4],
}

impl SoundnessSummary {
    pub const NAMES: [&'static str; 4] = ["s_x0_lower", "s_x1_lower", "phi_x1_upper", "e_x_upper"];

    pub fn hold_rate(&self, i: usize) -> f64 {
        self.held[i] as f64 / self.trials.max(1) as f64
    }

    /// 99 % Wilson interval of the hold rate of bound `i`.
    pub fn hold_interval(&self, i: usize) -> (f64, f64) {
        wilson_interval(self.held[i], self.trials, super::scenarios::Z_99)
    }
}

/// Outcome of one trial: `None` when the estimator aborted.
pub fn soundness_trial(cfg: &SoundnessConfig, master_seed: u64, trial: u64) -> Result<Option<BoundsHeld>> {
    let mut rng = stream_rng(master_seed, trial, Stream::KgpBob);
    let out = run_kgp_with_rng(cfg.n_pulses, &cfg.channel, &cfg.decoy, &cfg.sizing, PartyId::Bob, &mut rng)?;
    Ok(estimate(&out.stats, &cfg.decoy, &cfg.estimator).ok().map(|est| BoundsHeld::check(&est, &out.truth)))
}

pub fn run_soundness(cfg: &SoundnessConfig, trials: u64, rng_seed: u64) -> Result<SoundnessSummary> {
    let outcomes: Vec<Result<Option<BoundsHeld>>> =
        (0..trials).into_par_iter().map(|t| soundness_trial(cfg, rng_seed, t)).collect();
    let mut summary = SoundnessSummary { trials, estimation_failures: 0, held: [0; 4] };
    for o in outcomes {
        match o? {
            None => summary.estimation_failures += 1,
            Some(h) => {
                for (c, ok) in summary.held.iter_mut().zip(h.as_array()) {
                    *c += u64::from(ok);
                }
            }
        }
    }
    Ok(summary)
}
