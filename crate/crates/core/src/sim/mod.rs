//! Stochastic simulation of the signature scheme: key generation with photon-number ground
//! truth, symmetrisation and verification, adversarial scenarios and an estimator
//! soundness harness. Every trial draws from its own seeded streams, so results do not
//! depend on thread scheduling.

pub mod kgp;
pub mod protocol;
pub mod rng;
pub mod scenarios;
pub mod soundness;
pub mod types;

pub use kgp::{run_kgp, run_kgp_with_rng, GroundTruth, KeySizing, KgpOutcome, PhotonClass};
pub use protocol::{symmetrise, symmetrise_partition, symmetrise_recorded, symmetrise_with_rng, verify};
pub use rng::{seeded_rng, stream_rng, Stream};
pub use scenarios::{
    run_forgery_scenario, run_honest_scenario, run_repudiation_scenario, wilson_interval, AnalyticKind,
    EventEstimate, ForgeryConfig, HonestConfig, HonestSource, RepudiationConfig, ScenarioKind, ScenarioSummary,
};
pub use soundness::{run_soundness, SoundnessConfig, SoundnessSummary};
pub use types::{Declaration, KeyElement, KeyString, PartyId, Provenance, SymmetrisedKey, Verdict};
