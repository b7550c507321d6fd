//! Finite-size security analysis and simulation of a quantum digital signature scheme
//! built on decoy-state key generation.
//!
//! The numeric core is generic over the scalar type through [`Scalar`]; the `*F64` and
//! `*F32` aliases below fix the common choices. The simulator in [`sim`] always runs in
//! `f64`.

pub mod channel;
pub mod error;
pub mod finite_size;
pub mod math;
pub mod scalar;
pub mod security;
pub mod sim;

pub use channel::{expected_statistics, ChannelParams, DecoySettings, ExpectedStatistics, SiftingConvention};
pub use error::{Error, Result};
pub use finite_size::{estimate, CountStatistics, EstimatorOptions, FiniteSizeEstimates, ZErrorSample};
pub use math::{BinomTailMethod, GammaClamp, LogBoundExponent};
pub use scalar::Scalar;
pub use security::{
    analyze_counts, analyze_expected, required_signature_length, AnalysisOptions, LengthSearch, SearchOptions,
    SecurityParams, SecurityReport,
};

pub type ChannelParamsF64 = ChannelParams<f64>;
pub type ChannelParamsF32 = ChannelParams<f32>;
pub type DecoySettingsF64 = DecoySettings<f64>;
pub type DecoySettingsF32 = DecoySettings<f32>;
pub type SecurityParamsF64 = SecurityParams<f64>;
pub type SecurityParamsF32 = SecurityParams<f32>;
pub type AnalysisOptionsF64 = AnalysisOptions<f64>;
pub type AnalysisOptionsF32 = AnalysisOptions<f32>;
pub type SecurityReportF64 = SecurityReport<f64>;
pub type SecurityReportF32 = SecurityReport<f32>;
pub type CountStatisticsF64 = CountStatistics<f64>;
pub type CountStatisticsF32 = CountStatistics<f32>;
