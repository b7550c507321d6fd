//! CSV and JSON emission. Column sets are fixed per subcommand; numbers use the shortest
//! representation that round-trips, switching to exponent notation outside `[1e-4, 1e15)`.

use csv::{Terminator, WriterBuilder};
use qds_core::math::LogBoundExponent;

use crate::error::{CliError, CliResult};

pub const SWEEP_HEADER: &[&str] = &[
    "param",
    "value",
    "status",
    "n_pulses",
    "signature_length",
    "block_length",
    "sample_length",
    "expected_x_raw",
    "observed_ex",
    "e_x_upper",
    "s_x0_lower",
    "s_x1_lower",
    "s_z1_lower",
    "v_z1_upper",
    "phi_x1_upper",
    "h_min",
    "p_e",
    "feasible",
    "s_a",
    "s_v",
    "p_abort",
    "p_abort_log2",
    "p_forge",
    "p_forge_log2",
    "p_repudiation",
    "p_repudiation_log2",
    "qkd_key_length",
    "meets_target",
];

pub const COMPARE_HEADER: &[&str] = &[
    "param",
    "value",
    "status",
    "n_pulses",
    "feasible_qds",
    "p_e",
    "e_x_upper",
    "h_min",
    "qkd_key_length",
    "classification",
];

pub const SIMULATE_HEADER: &[&str] = &[
    "scenario",
    "event",
    "trials",
    "count",
    "frequency",
    "ci_low",
    "ci_high",
    "analytic",
    "analytic_log2",
    "analytic_kind",
];

pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v == 0.0 || (1e-4..1e15).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// `(linear capped at 1, log2 uncapped)`; the log2 cell is empty for a zero bound.
pub fn fmt_bound(b: Option<LogBoundExponent<f64>>) -> (String, String) {
    match b {
        Some(b) => (fmt_f64(b.linear()), if b.log2().is_finite() { fmt_f64(b.log2()) } else { String::new() }),
        None => (String::new(), String::new()),
    }
}

/// Serialises a table with LF line endings.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> CliResult<Vec<u8>> {
    let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Config(format!("csv encoding failed: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        debug_assert_eq!(r.len(), header.len());
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Config(format!("csv encoding failed: {e}")))
}
