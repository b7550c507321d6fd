//! The four subcommands. Each returns the bytes to emit and the exit code; writing is left
//! to the caller so results can be compared in memory.

use qds_core::security::{AdversaryStrategy, LengthSearch};
use qds_core::sim::{
    run_forgery_scenario, run_honest_scenario, run_repudiation_scenario, ForgeryConfig, HonestConfig, HonestSource,
    RepudiationConfig, ScenarioSummary,
};
use qds_core::{analyze_expected, required_signature_length, Error as CoreError, SecurityReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{HonestSourceKind, RunConfig, RunMode};
use crate::error::{CliError, CliResult, EXIT_INFEASIBLE, EXIT_OK};
use crate::output::{
    csv_table, fmt_bound, fmt_f64, fmt_opt, COMPARE_HEADER, SIMULATE_HEADER, SWEEP_HEADER,
};

/// Bytes to emit plus the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub bytes: Vec<u8>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportMode {
    FixedPulses,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSummary {
    pub signature_length: u64,
    pub n_pulses: u64,
    pub grid: Vec<(u64, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: Option<u64>,
    pub sifting: qds_core::SiftingConvention,
    pub gamma_clamp: qds_core::GammaClamp,
    pub z_error_sample: qds_core::ZErrorSample,
    pub clamped: Vec<String>,
    pub warnings: Vec<String>,
}

/// Output of `analyze`. The `config` block is accepted back as `--config`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub mode: ReportMode,
    pub report: Option<SecurityReport<f64>>,
    pub search: Option<SearchSummary>,
    pub provenance: Provenance,
}

fn provenance(cfg: &RunConfig, seed: Option<u64>, report: Option<&SecurityReport<f64>>, extra: Vec<String>) -> Provenance {
    let mut warnings = report.map(|r| r.warnings.clone()).unwrap_or_default();
    warnings.extend(extra);
    Provenance {
        tool: "qds",
        version: env!("CARGO_PKG_VERSION"),
        seed,
        sifting: cfg.analysis.sifting,
        gamma_clamp: cfg.analysis.gamma_clamp,
        z_error_sample: cfg.analysis.z_error_sample,
        clamped: report.map(|r| r.estimates.clamped.clone()).unwrap_or_default(),
        warnings,
    }
}

/// Runs the analysis the configuration asks for, without serialising it.
pub fn build_report(cfg: &RunConfig, seed: Option<u64>) -> CliResult<(Report, i32)> {
    let params = cfg.security_params();
    let opts = cfg.analysis_options();
    match cfg.mode()? {
        RunMode::FixedPulses(n) => {
            let r = analyze_expected(n, &cfg.channel, &cfg.decoy, &params, &opts).map_err(CliError::from_run)?;
            let code = if r.feasible { EXIT_OK } else { EXIT_INFEASIBLE };
            let provenance = provenance(cfg, seed, Some(&r), Vec::new());
            Ok((Report { config: cfg.clone(), mode: ReportMode::FixedPulses, report: Some(r), search: None, provenance }, code))
        }
        RunMode::Target(_) => {
            let search = cfg.search_options();
            match required_signature_length(&cfg.channel, &cfg.decoy, &params, &opts, &search) {
                Ok(LengthSearch { signature_length, n_pulses, report, grid }) => {
                    let provenance = provenance(cfg, seed, Some(&report), Vec::new());
                    Ok((
                        Report {
                            config: cfg.clone(),
                            mode: ReportMode::Target,
                            report: Some(report),
                            search: Some(SearchSummary { signature_length, n_pulses, grid }),
                            provenance,
                        },
                        EXIT_OK,
                    ))
                }
                Err(e @ (CoreError::Infeasible(_) | CoreError::SearchExhausted(_))) => {
                    // Still write a report: the analysis at the largest pulse count searched.
                    let largest = *search.grid().last().expect("validated grid is non-empty");
                    let r = analyze_expected(largest, &cfg.channel, &cfg.decoy, &params, &opts).ok();
                    let provenance = provenance(cfg, seed, r.as_ref(), vec![e.to_string()]);
                    Ok((Report { config: cfg.clone(), mode: ReportMode::Target, report: r, search: None, provenance }, EXIT_INFEASIBLE))
                }
                Err(e) => Err(CliError::from_run(e)),
            }
        }
    }
}

pub fn analyze(cfg: &RunConfig, seed: Option<u64>) -> CliResult<CommandOutput> {
    let (report, exit_code) = build_report(cfg, seed)?;
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Config(format!("json encoding failed: {e}")))?;
    bytes.push(b'\n');
    Ok(CommandOutput { bytes, exit_code })
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    DistanceKm,
    Qx,
    Qz,
    DarkCountProb,
    NPulses,
    FEc,
}

impl SweepParam {
    pub const ALL: [SweepParam; 6] = [
        SweepParam::DistanceKm,
        SweepParam::Qx,
        SweepParam::Qz,
        SweepParam::DarkCountProb,
        SweepParam::NPulses,
        SweepParam::FEc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepParam::DistanceKm => "distance_km",
            SweepParam::Qx => "qx",
            SweepParam::Qz => "qz",
            SweepParam::DarkCountProb => "dark_count_prob",
            SweepParam::NPulses => "n_pulses",
            SweepParam::FEc => "f_ec",
        }
    }

    pub fn parse(s: &str) -> CliResult<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|p| p.name()).collect();
            CliError::Config(format!("unknown sweep parameter `{s}`; expected one of {}", names.join(", ")))
        })
    }

    fn apply(self, cfg: &RunConfig, value: f64) -> CliResult<RunConfig> {
        let mut c = cfg.clone();
        match self {
            SweepParam::DistanceKm => c.channel.distance_km = value,
            SweepParam::Qx => c.channel.optical_error_x = value,
            SweepParam::Qz => c.channel.optical_error_z = value,
            SweepParam::DarkCountProb => c.channel.dark_count_prob = value,
            SweepParam::FEc => c.analysis.f_ec = value,
            SweepParam::NPulses => {
                if c.run.target_level.is_some() {
                    return Err(CliError::Config("n_pulses cannot be swept in target-level mode".into()));
                }
                if !(value >= 1.0 && value < 1.8e19) {
                    return Err(CliError::Config(format!("n_pulses = {value} is out of range")));
                }
                c.run.n_pulses = Some(value.round() as u64);
            }
        }
        c.validate()?;
        Ok(c)
    }
}

/// Inclusive arithmetic grid `from, from + step, ...` up to `to`; empty when `from > to`.
pub fn sweep_values(from: f64, to: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(from.is_finite() && to.is_finite() && step.is_finite() && step > 0.0) {
        return Err(CliError::Config(format!("invalid range from={from} to={to} step={step}")));
    }
    if from > to {
        return Ok(Vec::new());
    }
    let count = ((to - from) / step * (1.0 + 1e-12)).floor() as u64 + 1;
    if count > 1_000_000 {
        return Err(CliError::Config(format!("range has {count} points; the limit is 1000000")));
    }
    Ok((0..count).map(|i| from + i as f64 * step).collect())
}

/// Outcome of one grid point; failures are recorded in the row, not raised.
struct PointResult {
    status: &'static str,
    n_pulses: Option<u64>,
    report: Option<SecurityReport<f64>>,
}

fn status_of(e: &CoreError) -> &'static str {
    match e {
        CoreError::Infeasible(_) => "infeasible",
        CoreError::SearchExhausted(_) => "search_exhausted",
        CoreError::InsufficientCounts { .. } => "insufficient_counts",
        _ => "numerical_error",
    }
}

fn evaluate_point(cfg: &RunConfig) -> CliResult<PointResult> {
    let params = cfg.security_params();
    let opts = cfg.analysis_options();
    Ok(match cfg.mode()? {
        RunMode::FixedPulses(n) => match analyze_expected(n, &cfg.channel, &cfg.decoy, &params, &opts) {
            Ok(r) => PointResult { status: if r.feasible { "ok" } else { "infeasible" }, n_pulses: Some(n), report: Some(r) },
            Err(e) => PointResult { status: status_of(&e), n_pulses: Some(n), report: None },
        },
        RunMode::Target(_) => {
            match required_signature_length(&cfg.channel, &cfg.decoy, &params, &opts, &cfg.search_options()) {
                Ok(s) => PointResult { status: "ok", n_pulses: Some(s.n_pulses), report: Some(s.report) },
                Err(e) => PointResult { status: status_of(&e), n_pulses: None, report: None },
            }
        }
    })
}

fn evaluate_grid(cfg: &RunConfig, param: SweepParam, values: &[f64]) -> CliResult<Vec<(f64, PointResult)>> {
    let configs = values.iter().map(|&v| param.apply(cfg, v)).collect::<CliResult<Vec<_>>>()?;
    let results: Vec<CliResult<PointResult>> = configs.par_iter().map(evaluate_point).collect();
    values.iter().copied().zip(results).map(|(v, r)| r.map(|r| (v, r))).collect()
}

fn sweep_row(param: SweepParam, value: f64, p: &PointResult, target: f64) -> Vec<String> {
    let mut row = vec![param.name().to_string(), fmt_f64(value), p.status.to_string(), p.n_pulses.map(|n| n.to_string()).unwrap_or_default()];
    match &p.report {
        None => row.resize(SWEEP_HEADER.len(), String::new()),
        Some(r) => {
            let e = &r.estimates;
            row.extend([
                r.signature_length.to_string(),
                r.block_length.to_string(),
                r.sample_length.to_string(),
                fmt_opt(r.expected_x_raw),
                fmt_f64(r.observed_ex),
                fmt_f64(r.e_x_upper),
                fmt_f64(e.s_x0_lower),
                fmt_f64(e.s_x1_lower),
                fmt_f64(e.s_z1_lower),
                fmt_f64(e.v_z1_upper),
                fmt_f64(e.phi_x1_upper),
                fmt_f64(r.h_min),
                fmt_f64(r.p_e),
                r.feasible.to_string(),
                fmt_opt(r.s_a),
                fmt_opt(r.s_v),
            ]);
            for b in [Some(r.p_abort), r.p_forge, r.p_repudiation] {
                let (lin, log2) = fmt_bound(b);
                row.extend([lin, log2]);
            }
            row.extend([fmt_f64(r.qkd_key_length), r.meets(target).to_string()]);
        }
    }
    row
}

pub fn sweep(cfg: &RunConfig, param: &str, from: f64, to: f64, step: f64) -> CliResult<CommandOutput> {
    let param = SweepParam::parse(param)?;
    cfg.mode()?;
    let values = sweep_values(from, to, step)?;
    let target = cfg.security_params().target_level;
    let rows: Vec<Vec<String>> =
        evaluate_grid(cfg, param, &values)?.iter().map(|(v, p)| sweep_row(param, *v, p, target)).collect();
    Ok(CommandOutput { bytes: csv_table(SWEEP_HEADER, &rows)?, exit_code: EXIT_OK })
}

/// Where a grid point falls in the signature/key-distribution comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Both,
    QdsOnly,
    QkdOnly,
    Neither,
}

impl Classification {
    pub fn of(feasible_qds: bool, qkd_key_length: f64) -> Self {
        match (feasible_qds, qkd_key_length > 0.0) {
            (true, true) => Classification::Both,
            (true, false) => Classification::QdsOnly,
            (false, true) => Classification::QkdOnly,
            (false, false) => Classification::Neither,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Classification::Both => "both",
            Classification::QdsOnly => "qds_only",
            Classification::QkdOnly => "qkd_only",
            Classification::Neither => "neither",
        }
    }
}

pub fn compare_qkd(cfg: &RunConfig, param: &str, from: f64, to: f64, step: f64) -> CliResult<CommandOutput> {
    let param = SweepParam::parse(param)?;
    if !matches!(cfg.mode()?, RunMode::FixedPulses(_)) {
        return Err(CliError::Config("compare-qkd needs run.n_pulses".into()));
    }
    let values = sweep_values(from, to, step)?;
    let rows: Vec<Vec<String>> = evaluate_grid(cfg, param, &values)?
        .iter()
        .map(|(v, p)| {
            let mut row = vec![param.name().to_string(), fmt_f64(*v), p.status.to_string(), p.n_pulses.map(|n| n.to_string()).unwrap_or_default()];
            match &p.report {
                Some(r) => row.extend([
                    r.feasible.to_string(),
                    fmt_f64(r.p_e),
                    fmt_f64(r.e_x_upper),
                    fmt_f64(r.h_min),
                    fmt_f64(r.qkd_key_length),
                    Classification::of(r.feasible, r.qkd_key_length).name().to_string(),
                ]),
                None => row.resize(COMPARE_HEADER.len(), String::new()),
            }
            row
        })
        .collect();
    Ok(CommandOutput { bytes: csv_table(COMPARE_HEADER, &rows)?, exit_code: EXIT_OK })
}

pub const SCENARIOS: [&str; 3] = ["honest", "repudiation", "forgery"];

/// Builds and runs the requested scenario.
pub fn run_scenario(cfg: &RunConfig, scenario: &str, trials: u64, seed: u64) -> CliResult<ScenarioSummary> {
    let sim = &cfg.simulate;
    let run = CliError::from_run;
    match scenario {
        "honest" => {
            let (source, s_a, s_v) = match sim.source {
                HonestSourceKind::Iid => {
                    let (s_a, s_v) = sim.thresholds();
                    (HonestSource::Iid { error_rate: sim.error_rate, signature_length: sim.length() }, s_a, s_v)
                }
                HonestSourceKind::Kgp => {
                    let n_pulses = cfg
                        .run
                        .n_pulses
                        .ok_or_else(|| CliError::Config("the key-generation honest scenario needs run.n_pulses".into()))?;
                    let (s_a, s_v) = match (sim.s_a, sim.s_v) {
                        (Some(a), Some(v)) => (a, v),
                        _ => {
                            let r = analyze_expected(n_pulses, &cfg.channel, &cfg.decoy, &cfg.security_params(), &cfg.analysis_options())
                                .map_err(run)?;
                            match (r.s_a, r.s_v) {
                                (Some(a), Some(v)) => (sim.s_a.unwrap_or(a), sim.s_v.unwrap_or(v)),
                                _ => return Err(CliError::Infeasible("no thresholds: the configured run is infeasible".into())),
                            }
                        }
                    };
                    let source = HonestSource::Kgp {
                        n_pulses,
                        channel: cfg.channel,
                        decoy: cfg.decoy,
                        sizing: sim.sizing(cfg.analysis.sample_ratio),
                    };
                    (source, s_a, s_v)
                }
            };
            let hc = HonestConfig { source, s_a, s_v, eps_pe: Some(cfg.security.eps_pe) };
            run_honest_scenario(&hc, trials, seed).map_err(run)
        }
        "repudiation" => {
            let (s_a, s_v) = sim.thresholds();
            let mid = 0.5 * (s_a + s_v);
            let rc = RepudiationConfig {
                strategy: AdversaryStrategy::repudiation(sim.e_b.unwrap_or(mid), sim.e_c.unwrap_or(mid)),
                signature_length: sim.length(),
                s_a,
                s_v,
            };
            run_repudiation_scenario(&rc, trials, seed).map_err(run)
        }
        "forgery" => {
            let (_, s_v) = sim.thresholds();
            let fc = ForgeryConfig {
                forger_error_rate: sim.forger_error_rate.unwrap_or(s_v),
                signature_length: sim.length(),
                s_v,
            };
            run_forgery_scenario(&fc, trials, seed).map_err(run)
        }
        other => Err(CliError::Config(format!("unknown scenario `{other}`; expected one of {}", SCENARIOS.join(", ")))),
    }
}

pub fn simulate(cfg: &RunConfig, scenario: &str, trials: u64, seed: u64) -> CliResult<CommandOutput> {
    if trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    let summary = run_scenario(cfg, scenario, trials, seed)?;
    let rows: Vec<Vec<String>> = summary
        .events
        .iter()
        .map(|e| {
            vec![
                summary.scenario.name().to_string(),
                e.event.clone(),
                e.trials.to_string(),
                e.count.to_string(),
                fmt_f64(e.frequency),
                fmt_f64(e.ci_low),
                fmt_f64(e.ci_high),
                fmt_opt(e.analytic),
                fmt_opt(e.analytic_log2),
                e.analytic_kind.name().to_string(),
            ]
        })
        .collect();
    Ok(CommandOutput { bytes: csv_table(SIMULATE_HEADER, &rows)?, exit_code: EXIT_OK })
}
