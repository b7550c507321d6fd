//! Monte Carlo scenarios: honest runs, a repudiating sender planting mismatches, and a
//! forger guessing a recipient's direct half bit by bit. Each reports empirical event
//! frequencies with 99 % Wilson intervals beside the matching analytic value.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::kgp::{run_kgp_with_rng, KeySizing};
use super::protocol::{symmetrise_with_rng, verify};
use super::rng::{stream_rng, Stream};
use super::types::{Declaration, KeyString, PartyId, Verdict};
use crate::channel::{ChannelParams, DecoySettings};
use crate::error::{Error, Result};
use crate::math::LogBoundExponent;
use crate::security::{honest_abort_bound, repudiation_strategy_bounds, AdversaryStrategy};

/// Two-sided 99 % normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

/// Wilson score interval for `count` successes in `trials`.
pub fn wilson_interval(count: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `P(X < limit)` for `X ~ Binomial(n, p)`, summed in log space.
pub fn binomial_cdf_below(n: u64, p: f64, limit: f64) -> f64 {
    if limit <= 0.0 {
        return 0.0;
    }
    let k_max = ((limit.ceil() as u64).saturating_sub(1)).min(n);
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return if k_max >= n { 1.0 } else { 0.0 };
    }
    let odds = (p / (1.0 - p)).ln();
    let mut ln_pmf = n as f64 * (-p).ln_1p();
    let mut max = ln_pmf;
    let mut acc = 1.0;
    for k in 0..k_max {
        ln_pmf += ((n - k) as f64).ln() - ((k + 1) as f64).ln() + odds;
        if ln_pmf > max {
            acc = acc * (max - ln_pmf).exp() + 1.0;
            max = ln_pmf;
        } else {
            acc += (ln_pmf - max).exp();
        }
    }
    (max + acc.ln()).exp().min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Honest,
    Repudiation,
    Forgery,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Honest => "honest",
            ScenarioKind::Repudiation => "repudiation",
            ScenarioKind::Forgery => "forgery",
        }
    }
}

/// What the analytic column of an event row means.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalyticKind {
    UpperBound,
    Exact,
    ExpectedValue,
    None,
}

impl AnalyticKind {
    pub fn name(self) -> &'static str {
        match self {
            AnalyticKind::UpperBound => "upper_bound",
            AnalyticKind::Exact => "exact",
            AnalyticKind::ExpectedValue => "expected_value",
            AnalyticKind::None => "none",
        }
    }
}

/// Aggregate of one event over all trials. For `ExpectedValue` rows `frequency` is the
/// per-trial mean of a count and the interval is a normal interval on that mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventEstimate {
    pub event: String,
    pub trials: u64,
    pub count: u64,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub analytic: Option<f64>,
    pub analytic_log2: Option<f64>,
    pub analytic_kind: AnalyticKind,
}

impl EventEstimate {
    fn probability(event: &str, count: u64, trials: u64, analytic: Option<LogBoundExponent<f64>>, kind: AnalyticKind) -> Self {
        let (ci_low, ci_high) = wilson_interval(count, trials, Z_99);
        Self {
            event: event.to_string(),
            trials,
            count,
            frequency: if trials == 0 { 0.0 } else { count as f64 / trials as f64 },
            ci_low,
            ci_high,
            analytic: analytic.map(|a| a.linear()),
            analytic_log2: analytic.map(|a| a.log2()).filter(|v| v.is_finite()),
            analytic_kind: if analytic.is_some() { kind } else { AnalyticKind::None },
        }
    }

    fn mean(event: &str, sum: u64, sum_sq: u128, trials: u64, expected: f64) -> Self {
        let n = trials.max(1) as f64;
        let mean = sum as f64 / n;
        let var = (sum_sq as f64 / n - mean * mean).max(0.0);
        let half = Z_99 * (var / n).sqrt();
        Self {
            event: event.to_string(),
            trials,
            count: sum,
            frequency: mean,
            ci_low: mean - half,
            ci_high: mean + half,
            analytic: Some(expected),
            analytic_log2: None,
            analytic_kind: AnalyticKind::ExpectedValue,
        }
    }

    /// True when the analytic upper bound is not below the lower end of the interval.
    pub fn consistent_with_bound(&self) -> bool {
        match (self.analytic_kind, self.analytic) {
            (AnalyticKind::UpperBound, Some(b)) => self.ci_low <= b,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSummary {
    pub scenario: ScenarioKind,
    pub trials: u64,
    pub seed: u64,
    pub events: Vec<EventEstimate>,
}

impl ScenarioSummary {
    pub fn event(&self, name: &str) -> Option<&EventEstimate> {
        self.events.iter().find(|e| e.event == name)
    }
}

/// Evaluates `trial` for every index concurrently and returns the outcomes in index order;
/// the first failing trial (by index) decides the error.
fn run_trials<T, F>(trials: u64, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let outcomes: Vec<Result<T>> = (0..trials).into_par_iter().map(&trial).collect();
    outcomes.into_iter().collect()
}

fn random_key<R: Rng + ?Sized>(len: usize, origin: PartyId, rng: &mut R) -> KeyString {
    let mut bits = Vec::with_capacity(len);
    while bits.len() < len {
        let word: u64 = rng.random();
        bits.extend((0..64.min(len - bits.len())).map(|i| word >> i & 1 == 1));
    }
    KeyString::new(bits, origin, 0)
}

fn with_flips(key: &KeyString, positions: impl IntoIterator<Item = usize>, origin: PartyId) -> KeyString {
    let mut bits = key.bits.clone();
    for p in positions {
        bits[p] = !bits[p];
    }
    KeyString::new(bits, origin, key.message_slot)
}

/// Where the recipients' strings come from in an honest run.
#[derive(Debug, Clone, PartialEq)]
pub enum HonestSource {
    /// Two full key-generation runs of `n_pulses` pulses.
    Kgp {
        n_pulses: u64,
        channel: ChannelParams<f64>,
        decoy: DecoySettings<f64>,
        sizing: KeySizing,
    },
    /// Independent bit flips at `error_rate` on strings of length `signature_length`.
    Iid { error_rate: f64, signature_length: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct HonestConfig {
    pub source: HonestSource,
    pub s_a: f64,
    pub s_v: f64,
    /// When set, the `abort` row carries the `2 ε_PE` bound.
    pub eps_pe: Option<f64>,
}

/// Outcome of one honest run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HonestTrial {
    pub bob: Verdict,
    pub charlie: Verdict,
}

impl HonestTrial {
    pub fn transferred(&self) -> bool {
        self.bob.accepted && self.charlie.accepted
    }
}

fn check_thresholds(s_a: f64, s_v: f64) -> Result<()> {
    if !(0.0 < s_a && s_a < s_v && s_v < 0.5) {
        return Err(Error::Config(format!("thresholds must satisfy 0 < s_a < s_v < 1/2, got {s_a}, {s_v}")));
    }
    Ok(())
}

/// One honest run: key generation with both recipients, symmetrisation, Alice signs with
/// her true strings, Bob verifies at `s_a` and forwards, Charlie verifies at `s_v`.
pub fn run_honest_trial(cfg: &HonestConfig, master_seed: u64, trial: u64) -> Result<HonestTrial> {
    check_thresholds(cfg.s_a, cfg.s_v)?;
    let (alice_b, bob, alice_c, charlie) = match &cfg.source {
        HonestSource::Kgp { n_pulses, channel, decoy, sizing } => {
            let b = run_kgp_with_rng(*n_pulses, channel, decoy, sizing, PartyId::Bob, &mut stream_rng(master_seed, trial, Stream::KgpBob))?;
            let c = run_kgp_with_rng(*n_pulses, channel, decoy, sizing, PartyId::Charlie, &mut stream_rng(master_seed, trial, Stream::KgpCharlie))?;
            (b.sender_key, b.receiver_key, c.sender_key, c.receiver_key)
        }
        HonestSource::Iid { error_rate, signature_length } => {
            if !(0.0..=1.0).contains(error_rate) {
                return Err(Error::domain("error_rate", *error_rate, "[0, 1]"));
            }
            let l = *signature_length as usize;
            let iid = |stream: Stream, party: PartyId| {
                let mut rng = stream_rng(master_seed, trial, stream);
                let alice = random_key(l, PartyId::Alice, &mut rng);
                let flips: Vec<usize> = (0..l).filter(|_| rng.random_bool(*error_rate)).collect();
                let recv = with_flips(&alice, flips, party);
                (alice, recv)
            };
            let (ab, b) = iid(Stream::KgpBob, PartyId::Bob);
            let (ac, c) = iid(Stream::KgpCharlie, PartyId::Charlie);
            (ab, b, ac, c)
        }
    };
    let (s_bob, s_charlie) = symmetrise_with_rng(&bob, &charlie, &mut stream_rng(master_seed, trial, Stream::Symmetrise))?;
    let decl = Declaration { message: 0, sig_bob: alice_b, sig_charlie: alice_c };
    Ok(HonestTrial { bob: verify(&decl, &s_bob, cfg.s_a), charlie: verify(&decl, &s_charlie, cfg.s_v) })
}

pub fn run_honest_scenario(cfg: &HonestConfig, trials: u64, rng_seed: u64) -> Result<ScenarioSummary> {
    let records = run_trials(trials, |t| run_honest_trial(cfg, rng_seed, t))?;
    let accepted = records.iter().filter(|r| r.bob.accepted).count() as u64;
    let transferred = records.iter().filter(|r| r.transferred()).count() as u64;
    let charlie_rejects = records.iter().filter(|r| r.bob.accepted && !r.charlie.accepted).count() as u64;
    let abort_analytic = match (&cfg.source, cfg.eps_pe) {
        (HonestSource::Iid { error_rate, signature_length }, _) => {
            let half = signature_length / 2;
            let pass = binomial_cdf_below(half, *error_rate, cfg.s_a * half as f64);
            Some((LogBoundExponent::from_linear((1.0 - pass * pass).max(0.0)), AnalyticKind::Exact))
        }
        (HonestSource::Kgp { .. }, Some(eps)) => Some((honest_abort_bound(eps), AnalyticKind::UpperBound)),
        _ => None,
    };
    let (abort_value, abort_kind) = abort_analytic.map_or((None, AnalyticKind::None), |(v, k)| (Some(v), k));
    Ok(ScenarioSummary {
        scenario: ScenarioKind::Honest,
        trials,
        seed: rng_seed,
        events: vec![
            EventEstimate::probability("bob_accept", accepted, trials, None, AnalyticKind::None),
            EventEstimate::probability("transfer", transferred, trials, None, AnalyticKind::None),
            EventEstimate::probability("abort", trials - accepted, trials, abort_value, abort_kind),
            EventEstimate::probability("charlie_reject_after_accept", charlie_rejects, trials, None, AnalyticKind::None),
        ],
    })
}

/// Parameters of the repudiation experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepudiationConfig {
    pub strategy: AdversaryStrategy<f64>,
    pub signature_length: u64,
    pub s_a: f64,
    pub s_v: f64,
}

/// One repudiation attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepudiationTrial {
    pub bob: Verdict,
    pub charlie: Verdict,
    /// Mismatches planted against Charlie's string that stayed in Charlie's kept half.
    pub planted_in_charlie_kept: usize,
}

impl RepudiationTrial {
    pub fn repudiated(&self) -> bool {
        self.bob.accepted && !self.charlie.accepted
    }
}

fn planted(rate: f64, l: u64) -> Result<usize> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::domain("mismatch rate", rate, "[0, 1]"));
    }
    Ok((rate * l as f64).round() as usize)
}

/// Alice declares strings that differ from Bob's and Charlie's in exactly
/// `round(e_B L)` and `round(e_C L)` uniformly placed positions.
pub fn run_repudiation_trial(cfg: &RepudiationConfig, master_seed: u64, trial: u64) -> Result<RepudiationTrial> {
    check_thresholds(cfg.s_a, cfg.s_v)?;
    let l = cfg.signature_length;
    if l == 0 || l % 2 != 0 {
        return Err(Error::Config(format!("signature length {l} must be even and positive")));
    }
    let (m_b, m_c) = (planted(cfg.strategy.e_b, l)?, planted(cfg.strategy.e_c, l)?);
    let mut rng = stream_rng(master_seed, trial, Stream::Adversary);
    let bob = random_key(l as usize, PartyId::Bob, &mut rng);
    let charlie = random_key(l as usize, PartyId::Charlie, &mut rng);
    let sig_bob = with_flips(&bob, index::sample(&mut rng, l as usize, m_b), PartyId::Alice);
    let sig_charlie = with_flips(&charlie, index::sample(&mut rng, l as usize, m_c), PartyId::Alice);
    let (s_bob, s_charlie) = symmetrise_with_rng(&bob, &charlie, &mut stream_rng(master_seed, trial, Stream::Symmetrise))?;
    let decl = Declaration { message: 0, sig_bob, sig_charlie };
    let bob_v = verify(&decl, &s_bob, cfg.s_a);
    let charlie_v = verify(&decl, &s_charlie, cfg.s_v);
    Ok(RepudiationTrial { bob: bob_v, charlie: charlie_v, planted_in_charlie_kept: charlie_v.mismatches_direct })
}

pub fn run_repudiation_scenario(cfg: &RepudiationConfig, trials: u64, rng_seed: u64) -> Result<ScenarioSummary> {
    let records = run_trials(trials, |t| run_repudiation_trial(cfg, rng_seed, t))?;
    let rep = records.iter().filter(|r| r.repudiated()).count() as u64;
    let bob_acc = records.iter().filter(|r| r.bob.accepted).count() as u64;
    let sum: u64 = records.iter().map(|r| r.planted_in_charlie_kept as u64).sum();
    let sum_sq: u128 = records.iter().map(|r| (r.planted_in_charlie_kept as u128).pow(2)).sum();
    let bound = repudiation_strategy_bounds(&cfg.strategy, cfg.s_a, cfg.s_v, cfg.signature_length)?;
    let m_c = planted(cfg.strategy.e_c, cfg.signature_length)? as f64;
    Ok(ScenarioSummary {
        scenario: ScenarioKind::Repudiation,
        trials,
        seed: rng_seed,
        events: vec![
            EventEstimate::probability("repudiation", rep, trials, Some(bound), AnalyticKind::UpperBound),
            EventEstimate::probability("bob_accept", bob_acc, trials, None, AnalyticKind::None),
            EventEstimate::mean("planted_in_charlie_kept_half", sum, sum_sq, trials, m_c / 2.0),
        ],
    })
}

/// Parameters of the guessing-forger experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForgeryConfig {
    pub forger_error_rate: f64,
    pub signature_length: u64,
    pub s_v: f64,
}

/// Bob forges a declaration for Charlie: his own strings verbatim (so the half he forwarded
/// passes) and a guess of Charlie's string with independent errors at the configured rate.
pub fn run_forgery_trial(cfg: &ForgeryConfig, master_seed: u64, trial: u64) -> Result<Verdict> {
    let l = cfg.signature_length;
    if l == 0 || l % 2 != 0 {
        return Err(Error::Config(format!("signature length {l} must be even and positive")));
    }
    let q = cfg.forger_error_rate;
    if !(0.0..=0.5).contains(&q) {
        return Err(Error::domain("forger_error_rate", q, "[0, 1/2]"));
    }
    let mut rng = stream_rng(master_seed, trial, Stream::Adversary);
    let bob = random_key(l as usize, PartyId::Bob, &mut rng);
    let charlie = random_key(l as usize, PartyId::Charlie, &mut rng);
    let flips: Vec<usize> = (0..l as usize).filter(|_| rng.random_bool(q)).collect();
    let guess = with_flips(&charlie, flips, PartyId::Bob);
    let (_, s_charlie) = symmetrise_with_rng(&bob, &charlie, &mut stream_rng(master_seed, trial, Stream::Symmetrise))?;
    let decl = Declaration { message: 1, sig_bob: bob, sig_charlie: guess };
    Ok(verify(&decl, &s_charlie, cfg.s_v))
}

pub fn run_forgery_scenario(cfg: &ForgeryConfig, trials: u64, rng_seed: u64) -> Result<ScenarioSummary> {
    let records = run_trials(trials, |t| run_forgery_trial(cfg, rng_seed, t))?;
    let wins = records.iter().filter(|v| v.accepted).count() as u64;
    let half = cfg.signature_length / 2;
    let exact = binomial_cdf_below(half, cfg.forger_error_rate, cfg.s_v * half as f64);
    Ok(ScenarioSummary {
        scenario: ScenarioKind::Forgery,
        trials,
        seed: rng_seed,
        events: vec![EventEstimate::probability(
            "forgery",
            wins,
            trials,
            Some(LogBoundExponent::from_linear(exact)),
            AnalyticKind::Exact,
        )],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn wilson_basics() {
        let (lo, hi) = wilson_interval(0, 100, Z_99);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.07);
        let (lo, hi) = wilson_interval(50, 100, Z_99);
        assert!(lo < 0.5 && hi > 0.5);
    }

    #[test]
    fn binomial_cdf_values() {
        // P(Bin(4, 1/2) < 2) = (1 + 4)/16
        assert_abs_diff_eq!(binomial_cdf_below(4, 0.5, 2.0), 5.0 / 16.0, epsilon = 1e-14);
        assert_abs_diff_eq!(binomial_cdf_below(4, 0.5, 1.5), 5.0 / 16.0, epsilon = 1e-14);
        assert_eq!(binomial_cdf_below(10, 0.0, 1.0), 1.0);
        assert_eq!(binomial_cdf_below(10, 0.3, 0.0), 0.0);
        assert_abs_diff_eq!(binomial_cdf_below(10, 0.3, 11.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn honest_noiseless_always_transfers() {
        let cfg = HonestConfig {
            source: HonestSource::Iid { error_rate: 0.0, signature_length: 200 },
            s_a: 0.05,
            s_v: 0.1,
            eps_pe: None,
        };
        let s = run_honest_scenario(&cfg, 100, 1).unwrap();
        assert_eq!(s.event("transfer").unwrap().frequency, 1.0);
    }

    #[test]
    fn honest_forwarded_half_consistency() {
        // Bob's verdict on the half Charlie forwarded equals Charlie's count on those same
        // positions against the same declaration.
        let cfg = HonestConfig {
            source: HonestSource::Iid { error_rate: 0.05, signature_length: 400 },
            s_a: 0.08,
            s_v: 0.12,
            eps_pe: None,
        };
        for t in 0..20 {
            let mut rng = stream_rng(3, t, Stream::KgpBob);
            let alice = random_key(400, PartyId::Alice, &mut rng);
            let flips: Vec<usize> = (0..400).filter(|_| rng.random_bool(0.05)).collect();
            let bob = with_flips(&alice, flips, PartyId::Bob);
            let mut rng = stream_rng(3, t, Stream::KgpCharlie);
            let alice_c = random_key(400, PartyId::Alice, &mut rng);
            let charlie = with_flips(&alice_c, (0..400).filter(|_| rng.random_bool(0.05)).collect::<Vec<_>>(), PartyId::Charlie);
            let (sb, sc) = symmetrise_with_rng(&bob, &charlie, &mut stream_rng(3, t, Stream::Symmetrise)).unwrap();
            let decl = Declaration { message: 0, sig_bob: alice.clone(), sig_charlie: alice_c.clone() };
            let vb = verify(&decl, &sb, cfg.s_a);
            let forwarded_to_bob: Vec<usize> = sb.positions(super::super::types::Provenance::Forwarded).collect();
            let charlie_view = forwarded_to_bob.iter().filter(|&&p| charlie.bits[p] != alice_c.bits[p]).count();
            assert_eq!(vb.mismatches_forwarded, charlie_view);
            let _ = sc;
        }
        assert!(run_honest_trial(&cfg, 3, 0).is_ok());
    }

    #[test]
    fn repudiation_extremes() {
        let cfg = RepudiationConfig {
            strategy: AdversaryStrategy::repudiation(0.0, 0.0),
            signature_length: 500,
            s_a: 0.05,
            s_v: 0.1,
        };
        let s = run_repudiation_scenario(&cfg, 200, 5).unwrap();
        assert_eq!(s.event("repudiation").unwrap().count, 0);
        let cfg = RepudiationConfig { strategy: AdversaryStrategy::repudiation(0.0, 0.15), ..cfg };
        let s = run_repudiation_scenario(&cfg, 2000, 6).unwrap();
        let rep = s.event("repudiation").unwrap();
        assert!(rep.consistent_with_bound(), "{rep:?}");
    }

    #[test]
    fn forgery_limits() {
        let cfg = ForgeryConfig { forger_error_rate: 0.0, signature_length: 1000, s_v: 0.06 };
        assert_eq!(run_forgery_scenario(&cfg, 50, 1).unwrap().events[0].frequency, 1.0);
        let cfg = ForgeryConfig { forger_error_rate: 0.1, signature_length: 4000, s_v: 0.06 };
        assert_eq!(run_forgery_scenario(&cfg, 200, 2).unwrap().events[0].count, 0);
        let cfg = ForgeryConfig { forger_error_rate: 0.1, signature_length: 1000, s_v: 0.1 };
        let e = run_forgery_scenario(&cfg, 4000, 3).unwrap().events[0].clone();
        // P(Bin(500, 0.1) < 50) sits just under one half.
        assert!(e.ci_low <= e.analytic.unwrap() && e.analytic.unwrap() <= e.ci_high, "{e:?}");
        assert!((e.frequency - 0.5).abs() < 0.06);
    }

    #[test]
    fn scenarios_are_deterministic() {
        let cfg = RepudiationConfig {
            strategy: AdversaryStrategy::repudiation(0.075, 0.075),
            signature_length: 500,
            s_a: 0.05,
            s_v: 0.1,
        };
        assert_eq!(run_repudiation_scenario(&cfg, 300, 42).unwrap(), run_repudiation_scenario(&cfg, 300, 42).unwrap());
    }
}
