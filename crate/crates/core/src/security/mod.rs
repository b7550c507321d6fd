//! Security quantities of the signature scheme: min-entropy of the key block, the forger's
//! minimum error rate `p_E`, verification thresholds, and the honest-abort, forging and
//! repudiation bounds; plus the search for the shortest signature meeting a target level.

pub mod oracle;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{expected_statistics, ChannelParams, DecoySettings, SiftingConvention};
use crate::error::{Error, Result};
use crate::finite_size::{estimate, CountStatistics, EstimatorOptions, FiniteSizeEstimates, ZErrorSample};
use crate::math::{
    binary_entropy_unchecked, inverse_binary_entropy, log2_binom_tail, BinomTailMethod, GammaClamp,
    LogBoundExponent,
};
use crate::scalar::Scalar;

/// Relative slack when comparing a bound against the target level. The fixed forging terms
/// `a + ε/a + 8 ε_PE` can equal the target exactly, and a strict float comparison would then
/// depend on rounding.
pub const TARGET_REL_TOL: f64 = 1e-9;

/// Confidence parameters of the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecurityParams<T> {
    /// Failure probability of each parameter-estimation bound.
    pub eps_pe: T,
    /// Smoothing parameter `ε` of the min-entropy.
    pub eps_smooth: T,
    /// Markov-inequality parameter `a` of the forging bound.
    pub markov_a: T,
    /// Share `α₁` of the smoothing budget spent on the phase-error correction.
    pub alpha1: T,
    /// Level every bound must reach in the signature-length search.
    pub target_level: T,
    /// Bits subtracted from the min-entropy before use (0 reproduces the plain estimate).
    pub min_entropy_offset_bits: T,
}

impl<T: Scalar> SecurityParams<T> {
    /// `ε_PE = a = 1e-5`, `ε = 1e-10`, `α₁ = ε/4`, target `1e-4`.
    pub fn reference() -> Self {
        let eps = T::lit(1e-10);
        Self {
            eps_pe: T::lit(1e-5),
            eps_smooth: eps,
            markov_a: T::lit(1e-5),
            alpha1: eps / T::lit(4.0),
            target_level: T::lit(1e-4),
            min_entropy_offset_bits: T::zero(),
        }
    }

    /// `α₂ = α₃`, splitting what `2α₁` leaves of `ε` evenly in three so that
    /// `ε > 2α₁ + α₂ + α₃` holds strictly.
    pub fn alpha_rest(&self) -> T {
        (self.eps_smooth - T::lit(2.0) * self.alpha1) / T::lit(3.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps_pe", self.eps_pe),
            ("eps_smooth", self.eps_smooth),
            ("markov_a", self.markov_a),
            ("alpha1", self.alpha1),
            ("target_level", self.target_level),
        ] {
            let ok = if name == "target_level" {
                v > T::zero() && v <= T::one()
            } else {
                v > T::zero() && v < T::one()
            };
            if !ok {
                return Err(Error::domain(name, v.as_f64(), "(0, 1)"));
            }
        }
        if !(T::lit(2.0) * self.alpha1 < self.eps_smooth) {
            return Err(Error::Config(format!(
                "alpha1 = {} leaves no room for the other smoothing terms of eps = {}",
                self.alpha1, self.eps_smooth
            )));
        }
        if !(self.min_entropy_offset_bits >= T::zero() && self.min_entropy_offset_bits.is_finite()) {
            return Err(Error::domain(
                "min_entropy_offset_bits",
                self.min_entropy_offset_bits.as_f64(),
                ">= 0",
            ));
        }
        Ok(())
    }

    pub fn convert<U: Scalar>(&self) -> SecurityParams<U> {
        let c = |x: T| U::lit(x.as_f64());
        SecurityParams {
            eps_pe: c(self.eps_pe),
            eps_smooth: c(self.eps_smooth),
            markov_a: c(self.markov_a),
            alpha1: c(self.alpha1),
            target_level: c(self.target_level),
            min_entropy_offset_bits: c(self.min_entropy_offset_bits),
        }
    }
}

/// Modelling choices that are not security parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions<T> {
    pub sifting: SiftingConvention,
    /// Error-correction inefficiency for the key-rate comparison, in `[1, 2]`.
    pub f_ec: T,
    /// `k / n`: parameter-estimation bits per key-block bit.
    pub sample_ratio: T,
    pub gamma_clamp: GammaClamp,
    pub z_error_sample: ZErrorSample,
}

impl<T: Scalar> Default for AnalysisOptions<T> {
    fn default() -> Self {
        Self {
            sifting: SiftingConvention::SinglePx,
            f_ec: T::lit(1.2),
            sample_ratio: T::lit(0.1),
            gamma_clamp: GammaClamp::Abort,
            z_error_sample: ZErrorSample::TotalErrors,
        }
    }
}

impl<T: Scalar> AnalysisOptions<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_ec >= T::one() && self.f_ec <= T::lit(2.0)) {
            return Err(Error::domain("f_ec", self.f_ec.as_f64(), "[1, 2]"));
        }
        if !(self.sample_ratio > T::zero() && self.sample_ratio <= T::one()) {
            return Err(Error::domain("sample_ratio", self.sample_ratio.as_f64(), "(0, 1]"));
        }
        Ok(())
    }

    pub fn convert<U: Scalar>(&self) -> AnalysisOptions<U> {
        AnalysisOptions {
            sifting: self.sifting,
            f_ec: U::lit(self.f_ec.as_f64()),
            sample_ratio: U::lit(self.sample_ratio.as_f64()),
            gamma_clamp: self.gamma_clamp,
            z_error_sample: self.z_error_sample,
        }
    }
}

/// Result of one full analysis. Threshold-dependent fields are `None` when the run is
/// infeasible.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct SecurityReport<T> {
    pub n_pulses: Option<u64>,
    pub signature_length: u64,
    pub block_length: u64,
    pub sample_length: u64,
    pub expected_x_raw: Option<T>,
    pub observed_ex: T,
    pub e_x_upper: T,
    pub h_min: T,
    pub p_e: T,
    pub feasible: bool,
    pub s_a: Option<T>,
    pub s_v: Option<T>,
    pub p_abort: LogBoundExponent<T>,
    pub p_forge: Option<LogBoundExponent<T>>,
    pub p_repudiation: Option<LogBoundExponent<T>>,
    pub qkd_key_length: T,
    pub binom_tail_method: Option<BinomTailMethod>,
    pub alpha_rest: T,
    pub estimates: FiniteSizeEstimates<T>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> SecurityReport<T> {
    /// True when the run is feasible and every bound, capped at 1, is at or below `target`.
    pub fn meets(&self, target: T) -> bool {
        let limit = target * (T::one() + T::lit(TARGET_REL_TOL));
        let ok = |b: Option<LogBoundExponent<T>>| b.is_some_and(|b| b.linear() <= limit);
        self.feasible && ok(Some(self.p_abort)) && ok(self.p_forge) && ok(self.p_repudiation)
    }
}

/// `H ≈ s_X0 + s_X1 (1 - h(φ))`.
pub fn min_entropy<T: Scalar>(s_x0: T, s_x1: T, phi_u: T) -> Result<T> {
    if !(s_x0 >= T::zero() && s_x1 >= T::zero()) {
        return Err(Error::domain("s_x", s_x0.min(s_x1).as_f64(), ">= 0"));
    }
    if !(phi_u >= T::zero() && phi_u <= T::half()) {
        return Err(Error::domain("phi_u", phi_u.as_f64(), "[0, 1/2]"));
    }
    Ok(s_x0 + s_x1 * (T::one() - binary_entropy_unchecked(phi_u)))
}

/// `p_E` together with whether the entropy budget had to be capped at one bit per bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForgerErrorRate<T> {
    pub p_e: T,
    pub capped: bool,
}

/// Solves `h(p_E) = c0 + c1 (1 - h(φ))` on `[0, 1/2]`.
pub fn solve_pe<T: Scalar>(c0: T, c1: T, phi_u: T) -> Result<ForgerErrorRate<T>> {
    let budget = entropy_budget(c0, c1, phi_u)?;
    if budget > T::one() {
        return Ok(ForgerErrorRate { p_e: T::half(), capped: true });
    }
    Ok(ForgerErrorRate { p_e: inverse_binary_entropy(budget)?, capped: false })
}

fn entropy_budget<T: Scalar>(c0: T, c1: T, phi_u: T) -> Result<T> {
    if !(c0 >= T::zero() && c1 >= T::zero()) {
        return Err(Error::domain("c0/c1", c0.min(c1).as_f64(), ">= 0"));
    }
    if !(phi_u >= T::zero() && phi_u <= T::half()) {
        return Err(Error::domain("phi_u", phi_u.as_f64(), "[0, 1/2]"));
    }
    Ok(c0 + c1 * (T::one() - binary_entropy_unchecked(phi_u)))
}

/// `c0 + c1 (1 - h(φ)) - h(e_X^U) > 0`.
pub fn feasible<T: Scalar>(c0: T, c1: T, phi_u: T, e_x_upper: T) -> Result<bool> {
    if !(e_x_upper >= T::zero() && e_x_upper <= T::one()) {
        return Err(Error::domain("e_x_upper", e_x_upper.as_f64(), "[0, 1]"));
    }
    Ok(entropy_budget(c0, c1, phi_u)? - binary_entropy_unchecked(e_x_upper) > T::zero())
}

/// Splits `(e_X^U, p_E)` into thirds: `s_a` at one third, `s_v` at two thirds.
pub fn choose_thresholds<T: Scalar>(e_x_upper: T, p_e: T) -> Result<(T, T)> {
    if !(e_x_upper < p_e) {
        return Err(Error::Infeasible(format!(
            "upper error bound {e_x_upper} is not below the forger error rate {p_e}"
        )));
    }
    let gap = p_e - e_x_upper;
    let third = T::lit(3.0);
    Ok((e_x_upper + gap / third, e_x_upper + T::lit(2.0) * gap / third))
}

/// `P(abort) ≤ 2 ε_PE`.
pub fn honest_abort_bound<T: Scalar>(eps_pe: T) -> LogBoundExponent<T> {
    LogBoundExponent::from_log2(T::one() + eps_pe.log2())
}

/// Forging bound with its ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct ForgingBound<T> {
    pub total: LogBoundExponent<T>,
    /// `ε_F = (b(n, r) 2^(-H) + ε) / a`.
    pub eps_f: LogBoundExponent<T>,
    /// `log2 b(n, r) - H`, the exponent of the guessing term.
    pub guessing_log2: T,
    pub method: BinomTailMethod,
}

/// `P(forge) ≤ a + (b(n, r) 2^(-H) + ε)/a + 8 ε_PE` with `n = L/2` and
/// `r = floor(s_v L / 2)`. The whole expression is evaluated in log space.
pub fn forging_bound<T: Scalar>(
    h_min: T,
    signature_length: u64,
    s_v: T,
    params: &SecurityParams<T>,
) -> Result<ForgingBound<T>> {
    if signature_length % 2 != 0 {
        return Err(Error::Config(format!("signature length {signature_length} is odd")));
    }
    if !(s_v >= T::zero() && s_v <= T::half()) {
        return Err(Error::domain("s_v", s_v.as_f64(), "[0, 1/2]"));
    }
    let n = signature_length / 2;
    let r = (s_v * T::from_count(n)).floor().to_u64().unwrap_or(0).min(n);
    let tail = log2_binom_tail::<T>(n, r)?;
    let guessing_log2 = tail.log2 - h_min;
    let a_log2 = params.markov_a.log2();
    let eps_f = LogBoundExponent::sum([
        LogBoundExponent::from_log2(guessing_log2),
        LogBoundExponent::from_linear(params.eps_smooth),
    ])
    .shift(-a_log2);
    let total = LogBoundExponent::sum([
        LogBoundExponent::from_log2(a_log2),
        eps_f,
        LogBoundExponent::from_linear(T::lit(8.0) * params.eps_pe),
    ]);
    Ok(ForgingBound { total, eps_f, guessing_log2, method: tail.method })
}

/// `P(repudiation) ≤ 2 exp(-(s_v - s_a)² L / 4)`.
pub fn repudiation_bound<T: Scalar>(s_a: T, s_v: T, signature_length: u64) -> LogBoundExponent<T> {
    let d = s_v - s_a;
    LogBoundExponent::from_log2(T::one() - d * d * T::from_count(signature_length) / (T::lit(4.0) * T::LN_2()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    RepudiatingAlice,
    GuessingForger,
}

/// A dishonest party's behaviour. For a repudiating Alice, `e_b` and `e_c` are the mismatch
/// rates her declared signature has against Bob's and Charlie's original strings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdversaryStrategy<T> {
    pub kind: StrategyKind,
    pub e_b: T,
    pub e_c: T,
    pub forger_error_rate: T,
}

impl<T: Scalar> AdversaryStrategy<T> {
    pub fn repudiation(e_b: T, e_c: T) -> Self {
        Self { kind: StrategyKind::RepudiatingAlice, e_b, e_c, forger_error_rate: T::zero() }
    }

    pub fn forgery(rate: T) -> Self {
        Self { kind: StrategyKind::GuessingForger, e_b: T::zero(), e_c: T::zero(), forger_error_rate: rate }
    }
}

/// Bound on the success of a specific repudiation strategy: the tightest of
///
/// * Bob accepts Charlie's forwarded half although `e_C > s_a`: `exp(-(e_C - s_a)² L)`;
/// * Bob accepts his direct half although `e_B > s_a`: `exp(-(e_B - s_a)² L)`;
/// * Charlie rejects one of his halves although `e_B, e_C < s_v`:
///   `exp(-(s_v - e_C)² L) + exp(-(s_v - e_B)² L)`.
///
/// Each term is a Hoeffding tail for the hypergeometric count of planted mismatches that
/// land in an `L/2`-element half.
pub fn repudiation_strategy_bounds<T: Scalar>(
    strategy: &AdversaryStrategy<T>,
    s_a: T,
    s_v: T,
    signature_length: u64,
) -> Result<LogBoundExponent<T>> {
    if strategy.kind != StrategyKind::RepudiatingAlice {
        return Err(Error::Config("strategy is not a repudiation strategy".into()));
    }
    let l = T::from_count(signature_length);
    let branch = |d: T| LogBoundExponent::from_log2(-d * d * l / T::LN_2());
    let mut best = LogBoundExponent::from_log2(T::zero());
    let mut take = |b: LogBoundExponent<T>| {
        if b.log2() < best.log2() {
            best = b;
        }
    };
    if strategy.e_c > s_a {
        take(branch(strategy.e_c - s_a));
    }
    if strategy.e_b > s_a {
        take(branch(strategy.e_b - s_a));
    }
    if strategy.e_b < s_v && strategy.e_c < s_v {
        take(LogBoundExponent::sum([branch(s_v - strategy.e_c), branch(s_v - strategy.e_b)]));
    }
    Ok(best)
}

/// `l = n (c0 + c1 (1 - h(φ)) - f_EC h(e_X^U))`; negative means no key.
pub fn qkd_key_length<T: Scalar>(n: u64, c0: T, c1: T, phi_u: T, e_x_upper: T, f_ec: T) -> Result<T> {
    if !(f_ec >= T::one()) {
        return Err(Error::domain("f_ec", f_ec.as_f64(), ">= 1"));
    }
    let budget = entropy_budget(c0, c1, phi_u)?;
    Ok(T::from_count(n) * (budget - f_ec * binary_entropy_unchecked(e_x_upper)))
}

/// Finishes the analysis from observed counts.
pub fn analyze_counts<T: Scalar>(
    stats: &CountStatistics<T>,
    decoy: &DecoySettings<T>,
    params: &SecurityParams<T>,
    opts: &AnalysisOptions<T>,
) -> Result<SecurityReport<T>> {
    params.validate()?;
    opts.validate()?;
    let est = estimate(
        stats,
        decoy,
        &EstimatorOptions {
            eps_pe: params.eps_pe,
            alpha1: params.alpha1,
            gamma_clamp: opts.gamma_clamp,
            z_error_sample: opts.z_error_sample,
        },
    )?;
    let mut warnings: Vec<String> = est.clamped.iter().map(|c| format!("{c} clamped into range")).collect();
    let n = est.block_length;
    let nf = T::from_count(n);
    let raw_h = min_entropy(est.s_x0_lower, est.s_x1_lower, est.phi_x1_upper)?;
    let h_min = (raw_h - params.min_entropy_offset_bits).max(T::zero());
    let budget = h_min / nf;
    let p_e = if budget > T::one() {
        warnings.push("entropy budget above 1 bit per bit; p_E capped at 1/2".into());
        T::half()
    } else {
        inverse_binary_entropy(budget)?
    };
    let is_feasible = budget - binary_entropy_unchecked(est.e_x_upper) > T::zero();
    let qkd = nf * (budget - opts.f_ec * binary_entropy_unchecked(est.e_x_upper));
    let p_abort = honest_abort_bound(params.eps_pe);
    let l = stats.signature_length;

    let (s_a, s_v, p_forge, p_repud, method) = if is_feasible {
        let (s_a, s_v) = choose_thresholds(est.e_x_upper, p_e)?;
        let forge = forging_bound(h_min, l, s_v, params)?;
        if forge.method == BinomTailMethod::EntropyApprox {
            // Kept for transparency: the entropy form of the binomial tail is an approximation.
            warnings.push("binomial tail evaluated with the n·h(r/n) approximation".into());
        }
        let rep = repudiation_bound(s_a, s_v, l);
        (Some(s_a), Some(s_v), Some(forge.total), Some(rep), Some(forge.method))
    } else {
        warnings.push(format!(
            "infeasible: p_E = {p_e} does not exceed the error bound {}",
            est.e_x_upper
        ));
        (None, None, None, None, None)
    };

    Ok(SecurityReport {
        n_pulses: None,
        signature_length: l,
        block_length: n,
        sample_length: stats.sample_length,
        expected_x_raw: None,
        observed_ex: est.observed_ex,
        e_x_upper: est.e_x_upper,
        h_min,
        p_e,
        feasible: is_feasible,
        s_a,
        s_v,
        p_abort,
        p_forge,
        p_repudiation: p_repud,
        qkd_key_length: qkd,
        binom_tail_method: method,
        alpha_rest: params.alpha_rest(),
        estimates: est,
        warnings,
    })
}

/// Key block, signature length and sample size carved from `raw` sifted X events:
/// `n = floor(raw / (2 + ratio))`, `L = 2n`, `k = floor(ratio · n)`.
pub fn split_raw_key<T: Scalar>(raw: T, sample_ratio: T) -> Result<(u64, u64)> {
    let n = (raw / (T::lit(2.0) + sample_ratio)).floor().to_u64().unwrap_or(0);
    let k = (sample_ratio * T::from_count(n)).floor().to_u64().unwrap_or(0);
    if n == 0 || k == 0 {
        return Err(Error::InsufficientCounts { needed: 3, available: raw.to_u64().unwrap_or(0) });
    }
    Ok((2 * n, k))
}

/// Full pipeline on mean-value statistics for `n_pulses` pulses.
pub fn analyze_expected<T: Scalar>(
    n_pulses: u64,
    channel: &ChannelParams<T>,
    decoy: &DecoySettings<T>,
    params: &SecurityParams<T>,
    opts: &AnalysisOptions<T>,
) -> Result<SecurityReport<T>> {
    opts.validate()?;
    let exp = expected_statistics(n_pulses, channel, decoy, opts.sifting)?;
    let (l, k) = split_raw_key(exp.expected_x_raw, opts.sample_ratio)?;
    let stats = CountStatistics::from_expected(&exp, l, k)?;
    let mut report = analyze_counts(&stats, decoy, params, opts)?;
    report.n_pulses = Some(n_pulses);
    report.expected_x_raw = Some(exp.expected_x_raw);
    if opts.sifting == SiftingConvention::SinglePx {
        report.warnings.push(
            "single_px sifting keeps p_X of detections; independent basis choices would keep p_X^2".into(),
        );
    }
    Ok(report)
}

/// Grid used by [`required_signature_length`]: `n_pulses = round(10^e)` for `e` from
/// `min_exp` to `max_exp` in steps of `1/points_per_decade`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub points_per_decade: u32,
    pub min_exp: f64,
    pub max_exp: f64,
    /// Bisect between the last failing and first passing grid point.
    pub refine: bool,
    /// Relative width at which bisection stops.
    pub rel_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { points_per_decade: 10, min_exp: 6.0, max_exp: 14.0, refine: false, rel_tol: 1e-3 }
    }
}

impl SearchOptions {
    pub fn grid(&self) -> Vec<u64> {
        let steps = ((self.max_exp - self.min_exp) * f64::from(self.points_per_decade)).round() as u64;
        let mut out: Vec<u64> = (0..=steps)
            .map(|i| 10f64.powf(self.min_exp + i as f64 / f64::from(self.points_per_decade)).round() as u64)
            .collect();
        out.dedup();
        out
    }

    fn validate(&self) -> Result<()> {
        if self.points_per_decade == 0 || !(self.min_exp < self.max_exp) || self.min_exp < 0.0 || self.max_exp > 18.0 {
            return Err(Error::Config(format!("invalid search grid {self:?}")));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!("search rel_tol {} not in (0, 1)", self.rel_tol)));
        }
        Ok(())
    }
}

/// Outcome of the signature-length search.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Scalar + Serialize"))]
pub struct LengthSearch<T> {
    pub signature_length: u64,
    pub n_pulses: u64,
    pub report: SecurityReport<T>,
    /// Grid points evaluated and whether each met the target.
    pub grid: Vec<(u64, bool)>,
}

/// Smallest pulse count on the search grid at which the run is feasible and the abort,
/// forging and repudiation bounds all reach `params.target_level`.
pub fn required_signature_length<T: Scalar>(
    channel: &ChannelParams<T>,
    decoy: &DecoySettings<T>,
    params: &SecurityParams<T>,
    opts: &AnalysisOptions<T>,
    search: &SearchOptions,
) -> Result<LengthSearch<T>> {
    params.validate()?;
    opts.validate()?;
    search.validate()?;
    let grid = search.grid();
    let largest = *grid.last().expect("non-empty grid");
    let asymptotic = analyze_expected(largest, channel, decoy, params, opts)?;
    if !asymptotic.feasible {
        return Err(Error::Infeasible(format!(
            "no positive signature rate even at {largest} pulses: p_E = {} vs error bound {}",
            asymptotic.p_e, asymptotic.e_x_upper
        )));
    }
    let target = params.target_level;
    let passes = |n: u64| -> Option<SecurityReport<T>> {
        analyze_expected(n, channel, decoy, params, opts).ok().filter(|r| r.meets(target))
    };
    // Grid points are independent; collecting keeps grid order whatever the schedule.
    let outcomes: Vec<Option<SecurityReport<T>>> = grid.par_iter().map(|&n| passes(n)).collect();
    let first = outcomes
        .iter()
        .position(Option::is_some)
        .ok_or_else(|| Error::SearchExhausted(format!("target {target} not reached by {largest} pulses")))?;
    let table: Vec<(u64, bool)> = grid.iter().zip(&outcomes).map(|(&n, o)| (n, o.is_some())).collect();
    let mut best_n = grid[first];
    let mut best = outcomes[first].clone().expect("passing point");
    if search.refine && first > 0 {
        let mut lo = grid[first - 1];
        let mut hi = best_n;
        while (hi - lo) as f64 > search.rel_tol * hi as f64 && hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            match passes(mid) {
                Some(r) => {
                    hi = mid;
                    best = r;
                }
                None => lo = mid,
            }
        }
        best_n = hi;
    }
    Ok(LengthSearch { signature_length: best.signature_length, n_pulses: best_n, report: best, grid: table })
}
