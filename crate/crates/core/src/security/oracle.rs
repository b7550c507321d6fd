//! Brute-force check of the guessing bound on explicit classical distributions.
//!
//! For a joint distribution of an `n`-bit string `X` and a side-information label `F`, the
//! best strategy that must land within Hamming distance `r` of `X` picks, for every label,
//! the centre whose radius-`r` ball carries the most probability. The bound under test is
//! `P(success) ≤ b(n, r) · 2^(-H_min(X|F))`.

use rand::Rng;

use crate::error::{Error, Result};

/// Largest string length the oracle accepts; the search is `O(labels · 4^n)`.
pub const MAX_ORACLE_BITS: u32 = 12;

/// `P(x, f)` stored label-major: index `f · 2^n + x`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    n_bits: u32,
    n_labels: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(n_bits: u32, n_labels: usize, probs: Vec<f64>) -> Result<Self> {
        if n_bits == 0 || n_bits > MAX_ORACLE_BITS {
            return Err(Error::domain("n_bits", f64::from(n_bits), "1..=12"));
        }
        if n_labels == 0 || probs.len() != n_labels << n_bits {
            return Err(Error::LengthMismatch(format!(
                "{} probabilities for {n_labels} labels of {n_bits}-bit strings",
                probs.len()
            )));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::Config("probabilities must be non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!("joint distribution sums to {total}, not 1")));
        }
        Ok(Self { n_bits, n_labels, probs })
    }

    /// `X` uniform and independent of a single label.
    pub fn uniform(n_bits: u32) -> Result<Self> {
        let size = 1usize << n_bits.min(MAX_ORACLE_BITS + 1);
        Self::new(n_bits, 1, vec![1.0 / size as f64; size])
    }

    /// Random distribution with weights `U^k` for a per-instance sharpness `k`, so instances
    /// range from near-uniform to sharply peaked.
    pub fn random<R: Rng + ?Sized>(n_bits: u32, n_labels: usize, rng: &mut R) -> Result<Self> {
        let size = n_labels << n_bits.min(MAX_ORACLE_BITS + 1);
        let sharpness: f64 = rng.random_range(0.5..12.0);
        let mut probs: Vec<f64> = (0..size).map(|_| rng.random::<f64>().powf(sharpness)).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        // Absorb the rounding residue so the normalisation check is exact to 1e-12.
        let residue = 1.0 - probs.iter().sum::<f64>();
        if let Some(max) = probs.iter_mut().max_by(|a, b| a.total_cmp(b)) {
            *max += residue;
        }
        Self::new(n_bits, n_labels, probs)
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    fn label(&self, f: usize) -> &[f64] {
        let size = 1usize << self.n_bits;
        &self.probs[f * size..(f + 1) * size]
    }
}

/// Exact guessing probabilities for every radius, plus the classical min-entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct GuessingProfile {
    /// Entry `r` is the optimal probability of ending within distance `r`.
    pub success_by_radius: Vec<f64>,
    /// `-log2 Σ_f max_x P(x, f)`.
    pub h_min_classical: f64,
}

/// Optimal success probability within distance `r` and the classical min-entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuessingResult {
    pub avg_success: f64,
    pub h_min_classical: f64,
}

pub fn guessing_oracle(joint: &JointDistribution, r: u32) -> Result<GuessingResult> {
    if r > joint.n_bits {
        return Err(Error::domain("r", f64::from(r), "0 <= r <= n"));
    }
    let profile = guessing_profile(joint);
    Ok(GuessingResult {
        avg_success: profile.success_by_radius[r as usize],
        h_min_classical: profile.h_min_classical,
    })
}

/// Evaluates all radii at once: for each label and centre, the probability mass at each
/// distance, then prefix sums maximised over centres.
pub fn guessing_profile(joint: &JointDistribution) -> GuessingProfile {
    let n = joint.n_bits as usize;
    let size = 1usize << n;
    let mut success = vec![0.0; n + 1];
    let mut guess_mass = 0.0;
    let mut by_distance = vec![0.0; n + 1];
    for f in 0..joint.n_labels {
        let p = joint.label(f);
        guess_mass += p.iter().copied().fold(0.0, f64::max);
        let mut best = vec![0.0_f64; n + 1];
        for centre in 0..size {
            by_distance.iter_mut().for_each(|m| *m = 0.0);
            for (x, &px) in p.iter().enumerate() {
                by_distance[(x ^ centre).count_ones() as usize] += px;
            }
            let mut acc = 0.0;
            for (r, &m) in by_distance.iter().enumerate() {
                acc += m;
                best[r] = best[r].max(acc);
            }
        }
        for (s, b) in success.iter_mut().zip(&best) {
            *s += b;
        }
    }
    GuessingProfile { success_by_radius: success, h_min_classical: -guess_mass.log2() }
}
