//! Distribution-stage symmetrisation and messaging-stage verification.

use rand::seq::index;
use rand::Rng;

use super::rng::seeded_rng;
use super::types::{Declaration, KeyElement, KeyString, PartyId, Provenance, SymmetrisedKey, Verdict};
use crate::error::{Error, Result};

fn check_pair(bob_key: &KeyString, charlie_key: &KeyString) -> Result<usize> {
    let l = bob_key.len();
    if l != charlie_key.len() {
        return Err(Error::LengthMismatch(format!(
            "Bob holds {l} bits, Charlie {}",
            charlie_key.len()
        )));
    }
    if l == 0 || l % 2 != 0 {
        return Err(Error::LengthMismatch(format!("key length {l} must be even and positive")));
    }
    Ok(l)
}

/// Bob and Charlie each forward a uniformly random half of their string to the other.
pub fn symmetrise(
    bob_key: &KeyString,
    charlie_key: &KeyString,
    rng_seed: u64,
) -> Result<(SymmetrisedKey, SymmetrisedKey)> {
    symmetrise_with_rng(bob_key, charlie_key, &mut seeded_rng(rng_seed))
}

pub fn symmetrise_with_rng<R: Rng + ?Sized>(
    bob_key: &KeyString,
    charlie_key: &KeyString,
    rng: &mut R,
) -> Result<(SymmetrisedKey, SymmetrisedKey)> {
    let l = check_pair(bob_key, charlie_key)?;
    let bob_forward = index::sample(rng, l, l / 2).into_vec();
    let charlie_forward = index::sample(rng, l, l / 2).into_vec();
    symmetrise_partition(bob_key, charlie_key, &bob_forward, &charlie_forward)
}

/// Symmetrisation along the halves recorded by the key-generation runs: the last `L/2`
/// positions of each string are the ones set aside for forwarding.
pub fn symmetrise_recorded(
    bob_key: &KeyString,
    charlie_key: &KeyString,
) -> Result<(SymmetrisedKey, SymmetrisedKey)> {
    let l = check_pair(bob_key, charlie_key)?;
    let forward: Vec<usize> = (l / 2..l).collect();
    symmetrise_partition(bob_key, charlie_key, &forward, &forward)
}

/// Symmetrisation with explicit forwarded position sets (each of size `L/2`, no repeats).
pub fn symmetrise_partition(
    bob_key: &KeyString,
    charlie_key: &KeyString,
    bob_forward: &[usize],
    charlie_forward: &[usize],
) -> Result<(SymmetrisedKey, SymmetrisedKey)> {
    let l = check_pair(bob_key, charlie_key)?;
    let mask = |forward: &[usize]| -> Result<Vec<bool>> {
        let mut m = vec![false; l];
        for &p in forward {
            if p >= l || m[p] {
                return Err(Error::LengthMismatch(format!("invalid forwarded position {p}")));
            }
            m[p] = true;
        }
        if forward.len() != l / 2 {
            return Err(Error::LengthMismatch(format!(
                "{} positions forwarded, expected {}",
                forward.len(),
                l / 2
            )));
        }
        Ok(m)
    };
    let bob_mask = mask(bob_forward)?;
    let charlie_mask = mask(charlie_forward)?;
    let build = |owner: PartyId, own: &KeyString, own_mask: &[bool], other: &KeyString, other_mask: &[bool]| {
        let mut elements = Vec::with_capacity(l);
        elements.extend((0..l).filter(|&p| !own_mask[p]).map(|p| KeyElement {
            bit: own.bits[p],
            provenance: Provenance::Direct,
            original_position: p,
        }));
        elements.extend((0..l).filter(|&p| other_mask[p]).map(|p| KeyElement {
            bit: other.bits[p],
            provenance: Provenance::Forwarded,
            original_position: p,
        }));
        SymmetrisedKey { owner, elements }
    };
    Ok((
        build(PartyId::Bob, bob_key, &bob_mask, charlie_key, &charlie_mask),
        build(PartyId::Charlie, charlie_key, &charlie_mask, bob_key, &bob_mask),
    ))
}

/// Compares a declaration with a symmetrised key. Accepts when both the direct and the
/// forwarded half have strictly fewer than `threshold · L/2` mismatches.
pub fn verify(decl: &Declaration, key: &SymmetrisedKey, threshold: f64) -> Verdict {
    let (mut direct, mut forwarded) = (0usize, 0usize);
    let (mut n_direct, mut n_forwarded) = (0usize, 0usize);
    for e in &key.elements {
        let reference = decl.part_for(key.source_of(e)).bits.get(e.original_position);
        let mismatch = reference != Some(&e.bit);
        match e.provenance {
            Provenance::Direct => {
                n_direct += 1;
                direct += usize::from(mismatch);
            }
            Provenance::Forwarded => {
                n_forwarded += 1;
                forwarded += usize::from(mismatch);
            }
        }
    }
    let half = n_direct.max(n_forwarded) as f64;
    let limit = threshold * half;
    Verdict {
        accepted: (direct as f64) < limit && (forwarded as f64) < limit,
        mismatches_direct: direct,
        mismatches_forwarded: forwarded,
        threshold_used: threshold,
    }
}
