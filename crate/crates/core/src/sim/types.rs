//! Protocol state: parties, key strings, symmetrised keys, declarations and verdicts.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartyId {
    Alice,
    Bob,
    Charlie,
}

impl PartyId {
    /// The other recipient.
    pub fn counterpart(self) -> Option<PartyId> {
        match self {
            PartyId::Bob => Some(PartyId::Charlie),
            PartyId::Charlie => Some(PartyId::Bob),
            PartyId::Alice => None,
        }
    }
}

/// A bit string produced by one party for one future message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyString {
    pub bits: Vec<bool>,
    pub origin: PartyId,
    pub message_slot: u8,
}

impl KeyString {
    pub fn new(bits: Vec<bool>, origin: PartyId, message_slot: u8) -> Self {
        Self { bits, origin, message_slot }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of positions where `self` and `other` differ.
    pub fn mismatches(&self, other: &KeyString) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }
}

/// Whether an element of a symmetrised key came straight from Alice or was forwarded by
/// the other recipient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Direct,
    Forwarded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyElement {
    pub bit: bool,
    pub provenance: Provenance,
    /// Position in the key string the element was taken from.
    pub original_position: usize,
}

/// A recipient's key after symmetrisation: `L/2` kept elements of their own string and
/// `L/2` elements forwarded by the other recipient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetrisedKey {
    pub owner: PartyId,
    pub elements: Vec<KeyElement>,
}

impl SymmetrisedKey {
    /// Party whose key-generation run produced the element.
    pub fn source_of(&self, element: &KeyElement) -> PartyId {
        match element.provenance {
            Provenance::Direct => self.owner,
            Provenance::Forwarded => self.owner.counterpart().unwrap_or(self.owner),
        }
    }

    pub fn positions(&self, provenance: Provenance) -> impl Iterator<Item = usize> + '_ {
        self.elements
            .iter()
            .filter(move |e| e.provenance == provenance)
            .map(|e| e.original_position)
    }
}

/// Alice's announcement `(m, Sig_m)` with `Sig_m = (A^B_m, A^C_m)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub message: u8,
    /// Alice's string for Bob's key-generation run.
    pub sig_bob: KeyString,
    /// Alice's string for Charlie's key-generation run.
    pub sig_charlie: KeyString,
}

impl Declaration {
    pub fn part_for(&self, source: PartyId) -> &KeyString {
        match source {
            PartyId::Charlie => &self.sig_charlie,
            _ => &self.sig_bob,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub accepted: bool,
    pub mismatches_direct: usize,
    pub mismatches_forwarded: usize,
    pub threshold_used: f64,
}
