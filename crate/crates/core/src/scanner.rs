//! Simulated signature scanners.
//!
//! Each scanner holds a few contiguous n-grams of normalized seed statements
//! and flags any program whose normalized body contains one of them.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::asm::Program;

pub const DEFAULT_SCANNERS: usize = 20;
pub const DEFAULT_SIGNATURES_PER_SCANNER: usize = 3;
pub const DEFAULT_GRAM_LEN: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScanError {
    #[error("seed body has {len} significant statements, fewer than the gram length {n}")]
    BodyTooShort { len: usize, n: usize },
    #[error("gram length must be at least 2, got {0}")]
    GramTooShort(usize),
    #[error("seed has only {available} distinct grams, {needed} needed per scanner")]
    NotEnoughGrams { available: usize, needed: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub gram: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scanner {
    pub signatures: Vec<Signature>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScannerEnsemble {
    pub gram_len: usize,
    pub scanners: Vec<Scanner>,
    /// SHA-256 of the serialized seed, hex encoded.
    pub seed_fingerprint: String,
}

pub fn fingerprint(p: &Program) -> String {
    let digest = Sha256::digest(p.to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Distinct n-grams of the normalized seed body, in first-seen order.
fn distinct_grams(body: &[&str], n: usize) -> Vec<Vec<String>> {
    let mut seen = HashSet::new();
    body.windows(n)
        .filter(|w| seen.insert(*w))
        .map(|w| w.iter().map(|s| s.to_string()).collect())
        .collect()
}

pub fn build_ensemble<R: Rng + ?Sized>(
    seed: &Program,
    m: usize,
    sigs_per_scanner: usize,
    n: usize,
    rng: &mut R,
) -> Result<ScannerEnsemble, ScanError> {
    if n < 2 {
        return Err(ScanError::GramTooShort(n));
    }
    let body = seed.normalized_body();
    if body.len() < n {
        return Err(ScanError::BodyTooShort { len: body.len(), n });
    }
    let grams = distinct_grams(&body, n);
    if grams.len() < sigs_per_scanner {
        return Err(ScanError::NotEnoughGrams {
            available: grams.len(),
            needed: sigs_per_scanner,
        });
    }
    let scanners = (0..m)
        .map(|_| Scanner {
            signatures: grams
                .choose_multiple(rng, sigs_per_scanner)
                .map(|g| Signature { gram: g.clone() })
                .collect(),
        })
        .collect();
    Ok(ScannerEnsemble {
        gram_len: n,
        scanners,
        seed_fingerprint: fingerprint(seed),
    })
}

impl ScannerEnsemble {
    pub fn len(&self) -> usize {
        self.scanners.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scanners.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ensemble serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<ScannerEnsemble> {
        serde_json::from_str(text)
    }
}

/// Number of scanners with at least one signature in the variant.
pub fn detect_count(e: &ScannerEnsemble, variant: &Program) -> usize {
    let body = variant.normalized_body();
    let grams: HashSet<&[&str]> = body.windows(e.gram_len.max(1)).collect();
    e.scanners
        .iter()
        .filter(|s| {
            s.signatures.iter().any(|sig| {
                let gram: Vec<&str> = sig.gram.iter().map(String::as_str).collect();
                grams.contains(gram.as_slice())
            })
        })
        .count()
}
