//! Set-based similarity between programs and the novelty score built on it.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::sync::Arc;

use thiserror::Error;

use crate::asm::{text_key, Program};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimilarityError {
    #[error("similarity of two empty statement sets is undefined")]
    UndefinedSimilarity,
    #[error("vector length mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least two individuals, got {0}")]
    PopulationTooSmall(usize),
    #[error("individual {index} out of range for population of {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no vectors to average")]
    Empty,
}

/// Deduplicated normalized body statements (instructions and label
/// definitions).
///
/// Items are kept sorted by a 64-bit hash and then by text, so intersections
/// are a linear merge that mostly compares integers. Equality is still decided
/// on the text.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct StatementSet {
    items: Vec<(u64, Arc<str>)>,
}

impl StatementSet {
    pub fn from_program(p: &Program) -> StatementSet {
        let mut items: Vec<(u64, Arc<str>)> = p
            .body
            .iter()
            .filter(|s| s.is_significant())
            .map(|s| (s.normalized_key(), s.normalized_shared()))
            .collect();
        items.sort_unstable();
        items.dedup();
        StatementSet { items }
    }

    pub fn from_items<I, S>(items: I) -> StatementSet
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut items: Vec<(u64, Arc<str>)> = items
            .into_iter()
            .map(|s| {
                let s: Arc<str> = s.into().into();
                (text_key(&s), s)
            })
            .collect();
        items.sort_unstable();
        items.dedup();
        StatementSet { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, item: &str) -> bool {
        let probe = (text_key(item), item);
        self.items
            .binary_search_by(|(k, s)| (*k, &**s).cmp(&probe))
            .is_ok()
    }

    /// Items in no particular order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|(_, s)| &**s)
    }

    /// Size of the intersection, by merging the two sorted lists.
    pub fn intersection_len(&self, other: &StatementSet) -> usize {
        let (a, b) = (&self.items, &other.items);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                Ordering::Less => i += 1,
                Ordering::Greater => j += 1,
                Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// Similarity of each individual to its peers (population order, self
/// skipped), with similarity to the source as the last element.
pub type SimilarityVector = Vec<f64>;

/// |a ∩ b| / |a ∪ b|.
pub fn jaccard(a: &StatementSet, b: &StatementSet) -> Result<f64, SimilarityError> {
    if a.is_empty() && b.is_empty() {
        return Err(SimilarityError::UndefinedSimilarity);
    }
    let common = a.intersection_len(b);
    Ok(common as f64 / (a.len() + b.len() - common) as f64)
}

pub fn similarity_vector(
    pop: &[StatementSet],
    i: usize,
    source: &StatementSet,
) -> Result<SimilarityVector, SimilarityError> {
    if pop.len() < 2 {
        return Err(SimilarityError::PopulationTooSmall(pop.len()));
    }
    let me = pop.get(i).ok_or(SimilarityError::IndexOutOfRange {
        index: i,
        len: pop.len(),
    })?;
    let mut v = Vec::with_capacity(pop.len());
    for (j, peer) in pop.iter().enumerate() {
        if j != i {
            v.push(jaccard(peer, me)?);
        }
    }
    v.push(jaccard(source, me)?);
    Ok(v)
}

pub fn mean_vector(vectors: &[SimilarityVector]) -> Result<SimilarityVector, SimilarityError> {
    let first = vectors.first().ok_or(SimilarityError::Empty)?;
    let mut sum = vec![0.0; first.len()];
    for v in vectors {
        if v.len() != sum.len() {
            return Err(SimilarityError::DimensionMismatch {
                expected: sum.len(),
                found: v.len(),
            });
        }
        for (s, x) in sum.iter_mut().zip(v) {
            *s += x;
        }
    }
    let n = vectors.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// Euclidean distance from the mean similarity vector. Larger is more novel.
pub fn novelty_fitness(si: &[f64], mean: &[f64]) -> Result<f64, SimilarityError> {
    if si.len() != mean.len() {
        return Err(SimilarityError::DimensionMismatch {
            expected: mean.len(),
            found: si.len(),
        });
    }
    Ok(si
        .iter()
        .zip(mean)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt())
}

/// Dissimilarity to the source, `1 - J`.
pub fn alpha_fitness(chrom: &StatementSet, source: &StatementSet) -> Result<f64, SimilarityError> {
    Ok(1.0 - jaccard(chrom, source)?)
}

/// Similarity of every individual to the source, and the novelty score of
/// every individual. Each pair is compared once.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationScores {
    pub source_similarity: Vec<f64>,
    pub novelty: Vec<f64>,
    /// Mean over all unordered peer pairs.
    pub mean_pairwise_similarity: f64,
}

pub fn score_population<S: Borrow<StatementSet>>(
    pop: &[S],
    source: &StatementSet,
) -> Result<PopulationScores, SimilarityError> {
    let pop: Vec<&StatementSet> = pop.iter().map(Borrow::borrow).collect();
    let n = pop.len();
    if n < 2 {
        return Err(SimilarityError::PopulationTooSmall(n));
    }
    let mut pair = vec![vec![1.0; n]; n];
    let mut pair_sum = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let s = jaccard(pop[i], pop[j])?;
            pair[i][j] = s;
            pair[j][i] = s;
            pair_sum += s;
        }
    }
    let source_similarity = pop
        .iter()
        .map(|c| jaccard(source, c))
        .collect::<Result<Vec<_>, _>>()?;
    let vectors: Vec<SimilarityVector> = (0..n)
        .map(|i| {
            let mut v: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| pair[j][i]).collect();
            v.push(source_similarity[i]);
            v
        })
        .collect();
    let mean = mean_vector(&vectors)?;
    let novelty = vectors
        .iter()
        .map(|v| novelty_fitness(v, &mean))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PopulationScores {
        source_similarity,
        novelty,
        mean_pairwise_similarity: pair_sum / (n * (n - 1) / 2) as f64,
    })
}
