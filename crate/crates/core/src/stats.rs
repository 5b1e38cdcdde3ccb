//! Mann-Whitney U test with the normal approximation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("sample {0} is empty")]
    EmptySample(usize),
    #[error("significance level must lie in (0, 1), got {0}")]
    BadAlpha(String),
    #[error("sample {0} contains a NaN")]
    NotANumber(usize),
}

/// Significance level of the acceptance region.
pub const REGION_ALPHA: f64 = 0.05;
/// The null hypothesis is rejected when the two-tailed p falls below this.
pub const REJECT_BELOW_P: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MannWhitneyOptions {
    /// Shift the statistic half a unit toward the mean before standardizing.
    pub continuity_correction: bool,
    /// Shrink the variance for tied values when computing z and p.
    pub tie_correction: bool,
}

impl Default for MannWhitneyOptions {
    fn default() -> Self {
        MannWhitneyOptions {
            continuity_correction: true,
            tie_correction: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UTestResult {
    pub n1: usize,
    pub n2: usize,
    /// max(u1, u2).
    pub u: f64,
    /// Statistic of the first sample: its rank sum minus n1(n1+1)/2.
    pub u1: f64,
    pub u2: f64,
    /// Signed, from `u1`: negative when the first sample tends to rank lower.
    pub z: f64,
    pub p_two_tailed: f64,
    /// Mean plus/minus 1.96 standard deviations, with the variance adjusted
    /// for the ties actually present in the data.
    pub acceptance_region_u: (f64, f64),
    pub reject_null: bool,
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn check(sample1: &[f64], sample2: &[f64]) -> Result<(), StatsError> {
    for (k, s) in [(1, sample1), (2, sample2)] {
        if s.is_empty() {
            return Err(StatsError::EmptySample(k));
        }
        if s.iter().any(|x| x.is_nan()) {
            return Err(StatsError::NotANumber(k));
        }
    }
    Ok(())
}

/// Mid-ranks of the pooled samples, and the tie term Σ(t³ − t) over groups.
fn pooled_ranks(sample1: &[f64], sample2: &[f64]) -> (Vec<f64>, f64) {
    let mut pooled: Vec<(f64, usize)> = sample1
        .iter()
        .chain(sample2)
        .copied()
        .enumerate()
        .map(|(i, x)| (x, i))
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        // Ranks are 1-based; a tie group shares the average of its ranks.
        let mid = (start + end + 1) as f64 / 2.0;
        for &(_, idx) in &pooled[start..end] {
            ranks[idx] = mid;
        }
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    (ranks, ties)
}

fn sigma(n1: f64, n2: f64, ties: f64) -> f64 {
    let n = n1 + n2;
    (n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)))).sqrt()
}

pub fn mann_whitney_u(sample1: &[f64], sample2: &[f64]) -> Result<UTestResult, StatsError> {
    mann_whitney_u_with(sample1, sample2, MannWhitneyOptions::default())
}

pub fn mann_whitney_u_with(
    sample1: &[f64],
    sample2: &[f64],
    opts: MannWhitneyOptions,
) -> Result<UTestResult, StatsError> {
    check(sample1, sample2)?;
    let (n1, n2) = (sample1.len() as f64, sample2.len() as f64);
    let (ranks, ties) = pooled_ranks(sample1, sample2);
    let r1: f64 = ranks[..sample1.len()].iter().sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let u2 = n1 * n2 - u1;
    let mu = n1 * n2 / 2.0;

    let sigma_tied = sigma(n1, n2, ties);
    let sd = if opts.tie_correction {
        sigma_tied
    } else {
        sigma(n1, n2, 0.0)
    };
    let mut diff = u1 - mu;
    if opts.continuity_correction {
        diff -= 0.5 * diff.signum();
        if (u1 - mu).abs() < 0.5 {
            diff = 0.0;
        }
    }
    let (z, p) = if sd > 0.0 {
        let z = diff / sd;
        (z, (2.0 * standard_normal().sf(z.abs())).min(1.0))
    } else {
        (0.0, 1.0)
    };
    let half = z_critical(REGION_ALPHA) * sigma_tied;

    Ok(UTestResult {
        n1: sample1.len(),
        n2: sample2.len(),
        u: u1.max(u2),
        u1,
        u2,
        z,
        p_two_tailed: p,
        acceptance_region_u: (mu - half, mu + half),
        reject_null: p < REJECT_BELOW_P,
    })
}

fn z_critical(alpha: f64) -> f64 {
    standard_normal().inverse_cdf(1.0 - alpha / 2.0)
}

/// Acceptance region for U before any data is seen: mean plus/minus the
/// two-sided critical value times the tie-free standard deviation.
pub fn acceptance_region(n1: usize, n2: usize, alpha: f64) -> Result<(f64, f64), StatsError> {
    if n1 == 0 {
        return Err(StatsError::EmptySample(1));
    }
    if n2 == 0 {
        return Err(StatsError::EmptySample(2));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::BadAlpha(alpha.to_string()));
    }
    let (a, b) = (n1 as f64, n2 as f64);
    let mu = a * b / 2.0;
    let half = z_critical(alpha) * sigma(a, b, 0.0);
    Ok((mu - half, mu + half))
}

/// Acceptance region using the variance of the observed data, ties included.
pub fn acceptance_region_for(
    sample1: &[f64],
    sample2: &[f64],
    alpha: f64,
) -> Result<(f64, f64), StatsError> {
    check(sample1, sample2)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::BadAlpha(alpha.to_string()));
    }
    let (n1, n2) = (sample1.len() as f64, sample2.len() as f64);
    let (_, ties) = pooled_ranks(sample1, sample2);
    let mu = n1 * n2 / 2.0;
    let half = z_critical(alpha) * sigma(n1, n2, ties);
    Ok((mu - half, mu + half))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pairwise wins plus half-ties.
    fn brute_u1(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .flat_map(|x| b.iter().map(move |y| (x, y)))
            .map(|(x, y)| if x > y { 1.0 } else if x == y { 0.5 } else { 0.0 })
            .sum()
    }

    #[test]
    fn complete_tie() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.u, 4.5);
        assert_eq!(r.z, 0.0);
        assert_eq!(r.p_two_tailed, 1.0);
        assert!(!r.reject_null);
    }

    #[test]
    fn full_separation() {
        let r = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(r.u1, 0.0);
        assert_eq!(r.u, 4.0);
        assert_eq!(brute_u1(&[1.0, 2.0], &[3.0, 4.0]), 0.0);
    }

    #[test]
    fn empty_samples() {
        assert_eq!(mann_whitney_u(&[], &[1.0]), Err(StatsError::EmptySample(1)));
        assert_eq!(mann_whitney_u(&[1.0], &[]), Err(StatsError::EmptySample(2)));
        assert_eq!(
            mann_whitney_u(&[f64::NAN], &[1.0]),
            Err(StatsError::NotANumber(1))
        );
    }

    #[test]
    fn single_pair_region() {
        let (lo, hi) = acceptance_region(1, 1, 0.05).unwrap();
        let half = 1.959_963_984_540_054 * 0.5;
        assert!((lo - (0.5 - half)).abs() < 1e-9);
        assert!((hi - (0.5 + half)).abs() < 1e-9);
        assert!(acceptance_region(0, 3, 0.05).is_err());
        assert!(acceptance_region(3, 3, 1.0).is_err());
    }

    #[test]
    fn region_is_symmetric() {
        for (a, b) in [(3, 7), (20, 20), (1, 9)] {
            let (lo, hi) = acceptance_region(a, b, 0.05).unwrap();
            assert!(((lo + hi) / 2.0 - (a * b) as f64 / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tie_correction_narrows_sigma() {
        let a = [1.0, 1.0, 2.0, 2.0, 3.0];
        let b = [2.0, 3.0, 3.0, 4.0, 4.0];
        let plain = mann_whitney_u(&a, &b).unwrap();
        let tied = mann_whitney_u_with(
            &a,
            &b,
            MannWhitneyOptions {
                continuity_correction: true,
                tie_correction: true,
            },
        )
        .unwrap();
        assert!(tied.z.abs() > plain.z.abs());
        assert_eq!(plain.u1, brute_u1(&a, &b));
    }
}
