use serde::{Deserialize, Serialize};

use super::{NetStatsError, Result};
use crate::vectors::{cosine_distance, Vectors};

/// Keyword embeddings delineating a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPointerSet {
    pub domain: String,
    pub pointers: Vectors,
}

/// Side of the threshold that assigns a domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Above,
    Below,
    /// No assignment.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SalientScores {
    /// Minimum cosine distance to each domain's pointers.
    pub sigma: Vec<f64>,
    /// `σ_i / (Σσ + ε)`.
    pub score: Vec<f64>,
    /// Domains passing the threshold, in input order.
    pub assigned: Vec<usize>,
}

/// Salient similarity of an entity against each domain. Domains are
/// assigned when their score is strictly above (or below) `threshold`.
pub fn salient_similarity(
    entity: &[f64],
    domains: &[DomainPointerSet],
    eps: f64,
    threshold: f64,
    polarity: Polarity,
) -> Result<SalientScores> {
    if domains.len() < 2 {
        return Err(NetStatsError::InvalidParam("need at least two domains".into()));
    }
    let mut sigma = Vec::with_capacity(domains.len());
    for d in domains {
        if d.pointers.is_empty() {
            return Err(NetStatsError::InvalidParam(format!("domain `{}` has no pointer", d.domain)));
        }
        if d.pointers.dim() != entity.len() {
            return Err(NetStatsError::DimensionMismatch {
                expected: entity.len(),
                got: d.pointers.dim(),
            });
        }
        sigma.push(d.pointers.rows().map(|p| cosine_distance(entity, p)).fold(f64::INFINITY, f64::min));
    }
    let total: f64 = sigma.iter().sum::<f64>() + eps;
    let score: Vec<f64> = sigma.iter().map(|s| s / total).collect();
    let assigned = (0..score.len())
        .filter(|&i| match polarity {
            Polarity::Above => score[i] > threshold,
            Polarity::Below => score[i] < threshold,
            Polarity::None => false,
        })
        .collect();
    Ok(SalientScores { sigma, score, assigned })
}
