//! Fleiss kappa: chance-corrected agreement for multiple raters over
//! categorical labels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::eval::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    pub n_items: usize,
    pub n_raters: usize,
    /// Expected agreement was 1 (a single category everywhere); kappa is
    /// reported as 1.0 by convention.
    pub degenerate: bool,
}

/// Ratings are one row per item, one column per rater. Every item must have
/// the same number of raters, at least 2.
pub fn fleiss_kappa(ratings: &[Vec<String>]) -> Result<KappaResult, EvalError> {
    if ratings.is_empty() {
        return Err(EvalError::EmptyInput("ratings matrix".into()));
    }
    let n_raters = ratings[0].len();
    if n_raters < 2 {
        return Err(EvalError::TooFewSamples { min: 2, got: n_raters });
    }
    for (row, item) in ratings.iter().enumerate() {
        if item.len() != n_raters {
            return Err(EvalError::RaggedRatings { row, got: item.len(), expected: n_raters });
        }
    }

    let n_items = ratings.len();
    let n = n_raters as f64;
    let mut category_totals: BTreeMap<&str, f64> = BTreeMap::new();
    let mut p_bar = 0.0;
    for item in ratings {
        let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
        for label in item {
            *counts.entry(label.as_str()).or_insert(0.0) += 1.0;
        }
        let sum_sq: f64 = counts.values().map(|c| c * c).sum();
        p_bar += (sum_sq - n) / (n * (n - 1.0));
        for (label, c) in counts {
            *category_totals.entry(label).or_insert(0.0) += c;
        }
    }
    p_bar /= n_items as f64;
    let total = (n_items as f64) * n;
    let p_e: f64 = category_totals.values().map(|c| (c / total) * (c / total)).sum();

    if (1.0 - p_e).abs() < 1e-15 {
        return Ok(KappaResult { kappa: 1.0, n_items, n_raters, degenerate: true });
    }
    Ok(KappaResult { kappa: (p_bar - p_e) / (1.0 - p_e), n_items, n_raters, degenerate: false })
}
