//! Hashed bag-of-words features.
//!
//! Texts are lowercased, split into alphanumeric runs, and hashed into a
//! fixed-dimension sparse vector with a stable hash. Question and response
//! tokens are hashed under different role prefixes so the two never collide
//! by role.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;
use crate::seeding::{splitmix64, stable_hash};

/// Sparse feature vector: strictly increasing indices below the hash
/// dimension, finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<F> {
    pub indices: Vec<u32>,
    pub values: Vec<F>,
}

impl<F: Real> FeatureVector<F> {
    pub fn empty() -> Self {
        Self { indices: Vec::new(), values: Vec::new() }
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, F)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Checks the structural invariants: sorted unique indices within the
    /// dimension, finite values.
    pub fn is_valid(&self, dim: usize) -> bool {
        self.indices.len() == self.values.len()
            && self.indices.windows(2).all(|w| w[0] < w[1])
            && self.indices.iter().all(|&i| (i as usize) < dim)
            && self.values.iter().all(|v| v.is_finite())
    }
}

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            cur.extend(ch.to_lowercase());
        } else if !cur.is_empty() {
            tokens.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        tokens.push(cur);
    }
    tokens
}

/// Stable token -> bucket hash.
fn bucket(prefix: &str, token: &str, dim: usize) -> u32 {
    let mut h = stable_hash(prefix.as_bytes());
    h = splitmix64(h ^ stable_hash(token.as_bytes()));
    (h % dim as u64) as u32
}

/// Hashing featurizer with a fixed output dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Featurizer {
    pub dim: usize,
}

impl Featurizer {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "feature dimension must be positive");
        Self { dim }
    }

    fn hash_counts<F: Real>(&self, prefix: &str, text: &str) -> FeatureVector<F> {
        let mut counts: std::collections::BTreeMap<u32, u32> = std::collections::BTreeMap::new();
        for tok in tokenize(text) {
            *counts.entry(bucket(prefix, &tok, self.dim)).or_insert(0) += 1;
        }
        let mut indices = Vec::with_capacity(counts.len());
        let mut values = Vec::with_capacity(counts.len());
        for (idx, c) in counts {
            indices.push(idx);
            values.push(F::from_f64_c(f64::from(c)));
        }
        FeatureVector { indices, values }
    }

    /// Features for a question text.
    pub fn question<F: Real>(&self, text: &str) -> FeatureVector<F> {
        self.hash_counts("q", text)
    }

    /// Features for a response text.
    pub fn response<F: Real>(&self, text: &str) -> FeatureVector<F> {
        self.hash_counts("a", text)
    }
}

/// Bucket for a question x response feature pair, used when interaction
/// features are enabled on a model.
pub fn interaction_bucket(x_index: u32, y_index: u32, dim: usize) -> u32 {
    let key = (u64::from(x_index) << 32) | u64::from(y_index);
    (splitmix64(key ^ 0x5851_f42d_4c95_7f2d) % dim as u64) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_lowercases_and_splits_on_non_alphanumeric() {
        assert_eq!(tokenize("What's UP, doc?"), vec!["what", "s", "up", "doc"]);
        assert_eq!(tokenize(""), Vec::<String>::new());
        assert_eq!(tokenize("a1 b2"), vec!["a1", "b2"]);
    }

    #[test]
    fn featurizer_is_deterministic_and_valid() {
        let f = Featurizer::new(1 << 12);
        let a: FeatureVector<f64> = f.response("tok tok other");
        let b: FeatureVector<f64> = f.response("other tok tok");
        assert_eq!(a, b, "order-independent counts");
        assert!(a.is_valid(1 << 12));
        assert_eq!(a.values.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn roles_hash_separately() {
        let f = Featurizer::new(1 << 12);
        let q: FeatureVector<f64> = f.question("term");
        let a: FeatureVector<f64> = f.response("term");
        assert_ne!(q.indices, a.indices);
    }

    #[test]
    fn interaction_bucket_in_range_and_stable() {
        for (i, j) in [(0u32, 0u32), (5, 9), (9, 5), (1000, 3)] {
            let b = interaction_bucket(i, j, 4096);
            assert!(b < 4096);
            assert_eq!(b, interaction_bucket(i, j, 4096));
        }
        assert_ne!(
            interaction_bucket(5, 9, 1 << 20),
            interaction_bucket(9, 5, 1 << 20),
            "interaction hashing is ordered"
        );
    }
}
