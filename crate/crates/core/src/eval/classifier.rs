//! Subreddit predictability classifier: L2-regularized multinomial logistic
//! regression over hashed question features.

use serde::{Deserialize, Serialize};

use crate::eval::EvalError;
use crate::features::Featurizer;
use crate::losses::logsumexp;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    /// Hashed feature dimension.
    pub dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 penalty on the weights (not the intercepts).
    pub l2: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self { dim: 1 << 12, learning_rate: 4.0, epochs: 150, l2: 1e-4, seed: 0 }
    }
}

/// Trained classifier. Weights are `labels.len()` rows of `dim` hashed
/// features plus one intercept each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubredditClassifier {
    pub labels: Vec<String>,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub intercepts: Vec<f64>,
}

impl SubredditClassifier {
    fn featurizer(&self) -> Featurizer {
        Featurizer::new(self.dim)
    }

    /// Log-probabilities over all labels, in `labels` order.
    pub fn predict_logprobs(&self, question: &str) -> Vec<f64> {
        let x = self.featurizer().question::<f64>(question);
        let k = self.labels.len();
        let mut logits = self.intercepts.clone();
        for (idx, v) in x.iter() {
            for (c, logit) in logits.iter_mut().enumerate().take(k) {
                *logit += self.weights[c * self.dim + idx as usize] * v;
            }
        }
        let lse = logsumexp(&logits);
        logits.into_iter().map(|l| l - lse).collect()
    }

    /// Log-probability of one label; `None` for labels never trained on.
    pub fn predict_logprob(&self, question: &str, label: &str) -> Option<f64> {
        let pos = self.labels.iter().position(|l| l == label)?;
        Some(self.predict_logprobs(question)[pos])
    }

    /// Most probable label.
    pub fn predict(&self, question: &str) -> &str {
        let lp = self.predict_logprobs(question);
        let mut best = 0;
        for (i, v) in lp.iter().enumerate() {
            if *v > lp[best] {
                best = i;
            }
        }
        &self.labels[best]
    }
}

/// Trains by full-batch gradient descent; deterministic given the config.
pub fn train_subreddit_classifier(
    samples: &[(String, String)],
    config: &ClassifierConfig,
) -> Result<SubredditClassifier, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::EmptyInput("classifier training samples".into()));
    }
    let mut labels: Vec<String> = samples.iter().map(|(_, l)| l.clone()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(EvalError::SingleLabel);
    }
    let k = labels.len();
    let dim = config.dim;
    let featurizer = Featurizer::new(dim);
    let features: Vec<(crate::features::FeatureVector<f64>, usize)> = samples
        .iter()
        .map(|(q, l)| {
            let y = labels.binary_search(l).expect("label present");
            (featurizer.question::<f64>(q), y)
        })
        .collect();

    let mut model = SubredditClassifier {
        labels,
        dim,
        weights: vec![0.0; k * dim],
        intercepts: vec![0.0; k],
    };
    let n = features.len() as f64;
    let mut grad_w = vec![0.0_f64; k * dim];
    let mut grad_b = vec![0.0_f64; k];
    for _ in 0..config.epochs {
        grad_w.fill(0.0);
        grad_b.fill(0.0);
        for (x, y) in &features {
            let mut logits = model.intercepts.clone();
            for (idx, v) in x.iter() {
                for (c, logit) in logits.iter_mut().enumerate().take(k) {
                    *logit += model.weights[c * dim + idx as usize] * v;
                }
            }
            let lse = logsumexp(&logits);
            for c in 0..k {
                let p = (logits[c] - lse).exp();
                let coef = p - if c == *y { 1.0 } else { 0.0 };
                grad_b[c] += coef;
                for (idx, v) in x.iter() {
                    grad_w[c * dim + idx as usize] += coef * v;
                }
            }
        }
        for c in 0..k {
            model.intercepts[c] -= config.learning_rate * grad_b[c] / n;
        }
        for (w, g) in model.weights.iter_mut().zip(grad_w.iter()) {
            *w -= config.learning_rate * (g / n + config.l2 * *w);
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::IndexedRandom;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn disjoint_vocab_corpus(n_per: usize, seed: u64) -> Vec<(String, String)> {
        // two subreddits with disjoint vocabularies
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..n_per * 2 {
            let label = if i % 2 == 0 { "alpha" } else { "beta" };
            let vocab: Vec<String> = if i % 2 == 0 {
                (0..12).map(|t| format!("aword{t}")).collect()
            } else {
                (0..12).map(|t| format!("bword{t}")).collect()
            };
            let q: Vec<String> =
                (0..8).map(|_| vocab.choose(&mut rng).unwrap().clone()).collect();
            out.push((q.join(" "), label.to_string()));
        }
        out
    }

    #[test]
    fn separable_corpora_reach_99_percent_heldout() {
        let train = disjoint_vocab_corpus(150, 1);
        let test = disjoint_vocab_corpus(100, 2);
        let clf = train_subreddit_classifier(&train, &ClassifierConfig::default()).unwrap();
        let correct = test.iter().filter(|(q, l)| clf.predict(q) == l).count();
        let acc = correct as f64 / test.len() as f64;
        assert!(acc >= 0.99, "held-out accuracy {acc}");
    }

    #[test]
    fn random_labels_stay_near_chance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let train: Vec<(String, String)> = (0..600)
            .map(|i| {
                let q = format!("common words only number {}", i % 37);
                let l = if rng.random::<bool>() { "alpha" } else { "beta" };
                (q, l.to_string())
            })
            .collect();
        let test: Vec<(String, String)> = (0..400)
            .map(|i| {
                let q = format!("common words only number {}", i % 37);
                let l = if rng.random::<bool>() { "alpha" } else { "beta" };
                (q, l.to_string())
            })
            .collect();
        let clf = train_subreddit_classifier(&train, &ClassifierConfig::default()).unwrap();
        let correct = test.iter().filter(|(q, l)| clf.predict(q) == l).count();
        let acc = correct as f64 / test.len() as f64;
        assert!((0.45..=0.55).contains(&acc), "chance-level accuracy, got {acc}");
    }

    #[test]
    fn logprobs_normalize() {
        let train = disjoint_vocab_corpus(50, 3);
        let clf = train_subreddit_classifier(&train, &ClassifierConfig::default()).unwrap();
        let total: f64 = clf.predict_logprobs("aword1 bword2 mixed").iter().map(|lp| lp.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9, "sum {total}");
    }

    #[test]
    fn single_label_is_an_error() {
        let train = vec![("q one".to_string(), "only".to_string()); 5];
        assert!(matches!(
            train_subreddit_classifier(&train, &ClassifierConfig::default()),
            Err(EvalError::SingleLabel)
        ));
    }
}
