//! Nucleus (top-p) sampling over a candidate set.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::features::FeatureVector;
use crate::model::{CandidateSet, ModelError, ModelParams};
use crate::scalar::Real;

/// Samples a candidate index: logits are the model scores divided by the
/// temperature (temperature 0 is argmax), candidates are sorted by
/// descending probability, the smallest prefix reaching `top_p` cumulative
/// mass is kept and renormalized, and one seeded draw selects from it.
pub fn sample_response<F: Real>(
    params: &ModelParams<F>,
    community: &str,
    x: &FeatureVector<F>,
    candidates: &CandidateSet<F>,
    top_p: f64,
    temperature: f64,
    seed: u64,
) -> Result<usize, ModelError> {
    assert!(top_p > 0.0 && top_p <= 1.0, "top_p must be in (0, 1]");
    assert!(temperature >= 0.0, "temperature must be non-negative");
    let scores = params.candidate_scores(community, x, candidates)?;
    Ok(sample_from_scores(&scores, top_p, temperature, seed))
}

/// Core sampling rule over raw scores; exposed for tests.
pub fn sample_from_scores<F: Real>(scores: &[F], top_p: f64, temperature: f64, seed: u64) -> usize {
    assert!(!scores.is_empty(), "no candidates to sample from");
    if temperature == 0.0 {
        // argmax, first index on ties; the seed is irrelevant
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        return best;
    }
    let t = F::from_f64_c(temperature);
    let logits: Vec<F> = scores.iter().map(|&s| s / t).collect();
    let lse = crate::losses::logsumexp(&logits);
    let probs: Vec<f64> = logits.iter().map(|&l| (l - lse).exp().to_f64().unwrap_or(0.0)).collect();

    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        probs[b].partial_cmp(&probs[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });

    let mut kept = Vec::new();
    let mut mass = 0.0;
    for &i in &order {
        kept.push(i);
        mass += probs[i];
        if mass >= top_p {
            break;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u: f64 = rng.random::<f64>() * mass;
    let mut cum = 0.0;
    for &i in &kept {
        cum += probs[i];
        if u < cum {
            return i;
        }
    }
    *kept.last().expect("nucleus is never empty")
}
