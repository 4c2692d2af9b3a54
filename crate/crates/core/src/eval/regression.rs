//! Sample-level logistic regression of win indicators on subreddit
//! predictability, fit by iteratively reweighted least squares with a small
//! ridge term, with a Wald z-test on the slope.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::eval::EvalError;

const RIDGE: f64 = 1e-6;
const MAX_ITER: usize = 50;
const TOL: f64 = 1e-10;

/// One regression sample: did our model win this comparison, and how
/// predictable was the true subreddit from the question alone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WinSample {
    pub win: bool,
    pub logprob_true_subreddit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub coefficient: f64,
    pub intercept: f64,
    pub std_error: f64,
    pub z_stat: f64,
    pub p_value: f64,
    pub n: usize,
    pub converged: bool,
}

/// Fits `P(win) = sigmoid(intercept + coefficient * logprob)`.
pub fn predictability_regression(samples: &[WinSample]) -> Result<RegressionResult, EvalError> {
    if samples.len() < 10 {
        return Err(EvalError::TooFewSamples { min: 10, got: samples.len() });
    }
    let wins = samples.iter().filter(|s| s.win).count();
    if wins == 0 || wins == samples.len() {
        return Err(EvalError::OneOutcomeClass);
    }

    let mut beta = [0.0_f64; 2]; // intercept, slope
    let mut converged = false;
    let mut info = [[0.0_f64; 2]; 2];
    for _ in 0..MAX_ITER {
        // weighted normal equations for the IRLS step
        let mut s = [[RIDGE, 0.0], [0.0, RIDGE]];
        let mut g = [0.0_f64; 2];
        for sample in samples {
            let x = sample.logprob_true_subreddit;
            let eta = beta[0] + beta[1] * x;
            let p = crate::losses::sigmoid(eta);
            let w = (p * (1.0 - p)).max(1e-12);
            let r = f64::from(u8::from(sample.win)) - p;
            s[0][0] += w;
            s[0][1] += w * x;
            s[1][1] += w * x * x;
            g[0] += r;
            g[1] += r * x;
        }
        s[1][0] = s[0][1];
        info = s;
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let delta = [
            (s[1][1] * g[0] - s[0][1] * g[1]) / det,
            (s[0][0] * g[1] - s[1][0] * g[0]) / det,
        ];
        beta[0] += delta[0];
        beta[1] += delta[1];
        if delta[0].abs().max(delta[1].abs()) < TOL {
            converged = true;
            break;
        }
    }

    let det = info[0][0] * info[1][1] - info[0][1] * info[1][0];
    let var_slope = if det.abs() < 1e-300 { f64::INFINITY } else { info[0][0] / det };
    let std_error = var_slope.sqrt();
    let z_stat = if std_error > 0.0 { beta[1] / std_error } else { 0.0 };
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p_value = 2.0 * (1.0 - normal.cdf(z_stat.abs()));
    Ok(RegressionResult {
        coefficient: beta[1],
        intercept: beta[0],
        std_error,
        z_stat,
        p_value,
        n: samples.len(),
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn simulate(n: usize, intercept: f64, slope: f64, seed: u64) -> Vec<WinSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let x: f64 = rng.random::<f64>() * 4.0 - 2.0;
                let p = crate::losses::sigmoid(intercept + slope * x);
                WinSample { win: rng.random::<f64>() < p, logprob_true_subreddit: x }
            })
            .collect()
    }

    #[test]
    fn recovers_known_slope() {
        let samples = simulate(10_000, 0.2, -0.5, 42);
        let fit = predictability_regression(&samples).unwrap();
        assert!(fit.converged);
        assert!((fit.coefficient - (-0.5)).abs() < 0.1, "slope {}", fit.coefficient);
        assert!(fit.p_value < 0.001, "strong effect detected, p {}", fit.p_value);
    }

    #[test]
    fn null_simulation_rarely_rejects() {
        let mut rejections = 0;
        for seed in 0..50 {
            let samples = simulate(2_000, 0.0, 0.0, 1000 + seed);
            let fit = predictability_regression(&samples).unwrap();
            if fit.p_value <= 0.05 {
                rejections += 1;
            }
        }
        assert!(rejections <= 5, "{rejections} of 50 null fits rejected");
    }

    #[test]
    fn preconditions_are_enforced() {
        let short = simulate(5, 0.0, 0.0, 1);
        assert!(matches!(
            predictability_regression(&short),
            Err(EvalError::TooFewSamples { .. })
        ));
        let all_wins: Vec<WinSample> =
            (0..20).map(|i| WinSample { win: true, logprob_true_subreddit: i as f64 }).collect();
        assert!(matches!(
            predictability_regression(&all_wins),
            Err(EvalError::OneOutcomeClass)
        ));
    }

    #[test]
    fn near_separable_data_still_returns_estimates() {
        // ridge keeps the system solvable; non-convergence is reported, not fatal
        let samples: Vec<WinSample> = (0..200)
            .map(|i| {
                let x = if i % 2 == 0 { -1.0 } else { 1.0 };
                WinSample { win: x > 0.0, logprob_true_subreddit: x }
            })
            .collect();
        let fit = predictability_regression(&samples).unwrap();
        assert!(fit.coefficient > 0.0);
        assert!(fit.p_value.is_finite());
    }
}
