//! Preference losses and the stable primitives they are built from.

use crate::scalar::Real;

/// Numerically stable `log(1 + exp(x))`.
pub fn softplus<F: Real>(x: F) -> F {
    if x > F::zero() {
        x + x.neg().exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid, stable for large |x|.
pub fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + x.neg().exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// `log(sum(exp(xs)))` with the max-shift trick. Empty input is a caller bug.
pub fn logsumexp<F: Real>(xs: &[F]) -> F {
    assert!(!xs.is_empty(), "logsumexp of empty slice");
    let m = xs.iter().cloned().fold(F::neg_infinity(), F::max);
    if m.is_infinite() && m < F::zero() {
        return F::neg_infinity();
    }
    let sum: F = xs.iter().map(|&x| (x - m).exp()).sum();
    m + sum.ln()
}

/// Bradley-Terry pairwise loss: `-log sigmoid(s_chosen - s_rejected)`,
/// computed as softplus of the negated difference.
pub fn bt_loss<F: Real>(s_chosen: F, s_rejected: F) -> F {
    softplus(s_rejected - s_chosen)
}

/// Derivative of [`bt_loss`] with respect to `(s_chosen, s_rejected)`.
pub fn bt_loss_grad<F: Real>(s_chosen: F, s_rejected: F) -> (F, F) {
    // d/ds_chosen -log sigmoid(d) = sigmoid(d) - 1 with d = s_chosen - s_rejected
    let g = sigmoid(s_chosen - s_rejected) - F::one();
    (g, -g)
}

/// DPO loss on log-probability ratios between the trained policy and the
/// frozen reference:
/// `-log sigmoid(beta * ((lp_theta_j - lp_ref_j) - (lp_theta_k - lp_ref_k)))`.
pub fn dpo_loss<F: Real>(lp_theta_j: F, lp_theta_k: F, lp_ref_j: F, lp_ref_k: F, beta: F) -> F {
    let margin = beta * ((lp_theta_j - lp_ref_j) - (lp_theta_k - lp_ref_k));
    softplus(-margin)
}

/// Derivative of [`dpo_loss`] with respect to `(lp_theta_j, lp_theta_k)`.
pub fn dpo_loss_grad<F: Real>(
    lp_theta_j: F,
    lp_theta_k: F,
    lp_ref_j: F,
    lp_ref_k: F,
    beta: F,
) -> (F, F) {
    let margin = beta * ((lp_theta_j - lp_ref_j) - (lp_theta_k - lp_ref_k));
    // dL/dmargin = sigmoid(margin) - 1
    let g = sigmoid(margin) - F::one();
    (g * beta, -(g * beta))
}
