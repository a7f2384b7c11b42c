//! CTC loss over the blank-augmented target via the forward-backward
//! recursions, computed in log space.

use super::{LabelSequence, ProbSequence, SeqNetError};

const LOG_ZERO: f64 = f64::NEG_INFINITY;

fn log_add(a: f64, b: f64) -> f64 {
    if a == LOG_ZERO {
        return b;
    }
    if b == LOG_ZERO {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Negative log of the total probability mass of all paths collapsing to
/// `target`, together with the loss gradient with respect to the
/// pre-softmax logits that produced `p` (`grad = p - gamma`, where `gamma`
/// marginalizes path posteriors per class and step).
///
/// The target must be feasible: `T >= m + (number of adjacent equal label
/// pairs)`.
pub fn ctc_loss(
    p: &ProbSequence,
    target: &LabelSequence,
) -> Result<(f64, Vec<Vec<f64>>), SeqNetError> {
    let t_len = p.len();
    let classes = p.num_classes();
    for &k in &target.0 {
        if k == 0 || k >= classes {
            return Err(SeqNetError::BadLabel(k));
        }
    }
    let repeats = target.0.windows(2).filter(|w| w[0] == w[1]).count();
    let needed = target.len() + repeats;
    if t_len < needed {
        return Err(SeqNetError::InfeasibleTarget {
            needed,
            have: t_len,
        });
    }

    // Blank-augmented target: blank, s1, blank, s2, ..., sm, blank.
    let s_len = 2 * target.len() + 1;
    let label_at = |s: usize| -> usize {
        if s % 2 == 0 {
            0
        } else {
            target.0[s / 2]
        }
    };
    let log_p = |t: usize, s: usize| -> f64 {
        let v = p.rows()[t][label_at(s)];
        if v > 0.0 {
            v.ln()
        } else {
            LOG_ZERO
        }
    };

    // Forward variables include the emission at step t.
    let mut alpha = vec![vec![LOG_ZERO; s_len]; t_len];
    alpha[0][0] = log_p(0, 0);
    if s_len > 1 {
        alpha[0][1] = log_p(0, 1);
    }
    for t in 1..t_len {
        for s in 0..s_len {
            let mut acc = alpha[t - 1][s];
            if s >= 1 {
                acc = log_add(acc, alpha[t - 1][s - 1]);
            }
            // Skip transition is allowed between distinct real labels.
            if s >= 2 && s % 2 == 1 && label_at(s) != label_at(s - 2) {
                acc = log_add(acc, alpha[t - 1][s - 2]);
            }
            alpha[t][s] = acc + log_p(t, s);
        }
    }
    let log_total = log_add(alpha[t_len - 1][s_len - 1], alpha[t_len - 1][s_len - 2]);
    if log_total == LOG_ZERO {
        // The target has zero mass; the loss is +inf and the gradient of
        // the log is undefined. Surface it as an infinite loss with the
        // softmax-only gradient direction.
        return Ok((f64::INFINITY, p.rows().to_vec()));
    }

    // Backward variables exclude the emission at step t, so that
    // alpha[t][s] + beta[t][s] sums over s to the total at every t.
    let mut beta = vec![vec![LOG_ZERO; s_len]; t_len];
    beta[t_len - 1][s_len - 1] = 0.0;
    if s_len > 1 {
        beta[t_len - 1][s_len - 2] = 0.0;
    }
    for t in (0..t_len - 1).rev() {
        for s in 0..s_len {
            let mut acc = beta[t + 1][s] + log_p(t + 1, s);
            if s + 1 < s_len {
                acc = log_add(acc, beta[t + 1][s + 1] + log_p(t + 1, s + 1));
            }
            if s + 2 < s_len && (s + 2) % 2 == 1 && label_at(s + 2) != label_at(s) {
                acc = log_add(acc, beta[t + 1][s + 2] + log_p(t + 1, s + 2));
            }
            beta[t][s] = acc;
        }
    }

    // gamma[t][k] = P(path passes a state labeled k at t | target) and the
    // logit gradient is p - gamma.
    let mut grad = vec![vec![0.0; classes]; t_len];
    for t in 0..t_len {
        let mut gamma = vec![LOG_ZERO; classes];
        for s in 0..s_len {
            let post = alpha[t][s] + beta[t][s];
            let k = label_at(s);
            gamma[k] = log_add(gamma[k], post);
        }
        for k in 0..classes {
            let g = if gamma[k] == LOG_ZERO {
                0.0
            } else {
                (gamma[k] - log_total).exp()
            };
            grad[t][k] = p.rows()[t][k] - g;
        }
    }

    Ok((-log_total, grad))
}
