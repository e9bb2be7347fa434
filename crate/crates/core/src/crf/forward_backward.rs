//! Log-space forward-backward: partition function and posterior marginals.

use super::{CrfError, Lattice, TransitionMask};

/// `ln Σ exp(v)` with max subtraction; empty or all `-inf` input gives `-inf`.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

fn forward(lattice: &Lattice, mask: Option<&TransitionMask>) -> Vec<f64> {
    let (len, labels) = (lattice.len(), lattice.num_labels());
    let mut alpha = vec![f64::NEG_INFINITY; len * labels];
    for (y, slot) in alpha[..labels].iter_mut().enumerate() {
        if mask.is_none_or(|m| m.begin_allowed(y)) {
            *slot = lattice.begin(y) + lattice.emission(0, y);
        }
    }
    let mut scratch = vec![f64::NEG_INFINITY; labels];
    for t in 1..len {
        for y in 0..labels {
            for a in 0..labels {
                scratch[a] = if mask.is_none_or(|m| m.allowed(a, y)) {
                    alpha[(t - 1) * labels + a] + lattice.transition(a, y)
                } else {
                    f64::NEG_INFINITY
                };
            }
            let total = logsumexp(&scratch);
            if total > f64::NEG_INFINITY {
                alpha[t * labels + y] = lattice.emission(t, y) + total;
            }
        }
    }
    alpha
}

fn backward(lattice: &Lattice, mask: Option<&TransitionMask>) -> Vec<f64> {
    let (len, labels) = (lattice.len(), lattice.num_labels());
    let mut beta = vec![f64::NEG_INFINITY; len * labels];
    for y in 0..labels {
        beta[(len - 1) * labels + y] = lattice.end(y);
    }
    let mut scratch = vec![f64::NEG_INFINITY; labels];
    for t in (0..len - 1).rev() {
        for a in 0..labels {
            for b in 0..labels {
                scratch[b] = if mask.is_none_or(|m| m.allowed(a, b)) {
                    lattice.transition(a, b)
                        + lattice.emission(t + 1, b)
                        + beta[(t + 1) * labels + b]
                } else {
                    f64::NEG_INFINITY
                };
            }
            beta[t * labels + a] = logsumexp(&scratch);
        }
    }
    beta
}

fn total_from_alpha(alpha: &[f64], lattice: &Lattice) -> f64 {
    let (len, labels) = (lattice.len(), lattice.num_labels());
    let finals: Vec<f64> = (0..labels)
        .map(|y| alpha[(len - 1) * labels + y] + lattice.end(y))
        .collect();
    logsumexp(&finals)
}

/// `ln Σ_paths exp(score)`, over mask-allowed paths only.
pub fn log_partition(lattice: &Lattice, mask: Option<&TransitionMask>) -> Result<f64, CrfError> {
    if lattice.is_empty() {
        return Err(CrfError::EmptyLattice);
    }
    let logz = total_from_alpha(&forward(lattice, mask), lattice);
    if logz == f64::NEG_INFINITY {
        return Err(CrfError::AllPathsMasked);
    }
    Ok(logz)
}

/// Posterior label and label-bigram probabilities for one lattice.
#[derive(Debug, Clone)]
pub struct Marginals {
    len: usize,
    num_labels: usize,
    pub log_partition: f64,
    unary: Vec<f64>,
    pairwise: Vec<f64>,
}

impl Marginals {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// P(y_t = label).
    #[inline]
    pub fn unary(&self, position: usize, label: usize) -> f64 {
        self.unary[position * self.num_labels + label]
    }

    /// P(y_t = from, y_{t+1} = to); `position` ranges over `0..len-1`.
    #[inline]
    pub fn pairwise(&self, position: usize, from: usize, to: usize) -> f64 {
        debug_assert!(position + 1 < self.len);
        self.pairwise[(position * self.num_labels + from) * self.num_labels + to]
    }
}

/// Forward-backward marginals; masked transitions get pairwise probability
/// exactly 0.
pub fn posterior_marginals(
    lattice: &Lattice,
    mask: Option<&TransitionMask>,
) -> Result<Marginals, CrfError> {
    if lattice.is_empty() {
        return Err(CrfError::EmptyLattice);
    }
    let (len, labels) = (lattice.len(), lattice.num_labels());
    let alpha = forward(lattice, mask);
    let beta = backward(lattice, mask);
    let logz = total_from_alpha(&alpha, lattice);
    if logz == f64::NEG_INFINITY {
        return Err(CrfError::AllPathsMasked);
    }

    let mut unary = vec![0.0; len * labels];
    for t in 0..len {
        for y in 0..labels {
            let log_p = alpha[t * labels + y] + beta[t * labels + y] - logz;
            if log_p > f64::NEG_INFINITY {
                unary[t * labels + y] = log_p.exp();
            }
        }
    }

    let mut pairwise = vec![0.0; len.saturating_sub(1) * labels * labels];
    for t in 0..len.saturating_sub(1) {
        for a in 0..labels {
            let alpha_a = alpha[t * labels + a];
            if alpha_a == f64::NEG_INFINITY {
                continue;
            }
            for b in 0..labels {
                if mask.is_some_and(|m| !m.allowed(a, b)) {
                    continue;
                }
                let log_p = alpha_a
                    + lattice.transition(a, b)
                    + lattice.emission(t + 1, b)
                    + beta[(t + 1) * labels + b]
                    - logz;
                if log_p > f64::NEG_INFINITY {
                    pairwise[(t * labels + a) * labels + b] = log_p.exp();
                }
            }
        }
    }

    Ok(Marginals {
        len,
        num_labels: labels,
        log_partition: logz,
        unary,
        pairwise,
    })
}
