//! Penalized likelihood, analytic gradient, and stochastic training.
//!
//! The objective is `Σ_sentences [log Z − gold path score] + (wd/2)·‖unary‖²`.
//! Transition and boundary weights are deliberately left out of the penalty:
//! they are few, and decaying them biases the structural prior.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{posterior_marginals, score_lattice, CrfError, CrfModel, Instance, TrainConfig};

const ADAGRAD_EPS: f64 = 1e-8;

/// Dense gradient with the same shapes as [`CrfModel`]'s weight blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct CrfGradient {
    pub unary: Vec<f64>,
    pub transitions: Vec<f64>,
    pub begin: Vec<f64>,
    pub end: Vec<f64>,
}

impl CrfGradient {
    pub fn zeros(num_features: usize, num_labels: usize) -> Self {
        Self {
            unary: vec![0.0; num_features * num_labels],
            transitions: vec![0.0; num_labels * num_labels],
            begin: vec![0.0; num_labels],
            end: vec![0.0; num_labels],
        }
    }
}

fn check_instance(inst: &Instance, num_labels: usize) -> Result<(), CrfError> {
    if inst.features.len() != inst.labels.len() {
        return Err(CrfError::DimensionMismatch(format!(
            "{} feature rows vs {} labels",
            inst.features.len(),
            inst.labels.len()
        )));
    }
    if let Some(&bad) = inst.labels.iter().find(|&&y| y >= num_labels) {
        return Err(CrfError::DimensionMismatch(format!(
            "label id {bad} out of range for {num_labels} labels"
        )));
    }
    Ok(())
}

/// Negative log-likelihood of the batch plus the L2 term, and its gradient
/// (expected minus empirical counts, plus `wd·unary`).
pub fn nll_and_gradient(
    model: &CrfModel,
    batch: &[Instance],
    weight_decay: f64,
) -> Result<(f64, CrfGradient), CrfError> {
    let labels = model.num_labels();
    let mut grad = CrfGradient::zeros(model.num_features(), labels);
    let mut loss = 0.0;

    for inst in batch {
        check_instance(inst, labels)?;
        let lattice = score_lattice(&inst.features, model)?;
        let marginals = posterior_marginals(&lattice, None)?;
        loss += marginals.log_partition - lattice.path_score(&inst.labels);

        for (t, feats) in inst.features.iter().enumerate() {
            for y in 0..labels {
                let p = marginals.unary(t, y);
                if p != 0.0 {
                    for &f in feats {
                        grad.unary[f as usize * labels + y] += p;
                    }
                }
            }
            for &f in feats {
                grad.unary[f as usize * labels + inst.labels[t]] -= 1.0;
            }
        }
        for t in 0..inst.labels.len() - 1 {
            for a in 0..labels {
                for b in 0..labels {
                    grad.transitions[a * labels + b] += marginals.pairwise(t, a, b);
                }
            }
            grad.transitions[inst.labels[t] * labels + inst.labels[t + 1]] -= 1.0;
        }
        let last = inst.labels.len() - 1;
        for y in 0..labels {
            grad.begin[y] += marginals.unary(0, y);
            grad.end[y] += marginals.unary(last, y);
        }
        grad.begin[inst.labels[0]] -= 1.0;
        grad.end[inst.labels[last]] -= 1.0;
    }

    let squared: f64 = model.unary.iter().map(|w| w * w).sum();
    loss += 0.5 * weight_decay * squared;
    for (g, w) in grad.unary.iter_mut().zip(&model.unary) {
        *g += weight_decay * w;
    }
    Ok((loss, grad))
}

pub(crate) struct AdaGrad {
    accum: Vec<f64>,
    rate: f64,
}

impl AdaGrad {
    pub(crate) fn new(len: usize, rate: f64) -> Self {
        Self {
            accum: vec![0.0; len],
            rate,
        }
    }

    #[inline]
    pub(crate) fn step(&mut self, weights: &mut [f64], i: usize, g: f64) {
        if g == 0.0 {
            return;
        }
        self.accum[i] += g * g;
        weights[i] -= self.rate * g / (self.accum[i].sqrt() + ADAGRAD_EPS);
    }
}

/// Train in place with per-sentence adaptive-gradient steps. Returns the
/// per-epoch averaged regularized loss (data term averaged over sentences as
/// visited, penalty evaluated at epoch end).
///
/// The weight-decay gradient is applied to the unary coordinates active in
/// the current sentence, keeping each step sparse.
pub fn train(
    model: &mut CrfModel,
    instances: &[Instance],
    config: &TrainConfig,
) -> Result<Vec<f64>, CrfError> {
    config.validate()?;
    let labels = model.num_labels();
    for inst in instances {
        check_instance(inst, labels)?;
    }

    let mut unary_opt = AdaGrad::new(model.unary.len(), config.learning_rate);
    let mut trans_opt = AdaGrad::new(model.transitions.len(), config.learning_rate);
    let mut begin_opt = AdaGrad::new(labels, config.learning_rate);
    let mut end_opt = AdaGrad::new(labels, config.learning_rate);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);
    let mut local_feats: Vec<u32> = Vec::new();
    let mut local_grad: Vec<f64> = Vec::new();
    let mut trans_grad = vec![0.0; labels * labels];

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut data_loss = 0.0;
        for &i in &order {
            let inst = &instances[i];
            let lattice = score_lattice(&inst.features, model)?;
            let marginals = posterior_marginals(&lattice, None)?;
            let sentence_loss = marginals.log_partition - lattice.path_score(&inst.labels);
            if !sentence_loss.is_finite() {
                return Err(CrfError::NonFiniteLoss {
                    epoch,
                    sentence: i,
                    value: sentence_loss,
                });
            }
            data_loss += sentence_loss;

            local_feats.clear();
            for row in &inst.features {
                local_feats.extend_from_slice(row);
            }
            local_feats.sort_unstable();
            local_feats.dedup();
            local_grad.clear();
            local_grad.resize(local_feats.len() * labels, 0.0);

            for (t, feats) in inst.features.iter().enumerate() {
                for &f in feats {
                    let li = local_feats.binary_search(&f).expect("feature collected");
                    let row = &mut local_grad[li * labels..(li + 1) * labels];
                    for (y, slot) in row.iter_mut().enumerate() {
                        *slot += marginals.unary(t, y);
                    }
                    row[inst.labels[t]] -= 1.0;
                }
            }
            for (li, &f) in local_feats.iter().enumerate() {
                let base = f as usize * labels;
                for y in 0..labels {
                    let g =
                        local_grad[li * labels + y] + config.weight_decay * model.unary[base + y];
                    unary_opt.step(&mut model.unary, base + y, g);
                }
            }

            trans_grad.iter_mut().for_each(|g| *g = 0.0);
            for t in 0..inst.labels.len() - 1 {
                for a in 0..labels {
                    for b in 0..labels {
                        trans_grad[a * labels + b] += marginals.pairwise(t, a, b);
                    }
                }
                trans_grad[inst.labels[t] * labels + inst.labels[t + 1]] -= 1.0;
            }
            for (idx, &g) in trans_grad.iter().enumerate() {
                trans_opt.step(&mut model.transitions, idx, g);
            }

            let last = inst.labels.len() - 1;
            for y in 0..labels {
                let mut g = marginals.unary(0, y);
                if y == inst.labels[0] {
                    g -= 1.0;
                }
                begin_opt.step(&mut model.begin, y, g);
                let mut g = marginals.unary(last, y);
                if y == inst.labels[last] {
                    g -= 1.0;
                }
                end_opt.step(&mut model.end, y, g);
            }
        }

        let squared: f64 = model.unary.iter().map(|w| w * w).sum();
        let denom = instances.len().max(1) as f64;
        trace.push(data_loss / denom + 0.5 * config.weight_decay * squared);
    }
    Ok(trace)
}
