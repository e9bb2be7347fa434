//! Hand-written backpropagation through the whole stack and the adaptive
//! training loop on top of it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::net::{project, run_direction, DirectionTrace};
use super::{lstm_instances, BiLstmConfig, BiLstmCrfModel, LstmInstance, LstmParams, Vocab};
use crate::corpus::Document;
use crate::crf::{posterior_marginals, AdaGrad, CrfError, Lattice, TrainConfig};
use crate::scheme::LabelScheme;

/// Fill every block with draws from `U(-0.1, 0.1)`, then raise the forget
/// gate biases by one so early training keeps cell state around.
pub fn init_params(model: &mut BiLstmCrfModel, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (_, block) in model.blocks_mut() {
        for w in block {
            *w = rng.random_range(-0.1..0.1);
        }
    }
    let h = model.config.hidden_dim;
    for b in &mut model.fwd.bias[h..2 * h] {
        *b += 1.0;
    }
    for b in &mut model.bwd.bias[h..2 * h] {
        *b += 1.0;
    }
}

/// Gradient with one slice per parameter block, mirroring
/// [`BiLstmCrfModel::blocks`].
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmGradient {
    pub embeddings: Vec<f64>,
    pub fwd: LstmParams,
    pub bwd: LstmParams,
    pub proj: Vec<f64>,
    pub proj_bias: Vec<f64>,
    pub transitions: Vec<f64>,
    pub begin: Vec<f64>,
    pub end: Vec<f64>,
}

impl BiLstmGradient {
    pub fn zeros_like(model: &BiLstmCrfModel) -> Self {
        let labels = model.num_labels();
        let (d, h) = (model.config.embed_dim, model.config.hidden_dim);
        Self {
            embeddings: vec![0.0; model.embeddings.len()],
            fwd: LstmParams::zeros(d, h),
            bwd: LstmParams::zeros(d, h),
            proj: vec![0.0; 2 * h * labels],
            proj_bias: vec![0.0; labels],
            transitions: vec![0.0; labels * labels],
            begin: vec![0.0; labels],
            end: vec![0.0; labels],
        }
    }

    /// Same names and order as the model's blocks.
    pub fn blocks(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("embeddings", &self.embeddings),
            ("fwd.input", &self.fwd.input),
            ("fwd.recurrent", &self.fwd.recurrent),
            ("fwd.bias", &self.fwd.bias),
            ("bwd.input", &self.bwd.input),
            ("bwd.recurrent", &self.bwd.recurrent),
            ("bwd.bias", &self.bwd.bias),
            ("proj", &self.proj),
            ("proj_bias", &self.proj_bias),
            ("transitions", &self.transitions),
            ("begin", &self.begin),
            ("end", &self.end),
        ]
    }

    pub fn blocks_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("embeddings", self.embeddings.as_mut_slice()),
            ("fwd.input", self.fwd.input.as_mut_slice()),
            ("fwd.recurrent", self.fwd.recurrent.as_mut_slice()),
            ("fwd.bias", self.fwd.bias.as_mut_slice()),
            ("bwd.input", self.bwd.input.as_mut_slice()),
            ("bwd.recurrent", self.bwd.recurrent.as_mut_slice()),
            ("bwd.bias", self.bwd.bias.as_mut_slice()),
            ("proj", self.proj.as_mut_slice()),
            ("proj_bias", self.proj_bias.as_mut_slice()),
            ("transitions", self.transitions.as_mut_slice()),
            ("begin", self.begin.as_mut_slice()),
            ("end", self.end.as_mut_slice()),
        ]
    }
}

fn check_lstm_instance(
    inst: &LstmInstance,
    num_labels: usize,
    vocab_len: usize,
) -> Result<(), CrfError> {
    if inst.word_ids.is_empty() {
        return Err(CrfError::EmptyLattice);
    }
    if inst.word_ids.len() != inst.labels.len() {
        return Err(CrfError::DimensionMismatch(format!(
            "{} word ids vs {} labels",
            inst.word_ids.len(),
            inst.labels.len()
        )));
    }
    if let Some(&bad) = inst.labels.iter().find(|&&y| y >= num_labels) {
        return Err(CrfError::DimensionMismatch(format!(
            "label id {bad} out of range for {num_labels} labels"
        )));
    }
    if let Some(&bad) = inst.word_ids.iter().find(|&&w| w >= vocab_len) {
        return Err(CrfError::DimensionMismatch(format!(
            "word id {bad} out of range for vocabulary of {vocab_len}"
        )));
    }
    Ok(())
}

/// Negative log-likelihood of the batch plus the L2 term over every block,
/// and its full gradient. An empty batch leaves the pure penalty: loss
/// `(wd/2)·‖θ‖²`, gradient `wd·θ` blockwise.
pub fn nll_and_gradient_bilstm(
    model: &BiLstmCrfModel,
    batch: &[LstmInstance],
    weight_decay: f64,
) -> Result<(f64, BiLstmGradient), CrfError> {
    if !weight_decay.is_finite() || weight_decay < 0.0 {
        return Err(CrfError::InvalidConfig(
            "weight decay must be finite and nonnegative".into(),
        ));
    }
    let labels = model.num_labels();
    let mut grad = BiLstmGradient::zeros_like(model);
    let mut loss = 0.0;
    for inst in batch {
        check_lstm_instance(inst, labels, model.vocab.len())?;
        loss += accumulate_sentence(model, inst, &mut grad)?;
    }

    let mut squared = 0.0;
    for ((_, params), (_, g)) in model.blocks().into_iter().zip(grad.blocks_mut()) {
        for (gv, p) in g.iter_mut().zip(params) {
            squared += p * p;
            *gv += weight_decay * p;
        }
    }
    loss += 0.5 * weight_decay * squared;
    Ok((loss, grad))
}

fn accumulate_sentence(
    model: &BiLstmCrfModel,
    inst: &LstmInstance,
    grad: &mut BiLstmGradient,
) -> Result<f64, CrfError> {
    let labels = model.num_labels();
    let h = model.config.hidden_dim;
    let len = inst.word_ids.len();

    let fwd = run_direction(model, &model.fwd, &inst.word_ids, false);
    let bwd = run_direction(model, &model.bwd, &inst.word_ids, true);
    let emissions = project(model, &fwd, &bwd, len);
    let lattice = Lattice::from_parts(
        len,
        labels,
        emissions,
        model.transitions.clone(),
        model.begin.clone(),
        model.end.clone(),
    )?;
    let marginals = posterior_marginals(&lattice, None)?;
    let sentence_loss = marginals.log_partition - lattice.path_score(&inst.labels);

    for t in 0..len - 1 {
        for a in 0..labels {
            for b in 0..labels {
                grad.transitions[a * labels + b] += marginals.pairwise(t, a, b);
            }
        }
        grad.transitions[inst.labels[t] * labels + inst.labels[t + 1]] -= 1.0;
    }
    let last = len - 1;
    for y in 0..labels {
        grad.begin[y] += marginals.unary(0, y);
        grad.end[y] += marginals.unary(last, y);
    }
    grad.begin[inst.labels[0]] -= 1.0;
    grad.end[inst.labels[last]] -= 1.0;

    // Loss gradient w.r.t. each emission: posterior minus gold one-hot.
    let mut demission = vec![0.0; len * labels];
    for t in 0..len {
        for y in 0..labels {
            demission[t * labels + y] = marginals.unary(t, y);
        }
        demission[t * labels + inst.labels[t]] -= 1.0;
    }

    // Through the projection, producing the upstream hidden-state gradients.
    let mut dh_fwd = vec![0.0; len * h];
    let mut dh_bwd = vec![0.0; len * h];
    for t in 0..len {
        let de = &demission[t * labels..(t + 1) * labels];
        for (g, d) in grad.proj_bias.iter_mut().zip(de) {
            *g += d;
        }
        let hf = fwd.hidden_at(t);
        let hb = bwd.hidden_at(t);
        for k in 0..h {
            let mut df = 0.0;
            let mut db = 0.0;
            for (y, &d) in de.iter().enumerate() {
                grad.proj[k * labels + y] += hf[k] * d;
                grad.proj[(h + k) * labels + y] += hb[k] * d;
                df += model.proj[k * labels + y] * d;
                db += model.proj[(h + k) * labels + y] * d;
            }
            dh_fwd[t * h + k] = df;
            dh_bwd[t * h + k] = db;
        }
    }

    backprop_direction(
        model,
        &model.fwd,
        &fwd,
        &inst.word_ids,
        &dh_fwd,
        &mut grad.fwd,
        &mut grad.embeddings,
    );
    backprop_direction(
        model,
        &model.bwd,
        &bwd,
        &inst.word_ids,
        &dh_bwd,
        &mut grad.bwd,
        &mut grad.embeddings,
    );
    Ok(sentence_loss)
}

/// Walk one direction's steps in reverse processing order, carrying the
/// hidden- and cell-state gradients between steps.
fn backprop_direction(
    model: &BiLstmCrfModel,
    params: &LstmParams,
    trace: &DirectionTrace,
    word_ids: &[usize],
    dh_upstream: &[f64],
    grad_params: &mut LstmParams,
    grad_embeddings: &mut [f64],
) {
    let h = model.config.hidden_dim;
    let d = model.config.embed_dim;
    let zeros = vec![0.0; h];
    let mut carry_h = vec![0.0; h];
    let mut carry_c = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];

    for step in (0..word_ids.len()).rev() {
        let p = trace.order[step];
        let gates = &trace.gates[p * 4 * h..(p + 1) * 4 * h];
        let tanh_c = &trace.tanh_cells[p * h..(p + 1) * h];
        let (h_prev, c_prev): (&[f64], &[f64]) = if step > 0 {
            let q = trace.order[step - 1];
            (
                &trace.hiddens[q * h..(q + 1) * h],
                &trace.cells[q * h..(q + 1) * h],
            )
        } else {
            (&zeros, &zeros)
        };

        for k in 0..h {
            let dh = dh_upstream[p * h + k] + carry_h[k];
            let (i, f, g, o) = (gates[k], gates[h + k], gates[2 * h + k], gates[3 * h + k]);
            let tc = tanh_c[k];
            let dc = dh * o * (1.0 - tc * tc) + carry_c[k];
            let d_o = dh * tc;
            dz[k] = dc * g * i * (1.0 - i);
            dz[h + k] = dc * c_prev[k] * f * (1.0 - f);
            dz[2 * h + k] = dc * i * (1.0 - g * g);
            dz[3 * h + k] = d_o * o * (1.0 - o);
            carry_c[k] = dc * f;
        }

        let word = word_ids[p];
        let x = &model.embeddings[word * d..(word + 1) * d];
        let emb_row = &mut grad_embeddings[word * d..(word + 1) * d];
        carry_h.iter_mut().for_each(|v| *v = 0.0);
        for (r, &dzr) in dz.iter().enumerate() {
            grad_params.bias[r] += dzr;
            let w_row = &params.input[r * d..(r + 1) * d];
            let gw_row = &mut grad_params.input[r * d..(r + 1) * d];
            for c in 0..d {
                gw_row[c] += dzr * x[c];
                emb_row[c] += dzr * w_row[c];
            }
            let u_row = &params.recurrent[r * h..(r + 1) * h];
            let gu_row = &mut grad_params.recurrent[r * h..(r + 1) * h];
            for c in 0..h {
                gu_row[c] += dzr * h_prev[c];
                carry_h[c] += dzr * u_row[c];
            }
        }
    }
}

/// Train in place with per-sentence adaptive-gradient steps on every block.
/// Returns the per-epoch mean of the per-sentence regularized losses, in
/// visit order.
pub fn train_bilstm(
    model: &mut BiLstmCrfModel,
    instances: &[LstmInstance],
    config: &TrainConfig,
) -> Result<Vec<f64>, CrfError> {
    config.validate()?;
    model.config.validate()?;
    let labels = model.num_labels();
    for inst in instances {
        check_lstm_instance(inst, labels, model.vocab.len())?;
    }

    let mut optimizers: Vec<AdaGrad> = model
        .blocks()
        .iter()
        .map(|(_, p)| AdaGrad::new(p.len(), config.learning_rate))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..instances.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for &i in &order {
            let one = std::slice::from_ref(&instances[i]);
            let (loss, grad) = nll_and_gradient_bilstm(model, one, config.weight_decay)?;
            if !loss.is_finite() {
                return Err(CrfError::NonFiniteLoss {
                    epoch,
                    sentence: i,
                    value: loss,
                });
            }
            epoch_loss += loss;
            let blocks = model.blocks_mut().into_iter().zip(grad.blocks());
            for (opt, ((_, params), (_, g))) in optimizers.iter_mut().zip(blocks) {
                for (idx, &gv) in g.iter().enumerate() {
                    opt.step(params, idx, gv);
                }
            }
        }
        trace.push(epoch_loss / instances.len().max(1) as f64);
    }
    Ok(trace)
}

/// Build the vocabulary, initialize from the encoder seed, and train.
pub fn fit_bilstm(
    docs: &[Document],
    scheme: &LabelScheme,
    config: &BiLstmConfig,
    train_config: &TrainConfig,
) -> Result<(BiLstmCrfModel, Vec<f64>), CrfError> {
    config.validate()?;
    train_config.validate()?;
    let vocab = Vocab::fit(docs, config.min_freq);
    let mut model = BiLstmCrfModel::zeros(scheme.clone(), config.clone(), vocab);
    init_params(&mut model, config.seed);
    let instances = lstm_instances(docs, scheme, &model.vocab)?;
    let trace = train_bilstm(&mut model, &instances, train_config)?;
    Ok((model, trace))
}
