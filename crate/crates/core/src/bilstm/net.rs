//! Forward pass: LSTM steps, both directions, and the label projection.

use super::{BiLstmCrfModel, LstmParams};

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Everything the backward pass needs from one step.
pub(crate) struct StepCache {
    /// Activated gates, `4H` values stacked `[i, f, g, o]`.
    pub gates: Vec<f64>,
    pub cell: Vec<f64>,
    pub tanh_cell: Vec<f64>,
    pub hidden: Vec<f64>,
}

pub(crate) fn step_with_cache(
    params: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> StepCache {
    let hidden = h_prev.len();
    let input_dim = x.len();
    let mut pre = params.bias.clone();
    for (r, slot) in pre.iter_mut().enumerate() {
        let w_row = &params.input[r * input_dim..(r + 1) * input_dim];
        let u_row = &params.recurrent[r * hidden..(r + 1) * hidden];
        let mut acc = 0.0;
        for (w, xv) in w_row.iter().zip(x) {
            acc += w * xv;
        }
        for (u, hv) in u_row.iter().zip(h_prev) {
            acc += u * hv;
        }
        *slot += acc;
    }
    let mut gates = vec![0.0; 4 * hidden];
    for k in 0..hidden {
        gates[k] = sigmoid(pre[k]);
        gates[hidden + k] = sigmoid(pre[hidden + k]);
        gates[2 * hidden + k] = pre[2 * hidden + k].tanh();
        gates[3 * hidden + k] = sigmoid(pre[3 * hidden + k]);
    }
    let mut cell = vec![0.0; hidden];
    let mut tanh_cell = vec![0.0; hidden];
    let mut out = vec![0.0; hidden];
    for k in 0..hidden {
        cell[k] = gates[hidden + k] * c_prev[k] + gates[k] * gates[2 * hidden + k];
        tanh_cell[k] = cell[k].tanh();
        out[k] = gates[3 * hidden + k] * tanh_cell[k];
    }
    StepCache {
        gates,
        cell,
        tanh_cell,
        hidden: out,
    }
}

/// One four-gate LSTM update: returns `(hidden, cell)`. Gate rows follow the
/// `[input, forget, candidate, output]` stacking of [`LstmParams`].
pub fn recurrent_step(
    params: &LstmParams,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let cache = step_with_cache(params, x, h_prev, c_prev);
    (cache.hidden, cache.cell)
}

/// Per-position step caches for one direction, plus the processing order.
pub struct DirectionTrace {
    pub(crate) gates: Vec<f64>,
    pub(crate) cells: Vec<f64>,
    pub(crate) tanh_cells: Vec<f64>,
    pub(crate) hiddens: Vec<f64>,
    pub(crate) order: Vec<usize>,
    pub(crate) hidden_dim: usize,
}

impl DirectionTrace {
    pub(crate) fn hidden_at(&self, position: usize) -> &[f64] {
        &self.hiddens[position * self.hidden_dim..(position + 1) * self.hidden_dim]
    }
}

pub(crate) fn run_direction(
    model: &BiLstmCrfModel,
    params: &LstmParams,
    word_ids: &[usize],
    reverse: bool,
) -> DirectionTrace {
    let h = model.config.hidden_dim;
    let d = model.config.embed_dim;
    let len = word_ids.len();
    let order: Vec<usize> = if reverse {
        (0..len).rev().collect()
    } else {
        (0..len).collect()
    };
    let mut trace = DirectionTrace {
        gates: vec![0.0; len * 4 * h],
        cells: vec![0.0; len * h],
        tanh_cells: vec![0.0; len * h],
        hiddens: vec![0.0; len * h],
        order,
        hidden_dim: h,
    };
    let mut h_prev = vec![0.0; h];
    let mut c_prev = vec![0.0; h];
    for idx in 0..len {
        let p = trace.order[idx];
        let word = word_ids[p];
        let x = &model.embeddings[word * d..(word + 1) * d];
        let cache = step_with_cache(params, x, &h_prev, &c_prev);
        trace.gates[p * 4 * h..(p + 1) * 4 * h].copy_from_slice(&cache.gates);
        trace.cells[p * h..(p + 1) * h].copy_from_slice(&cache.cell);
        trace.tanh_cells[p * h..(p + 1) * h].copy_from_slice(&cache.tanh_cell);
        trace.hiddens[p * h..(p + 1) * h].copy_from_slice(&cache.hidden);
        h_prev = cache.hidden;
        c_prev = cache.cell;
    }
    trace
}

pub(crate) fn project(
    model: &BiLstmCrfModel,
    fwd: &DirectionTrace,
    bwd: &DirectionTrace,
    len: usize,
) -> Vec<f64> {
    let h = model.config.hidden_dim;
    let labels = model.num_labels();
    let mut emissions = vec![0.0; len * labels];
    for t in 0..len {
        let row = &mut emissions[t * labels..(t + 1) * labels];
        row.copy_from_slice(&model.proj_bias);
        for (k, &hf) in fwd.hidden_at(t).iter().enumerate() {
            let weights = &model.proj[k * labels..(k + 1) * labels];
            for (slot, w) in row.iter_mut().zip(weights) {
                *slot += hf * w;
            }
        }
        for (k, &hb) in bwd.hidden_at(t).iter().enumerate() {
            let weights = &model.proj[(h + k) * labels..(h + k + 1) * labels];
            for (slot, w) in row.iter_mut().zip(weights) {
                *slot += hb * w;
            }
        }
    }
    emissions
}

/// Per-position label scores, `(len × labels)` row-major: embeddings through
/// both recurrent directions, concatenated, projected.
pub fn encode(model: &BiLstmCrfModel, word_ids: &[usize]) -> Vec<f64> {
    let fwd = run_direction(model, &model.fwd, word_ids, false);
    let bwd = run_direction(model, &model.bwd, word_ids, true);
    project(model, &fwd, &bwd, word_ids.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilstm::{init_params, BiLstmConfig, Vocab};
    use crate::scheme::LabelScheme;

    fn tiny_model(seed: u64) -> BiLstmCrfModel {
        let scheme = LabelScheme::new(vec!["X".into()]).unwrap();
        let vocab = Vocab::with_words(vec!["a".into(), "b".into(), "c".into()]);
        let config = BiLstmConfig {
            embed_dim: 3,
            hidden_dim: 2,
            ..BiLstmConfig::default()
        };
        let mut model = BiLstmCrfModel::zeros(scheme, config, vocab);
        init_params(&mut model, seed);
        model
    }

    #[test]
    fn zero_params_give_zero_hidden() {
        let params = LstmParams::zeros(3, 2);
        let (h, c) = recurrent_step(&params, &[0.5, -1.0, 2.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert_eq!(h, vec![0.0, 0.0]);
        assert_eq!(c, vec![0.0, 0.0]);
    }

    #[test]
    fn hidden_stays_in_open_unit_interval() {
        let model = tiny_model(3);
        let (h, _) = recurrent_step(&model.fwd, &[3.0, -2.0, 5.0], &[0.9, -0.9], &[2.0, -3.0]);
        for v in h {
            assert!(v > -1.0 && v < 1.0);
        }
    }

    #[test]
    fn matches_scalar_reimplementation() {
        let mut params = LstmParams::zeros(1, 1);
        params.input = vec![0.5, -0.25, 0.75, 1.5];
        params.recurrent = vec![-0.8, 0.5, 0.25, -0.5];
        params.bias = vec![0.1, 1.1, -0.2, 0.3];
        let (x, h0, c0) = (0.8, -0.4, 0.6);

        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let i = sig(0.5 * x + -0.8 * h0 + 0.1);
        let f = sig(-0.25 * x + 0.5 * h0 + 1.1);
        let g = (0.75 * x + 0.25 * h0 + -0.2).tanh();
        let o = sig(1.5 * x + -0.5 * h0 + 0.3);
        let c = f * c0 + i * g;
        let h = o * c.tanh();

        let (got_h, got_c) = recurrent_step(&params, &[x], &[h0], &[c0]);
        assert!((got_h[0] - h).abs() < 1e-15);
        assert!((got_c[0] - c).abs() < 1e-15);
    }

    #[test]
    fn emission_shape_is_input_length_by_labels() {
        let model = tiny_model(1);
        for len in 1..5 {
            let ids = vec![1usize; len];
            let emissions = encode(&model, &ids);
            assert_eq!(emissions.len(), len * model.num_labels());
        }
    }

    #[test]
    fn zero_projection_gives_zero_emissions() {
        let mut model = tiny_model(2);
        model.proj.iter_mut().for_each(|w| *w = 0.0);
        model.proj_bias.iter_mut().for_each(|w| *w = 0.0);
        let emissions = encode(&model, &[1, 2, 3]);
        assert!(emissions.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn swapped_directions_reverse_emissions() {
        let mut model = tiny_model(4);
        let h = model.config.hidden_dim;
        let labels = model.num_labels();
        for k in 0..h {
            for y in 0..labels {
                let v = model.proj[k * labels + y];
                model.proj[(h + k) * labels + y] = v;
            }
        }
        let mut swapped = model.clone();
        std::mem::swap(&mut swapped.fwd, &mut swapped.bwd);

        let ids = [1usize, 2, 3, 1, 2];
        let forward = encode(&model, &ids);
        let reversed_ids: Vec<usize> = ids.iter().rev().copied().collect();
        let backward = encode(&swapped, &reversed_ids);
        let len = ids.len();
        for t in 0..len {
            for y in 0..labels {
                let a = forward[t * labels + y];
                let b = backward[(len - 1 - t) * labels + y];
                assert!((a - b).abs() < 1e-12, "t={t} y={y}: {a} vs {b}");
            }
        }
    }
}
