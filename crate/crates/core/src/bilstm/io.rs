//! BiLSTM-CRF model persistence.

use std::io::{Read, Write};
use std::path::Path;

use crate::model_io::{
    open_reader, read_scheme, write_atomic, write_scheme, ModelIoError, ModelReader, ModelWriter,
    BILSTM_MAGIC,
};

use super::{BiLstmConfig, BiLstmCrfModel, LstmParams, Vocab};

pub const BILSTM_FORMAT_VERSION: u32 = 1;

fn write_direction<W: Write>(
    w: &mut ModelWriter<W>,
    params: &LstmParams,
) -> Result<(), ModelIoError> {
    w.f64_slice(&params.input)?;
    w.f64_slice(&params.recurrent)?;
    w.f64_slice(&params.bias)
}

fn read_direction<R: Read>(r: &mut ModelReader<R>) -> Result<LstmParams, ModelIoError> {
    Ok(LstmParams {
        input: r.f64_slice()?,
        recurrent: r.f64_slice()?,
        bias: r.f64_slice()?,
    })
}

pub fn write_model<W: Write>(
    w: &mut ModelWriter<W>,
    model: &BiLstmCrfModel,
) -> Result<(), ModelIoError> {
    w.magic(BILSTM_MAGIC)?;
    w.u32(BILSTM_FORMAT_VERSION)?;
    write_scheme(w, &model.scheme)?;
    w.u64(model.config.min_freq as u64)?;
    w.u64(model.config.embed_dim as u64)?;
    w.u64(model.config.hidden_dim as u64)?;
    w.u64(model.config.seed)?;
    w.string_list(model.vocab.known_words())?;
    w.f64_slice(&model.embeddings)?;
    write_direction(w, &model.fwd)?;
    write_direction(w, &model.bwd)?;
    w.f64_slice(&model.proj)?;
    w.f64_slice(&model.proj_bias)?;
    w.f64_slice(&model.transitions)?;
    w.f64_slice(&model.begin)?;
    w.f64_slice(&model.end)
}

pub fn read_model<R: Read>(r: &mut ModelReader<R>) -> Result<BiLstmCrfModel, ModelIoError> {
    r.expect_magic(BILSTM_MAGIC)?;
    let version = r.u32()?;
    if version != BILSTM_FORMAT_VERSION {
        return Err(ModelIoError::VersionMismatch {
            found: version.to_string(),
            expected: BILSTM_FORMAT_VERSION.to_string(),
        });
    }
    let scheme = read_scheme(r)?;
    let config = BiLstmConfig {
        min_freq: r.u64()? as usize,
        embed_dim: r.u64()? as usize,
        hidden_dim: r.u64()? as usize,
        seed: r.u64()?,
    };
    if config.validate().is_err() {
        return Err(ModelIoError::CorruptFile(
            "stored encoder dimensions are out of range".into(),
        ));
    }
    let vocab = Vocab::with_words(r.string_list()?);
    let model = BiLstmCrfModel {
        scheme,
        config,
        vocab,
        embeddings: r.f64_slice()?,
        fwd: read_direction(r)?,
        bwd: read_direction(r)?,
        proj: r.f64_slice()?,
        proj_bias: r.f64_slice()?,
        transitions: r.f64_slice()?,
        begin: r.f64_slice()?,
        end: r.f64_slice()?,
    };

    let labels = model.num_labels();
    let (d, h) = (model.config.embed_dim, model.config.hidden_dim);
    let sized = model.embeddings.len() == model.vocab.len() * d
        && model.fwd.input.len() == 4 * h * d
        && model.fwd.recurrent.len() == 4 * h * h
        && model.fwd.bias.len() == 4 * h
        && model.bwd.input.len() == 4 * h * d
        && model.bwd.recurrent.len() == 4 * h * h
        && model.bwd.bias.len() == 4 * h
        && model.proj.len() == 2 * h * labels
        && model.proj_bias.len() == labels
        && model.transitions.len() == labels * labels
        && model.begin.len() == labels
        && model.end.len() == labels;
    if !sized {
        return Err(ModelIoError::CorruptFile(
            "parameter block sizes disagree with scheme, vocabulary, and dims".into(),
        ));
    }
    Ok(model)
}

/// Save atomically (temp file + rename).
pub fn save_model(model: &BiLstmCrfModel, path: &Path) -> Result<(), ModelIoError> {
    write_atomic(path, |w| write_model(w, model))
}

pub fn load_model(path: &Path) -> Result<BiLstmCrfModel, ModelIoError> {
    let mut reader = open_reader(path)?;
    let model = read_model(&mut reader)?;
    reader.expect_eof()?;
    Ok(model)
}
