//! CRF model persistence.

use std::io::{Read, Write};
use std::path::Path;

use crate::features::{FeatureConfig, FeatureIndex, Gazetteer, FEATURE_GRAMMAR_VERSION};
use crate::model_io::{
    open_reader, read_scheme, write_atomic, write_scheme, ModelIoError, ModelReader, ModelWriter,
    CRF_MAGIC,
};

use super::CrfModel;

pub const CRF_FORMAT_VERSION: u32 = 1;

pub(crate) fn write_feature_config<W: Write>(
    w: &mut ModelWriter<W>,
    config: &FeatureConfig,
) -> Result<(), ModelIoError> {
    w.u32(config.radius as u32)?;
    w.u32(config.affix_max as u32)?;
    w.u8(config.use_shape as u8)?;
    w.u8(config.use_gazetteer as u8)
}

pub(crate) fn read_feature_config<R: Read>(
    r: &mut ModelReader<R>,
) -> Result<FeatureConfig, ModelIoError> {
    Ok(FeatureConfig {
        radius: r.u32()? as usize,
        affix_max: r.u32()? as usize,
        use_shape: r.u8()? != 0,
        use_gazetteer: r.u8()? != 0,
    })
}

pub(crate) fn write_gazetteer<W: Write>(
    w: &mut ModelWriter<W>,
    gazetteer: &Gazetteer,
) -> Result<(), ModelIoError> {
    let types: Vec<&str> = gazetteer.types().collect();
    w.u32(types.len() as u32)?;
    for ty in types {
        w.string(ty)?;
        let phrases: Vec<&[String]> = gazetteer.phrases(ty).collect();
        w.u32(phrases.len() as u32)?;
        for phrase in phrases {
            w.u32(phrase.len() as u32)?;
            for token in phrase {
                w.string(token)?;
            }
        }
    }
    Ok(())
}

pub(crate) fn read_gazetteer<R: Read>(r: &mut ModelReader<R>) -> Result<Gazetteer, ModelIoError> {
    let mut gazetteer = Gazetteer::new();
    let types = r.u32()?;
    for _ in 0..types {
        let ty = r.string()?;
        let phrases = r.u32()?;
        for _ in 0..phrases {
            let len = r.u32()?;
            let tokens = (0..len)
                .map(|_| r.string())
                .collect::<Result<Vec<_>, _>>()?;
            let borrowed: Vec<&str> = tokens.iter().map(String::as_str).collect();
            gazetteer.add_phrase(&ty, &borrowed);
        }
    }
    Ok(gazetteer)
}

pub fn write_model<W: Write>(w: &mut ModelWriter<W>, model: &CrfModel) -> Result<(), ModelIoError> {
    w.magic(CRF_MAGIC)?;
    w.u32(CRF_FORMAT_VERSION)?;
    w.string(FEATURE_GRAMMAR_VERSION)?;
    write_scheme(w, &model.scheme)?;
    write_feature_config(w, &model.feature_config)?;
    write_gazetteer(w, &model.gazetteer)?;
    w.string_list(model.index.names())?;
    w.f64_slice(&model.unary)?;
    w.f64_slice(&model.transitions)?;
    w.f64_slice(&model.begin)?;
    w.f64_slice(&model.end)
}

pub fn read_model<R: Read>(r: &mut ModelReader<R>) -> Result<CrfModel, ModelIoError> {
    r.expect_magic(CRF_MAGIC)?;
    let version = r.u32()?;
    if version != CRF_FORMAT_VERSION {
        return Err(ModelIoError::VersionMismatch {
            found: version.to_string(),
            expected: CRF_FORMAT_VERSION.to_string(),
        });
    }
    let grammar = r.string()?;
    if grammar != FEATURE_GRAMMAR_VERSION {
        return Err(ModelIoError::VersionMismatch {
            found: grammar,
            expected: FEATURE_GRAMMAR_VERSION.to_string(),
        });
    }
    let scheme = read_scheme(r)?;
    let feature_config = read_feature_config(r)?;
    let gazetteer = read_gazetteer(r)?;
    let index = FeatureIndex::from_names(r.string_list()?)?;
    let unary = r.f64_slice()?;
    let transitions = r.f64_slice()?;
    let begin = r.f64_slice()?;
    let end = r.f64_slice()?;

    let labels = scheme.num_tags();
    if unary.len() != index.len() * labels
        || transitions.len() != labels * labels
        || begin.len() != labels
        || end.len() != labels
    {
        return Err(ModelIoError::CorruptFile(
            "weight block sizes disagree with scheme and index".into(),
        ));
    }
    Ok(CrfModel {
        scheme,
        feature_config,
        gazetteer,
        index,
        unary,
        transitions,
        begin,
        end,
    })
}

/// Save atomically (temp file + rename).
pub fn save_model(model: &CrfModel, path: &Path) -> Result<(), ModelIoError> {
    write_atomic(path, |w| write_model(w, model))
}

pub fn load_model(path: &Path) -> Result<CrfModel, ModelIoError> {
    let mut reader = open_reader(path)?;
    let model = read_model(&mut reader)?;
    reader.expect_eof()?;
    Ok(model)
}
