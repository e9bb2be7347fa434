//! Sequence labeling for wet-lab protocols: corpus handling, feature-based
//! linear-chain CRFs, a toy BiLSTM-CRF, and entity-level evaluation.

pub mod bilstm;
pub mod corpus;
pub mod crf;
pub mod eval;
pub mod features;
pub mod model_io;
pub mod scheme;

pub use scheme::{LabelScheme, TagKind};
