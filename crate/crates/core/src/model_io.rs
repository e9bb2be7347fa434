//! Binary model container primitives shared by the CRF and BiLSTM formats.
//!
//! Layout conventions: a newline-terminated ASCII magic line, a `u32` format
//! version, then length-prefixed fields. Integers are little-endian; floats
//! are stored as `f64::to_le_bytes`, so save/load round-trips are bit-exact.
//! Strings are `u32` byte length + UTF-8. File writes go through a temp file
//! and rename, so readers never observe a partial model.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::features::FeatureError;
use crate::scheme::SchemeError;

pub const CRF_MAGIC: &str = "seqtag-crf-v1\n";
pub const BILSTM_MAGIC: &str = "seqtag-bilstm-v1\n";

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("corrupt model file: {0}")]
    CorruptFile(String),
    #[error("model version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: String, expected: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model carries an invalid scheme: {0}")]
    Scheme(#[from] SchemeError),
    #[error("model carries an invalid feature table: {0}")]
    Feature(#[from] FeatureError),
}

/// Which kind of model a file claims to contain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Crf,
    Bilstm,
}

/// Read just the magic line of a model file.
pub fn sniff_kind(path: &Path) -> Result<ModelKind, ModelIoError> {
    let mut file = File::open(path)?;
    let mut buf = [0u8; 32];
    let mut got = 0;
    while got < buf.len() {
        match file.read(&mut buf[got..])? {
            0 => break,
            n => got += n,
        }
        if buf[..got].contains(&b'\n') {
            break;
        }
    }
    let head = &buf[..got];
    if head.starts_with(CRF_MAGIC.as_bytes()) {
        Ok(ModelKind::Crf)
    } else if head.starts_with(BILSTM_MAGIC.as_bytes()) {
        Ok(ModelKind::Bilstm)
    } else {
        Err(ModelIoError::CorruptFile("unrecognized magic line".into()))
    }
}

pub struct ModelWriter<W: Write> {
    inner: W,
}

impl<W: Write> ModelWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn magic(&mut self, magic: &str) -> Result<(), ModelIoError> {
        self.inner.write_all(magic.as_bytes())?;
        Ok(())
    }

    pub fn u8(&mut self, v: u8) -> Result<(), ModelIoError> {
        self.inner.write_all(&[v])?;
        Ok(())
    }

    pub fn u32(&mut self, v: u32) -> Result<(), ModelIoError> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn u64(&mut self, v: u64) -> Result<(), ModelIoError> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn f64(&mut self, v: f64) -> Result<(), ModelIoError> {
        self.inner.write_all(&v.to_le_bytes())?;
        Ok(())
    }

    pub fn string(&mut self, s: &str) -> Result<(), ModelIoError> {
        self.u32(s.len() as u32)?;
        self.inner.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn string_list(&mut self, items: &[String]) -> Result<(), ModelIoError> {
        self.u64(items.len() as u64)?;
        for item in items {
            self.string(item)?;
        }
        Ok(())
    }

    pub fn f64_slice(&mut self, values: &[f64]) -> Result<(), ModelIoError> {
        self.u64(values.len() as u64)?;
        for &v in values {
            self.inner.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), ModelIoError> {
        self.inner.flush()?;
        Ok(())
    }
}

pub struct ModelReader<R: Read> {
    inner: R,
}

impl<R: Read> ModelReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner }
    }

    fn fill(&mut self, buf: &mut [u8]) -> Result<(), ModelIoError> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == ErrorKind::UnexpectedEof {
                ModelIoError::CorruptFile("file truncated".into())
            } else {
                ModelIoError::Io(e)
            }
        })
    }

    pub fn expect_magic(&mut self, magic: &str) -> Result<(), ModelIoError> {
        let mut buf = vec![0u8; magic.len()];
        self.fill(&mut buf)?;
        if buf != magic.as_bytes() {
            return Err(ModelIoError::CorruptFile(format!(
                "expected magic {:?}",
                magic.trim_end()
            )));
        }
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8, ModelIoError> {
        let mut buf = [0u8; 1];
        self.fill(&mut buf)?;
        Ok(buf[0])
    }

    pub fn u32(&mut self) -> Result<u32, ModelIoError> {
        let mut buf = [0u8; 4];
        self.fill(&mut buf)?;
        Ok(u32::from_le_bytes(buf))
    }

    pub fn u64(&mut self) -> Result<u64, ModelIoError> {
        let mut buf = [0u8; 8];
        self.fill(&mut buf)?;
        Ok(u64::from_le_bytes(buf))
    }

    pub fn f64(&mut self) -> Result<f64, ModelIoError> {
        let mut buf = [0u8; 8];
        self.fill(&mut buf)?;
        Ok(f64::from_le_bytes(buf))
    }

    pub fn string(&mut self) -> Result<String, ModelIoError> {
        let len = self.u32()? as usize;
        if len > (1 << 30) {
            return Err(ModelIoError::CorruptFile(format!(
                "implausible string length {len}"
            )));
        }
        let mut buf = vec![0u8; len];
        self.fill(&mut buf)?;
        String::from_utf8(buf).map_err(|_| ModelIoError::CorruptFile("string is not UTF-8".into()))
    }

    pub fn string_list(&mut self) -> Result<Vec<String>, ModelIoError> {
        let len = self.u64()? as usize;
        if len > (1 << 32) {
            return Err(ModelIoError::CorruptFile(format!(
                "implausible list length {len}"
            )));
        }
        (0..len).map(|_| self.string()).collect()
    }

    pub fn f64_slice(&mut self) -> Result<Vec<f64>, ModelIoError> {
        let len = self.u64()? as usize;
        if len > (1 << 32) {
            return Err(ModelIoError::CorruptFile(format!(
                "implausible array length {len}"
            )));
        }
        let mut out = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            self.fill(&mut buf)?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(out)
    }

    /// Fails unless the stream is fully consumed.
    pub fn expect_eof(&mut self) -> Result<(), ModelIoError> {
        let mut buf = [0u8; 1];
        match self.inner.read(&mut buf)? {
            0 => Ok(()),
            _ => Err(ModelIoError::CorruptFile(
                "trailing bytes after model payload".into(),
            )),
        }
    }
}

/// Atomically write `payload(writer)` to `path` (temp file + rename).
pub fn write_atomic(
    path: &Path,
    payload: impl FnOnce(&mut ModelWriter<BufWriter<&mut File>>) -> Result<(), ModelIoError>,
) -> Result<(), ModelIoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut temp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    {
        let mut writer = ModelWriter::new(BufWriter::new(temp.as_file_mut()));
        payload(&mut writer)?;
        writer.finish()?;
    }
    temp.as_file_mut().sync_all()?;
    temp.persist(path).map_err(|e| ModelIoError::Io(e.error))?;
    Ok(())
}

/// Open `path` for model reading.
pub fn open_reader(path: &Path) -> Result<ModelReader<BufReader<File>>, ModelIoError> {
    Ok(ModelReader::new(BufReader::new(File::open(path)?)))
}

pub fn write_scheme<W: Write>(
    w: &mut ModelWriter<W>,
    scheme: &crate::scheme::LabelScheme,
) -> Result<(), ModelIoError> {
    let types: Vec<String> = (0..scheme.num_types())
        .map(|t| scheme.type_name(t).to_string())
        .collect();
    w.string_list(&types)?;
    let aliases = scheme.display_aliases();
    w.u32(aliases.len() as u32)?;
    for (name, alias) in aliases {
        w.string(name)?;
        w.string(alias)?;
    }
    Ok(())
}

pub fn read_scheme<R: Read>(
    r: &mut ModelReader<R>,
) -> Result<crate::scheme::LabelScheme, ModelIoError> {
    let types = r.string_list()?;
    let mut scheme = crate::scheme::LabelScheme::new(types)?;
    let aliases = r.u32()?;
    for _ in 0..aliases {
        let name = r.string()?;
        let alias = r.string()?;
        scheme.set_display_alias(&name, &alias);
    }
    Ok(scheme)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_round_trip() {
        let mut bytes = Vec::new();
        {
            let mut w = ModelWriter::new(&mut bytes);
            w.magic(CRF_MAGIC).unwrap();
            w.u32(7).unwrap();
            w.u64(u64::MAX).unwrap();
            w.f64(-0.1).unwrap();
            w.f64(f64::MIN_POSITIVE).unwrap();
            w.string("héllo\tworld").unwrap();
            w.string_list(&["a".into(), "".into()]).unwrap();
            w.f64_slice(&[1.5, -2.25, 0.0]).unwrap();
        }
        let mut r = ModelReader::new(bytes.as_slice());
        r.expect_magic(CRF_MAGIC).unwrap();
        assert_eq!(r.u32().unwrap(), 7);
        assert_eq!(r.u64().unwrap(), u64::MAX);
        assert_eq!(r.f64().unwrap().to_bits(), (-0.1f64).to_bits());
        assert_eq!(r.f64().unwrap(), f64::MIN_POSITIVE);
        assert_eq!(r.string().unwrap(), "héllo\tworld");
        assert_eq!(
            r.string_list().unwrap(),
            vec!["a".to_string(), String::new()]
        );
        assert_eq!(r.f64_slice().unwrap(), vec![1.5, -2.25, 0.0]);
        r.expect_eof().unwrap();
    }

    #[test]
    fn wrong_magic_is_corrupt() {
        let mut r = ModelReader::new(&b"not-a-model\n"[..]);
        assert!(matches!(
            r.expect_magic(CRF_MAGIC),
            Err(ModelIoError::CorruptFile(_))
        ));
    }

    #[test]
    fn truncation_is_corrupt() {
        let mut bytes = Vec::new();
        {
            let mut w = ModelWriter::new(&mut bytes);
            w.string("something").unwrap();
        }
        bytes.truncate(bytes.len() - 2);
        let mut r = ModelReader::new(bytes.as_slice());
        assert!(matches!(r.string(), Err(ModelIoError::CorruptFile(_))));
    }

    #[test]
    fn sniffing_model_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let crf = dir.path().join("a.model");
        let lstm = dir.path().join("b.model");
        let junk = dir.path().join("c.model");
        std::fs::write(&crf, CRF_MAGIC).unwrap();
        std::fs::write(&lstm, BILSTM_MAGIC).unwrap();
        std::fs::write(&junk, "garbage").unwrap();
        assert_eq!(sniff_kind(&crf).unwrap(), ModelKind::Crf);
        assert_eq!(sniff_kind(&lstm).unwrap(), ModelKind::Bilstm);
        assert!(sniff_kind(&junk).is_err());
    }

    #[test]
    fn atomic_write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.model");
        write_atomic(&path, |w| {
            w.magic(BILSTM_MAGIC)?;
            w.f64_slice(&[3.125])
        })
        .unwrap();
        let mut r = open_reader(&path).unwrap();
        r.expect_magic(BILSTM_MAGIC).unwrap();
        assert_eq!(r.f64_slice().unwrap(), vec![3.125]);
        r.expect_eof().unwrap();
    }
}
