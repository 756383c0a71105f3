//! Binary model files.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        8 bytes  "RCPFORGE"
//! version      u32
//! kind         u8       model kind code
//! feature      u8       feature spec code
//! genres       u8       always 9
//! pad          u8
//! vocab_size   u64      including the four special tokens
//! shape_len    u32, then shape_len × u64   model-specific dimensions
//! terms        (vocab_size − 4) × (u32 byte length, UTF-8 bytes)
//! param_count  u64, then param_count × f64
//! ```

use std::io::{Read, Write};

use super::{ForestModel, LinearKind, LinearModel, MlpModel, Model, ModelKind, NaiveBayesModel};
use crate::error::{Error, Result};
use crate::features::{FeatureSpec, Vocabulary, SPECIAL_TOKENS};
use crate::genre::GENRE_COUNT;

pub const MAGIC: &[u8; 8] = b"RCPFORGE";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContainerHeader {
    pub version: u32,
    pub kind: ModelKind,
    pub feature: FeatureSpec,
    pub vocab_size: u64,
    pub genre_count: u8,
}

pub fn write_container<W: Write>(mut w: W, feature: FeatureSpec, vocab: &Vocabulary, model: &Model) -> Result<()> {
    let (shape, params) = match model {
        Model::NaiveBayes(m) => m.to_parts(),
        Model::Linear(m) => m.to_parts(),
        Model::Mlp(m) => m.to_parts(),
        Model::Forest(m) => m.to_parts(),
    };
    let mut buf = Vec::with_capacity(64 + params.len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&[model.kind().code(), feature.code(), GENRE_COUNT as u8, 0]);
    buf.extend_from_slice(&(vocab.len() as u64).to_le_bytes());
    buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
    for s in &shape {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    for t in vocab.terms() {
        buf.extend_from_slice(&(t.len() as u32).to_le_bytes());
        buf.extend_from_slice(t.as_bytes());
    }
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in &params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    w.write_all(&buf).map_err(|e| Error::io("<model>", e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(Error::ModelFile(format!("truncated at byte {}", self.at)));
        }
        let out = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn count(&mut self, width: usize) -> Result<usize> {
        let n = self.u64()? as usize;
        if n.checked_mul(width).is_none_or(|b| b > self.bytes.len() - self.at) {
            return Err(Error::ModelFile(format!("declared length {n} exceeds file size")));
        }
        Ok(n)
    }
}

pub fn read_container<R: Read>(mut r: R) -> Result<(ContainerHeader, Vocabulary, Model)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| Error::io("<model>", e))?;
    let mut c = Cursor { bytes: &bytes, at: 0 };
    if c.take(8)? != MAGIC {
        return Err(Error::ModelFile("not a model file (bad magic)".into()));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFile(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let head = c.take(4)?;
    let kind =
        ModelKind::from_code(head[0]).ok_or_else(|| Error::ModelFile(format!("unknown model kind {}", head[0])))?;
    let feature =
        FeatureSpec::from_code(head[1]).ok_or_else(|| Error::ModelFile(format!("unknown feature code {}", head[1])))?;
    if head[2] as usize != GENRE_COUNT {
        return Err(Error::ModelFile(format!(
            "genre count {} is not {GENRE_COUNT}",
            head[2]
        )));
    }
    let vocab_size = c.u64()?;
    if (vocab_size as usize) < SPECIAL_TOKENS.len() {
        return Err(Error::ModelFile("vocabulary smaller than the special tokens".into()));
    }
    let shape_len = c.u32()? as usize;
    let shape: Vec<u64> = (0..shape_len).map(|_| c.u64()).collect::<Result<_>>()?;
    let mut terms = Vec::with_capacity(vocab_size as usize - SPECIAL_TOKENS.len());
    for _ in SPECIAL_TOKENS.len()..vocab_size as usize {
        let n = c.u32()? as usize;
        let t = std::str::from_utf8(c.take(n)?).map_err(|_| Error::ModelFile("term is not UTF-8".into()))?;
        terms.push(t.to_owned());
    }
    let vocab = Vocabulary::from_terms(terms);
    if vocab.len() as u64 != vocab_size {
        return Err(Error::ModelFile("vocabulary contains duplicate terms".into()));
    }
    let n = c.count(8)?;
    let params: Vec<f64> = (0..n)
        .map(|_| c.take(8).map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes"))))
        .collect::<Result<_>>()?;
    if c.at != bytes.len() {
        return Err(Error::ModelFile(format!("{} trailing bytes", bytes.len() - c.at)));
    }
    let dim = vocab.len();
    let model = match kind {
        ModelKind::NaiveBayes => Model::NaiveBayes(NaiveBayesModel::from_parts(dim, &shape, &params)?),
        ModelKind::Logistic => Model::Linear(LinearModel::from_parts(LinearKind::SoftmaxRegression, dim, &params)?),
        ModelKind::Svm => Model::Linear(LinearModel::from_parts(LinearKind::OvrHinge, dim, &params)?),
        ModelKind::Mlp => Model::Mlp(MlpModel::from_parts(dim, &shape, &params)?),
        ModelKind::Forest => Model::Forest(ForestModel::from_parts(dim, &shape, &params)?),
    };
    let header = ContainerHeader {
        version,
        kind,
        feature,
        vocab_size,
        genre_count: GENRE_COUNT as u8,
    };
    Ok((header, vocab, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::CountVector;
    use crate::genre::Genre;
    use crate::models::VectorSet;

    fn nb() -> (Vocabulary, Model) {
        let vocab = Vocabulary::from_terms(["sugar", "salt"]);
        let d = VectorSet::new(
            vec![CountVector::from_pairs([(4, 2)]), CountVector::from_pairs([(5, 1)])],
            vec![Genre::Bakery, Genre::Drinks],
            vocab.len(),
        )
        .unwrap();
        (vocab, Model::NaiveBayes(NaiveBayesModel::train(&d, 1.0).unwrap()))
    }

    #[test]
    fn roundtrip_and_header() {
        let (vocab, model) = nb();
        let mut buf = Vec::new();
        write_container(&mut buf, FeatureSpec::TitleNer, &vocab, &model).unwrap();
        assert_eq!(&buf[..8], MAGIC);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 1);
        assert_eq!(buf[12], ModelKind::NaiveBayes.code());
        assert_eq!(buf[14], 9);
        assert_eq!(u64::from_le_bytes(buf[16..24].try_into().unwrap()), 6);
        let (h, v, m) = read_container(buf.as_slice()).unwrap();
        assert_eq!(h.feature, FeatureSpec::TitleNer);
        assert_eq!(v, vocab);
        assert_eq!(m, model);
    }

    #[test]
    fn corrupt_files_rejected() {
        let (vocab, model) = nb();
        let mut buf = Vec::new();
        write_container(&mut buf, FeatureSpec::Title, &vocab, &model).unwrap();
        assert!(read_container(&buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_container(bad.as_slice()).is_err());
        let mut bad = buf.clone();
        bad[8] = 9;
        assert!(read_container(bad.as_slice())
            .unwrap_err()
            .to_string()
            .contains("version"));
        let mut long = buf;
        long.push(0);
        assert!(read_container(long.as_slice()).is_err());
    }
}
