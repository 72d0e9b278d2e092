//! Binary model files: magic, version, JSON header, then little-endian f32
//! matrices (token rows, followed by subword rows when present).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::embedding::{EmbeddingModel, EmbeddingParams, SubwordTable, TrainingMeta};
use super::RankingError;
use crate::text::Vocabulary;

pub const MODEL_MAGIC: &[u8; 8] = b"WSMDLEMB";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    params: EmbeddingParams,
    vocab: Vocabulary,
    dim: usize,
    rows: usize,
    subword: Option<SubwordHeader>,
    meta: TrainingMeta,
    frozen: bool,
}

#[derive(Serialize, Deserialize)]
struct SubwordHeader {
    buckets: usize,
    min_n: usize,
    max_n: usize,
}

pub fn write_model(model: &EmbeddingModel, mut out: impl Write) -> Result<(), RankingError> {
    let header = Header {
        params: model.params.clone(),
        vocab: model.vocab.clone(),
        dim: model.params.dim,
        rows: model.vocab.len(),
        subword: model.subword.as_ref().map(|s| SubwordHeader {
            buckets: s.buckets,
            min_n: s.min_n,
            max_n: s.max_n,
        }),
        meta: model.meta.clone(),
        frozen: model.frozen,
    };
    let json = serde_json::to_vec(&header).map_err(|e| RankingError::Corrupt(e.to_string()))?;
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&MODEL_VERSION.to_le_bytes())?;
    out.write_all(&(json.len() as u64).to_le_bytes())?;
    out.write_all(&json)?;
    write_floats(&mut out, &model.rows)?;
    if let Some(s) = &model.subword {
        write_floats(&mut out, &s.rows)?;
    }
    out.flush()?;
    Ok(())
}

fn write_floats(out: &mut impl Write, values: &[f32]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)
}

fn read_exact(input: &mut impl Read, buf: &mut [u8], what: &str) -> Result<(), RankingError> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => RankingError::Corrupt(format!("truncated {what}")),
        _ => RankingError::Io(e),
    })
}

fn read_floats(input: &mut impl Read, n: usize, what: &str) -> Result<Vec<f32>, RankingError> {
    let bytes = n
        .checked_mul(4)
        .ok_or_else(|| RankingError::Corrupt(format!("{what} size overflows")))?;
    let mut buf = vec![0u8; bytes];
    read_exact(input, &mut buf, what)?;
    Ok(buf
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn read_model(mut input: impl Read) -> Result<EmbeddingModel, RankingError> {
    let mut magic = [0u8; 8];
    read_exact(&mut input, &mut magic, "magic")?;
    if &magic != MODEL_MAGIC {
        return Err(RankingError::Version("not a worldsmith model file".into()));
    }
    let mut word = [0u8; 4];
    read_exact(&mut input, &mut word, "version")?;
    let version = u32::from_le_bytes(word);
    if version != MODEL_VERSION {
        return Err(RankingError::Version(format!(
            "file version {version}, expected {MODEL_VERSION}"
        )));
    }
    let mut len = [0u8; 8];
    read_exact(&mut input, &mut len, "header length")?;
    let len = usize::try_from(u64::from_le_bytes(len)).map_err(|_| RankingError::Corrupt("header length".into()))?;
    if len > 1 << 32 {
        return Err(RankingError::Corrupt("header length".into()));
    }
    let mut json = vec![0u8; len];
    read_exact(&mut input, &mut json, "header")?;
    let header: Header = serde_json::from_slice(&json).map_err(|e| RankingError::Corrupt(e.to_string()))?;
    if header.dim != header.params.dim || header.rows != header.vocab.len() {
        return Err(RankingError::Corrupt("header shape mismatch".into()));
    }
    let rows = read_floats(&mut input, header.rows * header.dim, "embedding matrix")?;
    let subword = match header.subword {
        Some(s) => Some(SubwordTable {
            rows: read_floats(&mut input, s.buckets * header.dim, "subword matrix")?,
            buckets: s.buckets,
            min_n: s.min_n,
            max_n: s.max_n,
        }),
        None => None,
    };
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(RankingError::Corrupt("trailing bytes".into()));
    }
    Ok(EmbeddingModel::assemble(
        header.params,
        header.vocab,
        rows,
        subword,
        header.meta,
        header.frozen,
    ))
}

pub fn save_model(model: &EmbeddingModel, path: &Path) -> Result<(), RankingError> {
    write_model(model, BufWriter::new(File::create(path)?))
}

pub fn load_model(path: &Path) -> Result<EmbeddingModel, RankingError> {
    read_model(BufReader::new(File::open(path)?))
}
