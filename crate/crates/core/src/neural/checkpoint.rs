//! Checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic        4 bytes  "RXPJ"
//! version      u32      currently 1
//! header_len   u64      byte length of the textual header
//! header       UTF-8    key=value lines: embed_dim, hidden_dim, max_len,
//!                       vocab_size, caller metadata, then one vocab.<i>=token
//!                       line per vocabulary entry in index order
//! tensor_count u32
//! per tensor:  name_len u32, name bytes, ndim u32, ndim x u32 dims,
//!              prod(dims) x f32 values, row-major
//! ```
//!
//! Loading validates the magic, the version, every tensor shape against the
//! header dimensions, and that the file ends exactly after the last tensor.

use std::collections::HashMap;
use std::io::{self, Read, Write};

use thiserror::Error;

use super::matrix::Real;
use super::params::{ModelDims, ModelParams};
use super::vocab::Vocab;

pub const MAGIC: [u8; 4] = *b"RXPJ";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic bytes (not a checkpoint file)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

pub fn save_checkpoint<T: Real, W: Write>(
    w: &mut W,
    params: &ModelParams<T>,
    vocab: &Vocab,
    metadata: &[(String, String)],
) -> io::Result<()> {
    let dims = params.dims;
    let mut header = String::new();
    header.push_str(&format!("embed_dim={}\n", dims.embed));
    header.push_str(&format!("hidden_dim={}\n", dims.hidden));
    header.push_str(&format!("max_len={}\n", dims.max_len));
    header.push_str(&format!("vocab_size={}\n", dims.vocab));
    for (k, v) in metadata {
        header.push_str(&format!("{k}={v}\n"));
    }
    for (i, tok) in vocab.tokens().iter().enumerate() {
        header.push_str(&format!("vocab.{i}={tok}\n"));
    }

    w.write_all(&MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u64).to_le_bytes())?;
    w.write_all(header.as_bytes())?;

    let tensors = params.tensors();
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, shape, data) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(shape.len() as u32).to_le_bytes())?;
        for dim in &shape {
            w.write_all(&(*dim as u32).to_le_bytes())?;
        }
        for &x in data {
            let v = x.to_f32().unwrap_or(f32::NAN);
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, CheckpointError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

/// Parameters, vocabulary and free-form metadata recovered from a file.
pub type LoadedCheckpoint = (ModelParams<f32>, Vocab, Vec<(String, String)>);

pub fn load_checkpoint<R: Read>(r: &mut R) -> Result<LoadedCheckpoint, CheckpointError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let header_len = read_u64(r)? as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)?;
    let header = String::from_utf8(header_bytes)
        .map_err(|_| CheckpointError::Corrupt("header is not UTF-8".into()))?;

    let mut fields: HashMap<String, String> = HashMap::new();
    let mut vocab_tokens: Vec<(usize, String)> = Vec::new();
    let mut metadata: Vec<(String, String)> = Vec::new();
    for line in header.lines() {
        let Some((key, value)) = line.split_once('=') else {
            return Err(CheckpointError::Corrupt(format!(
                "header line without `=`: {line}"
            )));
        };
        if let Some(idx) = key.strip_prefix("vocab.") {
            let idx: usize = idx
                .parse()
                .map_err(|_| CheckpointError::Corrupt(format!("bad vocab index in {key}")))?;
            vocab_tokens.push((idx, value.to_string()));
        } else if matches!(key, "embed_dim" | "hidden_dim" | "max_len" | "vocab_size") {
            fields.insert(key.to_string(), value.to_string());
        } else {
            metadata.push((key.to_string(), value.to_string()));
        }
    }
    let dim_field = |name: &str| -> Result<usize, CheckpointError> {
        fields
            .get(name)
            .ok_or_else(|| CheckpointError::Corrupt(format!("missing header field {name}")))?
            .parse()
            .map_err(|_| CheckpointError::Corrupt(format!("bad header field {name}")))
    };
    let dims = ModelDims {
        vocab: dim_field("vocab_size")?,
        embed: dim_field("embed_dim")?,
        hidden: dim_field("hidden_dim")?,
        max_len: dim_field("max_len")?,
    };

    vocab_tokens.sort_by_key(|(i, _)| *i);
    if vocab_tokens.len() != dims.vocab
        || vocab_tokens.iter().enumerate().any(|(k, (i, _))| k != *i)
    {
        return Err(CheckpointError::Corrupt(
            "vocab listing does not cover 0..vocab_size".into(),
        ));
    }
    let vocab = Vocab::from_ordered(vocab_tokens.into_iter().map(|(_, t)| t).collect());

    let tensor_count = read_u32(r)? as usize;
    let mut params = ModelParams::<f32>::zeros(dims);
    let expected: HashMap<String, Vec<usize>> = params
        .tensors()
        .into_iter()
        .map(|(name, shape, _)| (name, shape))
        .collect();
    if tensor_count != expected.len() {
        return Err(CheckpointError::Corrupt(format!(
            "expected {} tensors, file declares {tensor_count}",
            expected.len()
        )));
    }
    let mut filled: Vec<String> = Vec::with_capacity(tensor_count);
    for _ in 0..tensor_count {
        let name_len = read_u32(r)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| CheckpointError::Corrupt("tensor name is not UTF-8".into()))?;
        let ndim = read_u32(r)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(read_u32(r)? as usize);
        }
        let want = expected
            .get(&name)
            .ok_or_else(|| CheckpointError::Corrupt(format!("unknown tensor {name}")))?;
        if *want != shape {
            return Err(CheckpointError::Corrupt(format!(
                "tensor {name} has shape {shape:?}, expected {want:?}"
            )));
        }
        let count: usize = shape.iter().product();
        let mut raw = vec![0u8; count * 4];
        r.read_exact(&mut raw)?;
        let mut tensors = params.tensors_mut();
        let slot = tensors
            .iter_mut()
            .find(|(n, _)| *n == name)
            .expect("name validated against expected set");
        for (k, chunk) in raw.chunks_exact(4).enumerate() {
            slot.1[k] = f32::from_le_bytes(chunk.try_into().unwrap());
        }
        filled.push(name);
    }
    filled.sort();
    filled.dedup();
    if filled.len() != tensor_count {
        return Err(CheckpointError::Corrupt("duplicate tensor entries".into()));
    }
    // Exact byte-count check: nothing may follow the last tensor.
    let mut probe = [0u8; 1];
    match r.read(&mut probe)? {
        0 => Ok((params, vocab, metadata)),
        _ => Err(CheckpointError::Corrupt(
            "trailing bytes after final tensor".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample() -> (ModelParams<f32>, Vocab) {
        let dims = ModelDims {
            vocab: 5,
            embed: 3,
            hidden: 4,
            max_len: 6,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let params = ModelParams::init(dims, &mut rng);
        let vocab = Vocab::build(["C", "O", "AD:C"]);
        (params, vocab)
    }

    #[test]
    fn round_trip_preserves_everything() {
        let (params, vocab) = sample();
        let meta = vec![
            ("threshold".to_string(), "0.5".to_string()),
            ("lexicon_path".to_string(), "lex.tsv".to_string()),
        ];
        let mut buf = Vec::new();
        save_checkpoint(&mut buf, &params, &vocab, &meta).unwrap();
        let (loaded, loaded_vocab, loaded_meta) =
            load_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(loaded, params);
        assert_eq!(loaded_vocab, vocab);
        assert_eq!(loaded_meta, meta);
    }

    #[test]
    fn rejects_bad_magic() {
        let (params, vocab) = sample();
        let mut buf = Vec::new();
        save_checkpoint(&mut buf, &params, &vocab, &[]).unwrap();
        buf[0] = b'X';
        assert!(matches!(
            load_checkpoint(&mut buf.as_slice()),
            Err(CheckpointError::BadMagic)
        ));
    }

    #[test]
    fn rejects_bad_version() {
        let (params, vocab) = sample();
        let mut buf = Vec::new();
        save_checkpoint(&mut buf, &params, &vocab, &[]).unwrap();
        buf[4] = 99;
        assert!(matches!(
            load_checkpoint(&mut buf.as_slice()),
            Err(CheckpointError::BadVersion(99))
        ));
    }

    #[test]
    fn rejects_trailing_bytes() {
        let (params, vocab) = sample();
        let mut buf = Vec::new();
        save_checkpoint(&mut buf, &params, &vocab, &[]).unwrap();
        buf.push(0);
        assert!(matches!(
            load_checkpoint(&mut buf.as_slice()),
            Err(CheckpointError::Corrupt(_))
        ));
    }

    #[test]
    fn rejects_truncation() {
        let (params, vocab) = sample();
        let mut buf = Vec::new();
        save_checkpoint(&mut buf, &params, &vocab, &[]).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(load_checkpoint(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn metadata_value_may_contain_equals() {
        let (params, vocab) = sample();
        let meta = vec![("note".to_string(), "a=b=c".to_string())];
        let mut buf = Vec::new();
        save_checkpoint(&mut buf, &params, &vocab, &meta).unwrap();
        let (_, _, loaded_meta) = load_checkpoint(&mut buf.as_slice()).unwrap();
        assert_eq!(loaded_meta, meta);
    }
}
