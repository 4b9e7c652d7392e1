//! Versioned binary model format, little-endian throughout:
//!
//! ```text
//! magic        8 bytes  "EMOCNN\0\x1a"
//! version      u32
//! embed_dim    u32
//! seq_len      u32
//! vocab_size   u32      including PAD and UNK
//! filters      u32      per width
//! max_width    u32
//! tokens       (vocab_size - 2) × { u32 byte length, UTF-8 bytes }
//! parameters   f64 × N  embedding, then per width (weights, bias), then output weights, output bias
//! ```
//!
//! The file must end exactly after the last parameter.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::model::{CnnModel, Parameters, FILTERS_PER_WIDTH, MAX_WIDTH};
use super::vocab::Vocabulary;
use crate::error::ClassifierError;

pub const MAGIC: [u8; 8] = *b"EMOCNN\0\x1a";
pub const FORMAT_VERSION: u32 = 1;

const MAX_VOCAB: u32 = 1 << 24;
const MAX_EMBED_DIM: u32 = 1 << 12;
const MAX_SEQ_LEN: u32 = 1 << 16;
const MAX_TOKEN_BYTES: u32 = 1 << 16;

pub fn write_model<W: Write>(mut w: W, model: &CnnModel) -> io::Result<()> {
    w.write_all(&MAGIC)?;
    w.write_u32::<LittleEndian>(FORMAT_VERSION)?;
    w.write_u32::<LittleEndian>(model.embed_dim() as u32)?;
    w.write_u32::<LittleEndian>(model.seq_len() as u32)?;
    w.write_u32::<LittleEndian>(model.vocab().len() as u32)?;
    w.write_u32::<LittleEndian>(FILTERS_PER_WIDTH as u32)?;
    w.write_u32::<LittleEndian>(MAX_WIDTH as u32)?;
    for token in model.vocab().regular_tokens() {
        w.write_u32::<LittleEndian>(token.len() as u32)?;
        w.write_all(token.as_bytes())?;
    }
    for tensor in model.params().tensors() {
        for &v in tensor {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()
}

fn corrupt(e: io::Error) -> ClassifierError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        ClassifierError::Corrupt("file is truncated".into())
    } else {
        ClassifierError::Io(e)
    }
}

pub fn read_model<R: Read>(mut r: R) -> Result<CnnModel, ClassifierError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => ClassifierError::BadMagic,
        _ => ClassifierError::Io(e),
    })?;
    if magic != MAGIC {
        return Err(ClassifierError::BadMagic);
    }
    let mut header = [0u32; 6];
    for h in &mut header {
        *h = r.read_u32::<LittleEndian>().map_err(corrupt)?;
    }
    let [version, embed_dim, seq_len, vocab_size, filters, max_width] = header;
    if version != FORMAT_VERSION {
        return Err(ClassifierError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    if filters as usize != FILTERS_PER_WIDTH || max_width as usize != MAX_WIDTH {
        return Err(ClassifierError::Corrupt(format!(
            "unsupported filter layout {filters}×{max_width}"
        )));
    }
    if !(2..=MAX_VOCAB).contains(&vocab_size)
        || !(1..=MAX_EMBED_DIM).contains(&embed_dim)
        || !(MAX_WIDTH as u32..=MAX_SEQ_LEN).contains(&seq_len)
    {
        return Err(ClassifierError::Corrupt(format!(
            "implausible header: embed_dim={embed_dim} seq_len={seq_len} vocab_size={vocab_size}"
        )));
    }

    let mut tokens = Vec::with_capacity(vocab_size as usize - 2);
    for _ in 2..vocab_size {
        let len = r.read_u32::<LittleEndian>().map_err(corrupt)?;
        if len > MAX_TOKEN_BYTES {
            return Err(ClassifierError::Corrupt(format!("token length {len}")));
        }
        let mut buf = vec![0u8; len as usize];
        r.read_exact(&mut buf).map_err(corrupt)?;
        let token = String::from_utf8(buf).map_err(|_| ClassifierError::Corrupt("token is not UTF-8".into()))?;
        tokens.push(token);
    }
    let vocab = Vocabulary::from_tokens(tokens);
    if vocab.len() != vocab_size as usize {
        return Err(ClassifierError::Corrupt("duplicate vocabulary tokens".into()));
    }

    let mut params = Parameters::zeros(vocab.len(), embed_dim as usize);
    for tensor in params.tensors_mut() {
        r.read_f64_into::<LittleEndian>(tensor).map_err(corrupt)?;
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(ClassifierError::Corrupt("trailing bytes after parameters".into()));
    }
    Ok(CnnModel::from_parts(vocab, embed_dim as usize, seq_len as usize, params))
}

pub fn save_model(path: impl AsRef<Path>, model: &CnnModel) -> Result<(), ClassifierError> {
    let file = File::create(path)?;
    write_model(BufWriter::new(file), model)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CnnModel, ClassifierError> {
    let file = File::open(path)?;
    read_model(BufReader::new(file))
}
