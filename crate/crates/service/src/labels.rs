//! Append-only label store with a JSONL backing file.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use emosuggest_core::classifier::write_labeled;
use emosuggest_core::session::LabelRecord;
use emosuggest_core::LabeledExample;
use serde::Serialize;

#[derive(Debug, Default)]
struct Inner {
    records: Vec<LabelRecord>,
    file: Option<File>,
}

/// All appends go through one lock, so each batch of records lands
/// contiguously and every snapshot sees whole batches only.
#[derive(Debug, Default)]
pub struct LabelStore {
    inner: Mutex<Inner>,
}

impl LabelStore {
    pub fn in_memory() -> Self {
        LabelStore::default()
    }

    /// Opens (or creates) the backing file and loads existing records.
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref();
        let mut records = Vec::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record = serde_json::from_str(&line).map_err(|e| {
                    io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("{}:{}: {e}", path.display(), i + 1),
                    )
                })?;
                records.push(record);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(LabelStore {
            inner: Mutex::new(Inner {
                records,
                file: Some(file),
            }),
        })
    }

    pub fn append(&self, records: &[LabelRecord]) -> io::Result<()> {
        if records.is_empty() {
            return Ok(());
        }
        let mut inner = self.inner.lock().expect("label store lock");
        if let Some(file) = inner.file.as_mut() {
            let mut buf = Vec::new();
            for r in records {
                serde_json::to_writer(&mut buf, r)?;
                buf.push(b'\n');
            }
            file.write_all(&buf)?;
            file.flush()?;
        }
        inner.records.extend_from_slice(records);
        Ok(())
    }

    pub fn snapshot(&self) -> Vec<LabelRecord> {
        self.inner.lock().expect("label store lock").records.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("label store lock").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Classifier training corpus: `label<TAB>text` per record.
pub fn export_corpus(records: &[LabelRecord]) -> String {
    let examples: Vec<LabeledExample> = records
        .iter()
        .map(|r| LabeledExample::new(r.typed_text.clone(), r.emotion))
        .collect();
    let mut out = Vec::new();
    write_labeled(&mut out, &examples).expect("writing to memory");
    String::from_utf8(out).expect("utf-8 input")
}

#[derive(Serialize)]
struct MetaLine<'a> {
    line: usize,
    #[serde(flatten)]
    record: &'a LabelRecord,
}

/// Sidecar with one JSON object per exported corpus line, 1-based.
pub fn export_meta(records: &[LabelRecord]) -> String {
    let mut out = String::new();
    for (i, record) in records.iter().enumerate() {
        let line = serde_json::to_string(&MetaLine { line: i + 1, record }).expect("serializable");
        out.push_str(&line);
        out.push('\n');
    }
    out
}
