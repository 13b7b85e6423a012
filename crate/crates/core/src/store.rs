//! Corpus ingestion and the binary index.
//!
//! Corpus files are JSON Lines with exactly the fields `id`, `text`, `tree`,
//! `cwe` and `acoustic`. The index layout (all integers little-endian):
//!
//! ```text
//! "PSEL" | version u16 | d_cwe u32 | d_ac u32 | count u64
//! count × record:
//!     id, text, tree   (u32 byte length + UTF-8)
//!     cwe              (d_cwe × f64)
//!     acoustic         (d_ac × f64)
//!     distances        (u32 length + length × u32)
//! projector flag u8; if 1:
//!     mean, component 1, component 2   (d_ac × f64 each)
//!     explained variance               (2 × f64)
//!     diameter                         (f64)
//! CRC-32 u32 of every preceding byte
//! ```

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::projector::Projector;
use crate::simil::ReprRef;
use crate::syndist::{distance_vector, DistanceVector};
use crate::treebank::{parse_tree, ParseTree, TreeError};

pub const INDEX_MAGIC: &[u8; 4] = b"PSEL";
pub const INDEX_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 8;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("duplicate id `{id}` on lines {first_line} and {second_line}")]
    DuplicateId {
        id: String,
        first_line: usize,
        second_line: usize,
    },
    #[error("record `{id}`: {field} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        id: String,
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("record `{id}`: bad tree: {source}")]
    Tree {
        id: String,
        #[source]
        source: TreeError,
    },
    #[error("record `{id}`: non-finite value in {field}")]
    NonFinite { id: String, field: &'static str },
    #[error("record `{id}`: empty {field}")]
    EmptyField { id: String, field: &'static str },
    #[error("corpus has no records")]
    EmptyCorpus,
    #[error("not an index file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported index version {found} (expected {INDEX_VERSION})")]
    UnsupportedVersion { found: u16 },
    #[error("index checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("index truncated")]
    Truncated,
    #[error("corrupt index: {0}")]
    Corrupt(String),
}

/// One training utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    pub tree: ParseTree,
    pub cwe: Vec<f64>,
    pub acoustic: Vec<f64>,
}

/// JSONL line as written on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawRecord {
    pub id: String,
    pub text: String,
    pub tree: String,
    pub cwe: Vec<f64>,
    pub acoustic: Vec<f64>,
}

impl From<&CorpusRecord> for RawRecord {
    fn from(r: &CorpusRecord) -> Self {
        RawRecord {
            id: r.id.clone(),
            text: r.text.clone(),
            tree: r.tree.to_string(),
            cwe: r.cwe.clone(),
            acoustic: r.acoustic.clone(),
        }
    }
}

impl RawRecord {
    fn into_record(self) -> Result<CorpusRecord, StoreError> {
        let tree = parse_tree(&self.tree).map_err(|source| StoreError::Tree {
            id: self.id.clone(),
            source,
        })?;
        Ok(CorpusRecord {
            id: self.id,
            text: self.text,
            tree,
            cwe: self.cwe,
            acoustic: self.acoustic,
        })
    }
}

/// Validated, immutable corpus with precomputed distance vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Vec<CorpusRecord>,
    distances: Vec<DistanceVector>,
    d_cwe: usize,
    d_ac: usize,
}

impl Corpus {
    /// Validates `records` and precomputes their distance vectors. Record
    /// order is kept as given.
    pub fn from_records(records: Vec<CorpusRecord>) -> Result<Self, StoreError> {
        let lines: Vec<usize> = (1..=records.len()).collect();
        Self::build(records, &lines)
    }

    fn build(records: Vec<CorpusRecord>, lines: &[usize]) -> Result<Self, StoreError> {
        let first = records.first().ok_or(StoreError::EmptyCorpus)?;
        let (d_cwe, d_ac) = (first.cwe.len(), first.acoustic.len());
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (r, &line) in records.iter().zip(lines) {
            if let Some(&first_line) = seen.get(r.id.as_str()) {
                return Err(StoreError::DuplicateId {
                    id: r.id.clone(),
                    first_line,
                    second_line: line,
                });
            }
            seen.insert(&r.id, line);
            validate_vector(&r.id, "cwe", &r.cwe, d_cwe)?;
            validate_vector(&r.id, "acoustic", &r.acoustic, d_ac)?;
        }
        let distances = records.iter().map(|r| distance_vector(&r.tree)).collect();
        Ok(Corpus {
            records,
            distances,
            d_cwe,
            d_ac,
        })
    }

    pub fn records(&self) -> &[CorpusRecord] {
        &self.records
    }

    pub fn distances(&self) -> &[DistanceVector] {
        &self.distances
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn d_cwe(&self) -> usize {
        self.d_cwe
    }

    pub fn d_ac(&self) -> usize {
        self.d_ac
    }

    pub fn get(&self, id: &str) -> Option<&CorpusRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    /// Linguistic representation of record `i`.
    pub fn repr(&self, i: usize) -> ReprRef<'_> {
        ReprRef {
            cwe: Some(&self.records[i].cwe),
            syndist: Some(&self.distances[i]),
        }
    }
}

fn validate_vector(
    id: &str,
    field: &'static str,
    v: &[f64],
    expected: usize,
) -> Result<(), StoreError> {
    if v.is_empty() {
        return Err(StoreError::EmptyField {
            id: id.to_owned(),
            field,
        });
    }
    if v.len() != expected {
        return Err(StoreError::DimensionMismatch {
            id: id.to_owned(),
            field,
            expected,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(StoreError::NonFinite {
            id: id.to_owned(),
            field,
        });
    }
    Ok(())
}

/// Reads a JSONL corpus file.
pub fn ingest(path: impl AsRef<Path>) -> Result<Corpus, StoreError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|source| StoreError::Io {
        path: path.to_owned(),
        source,
    })?;
    ingest_reader(BufReader::new(file)).map_err(|e| match e {
        StoreError::Io { source, .. } => StoreError::Io {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

/// Reads JSONL from any buffered reader. Blank lines are skipped; line
/// numbers in errors are 1-based.
pub fn ingest_reader(reader: impl BufRead) -> Result<Corpus, StoreError> {
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| StoreError::Io {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|source| StoreError::Json {
            line: i + 1,
            source,
        })?;
        records.push(raw.into_record()?);
        lines.push(i + 1);
    }
    log::debug!("ingested {} records", records.len());
    Corpus::build(records, &lines)
}

/// Writes `corpus` back out as JSONL.
pub fn to_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for r in corpus.records() {
        out.push_str(&serde_json::to_string(&RawRecord::from(r)).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

/// Corpus plus the projector fitted on it, as persisted in an index file.
#[derive(Debug, Clone, PartialEq)]
pub struct Index {
    pub corpus: Corpus,
    pub projector: Option<Projector>,
}

impl Index {
    pub fn new(corpus: Corpus, projector: Option<Projector>) -> Self {
        Index { corpus, projector }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.corpus;
        let mut w = Vec::new();
        w.extend_from_slice(INDEX_MAGIC);
        w.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        w.extend_from_slice(&(c.d_cwe as u32).to_le_bytes());
        w.extend_from_slice(&(c.d_ac as u32).to_le_bytes());
        w.extend_from_slice(&(c.len() as u64).to_le_bytes());
        for (r, d) in c.records.iter().zip(&c.distances) {
            put_str(&mut w, &r.id);
            put_str(&mut w, &r.text);
            put_str(&mut w, &r.tree.to_string());
            put_f64s(&mut w, &r.cwe);
            put_f64s(&mut w, &r.acoustic);
            w.extend_from_slice(&(d.len() as u32).to_le_bytes());
            for &v in d.values() {
                w.extend_from_slice(&v.to_le_bytes());
            }
        }
        match &self.projector {
            None => w.push(0),
            Some(p) => {
                w.push(1);
                put_f64s(&mut w, p.mean());
                put_f64s(&mut w, &p.components()[0]);
                put_f64s(&mut w, &p.components()[1]);
                put_f64s(&mut w, &p.explained_variance());
                put_f64s(&mut w, &[p.diameter()]);
            }
        }
        let crc = crc32fast::hash(&w);
        w.extend_from_slice(&crc.to_le_bytes());
        w
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreError> {
        if bytes.len() < 4 || &bytes[..4] != INDEX_MAGIC {
            return Err(StoreError::BadMagic);
        }
        if bytes.len() < 6 {
            return Err(StoreError::Truncated);
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != INDEX_VERSION {
            return Err(StoreError::UnsupportedVersion { found: version });
        }
        if bytes.len() < HEADER_LEN + 1 + 4 {
            return Err(StoreError::Truncated);
        }
        let (payload, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        let computed = crc32fast::hash(payload);
        if stored != computed {
            return Err(StoreError::Checksum { stored, computed });
        }

        let mut r = Reader {
            buf: payload,
            pos: 6,
        };
        let d_cwe = r.u32()? as usize;
        let d_ac = r.u32()? as usize;
        let count = r.u64()?;
        let mut records = Vec::new();
        let mut distances = Vec::new();
        for _ in 0..count {
            let id = r.string()?;
            let text = r.string()?;
            let tree_text = r.string()?;
            let tree = parse_tree(&tree_text).map_err(|source| StoreError::Tree {
                id: id.clone(),
                source,
            })?;
            let cwe = r.f64s(d_cwe)?;
            let acoustic = r.f64s(d_ac)?;
            let n = r.u32()? as usize;
            let mut d = Vec::with_capacity(n.min(r.remaining() / 4));
            for _ in 0..n {
                d.push(r.u32()?);
            }
            if n != tree.leaf_count() {
                return Err(StoreError::Corrupt(format!(
                    "record `{id}`: {n} distances for {} tokens",
                    tree.leaf_count()
                )));
            }
            records.push(CorpusRecord {
                id,
                text,
                tree,
                cwe,
                acoustic,
            });
            distances.push(DistanceVector::from_raw(d));
        }
        let projector = match r.u8()? {
            0 => None,
            1 => {
                let mean = r.f64s(d_ac)?;
                let c1 = r.f64s(d_ac)?;
                let c2 = r.f64s(d_ac)?;
                let var = r.f64s(2)?;
                let diameter = r.f64()?;
                Some(Projector::from_parts(mean, [c1, c2], [var[0], var[1]], diameter))
            }
            other => return Err(StoreError::Corrupt(format!("projector flag {other}"))),
        };
        if r.remaining() != 0 {
            return Err(StoreError::Corrupt(format!(
                "{} trailing bytes",
                r.remaining()
            )));
        }

        let lines: Vec<usize> = (1..=records.len()).collect();
        let mut corpus = Corpus::build(records, &lines)?;
        if corpus.d_cwe != d_cwe || corpus.d_ac != d_ac {
            return Err(StoreError::Corrupt("header dimensions disagree with records".into()));
        }
        corpus.distances = distances;
        Ok(Index { corpus, projector })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|source| StoreError::Io {
            path: path.to_owned(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|source| StoreError::Io {
                path: path.to_owned(),
                source,
            })?;
        Self::from_bytes(&bytes)
    }
}

pub fn save_index(
    corpus: &Corpus,
    projector: Option<&Projector>,
    path: impl AsRef<Path>,
) -> Result<(), StoreError> {
    Index::new(corpus.clone(), projector.cloned()).save(path)
}

pub fn load_index(path: impl AsRef<Path>) -> Result<Index, StoreError> {
    Index::load(path)
}

fn put_str(w: &mut Vec<u8>, s: &str) {
    w.extend_from_slice(&(s.len() as u32).to_le_bytes());
    w.extend_from_slice(s.as_bytes());
}

fn put_f64s(w: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        w.extend_from_slice(&x.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        if self.remaining() < n {
            return Err(StoreError::Truncated);
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, StoreError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, StoreError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>, StoreError> {
        let bytes = self.take(n.checked_mul(8).ok_or(StoreError::Truncated)?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn string(&mut self) -> Result<String, StoreError> {
        let n = self.u32()? as usize;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| StoreError::Corrupt("invalid UTF-8 string".into()))
    }
}
