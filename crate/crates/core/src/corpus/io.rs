//! Document input readers and the binary corpus file.
//!
//! Corpus file layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic  b"TVCORPUS"
//! 8       4     version u32 = 1
//! 12      4     flags u32: bit0 lowercase, bit1 strip_digits, bit2 strip_proper_nouns
//! 16      8     min_term_count u64
//! 24      8     V u64 (vocabulary size)
//! 32      8     D u64 (document count)
//! 40      ...   V terms:     u32 byte length, UTF-8 bytes
//!         ...   D documents: u32 id byte length, UTF-8 id bytes,
//!                            u64 token count n, n x u32 token ids
//! ```

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{EncodedCorpus, PreprocessSettings, RawDocument, Vocabulary};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"TVCORPUS";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    /// One `{"id": string, "text": string}` object per line.
    JsonLines,
    /// One document per line; the id is the 1-based line number.
    PlainText,
}

impl InputFormat {
    /// `.jsonl`, `.ndjson` and `.json` are JSON lines, anything else is plain text.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson" | "json") => InputFormat::JsonLines,
            _ => InputFormat::PlainText,
        }
    }
}

#[derive(Deserialize)]
struct JsonRecord {
    id: String,
    text: String,
}

pub fn read_documents(path: &Path, format: InputFormat) -> Result<Vec<RawDocument>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        match format {
            InputFormat::JsonLines => {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: JsonRecord =
                    serde_json::from_str(&line).map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))?;
                docs.push(RawDocument::new(rec.id, rec.text));
            }
            InputFormat::PlainText => docs.push(RawDocument::new((i + 1).to_string(), line)),
        }
    }
    Ok(docs)
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    buf.extend_from_slice(&(s.len() as u32).to_le_bytes());
    buf.extend_from_slice(s.as_bytes());
}

pub(super) fn encode(corpus: &EncodedCorpus) -> Vec<u8> {
    let s = corpus.settings;
    let flags = u32::from(s.lowercase) | u32::from(s.strip_digits) << 1 | u32::from(s.strip_proper_nouns) << 2;
    let mut buf = Vec::with_capacity(40 + 4 * corpus.num_tokens());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&flags.to_le_bytes());
    buf.extend_from_slice(&s.min_term_count.to_le_bytes());
    buf.extend_from_slice(&(corpus.vocab_size() as u64).to_le_bytes());
    buf.extend_from_slice(&(corpus.num_docs() as u64).to_le_bytes());
    for t in corpus.vocabulary.terms() {
        put_str(&mut buf, t);
    }
    for (id, doc) in corpus.doc_ids.iter().zip(&corpus.documents) {
        put_str(&mut buf, id);
        buf.extend_from_slice(&(doc.len() as u64).to_le_bytes());
        for &w in doc {
            buf.extend_from_slice(&w.to_le_bytes());
        }
    }
    buf
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(Error::format(self.path, "truncated corpus file")),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let raw = self.take(n)?;
        String::from_utf8(raw.to_vec()).map_err(|_| Error::format(self.path, "invalid UTF-8 string"))
    }
}

pub(super) fn decode(bytes: &[u8], path: &Path) -> Result<EncodedCorpus> {
    let mut c = Cursor { bytes, pos: 0, path };
    if c.take(8)? != MAGIC {
        return Err(Error::format(path, "bad magic, not a corpus file"));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::format(path, format!("unsupported corpus version {version}")));
    }
    let flags = c.u32()?;
    let settings = PreprocessSettings {
        lowercase: flags & 1 != 0,
        strip_digits: flags & 2 != 0,
        strip_proper_nouns: flags & 4 != 0,
        min_term_count: c.u64()?,
    };
    let v = c.u64()? as usize;
    let d = c.u64()? as usize;
    let mut terms = Vec::with_capacity(v.min(1 << 24));
    for _ in 0..v {
        terms.push(c.string()?);
    }
    let mut doc_ids = Vec::with_capacity(d.min(1 << 24));
    let mut documents = Vec::with_capacity(d.min(1 << 24));
    for _ in 0..d {
        doc_ids.push(c.string()?);
        let n = c.u64()? as usize;
        let raw = c.take(
            n.checked_mul(4)
                .ok_or_else(|| Error::format(path, "token count overflow"))?,
        )?;
        documents.push(
            raw.chunks_exact(4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        );
    }
    if c.pos != bytes.len() {
        return Err(Error::format(path, "trailing bytes after corpus body"));
    }
    let vocabulary = Vocabulary::from_ordered(terms).map_err(|e| Error::format(path, e.to_string()))?;
    EncodedCorpus::new(vocabulary, documents, doc_ids, settings).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_corpus(corpus: &EncodedCorpus, path: &Path) -> Result<()> {
    fs::write(path, encode(corpus)).map_err(|e| Error::io(path, e))
}

pub fn read_corpus(path: &Path) -> Result<EncodedCorpus> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
