//! Append-only on-disk sequence of topic-word matrices.
//!
//! Layout, little-endian, 40-byte fixed header:
//!
//! ```text
//! offset  size  field
//! 0       8     magic b"TVPHIST\0"
//! 8       4     version u32 = 1
//! 12      4     reserved u32 = 0
//! 16      8     S u64 (number of samples)
//! 24      8     K u64 (topics)
//! 32      8     V u64 (vocabulary size)
//! 40      ...   S matrices, each K x V f64 in row-major order (topic rows)
//! ```
//!
//! The file length is exactly `40 + 8 * S * K * V`. `S` is written as 0 on
//! creation and patched by [`PhiStoreWriter::finish`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"TVPHIST\0";
const VERSION: u32 = 1;
pub(crate) const HEADER_LEN: u64 = 40;

fn header(s: u64, k: u64, v: u64) -> [u8; HEADER_LEN as usize] {
    let mut h = [0u8; HEADER_LEN as usize];
    h[..8].copy_from_slice(MAGIC);
    h[8..12].copy_from_slice(&VERSION.to_le_bytes());
    h[16..24].copy_from_slice(&s.to_le_bytes());
    h[24..32].copy_from_slice(&k.to_le_bytes());
    h[32..40].copy_from_slice(&v.to_le_bytes());
    h
}

pub struct PhiStoreWriter {
    path: PathBuf,
    out: BufWriter<File>,
    num_topics: usize,
    vocab_size: usize,
    written: u64,
    row_buf: Vec<u8>,
}

impl PhiStoreWriter {
    pub fn create(path: &Path, num_topics: usize, vocab_size: usize) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        out.write_all(&header(0, num_topics as u64, vocab_size as u64))
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
            num_topics,
            vocab_size,
            written: 0,
            row_buf: Vec::with_capacity(vocab_size * 8),
        })
    }

    pub fn append(&mut self, phi: &Array2<f64>) -> Result<()> {
        if phi.dim() != (self.num_topics, self.vocab_size) {
            return Err(Error::InvalidInput(format!(
                "phi sample has shape {:?}, store expects ({}, {})",
                phi.dim(),
                self.num_topics,
                self.vocab_size
            )));
        }
        for row in phi.rows() {
            self.row_buf.clear();
            for x in row {
                self.row_buf.extend_from_slice(&x.to_le_bytes());
            }
            self.out
                .write_all(&self.row_buf)
                .map_err(|e| Error::io(&self.path, e))?;
        }
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PhiSampleStore> {
        let path = self.path.clone();
        let io = |e| Error::io(&path, e);
        self.out.flush().map_err(io)?;
        let mut file = self.out.into_inner().map_err(|e| io(e.into_error()))?;
        file.seek(SeekFrom::Start(16)).map_err(io)?;
        file.write_all(&self.written.to_le_bytes()).map_err(io)?;
        file.sync_all().map_err(io)?;
        Ok(PhiSampleStore {
            path: self.path,
            num_samples: self.written as usize,
            num_topics: self.num_topics,
            vocab_size: self.vocab_size,
        })
    }
}

/// Handle to a finished store on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhiSampleStore {
    path: PathBuf,
    num_samples: usize,
    num_topics: usize,
    vocab_size: usize,
}

impl PhiSampleStore {
    /// Opens a store and checks that the header agrees with the file length.
    pub fn open(path: &Path) -> Result<Self> {
        let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut h = [0u8; HEADER_LEN as usize];
        file.read_exact(&mut h)
            .map_err(|_| Error::format(path, "file shorter than phi store header"))?;
        if &h[..8] != MAGIC {
            return Err(Error::format(path, "bad magic, not a phi sample store"));
        }
        let version = u32::from_le_bytes(h[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(Error::format(path, format!("unsupported phi store version {version}")));
        }
        let field = |o: usize| u64::from_le_bytes(h[o..o + 8].try_into().unwrap());
        let (s, k, v) = (field(16), field(24), field(32));
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let body = s
            .checked_mul(k)
            .and_then(|x| x.checked_mul(v))
            .and_then(|x| x.checked_mul(8))
            .and_then(|x| x.checked_add(HEADER_LEN));
        if body != Some(len) {
            return Err(Error::format(
                path,
                format!("header says S={s} K={k} V={v} but file has {len} bytes"),
            ));
        }
        Ok(Self {
            path: path.to_path_buf(),
            num_samples: s as usize,
            num_topics: k as usize,
            vocab_size: v as usize,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Streams the samples in collection order, one matrix at a time.
    pub fn samples(&self) -> Result<PhiSamples> {
        let mut file = File::open(&self.path).map_err(|e| Error::io(&self.path, e))?;
        file.seek(SeekFrom::Start(HEADER_LEN))
            .map_err(|e| Error::io(&self.path, e))?;
        Ok(PhiSamples {
            reader: BufReader::new(file),
            path: self.path.clone(),
            remaining: self.num_samples,
            shape: (self.num_topics, self.vocab_size),
            buf: vec![0u8; self.num_topics * self.vocab_size * 8],
        })
    }
}

pub struct PhiSamples {
    reader: BufReader<File>,
    path: PathBuf,
    remaining: usize,
    shape: (usize, usize),
    buf: Vec<u8>,
}

impl Iterator for PhiSamples {
    type Item = Result<Array2<f64>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        if let Err(e) = self.reader.read_exact(&mut self.buf) {
            self.remaining = 0;
            return Some(Err(Error::io(&self.path, e)));
        }
        let data = self
            .buf
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        Some(Ok(
            Array2::from_shape_vec(self.shape, data).expect("buffer sized to shape")
        ))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}
