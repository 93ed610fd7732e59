//! Streaming per-(document, topic) moments of theta and their persisted form.
//!
//! Summary file layout, little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic b"TVPSUMM\0"
//! 8       4     version u32 = 1
//! 12      4     reserved u32 = 0
//! 16      8     S u64 (samples)
//! 24      8     D u64
//! 32      8     K u64
//! 40      ...   mean, std, cv: three row-major D x K blocks of f64
//! ```

use std::fs;
use std::path::Path;

use ndarray::{Array2, Zip};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"TVPSUMM\0";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 40;

/// Welford accumulator over a stream of equally shaped matrices.
#[derive(Debug, Clone)]
pub struct MomentAccumulator {
    count: usize,
    mean: Array2<f64>,
    m2: Array2<f64>,
}

impl MomentAccumulator {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            count: 0,
            mean: Array2::zeros((rows, cols)),
            m2: Array2::zeros((rows, cols)),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, sample: &Array2<f64>) -> Result<()> {
        if sample.dim() != self.mean.dim() {
            return Err(Error::InvalidInput(format!(
                "sample shape {:?} does not match accumulator {:?}",
                sample.dim(),
                self.mean.dim()
            )));
        }
        self.count += 1;
        let n = self.count as f64;
        Zip::from(&mut self.mean)
            .and(&mut self.m2)
            .and(sample)
            .for_each(|mean, m2, &x| {
                let delta = x - *mean;
                *mean += delta / n;
                *m2 += delta * (x - *mean);
            });
        Ok(())
    }

    /// Sample standard deviation uses divisor `S - 1`; needs at least two samples.
    pub fn finish(self) -> Result<PosteriorSummary> {
        if self.count < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 samples for a standard deviation, got {}",
                self.count
            )));
        }
        let denom = (self.count - 1) as f64;
        let std = self.m2.mapv(|m2| (m2.max(0.0) / denom).sqrt());
        let cv = Zip::from(&std).and(&self.mean).map_collect(|&s, &m| s / m);
        Ok(PosteriorSummary {
            num_samples: self.count,
            mean: self.mean,
            std,
            cv,
        })
    }
}

/// Per-(document, topic) mean, standard deviation and coefficient of
/// variation of the collected theta samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub num_samples: usize,
    pub mean: Array2<f64>,
    pub std: Array2<f64>,
    pub cv: Array2<f64>,
}

impl PosteriorSummary {
    pub fn num_docs(&self) -> usize {
        self.mean.nrows()
    }

    pub fn num_topics(&self) -> usize {
        self.mean.ncols()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let cells = self.mean.len();
        let mut buf = Vec::with_capacity(HEADER_LEN + 24 * cells);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        for n in [self.num_samples, self.num_docs(), self.num_topics()] {
            buf.extend_from_slice(&(n as u64).to_le_bytes());
        }
        for block in [&self.mean, &self.std, &self.cv] {
            for x in block.iter() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
            return Err(Error::format(path, "not a posterior summary file"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
        if u32_at(8) != VERSION {
            return Err(Error::format(
                path,
                format!("unsupported summary version {}", u32_at(8)),
            ));
        }
        let (s, d, k) = (u64_at(16), u64_at(24), u64_at(32));
        let cells = d
            .checked_mul(k)
            .filter(|c| c.checked_mul(24).map(|b| b + HEADER_LEN) == Some(bytes.len()))
            .ok_or_else(|| Error::format(path, "header dimensions do not match body length"))?;
        let block = |i: usize| -> Array2<f64> {
            let start = HEADER_LEN + i * cells * 8;
            let data = bytes[start..start + cells * 8]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                .collect();
            Array2::from_shape_vec((d, k), data).expect("length checked above")
        };
        Ok(Self {
            num_samples: s,
            mean: block(0),
            std: block(1),
            cv: block(2),
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn identical_samples_have_zero_spread() {
        let theta = arr2(&[[0.25, 0.75], [0.5, 0.5]]);
        let mut acc = MomentAccumulator::new(2, 2);
        for _ in 0..5 {
            acc.push(&theta).unwrap();
        }
        let s = acc.finish().unwrap();
        assert_eq!(s.mean, theta);
        assert!(s.std.iter().all(|&x| x == 0.0));
        assert!(s.cv.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_sample_moments() {
        let mut acc = MomentAccumulator::new(1, 1);
        acc.push(&arr2(&[[0.2]])).unwrap();
        acc.push(&arr2(&[[0.4]])).unwrap();
        let s = acc.finish().unwrap();
        assert!((s.mean[[0, 0]] - 0.3).abs() < 1e-15);
        assert!((s.std[[0, 0]] - 0.141_421_356_237_309_5).abs() < 1e-12);
        assert!((s.cv[[0, 0]] - 0.471_404_520_791_031_7).abs() < 1e-12);
    }

    #[test]
    fn needs_two_samples_and_matching_shapes() {
        let mut acc = MomentAccumulator::new(1, 2);
        assert!(acc.push(&arr2(&[[0.2]])).is_err());
        acc.push(&arr2(&[[0.2, 0.8]])).unwrap();
        assert!(acc.finish().is_err());
    }

    #[test]
    fn file_round_trip_and_header_checks() {
        let mut acc = MomentAccumulator::new(2, 3);
        acc.push(&arr2(&[[0.2, 0.3, 0.5], [0.1, 0.1, 0.8]])).unwrap();
        acc.push(&arr2(&[[0.3, 0.3, 0.4], [0.2, 0.1, 0.7]])).unwrap();
        let s = acc.finish().unwrap();
        let bytes = s.to_bytes();
        let p = Path::new("mem");
        assert_eq!(PosteriorSummary::from_bytes(&bytes, p).unwrap(), s);
        assert!(PosteriorSummary::from_bytes(&bytes[..bytes.len() - 8], p).is_err());
        let mut bad = bytes;
        bad[24] = 9;
        assert!(PosteriorSummary::from_bytes(&bad, p).is_err());
    }
}
