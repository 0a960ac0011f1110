//! Cached reference-embedding matrix and its on-disk format.
//!
//! File layout (little-endian):
//!
//! ```text
//! 0..8    magic  b"EDGSHLD1"
//! 8..12   u32    version (1)
//! 12..16  u32    n
//! 16..20  u32    d
//! n x     [u16 id_len][id bytes, UTF-8][d x f32]
//! last 8  u64    FNV-1a 64 of every preceding byte
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::encoder::{decode, DecoderSpec, Embedding, Encoder, EncoderError};

pub const MAGIC: &[u8; 8] = b"EDGSHLD1";
pub const FORMAT_VERSION: u32 = 1;
/// Allowed deviation of a stored row's l2 norm from 1.
pub const NORM_TOLERANCE: f64 = 1e-6;

const HEADER_LEN: usize = 20;
const CHECKSUM_LEN: usize = 8;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("index must contain at least one embedding")]
    Empty,
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("embedding `{id}` has dimension {actual}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        actual: usize,
    },
    #[error("embedding `{0}` has zero (or non-finite) norm")]
    ZeroNorm(String),
    #[error("query has zero (or non-finite) norm")]
    ZeroNormQuery,
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("id `{0}` is longer than 65535 bytes")]
    IdTooLong(String),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("truncated file: needed {needed} bytes, found {available}")]
    Truncated { needed: usize, available: usize },
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },
    #[error("row {row} id is not valid UTF-8")]
    InvalidId { row: usize },
    #[error("invariant violation: row {row} (`{id}`) has norm {norm}")]
    InvariantViolation { row: usize, id: String, norm: f64 },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IndexError {
    /// Whether the error indicates damaged or tampered data, as opposed to a
    /// malformed or unsupported input.
    pub fn is_integrity_error(&self) -> bool {
        matches!(
            self,
            Self::ChecksumMismatch { .. } | Self::InvariantViolation { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildMeta {
    /// Fingerprint of the encoder spec that produced the rows, when known.
    pub encoder_fingerprint: Option<u64>,
    /// Seconds since the Unix epoch; `None` for indices read from disk.
    pub built_at: Option<u64>,
}

/// l2-normalized reference matrix, `n x d`, row-major `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceIndex {
    rows: Vec<f32>,
    ids: Vec<String>,
    dim: usize,
    meta: BuildMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub scores: Vec<f64>,
    pub p_max: f64,
    pub argmax: usize,
    pub argmax_id: String,
}

impl SimilarityReport {
    fn from_scores(scores: Vec<f64>, ids: &[String]) -> Self {
        let mut argmax = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[argmax] {
                argmax = i;
            }
        }
        Self {
            p_max: scores[argmax],
            argmax_id: ids[argmax].clone(),
            argmax,
            scores,
        }
    }
}

/// Anything that can turn a query embedding into per-reference cosine scores.
pub trait Scorer: Sync {
    fn dim(&self) -> usize;
    fn len(&self) -> usize;
    fn score(&self, query: &Embedding) -> Result<SimilarityReport, IndexError>;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn unit_query(query: &Embedding, dim: usize) -> Result<Vec<f64>, IndexError> {
    if query.dim() != dim {
        return Err(IndexError::DimensionMismatch {
            id: query.id.clone(),
            expected: dim,
            actual: query.dim(),
        });
    }
    let norm = query.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(IndexError::ZeroNormQuery);
    }
    Ok(query.vec.iter().map(|v| v / norm).collect())
}

/// Builds an index from raw embeddings, normalizing each row.
pub fn build_index(embeddings: &[Embedding]) -> Result<ReferenceIndex, IndexError> {
    ReferenceIndex::build(embeddings, None)
}

impl ReferenceIndex {
    pub fn build(
        embeddings: &[Embedding],
        encoder_fingerprint: Option<u64>,
    ) -> Result<Self, IndexError> {
        let first = embeddings.first().ok_or(IndexError::Empty)?;
        if first.dim() == 0 {
            return Err(IndexError::ZeroDimension);
        }
        let built_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .ok();
        let mut index = Self {
            rows: Vec::with_capacity(embeddings.len() * first.dim()),
            ids: Vec::with_capacity(embeddings.len()),
            dim: first.dim(),
            meta: BuildMeta {
                encoder_fingerprint,
                built_at,
            },
        };
        let mut seen = HashSet::new();
        for e in embeddings {
            if !seen.insert(e.id.as_str()) {
                return Err(IndexError::DuplicateId(e.id.clone()));
            }
            index.push_unchecked(e)?;
        }
        Ok(index)
    }

    /// Appends one reference. Existing rows are untouched.
    pub fn push(&mut self, embedding: &Embedding) -> Result<(), IndexError> {
        if self.ids.contains(&embedding.id) {
            return Err(IndexError::DuplicateId(embedding.id.clone()));
        }
        self.push_unchecked(embedding)
    }

    fn push_unchecked(&mut self, e: &Embedding) -> Result<(), IndexError> {
        if e.dim() != self.dim {
            return Err(IndexError::DimensionMismatch {
                id: e.id.clone(),
                expected: self.dim,
                actual: e.dim(),
            });
        }
        if e.id.len() > u16::MAX as usize {
            return Err(IndexError::IdTooLong(e.id.clone()));
        }
        let norm = e.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(IndexError::ZeroNorm(e.id.clone()));
        }
        self.rows.extend(e.vec.iter().map(|v| (v / norm) as f32));
        self.ids.push(e.id.clone());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn meta(&self) -> &BuildMeta {
        &self.meta
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.rows.chunks_exact(self.dim)
    }

    /// Cosine similarity against every row: `R q / |q|`.
    pub fn score(&self, query: &Embedding) -> Result<SimilarityReport, IndexError> {
        let q = unit_query(query, self.dim)?;
        let scores = self.rows().map(|row| crate::dot(row, &q)).collect();
        Ok(SimilarityReport::from_scores(scores, &self.ids))
    }

    /// Serialized form, checksum included.
    pub fn to_bytes(&self) -> Result<Vec<u8>, IndexError> {
        let n = self.len();
        let mut out = Vec::with_capacity(HEADER_LEN + n * (2 + 4 * self.dim + 16) + CHECKSUM_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(n as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for (id, row) in self.ids.iter().zip(self.rows()) {
            let len = u16::try_from(id.len()).map_err(|_| IndexError::IdTooLong(id.clone()))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let checksum = crate::fnv1a64(&out);
        out.extend_from_slice(&checksum.to_le_bytes());
        Ok(out)
    }

    /// Parses and validates a serialized index.
    ///
    /// Checks run in order: magic, version, structure (truncation/trailing
    /// bytes), checksum, then content invariants (ids, row norms).
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut reader = Reader { bytes, pos: 0 };
        if reader.take(8)? != MAGIC {
            return Err(IndexError::BadMagic);
        }
        let version = reader.u32()?;
        if version != FORMAT_VERSION {
            return Err(IndexError::UnsupportedVersion(version));
        }
        let n = reader.u32()? as usize;
        let dim = reader.u32()? as usize;

        let mut raw_rows = Vec::with_capacity(n);
        for _ in 0..n {
            let id_len = reader.u16()? as usize;
            let id = reader.take(id_len)?;
            let values = reader.take(dim * 4)?;
            raw_rows.push((id, values));
        }
        let body_len = reader.pos;
        let stored = u64::from_le_bytes(reader.take(CHECKSUM_LEN)?.try_into().unwrap());
        if reader.pos != bytes.len() {
            return Err(IndexError::TrailingBytes(bytes.len() - reader.pos));
        }
        let computed = crate::fnv1a64(&bytes[..body_len]);
        if stored != computed {
            return Err(IndexError::ChecksumMismatch { stored, computed });
        }

        if n == 0 {
            return Err(IndexError::Empty);
        }
        if dim == 0 {
            return Err(IndexError::ZeroDimension);
        }
        let mut ids = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n * dim);
        let mut seen = HashSet::new();
        for (row, (id, values)) in raw_rows.into_iter().enumerate() {
            let id = std::str::from_utf8(id)
                .map_err(|_| IndexError::InvalidId { row })?
                .to_owned();
            if !seen.insert(id.clone()) {
                return Err(IndexError::DuplicateId(id));
            }
            let start = rows.len();
            rows.extend(
                values
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap())),
            );
            let norm = rows[start..]
                .iter()
                .map(|&v| v as f64 * v as f64)
                .sum::<f64>()
                .sqrt();
            let unit = (norm - 1.0).abs() <= NORM_TOLERANCE;
            if !unit {
                return Err(IndexError::InvariantViolation { row, id, norm });
            }
            ids.push(id);
        }
        Ok(Self {
            rows,
            ids,
            dim,
            meta: BuildMeta::default(),
        })
    }
}

impl Scorer for ReferenceIndex {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn score(&self, query: &Embedding) -> Result<SimilarityReport, IndexError> {
        ReferenceIndex::score(self, query)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], IndexError> {
        let end = self.pos.checked_add(len).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let out = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(out)
            }
            None => Err(IndexError::Truncated {
                needed: self.pos.saturating_add(len),
                available: self.bytes.len(),
            }),
        }
    }

    fn u16(&mut self) -> Result<u16, IndexError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn save_index(index: &ReferenceIndex, path: impl AsRef<Path>) -> Result<(), IndexError> {
    fs::write(path, index.to_bytes()?)?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<ReferenceIndex, IndexError> {
    ReferenceIndex::from_bytes(&fs::read(path)?)
}

/// Scoring without a cache: every query re-decodes and re-encodes the raw
/// reference latents. Only used as the contrast baseline in benchmarks.
#[derive(Debug, Clone)]
pub struct NaiveReferenceSet {
    ids: Vec<String>,
    latents: Vec<Vec<f64>>,
    decoder: DecoderSpec,
    encoder: Encoder,
}

impl NaiveReferenceSet {
    pub fn new(
        ids: Vec<String>,
        latents: Vec<Vec<f64>>,
        decoder: DecoderSpec,
        encoder: Encoder,
    ) -> Result<Self, IndexError> {
        if latents.is_empty() {
            return Err(IndexError::Empty);
        }
        assert_eq!(ids.len(), latents.len(), "one id per reference latent");
        Ok(Self {
            ids,
            latents,
            decoder,
            encoder,
        })
    }
}

impl Scorer for NaiveReferenceSet {
    fn dim(&self) -> usize {
        self.encoder.out_dim()
    }

    fn len(&self) -> usize {
        self.ids.len()
    }

    fn score(&self, query: &Embedding) -> Result<SimilarityReport, IndexError> {
        let q = unit_query(query, self.dim())?;
        let mut scores = Vec::with_capacity(self.latents.len());
        for (id, latent) in self.ids.iter().zip(&self.latents) {
            let e = self
                .encoder
                .encode(id.as_str(), &decode(latent, &self.decoder)?)?;
            let norm = e.norm();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(IndexError::ZeroNorm(id.clone()));
            }
            scores.push(crate::dot(&e.vec, &q) / norm);
        }
        Ok(SimilarityReport::from_scores(scores, &self.ids))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_embeddings(n: usize, d: usize, seed: u64) -> Vec<Embedding> {
        let mut rng = SplitMix64::new(seed);
        (0..n)
            .map(|i| Embedding::new(format!("cat{}/item{i}", i % 3), rng.normal_vec(d)))
            .collect()
    }

    #[test]
    fn normalizes_rows() {
        let idx = build_index(&[Embedding::new("a", vec![3.0, 4.0])]).unwrap();
        assert_eq!(idx.row(0), &[0.6f32, 0.8]);

        let unit = vec![0.0, 1.0, 0.0];
        let idx = build_index(&[Embedding::new("u", unit.clone())]).unwrap();
        for (a, b) in idx.row(0).iter().zip(&unit) {
            assert!((*a as f64 - b).abs() <= 1e-7);
        }
    }

    #[test]
    fn large_corpus_norms() {
        let idx = build_index(&random_embeddings(140, 512, 1)).unwrap();
        for row in idx.rows() {
            // Independent recomputation in f64.
            let norm: f64 = row.iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-6);
        }
    }

    #[test]
    fn build_errors() {
        assert!(matches!(build_index(&[]), Err(IndexError::Empty)));
        let err = build_index(&[Embedding::new("zero", vec![0.0, 0.0])]).unwrap_err();
        assert!(matches!(err, IndexError::ZeroNorm(ref id) if id == "zero"));
        let dup = [
            Embedding::new("a", vec![1.0]),
            Embedding::new("a", vec![2.0]),
        ];
        assert!(matches!(build_index(&dup), Err(IndexError::DuplicateId(_))));
        let mixed = [
            Embedding::new("a", vec![1.0]),
            Embedding::new("b", vec![2.0, 1.0]),
        ];
        assert!(matches!(
            build_index(&mixed),
            Err(IndexError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn self_similarity_and_orthogonality() {
        let embs = random_embeddings(20, 32, 2);
        let idx = build_index(&embs).unwrap();
        for (i, e) in embs.iter().enumerate() {
            let r = idx.score(e).unwrap();
            assert!((r.scores[i] - 1.0).abs() <= 1e-6);
            assert_eq!(r.argmax_id, e.id);
        }

        let idx = build_index(&[
            Embedding::new("x", vec![1.0, 0.0, 0.0]),
            Embedding::new("y", vec![0.0, 1.0, 0.0]),
        ])
        .unwrap();
        let r = idx
            .score(&Embedding::new("q", vec![0.0, 0.0, 2.0]))
            .unwrap();
        assert!(r.p_max <= 1e-6);
    }

    #[test]
    fn ties_break_to_lowest_row() {
        let idx = build_index(&[
            Embedding::new("first", vec![1.0, 0.0]),
            Embedding::new("second", vec![0.0, 1.0]),
        ])
        .unwrap();
        let r = idx.score(&Embedding::new("q", vec![1.0, 1.0])).unwrap();
        assert_eq!(r.argmax, 0);
        assert_eq!(r.argmax_id, "first");
    }

    #[test]
    fn zero_query_is_an_error() {
        let idx = build_index(&random_embeddings(3, 4, 3)).unwrap();
        assert!(matches!(
            idx.score(&Embedding::new("q", vec![0.0; 4])),
            Err(IndexError::ZeroNormQuery)
        ));
        assert!(idx.score(&Embedding::new("q", vec![1.0; 5])).is_err());
    }

    #[test]
    fn scores_match_naive_loop() {
        let embs = random_embeddings(50, 64, 4);
        let idx = build_index(&embs).unwrap();
        let q = Embedding::new("q", SplitMix64::new(99).normal_vec(64));
        let report = idx.score(&q).unwrap();
        let qn = q.norm();
        for (i, e) in embs.iter().enumerate() {
            let en = e.norm();
            let mut dot = 0.0;
            for k in 0..64 {
                dot += (e.vec[k] / en) * (q.vec[k] / qn);
            }
            assert!((report.scores[i] - dot).abs() <= 1e-6);
        }
        let best = report.scores.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(report.p_max, best);
    }

    #[test]
    fn growth_preserves_existing_scores() {
        let embs = random_embeddings(10, 16, 5);
        let mut idx = build_index(&embs[..6]).unwrap();
        let q = Embedding::new("q", SplitMix64::new(7).normal_vec(16));
        let before = idx.score(&q).unwrap().scores;
        for e in &embs[6..] {
            idx.push(e).unwrap();
        }
        let after = idx.score(&q).unwrap().scores;
        assert_eq!(&after[..6], &before[..]);
        assert!(idx.push(&embs[0]).is_err());
    }

    #[test]
    fn round_trip_bytes() {
        let idx = build_index(&random_embeddings(3, 4, 6)).unwrap();
        let back = ReferenceIndex::from_bytes(&idx.to_bytes().unwrap()).unwrap();
        assert_eq!(back.ids(), idx.ids());
        assert!(back
            .rows()
            .flatten()
            .zip(idx.rows().flatten())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn corrupted_files() {
        let bytes = build_index(&random_embeddings(3, 4, 7))
            .unwrap()
            .to_bytes()
            .unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            ReferenceIndex::from_bytes(&bad),
            Err(IndexError::BadMagic)
        ));

        let mut bad = bytes.clone();
        bad[8] = 2;
        assert!(matches!(
            ReferenceIndex::from_bytes(&bad),
            Err(IndexError::UnsupportedVersion(2))
        ));

        let mut bad = bytes.clone();
        let last_row_byte = bytes.len() - 9;
        bad[last_row_byte] ^= 0x01;
        let err = ReferenceIndex::from_bytes(&bad).unwrap_err();
        assert!(matches!(err, IndexError::ChecksumMismatch { .. }));
        assert!(err.is_integrity_error());

        let err = ReferenceIndex::from_bytes(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, IndexError::Truncated { .. }));
        assert!(!err.is_integrity_error());

        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(
            ReferenceIndex::from_bytes(&long),
            Err(IndexError::TrailingBytes(1))
        ));
    }

    #[test]
    fn naive_set_agrees_with_cache() {
        let mut rng = SplitMix64::new(8);
        let latents: Vec<Vec<f64>> = (0..5).map(|_| rng.normal_vec(32)).collect();
        let ids: Vec<String> = (0..5).map(|i| format!("r{i}")).collect();
        let enc = Encoder::new(crate::encoder::EncoderSpec::random_projection(16, 1), 32).unwrap();
        let embs: Vec<Embedding> = ids
            .iter()
            .zip(&latents)
            .map(|(id, l)| enc.encode(id.as_str(), l).unwrap())
            .collect();
        let idx = build_index(&embs).unwrap();
        let naive =
            NaiveReferenceSet::new(ids, latents, DecoderSpec::Identity, enc.clone()).unwrap();
        let q = enc.encode("q", &rng.normal_vec(32)).unwrap();
        let a = idx.score(&q).unwrap();
        let b = naive.score(&q).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert!((x - y).abs() < 1e-6);
        }
        assert_eq!(a.argmax, b.argmax);
    }
}
