//! Surrogate decoder `D` and embedding encoders `E`.
//!
//! Real image encoders only enter the system through index files; these
//! encoders are deterministic stand-ins that map pseudo-clean latents into
//! the same embedding space as the reference corpus.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncoderError {
    #[error("input dimension {input} is not divisible into {out_dim} blocks")]
    NotDivisible { input: usize, out_dim: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("output dimension must be positive")]
    ZeroDimension,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("decoder matrix is rank deficient (rank {rank} < {cols} columns)")]
    RankDeficient { rank: usize, cols: usize },
    #[error("decoder matrix has {len} entries, expected {rows}x{cols}")]
    BadMatrixShape {
        rows: usize,
        cols: usize,
        len: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Identity,
    Downsample,
    RandomProjection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    pub out_dim: usize,
    #[serde(default)]
    pub seed: u64,
}

impl EncoderSpec {
    pub fn identity(dim: usize) -> Self {
        Self {
            kind: EncoderKind::Identity,
            out_dim: dim,
            seed: 0,
        }
    }

    pub fn downsample(out_dim: usize) -> Self {
        Self {
            kind: EncoderKind::Downsample,
            out_dim,
            seed: 0,
        }
    }

    pub fn random_projection(out_dim: usize, seed: u64) -> Self {
        Self {
            kind: EncoderKind::RandomProjection,
            out_dim,
            seed,
        }
    }

    /// Stable 64-bit fingerprint, recorded alongside indices built with this spec.
    pub fn fingerprint(&self) -> u64 {
        let kind = match self.kind {
            EncoderKind::Identity => 0u8,
            EncoderKind::Downsample => 1,
            EncoderKind::RandomProjection => 2,
        };
        let mut bytes = vec![kind];
        bytes.extend_from_slice(&(self.out_dim as u64).to_le_bytes());
        bytes.extend_from_slice(&self.seed.to_le_bytes());
        crate::fnv1a64(&bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub id: String,
    pub vec: Vec<f64>,
}

impl Embedding {
    pub fn new(id: impl Into<String>, vec: Vec<f64>) -> Self {
        Self { id: id.into(), vec }
    }

    pub fn dim(&self) -> usize {
        self.vec.len()
    }

    pub fn norm(&self) -> f64 {
        self.vec.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// An encoder spec bound to an input dimension, with any projection matrix
/// materialized once.
#[derive(Debug, Clone)]
pub struct Encoder {
    spec: EncoderSpec,
    input_dim: usize,
    // d x D, row-major; only for RandomProjection.
    projection: Vec<f64>,
}

impl Encoder {
    pub fn new(spec: EncoderSpec, input_dim: usize) -> Result<Self, EncoderError> {
        if spec.out_dim == 0 || input_dim == 0 {
            return Err(EncoderError::ZeroDimension);
        }
        let projection = match spec.kind {
            EncoderKind::Identity => {
                if spec.out_dim != input_dim {
                    return Err(EncoderError::DimensionMismatch {
                        expected: spec.out_dim,
                        actual: input_dim,
                    });
                }
                Vec::new()
            }
            EncoderKind::Downsample => {
                if !input_dim.is_multiple_of(spec.out_dim) {
                    return Err(EncoderError::NotDivisible {
                        input: input_dim,
                        out_dim: spec.out_dim,
                    });
                }
                Vec::new()
            }
            EncoderKind::RandomProjection => projection_matrix(spec.out_dim, input_dim, spec.seed),
        };
        Ok(Self {
            spec,
            input_dim,
            projection,
        })
    }

    pub fn spec(&self) -> &EncoderSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn out_dim(&self) -> usize {
        self.spec.out_dim
    }

    pub fn encode(&self, id: impl Into<String>, input: &[f64]) -> Result<Embedding, EncoderError> {
        if input.len() != self.input_dim {
            return Err(EncoderError::DimensionMismatch {
                expected: self.input_dim,
                actual: input.len(),
            });
        }
        if !input.iter().all(|v| v.is_finite()) {
            return Err(EncoderError::NonFinite("encoder input"));
        }
        let vec = match self.spec.kind {
            EncoderKind::Identity => input.to_vec(),
            EncoderKind::Downsample => {
                let block = self.input_dim / self.spec.out_dim;
                input
                    .chunks_exact(block)
                    .map(|c| c.iter().sum::<f64>() / block as f64)
                    .collect()
            }
            EncoderKind::RandomProjection => self
                .projection
                .chunks_exact(self.input_dim)
                .map(|row| crate::dot(row, input))
                .collect(),
        };
        Ok(Embedding::new(id, vec))
    }
}

/// Gaussian `rows x cols` matrix scaled by `1/sqrt(rows)`, filled row-major
/// from a single SplitMix64 stream.
pub fn projection_matrix(rows: usize, cols: usize, seed: u64) -> Vec<f64> {
    let mut rng = SplitMix64::new(seed);
    let scale = 1.0 / (rows as f64).sqrt();
    (0..rows * cols)
        .map(|_| rng.next_normal() * scale)
        .collect()
}

/// One-shot encode; builds the encoder on every call.
pub fn encode(input: &[f64], spec: &EncoderSpec) -> Result<Embedding, EncoderError> {
    Encoder::new(*spec, input.len())?.encode("", input)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecoderSpec {
    Identity,
    FixedLinear {
        rows: usize,
        cols: usize,
        matrix: Vec<f64>,
    },
}

impl DecoderSpec {
    /// Row-major `rows x cols` map; must have full column rank.
    pub fn fixed_linear(rows: usize, cols: usize, matrix: Vec<f64>) -> Result<Self, EncoderError> {
        if rows == 0 || cols == 0 {
            return Err(EncoderError::ZeroDimension);
        }
        if matrix.len() != rows * cols {
            return Err(EncoderError::BadMatrixShape {
                rows,
                cols,
                len: matrix.len(),
            });
        }
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(EncoderError::NonFinite("decoder matrix"));
        }
        let rank = matrix_rank(rows, cols, &matrix);
        if rank < cols {
            return Err(EncoderError::RankDeficient { rank, cols });
        }
        Ok(Self::FixedLinear { rows, cols, matrix })
    }

    /// Seeded Gaussian map, scaled by `1/sqrt(rows)`; rejects the
    /// (probability-zero) rank-deficient draws.
    pub fn random(rows: usize, cols: usize, seed: u64) -> Result<Self, EncoderError> {
        Self::fixed_linear(rows, cols, projection_matrix(rows, cols, seed))
    }

    /// Output length for an input of `latent_dim`, if compatible.
    pub fn output_dim(&self, latent_dim: usize) -> Result<usize, EncoderError> {
        match self {
            Self::Identity => Ok(latent_dim),
            Self::FixedLinear { rows, cols, .. } => {
                if *cols == latent_dim {
                    Ok(*rows)
                } else {
                    Err(EncoderError::DimensionMismatch {
                        expected: *cols,
                        actual: latent_dim,
                    })
                }
            }
        }
    }
}

pub fn decode(latent: &[f64], spec: &DecoderSpec) -> Result<Vec<f64>, EncoderError> {
    if !latent.iter().all(|v| v.is_finite()) {
        return Err(EncoderError::NonFinite("latent"));
    }
    match spec {
        DecoderSpec::Identity => Ok(latent.to_vec()),
        DecoderSpec::FixedLinear { cols, matrix, .. } => {
            if latent.len() != *cols {
                return Err(EncoderError::DimensionMismatch {
                    expected: *cols,
                    actual: latent.len(),
                });
            }
            Ok(matrix
                .chunks_exact(*cols)
                .map(|row| crate::dot(row, latent))
                .collect())
        }
    }
}

/// Numerical rank by Gaussian elimination with partial pivoting.
fn matrix_rank(rows: usize, cols: usize, matrix: &[f64]) -> usize {
    let mut a = matrix.to_vec();
    let max_abs = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return 0;
    }
    let tol = max_abs * 1e-10 * rows.max(cols) as f64;
    let mut rank = 0;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let pivot = (rank..rows)
            .max_by(|&i, &j| a[i * cols + col].abs().total_cmp(&a[j * cols + col].abs()))
            .unwrap();
        if a[pivot * cols + col].abs() <= tol {
            continue;
        }
        for k in 0..cols {
            a.swap(rank * cols + k, pivot * cols + k);
        }
        let p = a[rank * cols + col];
        for i in rank + 1..rows {
            let f = a[i * cols + col] / p;
            if f != 0.0 {
                for k in col..cols {
                    a[i * cols + k] -= f * a[rank * cols + k];
                }
            }
        }
        rank += 1;
    }
    rank
}
