//! Reference-similarity content filtering inside a flow-matching sampling loop.
//!
//! The sampler exposes each intermediate latent together with the model's
//! velocity prediction. At configured check steps the filter turns that pair
//! into a pseudo-clean estimate (x-pred), decodes and embeds it, and scores
//! the embedding against a cached matrix of normalized reference embeddings
//! with a single matrix-vector product. A best match above `gamma` rejects
//! the generation, optionally halting the sampler on the spot.
//!
//! Modules, bottom up:
//!
//! * [`schedule`]: interpolation path, true velocity, x-pred in both the
//!   velocity and noise forms.
//! * [`sampler`]: Euler ODE loop with synthetic velocity oracles and
//!   labeled benchmark suites.
//! * [`encoder`]: surrogate decoder and deterministic embedding encoders.
//! * [`index`]: the reference matrix, scoring, and the binary index format.
//! * [`filter`]: the in-loop decision procedure and latency ledger.
//! * [`eval`]: ROC/PR metrics, threshold sweeps, ablation and scalability
//!   harnesses.

pub mod encoder;
pub mod eval;
pub mod filter;
pub mod index;
pub mod rng;
pub mod sampler;
pub mod schedule;

use std::hash::Hasher;

pub use encoder::{decode, encode, DecoderSpec, Embedding, Encoder, EncoderKind, EncoderSpec};
pub use eval::{pr_auc, roc_auc, threshold_sweep, CurveSummary, EvalSample, ScalabilityRecord};
pub use filter::{
    run_filtered, run_unfiltered_then_check, CostModel, Decision, FilterConfig, FilterMode,
    FilterOutcome, LatencyLedger, Pipeline, QueryMode, RunRecord, Verdict,
};
pub use index::{
    build_index, load_index, save_index, IndexError, ReferenceIndex, Scorer, SimilarityReport,
};
pub use sampler::{
    euler_step, make_benchmark_suite, run_trajectory, BenchmarkSuite, OracleKind, ScenarioSpec,
    SuiteConfig, Trajectory, VelocityOracle,
};
pub use schedule::{
    interpolate, true_velocity, x_pred, LatentState, Prediction, PredictionKind, Schedule,
    ScheduleKind,
};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hasher = fnv::FnvHasher::default();
    hasher.write(bytes);
    hasher.finish()
}

/// Dot product with eight independent accumulators.
pub(crate) fn dot<A: Copy + Into<f64>>(a: &[A], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            acc[k] += x[k].into() * y[k];
        }
    }
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(&x, y)| x.into() * y)
        .sum();
    acc.iter().sum::<f64>() + tail
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..37).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..37).map(|i| (i as f64 * 0.11).cos()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
        let a32: Vec<f32> = a.iter().map(|&x| x as f32).collect();
        let naive32: f64 = a32.iter().zip(&b).map(|(&x, y)| x as f64 * y).sum();
        assert!((dot(&a32, &b) - naive32).abs() < 1e-12);
    }
}
