//! Benchmark harnesses: per-step x-pred ablation and reference-count
//! scalability sweep.

use std::hint::black_box;
use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::metrics::{pr_auc, roc_auc, CurvePoint, EvalError, EvalSample};
use crate::encoder::{DecoderSpec, Embedding, Encoder, EncoderError, EncoderSpec};
use crate::filter::{FilterConfig, FilterError, FilterMode, Pipeline, QueryMode, RunRecord};
use crate::index::{IndexError, NaiveReferenceSet, ReferenceIndex, Scorer};
use crate::sampler::{OracleKind, SamplerError, ScenarioSpec, SuiteConfig, TURBO_STEPS};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid harness configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Label and per-check score of every record at `step`.
pub fn samples_at_step(records: &[RunRecord], step: usize) -> Vec<EvalSample> {
    records
        .iter()
        .filter_map(|r| {
            r.checks
                .iter()
                .find(|c| c.step == step)
                .map(|c| EvalSample::new(r.label, c.p))
        })
        .collect()
}

/// Label and final decision score of every record.
pub fn samples_from_records(records: &[RunRecord]) -> Vec<EvalSample> {
    records
        .iter()
        .map(|r| EvalSample::new(r.label, r.p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationPoint {
    pub step: usize,
    pub variant: QueryMode,
    pub roc_auc: f64,
    pub pr_auc: f64,
}

/// ROC/PR-AUC of the check score at each step in `steps`, once per query
/// variant. Every scenario is sampled once per variant in score-only mode,
/// checking all steps of the grid.
pub fn run_ablation<S: Scorer + ?Sized>(
    pipeline: &Pipeline<'_, S>,
    scenarios: &[ScenarioSpec],
    steps: &[usize],
    variants: &[QueryMode],
) -> Result<Vec<AblationPoint>, HarnessError> {
    let k = scenarios
        .first()
        .ok_or_else(|| HarnessError::Config("no scenarios".into()))?
        .steps;
    let mut out = Vec::with_capacity(steps.len() * variants.len());
    for &variant in variants {
        let cfg =
            FilterConfig::new(1.0, steps.to_vec(), FilterMode::ScoreOnly, k)?.with_query(variant);
        let records = pipeline.run_suite(scenarios, &cfg)?;
        for &step in cfg.check_steps() {
            let samples = samples_at_step(&records, step);
            out.push(AblationPoint {
                step,
                variant,
                roc_auc: roc_auc(&samples)?,
                pr_auc: pr_auc(&samples)?,
            });
        }
    }
    out.sort_by_key(|p| (p.step, p.variant != QueryMode::XPred));
    Ok(out)
}

/// Curve points as CSV, one row per threshold.
pub fn write_curve_table<W: Write>(out: W, points: &[CurvePoint]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepRow {
    gamma: f64,
    accuracy: f64,
}

/// `(gamma, accuracy)` pairs as CSV.
pub fn write_sweep_table<W: Write>(out: W, sweep: &[(f64, f64)]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for &(gamma, accuracy) in sweep {
        w.serialize(SweepRow { gamma, accuracy })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_ablation_table<W: Write>(
    out: W,
    points: &[AblationPoint],
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalabilityConfig {
    pub sizes: Vec<usize>,
    pub latent_dim: usize,
    pub embed_dim: usize,
    pub steps: usize,
    pub check_step: usize,
    pub noise_scale: f64,
    pub gamma: f64,
    /// Timed filter runs per size against the cached index.
    pub latency_calls: usize,
    /// Timed filter runs per size against the re-encoding baseline.
    pub naive_calls: usize,
    pub seed: u64,
}

impl Default for ScalabilityConfig {
    fn default() -> Self {
        Self {
            sizes: (1..=14).map(|i| i * 10).collect(),
            latent_dim: 512,
            embed_dim: 512,
            steps: TURBO_STEPS,
            check_step: 1,
            noise_scale: 0.5,
            gamma: 0.7,
            latency_calls: 1000,
            naive_calls: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalabilityRecord {
    pub n_refs: usize,
    pub roc_auc: f64,
    pub pr_auc: f64,
    /// Generation start until the filter's score is ready (cached index).
    pub median_score_latency: Duration,
    /// Generation start until the run ends (cached index, early stop).
    pub median_end_to_end_latency: Duration,
    /// A single `ReferenceIndex::score` call, query already embedded.
    pub median_index_score: Duration,
    /// Same as `median_score_latency` with references re-encoded per query.
    pub naive_median_score_latency: Duration,
}

#[derive(Serialize)]
struct ScalabilityRow {
    n_refs: usize,
    roc_auc: f64,
    pr_auc: f64,
    median_score_latency_ms: f64,
    median_end_to_end_latency_ms: f64,
    median_index_score_ms: f64,
    naive_median_score_latency_ms: f64,
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn write_scalability_table<W: Write>(
    out: W,
    records: &[ScalabilityRecord],
) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(ScalabilityRow {
            n_refs: r.n_refs,
            roc_auc: r.roc_auc,
            pr_auc: r.pr_auc,
            median_score_latency_ms: ms(r.median_score_latency),
            median_end_to_end_latency_ms: ms(r.median_end_to_end_latency),
            median_index_score_ms: ms(r.median_index_score),
            naive_median_score_latency_ms: ms(r.naive_median_score_latency),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn median(mut values: Vec<Duration>) -> Duration {
    assert!(!values.is_empty(), "median of an empty sample");
    values.sort_unstable();
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2
    }
}

const WARMUP_CALLS: usize = 16;

/// Median score and end-to-end latency of wall-clock filter runs, measured
/// sequentially on the calling thread.
fn time_filter_runs<S: Scorer + ?Sized>(
    pipeline: &Pipeline<'_, S>,
    scenarios: &[ScenarioSpec],
    cfg: &FilterConfig,
    calls: usize,
) -> Result<(Duration, Duration), HarnessError> {
    for s in scenarios.iter().cycle().take(WARMUP_CALLS) {
        black_box(pipeline.run_filtered(s, cfg)?);
    }
    let mut score = Vec::with_capacity(calls);
    let mut end = Vec::with_capacity(calls);
    for s in scenarios.iter().cycle().take(calls) {
        let out = pipeline.run_filtered(s, cfg)?;
        score.push(out.ledger.score_latency());
        end.push(out.ledger.end_to_end());
    }
    Ok((median(score), median(end)))
}

fn time_index_scores(
    index: &ReferenceIndex,
    query: &Embedding,
    calls: usize,
) -> Result<Duration, HarnessError> {
    for _ in 0..WARMUP_CALLS {
        black_box(index.score(black_box(query))?);
    }
    let mut times = Vec::with_capacity(calls);
    for _ in 0..calls {
        let start = Instant::now();
        black_box(index.score(black_box(query))?);
        times.push(start.elapsed());
    }
    Ok(median(times))
}

/// For each reference-set size `n`: draw `n` references with `n` matched and
/// `n` unrelated scenarios, record ROC/PR-AUC at the check step, then time
/// the filter against the cached index and against a baseline that
/// re-encodes every reference per query.
pub fn run_scalability(cfg: &ScalabilityConfig) -> Result<Vec<ScalabilityRecord>, HarnessError> {
    if cfg.sizes.is_empty() || cfg.sizes.contains(&0) {
        return Err(HarnessError::Config(
            "sizes must be non-empty and positive".into(),
        ));
    }
    if cfg.latency_calls == 0 || cfg.naive_calls == 0 {
        return Err(HarnessError::Config("call counts must be positive".into()));
    }
    let encoder = Encoder::new(
        EncoderSpec::random_projection(cfg.embed_dim, cfg.seed ^ 0x5EED),
        cfg.latent_dim,
    )?;
    let decoder = DecoderSpec::Identity;
    let mut out = Vec::with_capacity(cfg.sizes.len());
    for &n in &cfg.sizes {
        let suite = SuiteConfig {
            corpus_size: n,
            scenarios: Some(2 * n),
            matched_fraction: 0.5,
            latent_dim: cfg.latent_dim,
            steps: cfg.steps,
            oracle_kind: OracleKind::Perturbed,
            noise_scale: cfg.noise_scale,
            seed: cfg.seed.wrapping_add(n as u64),
            ..SuiteConfig::default()
        }
        .build()?;
        let embeddings: Vec<Embedding> = suite
            .corpus
            .iter()
            .map(|r| encoder.encode(r.id.as_str(), &r.latent))
            .collect::<Result<_, _>>()?;
        let index = ReferenceIndex::build(&embeddings, Some(encoder.spec().fingerprint()))?;
        let naive = NaiveReferenceSet::new(
            suite.corpus.iter().map(|r| r.id.clone()).collect(),
            suite.corpus.iter().map(|r| r.latent.clone()).collect(),
            decoder.clone(),
            encoder.clone(),
        )?;

        let score_only = FilterConfig::new(
            cfg.gamma,
            vec![cfg.check_step],
            FilterMode::ScoreOnly,
            cfg.steps,
        )?;
        let cached = Pipeline::new(&index, &encoder, &decoder);
        let records = cached.run_suite(&suite.scenarios, &score_only)?;
        let samples = samples_at_step(&records, cfg.check_step);

        let early = FilterConfig::new(
            cfg.gamma,
            vec![cfg.check_step],
            FilterMode::EarlyStop,
            cfg.steps,
        )?;
        let (score_latency, end_latency) =
            time_filter_runs(&cached, &suite.scenarios, &early, cfg.latency_calls)?;
        let naive_pipeline = Pipeline::new(&naive, &encoder, &decoder);
        let (naive_latency, _) =
            time_filter_runs(&naive_pipeline, &suite.scenarios, &early, cfg.naive_calls)?;
        let query = encoder.encode("query", &suite.scenarios[0].oracle.target)?;
        let index_score = time_index_scores(&index, &query, cfg.latency_calls)?;

        out.push(ScalabilityRecord {
            n_refs: n,
            roc_auc: roc_auc(&samples)?,
            pr_auc: pr_auc(&samples)?,
            median_score_latency: score_latency,
            median_end_to_end_latency: end_latency,
            median_index_score: index_score,
            naive_median_score_latency: naive_latency,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_odd_and_even() {
        let d = Duration::from_micros;
        assert_eq!(median(vec![d(5), d(1), d(3)]), d(3));
        assert_eq!(
            median(vec![d(4), d(1), d(3), d(2)]),
            Duration::from_nanos(2500)
        );
    }

    #[test]
    fn small_scalability_sweep() {
        let cfg = ScalabilityConfig {
            sizes: vec![4, 8],
            latent_dim: 64,
            embed_dim: 32,
            latency_calls: 20,
            naive_calls: 20,
            ..ScalabilityConfig::default()
        };
        let records = run_scalability(&cfg).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[1].n_refs, 8);
        for r in &records {
            assert!((0.0..=1.0).contains(&r.roc_auc));
            assert!(r.median_score_latency <= r.median_end_to_end_latency);
        }
        let mut buf = Vec::new();
        write_scalability_table(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n_refs,roc_auc"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn scalability_rejects_bad_config() {
        let cfg = ScalabilityConfig {
            sizes: vec![],
            ..ScalabilityConfig::default()
        };
        assert!(run_scalability(&cfg).is_err());
    }
}
