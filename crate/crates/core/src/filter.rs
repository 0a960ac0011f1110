//! In-loop filter: at configured sampler steps, estimate the clean sample,
//! embed it, score it against the reference index and reject (optionally
//! halting generation) when the best match exceeds `gamma`.

use std::io::{BufRead, Write};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{decode, DecoderSpec, Encoder, EncoderError};
use crate::index::{IndexError, Scorer, SimilarityReport};
use crate::sampler::{SamplerError, SamplerRun, ScenarioSpec};
use crate::schedule::{x_pred, LatentState, Prediction, Schedule, ScheduleError};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("invalid filter config: {0}")]
    Config(String),
    #[error("scenario `{id}` has {actual} steps but the filter was configured for {expected}")]
    StepMismatch {
        id: String,
        expected: usize,
        actual: usize,
    },
    #[error("pipeline dimension mismatch: {0}")]
    Dimensions(String),
    #[error("line {line}: malformed run record")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    /// Halt sampling at the first rejecting check.
    EarlyStop,
    /// Observe every check and always finish the trajectory.
    ScoreOnly,
}

/// What gets embedded at a check step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    /// Pseudo-clean estimate from the current state and forward pass.
    #[default]
    XPred,
    /// The noisy latent `z_t` itself (ablation baseline).
    RawLatent,
}

/// Synthetic time accounting: each forward pass costs `per_step`, each
/// decode/encode/score costs `scoring_overhead`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub per_step: Duration,
    pub scoring_overhead: Duration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    gamma: f64,
    check_steps: Vec<usize>,
    mode: FilterMode,
    steps: usize,
    #[serde(default)]
    query: QueryMode,
    #[serde(default)]
    cost_model: Option<CostModel>,
}

impl FilterConfig {
    /// `check_steps` are 1-based sampler steps in `[1, steps]`; they are
    /// sorted and deduplicated.
    pub fn new(
        gamma: f64,
        mut check_steps: Vec<usize>,
        mode: FilterMode,
        steps: usize,
    ) -> Result<Self, FilterError> {
        if !gamma.is_finite() || !(-1.0..=1.0).contains(&gamma) {
            return Err(FilterError::Config(format!(
                "gamma must lie in [-1, 1], got {gamma}"
            )));
        }
        if steps == 0 {
            return Err(FilterError::Config("steps must be >= 1".into()));
        }
        check_steps.sort_unstable();
        check_steps.dedup();
        match (check_steps.first(), check_steps.last()) {
            (None, _) | (_, None) => {
                return Err(FilterError::Config("check_steps must not be empty".into()))
            }
            (Some(&first), Some(&last)) if first == 0 || last > steps => {
                return Err(FilterError::Config(format!(
                    "check steps must lie in [1, {steps}], got {check_steps:?}"
                )))
            }
            _ => {}
        }
        Ok(Self {
            gamma,
            check_steps,
            mode,
            steps,
            query: QueryMode::XPred,
            cost_model: None,
        })
    }

    pub fn with_query(mut self, query: QueryMode) -> Self {
        self.query = query;
        self
    }

    pub fn with_cost_model(mut self, cost_model: CostModel) -> Self {
        self.cost_model = Some(cost_model);
        self
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn check_steps(&self) -> &[usize] {
        &self.check_steps
    }

    pub fn mode(&self) -> FilterMode {
        self.mode
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn query(&self) -> QueryMode {
        self.query
    }

    pub fn cost_model(&self) -> Option<&CostModel> {
        self.cost_model.as_ref()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub step: usize,
    /// Sampler time of the state that was checked.
    pub t: f64,
    pub p: f64,
    pub argmax_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    /// Running maximum of the check scores seen.
    pub p: f64,
    pub step_decided: usize,
    pub argmax_id: String,
    pub checks: Vec<CheckRecord>,
}

impl Decision {
    /// `Reject` iff some check scored above `gamma`, and the deciding check
    /// is one of them.
    pub fn is_consistent(&self, gamma: f64) -> bool {
        let any_above = self.checks.iter().any(|c| c.p > gamma);
        let decided_above = self
            .checks
            .iter()
            .find(|c| c.step == self.step_decided)
            .is_some_and(|c| c.p > gamma);
        match self.verdict {
            Verdict::Reject => any_above && decided_above && self.p > gamma,
            Verdict::Accept => !any_above && self.p <= gamma,
        }
    }
}

/// Timestamps are offsets from the run's own start on a monotonic clock
/// (real or simulated).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyLedger {
    pub t_start: Duration,
    /// When the score that settled the verdict became available.
    pub t_score_ready: Duration,
    /// When sampling stopped, early or not.
    pub t_generation_end: Duration,
    pub steps_executed: usize,
    pub steps_saved: usize,
}

impl LatencyLedger {
    /// Time from the start of generation until the filter produced its score.
    pub fn score_latency(&self) -> Duration {
        self.t_score_ready - self.t_start
    }

    pub fn end_to_end(&self) -> Duration {
        self.t_score_ready.max(self.t_generation_end) - self.t_start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub decision: Decision,
    pub ledger: LatencyLedger,
    /// Final latent; `None` when generation was halted.
    pub final_latent: Option<Vec<f64>>,
}

enum Clock {
    Wall(Instant),
    Simulated { now: Duration, model: CostModel },
}

impl Clock {
    fn new(model: Option<&CostModel>) -> Self {
        match model {
            Some(&model) => Self::Simulated {
                now: Duration::ZERO,
                model,
            },
            None => Self::Wall(Instant::now()),
        }
    }

    fn now(&self) -> Duration {
        match self {
            Self::Wall(start) => start.elapsed(),
            Self::Simulated { now, .. } => *now,
        }
    }

    fn charge_step(&mut self) {
        if let Self::Simulated { now, model } = self {
            *now += model.per_step;
        }
    }

    fn charge_scoring(&mut self) {
        if let Self::Simulated { now, model } = self {
            *now += model.scoring_overhead;
        }
    }
}

/// Decoder, encoder and scorer wired together with dimension checks.
pub struct Pipeline<'a, S: Scorer + ?Sized> {
    pub scorer: &'a S,
    pub encoder: &'a Encoder,
    pub decoder: &'a DecoderSpec,
    pub schedule: Schedule,
}

impl<'a, S: Scorer + ?Sized> Clone for Pipeline<'a, S> {
    fn clone(&self) -> Self {
        Self { ..*self }
    }
}

impl<'a, S: Scorer + ?Sized> Pipeline<'a, S> {
    pub fn new(scorer: &'a S, encoder: &'a Encoder, decoder: &'a DecoderSpec) -> Self {
        Self {
            scorer,
            encoder,
            decoder,
            schedule: Schedule::linear_flow(),
        }
    }

    fn check_dims(&self, latent_dim: usize) -> Result<(), FilterError> {
        let decoded = self.decoder.output_dim(latent_dim)?;
        if decoded != self.encoder.input_dim() {
            return Err(FilterError::Dimensions(format!(
                "decoder emits {decoded} values, encoder expects {}",
                self.encoder.input_dim()
            )));
        }
        if self.encoder.out_dim() != self.scorer.dim() {
            return Err(FilterError::Dimensions(format!(
                "encoder emits {} dims, index holds {}",
                self.encoder.out_dim(),
                self.scorer.dim()
            )));
        }
        Ok(())
    }

    /// `score(E(D(latent)))`.
    pub fn score_latent(&self, latent: &[f64]) -> Result<SimilarityReport, FilterError> {
        let embedding = self
            .encoder
            .encode("query", &decode(latent, self.decoder)?)?;
        Ok(self.scorer.score(&embedding)?)
    }

    fn query_latent(
        &self,
        state: &LatentState,
        velocity: &[f64],
        mode: QueryMode,
    ) -> Result<Vec<f64>, FilterError> {
        match mode {
            QueryMode::XPred => Ok(x_pred(
                state,
                &Prediction::velocity(velocity.to_vec()),
                &self.schedule,
            )?),
            QueryMode::RawLatent => Ok(state.z.clone()),
        }
    }

    /// Runs one scenario with the filter hooked into the sampling loop.
    pub fn run_filtered(
        &self,
        spec: &ScenarioSpec,
        cfg: &FilterConfig,
    ) -> Result<FilterOutcome, FilterError> {
        if spec.steps != cfg.steps {
            return Err(FilterError::StepMismatch {
                id: spec.id.clone(),
                expected: cfg.steps,
                actual: spec.steps,
            });
        }
        self.check_dims(spec.latent_dim)?;
        let k = spec.steps;
        let mut run = SamplerRun::new(spec)?;
        let mut clock = Clock::new(cfg.cost_model.as_ref());
        let t_start = clock.now();

        let mut checks = Vec::with_capacity(cfg.check_steps.len());
        let mut pending = cfg.check_steps.iter().peekable();
        let mut best: Option<usize> = None;
        let mut first_reject: Option<(usize, Duration)> = None;
        let mut last_check_time = t_start;

        for step in 1..=k {
            let velocity = run.velocity()?;
            clock.charge_step();
            if pending.next_if_eq(&&step).is_some() {
                let query = self.query_latent(run.state(), &velocity, cfg.query)?;
                let report = self.score_latent(&query)?;
                clock.charge_scoring();
                let now = clock.now();
                last_check_time = now;
                checks.push(CheckRecord {
                    step,
                    t: run.state().t,
                    p: report.p_max,
                    argmax_id: report.argmax_id,
                });
                let idx = checks.len() - 1;
                if best.is_none_or(|b| checks[idx].p > checks[b].p) {
                    best = Some(idx);
                }
                if checks[idx].p > cfg.gamma && first_reject.is_none() {
                    first_reject = Some((idx, now));
                    if cfg.mode == FilterMode::EarlyStop {
                        let check = &checks[idx];
                        let decision = Decision {
                            verdict: Verdict::Reject,
                            p: checks[best.unwrap()].p,
                            step_decided: check.step,
                            argmax_id: check.argmax_id.clone(),
                            checks,
                        };
                        return Ok(FilterOutcome {
                            decision,
                            ledger: LatencyLedger {
                                t_start,
                                t_score_ready: now,
                                t_generation_end: now,
                                steps_executed: step,
                                steps_saved: k - step,
                            },
                            final_latent: None,
                        });
                    }
                }
            }
            run.advance(&velocity)?;
        }
        let t_generation_end = clock.now();
        let best = best.expect("check_steps is non-empty and within [1, K]");
        let (verdict, decider, t_score_ready) = match first_reject {
            Some((idx, at)) => (Verdict::Reject, idx, at),
            None => (Verdict::Accept, best, last_check_time),
        };
        let decision = Decision {
            verdict,
            p: checks[best].p,
            step_decided: checks[decider].step,
            argmax_id: checks[decider].argmax_id.clone(),
            checks,
        };
        Ok(FilterOutcome {
            decision,
            ledger: LatencyLedger {
                t_start,
                t_score_ready,
                t_generation_end,
                steps_executed: k,
                steps_saved: 0,
            },
            final_latent: Some(run.into_state().z),
        })
    }

    /// Output-based baseline: generate all `K` steps, then score the result once.
    pub fn run_unfiltered_then_check(
        &self,
        spec: &ScenarioSpec,
        gamma: f64,
        cost_model: Option<&CostModel>,
    ) -> Result<FilterOutcome, FilterError> {
        self.check_dims(spec.latent_dim)?;
        let mut run = SamplerRun::new(spec)?;
        let mut clock = Clock::new(cost_model);
        let t_start = clock.now();
        while !run.is_done() {
            let v = run.velocity()?;
            clock.charge_step();
            run.advance(&v)?;
        }
        let t_generation_end = clock.now();
        let report = self.score_latent(&run.state().z)?;
        clock.charge_scoring();
        let t_score_ready = clock.now();
        let verdict = if report.p_max > gamma {
            Verdict::Reject
        } else {
            Verdict::Accept
        };
        let check = CheckRecord {
            step: spec.steps,
            t: run.state().t,
            p: report.p_max,
            argmax_id: report.argmax_id,
        };
        Ok(FilterOutcome {
            decision: Decision {
                verdict,
                p: check.p,
                step_decided: check.step,
                argmax_id: check.argmax_id.clone(),
                checks: vec![check],
            },
            ledger: LatencyLedger {
                t_start,
                t_score_ready,
                t_generation_end,
                steps_executed: spec.steps,
                steps_saved: 0,
            },
            final_latent: Some(run.into_state().z),
        })
    }

    /// Runs every scenario in parallel; output order follows input order.
    pub fn run_suite(
        &self,
        scenarios: &[ScenarioSpec],
        cfg: &FilterConfig,
    ) -> Result<Vec<RunRecord>, FilterError> {
        scenarios
            .par_iter()
            .map(|s| self.run_filtered(s, cfg).map(|o| RunRecord::new(s, &o)))
            .collect()
    }
}

/// Free-function form of [`Pipeline::run_filtered`].
pub fn run_filtered<S: Scorer + ?Sized>(
    spec: &ScenarioSpec,
    scorer: &S,
    encoder: &Encoder,
    decoder: &DecoderSpec,
    cfg: &FilterConfig,
) -> Result<FilterOutcome, FilterError> {
    Pipeline::new(scorer, encoder, decoder).run_filtered(spec, cfg)
}

/// Free-function form of [`Pipeline::run_unfiltered_then_check`].
pub fn run_unfiltered_then_check<S: Scorer + ?Sized>(
    spec: &ScenarioSpec,
    scorer: &S,
    encoder: &Encoder,
    decoder: &DecoderSpec,
    gamma: f64,
    cost_model: Option<&CostModel>,
) -> Result<FilterOutcome, FilterError> {
    Pipeline::new(scorer, encoder, decoder).run_unfiltered_then_check(spec, gamma, cost_model)
}

/// FNV-1a 64 of the little-endian bytes of a latent, as 16 hex digits.
pub fn latent_hash(latent: &[f64]) -> String {
    let bytes: Vec<u8> = latent.iter().flat_map(|v| v.to_le_bytes()).collect();
    format!("{:016x}", crate::fnv1a64(&bytes))
}

/// One exported run, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub scenario_id: String,
    pub label: u8,
    pub p: f64,
    pub verdict: Verdict,
    pub step_decided: usize,
    pub argmax_id: String,
    pub steps_executed: usize,
    pub steps_saved: usize,
    pub score_latency_ms: f64,
    pub end_to_end_latency_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_latent_hash: Option<String>,
    #[serde(default)]
    pub checks: Vec<CheckRecord>,
}

impl RunRecord {
    pub fn new(spec: &ScenarioSpec, outcome: &FilterOutcome) -> Self {
        let d = &outcome.decision;
        Self {
            scenario_id: spec.id.clone(),
            label: spec.label,
            p: d.p,
            verdict: d.verdict,
            step_decided: d.step_decided,
            argmax_id: d.argmax_id.clone(),
            steps_executed: outcome.ledger.steps_executed,
            steps_saved: outcome.ledger.steps_saved,
            score_latency_ms: outcome.ledger.score_latency().as_secs_f64() * 1e3,
            end_to_end_latency_ms: outcome.ledger.end_to_end().as_secs_f64() * 1e3,
            final_latent_hash: outcome.final_latent.as_deref().map(latent_hash),
            checks: d.checks.clone(),
        }
    }
}

pub fn write_records<W: Write>(mut out: W, records: &[RunRecord]) -> Result<(), FilterError> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<RunRecord>, FilterError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| FilterError::Parse {
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}
