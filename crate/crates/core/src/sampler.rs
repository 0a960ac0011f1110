//! Deterministic Euler ODE sampler with synthetic velocity oracles.
//!
//! The oracles stand in for a trained velocity network: each is given the
//! hidden clean latent (`target`) and answers `v(z_t, t)` such that the ODE
//! flows from `z_0 = eps` towards the target by `t = 1`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;
use crate::schedule::{LatentState, Prediction};

/// Step count of the distilled (few-step) regime.
pub const TURBO_STEPS: usize = 9;
/// Step count of the full-length regime.
pub const FULL_STEPS: usize = 50;

const EULER_TIME_SLACK: f64 = 1e-9;
const DEFAULT_REJECTION_BUDGET: usize = 1000;
/// Unrelated targets must stay below this cosine to every corpus latent.
pub const UNRELATED_MAX_COSINE: f64 = 0.5;

// Stream tags for sub-generators derived from one seed.
const STREAM_DECOY: u64 = 0xDEC0;
const STREAM_CORPUS: u64 = 1;
const STREAM_UNRELATED: u64 = 2;
const STREAM_SCENARIO: u64 = 3;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("step size must be positive, got {0}")]
    NonPositiveStep(f64),
    #[error("step from t = {t} by {dt} overshoots t = 1")]
    Overshoot { t: f64, dt: f64 },
    #[error("non-finite velocity")]
    NonFiniteVelocity,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid scenario `{id}`: {reason}")]
    InvalidScenario { id: String, reason: String },
    #[error("invalid suite configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "could not draw an unrelated target within {attempts} attempts (latent_dim {latent_dim})"
    )]
    RejectionBudgetExceeded { attempts: usize, latent_dim: usize },
    #[error("line {line}: malformed scenario")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    /// Returns the true velocity towards the target.
    Exact,
    /// True velocity plus zero-mean Gaussian noise with standard deviation
    /// `noise_scale * (1 - t)^decay`.
    Perturbed,
    /// Heads first towards a seeded decoy latent and commits to the target
    /// only late: the implied clean sample at time `t` is
    /// `(1 - t) * decoy + t * target`. Noise is added as for `Perturbed`.
    Distractor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityOracle {
    pub kind: OracleKind,
    pub target: Vec<f64>,
    #[serde(default)]
    pub noise_scale: f64,
    #[serde(default = "default_decay")]
    pub decay: f64,
    pub seed: u64,
}

fn default_decay() -> f64 {
    1.0
}

impl VelocityOracle {
    pub fn exact(target: Vec<f64>, seed: u64) -> Self {
        Self {
            kind: OracleKind::Exact,
            target,
            noise_scale: 0.0,
            decay: 1.0,
            seed,
        }
    }

    pub fn perturbed(target: Vec<f64>, noise_scale: f64, seed: u64) -> Self {
        Self {
            kind: OracleKind::Perturbed,
            target,
            noise_scale,
            decay: 1.0,
            seed,
        }
    }

    fn validate(&self) -> Result<(), String> {
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return Err(format!(
                "noise_scale must be finite and >= 0, got {}",
                self.noise_scale
            ));
        }
        if !(0.0..=1.0).contains(&self.decay) {
            return Err(format!("decay must lie in [0, 1], got {}", self.decay));
        }
        if !self.target.iter().all(|v| v.is_finite()) {
            return Err("target is not finite".into());
        }
        Ok(())
    }

    /// Clean sample the oracle is steering towards at time `t`.
    fn implied_clean(&self, t: f64) -> Vec<f64> {
        match self.kind {
            OracleKind::Exact | OracleKind::Perturbed => self.target.clone(),
            OracleKind::Distractor => {
                let decoy =
                    SplitMix64::derive(self.seed, STREAM_DECOY).normal_vec(self.target.len());
                decoy
                    .iter()
                    .zip(&self.target)
                    .map(|(d, x)| (1.0 - t) * d + t * x)
                    .collect()
            }
        }
    }

    /// `v(z_t, t) = clean - eps_implied`, with `eps_implied = (z_t - t * clean) / (1 - t)`,
    /// plus the configured perturbation. At `t = 1` the path has ended and
    /// the velocity is zero.
    ///
    /// A pure function of `(state, seed)`: the perturbation stream is keyed by
    /// the bits of `t`.
    pub fn velocity(&self, state: &LatentState) -> Result<Vec<f64>, SamplerError> {
        if state.z.len() != self.target.len() {
            return Err(SamplerError::DimensionMismatch {
                expected: self.target.len(),
                actual: state.z.len(),
            });
        }
        let remaining = 1.0 - state.t;
        if remaining <= 0.0 {
            return Ok(vec![0.0; state.z.len()]);
        }
        let clean = self.implied_clean(state.t);
        let mut v: Vec<f64> = clean
            .iter()
            .zip(&state.z)
            .map(|(x, z)| (x - z) / remaining)
            .collect();
        let std = match self.kind {
            OracleKind::Exact => 0.0,
            OracleKind::Perturbed | OracleKind::Distractor => {
                self.noise_scale * remaining.powf(self.decay)
            }
        };
        if std > 0.0 {
            let mut rng = SplitMix64::derive(self.seed, state.t.to_bits());
            for vi in &mut v {
                *vi += std * rng.next_normal();
            }
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(SamplerError::NonFiniteVelocity);
        }
        Ok(v)
    }

    pub fn predict(&self, state: &LatentState) -> Result<Prediction, SamplerError> {
        Ok(Prediction::velocity(self.velocity(state)?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: String,
    /// 1 when the target is drawn from the reference corpus, 0 otherwise.
    pub label: u8,
    pub steps: usize,
    pub latent_dim: usize,
    /// Seed of the initial noise `z_0`.
    pub seed: u64,
    pub oracle: VelocityOracle,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), SamplerError> {
        let invalid = |reason: String| SamplerError::InvalidScenario {
            id: self.id.clone(),
            reason,
        };
        if self.steps == 0 {
            return Err(invalid("steps must be >= 1".into()));
        }
        if self.label > 1 {
            return Err(invalid(format!("label must be 0 or 1, got {}", self.label)));
        }
        if self.latent_dim == 0 {
            return Err(invalid("latent_dim must be >= 1".into()));
        }
        if self.oracle.target.len() != self.latent_dim {
            return Err(invalid(format!(
                "target has dimension {}, expected {}",
                self.oracle.target.len(),
                self.latent_dim
            )));
        }
        self.oracle.validate().map_err(invalid)
    }

    /// Uniform grid `t_i = i / K`, `i = 0..=K`.
    pub fn time_grid(&self) -> Vec<f64> {
        time_grid(self.steps)
    }
}

pub fn time_grid(steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| i as f64 / steps as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// `states[i]` sits at `step_times[i]`; `K + 1` entries.
    pub states: Vec<LatentState>,
    pub step_times: Vec<f64>,
    pub seed: u64,
}

impl Trajectory {
    pub fn final_state(&self) -> &LatentState {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }
}

/// `(z + dt * v, t + dt)`, with `t` clamped to 1.
pub fn euler_step(
    state: &LatentState,
    velocity: &[f64],
    dt: f64,
) -> Result<LatentState, SamplerError> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(SamplerError::NonPositiveStep(dt));
    }
    if state.t + dt > 1.0 + EULER_TIME_SLACK {
        return Err(SamplerError::Overshoot { t: state.t, dt });
    }
    if velocity.len() != state.z.len() {
        return Err(SamplerError::DimensionMismatch {
            expected: state.z.len(),
            actual: velocity.len(),
        });
    }
    if !velocity.iter().all(|v| v.is_finite()) {
        return Err(SamplerError::NonFiniteVelocity);
    }
    Ok(LatentState {
        z: state
            .z
            .iter()
            .zip(velocity)
            .map(|(z, v)| z + dt * v)
            .collect(),
        t: (state.t + dt).min(1.0),
    })
}

/// Step-by-step driver, so callers can observe each forward pass before the
/// state is advanced.
#[derive(Debug, Clone)]
pub struct SamplerRun<'a> {
    spec: &'a ScenarioSpec,
    grid: Vec<f64>,
    state: LatentState,
    completed: usize,
}

impl<'a> SamplerRun<'a> {
    pub fn new(spec: &'a ScenarioSpec) -> Result<Self, SamplerError> {
        spec.validate()?;
        let z0 = SplitMix64::new(spec.seed).normal_vec(spec.latent_dim);
        Ok(Self {
            spec,
            grid: spec.time_grid(),
            state: LatentState { z: z0, t: 0.0 },
            completed: 0,
        })
    }

    pub fn state(&self) -> &LatentState {
        &self.state
    }

    /// Number of Euler steps already applied.
    pub fn completed(&self) -> usize {
        self.completed
    }

    pub fn is_done(&self) -> bool {
        self.completed == self.spec.steps
    }

    /// Forward pass at the current state.
    pub fn velocity(&self) -> Result<Vec<f64>, SamplerError> {
        self.spec.oracle.velocity(&self.state)
    }

    pub fn advance(&mut self, velocity: &[f64]) -> Result<&LatentState, SamplerError> {
        let i = self.completed;
        let dt = self.grid[i + 1] - self.grid[i];
        self.state = euler_step(&self.state, velocity, dt)?;
        self.completed += 1;
        Ok(&self.state)
    }

    pub fn into_state(self) -> LatentState {
        self.state
    }
}

pub fn run_trajectory(spec: &ScenarioSpec) -> Result<Trajectory, SamplerError> {
    let mut run = SamplerRun::new(spec)?;
    let mut states = Vec::with_capacity(spec.steps + 1);
    states.push(run.state().clone());
    while !run.is_done() {
        let v = run.velocity()?;
        states.push(run.advance(&v)?.clone());
    }
    Ok(Trajectory {
        states,
        step_times: spec.time_grid(),
        seed: spec.seed,
    })
}

/// A raw reference latent (the desk-scale stand-in for a reference image).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLatent {
    pub id: String,
    pub latent: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSuite {
    pub corpus: Vec<ReferenceLatent>,
    pub scenarios: Vec<ScenarioSpec>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub corpus_size: usize,
    /// Number of scenarios; defaults to `corpus_size`.
    pub scenarios: Option<usize>,
    pub matched_fraction: f64,
    pub latent_dim: usize,
    pub steps: usize,
    pub oracle_kind: OracleKind,
    pub noise_scale: f64,
    pub decay: f64,
    pub seed: u64,
    pub rejection_budget: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            corpus_size: 10,
            scenarios: None,
            matched_fraction: 0.5,
            latent_dim: 256,
            steps: TURBO_STEPS,
            oracle_kind: OracleKind::Perturbed,
            noise_scale: 0.5,
            decay: 1.0,
            seed: 0,
            rejection_budget: DEFAULT_REJECTION_BUDGET,
        }
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Labeled scenarios over a freshly drawn reference corpus, with the default
/// oracle settings.
pub fn make_benchmark_suite(
    corpus_size: usize,
    matched_fraction: f64,
    seed: u64,
) -> Result<BenchmarkSuite, SamplerError> {
    SuiteConfig {
        corpus_size,
        matched_fraction,
        seed,
        ..SuiteConfig::default()
    }
    .build()
}

impl SuiteConfig {
    /// Matched scenarios come first and cycle through the corpus; unrelated
    /// targets are rejection-sampled to keep cosine below
    /// [`UNRELATED_MAX_COSINE`] against every corpus latent.
    pub fn build(&self) -> Result<BenchmarkSuite, SamplerError> {
        if self.corpus_size == 0 {
            return Err(SamplerError::InvalidConfig(
                "corpus_size must be >= 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.matched_fraction) {
            return Err(SamplerError::InvalidConfig(format!(
                "matched_fraction must lie in [0, 1], got {}",
                self.matched_fraction
            )));
        }
        if self.latent_dim == 0 || self.steps == 0 {
            return Err(SamplerError::InvalidConfig(
                "latent_dim and steps must be >= 1".into(),
            ));
        }
        let total = self.scenarios.unwrap_or(self.corpus_size);
        let matched = (total as f64 * self.matched_fraction).round() as usize;

        let mut corpus_rng = SplitMix64::derive(self.seed, STREAM_CORPUS);
        let corpus: Vec<ReferenceLatent> = (0..self.corpus_size)
            .map(|i| ReferenceLatent {
                id: format!("ref/{i:04}"),
                latent: corpus_rng.normal_vec(self.latent_dim),
            })
            .collect();

        let mut unrelated_rng = SplitMix64::derive(self.seed, STREAM_UNRELATED);
        let mut scenario_rng = SplitMix64::derive(self.seed, STREAM_SCENARIO);
        let mut scenarios = Vec::with_capacity(total);
        for i in 0..total {
            let (label, target) = if i < matched {
                (1, corpus[i % self.corpus_size].latent.clone())
            } else {
                (0, self.draw_unrelated(&corpus, &mut unrelated_rng)?)
            };
            let spec = ScenarioSpec {
                id: format!("s{i:05}"),
                label,
                steps: self.steps,
                latent_dim: self.latent_dim,
                seed: scenario_rng.next_u64(),
                oracle: VelocityOracle {
                    kind: self.oracle_kind,
                    target,
                    noise_scale: self.noise_scale,
                    decay: self.decay,
                    seed: scenario_rng.next_u64(),
                },
            };
            spec.validate()?;
            scenarios.push(spec);
        }
        Ok(BenchmarkSuite { corpus, scenarios })
    }

    fn draw_unrelated(
        &self,
        corpus: &[ReferenceLatent],
        rng: &mut SplitMix64,
    ) -> Result<Vec<f64>, SamplerError> {
        for _ in 0..self.rejection_budget {
            let candidate = rng.normal_vec(self.latent_dim);
            if corpus
                .iter()
                .all(|r| cosine(&candidate, &r.latent) < UNRELATED_MAX_COSINE)
            {
                return Ok(candidate);
            }
        }
        Err(SamplerError::RejectionBudgetExceeded {
            attempts: self.rejection_budget,
            latent_dim: self.latent_dim,
        })
    }
}

/// One JSON object per line.
pub fn write_scenarios<W: Write>(
    mut out: W,
    scenarios: &[ScenarioSpec],
) -> Result<(), SamplerError> {
    for s in scenarios {
        serde_json::to_writer(&mut out, s).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a line-delimited scenario file; blank lines are skipped and errors
/// carry 1-based line numbers.
pub fn read_scenarios<R: BufRead>(input: R) -> Result<Vec<ScenarioSpec>, SamplerError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let spec: ScenarioSpec =
            serde_json::from_str(&line).map_err(|source| SamplerError::Parse {
                line: i + 1,
                source,
            })?;
        spec.validate()?;
        out.push(spec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::{x_pred, Schedule};

    fn spec(kind: OracleKind, noise: f64, steps: usize, seed: u64) -> ScenarioSpec {
        let target = SplitMix64::new(seed ^ 0xABCD).normal_vec(64);
        ScenarioSpec {
            id: "t".into(),
            label: 1,
            steps,
            latent_dim: 64,
            seed,
            oracle: VelocityOracle {
                kind,
                target,
                noise_scale: noise,
                decay: 1.0,
                seed: seed.wrapping_add(1),
            },
        }
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn euler_step_examples() {
        let s = LatentState {
            z: vec![0.0, 0.0],
            t: 0.0,
        };
        let n = euler_step(&s, &[1.0, 1.0], 1.0).unwrap();
        assert_eq!(n.z, vec![1.0, 1.0]);
        assert_eq!(n.t, 1.0);

        let s = LatentState {
            z: vec![0.3, -0.2],
            t: 0.4,
        };
        assert_eq!(euler_step(&s, &[0.0, 0.0], 0.1).unwrap().z, s.z);

        let s = LatentState {
            z: vec![1.0],
            t: 0.0,
        };
        assert_eq!(euler_step(&s, &[2.0], 0.25).unwrap().z, vec![1.5]);
    }

    #[test]
    fn euler_step_errors() {
        let s = LatentState {
            z: vec![1.0],
            t: 0.5,
        };
        assert!(matches!(
            euler_step(&s, &[f64::NAN], 0.1),
            Err(SamplerError::NonFiniteVelocity)
        ));
        assert!(matches!(
            euler_step(&s, &[1.0], 0.0),
            Err(SamplerError::NonPositiveStep(_))
        ));
        assert!(matches!(
            euler_step(&s, &[1.0], 0.6),
            Err(SamplerError::Overshoot { .. })
        ));
        let clamped = euler_step(&s, &[1.0], 0.5 + 1e-12).unwrap();
        assert_eq!(clamped.t, 1.0);
    }

    #[test]
    fn exact_oracle_reaches_target() {
        for k in [1, 2, 9, 50] {
            let s = spec(OracleKind::Exact, 0.0, k, 3);
            let traj = run_trajectory(&s).unwrap();
            assert_eq!(traj.states.len(), k + 1);
            assert_eq!(traj.final_state().t, 1.0);
            assert!(max_abs_diff(&traj.final_state().z, &s.oracle.target) <= 1e-5);
            for (state, t) in traj.states.iter().zip(&traj.step_times) {
                assert_eq!(state.t, *t);
            }
        }
    }

    #[test]
    fn exact_oracle_x_pred_is_target_at_every_step() {
        let s = spec(OracleKind::Exact, 0.0, 9, 4);
        let traj = run_trajectory(&s).unwrap();
        for state in &traj.states {
            let pred = s.oracle.predict(state).unwrap();
            let xh = x_pred(state, &pred, &Schedule::linear_flow()).unwrap();
            assert!(max_abs_diff(&xh, &s.oracle.target) <= 1e-9);
        }
    }

    #[test]
    fn zero_noise_perturbed_matches_exact_bitwise() {
        let exact = run_trajectory(&spec(OracleKind::Exact, 0.0, 9, 5)).unwrap();
        let pert = run_trajectory(&spec(OracleKind::Perturbed, 0.0, 9, 5)).unwrap();
        for (a, b) in exact.states.iter().zip(&pert.states) {
            assert!(a
                .z
                .iter()
                .zip(&b.z)
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn trajectories_are_deterministic() {
        let s = spec(OracleKind::Perturbed, 0.5, 9, 6);
        assert_eq!(run_trajectory(&s).unwrap(), run_trajectory(&s).unwrap());
        let other = spec(OracleKind::Perturbed, 0.5, 9, 7);
        assert_ne!(run_trajectory(&s).unwrap(), run_trajectory(&other).unwrap());
    }

    #[test]
    fn distractor_commits_late() {
        let s = spec(OracleKind::Distractor, 0.0, 9, 8);
        let traj = run_trajectory(&s).unwrap();
        let target = &s.oracle.target;
        let early = &traj.states[0];
        let early_x = x_pred(
            early,
            &s.oracle.predict(early).unwrap(),
            &Schedule::linear_flow(),
        )
        .unwrap();
        let late = &traj.states[8];
        let late_x = x_pred(
            late,
            &s.oracle.predict(late).unwrap(),
            &Schedule::linear_flow(),
        )
        .unwrap();
        assert!(cosine(&early_x, target) < 0.5);
        assert!(cosine(&late_x, target) > 0.95);
    }

    #[test]
    fn invalid_scenarios() {
        let mut s = spec(OracleKind::Exact, 0.0, 9, 1);
        s.steps = 0;
        assert!(s.validate().is_err());
        let mut s = spec(OracleKind::Exact, 0.0, 9, 1);
        s.label = 2;
        assert!(s.validate().is_err());
        let mut s = spec(OracleKind::Perturbed, -1.0, 9, 1);
        assert!(s.validate().is_err());
        s.oracle.noise_scale = 0.1;
        s.oracle.decay = 1.5;
        assert!(s.validate().is_err());
        let mut s = spec(OracleKind::Exact, 0.0, 9, 1);
        s.latent_dim = 3;
        assert!(s.validate().is_err());
    }

    #[test]
    fn suite_counts() {
        let suite = make_benchmark_suite(10, 0.5, 1).unwrap();
        assert_eq!(suite.scenarios.len(), 10);
        assert_eq!(suite.corpus.len(), 10);
        assert_eq!(suite.scenarios.iter().filter(|s| s.label == 1).count(), 5);

        let all = make_benchmark_suite(10, 1.0, 1).unwrap();
        assert!(all.scenarios.iter().all(|s| s.label == 1));

        let big = make_benchmark_suite(140, 0.5, 2).unwrap();
        assert_eq!(big.corpus.len(), 140);
        assert_eq!(big.scenarios.iter().filter(|s| s.label == 1).count(), 70);
    }

    #[test]
    fn suite_labels_are_meaningful() {
        let suite = make_benchmark_suite(20, 0.5, 3).unwrap();
        for s in &suite.scenarios {
            let best = suite
                .corpus
                .iter()
                .map(|r| cosine(&r.latent, &s.oracle.target))
                .fold(f64::MIN, f64::max);
            if s.label == 1 {
                assert!((best - 1.0).abs() < 1e-12);
            } else {
                assert!(best < UNRELATED_MAX_COSINE);
            }
        }
    }

    #[test]
    fn suite_config_errors() {
        assert!(make_benchmark_suite(0, 0.5, 1).is_err());
        assert!(make_benchmark_suite(5, 1.5, 1).is_err());
        let tiny = SuiteConfig {
            corpus_size: 140,
            latent_dim: 2,
            matched_fraction: 0.0,
            rejection_budget: 50,
            ..SuiteConfig::default()
        };
        assert!(matches!(
            tiny.build(),
            Err(SamplerError::RejectionBudgetExceeded { .. })
        ));
    }

    #[test]
    fn scenario_file_round_trip() {
        let suite = make_benchmark_suite(4, 0.5, 9).unwrap();
        let mut buf = Vec::new();
        write_scenarios(&mut buf, &suite.scenarios).unwrap();
        assert_eq!(buf.iter().filter(|&&b| b == b'\n').count(), 4);
        let back = read_scenarios(buf.as_slice()).unwrap();
        assert_eq!(back, suite.scenarios);

        let err = read_scenarios("\n{not json}\n".as_bytes()).unwrap_err();
        assert!(matches!(err, SamplerError::Parse { line: 2, .. }));
    }
}
