//! Command-line flags and the matching TOML config sections.
//!
//! Every tunable is an `Option` so that a flag, when given, can take
//! precedence over the config file; defaults are applied afterwards.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "latent-guard",
    version,
    about = "Denoising-stage reference-similarity filter"
)]
pub struct Cli {
    /// TOML config file; flags take precedence over its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = "LATENT_GUARD_OUT_DIR")]
    pub out_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or re-validate a reference index file.
    BuildIndex(BuildIndexArgs),
    /// Draw a reference corpus and labeled scenarios.
    MakeSuite(SuiteArgs),
    /// Run the filter over a scenario suite and export run records.
    Run(RunArgs),
    /// Compute ROC/PR summaries and a threshold sweep from run records.
    Eval(EvalArgs),
    /// Sweep reference-set size and record AUC and latency.
    BenchScalability(ScalabilityArgs),
    /// Per-step ROC/PR-AUC with and without the pseudo-clean estimate.
    Ablation(AblationArgs),
}

macro_rules! merge_fields {
    ($t:ident { $($f:ident),* $(,)? }) => {
        impl $t {
            /// Field-wise: values already set win over `file`.
            pub fn merge(self, file: Self) -> Self {
                Self { $($f: self.$f.or(file.$f),)* }
            }
        }
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderChoice {
    Identity,
    Downsample,
    RandomProjection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecoderChoice {
    Identity,
    /// Seeded square Gaussian matrix.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleChoice {
    Exact,
    Perturbed,
    Distractor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    EarlyStop,
    ScoreOnly,
    /// Generate to completion, then score the final output once.
    Unfiltered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryChoice {
    XPred,
    RawLatent,
}

/// Decoder and encoder shared by `make-suite`, `run` and `ablation`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub encoder: Option<EncoderChoice>,
    /// Embedding dimension (default: 256 for random-projection, else the input dimension).
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub encoder_seed: Option<u64>,
    #[arg(long, value_enum)]
    pub decoder: Option<DecoderChoice>,
    #[arg(long)]
    pub decoder_seed: Option<u64>,
}
merge_fields!(ModelArgs {
    encoder,
    embed_dim,
    encoder_seed,
    decoder,
    decoder_seed
});

#[derive(Debug, Clone, Args)]
pub struct BuildIndexArgs {
    /// An index file to re-validate, or a directory of raw-vector text files.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value = "index.lgi")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteArgs {
    #[arg(long)]
    pub corpus_size: Option<usize>,
    /// Scenario count (default: corpus size).
    #[arg(long)]
    pub scenarios: Option<usize>,
    #[arg(long)]
    pub matched_fraction: Option<f64>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, value_enum)]
    pub oracle: Option<OracleChoice>,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub decay: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scenario file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for the encoded reference embeddings.
    #[arg(long)]
    pub refs_out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub model: ModelArgs,
}

impl SuiteArgs {
    pub fn merge(self, file: Self) -> Self {
        Self {
            corpus_size: self.corpus_size.or(file.corpus_size),
            scenarios: self.scenarios.or(file.scenarios),
            matched_fraction: self.matched_fraction.or(file.matched_fraction),
            latent_dim: self.latent_dim.or(file.latent_dim),
            steps: self.steps.or(file.steps),
            oracle: self.oracle.or(file.oracle),
            noise_scale: self.noise_scale.or(file.noise_scale),
            decay: self.decay.or(file.decay),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            refs_out: self.refs_out.or(file.refs_out),
            model: self.model,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub scenario_suite: Option<PathBuf>,
    /// Rejection threshold on cosine similarity; required.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// 1-based sampler steps at which to score, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub check_steps: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeChoice>,
    #[arg(long, value_enum)]
    pub query: Option<QueryChoice>,
    /// Simulated cost of one forward pass.
    #[arg(long)]
    pub per_step_ms: Option<f64>,
    /// Simulated cost of one decode + encode + score.
    #[arg(long)]
    pub scoring_overhead_ms: Option<f64>,
    /// Measure latencies with the wall clock instead of the cost model.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub wall_clock: Option<bool>,
    /// Run-record file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub model: ModelArgs,
}

impl RunArgs {
    pub fn merge(self, file: Self) -> Self {
        Self {
            index: self.index.or(file.index),
            scenario_suite: self.scenario_suite.or(file.scenario_suite),
            gamma: self.gamma.or(file.gamma),
            check_steps: self.check_steps.or(file.check_steps),
            mode: self.mode.or(file.mode),
            query: self.query.or(file.query),
            per_step_ms: self.per_step_ms.or(file.per_step_ms),
            scoring_overhead_ms: self.scoring_overhead_ms.or(file.scoring_overhead_ms),
            wall_clock: self.wall_clock.or(file.wall_clock),
            out: self.out.or(file.out),
            model: self.model,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Output directory for the summary and tables.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Score each record by its check at this step instead of its final p.
    #[arg(long)]
    pub step: Option<usize>,
    /// Threshold grid for the accuracy sweep, comma separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub thresholds: Option<Vec<f64>>,
}
merge_fields!(EvalArgs {
    records,
    out,
    step,
    thresholds
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalabilityArgs {
    /// `start:end:step` or a comma-separated list.
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub check_step: Option<usize>,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub calls: Option<usize>,
    #[arg(long)]
    pub naive_calls: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
merge_fields!(ScalabilityArgs {
    sizes,
    latent_dim,
    embed_dim,
    steps,
    check_step,
    noise_scale,
    gamma,
    calls,
    naive_calls,
    seed,
    out,
});

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationArgs {
    #[arg(long)]
    pub corpus_size: Option<usize>,
    #[arg(long)]
    pub scenarios: Option<usize>,
    #[arg(long)]
    pub latent_dim: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub model: ModelArgs,
}

impl AblationArgs {
    pub fn merge(self, file: Self) -> Self {
        Self {
            corpus_size: self.corpus_size.or(file.corpus_size),
            scenarios: self.scenarios.or(file.scenarios),
            latent_dim: self.latent_dim.or(file.latent_dim),
            steps: self.steps.or(file.steps),
            noise_scale: self.noise_scale.or(file.noise_scale),
            seed: self.seed.or(file.seed),
            out: self.out.or(file.out),
            model: self.model,
        }
    }
}

/// Contents of the `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub out_dir: Option<PathBuf>,
    pub model: ModelArgs,
    pub suite: SuiteArgs,
    pub run: RunArgs,
    pub eval: EvalArgs,
    pub bench_scalability: ScalabilityArgs,
    pub ablation: AblationArgs,
}

/// `10:140:10` (inclusive) or `10,20,40`.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>, String> {
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| format!("`{s}` is not a non-negative integer"))
    };
    let sizes = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, end, step] = parts.as_slice() else {
            return Err(format!("expected start:end:step, got `{text}`"));
        };
        let (start, end, step) = (num(start)?, num(end)?, num(step)?);
        if step == 0 || start > end {
            return Err(format!("empty or unbounded range `{text}`"));
        }
        (start..=end).step_by(step).collect()
    } else {
        text.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(format!("sizes must be positive, got `{text}`"));
    }
    Ok(sizes)
}
