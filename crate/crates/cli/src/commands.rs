use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::time::Duration;

use latent_guard::eval::{
    run_ablation, run_scalability, samples_at_step, samples_from_records, summarize,
    threshold_sweep, write_ablation_table, write_curve_table, write_scalability_table,
    write_sweep_table, ScalabilityConfig,
};
use latent_guard::filter::{read_records, write_records};
use latent_guard::sampler::{read_scenarios, write_scenarios, TURBO_STEPS};
use latent_guard::{
    decode, load_index, save_index, CostModel, DecoderSpec, Embedding, Encoder, EncoderSpec,
    FilterConfig, FilterMode, OracleKind, Pipeline, QueryMode, ReferenceIndex, RunRecord,
    ScenarioSpec, SuiteConfig, Verdict,
};
use serde::Serialize;

use crate::args::{
    parse_sizes, AblationArgs, BuildIndexArgs, ConfigFile, DecoderChoice, EncoderChoice, EvalArgs,
    ModeChoice, ModelArgs, OracleChoice, QueryChoice, RunArgs, ScalabilityArgs, SuiteArgs,
};
use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::vectors::{read_vector_dir, write_vector};

pub struct Context {
    pub config_path: Option<PathBuf>,
    pub config: ConfigFile,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn load(
        config_path: Option<PathBuf>,
        out_dir_flag: Option<PathBuf>,
    ) -> Result<Self, CliError> {
        let config = match &config_path {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                toml::from_str(&text).map_err(|e| CliError::from(e).context(path.display()))?
            }
            None => ConfigFile::default(),
        };
        let out_dir = out_dir_flag
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Self {
            config_path,
            config,
            out_dir,
        })
    }

    /// Resolves an output path against the output directory and creates its parent.
    fn output(&self, path: &Path) -> Result<PathBuf, CliError> {
        let path = if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        };
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        Ok(path)
    }

    fn manifest(&self, command: &str, settings: impl Serialize) -> RunManifest {
        RunManifest::new(
            command,
            self.config_path.as_deref(),
            &self.out_dir,
            settings,
        )
    }
}

#[derive(Debug, Clone, Serialize)]
struct ResolvedModel {
    encoder: EncoderChoice,
    embed_dim: usize,
    encoder_seed: u64,
    decoder: DecoderChoice,
    decoder_seed: u64,
}

fn build_models(
    model: &ModelArgs,
    latent_dim: usize,
) -> Result<(Encoder, DecoderSpec, ResolvedModel), CliError> {
    let decoder_choice = model.decoder.unwrap_or(DecoderChoice::Identity);
    let decoder_seed = model.decoder_seed.unwrap_or(0);
    let decoder = match decoder_choice {
        DecoderChoice::Identity => DecoderSpec::Identity,
        DecoderChoice::Random => DecoderSpec::random(latent_dim, latent_dim, decoder_seed)?,
    };
    let input_dim = decoder.output_dim(latent_dim)?;
    let encoder_choice = model.encoder.unwrap_or(EncoderChoice::RandomProjection);
    let encoder_seed = model.encoder_seed.unwrap_or(0);
    let embed_dim = model.embed_dim.unwrap_or(match encoder_choice {
        EncoderChoice::RandomProjection => 256,
        _ => input_dim,
    });
    let spec = match encoder_choice {
        EncoderChoice::Identity => EncoderSpec::identity(embed_dim),
        EncoderChoice::Downsample => EncoderSpec::downsample(embed_dim),
        EncoderChoice::RandomProjection => EncoderSpec::random_projection(embed_dim, encoder_seed),
    };
    let encoder = Encoder::new(spec, input_dim)?;
    let resolved = ResolvedModel {
        encoder: encoder_choice,
        embed_dim,
        encoder_seed,
        decoder: decoder_choice,
        decoder_seed,
    };
    Ok((encoder, decoder, resolved))
}

fn encode_corpus(
    corpus: &[latent_guard::sampler::ReferenceLatent],
    encoder: &Encoder,
    decoder: &DecoderSpec,
) -> Result<Vec<Embedding>, CliError> {
    corpus
        .iter()
        .map(|r| Ok(encoder.encode(r.id.as_str(), &decode(&r.latent, decoder)?)?))
        .collect()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn required<T>(value: Option<T>, name: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::input(format!("--{name} is required (flag or config file)")))
}

pub fn build_index(ctx: &Context, args: BuildIndexArgs) -> Result<(), CliError> {
    let src = &args.embeddings;
    let index = if src.is_dir() {
        ReferenceIndex::build(&read_vector_dir(src)?, None)?
    } else if src.is_file() {
        load_index(src).map_err(|e| CliError::from(e).context(src.display()))?
    } else {
        return Err(CliError::input(format!(
            "{}: no such file or directory",
            src.display()
        )));
    };
    let out = ctx.output(&args.out)?;
    save_index(&index, &out)?;
    let bytes = fs::read(&out)?;
    let checksum = u64::from_le_bytes(bytes[bytes.len() - 8..].try_into().expect("8 bytes"));
    println!(
        "n={} d={} checksum={checksum:016x}",
        index.len(),
        index.dim()
    );
    ctx.manifest(
        "build-index",
        serde_json::json!({ "embeddings": src, "out": out }),
    )
    .input(src)?
    .output(&out)
    .write_for(&out)?;
    Ok(())
}

#[derive(Serialize)]
struct ResolvedSuite {
    corpus_size: usize,
    scenarios: usize,
    matched_fraction: f64,
    latent_dim: usize,
    steps: usize,
    oracle: OracleChoice,
    noise_scale: f64,
    decay: f64,
    seed: u64,
    model: ResolvedModel,
}

fn oracle_kind(choice: OracleChoice) -> OracleKind {
    match choice {
        OracleChoice::Exact => OracleKind::Exact,
        OracleChoice::Perturbed => OracleKind::Perturbed,
        OracleChoice::Distractor => OracleKind::Distractor,
    }
}

pub fn make_suite(ctx: &Context, args: SuiteArgs) -> Result<(), CliError> {
    let model = args.model.clone().merge(ctx.config.model.clone());
    let a = args.merge(ctx.config.suite.clone());
    let corpus_size = a.corpus_size.unwrap_or(10);
    let oracle = a.oracle.unwrap_or(OracleChoice::Perturbed);
    let cfg = SuiteConfig {
        corpus_size,
        scenarios: Some(a.scenarios.unwrap_or(corpus_size)),
        matched_fraction: a.matched_fraction.unwrap_or(0.5),
        latent_dim: a.latent_dim.unwrap_or(256),
        steps: a.steps.unwrap_or(TURBO_STEPS),
        oracle_kind: oracle_kind(oracle),
        noise_scale: a.noise_scale.unwrap_or(0.5),
        decay: a.decay.unwrap_or(1.0),
        seed: a.seed.unwrap_or(0),
        ..SuiteConfig::default()
    };
    let (encoder, decoder, resolved_model) = build_models(&model, cfg.latent_dim)?;
    let suite = cfg.build()?;

    let out = ctx.output(&a.out.unwrap_or_else(|| "scenarios.jsonl".into()))?;
    write_scenarios(create(&out)?, &suite.scenarios)?;
    let refs = ctx.output(&a.refs_out.unwrap_or_else(|| "refs".into()))?;
    fs::create_dir_all(&refs)?;
    for emb in encode_corpus(&suite.corpus, &encoder, &decoder)? {
        write_vector(&refs, &emb)?;
    }

    let matched = suite.scenarios.iter().filter(|s| s.label == 1).count();
    println!(
        "scenarios={} matched={} references={} d={}",
        suite.scenarios.len(),
        matched,
        suite.corpus.len(),
        encoder.out_dim()
    );
    let settings = ResolvedSuite {
        corpus_size,
        scenarios: suite.scenarios.len(),
        matched_fraction: cfg.matched_fraction,
        latent_dim: cfg.latent_dim,
        steps: cfg.steps,
        oracle,
        noise_scale: cfg.noise_scale,
        decay: cfg.decay,
        seed: cfg.seed,
        model: resolved_model.clone(),
    };
    ctx.manifest("make-suite", settings)
        .seed("suite", cfg.seed)
        .seed("encoder", resolved_model.encoder_seed)
        .seed("decoder", resolved_model.decoder_seed)
        .output(&out)
        .output(&refs)
        .write_for(&out)?;
    Ok(())
}

#[derive(Serialize)]
struct ResolvedRun {
    index: PathBuf,
    scenario_suite: PathBuf,
    gamma: f64,
    check_steps: Vec<usize>,
    mode: ModeChoice,
    query: QueryChoice,
    clock: String,
    per_step_ms: Option<f64>,
    scoring_overhead_ms: Option<f64>,
    model: ResolvedModel,
}

fn millis(value: f64, name: &str) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(value / 1e3).map_err(|_| {
        CliError::input(format!(
            "--{name} must be a finite, non-negative number of milliseconds"
        ))
    })
}

/// Verdicts must follow the threshold rule and the step ledger must add up.
fn audit(records: &[RunRecord], gamma: f64, steps: usize) -> Result<(), CliError> {
    for r in records {
        let above = r.checks.iter().any(|c| c.p > gamma);
        if (r.verdict == Verdict::Reject) != above {
            return Err(CliError::internal(format!(
                "{}: verdict {:?} contradicts its check scores at gamma {gamma}",
                r.scenario_id, r.verdict
            )));
        }
        if r.steps_executed + r.steps_saved != steps {
            return Err(CliError::internal(format!(
                "{}: {} executed + {} saved != {steps} steps",
                r.scenario_id, r.steps_executed, r.steps_saved
            )));
        }
    }
    Ok(())
}

pub fn run(ctx: &Context, args: RunArgs) -> Result<(), CliError> {
    let model = args.model.clone().merge(ctx.config.model.clone());
    let a = args.merge(ctx.config.run.clone());
    let index_path = required(a.index, "index")?;
    let suite_path = required(a.scenario_suite, "scenario-suite")?;
    let gamma = required(a.gamma, "gamma")?;
    let mode = a.mode.unwrap_or(ModeChoice::EarlyStop);
    let query = a.query.unwrap_or(QueryChoice::XPred);
    let check_steps = a.check_steps.unwrap_or_else(|| vec![1]);
    let wall_clock = a.wall_clock.unwrap_or(false);

    let index =
        load_index(&index_path).map_err(|e| CliError::from(e).context(index_path.display()))?;
    let scenarios: Vec<ScenarioSpec> = read_scenarios(open(&suite_path)?)
        .map_err(|e| CliError::from(e).context(suite_path.display()))?;
    let first = scenarios
        .first()
        .ok_or_else(|| CliError::input(format!("{}: no scenarios", suite_path.display())))?;
    let steps = first.steps;
    let (encoder, decoder, resolved_model) = build_models(&model, first.latent_dim)?;
    if index.dim() != encoder.out_dim() {
        return Err(CliError::input(format!(
            "index has dimension {} but the encoder produces {}",
            index.dim(),
            encoder.out_dim()
        )));
    }

    let (per_step_ms, overhead_ms) = if wall_clock {
        (None, None)
    } else {
        (
            Some(a.per_step_ms.unwrap_or(10.0)),
            Some(a.scoring_overhead_ms.unwrap_or(2.0)),
        )
    };
    let cost = match (per_step_ms, overhead_ms) {
        (Some(p), Some(o)) => Some(CostModel {
            per_step: millis(p, "per-step-ms")?,
            scoring_overhead: millis(o, "scoring-overhead-ms")?,
        }),
        _ => None,
    };
    let filter_mode = match mode {
        ModeChoice::ScoreOnly => FilterMode::ScoreOnly,
        _ => FilterMode::EarlyStop,
    };
    let query_mode = match query {
        QueryChoice::XPred => QueryMode::XPred,
        QueryChoice::RawLatent => QueryMode::RawLatent,
    };
    let mut cfg =
        FilterConfig::new(gamma, check_steps.clone(), filter_mode, steps)?.with_query(query_mode);
    if let Some(cost) = cost {
        cfg = cfg.with_cost_model(cost);
    }

    let pipeline = Pipeline::new(&index, &encoder, &decoder);
    let records = if mode == ModeChoice::Unfiltered {
        scenarios
            .iter()
            .map(|s| {
                pipeline
                    .run_unfiltered_then_check(s, gamma, cost.as_ref())
                    .map(|o| RunRecord::new(s, &o))
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        pipeline.run_suite(&scenarios, &cfg)?
    };
    audit(&records, gamma, steps)?;

    let out = ctx.output(&a.out.unwrap_or_else(|| "records.jsonl".into()))?;
    write_records(create(&out)?, &records)?;
    let rejected = records
        .iter()
        .filter(|r| r.verdict == Verdict::Reject)
        .count();
    println!(
        "records={} rejected={} accepted={}",
        records.len(),
        rejected,
        records.len() - rejected
    );
    let settings = ResolvedRun {
        index: index_path.clone(),
        scenario_suite: suite_path.clone(),
        gamma,
        check_steps: cfg.check_steps().to_vec(),
        mode,
        query,
        clock: if wall_clock { "wall" } else { "cost-model" }.into(),
        per_step_ms,
        scoring_overhead_ms: overhead_ms,
        model: resolved_model.clone(),
    };
    ctx.manifest("run", settings)
        .seed("encoder", resolved_model.encoder_seed)
        .seed("decoder", resolved_model.decoder_seed)
        .input(&index_path)?
        .input(&suite_path)?
        .output(&out)
        .write_for(&out)?;
    Ok(())
}

#[derive(Serialize)]
struct SweepEntry {
    gamma: f64,
    accuracy: f64,
}

#[derive(Serialize)]
struct EvalSummary {
    records: usize,
    step: Option<usize>,
    roc_auc: f64,
    pr_auc: f64,
    positives: usize,
    negatives: usize,
    best_gamma: f64,
    best_accuracy: f64,
    threshold_sweep: Vec<SweepEntry>,
}

pub fn eval(ctx: &Context, args: EvalArgs) -> Result<(), CliError> {
    let a = args.merge(ctx.config.eval.clone());
    let records_path = required(a.records, "records")?;
    let records = read_records(open(&records_path)?)
        .map_err(|e| CliError::from(e).context(records_path.display()))?;
    let samples = match a.step {
        Some(step) => {
            let samples = samples_at_step(&records, step);
            if samples.len() != records.len() {
                return Err(CliError::input(format!(
                    "{} of {} records have no check at step {step}",
                    records.len() - samples.len(),
                    records.len()
                )));
            }
            samples
        }
        None => samples_from_records(&records),
    };
    let grid = a
        .thresholds
        .unwrap_or_else(latent_guard::eval::default_threshold_grid);
    let summary = summarize(&samples)?;
    let sweep = threshold_sweep(&samples, &grid)?;
    let (best_gamma, best_accuracy) =
        sweep
            .iter()
            .copied()
            .fold((grid[0], f64::NEG_INFINITY), |best, p| {
                if p.1 > best.1 {
                    p
                } else {
                    best
                }
            });

    let dir = ctx.output(&a.out.unwrap_or_else(|| "eval".into()))?;
    fs::create_dir_all(&dir)?;
    let result = EvalSummary {
        records: records.len(),
        step: a.step,
        roc_auc: summary.roc_auc,
        pr_auc: summary.pr_auc,
        positives: summary.positives,
        negatives: summary.negatives,
        best_gamma,
        best_accuracy,
        threshold_sweep: sweep
            .iter()
            .map(|&(gamma, accuracy)| SweepEntry { gamma, accuracy })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&result)?;
    text.push('\n');
    fs::write(dir.join("summary.json"), text)?;
    write_curve_table(create(&dir.join("curve.csv"))?, &summary.curve_points)?;
    write_sweep_table(create(&dir.join("threshold_sweep.csv"))?, &sweep)?;

    println!(
        "roc_auc={:.6} pr_auc={:.6} positives={} negatives={} best_gamma={best_gamma} accuracy={best_accuracy:.4}",
        summary.roc_auc, summary.pr_auc, summary.positives, summary.negatives
    );
    ctx.manifest(
        "eval",
        serde_json::json!({ "records": records_path, "step": a.step, "thresholds": grid }),
    )
    .input(&records_path)?
    .output(&dir)
    .write_for(&dir)?;
    Ok(())
}

#[derive(Serialize)]
struct ResolvedScalability {
    sizes: Vec<usize>,
    latent_dim: usize,
    embed_dim: usize,
    steps: usize,
    check_step: usize,
    noise_scale: f64,
    gamma: f64,
    calls: usize,
    naive_calls: usize,
    seed: u64,
}

pub fn bench_scalability(ctx: &Context, args: ScalabilityArgs) -> Result<(), CliError> {
    let a = args.merge(ctx.config.bench_scalability.clone());
    let defaults = ScalabilityConfig::default();
    let sizes = match &a.sizes {
        Some(text) => parse_sizes(text).map_err(CliError::input)?,
        None => defaults.sizes.clone(),
    };
    let cfg = ScalabilityConfig {
        sizes,
        latent_dim: a.latent_dim.unwrap_or(defaults.latent_dim),
        embed_dim: a.embed_dim.unwrap_or(defaults.embed_dim),
        steps: a.steps.unwrap_or(defaults.steps),
        check_step: a.check_step.unwrap_or(defaults.check_step),
        noise_scale: a.noise_scale.unwrap_or(defaults.noise_scale),
        gamma: a.gamma.unwrap_or(defaults.gamma),
        latency_calls: a.calls.unwrap_or(defaults.latency_calls),
        naive_calls: a.naive_calls.unwrap_or(defaults.naive_calls),
        seed: a.seed.unwrap_or(defaults.seed),
    };
    let records = run_scalability(&cfg)?;
    let out = ctx.output(&a.out.unwrap_or_else(|| "scalability.csv".into()))?;
    write_scalability_table(create(&out)?, &records)?;
    println!("n_refs  roc_auc  pr_auc  score_ms  end_to_end_ms  naive_score_ms");
    for r in &records {
        println!(
            "{:>6}  {:.4}   {:.4}  {:>8.4}  {:>13.4}  {:>14.4}",
            r.n_refs,
            r.roc_auc,
            r.pr_auc,
            r.median_score_latency.as_secs_f64() * 1e3,
            r.median_end_to_end_latency.as_secs_f64() * 1e3,
            r.naive_median_score_latency.as_secs_f64() * 1e3,
        );
    }
    let settings = ResolvedScalability {
        sizes: cfg.sizes.clone(),
        latent_dim: cfg.latent_dim,
        embed_dim: cfg.embed_dim,
        steps: cfg.steps,
        check_step: cfg.check_step,
        noise_scale: cfg.noise_scale,
        gamma: cfg.gamma,
        calls: cfg.latency_calls,
        naive_calls: cfg.naive_calls,
        seed: cfg.seed,
    };
    ctx.manifest("bench-scalability", settings)
        .seed("suite", cfg.seed)
        .output(&out)
        .write_for(&out)?;
    Ok(())
}

pub fn ablation(ctx: &Context, args: AblationArgs) -> Result<(), CliError> {
    let model = args.model.clone().merge(ctx.config.model.clone());
    let a = args.merge(ctx.config.ablation.clone());
    let corpus_size = a.corpus_size.unwrap_or(100);
    let cfg = SuiteConfig {
        corpus_size,
        scenarios: Some(a.scenarios.unwrap_or(2 * corpus_size)),
        latent_dim: a.latent_dim.unwrap_or(256),
        steps: a.steps.unwrap_or(TURBO_STEPS),
        oracle_kind: OracleKind::Perturbed,
        noise_scale: a.noise_scale.unwrap_or(0.5),
        seed: a.seed.unwrap_or(0),
        ..SuiteConfig::default()
    };
    let (encoder, decoder, resolved_model) = build_models(&model, cfg.latent_dim)?;
    let suite = cfg.build()?;
    let index = ReferenceIndex::build(
        &encode_corpus(&suite.corpus, &encoder, &decoder)?,
        Some(encoder.spec().fingerprint()),
    )?;
    let pipeline = Pipeline::new(&index, &encoder, &decoder);
    let steps: Vec<usize> = (1..=cfg.steps).collect();
    let points = run_ablation(
        &pipeline,
        &suite.scenarios,
        &steps,
        &[QueryMode::XPred, QueryMode::RawLatent],
    )?;
    let out = ctx.output(&a.out.unwrap_or_else(|| "ablation.csv".into()))?;
    write_ablation_table(create(&out)?, &points)?;
    println!("step  x_pred_roc  raw_roc  x_pred_pr  raw_pr");
    for pair in points.chunks(2) {
        if let [x, r] = pair {
            println!(
                "{:>4}  {:.4}      {:.4}   {:.4}     {:.4}",
                x.step, x.roc_auc, r.roc_auc, x.pr_auc, r.pr_auc
            );
        }
    }
    ctx.manifest(
        "ablation",
        serde_json::json!({
            "corpus_size": corpus_size,
            "scenarios": suite.scenarios.len(),
            "latent_dim": cfg.latent_dim,
            "steps": cfg.steps,
            "noise_scale": cfg.noise_scale,
            "seed": cfg.seed,
            "model": resolved_model,
        }),
    )
    .seed("suite", cfg.seed)
    .seed("encoder", resolved_model.encoder_seed)
    .seed("decoder", resolved_model.decoder_seed)
    .output(&out)
    .write_for(&out)?;
    Ok(())
}
