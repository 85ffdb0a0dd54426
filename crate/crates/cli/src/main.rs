//! `jobbias`: synthetic cohorts, bias analysis, embeddings, oversampling,
//! training, prediction and experiments from the command line.

use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use jobbias_core::bias::{bias_profiles, BiasReport};
use jobbias_core::cohort::{parse_cohort_dir, synth_cohort, Cohort, SynthConfig};
use jobbias_core::embedding::EmbeddingModel;
use jobbias_core::experiment::{planted_cohort, run_experiment, CohortSource, ExperimentKind, ExperimentSpec};
use jobbias_core::metrics::metrics;
use jobbias_core::pipeline::{fit, oversample, predict_cohort, ModelBundle, PipelineConfig};
use jobbias_core::trainer::{assemble_sequences, NUM_ASPECTS};
use jobbias_core::{Error, Result};

#[derive(Parser)]
#[command(name = "jobbias", version, about = "Employment prediction with per-major bias analysis")]
struct Cli {
    /// Root seed; overrides every seed in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration (see README for the layout).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort as three CSV files.
    Synth,
    /// Chi-square tests of every demographic aspect within every major.
    AnalyzeBias {
        /// Directory holding demographics.csv, academics.csv, employment.csv.
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit the per-semester autoencoders and write each student's codes.
    Embed {
        #[arg(long)]
        data: PathBuf,
    },
    /// Oversample the minority class with a GAN and write the balanced set.
    Augment {
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit the whole pipeline and save the model bundle.
    Train {
        #[arg(long)]
        data: PathBuf,
    },
    /// Score a cohort with a saved model bundle.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Run a multi-seed experiment: variants, semester_ablation,
    /// dropout_sweep, lr_sweep, embed_dim_sweep or optimization_compare.
    Experiment {
        kind: ExperimentKind,
        /// Use a cohort directory instead of generating one per seed.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Number of seeds, counted up from --seed (or 0).
        #[arg(long)]
        seeds: Option<u64>,
        /// Comma-separated grid replacing the kind's default.
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
    },
}

/// Contents of `--config`. Every section is optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RunConfig {
    synth: SynthConfig,
    pipeline: PipelineConfig,
    seeds: Vec<u64>,
    test_fraction: f64,
    grid: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = ExperimentSpec::default();
        RunConfig {
            synth: planted_cohort(),
            pipeline: PipelineConfig::default(),
            seeds: spec.seeds,
            test_fraction: spec.test_fraction,
            grid: None,
        }
    }
}

impl RunConfig {
    fn load(path: Option<&Path>, seed: Option<u64>) -> Result<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| Error::Io { path: p.into(), source })?;
                let mut value: serde_json::Value = serde_json::from_str(&text)?;
                // fields missing from a synth section come from the planted cohort
                if let Some(given) = value.get_mut("synth").and_then(|s| s.as_object_mut()) {
                    let serde_json::Value::Object(mut base) = serde_json::to_value(planted_cohort())? else {
                        unreachable!()
                    };
                    base.extend(std::mem::take(given));
                    *given = base;
                }
                serde_json::from_value(value)?
            }
            None => RunConfig::default(),
        };
        if let Some(s) = seed {
            cfg.synth.seed = s;
            cfg.pipeline.seed = s;
        }
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io { path: path.into(), source })?;
    Ok(csv::Writer::from_writer(file))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|source| Error::Io { path: path.into(), source })
}

fn synth(cfg: &RunConfig, out: &Path) -> Result<String> {
    let cohort = synth_cohort(&cfg.synth)?;
    cohort.write_csv(out)?;
    let [neg, pos] = cohort.label_counts();
    Ok(format!("{} students ({pos} employed, {neg} not)", cohort.len()))
}

fn analyze_bias(cfg: &RunConfig, data: &Path, out: &Path) -> Result<String> {
    let cohort = parse_cohort_dir(data)?;
    let p = &cfg.pipeline;
    let profiles = bias_profiles(&cohort, p.train.bias_weight_mode, p.train.exec)?;
    let report = BiasReport::from_profiles(&profiles);
    create_dir(out)?;
    write_json(&out.join("bias_report.json"), &report)?;
    let flagged: usize = report.flagged.iter().map(|(_, m)| m.len()).sum();
    Ok(format!("{} majors, {flagged} significant (major, aspect) pairs", report.majors.len()))
}

fn embed(cfg: &RunConfig, data: &Path, out: &Path) -> Result<String> {
    let cohort = parse_cohort_dir(data)?;
    let p = cfg.pipeline.resolved();
    let model = EmbeddingModel::fit(&cohort, &p.embedding, p.train.exec)?;
    let codes = model.embed(&cohort)?;
    codes.write_csv(out)?;
    write_json(&out.join("embedding_model.json"), &model)?;
    Ok(format!("{} semesters, {} dimensions", codes.semesters.len(), codes.code_dim))
}

fn augment(cfg: &RunConfig, data: &Path, out: &Path) -> Result<String> {
    let cohort = parse_cohort_dir(data)?;
    let p = cfg.pipeline.resolved();
    p.validate()?;
    let model = EmbeddingModel::fit(&cohort, &p.embedding, p.train.exec)?;
    let real = assemble_sequences(&cohort, &model.embed(&cohort)?, p.num_semesters)?;
    let aug = oversample(&real, &p.gan, p.seed)?;
    create_dir(out)?;
    let path = out.join("augmented.csv");
    let mut w = csv_writer(&path)?;
    let first = &aug.sequences[0];
    let mut header = vec!["student_id".to_string(), "label".into(), "synthetic".into()];
    for t in 1..=first.steps() {
        header.extend((1..=first.input_dim()).map(|k| format!("s{t}_a{k}")));
    }
    header.extend(["gender", "nation", "hometown_level", "enroll_status"].map(String::from));
    debug_assert_eq!(header.len(), 3 + first.steps() * first.input_dim() + NUM_ASPECTS);
    w.write_record(&header)?;
    for (i, s) in aug.sequences.iter().enumerate() {
        let mut rec = vec![s.student_id.clone(), s.label.to_string(), u8::from(i >= real.len()).to_string()];
        rec.extend(s.to_features().iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    finish(w, &path)?;
    if let Some(gan) = &aug.gan {
        write_json(&out.join("gan.json"), gan)?;
    }
    Ok(format!("{} real + {} generated rows", real.len(), aug.sequences.len() - real.len()))
}

fn train(cfg: &RunConfig, data: &Path, out: &Path) -> Result<String> {
    let cohort = parse_cohort_dir(data)?;
    let bundle = fit(&cohort, &cfg.pipeline)?;
    create_dir(out)?;
    bundle.save(&out.join("model.json"))?;
    let last = bundle.history.loss.last().copied().unwrap_or(f64::NAN);
    Ok(format!("{} epochs, final loss {last:.4}", bundle.history.loss.len()))
}

fn predict(model: &Path, data: &Path, out: &Path) -> Result<String> {
    let bundle = ModelBundle::load(model)?;
    let cohort: Cohort = parse_cohort_dir(data)?;
    let preds = predict_cohort(&bundle, &cohort)?;
    create_dir(out)?;
    let path = out.join("predictions.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["student_id", "probability", "prediction"])?;
    for p in &preds {
        w.write_record([p.student_id.clone(), p.probability.to_string(), p.label.to_string()])?;
    }
    finish(w, &path)?;
    let predicted: Vec<u8> = preds.iter().map(|p| p.label).collect();
    let labels: Vec<u8> = cohort.students.iter().map(|s| s.label).collect();
    let report = metrics(&predicted, &labels)?;
    write_json(&out.join("metrics.json"), &report)?;
    Ok(format!("{} students, macro F1 {:.4}", preds.len(), report.macro_f1))
}

fn experiment(
    cfg: &RunConfig,
    seed: Option<u64>,
    kind: ExperimentKind,
    data: Option<PathBuf>,
    seeds: Option<u64>,
    grid: Option<Vec<f64>>,
    out: &Path,
) -> Result<String> {
    let seeds = match seeds {
        Some(n) => {
            let start = seed.unwrap_or(0);
            (start..start + n).collect()
        }
        None => cfg.seeds.clone(),
    };
    let spec = ExperimentSpec {
        kind,
        seeds,
        cohort: match data {
            Some(dir) => CohortSource::Directory(dir),
            None => CohortSource::Synthetic(cfg.synth.clone()),
        },
        pipeline: cfg.pipeline.clone(),
        test_fraction: cfg.test_fraction,
        grid: grid.or_else(|| cfg.grid.clone()),
    };
    let report = run_experiment(&spec)?;
    report.write(out)?;
    let mut lines = format!("{kind}: {} seeds", report.seeds.len());
    for r in &report.rows {
        lines.push_str(&format!(
            "\n  {:<32} macro F1 {:.4} ± {:.4}  macro recall {:.4}",
            r.label, r.mean.macro_f1, r.std.macro_f1, r.mean.macro_recall
        ));
    }
    if let Some(c) = &report.comparison {
        lines.push_str(&format!(
            "\n  {} vs {}: mean delta {:+.4}, {} wins / {} losses / {} ties, sign test p {:.4}",
            c.treatment, c.baseline, c.mean_delta.macro_f1, c.wins, c.losses, c.ties, c.sign_test_p
        ));
    }
    Ok(lines)
}

fn run(cli: Cli) -> Result<String> {
    let cfg = RunConfig::load(cli.config.as_deref(), cli.seed)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Synth => synth(&cfg, out),
        Command::AnalyzeBias { data } => analyze_bias(&cfg, &data, out),
        Command::Embed { data } => embed(&cfg, &data, out),
        Command::Augment { data } => augment(&cfg, &data, out),
        Command::Train { data } => train(&cfg, &data, out),
        Command::Predict { model, data } => predict(&model, &data, out),
        Command::Experiment {
            kind,
            data,
            seeds,
            grid,
        } => experiment(&cfg, cli.seed, kind, data, seeds, grid, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(summary) => {
            let _ = writeln!(std::io::stdout(), "{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
