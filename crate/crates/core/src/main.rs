use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use disadapt::evaluate::{self, ScoreLevel};
use disadapt::ingest::{load_corpus, parse_record, ClassLabel};
use disadapt::learn::{self, Algorithm};
use disadapt::pipeline::{self, ModelSpec, PipelineConfig};
use disadapt::preprocess::{class_mean_spectrogram, diff_spectrogram, FeatureExtractor, FeatureKind};
use disadapt::synth::{self, SynthConfig};
use disadapt::Error;

#[derive(Parser)]
#[command(name = "disadapt", version, about = "Rhythmogram-based emotional disadaptation classifier")]
struct Cli {
    /// Seed for splitting, subsampling and generation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with optional [synth] and [pipeline] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output path (directory, or model file for `train`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus of record directories.
    Synth(SynthArgs),
    /// Train one model on the training split of a corpus.
    Train(TrainArgs),
    /// Score one record directory with a saved model.
    Predict(PredictArgs),
    /// Train and compare models on a held-out split.
    Evaluate(EvaluateArgs),
    /// Export spectrogram grids as CSV.
    Spectrogram(SpectrogramArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    balance: Option<f64>,
    #[arg(long)]
    min_len: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    /// Use the class-0 profile for both classes.
    #[arg(long)]
    null: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureArg {
    RawSegment,
    Spectrogram,
}

impl From<FeatureArg> for FeatureKind {
    fn from(f: FeatureArg) -> Self {
        match f {
            FeatureArg::RawSegment => FeatureKind::RawSegment,
            FeatureArg::Spectrogram => FeatureKind::Spectrogram,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Logistic,
    Gbm,
    EasyEnsemble,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Logistic => Algorithm::Logistic,
            AlgorithmArg::Gbm => Algorithm::Gbm,
            AlgorithmArg::EasyEnsemble => Algorithm::EasyEnsemble,
        }
    }
}

#[derive(Args, Default)]
struct HyperArgs {
    /// Inverse L2 strength of logistic regression.
    #[arg(long = "c")]
    c: Option<f64>,
    #[arg(long)]
    stages: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long)]
    learners: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    segment_size: Option<usize>,
    #[arg(long)]
    fragment_size: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    fraction: Option<f64>,
    /// Keep all sessions of a person on one side of the split.
    #[arg(long)]
    group_by_person: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, value_enum, default_value = "raw-segment")]
    features: FeatureArg,
    #[arg(long, value_enum, default_value = "gbm")]
    algorithm: AlgorithmArg,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    record: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Retrain and compare all four model configurations.
    #[arg(long)]
    all: bool,
    #[arg(long, value_enum)]
    algorithm: Option<AlgorithmArg>,
    #[arg(long, value_enum, requires = "algorithm")]
    features: Option<FeatureArg>,
    /// Saved model(s) to evaluate instead of retraining.
    #[arg(long = "model")]
    models: Vec<PathBuf>,
    /// Score individual segments instead of voted records.
    #[arg(long)]
    segment_level: bool,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct SpectrogramArgs {
    #[arg(long, conflicts_with = "record", required_unless_present = "record")]
    corpus: Option<PathBuf>,
    #[arg(long)]
    record: Option<PathBuf>,
    /// Only emit the class-mean grid of this class.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=1))]
    class: Option<u8>,
    #[arg(long)]
    fragment_size: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct FileConfig {
    synth: SynthConfig,
    pipeline: PipelineConfig,
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error[Usage]: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(match e {
                Error::Io { .. } => 4,
                _ => 3,
            })
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            toml::from_str::<FileConfig>(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let out = cli.out.clone();
    match cli.command {
        Command::Synth(a) => cmd_synth(a, file.synth, cli.seed, out),
        Command::Train(a) => cmd_train(a, file.pipeline, cli.seed, out),
        Command::Predict(a) => cmd_predict(a),
        Command::Evaluate(a) => cmd_evaluate(a, file.pipeline, cli.seed, out),
        Command::Spectrogram(a) => cmd_spectrogram(a, file.pipeline, out),
    }
}

fn require_out(out: Option<PathBuf>, what: &str) -> Result<PathBuf, Failure> {
    out.ok_or_else(|| Failure::Usage(format!("--out <{what}> is required")))
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e }
}

fn cmd_synth(a: SynthArgs, mut cfg: SynthConfig, seed: Option<u64>, out: Option<PathBuf>) -> CmdResult {
    let out = require_out(out, "dir")?;
    if let Some(n) = a.n {
        cfg.n_records = n;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(b) = a.balance {
        cfg.class_balance = b;
    }
    if let Some(m) = a.min_len {
        cfg.min_len = m;
    }
    if let Some(m) = a.max_len {
        cfg.max_len = m;
    }
    if a.null {
        cfg = cfg.null();
    }
    let records = synth::generate_corpus(&cfg, &out)?;
    println!("wrote {} records to {}", records.len(), out.display());
    Ok(())
}

fn apply_hyper(cfg: &mut PipelineConfig, h: &HyperArgs, seed: Option<u64>) {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    macro_rules! set {
        ($src:expr, $dst:expr) => {
            if let Some(v) = $src {
                $dst = v;
            }
        };
    }
    set!(h.c, cfg.logistic.c);
    set!(h.stages, cfg.gbm.n_stages);
    set!(h.learning_rate, cfg.gbm.learning_rate);
    set!(h.max_depth, cfg.gbm.max_depth);
    set!(h.learners, cfg.easy.n_learners);
    set!(h.rounds, cfg.easy.n_rounds);
    set!(h.segment_size, cfg.features.segment_size);
    set!(h.fragment_size, cfg.features.fragment_size);
    set!(h.window, cfg.features.window);
    set!(h.stride, cfg.features.stride);
    set!(h.fraction, cfg.split_fraction);
    cfg.group_by_person |= h.group_by_person;
}

fn split_path(model: &Path) -> PathBuf {
    let stem = model.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
    model.with_file_name(format!("{stem}.split.json"))
}

fn cmd_train(a: TrainArgs, mut cfg: PipelineConfig, seed: Option<u64>, out: Option<PathBuf>) -> CmdResult {
    let out = require_out(out, "model file")?;
    apply_hyper(&mut cfg, &a.hyper, seed);
    cfg.features.validate()?;
    let spec = ModelSpec::new(a.features.into(), a.algorithm.into());

    let records = load_corpus(&a.corpus)?;
    let plan = evaluate::split_records(&records, cfg.split_fraction, cfg.seed, cfg.group_by_person)?;
    let (train, _) = plan.partition(&records);
    let extractor = FeatureExtractor::new(spec.kind, cfg.features)?;
    let set = extractor.build(&train);
    let classifier = pipeline::fit_features(&set, spec.algorithm, &cfg)?;
    let model = learn::TrainedModel::new(spec.kind, cfg.features, classifier)?;

    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io(dir))?;
    }
    learn::save_model(&model, &out)?;
    let split = split_path(&out);
    fs::write(&split, plan.to_json()).map_err(io(&split))?;

    let report = evaluate::evaluate_model(&spec.name(), &model, &set, ScoreLevel::Record)?;
    println!(
        "trained {} on {} records ({} vectors); train auc={:.4} accuracy={:.4}",
        spec.name(),
        train.len(),
        set.len(),
        report.auc,
        report.table.accuracy
    );
    println!("model: {}", out.display());
    println!("split: {}", split.display());
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> CmdResult {
    let model = learn::load_model(&a.model)?;
    let record = parse_record(&a.record)?;
    let extractor = FeatureExtractor::new(model.feature_kind, model.feature_params)?;
    let parts = extractor.require_parts(&record)?;
    let s = evaluate::record_score(&model, model.feature_kind, &parts)?;
    println!("score={} label={}", s.score, s.label);
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, mut cfg: PipelineConfig, seed: Option<u64>, out: Option<PathBuf>) -> CmdResult {
    let out = require_out(out, "dir")?;
    apply_hyper(&mut cfg, &a.hyper, seed);
    if a.segment_level {
        cfg.level = ScoreLevel::Segment;
    }
    cfg.features.validate()?;

    let mut specs = Vec::new();
    if let Some(alg) = a.algorithm {
        let kind = a.features.map_or(FeatureKind::RawSegment, FeatureKind::from);
        specs.push(ModelSpec::new(kind, alg.into()));
    }
    if a.all || (specs.is_empty() && a.models.is_empty()) {
        specs = ModelSpec::all();
    }
    let mut pretrained = Vec::new();
    for path in &a.models {
        let name = path.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
        pretrained.push((name, learn::load_model(path)?));
    }

    let records = load_corpus(&a.corpus)?;
    let run = pipeline::run_evaluation(&records, &specs, pretrained, &cfg)?;

    for sub in ["models", "reports", "roc"] {
        let d = out.join(sub);
        fs::create_dir_all(&d).map_err(io(&d))?;
    }
    let write = |path: PathBuf, text: String| fs::write(&path, text).map_err(io(&path));
    write(out.join("split.json"), run.plan.to_json())?;
    for e in &run.entries {
        let name = &e.report.name;
        learn::save_model(&e.model, out.join("models").join(format!("{name}.json")))?;
        write(out.join("reports").join(format!("{name}.json")), e.report.to_json())?;
        write(out.join("reports").join(format!("{name}.txt")), e.report.to_text())?;
        e.report.write_roc_csv(out.join("roc").join(format!("{name}.csv")))?;
    }
    let rows = evaluate::compare_models(&run.reports());
    let table = evaluate::comparison_text(&rows);
    write(out.join("comparison.txt"), table.clone())?;
    let mut json = serde_json::to_string_pretty(&rows).expect("rows serialize");
    json.push('\n');
    write(out.join("comparison.json"), json)?;
    print!("{table}");
    Ok(())
}

fn cmd_spectrogram(a: SpectrogramArgs, mut cfg: PipelineConfig, out: Option<PathBuf>) -> CmdResult {
    let out = require_out(out, "dir")?;
    if let Some(v) = a.fragment_size {
        cfg.features.fragment_size = v;
    }
    if let Some(v) = a.window {
        cfg.features.window = v;
    }
    if let Some(v) = a.stride {
        cfg.features.stride = v;
    }
    let extractor = FeatureExtractor::new(FeatureKind::Spectrogram, cfg.features)?;
    fs::create_dir_all(&out).map_err(io(&out))?;

    if let Some(path) = a.record {
        let record = parse_record(&path)?;
        extractor.require_parts(&record)?;
        let specs = extractor.record_spectrograms(&record);
        for (i, s) in specs.iter().enumerate() {
            s.grid.write_csv(out.join(format!("fragment_{i}.csv")))?;
        }
        println!("wrote {} fragment grids to {}", specs.len(), out.display());
        return Ok(());
    }

    let corpus = a.corpus.expect("clap enforces corpus or record");
    let records = load_corpus(&corpus)?;
    let specs: Vec<_> = records.iter().flat_map(|r| extractor.record_spectrograms(r)).collect();
    match a.class {
        Some(c) => {
            let class = ClassLabel::new(c)?;
            class_mean_spectrogram(&specs, class)?
                .grid
                .write_csv(out.join(format!("mean{c}.csv")))?;
        }
        None => {
            let m0 = class_mean_spectrogram(&specs, ClassLabel::ABSENT)?;
            let m1 = class_mean_spectrogram(&specs, ClassLabel::PRESENT)?;
            m0.grid.write_csv(out.join("mean0.csv"))?;
            m1.grid.write_csv(out.join("mean1.csv"))?;
            diff_spectrogram(&m0, &m1)?.write_csv(out.join("diff.csv"))?;
        }
    }
    println!("wrote class grids from {} spectrograms to {}", specs.len(), out.display());
    Ok(())
}
