//! The `transtech` command line.
//!
//! Settings resolve as defaults, then the `--config` document, then flags.
//! Relative paths resolve against `--workdir`. Exit codes: 0 success,
//! 1 finished with warnings, 2 usage or fatal error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::align::{embed_align, lexical_align, load_bitext, train_lexical_model, EmbeddingTable};
use crate::annotate::annotate_corpus;
use crate::config::{AlignMethod, RunConfig};
use crate::corpus::{load_corpus, save_corpus, split, Format, PairRecord, SplitRatios};
use crate::encode::Featurizer;
use crate::error::{Error, Result};
use crate::eval::{compare_architectures, evaluate, heatmap_export, MetricsReport, Normalize};
use crate::model::{load_checkpoint, train, Architecture, Datasets, ModelKind, TrainedArchitecture};
use crate::pipeline::{
    annotation_report_json, evaluate_architecture, lexical_table, load_resources, run_pipeline,
    save_models, synthesis_report_json, training_log_json, write_evaluation, write_json,
};
use crate::synthesize::{build_pe_dataset, SynthesisConfig};

#[derive(Parser, Debug)]
#[command(name = "transtech", version, about = "Translation-technique annotation, synthesis and classification")]
pub struct Cli {
    /// Directory that relative paths resolve against.
    #[arg(long, global = true, default_value = ".")]
    pub workdir: PathBuf,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Word-align a bitext and write one alignment per line.
    Align(AlignArgs),
    /// Label every record with a technique.
    Annotate(AnnotateArgs),
    /// Add bad literal twins and quality labels.
    Synthesize(SynthesizeArgs),
    /// Stratified train/dev/test split.
    Split(SplitArgs),
    /// Train one architecture.
    Train(TrainArgs),
    /// Score predictions against gold labels.
    Evaluate(EvaluateArgs),
    /// Compare metrics reports across architectures.
    Report(ReportArgs),
    /// Run annotate, synthesize, split, train and evaluate.
    Pipeline(PipelineArgs),
    /// Write the synthetic demo corpus and resources.
    Demo(DemoArgs),
}

#[derive(Args, Debug)]
pub struct AlignArgs {
    /// `source<TAB>target` lines.
    #[arg(long)]
    pub bitext: PathBuf,
    #[arg(long, value_enum)]
    pub method: Option<AlignMethod>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub resources: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to `<out>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SynthesizeArgs {
    /// Annotated corpus.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub resources: Option<PathBuf>,
    #[arg(long)]
    pub bitext: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub bad_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// `train,dev,test`, e.g. `0.81,0.09,0.10`.
    #[arg(long)]
    pub ratios: Option<SplitRatios>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub arch: Architecture,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub resources: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub hash_dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Gold labels, one per line.
    #[arg(long, requires = "pred", conflicts_with_all = ["arch", "models"])]
    pub gold: Option<PathBuf>,
    /// Predicted labels, one per line.
    #[arg(long, requires = "gold")]
    pub pred: Option<PathBuf>,
    /// Label order; defaults to the labels seen, sorted.
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    #[arg(long, requires_all = ["models", "corpus"])]
    pub arch: Option<Architecture>,
    /// Directory with the architecture's checkpoints.
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub resources: Option<PathBuf>,
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_parser = parse_normalize)]
    pub normalize: Option<Normalize>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory of metrics JSON reports.
    #[arg(long)]
    pub metrics_dir: PathBuf,
    /// Defaults to the metrics directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    /// Restrict to these architectures.
    #[arg(long, value_delimiter = ',')]
    pub arch: Vec<Architecture>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = crate::demo::DEFAULT_RECORDS)]
    pub records: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

fn parse_normalize(s: &str) -> std::result::Result<Normalize, String> {
    match s {
        "none" => Ok(Normalize::None),
        "row" => Ok(Normalize::Row),
        _ => Err(format!("expected none or row, got {s:?}")),
    }
}

/// Outcome of a successful command.
#[derive(Debug, Default)]
pub struct Status {
    pub warnings: Vec<String>,
}

impl Status {
    fn code(&self) -> i32 {
        if self.warnings.is_empty() {
            0
        } else {
            1
        }
    }
}

struct Ctx {
    workdir: PathBuf,
    config: RunConfig,
}

impl Ctx {
    fn path(&self, p: &Path) -> PathBuf {
        self.workdir.join(p)
    }

    fn resources(&self, flag: &Option<PathBuf>) -> Result<crate::annotate::RuleResources> {
        let dir = flag.clone().unwrap_or_else(|| self.config.paths.resources.clone());
        load_resources(&self.path(&dir), &self.config)
    }

    fn embeddings(&self, flag: &Option<PathBuf>) -> Result<Option<EmbeddingTable>> {
        match flag.clone().or_else(|| self.config.paths.embeddings.clone()) {
            Some(p) => EmbeddingTable::load(&self.path(&p)).map(Some),
            None => Ok(None),
        }
    }
}

fn load_records(path: &Path, status: &mut Status) -> Result<Vec<PairRecord>> {
    let loaded = load_corpus(path, Format::from_path(path))?;
    for e in &loaded.errors {
        status.warnings.push(format!("{}: skipped {e}", path.display()));
    }
    if loaded.records.is_empty() {
        return Err(Error::Empty("corpus"));
    }
    Ok(loaded.records)
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => fs::create_dir_all(d).map_err(|e| Error::io(d, e)),
        _ => Ok(()),
    }
}

fn default_report(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".report.json");
    out.with_file_name(name)
}

fn cmd_align(ctx: &Ctx, a: &AlignArgs) -> Result<Status> {
    let mut cfg = ctx.config.align;
    cfg.method = a.method.unwrap_or(cfg.method);
    cfg.threshold = a.threshold.unwrap_or(cfg.threshold);
    cfg.iterations = a.iterations.unwrap_or(cfg.iterations);
    if !(0.0..=1.0).contains(&cfg.threshold) || cfg.iterations == 0 {
        return Err(Error::InvalidArgument("threshold must lie in [0, 1] and iterations be positive".into()));
    }
    let pairs = load_bitext(&ctx.path(&a.bitext))?;
    if pairs.is_empty() {
        return Err(Error::Empty("bitext"));
    }
    let needs_embeddings = cfg.method != AlignMethod::Em;
    let embeddings = if needs_embeddings {
        match ctx.embeddings(&a.embeddings)? {
            Some(e) => Some(e),
            None => return Err(Error::InvalidArgument(format!("--method {:?} needs --embeddings", cfg.method).to_lowercase())),
        }
    } else {
        None
    };
    let table = if cfg.method != AlignMethod::Embed {
        Some(train_lexical_model(&pairs, cfg.iterations)?)
    } else {
        None
    };
    let mut status = Status::default();
    let mut out = String::new();
    let mut links = 0;
    for (i, (s, t)) in pairs.iter().enumerate() {
        let alignment = match cfg.method {
            AlignMethod::Em => lexical_align(s, t, table.as_ref().expect("em table"), cfg.threshold)?,
            AlignMethod::Embed => embed_align(s, t, embeddings.as_ref().expect("embeddings"), cfg.threshold)?,
            AlignMethod::Intersect => {
                let em = lexical_align(s, t, table.as_ref().expect("em table"), cfg.threshold)?;
                let emb = embed_align(s, t, embeddings.as_ref().expect("embeddings"), cfg.threshold)?;
                em.intersect(&emb, s.len(), t.len())
            }
        };
        if needs_embeddings && !alignment.missing.is_empty() {
            status.warnings.push(format!(
                "pair {}: no embedding for {}",
                i + 1,
                alignment.missing.join(", ")
            ));
        }
        links += alignment.links.len();
        out.push_str(&serde_json::to_string(&alignment).expect("alignment serializes"));
        out.push('\n');
    }
    let path = ctx.path(&a.out);
    ensure_parent(&path)?;
    fs::write(&path, out).map_err(|e| Error::io(&path, e))?;
    println!("aligned {} sentence pairs, {links} links -> {}", pairs.len(), path.display());
    Ok(status)
}

fn cmd_annotate(ctx: &Ctx, a: &AnnotateArgs) -> Result<Status> {
    let mut status = Status::default();
    let res = ctx.resources(&a.resources)?;
    let corpus = ctx.path(a.corpus.as_ref().unwrap_or(&ctx.config.paths.corpus));
    let records = load_records(&corpus, &mut status)?;
    let (labeled, report) = annotate_corpus(&records, &res);
    let out = ctx.path(&a.out);
    ensure_parent(&out)?;
    save_corpus(&labeled, &out, Format::from_path(&out))?;
    let report_path = a.report.as_ref().map(|p| ctx.path(p)).unwrap_or_else(|| default_report(&out));
    write_json(&report_path, &annotation_report_json(&report))?;
    println!("labeled {} of {} records", labeled.len(), records.len());
    for (label, n) in &report.counts {
        println!("  {label:<4} {n}");
    }
    if !report.errors.is_empty() {
        println!("{} unlabelable, listed in {}", report.errors.len(), report_path.display());
    }
    Ok(status)
}

fn cmd_synthesize(ctx: &Ctx, a: &SynthesizeArgs) -> Result<Status> {
    let mut status = Status::default();
    let res = ctx.resources(&a.resources)?;
    let records = load_records(&ctx.path(&a.corpus), &mut status)?;
    let bitext = a.bitext.clone().or_else(|| ctx.config.paths.bitext.clone()).map(|p| ctx.path(&p));
    let table = lexical_table(bitext.as_deref(), &records, ctx.config.align.iterations)?;
    let cfg = SynthesisConfig {
        bad_fraction: a.bad_fraction.unwrap_or(ctx.config.synthesize.bad_fraction),
        seed: a.seed.unwrap_or(ctx.config.seeds().synthesize),
        require_full_gloss: ctx.config.synthesize.require_full_gloss,
    };
    let (dataset, report) = build_pe_dataset(&records, &res, Some(&table), &cfg)?;
    let out = ctx.path(&a.out);
    ensure_parent(&out)?;
    save_corpus(&dataset, &out, Format::from_path(&out))?;
    let report_path = a.report.as_ref().map(|p| ctx.path(p)).unwrap_or_else(|| default_report(&out));
    write_json(&report_path, &synthesis_report_json(&report))?;
    println!(
        "{} records: {} GOOD_LIT, {} GOOD_NONLIT, {} BAD ({} without a twin)",
        report.total(),
        report.good_literal,
        report.good_non_literal,
        report.bad,
        report.skipped.len()
    );
    Ok(status)
}

fn cmd_split(ctx: &Ctx, a: &SplitArgs) -> Result<Status> {
    let mut status = Status::default();
    let records = load_records(&ctx.path(&a.corpus), &mut status)?;
    let ratios = match a.ratios {
        Some(r) => r,
        None => ctx.config.split.ratios()?,
    };
    let parts = split(&records, ratios, a.seed.unwrap_or(ctx.config.seeds().split))?;
    status.warnings.extend(parts.warnings.iter().cloned());
    let dir = ctx.path(&a.out_dir);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (name, part) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
        save_corpus(part, &dir.join(format!("{name}.jsonl")), Format::Jsonl)?;
    }
    println!(
        "train {} / dev {} / test {}",
        parts.train.len(),
        parts.dev.len(),
        parts.test.len()
    );
    Ok(status)
}

fn cmd_train(ctx: &Ctx, a: &TrainArgs) -> Result<Status> {
    let mut status = Status::default();
    let cfg = &ctx.config;
    let res = ctx.resources(&a.resources)?;
    let train_records = load_records(&ctx.path(&a.train), &mut status)?;
    let dev_records = match &a.dev {
        Some(p) => load_records(&ctx.path(p), &mut status)?,
        None => {
            status.warnings.push("no --dev set; early stopping uses training accuracy".into());
            Vec::new()
        }
    };
    let mut model_cfg = cfg.model.clone();
    model_cfg.alpha = a.alpha.unwrap_or(model_cfg.alpha);
    model_cfg.beta = a.beta.unwrap_or(model_cfg.beta);
    let spec = model_cfg.spec(a.arch)?;
    let mut train_cfg = cfg.train.with_seed(a.seed.unwrap_or(cfg.seeds().train));
    train_cfg.max_epochs = a.epochs.unwrap_or(train_cfg.max_epochs);
    train_cfg.patience = a.patience.unwrap_or(train_cfg.patience);
    train_cfg.hidden = a.hidden.unwrap_or(train_cfg.hidden);
    train_cfg.learning_rate = a.learning_rate.unwrap_or(train_cfg.learning_rate);
    train_cfg.batch_size = a.batch_size.unwrap_or(train_cfg.batch_size);
    train_cfg.validate()?;
    let mut features = cfg.features;
    features.hash_dim = a.hash_dim.unwrap_or(features.hash_dim);
    features.validate()?;
    let embeddings = if features.use_embeddings { ctx.embeddings(&a.embeddings)? } else { None };
    let mut featurizer = Featurizer::new(&res, features);
    if let Some(e) = &embeddings {
        featurizer = featurizer.with_embeddings(e);
    }
    let datasets = Datasets {
        train: &train_records,
        dev: &dev_records,
    };
    let trained = train(&spec, &datasets, &featurizer, &train_cfg)?;
    let dir = ctx.path(&a.out_dir);
    save_models(&trained, &dir)?;
    for m in &trained.models {
        let log = training_log_json(m);
        println!(
            "{}: best epoch {} of {}, dev accuracy {:.4} -> {}",
            m.kind.as_str(),
            m.best_epoch,
            m.log.len(),
            log["best_dev_accuracy"].as_f64().unwrap_or(f64::NAN),
            dir.join(format!("{}.ckpt", m.kind.as_str())).display()
        );
    }
    Ok(status)
}

fn read_labels(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn print_report(name: &str, r: &MetricsReport) {
    println!("{name}: accuracy {:.4}, macro F1 {:.4}", r.accuracy, r.macro_f1);
    for c in &r.per_class {
        println!(
            "  {:<12} P {:.3}  R {:.3}  F1 {:.3}  n {}",
            c.label, c.precision, c.recall, c.f1, c.support
        );
    }
}

fn load_architecture(arch: Architecture, dir: &Path) -> Result<TrainedArchitecture> {
    let kinds: &[ModelKind] = match arch {
        Architecture::A1 => &[ModelKind::A1],
        Architecture::A2 => &[ModelKind::A2],
        Architecture::A3 => &[ModelKind::A3Stage1, ModelKind::A3Stage2],
        Architecture::A4 => &[ModelKind::A4],
    };
    let models = kinds
        .iter()
        .map(|k| load_checkpoint(&dir.join(format!("{}.ckpt", k.as_str()))))
        .collect::<Result<Vec<_>>>()?;
    for (m, k) in models.iter().zip(kinds) {
        if m.kind != *k {
            return Err(Error::Checkpoint(format!(
                "expected a {} checkpoint, found {}",
                k.as_str(),
                m.kind.as_str()
            )));
        }
    }
    Ok(TrainedArchitecture {
        spec: models[0].spec,
        models,
    })
}

fn cmd_evaluate(ctx: &Ctx, a: &EvaluateArgs) -> Result<Status> {
    let mut status = Status::default();
    let normalize = a.normalize.unwrap_or(ctx.config.eval.normalize);
    let dir = ctx.path(&a.out_dir);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    if let (Some(gold), Some(pred)) = (&a.gold, &a.pred) {
        let golds = read_labels(&ctx.path(gold))?;
        let preds = read_labels(&ctx.path(pred))?;
        let labels = match &a.labels {
            Some(l) => l.clone(),
            None => {
                let mut l: Vec<String> = golds.iter().chain(&preds).cloned().collect();
                l.sort();
                l.dedup();
                l
            }
        };
        let report = evaluate(&golds, &preds, &labels)?;
        report.write_json(&dir.join("metrics.json"))?;
        heatmap_export(&report.confusion, &dir.join("confusion.csv"), normalize)?;
        print_report("labels", &report);
        return Ok(status);
    }
    let (Some(arch), Some(models), Some(corpus)) = (a.arch, &a.models, &a.corpus) else {
        return Err(Error::InvalidArgument(
            "evaluate needs either --gold and --pred, or --arch, --models and --corpus".into(),
        ));
    };
    let trained = load_architecture(arch, &ctx.path(models))?;
    let res = ctx.resources(&a.resources)?;
    let records = load_records(&ctx.path(corpus), &mut status)?;
    let features = trained.models[0].feature_config;
    let embeddings = if features.use_embeddings { ctx.embeddings(&a.embeddings)? } else { None };
    let mut featurizer = Featurizer::new(&res, features);
    if let Some(e) = &embeddings {
        featurizer = featurizer.with_embeddings(e);
    }
    for eval in evaluate_architecture(&trained, &records, &featurizer)? {
        write_evaluation(&eval, &dir, normalize)?;
        print_report(&eval.name, &eval.report);
    }
    Ok(status)
}

fn cmd_report(ctx: &Ctx, a: &ReportArgs) -> Result<Status> {
    let mut status = Status::default();
    let dir = ctx.path(&a.metrics_dir);
    let mut entries: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Error::io(&dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    entries.sort();
    let mut reports = Vec::new();
    for p in entries {
        let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        match serde_json::from_str::<MetricsReport>(&text) {
            Ok(r) => {
                let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                reports.push((name, r));
            }
            Err(_) => status.warnings.push(format!("{} is not a metrics report", p.display())),
        }
    }
    let out = a.out_dir.as_ref().map(|p| ctx.path(p)).unwrap_or_else(|| dir.clone());
    compare_architectures(&reports, &out)?;
    println!("{:<12} {:>9} {:>9}", "name", "accuracy", "macro_f1");
    for (name, r) in &reports {
        println!("{name:<12} {:>9.4} {:>9.4}", r.accuracy, r.macro_f1);
    }
    println!("tables written to {}", out.display());
    Ok(status)
}

fn cmd_pipeline(ctx: &Ctx, a: &PipelineArgs) -> Result<Status> {
    let mut cfg = ctx.config.clone();
    if !a.arch.is_empty() {
        cfg.model.architectures = a.arch.clone();
    }
    cfg.seed = a.seed.unwrap_or(cfg.seed);
    if let Some(o) = &a.output {
        cfg.paths.output = o.clone();
    }
    let outcome = run_pipeline(&cfg, &ctx.workdir)?;
    for (name, r) in &outcome.reports {
        println!("{name:<10} accuracy {:.4}  macro F1 {:.4}", r.accuracy, r.macro_f1);
    }
    for (model, acc) in &outcome.dev_accuracy {
        println!("{model:<10} best dev accuracy {acc:.4}");
    }
    println!("manifest: {}", outcome.output_dir.join("manifest.json").display());
    Ok(Status {
        warnings: outcome.warnings,
    })
}

fn cmd_demo(ctx: &Ctx, a: &DemoArgs) -> Result<Status> {
    let dir = ctx.path(&a.out);
    crate::demo::write_demo(&dir, a.records, a.seed)?;
    println!("wrote {} demo records to {}", a.records, dir.display());
    Ok(Status::default())
}

pub fn execute(cli: &Cli) -> Result<Status> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(&cli.workdir.join(p))?,
        None => RunConfig::default(),
    };
    let ctx = Ctx {
        workdir: cli.workdir.clone(),
        config,
    };
    match &cli.command {
        Command::Align(a) => cmd_align(&ctx, a),
        Command::Annotate(a) => cmd_annotate(&ctx, a),
        Command::Synthesize(a) => cmd_synthesize(&ctx, a),
        Command::Split(a) => cmd_split(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Evaluate(a) => cmd_evaluate(&ctx, a),
        Command::Report(a) => cmd_report(&ctx, a),
        Command::Pipeline(a) => cmd_pipeline(&ctx, a),
        Command::Demo(a) => cmd_demo(&ctx, a),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(status) => {
            let mut err = std::io::stderr().lock();
            for w in &status.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            status.code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
