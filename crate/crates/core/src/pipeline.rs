//! End-to-end workflow: annotate, synthesize, split, train, evaluate.
//!
//! Output layout under the configured output directory:
//!
//! ```text
//! annotated.jsonl            annotation_report.json
//! pe_dataset.jsonl           synthesis_report.json
//! split/{train,dev,test}.jsonl
//! models/<model>.ckpt        models/<model>.log.json
//! metrics/<name>.json        metrics/<name>.confusion.csv
//! metrics/<name>.predictions.tsv
//! metrics/accuracy.csv       metrics/per_class_f1.csv
//! manifest.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::align::{bitext_from_records, load_bitext, train_lexical_model, EmbeddingTable, TranslationTable};
use crate::annotate::{annotate_corpus, AnnotationReport, RuleResources};
use crate::config::RunConfig;
use crate::corpus::{load_corpus, save_corpus, Format, PairRecord, QualityLabel};
use crate::encode::Featurizer;
use crate::error::{Error, Result};
use crate::eval::{compare_architectures, evaluate, heatmap_export, MetricsReport, Normalize};
use crate::model::{
    gold_label, output_labels, predict, save_checkpoint, train, Architecture, Datasets,
    TrainConfig, TrainedArchitecture, TrainedModel,
};
use crate::synthesize::{build_pe_dataset, SynthesisConfig, SynthesisReport};

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn annotation_report_json(report: &AnnotationReport) -> Value {
    json!({
        "labeled": report.counts.values().sum::<usize>(),
        "counts": report.counts.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "low_confidence": report.low_confidence,
        "unlabelable": report.errors.iter().map(|(id, m)| json!({"id": id, "reason": m})).collect::<Vec<_>>(),
        "changed": report.changed.iter().map(|(id, a, b)| json!({"id": id, "from": a.to_string(), "to": b.to_string()})).collect::<Vec<_>>(),
    })
}

pub fn synthesis_report_json(report: &SynthesisReport) -> Value {
    json!({
        "total": report.total(),
        "good_literal": report.good_literal,
        "good_non_literal": report.good_non_literal,
        "bad": report.bad,
        "bad_by_technique": report.bad_by_technique.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "skipped": report.skipped.iter().map(|(id, m)| json!({"id": id, "reason": m})).collect::<Vec<_>>(),
    })
}

pub fn training_log_json(model: &TrainedModel) -> Value {
    let best = model
        .log
        .iter()
        .find(|l| l.epoch == model.best_epoch)
        .map(|l| l.dev_accuracy);
    json!({
        "model": model.kind.as_str(),
        "best_epoch": model.best_epoch,
        "best_dev_accuracy": best,
        "epochs": model.log,
    })
}

/// Resources from `dir` with the configured rule thresholds.
pub fn load_resources(dir: &Path, config: &RunConfig) -> Result<RuleResources> {
    let mut res = RuleResources::load_dir(dir)?;
    res.thresholds = config.annotate.thresholds();
    Ok(res)
}

/// Lexical model over `bitext`, or over the corpus sentences when unset.
pub fn lexical_table(
    bitext: Option<&Path>,
    records: &[PairRecord],
    iterations: usize,
) -> Result<TranslationTable> {
    let pairs = match bitext {
        Some(p) => load_bitext(p)?,
        None => bitext_from_records(records),
    };
    train_lexical_model(&pairs, iterations)
}

/// Gold and predicted final labels of `arch` on the records it evaluates.
pub fn predictions(
    trained: &TrainedArchitecture,
    records: &[PairRecord],
    featurizer: &Featurizer,
) -> Result<Vec<(String, String, String)>> {
    records
        .iter()
        .filter(|r| trained.evaluates(r))
        .map(|r| {
            Ok((
                r.id.clone(),
                gold_label(trained.spec.kind, r)?,
                trained.predict_label(r, featurizer)?,
            ))
        })
        .collect()
}

fn stage_predictions(
    model: &TrainedModel,
    records: &[PairRecord],
    featurizer: &Featurizer,
) -> Result<Vec<(String, String, String)>> {
    records
        .iter()
        .filter(|r| model.kind.accepts(r))
        .map(|r| {
            Ok((
                r.id.clone(),
                model.kind.gold(r)?.remove(0),
                predict(model, r, featurizer)?.label,
            ))
        })
        .collect()
}

fn report_of(rows: &[(String, String, String)], labels: &[String]) -> Result<MetricsReport> {
    let golds: Vec<&str> = rows.iter().map(|r| r.1.as_str()).collect();
    let preds: Vec<&str> = rows.iter().map(|r| r.2.as_str()).collect();
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    evaluate(&golds, &preds, &labels)
}

/// One named evaluation: the final output of an architecture, or a single
/// A3 stage.
pub struct Evaluation {
    pub name: String,
    pub report: MetricsReport,
    pub rows: Vec<(String, String, String)>,
}

/// Evaluates an architecture on `records`. A3 yields its composed output
/// plus one evaluation per stage.
pub fn evaluate_architecture(
    trained: &TrainedArchitecture,
    records: &[PairRecord],
    featurizer: &Featurizer,
) -> Result<Vec<Evaluation>> {
    let arch = trained.spec.kind;
    let rows = predictions(trained, records, featurizer)?;
    let mut out = vec![Evaluation {
        name: arch.to_string(),
        report: report_of(&rows, &output_labels(arch))?,
        rows,
    }];
    if arch == Architecture::A3 {
        for model in &trained.models {
            let rows = stage_predictions(model, records, featurizer)?;
            if rows.is_empty() {
                log::warn!("{}: no test records", model.kind.as_str());
                continue;
            }
            out.push(Evaluation {
                name: model.kind.as_str().to_string(),
                report: report_of(&rows, &model.heads[0].labels.0)?,
                rows,
            });
        }
    }
    Ok(out)
}

/// Writes `<name>.json`, `<name>.confusion.csv` and
/// `<name>.predictions.tsv` into `dir`.
pub fn write_evaluation(eval: &Evaluation, dir: &Path, normalize: Normalize) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let json_path = dir.join(format!("{}.json", eval.name));
    eval.report.write_json(&json_path)?;
    let csv_path = dir.join(format!("{}.confusion.csv", eval.name));
    heatmap_export(&eval.report.confusion, &csv_path, normalize)?;
    let tsv_path = dir.join(format!("{}.predictions.tsv", eval.name));
    let mut tsv = String::from("id\tgold\tpredicted\n");
    for (id, g, p) in &eval.rows {
        tsv.push_str(&format!("{id}\t{g}\t{p}\n"));
    }
    fs::write(&tsv_path, tsv).map_err(|e| Error::io(&tsv_path, e))?;
    Ok(vec![json_path, csv_path, tsv_path])
}

/// Saves every model of `trained` as `<model>.ckpt` plus `<model>.log.json`.
pub fn save_models(trained: &TrainedArchitecture, dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let mut paths = Vec::new();
    for model in &trained.models {
        let ckpt = dir.join(format!("{}.ckpt", model.kind.as_str()));
        save_checkpoint(model, &ckpt)?;
        let log = dir.join(format!("{}.log.json", model.kind.as_str()));
        write_json(&log, &training_log_json(model))?;
        paths.push(ckpt);
        paths.push(log);
    }
    Ok(paths)
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn relative(path: &Path, root: &Path) -> String {
    path.strip_prefix(root)
        .unwrap_or(path)
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

/// What a pipeline run produced.
#[derive(Debug)]
pub struct PipelineOutcome {
    pub output_dir: PathBuf,
    pub manifest: Value,
    pub reports: Vec<(String, MetricsReport)>,
    /// Best dev accuracy per trained model.
    pub dev_accuracy: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Runs the full workflow for `config`; relative paths resolve against
/// `workdir`.
pub fn run_pipeline(config: &RunConfig, workdir: &Path) -> Result<PipelineOutcome> {
    config.validate()?;
    let at = |p: &Path| workdir.join(p);
    let out = at(&config.paths.output);
    create_dir(&out)?;
    let seeds = config.seeds();
    let mut warnings = Vec::new();
    let mut outputs: Vec<PathBuf> = Vec::new();

    let res = load_resources(&at(&config.paths.resources), config)?;
    let corpus_path = at(&config.paths.corpus);
    let loaded = load_corpus(&corpus_path, Format::from_path(&corpus_path))?;
    for e in &loaded.errors {
        warnings.push(format!("{}: skipped {e}", corpus_path.display()));
    }
    if loaded.records.is_empty() {
        return Err(Error::Empty("corpus"));
    }

    let (annotated, report) = annotate_corpus(&loaded.records, &res);
    for (id, m) in &report.errors {
        warnings.push(format!("record {id} left unlabeled: {m}"));
    }
    let p = out.join("annotated.jsonl");
    save_corpus(&annotated, &p, Format::Jsonl)?;
    outputs.push(p);
    let p = out.join("annotation_report.json");
    write_json(&p, &annotation_report_json(&report))?;
    outputs.push(p);
    log::info!("annotated {} of {} records", annotated.len(), loaded.records.len());

    let table = lexical_table(
        config.paths.bitext.as_deref().map(at).as_deref(),
        &annotated,
        config.align.iterations,
    )?;
    let synth = SynthesisConfig {
        bad_fraction: config.synthesize.bad_fraction,
        seed: seeds.synthesize,
        require_full_gloss: config.synthesize.require_full_gloss,
    };
    let (dataset, synth_report) = build_pe_dataset(&annotated, &res, Some(&table), &synth)?;
    let p = out.join("pe_dataset.jsonl");
    save_corpus(&dataset, &p, Format::Jsonl)?;
    outputs.push(p);
    let p = out.join("synthesis_report.json");
    write_json(&p, &synthesis_report_json(&synth_report))?;
    outputs.push(p);
    log::info!(
        "dataset: {} records ({} bad twins, {} skipped)",
        dataset.len(),
        synth_report.bad,
        synth_report.skipped.len()
    );

    let parts = crate::corpus::split(&dataset, config.split.ratios()?, seeds.split)?;
    warnings.extend(parts.warnings.iter().cloned());
    let split_dir = out.join("split");
    create_dir(&split_dir)?;
    for (name, part) in [("train", &parts.train), ("dev", &parts.dev), ("test", &parts.test)] {
        let p = split_dir.join(format!("{name}.jsonl"));
        save_corpus(part, &p, Format::Jsonl)?;
        outputs.push(p);
    }

    let embeddings = match (&config.paths.embeddings, config.features.use_embeddings) {
        (Some(p), true) => Some(EmbeddingTable::load(&at(p))?),
        _ => None,
    };
    let mut featurizer = Featurizer::new(&res, config.features);
    if let Some(e) = &embeddings {
        featurizer = featurizer.with_embeddings(e);
    }
    let train_config: TrainConfig = config.train.with_seed(seeds.train);
    let datasets = Datasets {
        train: &parts.train,
        dev: &parts.dev,
    };

    let mut reports = Vec::new();
    let mut dev_accuracy = BTreeMap::new();
    let mut models_json = Vec::new();
    let models_dir = out.join("models");
    let metrics_dir = out.join("metrics");
    let mut archs = config.model.architectures.clone();
    archs.sort();
    archs.dedup();
    for arch in archs {
        let spec = config.model.spec(arch)?;
        let trained = train(&spec, &datasets, &featurizer, &train_config)?;
        outputs.extend(save_models(&trained, &models_dir)?);
        for m in &trained.models {
            let log = training_log_json(m);
            if let Some(acc) = log["best_dev_accuracy"].as_f64() {
                dev_accuracy.insert(m.kind.as_str().to_string(), acc);
            }
            models_json.push(json!({
                "architecture": arch.as_str(),
                "model": m.kind.as_str(),
                "checkpoint": format!("models/{}.ckpt", m.kind.as_str()),
                "best_epoch": m.best_epoch,
                "best_dev_accuracy": log["best_dev_accuracy"],
            }));
        }
        for eval in evaluate_architecture(&trained, &parts.test, &featurizer)? {
            outputs.extend(write_evaluation(&eval, &metrics_dir, config.eval.normalize)?);
            log::info!("{}: test accuracy {:.4}", eval.name, eval.report.accuracy);
            reports.push((eval.name, eval.report));
        }
    }
    compare_architectures(&reports, &metrics_dir)?;
    outputs.push(metrics_dir.join("accuracy.csv"));
    outputs.push(metrics_dir.join("per_class_f1.csv"));

    let mut files = serde_json::Map::new();
    for p in &outputs {
        files.insert(relative(p, &out), json!(sha256_file(p)?));
    }
    let count = |q: QualityLabel| dataset.iter().filter(|r| r.quality == Some(q)).count();
    let manifest = json!({
        "tool": "transtech",
        "version": env!("CARGO_PKG_VERSION"),
        "checkpoint_version": crate::model::CHECKPOINT_VERSION,
        "config_sha256": config.fingerprint(),
        "seed": config.seed,
        "records": {
            "corpus": loaded.records.len(),
            "annotated": annotated.len(),
            "dataset": dataset.len(),
            "bad": count(QualityLabel::Bad),
            "good_lit": count(QualityLabel::GoodLit),
            "good_nonlit": count(QualityLabel::GoodNonlit),
            "train": parts.train.len(),
            "dev": parts.dev.len(),
            "test": parts.test.len(),
        },
        "models": models_json,
        "outputs": files,
        "warnings": warnings,
    });
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(PipelineOutcome {
        output_dir: out,
        manifest,
        reports,
        dev_accuracy,
        warnings,
    })
}
