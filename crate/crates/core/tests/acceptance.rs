//! Acceptance criteria, one line each. Exits non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use transtech::align::{embed_align, lexical_align, load_bitext, train_lexical_model, train_lexical_model_traced, EmbeddingTable};
use transtech::annotate::{annotate_corpus, RuleResources};
use transtech::corpus::{
    load_corpus, split, AlignedUnit, Format, Lang, PairRecord, QualityLabel, Sentence, Span,
    SplitRatios, TechniqueLabel, Token,
};
use transtech::demo::generate_records;
use transtech::encode::{FeatureConfig, FeatureVector, Featurizer};
use transtech::eval::{evaluate, f1, heatmap_export, MetricsReport, Normalize};
use transtech::model::{
    fit, gradient_check, head_accuracy, multitask_loss, predict_arch3, save_checkpoint, train_model,
    Architecture, ArchitectureSpec, Classifier, Datasets, Example, ModelKind, Network, Prediction,
    TrainConfig,
};
use transtech::synthesize::{build_pe_dataset, SynthesisConfig};

type Outcome = Result<String, String>;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Counting<'a> {
    label: &'a str,
    calls: std::cell::Cell<usize>,
}

impl Classifier for Counting<'_> {
    fn classify(&self, _: &PairRecord) -> transtech::Result<Prediction> {
        self.calls.set(self.calls.get() + 1);
        Ok(Prediction {
            index: 0,
            label: self.label.to_string(),
            probabilities: vec![1.0],
        })
    }
}

fn random_batch(heads: usize, n: usize) -> Vec<Example> {
    (0..n)
        .map(|i| Example {
            inputs: (0..heads)
                .map(|h| {
                    let v: Vec<f64> = (0..6).map(|j| ((i * 7 + j * 3 + h) as f64 * 0.61).sin()).collect();
                    FeatureVector::from_dense(&v)
                })
                .collect(),
            labels: (0..heads).map(|h| (i * 3 + h) % 10).collect(),
        })
        .collect()
}

fn architecture_fidelity() -> Outcome {
    let arities: Vec<Vec<usize>> = Architecture::ALL
        .iter()
        .map(|a| ArchitectureSpec::new(*a).head_arities())
        .collect();
    check(
        arities == vec![vec![10], vec![10, 10], vec![3, 9], vec![10]],
        format!("arities {arities:?}"),
    )?;
    let spec = ArchitectureSpec::with_loss_weights(Architecture::A2, 0.8, 0.2).map_err(err)?;
    check(spec.loss_weights == (0.8, 0.2), "A2 default weights")?;
    let net = Network::init(6, 5, &[10, 10], 11);
    let batch = random_batch(2, 9);
    let refs: Vec<&Example> = batch.iter().collect();
    let heads = net.head_losses(&refs).map_err(err)?;
    let combined = net.loss(&refs, &[0.8, 0.2], 0.0).map_err(err)?;
    let formula = multitask_loss(heads[0], heads[1], 0.8, 0.2).map_err(err)?;
    check(
        (combined - formula).abs() <= 4.0 * f64::EPSILON * formula.abs(),
        format!("loss {combined} vs {formula}"),
    )?;
    let record = generate_records(1, 0).remove(0);
    for good in ["GOOD_LIT", "GOOD_NONLIT"] {
        let s1 = Counting { label: good, calls: 0.into() };
        let s2 = Counting { label: "MOD", calls: 0.into() };
        let out = predict_arch3(&s1, &s2, &record).map_err(err)?;
        check(out == good && s2.calls.get() == 0, "stage 2 ran on a GOOD prediction")?;
    }
    let s1 = Counting { label: "BAD", calls: 0.into() };
    let s2 = Counting { label: "MOD", calls: 0.into() };
    check(predict_arch3(&s1, &s2, &record).map_err(err)? == "MOD" && s2.calls.get() == 1, "BAD not routed")?;
    Ok(format!("arities {arities:?}; A2 loss matches to {:.1e}", (combined - formula).abs()))
}

fn record(i: usize, technique: TechniqueLabel, quality: QualityLabel) -> PairRecord {
    let tok = |s: &str| Token::new(s, transtech::corpus::Pos::Noun);
    PairRecord {
        id: format!("r{i}"),
        source: Sentence::new(vec![tok("dog")], Lang::En),
        target: Sentence::new(vec![tok("狗")], Lang::Zh),
        unit: AlignedUnit {
            source: Some(Span::new(0, 1).unwrap()),
            target: Some(Span::new(0, 1).unwrap()),
        },
        technique: Some(technique),
        quality: Some(quality),
    }
}

fn split_reproduction() -> Outcome {
    let mut records = Vec::with_capacity(86208);
    for i in 0..86208 {
        let t = TechniqueLabel::ALL[i % 10];
        let q = if t == TechniqueLabel::Lit {
            QualityLabel::GoodLit
        } else if i % 3 == 0 {
            QualityLabel::Bad
        } else {
            QualityLabel::GoodNonlit
        };
        records.push(record(i, t, q));
    }
    let ratios = SplitRatios::new(0.81, 0.09, 0.10).map_err(err)?;
    let parts = split(&records, ratios, 42).map_err(err)?;
    let sizes = [parts.train.len(), parts.dev.len(), parts.test.len()];
    let target = [69828usize, 7759, 8621];
    check(
        sizes.iter().zip(target).all(|(a, b)| a.abs_diff(b) <= 1),
        format!("sizes {sizes:?}"),
    )?;
    Ok(format!("sizes {sizes:?}"))
}

fn pair(src: &str, tgt: &str) -> (Sentence, Sentence) {
    (Sentence::parse_tagged(src, Lang::En), Sentence::parse_tagged(tgt, Lang::Zh))
}

fn em_aligner() -> Outcome {
    let bitext = load_bitext(&data().join("toy/bitext.tsv")).map_err(err)?;
    let (table, trace) = train_lexical_model_traced(&bitext, 10).map_err(err)?;
    check(trace.windows(2).all(|w| w[1] >= w[0] - 1e-9), format!("log-likelihood fell: {trace:?}"))?;
    check(table.max_row_deviation() <= 1e-9, "rows do not sum to 1")?;
    // exact rational EM values for the two-sentence corpus after 5 iterations
    let table = train_lexical_model(&[pair("dog runs", "狗 跑"), pair("cat runs", "猫 跑")], 5).map_err(err)?;
    let oracle = [
        ("dog", "狗", 640.0 / 847.0),
        ("dog", "跑", 207.0 / 847.0),
        ("runs", "跑", 207.0 / 247.0),
        ("runs", "狗", 20.0 / 247.0),
        ("runs", "猫", 20.0 / 247.0),
        ("cat", "猫", 640.0 / 847.0),
    ];
    for (s, t, p) in oracle {
        check((table.prob(s, t) - p).abs() <= 1e-9, format!("t({t}|{s}) = {} vs {p}", table.prob(s, t)))?;
    }
    let (_, ll) = train_lexical_model_traced(&[pair("dog runs", "狗 跑"), pair("cat runs", "猫 跑")], 2).map_err(err)?;
    let ll_oracle = [-3.5018749494155994, -3.347952867143343, -3.235269359276558];
    check(
        ll.iter().zip(ll_oracle).all(|(a, b)| (a - b).abs() <= 1e-9),
        format!("log-likelihood {ll:?}"),
    )?;
    let runs = lexical_align(&bitext[0].0, &bitext[0].1, &table, 0.5).map_err(err)?;
    check(runs.target_of(1) == Some(1), "runs does not link to 跑")?;
    let emb = EmbeddingTable::load(&data().join("toy/embeddings_2x2.txt")).map_err(err)?;
    let two = load_bitext(&data().join("toy/pair_2x2.tsv")).map_err(err)?;
    let a = embed_align(&two[0].0, &two[0].1, &emb, 0.5).map_err(err)?;
    check(a.links == vec![(0, 1), (1, 0)], format!("2x2 links {:?}", a.links))?;
    Ok(format!("10 iterations monotone (ll {:.4} -> {:.4}); oracle table matches", trace[0], trace[10]))
}

fn technique_f1(gold: &[String], pred: &[String], label: &str) -> Result<f64, String> {
    let mut labels: Vec<String> = gold.iter().chain(pred).cloned().collect();
    labels.sort();
    labels.dedup();
    let r = evaluate(gold, pred, &labels).map_err(err)?;
    Ok(r.class(label).map(|c| c.f1).unwrap_or(f64::NAN))
}

fn golden_suite() -> Outcome {
    let dir = data().join("golden");
    let res = RuleResources::load_dir(&dir.join("resources")).map_err(err)?;
    let suite = load_corpus(&dir.join("suite.tsv"), Format::Tsv).map_err(err)?.into_strict(&dir).map_err(err)?;
    check(suite.len() >= 30, "suite too small")?;
    for t in TechniqueLabel::ALL {
        let n = suite.iter().filter(|r| r.technique == Some(t)).count();
        check(n >= 3, format!("only {n} {t} pairs"))?;
    }
    let (labeled, report) = annotate_corpus(&suite, &res);
    check(report.errors.is_empty(), format!("unlabelable: {:?}", report.errors))?;
    let gold: Vec<String> = suite.iter().map(|r| r.technique.unwrap().to_string()).collect();
    let pred: Vec<String> = labeled.iter().map(|r| r.technique.unwrap().to_string()).collect();
    let agree = gold.iter().zip(&pred).filter(|(a, b)| a == b).count();
    check(agree == suite.len(), format!("{agree}/{} agree", suite.len()))?;

    let demo = load_corpus(&data().join("demo/corpus.jsonl"), Format::Jsonl).map_err(err)?.records;
    let demo_res = RuleResources::load_dir(&data().join("demo/resources")).map_err(err)?;
    let (demo_labeled, _) = annotate_corpus(&demo, &demo_res);
    check(demo_labeled.len() == demo.len(), "demo records unlabelable")?;
    let dg: Vec<String> = demo.iter().map(|r| r.technique.unwrap().to_string()).collect();
    let dp: Vec<String> = demo_labeled.iter().map(|r| r.technique.unwrap().to_string()).collect();
    let mut scores = Vec::new();
    for (g, p) in [(&gold, &pred), (&dg, &dp)] {
        for label in ["EXP", "RED"] {
            let f = technique_f1(g, p, label)?;
            check(f == 1.0, format!("{label} F1 {f}"))?;
            scores.push(f);
        }
    }
    Ok(format!("{agree}/{} golden pairs agree; EXP/RED F1 = 1.0 on golden and demo corpora", suite.len()))
}

fn separable(n: usize) -> Vec<Example> {
    (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let class = i % 2;
            let x0 = if class == 0 { 1.0 + t } else { -1.0 - t };
            Example {
                inputs: vec![FeatureVector::from_dense(&[x0, (i as f64 * 0.37).sin()])],
                labels: vec![class * 7],
            }
        })
        .collect()
}

fn training_correctness() -> Outcome {
    let one = random_batch(1, 8);
    let two = random_batch(2, 8);
    let r1: Vec<&Example> = one.iter().collect();
    let r2: Vec<&Example> = two.iter().collect();
    let e1 = gradient_check(&Network::init(6, 5, &[10], 1), &r1, &[1.0], 0.0, 1e-5).map_err(err)?;
    let e2 = gradient_check(&Network::init(6, 5, &[10, 10], 2), &r2, &[0.8, 0.2], 0.0, 1e-5).map_err(err)?;
    check(e1 <= 1e-4 && e2 <= 1e-4, format!("gradient errors {e1:.2e} {e2:.2e}"))?;

    let data = separable(200);
    let cfg = TrainConfig {
        learning_rate: 0.01,
        max_epochs: 50,
        patience: 50,
        hidden: 8,
        ..Default::default()
    };
    let fitted = fit(2, &[10], &[1.0], &data, &cfg, |n, _| head_accuracy(n, &data)).map_err(err)?;
    let acc = head_accuracy(&fitted.network, &data).map_err(err)?;
    check(acc >= 0.99, format!("separable train accuracy {acc}"))?;

    let records = generate_records(300, 3);
    let res = transtech::demo::demo_resources();
    let (labeled, _) = annotate_corpus(&records, &res);
    let (dataset, _) = build_pe_dataset(&labeled, &res, None, &SynthesisConfig::default()).map_err(err)?;
    let featurizer = Featurizer::new(&res, FeatureConfig { hash_dim: 256, ..Default::default() });
    let tc = TrainConfig { max_epochs: 3, hidden: 8, seed: 9, ..Default::default() };
    let spec = ArchitectureSpec::new(Architecture::A2);
    let dir = tempfile::tempdir().map_err(err)?;
    let mut bytes = Vec::new();
    for k in 0..2 {
        let datasets = Datasets { train: &dataset, dev: &[] };
        let m = train_model(&spec, ModelKind::A2, &datasets, &featurizer, &tc).map_err(err)?;
        let p = dir.path().join(format!("{k}.ckpt"));
        save_checkpoint(&m, &p).map_err(err)?;
        bytes.push(fs::read(&p).map_err(err)?);
    }
    check(bytes[0] == bytes[1], "checkpoints differ across runs")?;
    Ok(format!("grad err A1 {e1:.1e}, A2 {e2:.1e}; separable acc {acc:.3}; checkpoints identical"))
}

fn metrics_oracle() -> Outcome {
    let r = evaluate(&["A", "A", "B", "B"], &["A", "B", "B", "B"], &["A", "B"]).map_err(err)?;
    let a = r.class("A").unwrap();
    let b = r.class("B").unwrap();
    check(r.accuracy == 0.75, "accuracy")?;
    check((a.precision, a.recall, a.f1) == (1.0, 0.5, 2.0 / 3.0), format!("A {a:?}"))?;
    check((b.precision, b.recall, b.f1) == (2.0 / 3.0, 1.0, 0.8), format!("B {b:?}"))?;
    check(f1(2, 1, 1) == 2.0 / 3.0, "F1(2,1,1)")?;
    check(r.confusion.counts == vec![vec![1, 1], vec![0, 2]], "rows must be gold, columns predicted")?;
    let golds = ["LIT", "LIT", "MOD", "TRA", "TRA", "TRA", "MOD"];
    let preds = ["LIT", "MOD", "MOD", "TRA", "LIT", "MOD", "MOD"];
    let rep = evaluate(&golds, &preds, &["LIT", "MOD", "TRA"]).map_err(err)?;
    for row in rep.confusion.row_normalized() {
        let s: f64 = row.iter().sum();
        check((s - 1.0).abs() <= 1e-9, format!("row sums to {s}"))?;
    }
    let dir = tempfile::tempdir().map_err(err)?;
    let p = dir.path().join("cm.csv");
    heatmap_export(&r.confusion, &p, Normalize::None).map_err(err)?;
    let csv = fs::read_to_string(&p).map_err(err)?;
    // the A->B error is a false negative of A (row A) and a false positive of B (column B)
    check(csv == "gold\\predicted,A,B\nA,1,1\nB,0,2\n", csv.clone())?;
    heatmap_export(&rep.confusion, &p, Normalize::Row).map_err(err)?;
    let csv = fs::read_to_string(&p).map_err(err)?;
    for line in csv.lines().skip(1) {
        let s: f64 = line.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).sum();
        check((s - 1.0).abs() <= 1e-5, format!("CSV row {line}"))?;
    }
    Ok("4-record case exact; F1(2,1,1) = 2/3; heatmap rows sum to 1".into())
}

fn run_pipeline_cli(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_transtech"))
        .arg("--workdir")
        .arg(data().join("demo"))
        .args(["--config", "pipeline.toml", "pipeline", "--output"])
        .arg(out)
        .output()
        .map_err(err)?;
    match status.status.code() {
        Some(0) | Some(1) => Ok(()),
        c => Err(format!("pipeline exit {c:?}: {}", String::from_utf8_lossy(&status.stderr))),
    }
}

fn end_to_end(out: &Path) -> Outcome {
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).map_err(err)?).map_err(err)?;
    let n = manifest["records"]["dataset"].as_u64().unwrap_or(0);
    check((4000..=6000).contains(&n), format!("dataset has {n} records"))?;
    let report = |name: &str| -> Result<MetricsReport, String> {
        let text = fs::read_to_string(out.join(format!("metrics/{name}.json"))).map_err(err)?;
        serde_json::from_str(&text).map_err(err)
    };
    for a in Architecture::ALL {
        report(a.as_str())?;
    }
    let stage1_dev = manifest["models"]
        .as_array()
        .and_then(|m| m.iter().find(|m| m["model"] == "A3.stage1"))
        .and_then(|m| m["best_dev_accuracy"].as_f64())
        .ok_or("no A3.stage1 dev accuracy")?;
    check(stage1_dev >= 0.85, format!("A3 stage-1 dev accuracy {stage1_dev}"))?;
    let good = report("A4")?.class("GOOD").map(|c| c.f1).ok_or("no GOOD class")?;
    check(good >= 0.85, format!("A4 GOOD F1 {good}"))?;
    Ok(format!("{n} records; A3 stage-1 dev acc {stage1_dev:.4}; A4 GOOD F1 {good:.4}"))
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let mut names: Vec<String> = fs::read_dir(a.join("metrics"))
        .map_err(err)?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    check(!names.is_empty(), "no metrics files")?;
    for name in &names {
        let x = fs::read(a.join("metrics").join(name)).map_err(err)?;
        let y = fs::read(b.join("metrics").join(name)).map_err(err)?;
        check(x == y, format!("{name} differs"))?;
    }
    let m = |d: &Path| fs::read(d.join("manifest.json")).map_err(err);
    check(m(a)? == m(b)?, "manifests differ")?;
    Ok(format!("{} metrics files byte-identical", names.len()))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let runs = [dir.path().join("run1"), dir.path().join("run2")];
    let mut pipeline: Result<(), String> = Ok(());
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    let mut time = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let r = f();
        results.push((name, r, t.elapsed().as_secs_f64()));
    };
    time("1 architecture fidelity", &mut architecture_fidelity);
    time("2 split reproduction", &mut split_reproduction);
    time("3 EM aligner", &mut em_aligner);
    time("4 annotator golden suite", &mut golden_suite);
    time("5 training correctness", &mut training_correctness);
    time("6 metrics oracle", &mut metrics_oracle);
    time("7 end-to-end demo", &mut || {
        pipeline = run_pipeline_cli(&runs[0]);
        pipeline.clone()?;
        end_to_end(&runs[0])
    });
    time("8 determinism", &mut || {
        pipeline.clone()?;
        run_pipeline_cli(&runs[1])?;
        determinism(&runs[0], &runs[1])
    });
    let mut failed = 0;
    for (name, r, secs) in &results {
        match r {
            Ok(detail) => println!("PASS  criterion {name} ({secs:.1}s): {detail}"),
            Err(e) => {
                failed += 1;
                println!("FAIL  criterion {name} ({secs:.1}s): {e}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
