//! The four classifier architectures.
//!
//! | Arch | Heads (arity)                          | Input           |
//! |------|----------------------------------------|-----------------|
//! | A1   | technique (10)                         | Input1          |
//! | A2   | technique (10) + technique (10)        | Input1 + Input2 |
//! | A3   | stage 1 quality (3), stage 2 technique (9), two models | Input2 |
//! | A4   | GOOD or one of 9 techniques (10)       | Input2          |
//!
//! A2's heads share one encoder and are trained on `α·L1 + β·L2`. A3's
//! first stage sorts records into `BAD`, `GOOD_LIT` and `GOOD_NONLIT`; only
//! `BAD` predictions reach the second stage.

mod checkpoint;
mod network;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_VERSION};
pub use network::{
    compare_gradients, forward, gradient_check, multitask_loss, softmax, Adam, EncoderParams,
    Example, HeadParams, Network,
};

use crate::corpus::{PairRecord, QualityLabel, TechniqueLabel};
use crate::encode::{FeatureConfig, Featurizer, InputFormat};
use crate::error::{Error, Result};
pub(crate) use network::derive_seed;

pub const DEFAULT_ALPHA: f64 = 0.8;
pub const DEFAULT_BETA: f64 = 0.2;
pub const GOOD: &str = "GOOD";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Architecture {
    A1,
    A2,
    A3,
    A4,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::A1,
        Architecture::A2,
        Architecture::A3,
        Architecture::A4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::A1 => "A1",
            Architecture::A2 => "A2",
            Architecture::A3 => "A3",
            Architecture::A4 => "A4",
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown architecture {s:?}")))
    }
}

/// One trainable network within an architecture.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    A1,
    A2,
    A3Stage1,
    A3Stage2,
    A4,
}

/// Ordered label list of one head.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMap(pub Vec<String>);

impl LabelMap {
    fn of<T: ToString>(labels: impl IntoIterator<Item = T>) -> Self {
        LabelMap(labels.into_iter().map(|l| l.to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.0.iter().position(|l| l == label)
    }

    pub fn label(&self, i: usize) -> &str {
        &self.0[i]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadSpec {
    pub name: String,
    pub input: InputFormat,
    pub labels: LabelMap,
}

fn technique_head(name: &str, input: InputFormat) -> HeadSpec {
    HeadSpec {
        name: name.into(),
        input,
        labels: LabelMap::of(TechniqueLabel::ALL),
    }
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::A1 => "A1",
            ModelKind::A2 => "A2",
            ModelKind::A3Stage1 => "A3.stage1",
            ModelKind::A3Stage2 => "A3.stage2",
            ModelKind::A4 => "A4",
        }
    }

    pub fn heads(self) -> Vec<HeadSpec> {
        match self {
            ModelKind::A1 => vec![technique_head("technique", InputFormat::Input1)],
            ModelKind::A2 => vec![
                technique_head("technique", InputFormat::Input1),
                technique_head("technique_bilingual", InputFormat::Input2),
            ],
            ModelKind::A3Stage1 => vec![HeadSpec {
                name: "quality".into(),
                input: InputFormat::Input2,
                labels: LabelMap::of(QualityLabel::ALL),
            }],
            ModelKind::A3Stage2 => vec![HeadSpec {
                name: "correction".into(),
                input: InputFormat::Input2,
                labels: LabelMap::of(TechniqueLabel::NON_LITERAL),
            }],
            ModelKind::A4 => vec![HeadSpec {
                name: "triage".into(),
                input: InputFormat::Input2,
                labels: LabelMap::of(std::iter::once(GOOD.to_string()).chain(
                    TechniqueLabel::NON_LITERAL.iter().map(|t| t.to_string()),
                )),
            }],
        }
    }

    /// Whether a record belongs to this model's training data. The
    /// technique-only models skip `BAD` twins and stage 2 sees only them.
    pub fn accepts(self, record: &PairRecord) -> bool {
        let bad = record.quality == Some(QualityLabel::Bad);
        match self {
            ModelKind::A1 | ModelKind::A2 => !bad,
            ModelKind::A3Stage2 => bad,
            ModelKind::A3Stage1 | ModelKind::A4 => true,
        }
    }

    /// Gold label string of every head.
    pub fn gold(self, record: &PairRecord) -> Result<Vec<String>> {
        let missing = |what: &str| Error::invalid(&record.id, format!("missing {what} label"));
        let technique = || record.technique.map(|t| t.to_string()).ok_or_else(|| missing("technique"));
        let quality = || record.quality.ok_or_else(|| missing("quality"));
        Ok(match self {
            ModelKind::A1 => vec![technique()?],
            ModelKind::A2 => vec![technique()?, technique()?],
            ModelKind::A3Stage1 => vec![quality()?.to_string()],
            ModelKind::A3Stage2 => vec![technique()?],
            ModelKind::A4 => {
                if quality()?.is_good() {
                    vec![GOOD.to_string()]
                } else {
                    vec![technique()?]
                }
            }
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub kind: Architecture,
    /// Loss weights `(α, β)`; used by A2 only.
    pub loss_weights: (f64, f64),
}

impl ArchitectureSpec {
    pub fn new(kind: Architecture) -> Self {
        ArchitectureSpec {
            kind,
            loss_weights: (DEFAULT_ALPHA, DEFAULT_BETA),
        }
    }

    pub fn with_loss_weights(kind: Architecture, alpha: f64, beta: f64) -> Result<Self> {
        let spec = ArchitectureSpec {
            kind,
            loss_weights: (alpha, beta),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `α + β = 1` within 1e-9 and `α > 0`. `β = 0` is accepted so that A2
    /// can reduce to A1.
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.loss_weights;
        if !(a > 0.0) || !(b >= 0.0) || ((a + b) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "loss weights ({a}, {b}) must be positive and sum to 1"
            )));
        }
        Ok(())
    }

    pub fn stages(&self) -> Vec<ModelKind> {
        match self.kind {
            Architecture::A1 => vec![ModelKind::A1],
            Architecture::A2 => vec![ModelKind::A2],
            Architecture::A3 => vec![ModelKind::A3Stage1, ModelKind::A3Stage2],
            Architecture::A4 => vec![ModelKind::A4],
        }
    }

    /// Head arities in stage order.
    pub fn head_arities(&self) -> Vec<usize> {
        self.stages()
            .into_iter()
            .flat_map(|k| k.heads())
            .map(|h| h.labels.len())
            .collect()
    }

    pub fn label_maps(&self) -> Vec<LabelMap> {
        self.stages()
            .into_iter()
            .flat_map(|k| k.heads())
            .map(|h| h.labels)
            .collect()
    }

    fn weights_for(&self, kind: ModelKind) -> Vec<f64> {
        match kind {
            ModelKind::A2 => vec![self.loss_weights.0, self.loss_weights.1],
            _ => vec![1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a dev-accuracy improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub l2: f64,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 32,
            max_epochs: 20,
            patience: 3,
            seed: 0,
            l2: 0.0,
            hidden: 32,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("adam betas must lie in [0, 1)");
        }
        if !(self.adam_eps > 0.0) {
            return bad("adam_eps must be positive");
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.hidden == 0 {
            return bad("batch_size, max_epochs and hidden must be positive");
        }
        if self.patience == 0 {
            return bad("patience must be positive");
        }
        if !(self.l2 >= 0.0) {
            return bad("l2 must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_accuracy: f64,
}

/// Outcome of [`fit`]: parameters of the best epoch and the full log.
#[derive(Clone, Debug, PartialEq)]
pub struct Fitted {
    pub network: Network,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// Accuracy of head 0 on `examples`.
pub fn head_accuracy(net: &Network, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for ex in examples {
        let p = forward(&net.encoder, &net.heads[0], &ex.inputs[0])?;
        if argmax(&p) == ex.labels[0] {
            correct += 1;
        }
    }
    Ok(correct as f64 / examples.len() as f64)
}

/// Mini-batch Adam with early stopping on `dev_metric(network, epoch)`.
///
/// Initialization, head `k` and the batch order use independent seeds
/// derived from `config.seed`, so adding a head leaves the others'
/// initialization untouched. Returns the parameters of the earliest epoch
/// with the highest metric.
pub fn fit(
    input_dim: usize,
    arities: &[usize],
    weights: &[f64],
    train: &[Example],
    config: &TrainConfig,
    mut dev_metric: impl FnMut(&Network, usize) -> Result<f64>,
) -> Result<Fitted> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut net = Network::init(input_dim, config.hidden, arities, config.seed);
    let mut grad = net.zeros_like();
    let mut adam = Adam::new(
        &net,
        config.learning_rate,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_eps,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, "shuffle", 0));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, Network)> = None;
    let mut since_best = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train[i]).collect();
            let loss = net.loss_and_grad(&batch, weights, config.l2, &mut grad)?;
            loss_sum += loss * batch.len() as f64;
            adam.update(&mut net, &grad);
        }
        let acc = dev_metric(&net, epoch)?;
        log.push(EpochLog {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            dev_accuracy: acc,
        });
        log::debug!("epoch {epoch}: dev accuracy {acc:.4}");
        if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
            best = Some((acc, epoch, net.clone()));
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }
    let (_, best_epoch, network) = best.expect("at least one epoch ran");
    Ok(Fitted {
        network,
        log,
        best_epoch,
    })
}

/// A trained network with everything needed to reproduce its inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub kind: ModelKind,
    pub spec: ArchitectureSpec,
    pub heads: Vec<HeadSpec>,
    pub feature_config: FeatureConfig,
    pub feature_fingerprint: String,
    pub train_config: TrainConfig,
    pub network: Network,
    pub log: Vec<EpochLog>,
    pub best_epoch: usize,
}

/// All trained models of one architecture; A3 has two.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainedArchitecture {
    pub spec: ArchitectureSpec,
    pub models: Vec<TrainedModel>,
}

pub struct Datasets<'a> {
    pub train: &'a [PairRecord],
    pub dev: &'a [PairRecord],
}

/// Encodes the records accepted by `kind`.
pub fn examples_for(kind: ModelKind, records: &[PairRecord], featurizer: &Featurizer) -> Result<Vec<Example>> {
    let heads = kind.heads();
    records
        .iter()
        .filter(|r| kind.accepts(r))
        .map(|r| {
            let gold = kind.gold(r)?;
            let mut labels = Vec::with_capacity(heads.len());
            let mut inputs = Vec::with_capacity(heads.len());
            for (head, g) in heads.iter().zip(&gold) {
                labels.push(head.labels.index(g).ok_or_else(|| Error::UnknownLabel {
                    label: g.clone(),
                    head: head.name.clone(),
                })?);
                inputs.push(featurizer.encode(r, head.input)?);
            }
            Ok(Example { inputs, labels })
        })
        .collect()
}

/// Trains one network of `spec`. The dev metric is head-0 accuracy on
/// `dev`, or on the training data when `dev` is empty.
pub fn train_model(
    spec: &ArchitectureSpec,
    kind: ModelKind,
    datasets: &Datasets,
    featurizer: &Featurizer,
    config: &TrainConfig,
) -> Result<TrainedModel> {
    spec.validate()?;
    let heads = kind.heads();
    let train = examples_for(kind, datasets.train, featurizer)?;
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let dev = examples_for(kind, datasets.dev, featurizer)?;
    if dev.is_empty() {
        log::warn!("{}: empty dev set, early stopping on training accuracy", kind.as_str());
    }
    let arities: Vec<usize> = heads.iter().map(|h| h.labels.len()).collect();
    let eval_set = if dev.is_empty() { &train } else { &dev };
    let fitted = fit(
        featurizer.dim(),
        &arities,
        &spec.weights_for(kind),
        &train,
        config,
        |net, _| head_accuracy(net, eval_set),
    )?;
    log::info!(
        "{}: {} examples, best epoch {} of {}",
        kind.as_str(),
        train.len(),
        fitted.best_epoch,
        fitted.log.len()
    );
    Ok(TrainedModel {
        kind,
        spec: *spec,
        heads,
        feature_config: featurizer.config,
        feature_fingerprint: featurizer.config.fingerprint(),
        train_config: *config,
        network: fitted.network,
        log: fitted.log,
        best_epoch: fitted.best_epoch,
    })
}

/// Trains every stage of `spec`.
pub fn train(
    spec: &ArchitectureSpec,
    datasets: &Datasets,
    featurizer: &Featurizer,
    config: &TrainConfig,
) -> Result<TrainedArchitecture> {
    let models = spec
        .stages()
        .into_iter()
        .map(|kind| train_model(spec, kind, datasets, featurizer, config))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainedArchitecture { spec: *spec, models })
}

/// Index of the largest entry; ties go to the smaller index.
pub fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate() {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub index: usize,
    pub label: String,
    pub probabilities: Vec<f64>,
}

impl TrainedModel {
    /// Prediction of head 0 from a precomputed feature vector.
    pub fn predict_features(&self, format: InputFormat, x: &crate::encode::FeatureVector) -> Result<Prediction> {
        let head = &self.heads[0];
        if format != head.input {
            return Err(Error::FormatMismatch {
                expected: head.input.to_string(),
                got: format.to_string(),
            });
        }
        let p = forward(&self.network.encoder, &self.network.heads[0], x)?;
        let index = argmax(&p);
        Ok(Prediction {
            index,
            label: head.labels.label(index).to_string(),
            probabilities: p,
        })
    }

    fn check_featurizer(&self, featurizer: &Featurizer) -> Result<()> {
        if featurizer.config.fingerprint() != self.feature_fingerprint {
            return Err(Error::FormatMismatch {
                expected: format!("feature layout {}", self.feature_fingerprint),
                got: format!("feature layout {}", featurizer.config.fingerprint()),
            });
        }
        Ok(())
    }
}

/// Predicts head 0 of `model` for a record encoded in the model's format.
pub fn predict(model: &TrainedModel, record: &PairRecord, featurizer: &Featurizer) -> Result<Prediction> {
    model.check_featurizer(featurizer)?;
    let format = model.heads[0].input;
    let x = featurizer.encode(record, format)?;
    model.predict_features(format, &x)
}

/// Anything that labels a record.
pub trait Classifier {
    fn classify(&self, record: &PairRecord) -> Result<Prediction>;
}

/// A model paired with the featurizer that produced its training inputs.
pub struct Bound<'a> {
    pub model: &'a TrainedModel,
    pub featurizer: &'a Featurizer<'a>,
}

impl Classifier for Bound<'_> {
    fn classify(&self, record: &PairRecord) -> Result<Prediction> {
        predict(self.model, record, self.featurizer)
    }
}

/// Stage 1 decides quality; `BAD` records get stage 2's technique.
pub fn predict_arch3<S1: Classifier + ?Sized, S2: Classifier + ?Sized>(
    stage1: &S1,
    stage2: &S2,
    record: &PairRecord,
) -> Result<String> {
    let quality = stage1.classify(record)?;
    match quality.label.parse::<QualityLabel>()? {
        QualityLabel::Bad => Ok(stage2.classify(record)?.label),
        good => Ok(good.to_string()),
    }
}

/// Gold label of a record under an architecture's final output.
pub fn gold_label(arch: Architecture, record: &PairRecord) -> Result<String> {
    Ok(match arch {
        Architecture::A1 => ModelKind::A1.gold(record)?.remove(0),
        Architecture::A2 => ModelKind::A2.gold(record)?.remove(0),
        Architecture::A4 => ModelKind::A4.gold(record)?.remove(0),
        Architecture::A3 => {
            let q = ModelKind::A3Stage1.gold(record)?.remove(0);
            if q == QualityLabel::Bad.to_string() {
                ModelKind::A3Stage2.gold(record)?.remove(0)
            } else {
                q
            }
        }
    })
}

/// Output label set of an architecture's final prediction.
pub fn output_labels(arch: Architecture) -> Vec<String> {
    match arch {
        Architecture::A3 => [QualityLabel::GoodLit, QualityLabel::GoodNonlit]
            .iter()
            .map(|q| q.to_string())
            .chain(TechniqueLabel::NON_LITERAL.iter().map(|t| t.to_string()))
            .collect(),
        Architecture::A1 | Architecture::A2 => ModelKind::A1.heads()[0].labels.0.clone(),
        Architecture::A4 => ModelKind::A4.heads()[0].labels.0.clone(),
    }
}

impl TrainedArchitecture {
    /// Final label for one record.
    pub fn predict_label(&self, record: &PairRecord, featurizer: &Featurizer) -> Result<String> {
        match self.spec.kind {
            Architecture::A3 => {
                let s1 = Bound { model: &self.models[0], featurizer };
                let s2 = Bound { model: &self.models[1], featurizer };
                predict_arch3(&s1, &s2, record)
            }
            _ => Ok(predict(&self.models[0], record, featurizer)?.label),
        }
    }

    /// Records the architecture's final prediction is evaluated on: A1 and
    /// A2 skip `BAD` twins.
    pub fn evaluates(&self, record: &PairRecord) -> bool {
        self.models[0].kind.accepts(record) || self.spec.kind == Architecture::A3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::FeatureVector;
    use std::cell::Cell;

    #[test]
    fn head_arities_per_architecture() {
        let ar = |k| ArchitectureSpec::new(k).head_arities();
        assert_eq!(ar(Architecture::A1), vec![10]);
        assert_eq!(ar(Architecture::A2), vec![10, 10]);
        assert_eq!(ar(Architecture::A3), vec![3, 9]);
        assert_eq!(ar(Architecture::A4), vec![10]);
        assert_eq!(ModelKind::A4.heads()[0].labels.label(0), GOOD);
        assert_eq!(ModelKind::A3Stage1.heads()[0].labels.0, vec!["BAD", "GOOD_LIT", "GOOD_NONLIT"]);
    }

    #[test]
    fn loss_weight_validation() {
        assert!(ArchitectureSpec::with_loss_weights(Architecture::A2, 0.8, 0.2).is_ok());
        assert!(ArchitectureSpec::with_loss_weights(Architecture::A2, 1.0, 0.0).is_ok());
        assert!(ArchitectureSpec::with_loss_weights(Architecture::A2, 0.8, 0.3).is_err());
        assert!(ArchitectureSpec::with_loss_weights(Architecture::A2, 0.0, 1.0).is_err());
        assert_eq!("a3".parse::<Architecture>().unwrap(), Architecture::A3);
        assert!("a5".parse::<Architecture>().is_err());
    }

    #[test]
    fn argmax_ties_to_smaller_index() {
        assert_eq!(argmax(&[0.1; 10]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    /// Two classes split by `x0 > 0` with margin 1.
    fn separable(n: usize) -> Vec<Example> {
        (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                let class = i % 2;
                let x0 = if class == 0 { 1.0 + t } else { -1.0 - t };
                let x1 = (i as f64 * 0.37).sin();
                Example {
                    inputs: vec![FeatureVector::from_dense(&[x0, x1])],
                    labels: vec![class * 7],
                }
            })
            .collect()
    }

    #[test]
    fn separable_set_is_learned() {
        let data = separable(200);
        // one-feature threshold oracle
        assert!(data.iter().all(|e| (e.inputs[0].get(0) > 0.0) == (e.labels[0] == 0)));
        let cfg = TrainConfig {
            learning_rate: 0.01,
            max_epochs: 50,
            patience: 50,
            hidden: 8,
            ..Default::default()
        };
        let fitted = fit(2, &[10], &[1.0], &data, &cfg, |net, _| head_accuracy(net, &data)).unwrap();
        assert!(head_accuracy(&fitted.network, &data).unwrap() >= 0.99);
        let held_out = FeatureVector::from_dense(&[2.5, 0.0]);
        let p = forward(&fitted.network.encoder, &fitted.network.heads[0], &held_out).unwrap();
        assert_eq!(argmax(&p), 0);
    }

    #[test]
    fn early_stopping_returns_peak() {
        let data = separable(20);
        let cfg = TrainConfig {
            max_epochs: 10,
            patience: 2,
            hidden: 4,
            ..Default::default()
        };
        let curve = [0.2, 0.5, 0.9, 0.6, 0.7, 0.95];
        let mut snapshots = Vec::new();
        let fitted = fit(2, &[10], &[1.0], &data, &cfg, |net, epoch| {
            snapshots.push(net.clone());
            Ok(curve[epoch - 1])
        })
        .unwrap();
        assert_eq!(fitted.best_epoch, 3);
        assert_eq!(fitted.log.len(), 5);
        assert_eq!(fitted.network, snapshots[2]);
    }

    #[test]
    fn two_heads_with_zero_beta_match_one_head() {
        let data = separable(64);
        let paired: Vec<Example> = data
            .iter()
            .map(|e| Example {
                inputs: vec![e.inputs[0].clone(), FeatureVector::from_dense(&[0.3, -0.2])],
                labels: vec![e.labels[0], 4],
            })
            .collect();
        let cfg = TrainConfig {
            max_epochs: 5,
            hidden: 6,
            l2: 1e-3,
            ..Default::default()
        };
        let one = fit(2, &[10], &[1.0], &data, &cfg, |net, _| head_accuracy(net, &data)).unwrap();
        let two = fit(2, &[10, 10], &[1.0, 0.0], &paired, &cfg, |net, _| head_accuracy(net, &paired)).unwrap();
        assert_eq!(one.network.encoder, two.network.encoder);
        assert_eq!(one.network.heads[0], two.network.heads[0]);
        assert_eq!(one.best_epoch, two.best_epoch);
    }

    #[test]
    fn fit_is_deterministic() {
        let data = separable(50);
        let cfg = TrainConfig { max_epochs: 3, hidden: 4, ..Default::default() };
        let a = fit(2, &[10], &[1.0], &data, &cfg, |n, _| head_accuracy(n, &data)).unwrap();
        let b = fit(2, &[10], &[1.0], &data, &cfg, |n, _| head_accuracy(n, &data)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_training_set() {
        let cfg = TrainConfig::default();
        assert!(matches!(
            fit(2, &[10], &[1.0], &[], &cfg, |_, _| Ok(0.0)),
            Err(Error::Empty(_))
        ));
    }

    struct Fixed {
        label: &'static str,
        calls: Cell<usize>,
    }

    impl Classifier for Fixed {
        fn classify(&self, _: &PairRecord) -> Result<Prediction> {
            self.calls.set(self.calls.get() + 1);
            Ok(Prediction {
                index: 0,
                label: self.label.into(),
                probabilities: vec![1.0],
            })
        }
    }

    fn dummy() -> PairRecord {
        crate::corpus::from_json_line(
            r#"{"id":"d","src_tokens":[{"surface":"dog","pos":"NOUN"}],"tgt_tokens":[{"surface":"狗","pos":"NOUN"}],"src_span":[0,1],"tgt_span":[0,1]}"#,
        )
        .unwrap()
    }

    #[test]
    fn arch3_routing() {
        let s2 = Fixed { label: "MOD", calls: Cell::new(0) };
        let good = Fixed { label: "GOOD_LIT", calls: Cell::new(0) };
        assert_eq!(predict_arch3(&good, &s2, &dummy()).unwrap(), "GOOD_LIT");
        assert_eq!(s2.calls.get(), 0);
        let bad = Fixed { label: "BAD", calls: Cell::new(0) };
        assert_eq!(predict_arch3(&bad, &s2, &dummy()).unwrap(), "MOD");
        assert_eq!(s2.calls.get(), 1);
    }
}
