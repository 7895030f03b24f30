//! Run configuration, read from TOML. Every key is optional; unknown keys
//! are rejected.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotate::{Thresholds, DEFAULT_THETA_LOW, DEFAULT_THETA_SIM};
use crate::corpus::SplitRatios;
use crate::encode::FeatureConfig;
use crate::error::{Error, Result};
use crate::eval::Normalize;
use crate::model::{Architecture, ArchitectureSpec, TrainConfig, DEFAULT_ALPHA, DEFAULT_BETA};
use crate::synthesize::DEFAULT_BAD_FRACTION;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Source of all randomness in a run.
    pub seed: u64,
    pub paths: PathsConfig,
    pub align: AlignConfig,
    pub annotate: AnnotateConfig,
    pub synthesize: SynthesizeConfig,
    pub split: SplitConfig,
    pub features: FeatureConfig,
    pub train: TrainSection,
    pub model: ModelConfig,
    pub eval: EvalConfig,
}

/// Paths are resolved against the working directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    pub corpus: PathBuf,
    pub resources: PathBuf,
    /// Sentence pairs for the lexical model; the corpus sentences when unset.
    pub bitext: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub output: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            corpus: "corpus.jsonl".into(),
            resources: "resources".into(),
            bitext: None,
            embeddings: None,
            output: "out".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlignMethod {
    Em,
    Embed,
    /// Links found by both aligners.
    Intersect,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlignConfig {
    pub method: AlignMethod,
    pub iterations: usize,
    pub threshold: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        AlignConfig {
            method: AlignMethod::Em,
            iterations: 10,
            threshold: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnnotateConfig {
    pub theta_sim: f64,
    pub theta_low: f64,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        AnnotateConfig {
            theta_sim: DEFAULT_THETA_SIM,
            theta_low: DEFAULT_THETA_LOW,
        }
    }
}

impl AnnotateConfig {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds {
            theta_sim: self.theta_sim,
            theta_low: self.theta_low,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesizeConfig {
    pub bad_fraction: f64,
    /// Skip twins when a content word has no gloss.
    pub require_full_gloss: bool,
}

impl Default for SynthesizeConfig {
    fn default() -> Self {
        SynthesizeConfig {
            bad_fraction: DEFAULT_BAD_FRACTION,
            require_full_gloss: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// Train, dev and test shares.
    pub ratios: [f64; 3],
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            ratios: [0.81, 0.09, 0.10],
        }
    }
}

impl SplitConfig {
    pub fn ratios(&self) -> Result<SplitRatios> {
        let [a, b, c] = self.ratios;
        SplitRatios::new(a, b, c)
    }
}

/// [`TrainConfig`] minus the seed, which comes from the top level.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub l2: f64,
    pub hidden: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        TrainSection {
            learning_rate: d.learning_rate,
            adam_beta1: d.adam_beta1,
            adam_beta2: d.adam_beta2,
            adam_eps: d.adam_eps,
            batch_size: d.batch_size,
            max_epochs: d.max_epochs,
            patience: d.patience,
            l2: d.l2,
            hidden: d.hidden,
        }
    }
}

impl TrainSection {
    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed,
            l2: self.l2,
            hidden: self.hidden,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub architectures: Vec<Architecture>,
    /// A2 loss weight of the source-only head.
    pub alpha: f64,
    /// A2 loss weight of the bilingual head.
    pub beta: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            architectures: Architecture::ALL.to_vec(),
            alpha: DEFAULT_ALPHA,
            beta: DEFAULT_BETA,
        }
    }
}

impl ModelConfig {
    pub fn spec(&self, arch: Architecture) -> Result<ArchitectureSpec> {
        ArchitectureSpec::with_loss_weights(arch, self.alpha, self.beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Normalization of exported confusion matrices.
    pub normalize: Normalize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            normalize: Normalize::Row,
        }
    }
}

/// Seeds of the individual stages, all derived from [`RunConfig::seed`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageSeeds {
    pub synthesize: u64,
    pub split: u64,
    pub train: u64,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let config = |e: Error| Error::Config(e.to_string());
        if self.align.iterations == 0 {
            return Err(Error::Config("align.iterations must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.align.threshold) {
            return Err(Error::Config("align.threshold must lie in [0, 1]".into()));
        }
        self.annotate.thresholds().validate().map_err(config)?;
        if !(0.0..=1.0).contains(&self.synthesize.bad_fraction) {
            return Err(Error::Config("synthesize.bad_fraction must lie in [0, 1]".into()));
        }
        self.split.ratios().map_err(config)?;
        self.features.validate().map_err(config)?;
        self.train.with_seed(self.seed).validate()?;
        if self.model.architectures.is_empty() {
            return Err(Error::Config("model.architectures is empty".into()));
        }
        self.model.spec(Architecture::A2).map_err(config)?;
        if self.features.use_embeddings && self.paths.embeddings.is_none() {
            return Err(Error::Config("features.use_embeddings needs paths.embeddings".into()));
        }
        Ok(())
    }

    /// Canonical TOML rendering of the resolved configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of [`RunConfig::to_toml`], ignoring `paths.output`.
    pub fn fingerprint(&self) -> String {
        let mut cfg = self.clone();
        cfg.paths.output = PathBuf::new();
        hex::encode(Sha256::digest(cfg.to_toml().as_bytes()))
    }

    pub fn seeds(&self) -> StageSeeds {
        StageSeeds {
            synthesize: crate::model::derive_seed(self.seed, "synthesize", 0),
            split: crate::model::derive_seed(self.seed, "split", 0),
            train: crate::model::derive_seed(self.seed, "train", 0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.split.ratios, [0.81, 0.09, 0.10]);
        assert_eq!(cfg.model.architectures.len(), 4);
    }

    #[test]
    fn unknown_keys_fail() {
        for doc in ["sede = 1", "[train]\nlr = 0.1", "[paths]\ncorpuss = \"x\"", "[bogus]"] {
            let err = RunConfig::parse(doc).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{doc}: {err}");
        }
    }

    #[test]
    fn invalid_values_fail() {
        for doc in [
            "[split]\nratios = [0.5, 0.5, 0.5]",
            "[model]\nalpha = 0.9\nbeta = 0.2",
            "[features]\nhash_dim = 1000",
            "[align]\nthreshold = 1.5",
            "[train]\nbatch_size = 0",
            "[features]\nuse_embeddings = true\nembedding_dim = 4",
        ] {
            assert!(RunConfig::parse(doc).is_err(), "{doc}");
        }
    }

    #[test]
    fn round_trip_and_fingerprint() {
        let cfg = RunConfig::parse("seed = 3\n[model]\narchitectures = [\"A3\"]\n[align]\nmethod = \"intersect\"").unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(cfg.fingerprint().len(), 64);
        assert_ne!(cfg.fingerprint(), RunConfig::default().fingerprint());
        let s = cfg.seeds();
        assert!(s.split != s.train && s.train != s.synthesize);
    }

    #[test]
    fn demo_config_parses() {
        RunConfig::parse(crate::demo::DEMO_CONFIG).unwrap();
    }
}
