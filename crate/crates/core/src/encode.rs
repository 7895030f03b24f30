//! Classifier inputs: the two token layouts and their feature vectors.
//!
//! * Input1 (source only): `unit [SEP] sentence`.
//! * Input2 (bilingual): `src unit [SEP] src sentence [SEP] tgt unit [SEP] tgt sentence`.
//!
//! An empty unit is written as the `[EMPTY]` placeholder.
//!
//! Every feature vector has the same layout for a given [`FeatureConfig`]:
//!
//! 1. four hashed n-gram blocks of `hash_dim` buckets each, for the source
//!    unit, source sentence, target unit and target sentence;
//! 2. a dense block of [`DENSE_LEN`] linguistic features, source-side
//!    features first;
//! 3. optionally four mean-embedding blocks of `embedding_dim`, one per
//!    segment.
//!
//! Input1 vectors are computed from the source sentence and span alone, so
//! all target blocks are zero.
//!
//! N-grams are hashed with 64-bit FNV-1a started from [`HASH_SEED`] and
//! reduced modulo `hash_dim`. Source tokens are lower-cased first.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::EmbeddingTable;
use crate::annotate::{head, Inflection, MarkerList, PairFacts, RuleResources};
use crate::corpus::{PairRecord, Pos, Sentence, Span, Token};
use crate::error::{Error, Result};

pub const SEP: &str = "[SEP]";
pub const EMPTY_UNIT: &str = "[EMPTY]";
pub const HASH_SEED: u64 = 0x7472_616e_7374_6563;
pub const DEFAULT_HASH_DIM: usize = 1 << 14;

const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

/// Number of source-side dense features.
pub const DENSE_SOURCE_LEN: usize = 23;
/// Number of dense features that need the target side.
pub const DENSE_BILINGUAL_LEN: usize = 29;
pub const DENSE_LEN: usize = DENSE_SOURCE_LEN + DENSE_BILINGUAL_LEN;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InputFormat {
    #[serde(rename = "INPUT1")]
    Input1,
    #[serde(rename = "INPUT2")]
    Input2,
}

impl std::fmt::Display for InputFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InputFormat::Input1 => "INPUT1",
            InputFormat::Input2 => "INPUT2",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedInput {
    pub format: InputFormat,
    pub tokens: Vec<String>,
}

impl EncodedInput {
    pub fn separators(&self) -> usize {
        self.tokens.iter().filter(|t| *t == SEP).count()
    }
}

fn unit_tokens(sentence: &Sentence, span: Option<Span>) -> Vec<String> {
    match span {
        Some(s) => sentence.tokens[s.range()]
            .iter()
            .map(|t| t.surface.clone())
            .collect(),
        None => vec![EMPTY_UNIT.to_string()],
    }
}

fn surfaces(sentence: &Sentence) -> impl Iterator<Item = String> + '_ {
    sentence.tokens.iter().map(|t| t.surface.clone())
}

/// `[source unit] [SEP] [source sentence]`.
pub fn build_input1(record: &PairRecord) -> Result<EncodedInput> {
    record.validate()?;
    Ok(source_only_input(&record.source, record.unit.source))
}

fn source_only_input(source: &Sentence, span: Option<Span>) -> EncodedInput {
    let mut tokens = unit_tokens(source, span);
    tokens.push(SEP.into());
    tokens.extend(surfaces(source));
    EncodedInput {
        format: InputFormat::Input1,
        tokens,
    }
}

/// `[src unit] [SEP] [src sentence] [SEP] [tgt unit] [SEP] [tgt sentence]`.
pub fn build_input2(record: &PairRecord) -> Result<EncodedInput> {
    record.validate()?;
    let mut tokens = unit_tokens(&record.source, record.unit.source);
    tokens.push(SEP.into());
    tokens.extend(surfaces(&record.source));
    tokens.push(SEP.into());
    tokens.extend(unit_tokens(&record.target, record.unit.target));
    tokens.push(SEP.into());
    tokens.extend(surfaces(&record.target));
    Ok(EncodedInput {
        format: InputFormat::Input2,
        tokens,
    })
}

pub fn build_input(record: &PairRecord, format: InputFormat) -> Result<EncodedInput> {
    match format {
        InputFormat::Input1 => build_input1(record),
        InputFormat::Input2 => build_input2(record),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub hash_dim: usize,
    pub use_embeddings: bool,
    pub embedding_dim: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            hash_dim: DEFAULT_HASH_DIM,
            use_embeddings: false,
            embedding_dim: 0,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.hash_dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "hash_dim {} is not a power of two",
                self.hash_dim
            )));
        }
        if self.use_embeddings && self.embedding_dim == 0 {
            return Err(Error::InvalidArgument(
                "use_embeddings needs a positive embedding_dim".into(),
            ));
        }
        Ok(())
    }

    /// Total vector length `D`.
    pub fn dim(&self) -> usize {
        4 * self.hash_dim + DENSE_LEN + if self.use_embeddings { 4 * self.embedding_dim } else { 0 }
    }

    pub fn dense_offset(&self) -> usize {
        4 * self.hash_dim
    }

    /// Identifies the feature layout; stored with trained models.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!(
            "hash={};emb={};embdim={};dense={};seed={HASH_SEED:x}",
            self.hash_dim,
            self.use_embeddings,
            if self.use_embeddings { self.embedding_dim } else { 0 },
            DENSE_LEN
        ));
        hex::encode(&h.finalize()[..8])
    }
}

/// Sparse view of a `dim`-long real vector. Entries are sorted by index and
/// contain no duplicates or zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    pub fn from_dense(values: &[f64]) -> Self {
        FeatureVector {
            dim: values.len(),
            entries: values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| (i as u32, *v))
                .collect(),
        }
    }

    fn from_unsorted(dim: usize, mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        FeatureVector {
            dim,
            entries: merged,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries
            .binary_search_by_key(&(i as u32), |e| e.0)
            .map(|k| self.entries[k].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, x) in &self.entries {
            v[i as usize] = x;
        }
        v
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for b in HASH_SEED.to_le_bytes().iter().chain(bytes) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn hash_segment(tokens: &[String], block: usize, cfg: &FeatureConfig, out: &mut Vec<(u32, f64)>) {
    let offset = block * cfg.hash_dim;
    let mask = cfg.hash_dim as u64 - 1;
    let mut push = |feature: String| {
        let bucket = (fnv1a64(feature.as_bytes()) & mask) as usize;
        out.push(((offset + bucket) as u32, 1.0));
    };
    for t in tokens {
        push(format!("u\u{1}{t}"));
    }
    for w in tokens.windows(2) {
        push(format!("b\u{1}{}\u{1}{}", w[0], w[1]));
    }
}

fn segments(encoded: &EncodedInput) -> Vec<Vec<String>> {
    encoded
        .tokens
        .split(|t| t == SEP)
        .map(|seg| seg.to_vec())
        .collect()
}

fn lower_all(seg: &[String]) -> Vec<String> {
    seg.iter().map(|t| t.to_lowercase()).collect()
}

fn pos_one_hot(pos: Option<Pos>, base: usize, dense: &mut [f64]) {
    if let Some(p) = pos {
        dense[base + p.index()] = 1.0;
    }
}

/// Source-side dense features. Only the source sentence and span are read.
fn source_dense(source: &Sentence, span: Option<Span>, res: &RuleResources, dense: &mut [f64]) {
    let unit: &[Token] = source.slice(span);
    dense[0] = unit.len() as f64 / 10.0;
    dense[1] = source.len() as f64 / 50.0;
    if let Some(s) = span {
        dense[2] = s.start as f64 / source.len().max(1) as f64;
    }
    let h = head(unit);
    pos_one_hot(h.and_then(|t| t.pos), 3, dense);
    dense[15] = f64::from(u8::from(unit.is_empty()));
    if let Some(h) = h {
        let infl = res.lookup(&h.surface, h.pos).map(|g| g.inflection);
        dense[16] = f64::from(u8::from(
            h.pos == Some(Pos::Verb) && matches!(infl, Some(Inflection::Past | Inflection::Progressive)),
        ));
        dense[17] = f64::from(u8::from(h.pos == Some(Pos::Noun) && infl == Some(Inflection::Plural)));
    }
    dense[18] = f64::from(u8::from(
        unit.iter()
            .position(|t| res.is_marker(MarkerList::Copulas, &t.surface))
            .is_some_and(|i| unit[i + 1..].iter().any(|t| t.pos == Some(Pos::Verb))),
    ));
    let negations = unit
        .iter()
        .filter(|t| {
            res.is_marker(MarkerList::NegationEn, &t.surface) || t.surface.to_lowercase().ends_with("n't")
        })
        .count();
    dense[19] = (negations % 2) as f64;
    if !unit.is_empty() {
        let text = unit
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ");
        dense[20] = f64::from(u8::from(res.idiom_targets(&text).is_some()));
    }
    let content: Vec<&Token> = unit
        .iter()
        .filter(|t| matches!(t.pos, Some(Pos::Noun | Pos::Verb | Pos::Adj | Pos::Adv | Pos::Pron | Pos::Adp | Pos::Num)))
        .collect();
    if !content.is_empty() {
        let glossable = content
            .iter()
            .filter(|t| res.lookup(&t.surface, t.pos).is_some())
            .count();
        dense[21] = glossable as f64 / content.len() as f64;
    }
    dense[22] = f64::from(u8::from(res.lexicon_len() == 0));
}

/// Features that need both sides.
fn bilingual_dense(record: &PairRecord, res: &RuleResources, dense: &mut [f64]) {
    let b = DENSE_SOURCE_LEN;
    let f = PairFacts::gather(record, res);
    let tgt_unit = record.target_unit();
    dense[b] = tgt_unit.len() as f64 / 10.0;
    dense[b + 1] = record.target.len() as f64 / 50.0;
    if let Some(s) = record.unit.target {
        dense[b + 2] = s.start as f64 / record.target.len().max(1) as f64;
    }
    pos_one_hot(f.target_head_pos, b + 3, dense);
    let flag = |x: bool| f64::from(u8::from(x));
    dense[b + 15] = flag(f.target_empty);
    dense[b + 16] = flag(!f.source_empty && !f.target_empty && f.head_pos_changed());
    dense[b + 17] = flag(f.target_aspect);
    dense[b + 18] = flag(f.target_plural);
    dense[b + 19] = flag(f.target_passive);
    if f.content_tokens > 0 {
        dense[b + 20] = f.glossed_in_target as f64 / f.content_tokens as f64;
    }
    dense[b + 21] = flag(f.first_gloss_exact);
    dense[b + 22] = f.similarity_or_zero();
    dense[b + 23] = flag(f.similarity.is_none());
    dense[b + 24] = flag(f.hypernym);
    dense[b + 25] = flag(f.hyponym);
    dense[b + 26] = flag(f.negation_parity_differs());
    dense[b + 27] = flag(f.idiom_match);
    dense[b + 28] = flag(!res.has_relations() || !res.has_similarity());
}

fn mean_embedding(seg: &[String], emb: &EmbeddingTable) -> Vec<f64> {
    let mut sum = vec![0.0; emb.dim()];
    let mut n = 0usize;
    for w in seg {
        if let Some(v) = emb.get(w) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n > 0 {
        for s in &mut sum {
            *s /= n as f64;
        }
    }
    sum
}

/// Computes the feature vector of an encoded input.
///
/// For Input1 only the record's source sentence and source span are read.
/// Missing resources never fail: scores fall back to zero and a
/// missing-resource flag is set.
pub fn featurize(
    encoded: &EncodedInput,
    record: &PairRecord,
    res: &RuleResources,
    config: &FeatureConfig,
    embeddings: Option<&EmbeddingTable>,
) -> Result<FeatureVector> {
    config.validate()?;
    if config.use_embeddings {
        if let Some(e) = embeddings {
            if e.dim() != config.embedding_dim {
                return Err(Error::DimensionMismatch {
                    expected: config.embedding_dim,
                    got: e.dim(),
                });
            }
        }
    }
    let segs = segments(encoded);
    let expected = match encoded.format {
        InputFormat::Input1 => 2,
        InputFormat::Input2 => 4,
    };
    if segs.len() != expected {
        return Err(Error::InvalidArgument(format!(
            "{} input has {} segments, expected {expected}",
            encoded.format,
            segs.len()
        )));
    }
    let mut entries = Vec::new();
    for (block, seg) in segs.iter().enumerate() {
        let seg = if block < 2 { lower_all(seg) } else { seg.clone() };
        hash_segment(&seg, block, config, &mut entries);
    }

    let mut dense = vec![0.0; DENSE_LEN];
    source_dense(&record.source, record.unit.source, res, &mut dense);
    if encoded.format == InputFormat::Input2 {
        bilingual_dense(record, res, &mut dense);
    }
    let offset = config.dense_offset();
    entries.extend(
        dense
            .iter()
            .enumerate()
            .map(|(i, v)| ((offset + i) as u32, *v)),
    );

    if config.use_embeddings {
        if let Some(emb) = embeddings {
            let base = offset + DENSE_LEN;
            for (block, seg) in segs.iter().enumerate() {
                let mean = mean_embedding(seg, emb);
                entries.extend(
                    mean.iter()
                        .enumerate()
                        .map(|(i, v)| ((base + block * config.embedding_dim + i) as u32, *v)),
                );
            }
        }
    }
    Ok(FeatureVector::from_unsorted(config.dim(), entries))
}

/// Resources, layout and optional embeddings bundled for repeated use.
#[derive(Clone, Copy)]
pub struct Featurizer<'a> {
    pub resources: &'a RuleResources,
    pub config: FeatureConfig,
    pub embeddings: Option<&'a EmbeddingTable>,
}

impl<'a> Featurizer<'a> {
    pub fn new(resources: &'a RuleResources, config: FeatureConfig) -> Self {
        Featurizer {
            resources,
            config,
            embeddings: None,
        }
    }

    pub fn with_embeddings(mut self, embeddings: &'a EmbeddingTable) -> Self {
        self.embeddings = Some(embeddings);
        self
    }

    pub fn dim(&self) -> usize {
        self.config.dim()
    }

    pub fn encode(&self, record: &PairRecord, format: InputFormat) -> Result<FeatureVector> {
        let encoded = build_input(record, format)?;
        featurize(&encoded, record, self.resources, &self.config, self.embeddings)
    }
}
