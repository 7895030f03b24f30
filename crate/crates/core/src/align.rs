//! Word alignment: an EM-trained lexical translation model and an
//! embedding-cosine aligner.
//!
//! The lexical model is the one-to-many `t(target | source)` model with no
//! NULL word. Both aligners link each source token to its best-scoring
//! target token (ties go to the smaller target index) and leave it unaligned
//! when the best score falls below the threshold. English words are
//! lower-cased before lookup; Chinese words are used verbatim.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Lang, PairRecord, Sentence};
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

fn normalize_source(word: &str) -> String {
    word.to_lowercase()
}

/// Lexical translation probabilities `t(target | source)`.
#[derive(Clone, Debug, Default)]
pub struct TranslationTable {
    source_vocab: Vec<String>,
    target_vocab: Vec<String>,
    source_ids: HashMap<String, u32>,
    target_ids: HashMap<String, u32>,
    probs: HashMap<(u32, u32), f64>,
}

impl TranslationTable {
    pub fn source_vocab(&self) -> &[String] {
        &self.source_vocab
    }

    pub fn target_vocab(&self) -> &[String] {
        &self.target_vocab
    }

    /// `t(tgt | src)`; zero for pairs never seen together.
    pub fn prob(&self, src: &str, tgt: &str) -> f64 {
        let (Some(&s), Some(&t)) = (
            self.source_ids.get(&normalize_source(src)),
            self.target_ids.get(tgt),
        ) else {
            return 0.0;
        };
        self.probs.get(&(s, t)).copied().unwrap_or(0.0)
    }

    pub fn contains_source(&self, src: &str) -> bool {
        self.source_ids.contains_key(&normalize_source(src))
    }

    /// Stored entries of one source row, in target-vocabulary order.
    pub fn row(&self, src: &str) -> Vec<(&str, f64)> {
        let Some(&s) = self.source_ids.get(&normalize_source(src)) else {
            return Vec::new();
        };
        let mut row: Vec<(u32, f64)> = self
            .probs
            .iter()
            .filter(|((ss, _), _)| *ss == s)
            .map(|(&(_, t), &p)| (t, p))
            .collect();
        row.sort_by_key(|&(t, _)| t);
        row.into_iter()
            .map(|(t, p)| (self.target_vocab[t as usize].as_str(), p))
            .collect()
    }

    /// Largest deviation of any row sum from one.
    pub fn max_row_deviation(&self) -> f64 {
        let mut sums = vec![0.0; self.source_vocab.len()];
        let mut keys: Vec<_> = self.probs.keys().copied().collect();
        keys.sort_unstable();
        for k in keys {
            sums[k.0 as usize] += self.probs[&k];
        }
        sums.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max)
    }

    fn intern(ids: &mut HashMap<String, u32>, vocab: &mut Vec<String>, word: String) -> u32 {
        if let Some(&id) = ids.get(&word) {
            return id;
        }
        let id = vocab.len() as u32;
        vocab.push(word.clone());
        ids.insert(word, id);
        id
    }
}

/// EM state for the lexical translation model over a fixed bitext.
///
/// Expected counts are accumulated in corpus order (pair by pair, target
/// token by target token, source token by source token), which fixes the
/// floating-point reduction order and makes training bit-stable.
#[derive(Clone, Debug)]
pub struct LexicalModel {
    table: TranslationTable,
    corpus: Vec<(Vec<u32>, Vec<u32>)>,
}

impl LexicalModel {
    /// Uniform initialization: `t(t|s) = 1 / |targets co-occurring with s|`.
    pub fn uniform(bitext: &[(Sentence, Sentence)]) -> Result<Self> {
        if bitext.is_empty() {
            return Err(Error::Empty("bitext"));
        }
        let mut table = TranslationTable::default();
        let mut corpus = Vec::with_capacity(bitext.len());
        for (i, (src, tgt)) in bitext.iter().enumerate() {
            if src.is_empty() || tgt.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "bitext pair {i} has an empty sentence"
                )));
            }
            let s: Vec<u32> = src
                .tokens
                .iter()
                .map(|t| {
                    TranslationTable::intern(
                        &mut table.source_ids,
                        &mut table.source_vocab,
                        normalize_source(&t.surface),
                    )
                })
                .collect();
            let t: Vec<u32> = tgt
                .tokens
                .iter()
                .map(|t| {
                    TranslationTable::intern(
                        &mut table.target_ids,
                        &mut table.target_vocab,
                        t.surface.clone(),
                    )
                })
                .collect();
            corpus.push((s, t));
        }
        let mut fanout = vec![0usize; table.source_vocab.len()];
        for (s, t) in &corpus {
            for &si in s {
                for &ti in t {
                    if let std::collections::hash_map::Entry::Vacant(e) = table.probs.entry((si, ti)) {
                        e.insert(0.0);
                        fanout[si as usize] += 1;
                    }
                }
            }
        }
        for ((s, _), p) in table.probs.iter_mut() {
            *p = 1.0 / fanout[*s as usize] as f64;
        }
        Ok(LexicalModel { table, corpus })
    }

    pub fn table(&self) -> &TranslationTable {
        &self.table
    }

    pub fn into_table(self) -> TranslationTable {
        self.table
    }

    /// Corpus log-likelihood `Σ_pairs Σ_j ln((1/l) Σ_i t(f_j | e_i))`.
    pub fn log_likelihood(&self) -> f64 {
        let mut ll = 0.0;
        for (s, t) in &self.corpus {
            let l = s.len() as f64;
            for &tj in t {
                let mass: f64 = s.iter().map(|&si| self.table.probs[&(si, tj)]).sum();
                ll += (mass / l).ln();
            }
        }
        ll
    }

    /// One E step plus M step.
    pub fn step(&mut self) {
        let mut counts: HashMap<(u32, u32), f64> = HashMap::with_capacity(self.table.probs.len());
        let mut totals = vec![0.0; self.table.source_vocab.len()];
        for (s, t) in &self.corpus {
            for &tj in t {
                let norm: f64 = s.iter().map(|&si| self.table.probs[&(si, tj)]).sum();
                for &si in s {
                    let c = self.table.probs[&(si, tj)] / norm;
                    *counts.entry((si, tj)).or_insert(0.0) += c;
                    totals[si as usize] += c;
                }
            }
        }
        for (k, p) in self.table.probs.iter_mut() {
            *p = counts[k] / totals[k.0 as usize];
        }
    }
}

/// Trains the lexical model; see [`train_lexical_model_traced`].
pub fn train_lexical_model(
    bitext: &[(Sentence, Sentence)],
    iterations: usize,
) -> Result<TranslationTable> {
    train_lexical_model_traced(bitext, iterations).map(|(t, _)| t)
}

/// Trains the lexical model and returns the log-likelihood before the
/// first iteration and after each one (`iterations + 1` values).
pub fn train_lexical_model_traced(
    bitext: &[(Sentence, Sentence)],
    iterations: usize,
) -> Result<(TranslationTable, Vec<f64>)> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("EM needs at least one iteration".into()));
    }
    let mut model = LexicalModel::uniform(bitext)?;
    let mut trace = vec![model.log_likelihood()];
    for _ in 0..iterations {
        model.step();
        trace.push(model.log_likelihood());
    }
    Ok((model.into_table(), trace))
}

/// Word vectors of a fixed dimension.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be positive".into()));
        }
        Ok(EmbeddingTable {
            dim,
            vectors: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: vector.len(),
            });
        }
        self.vectors.insert(word.into(), vector);
        Ok(())
    }

    /// Exact lookup, then lower-cased.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors
            .get(word)
            .or_else(|| self.vectors.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }

    /// Reads the text format `word v1 .. vd`, one word per line, with an
    /// optional `count dim` header line.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let resource = |line: usize, message: String| Error::Resource {
            path: path.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let mut table: Option<EmbeddingTable> = None;
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if i == 0 && fields.len() == 2 {
                if let (Ok(_), Ok(dim)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                    table = Some(EmbeddingTable::new(dim).map_err(|e| resource(1, e.to_string()))?);
                    continue;
                }
            }
            if fields.len() < 2 {
                return Err(resource(i + 1, "missing vector components".into()));
            }
            let vector: Vec<f64> = fields[1..]
                .iter()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| resource(i + 1, e.to_string()))?;
            let t = match &mut table {
                Some(t) => t,
                None => table.insert(EmbeddingTable::new(vector.len())?),
            };
            t.insert(fields[0], vector)
                .map_err(|e| resource(i + 1, e.to_string()))?;
        }
        table.ok_or_else(|| resource(0, "no vectors".into()))
    }
}

/// Cosine similarity, clamped to `[-1, 1]`.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot / (nu * nv)).clamp(-1.0, 1.0))
}

/// Word alignment of one sentence pair. Every source index is either in a
/// link or in `unaligned_source`, and likewise for target indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub links: Vec<(usize, usize)>,
    pub unaligned_source: Vec<usize>,
    pub unaligned_target: Vec<usize>,
    /// Words the aligner had no entry for.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<String>,
}

impl Alignment {
    /// Target index linked to source index `i`, if any.
    pub fn target_of(&self, i: usize) -> Option<usize> {
        self.links.iter().find(|(s, _)| *s == i).map(|&(_, t)| t)
    }

    /// Keeps only links present in both alignments.
    pub fn intersect(&self, other: &Alignment, source_len: usize, target_len: usize) -> Alignment {
        let links: Vec<(usize, usize)> = self
            .links
            .iter()
            .filter(|l| other.links.contains(l))
            .copied()
            .collect();
        let mut missing = self.missing.clone();
        for m in &other.missing {
            if !missing.contains(m) {
                missing.push(m.clone());
            }
        }
        Alignment::from_links(links, source_len, target_len, missing)
    }

    fn from_links(
        links: Vec<(usize, usize)>,
        source_len: usize,
        target_len: usize,
        missing: Vec<String>,
    ) -> Alignment {
        let unaligned_source = (0..source_len)
            .filter(|i| !links.iter().any(|(s, _)| s == i))
            .collect();
        let unaligned_target = (0..target_len)
            .filter(|j| !links.iter().any(|(_, t)| t == j))
            .collect();
        Alignment {
            links,
            unaligned_source,
            unaligned_target,
            missing,
        }
    }
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Argmax decoding shared by both aligners. `score(i, j)` returns `None`
/// when source token `i` cannot be scored at all.
fn argmax_align(
    src: &Sentence,
    tgt: &Sentence,
    threshold: f64,
    mut score: impl FnMut(usize, usize) -> Option<f64>,
    mut scorable: impl FnMut(usize) -> bool,
) -> Vec<(usize, usize)> {
    let mut links = Vec::new();
    for i in 0..src.len() {
        if !scorable(i) {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for j in 0..tgt.len() {
            if let Some(s) = score(i, j) {
                if best.is_none_or(|(_, b)| s > b) {
                    best = Some((j, s));
                }
            }
        }
        if let Some((j, s)) = best {
            if s >= threshold {
                links.push((i, j));
            }
        }
    }
    links
}

/// Links each source token to its most cosine-similar target token.
pub fn embed_align(
    src: &Sentence,
    tgt: &Sentence,
    emb: &EmbeddingTable,
    threshold: f64,
) -> Result<Alignment> {
    check_threshold(threshold)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>() > 0.0;
    let lookup = |w: &str| emb.get(w).filter(|v| norm(v));
    let mut missing = Vec::new();
    for tok in src.tokens.iter().chain(&tgt.tokens) {
        if lookup(&tok.surface).is_none() && !missing.contains(&tok.surface) {
            missing.push(tok.surface.clone());
        }
    }
    let links = argmax_align(
        src,
        tgt,
        threshold,
        |i, j| {
            let u = lookup(&src.tokens[i].surface)?;
            let v = lookup(&tgt.tokens[j].surface)?;
            cosine(u, v).ok()
        },
        |i| lookup(&src.tokens[i].surface).is_some(),
    );
    Ok(Alignment::from_links(links, src.len(), tgt.len(), missing))
}

/// Links each source token to the target token with the highest
/// `t(target | source)`.
pub fn lexical_align(
    src: &Sentence,
    tgt: &Sentence,
    table: &TranslationTable,
    threshold: f64,
) -> Result<Alignment> {
    check_threshold(threshold)?;
    let missing = src
        .tokens
        .iter()
        .filter(|t| !table.contains_source(&t.surface))
        .map(|t| t.surface.clone())
        .collect();
    let links = argmax_align(
        src,
        tgt,
        threshold,
        |i, j| Some(table.prob(&src.tokens[i].surface, &tgt.tokens[j].surface)),
        |i| table.contains_source(&src.tokens[i].surface),
    );
    Ok(Alignment::from_links(links, src.len(), tgt.len(), missing))
}

/// Reads a bitext: one `source<TAB>target` pair per line, tokens separated
/// by whitespace, each optionally tagged `word/POS`. Blank lines are
/// skipped.
pub fn load_bitext(path: &Path) -> Result<Vec<(Sentence, Sentence)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pairs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some((src, tgt)) = line.split_once('\t') else {
            return Err(Error::Schema {
                line: i + 1,
                message: "expected source<TAB>target".into(),
            });
        };
        pairs.push((
            Sentence::parse_tagged(src, Lang::En),
            Sentence::parse_tagged(tgt, Lang::Zh),
        ));
    }
    Ok(pairs)
}

/// Writes surfaces only, in the format [`load_bitext`] reads.
pub fn save_bitext(pairs: &[(Sentence, Sentence)], path: &Path) -> Result<()> {
    let words = |s: &Sentence| {
        s.tokens
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut out = String::new();
    for (s, t) in pairs {
        out.push_str(&words(s));
        out.push('\t');
        out.push_str(&words(t));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// The sentence pairs of a corpus, in order.
pub fn bitext_from_records(records: &[PairRecord]) -> Vec<(Sentence, Sentence)> {
    records
        .iter()
        .map(|r| (r.source.clone(), r.target.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(src: &str, tgt: &str) -> (Sentence, Sentence) {
        (
            Sentence::parse_tagged(src, Lang::En),
            Sentence::parse_tagged(tgt, Lang::Zh),
        )
    }

    #[test]
    fn single_pair_single_candidate() {
        let table = train_lexical_model(&[pair("dog", "狗")], 1).unwrap();
        assert_eq!(table.prob("dog", "狗"), 1.0);
        assert_eq!(table.prob("Dog", "狗"), 1.0);
    }

    #[test]
    fn uniform_initialization() {
        let model =
            LexicalModel::uniform(&[pair("dog runs", "狗 跑"), pair("cat runs", "猫 跑")]).unwrap();
        let t = model.table();
        assert_eq!(t.prob("dog", "狗"), 0.5);
        assert_eq!(t.prob("runs", "猫"), 1.0 / 3.0);
        assert_eq!(t.prob("dog", "猫"), 0.0);
        assert_eq!(t.row("runs").len(), 3);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(train_lexical_model(&[], 1).is_err());
        assert!(train_lexical_model(&[pair("dog", "狗")], 0).is_err());
        let empty = (Sentence::new(vec![], Lang::En), Sentence::parse_tagged("狗", Lang::Zh));
        assert!(train_lexical_model(&[empty], 1).is_err());
    }

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((cosine(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap() - 8.0 / 9.0).abs() < 1e-12);
        assert!(matches!(cosine(&[1.0], &[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 2.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn embed_align_single_token() {
        let mut emb = EmbeddingTable::new(2).unwrap();
        emb.insert("dog", vec![1.0, 0.5]).unwrap();
        emb.insert("狗", vec![1.0, 0.5]).unwrap();
        let (s, t) = pair("dog", "狗");
        let a = embed_align(&s, &t, &emb, 0.5).unwrap();
        assert_eq!(a.links, vec![(0, 0)]);
        assert!(a.unaligned_source.is_empty() && a.unaligned_target.is_empty());
    }

    #[test]
    fn embed_align_missing_word_is_unaligned() {
        let mut emb = EmbeddingTable::new(2).unwrap();
        emb.insert("狗", vec![1.0, 0.5]).unwrap();
        let (s, t) = pair("dog", "狗");
        let a = embed_align(&s, &t, &emb, 0.0).unwrap();
        assert!(a.links.is_empty());
        assert_eq!(a.unaligned_source, vec![0]);
        assert_eq!(a.missing, vec!["dog".to_string()]);
    }

    #[test]
    fn ties_go_to_smaller_target_index() {
        let mut emb = EmbeddingTable::new(2).unwrap();
        emb.insert("a", vec![1.0, 0.0]).unwrap();
        emb.insert("x", vec![2.0, 0.0]).unwrap();
        emb.insert("y", vec![3.0, 0.0]).unwrap();
        let (s, t) = pair("a", "x y");
        let a = embed_align(&s, &t, &emb, 0.5).unwrap();
        assert_eq!(a.links, vec![(0, 0)]);
        assert_eq!(a.unaligned_target, vec![1]);
    }

    #[test]
    fn threshold_is_validated() {
        let emb = EmbeddingTable::new(1).unwrap();
        let (s, t) = pair("a", "b");
        assert!(embed_align(&s, &t, &emb, 1.5).is_err());
    }

    #[test]
    fn lexical_align_all_below_threshold() {
        let table = train_lexical_model(&[pair("dog runs", "狗 跑")], 1).unwrap();
        let (s, t) = pair("dog runs", "狗 跑");
        let a = lexical_align(&s, &t, &table, 0.9).unwrap();
        assert!(a.links.is_empty());
        assert_eq!(a.unaligned_source, vec![0, 1]);
        assert_eq!(a.unaligned_target, vec![0, 1]);
    }

    #[test]
    fn embeddings_load_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.txt");
        std::fs::write(&p, "2 3\ndog 1 0 0\n狗 0.9 0.1 0\n").unwrap();
        let e = EmbeddingTable::load(&p).unwrap();
        assert_eq!((e.dim(), e.len()), (3, 2));
        std::fs::write(&p, "dog 1 0\ncat 0 1\n").unwrap();
        let e = EmbeddingTable::load(&p).unwrap();
        assert_eq!((e.dim(), e.len()), (2, 2));
        std::fs::write(&p, "dog 1 0\ncat 0 1 1\n").unwrap();
        assert!(EmbeddingTable::load(&p).is_err());
    }

    #[test]
    fn bitext_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("b.tsv");
        let pairs = vec![pair("the/DET dog/NOUN", "狗/NOUN"), pair("a cat", "猫")];
        save_bitext(&pairs, &path).unwrap();
        let back = load_bitext(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].0.text(), "the dog");
        assert_eq!(back[1].1.tokens[0].surface, "猫");
        std::fs::write(&path, "no tab here\n").unwrap();
        assert!(matches!(load_bitext(&path), Err(Error::Schema { line: 1, .. })));
    }
}
