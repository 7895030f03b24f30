//! Synthesis of bad literal translations for the post-editing datasets.
//!
//! A bad twin replaces a good non-literal target unit with the
//! concatenation of the first lexicon gloss of every source unit token. The
//! twin keeps the original technique (the one a post-editor should apply)
//! and gets quality `BAD` and the id suffix `.bad`.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::align::{lexical_align, TranslationTable};
use crate::annotate::RuleResources;
use crate::corpus::{PairRecord, Pos, QualityLabel, Span, TechniqueLabel, Token};
use crate::error::{Error, Result};

/// Default share of synthesizable non-literal records that get a bad twin.
pub const DEFAULT_BAD_FRACTION: f64 = 0.74;

pub const BAD_SUFFIX: &str = ".bad";

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthesisConfig {
    pub bad_fraction: f64,
    pub seed: u64,
    pub require_full_gloss: bool,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            bad_fraction: DEFAULT_BAD_FRACTION,
            seed: 0,
            require_full_gloss: true,
        }
    }
}

fn is_content(pos: Option<Pos>) -> bool {
    matches!(
        pos,
        Some(Pos::Noun | Pos::Verb | Pos::Adj | Pos::Adv | Pos::Pron | Pos::Adp | Pos::Num)
    )
}

/// Target index at which a literal rendering of an omitted source span is
/// inserted: next to the target word aligned with the nearest aligned
/// source neighbour (after it for a left neighbour, before it for a right
/// one; left wins ties), or the end of the sentence.
fn insertion_point(record: &PairRecord, span: Span, table: Option<&TranslationTable>) -> usize {
    let end = record.target.len();
    let Some(table) = table else {
        return end;
    };
    let Ok(alignment) = lexical_align(&record.source, &record.target, table, f64::MIN_POSITIVE)
    else {
        return end;
    };
    let max_dist = record.source.len();
    for d in 1..=max_dist {
        if let Some(left) = span.start.checked_sub(d) {
            if let Some(t) = alignment.target_of(left) {
                return t + 1;
            }
        }
        let right = span.end + d - 1;
        if right < record.source.len() {
            if let Some(t) = alignment.target_of(right) {
                return t;
            }
        }
    }
    end
}

/// Builds the bad literal twin of a good non-literal record.
///
/// `table` places the literal rendering of reduced (`RED`) units; without
/// it they are appended to the sentence.
pub fn make_bad_literal(
    record: &PairRecord,
    lexicon: &RuleResources,
    table: Option<&TranslationTable>,
    require_full_gloss: bool,
) -> Result<PairRecord> {
    let technique = match record.technique {
        Some(t) if !t.is_literal() => t,
        other => {
            return Err(Error::invalid(
                &record.id,
                format!("needs a non-literal technique, found {other:?}"),
            ))
        }
    };
    let Some(src_span) = record.unit.source else {
        return Err(Error::invalid(
            &record.id,
            "empty source span: nothing to translate literally",
        ));
    };
    let mut rendered = Vec::new();
    for tok in record.source_unit() {
        match lexicon.lookup(&tok.surface, tok.pos) {
            Some(hit) => rendered.push(Token {
                surface: hit.glosses[0].clone(),
                pos: tok.pos,
            }),
            None if require_full_gloss && is_content(tok.pos) => {
                return Err(Error::invalid(
                    &record.id,
                    format!("no lexicon gloss for {:?}", tok.surface),
                ))
            }
            None => {}
        }
    }
    if rendered.is_empty() {
        return Err(Error::invalid(&record.id, "no source token has a gloss"));
    }

    let mut target = record.target.clone();
    let start = match record.unit.target {
        Some(span) => {
            target.tokens.splice(span.range(), rendered.iter().cloned());
            span.start
        }
        None => {
            let at = insertion_point(record, src_span, table);
            target.tokens.splice(at..at, rendered.iter().cloned());
            at
        }
    };
    let twin = PairRecord {
        id: format!("{}{BAD_SUFFIX}", record.id),
        source: record.source.clone(),
        target,
        unit: crate::corpus::AlignedUnit {
            source: Some(src_span),
            target: Some(Span::new(start, start + rendered.len())?),
        },
        technique: Some(technique),
        quality: Some(QualityLabel::Bad),
    };
    twin.validate()?;
    Ok(twin)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SynthesisReport {
    pub good_literal: usize,
    pub good_non_literal: usize,
    pub bad: usize,
    pub bad_by_technique: BTreeMap<TechniqueLabel, usize>,
    /// `(record id, reason)` for non-literal records without a twin.
    pub skipped: Vec<(String, String)>,
}

impl SynthesisReport {
    pub fn total(&self) -> usize {
        self.good_literal + self.good_non_literal + self.bad
    }
}

/// Builds the post-editing dataset: every input record with its quality
/// set, plus bad twins for a seeded sample of `bad_fraction` of the
/// synthesizable non-literal records. Originals come first in input order,
/// followed by the twins in input order.
pub fn build_pe_dataset(
    good: &[PairRecord],
    lexicon: &RuleResources,
    table: Option<&TranslationTable>,
    config: &SynthesisConfig,
) -> Result<(Vec<PairRecord>, SynthesisReport)> {
    if !(0.0..=1.0).contains(&config.bad_fraction) {
        return Err(Error::InvalidArgument(format!(
            "bad_fraction {} outside [0, 1]",
            config.bad_fraction
        )));
    }
    let mut report = SynthesisReport::default();
    let mut out = Vec::with_capacity(good.len() * 2);
    let mut candidates: Vec<PairRecord> = Vec::new();
    for r in good {
        let technique = r
            .technique
            .ok_or_else(|| Error::invalid(&r.id, "record has no technique"))?;
        if r.quality == Some(QualityLabel::Bad) {
            return Err(Error::invalid(&r.id, "input records must be good translations"));
        }
        let mut original = r.clone();
        if technique.is_literal() {
            original.quality = Some(QualityLabel::GoodLit);
            report.good_literal += 1;
        } else {
            original.quality = Some(QualityLabel::GoodNonlit);
            report.good_non_literal += 1;
            match make_bad_literal(r, lexicon, table, config.require_full_gloss) {
                Ok(twin) => candidates.push(twin),
                Err(e) => report.skipped.push((r.id.clone(), e.to_string())),
            }
        }
        out.push(original);
    }

    let k = (config.bad_fraction * candidates.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed));
    let mut chosen: Vec<usize> = order.into_iter().take(k).collect();
    chosen.sort_unstable();
    for i in chosen {
        let twin = candidates[i].clone();
        *report
            .bad_by_technique
            .entry(twin.technique.expect("twins keep their technique"))
            .or_default() += 1;
        report.bad += 1;
        out.push(twin);
    }
    Ok((out, report))
}
