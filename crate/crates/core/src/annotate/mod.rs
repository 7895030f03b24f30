//! Deterministic rule cascade assigning one translation technique per
//! aligned pair.
//!
//! Rules are tried in a fixed order and the first one whose conditions all
//! hold wins:
//!
//! 1. `RED`: target side empty, source head is a preposition, determiner,
//!    noun, pronoun, copula or anticipatory "it".
//! 2. `EXP`: source side empty, every target token is a connective,
//!    resumptive anaphor or Chinese-specific word.
//! 3. `EQU`: source unit is a listed idiom/fixed expression and the target
//!    unit is one of its fixed renderings.
//! 4. `LIT`: every source content token has a gloss inside the target unit,
//!    head POS is unchanged and tense/number/voice/negation marking agree.
//! 5. `LEX`: as `LIT`, but tense, number or voice marking disagrees.
//! 6. `TRA`: glosses match but the head POS changed.
//! 7. `GEN`: the target is a hypernym of the source gloss, or a noun became
//!    a pronoun.
//! 8. `PAR`: the target is a hyponym of the source gloss, or a pronoun
//!    became its referent.
//! 9. `MOT`: preposition/noun source, no gloss match, similarity below
//!    `theta_sim` and a POS change.
//! 10. `MOD`: negation parity differs, voice flips, or similarity lies in
//!     `[theta_low, theta_sim)` with the same POS.
//!
//! Rules 3-10 require both sides to be non-empty. A pair no rule accepts is
//! reported as unlabelable together with its nearest misses.

mod resources;

use std::collections::BTreeMap;
use std::fmt;

pub use resources::{
    GlossHit, Inflection, MarkerList, Relations, RuleResources, Thresholds, DEFAULT_THETA_LOW,
    DEFAULT_THETA_SIM,
};

use crate::corpus::{PairRecord, Pos, TechniqueLabel, Token};
use crate::error::{Error, Result};

/// Which rule fired and why.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleTrace {
    pub fired_rule: &'static str,
    pub evidence: String,
    pub low_confidence: bool,
}

impl fmt::Display for RuleTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.fired_rule, self.evidence)?;
        if self.low_confidence {
            f.write_str(" (low-confidence MOD)")?;
        }
        Ok(())
    }
}

/// Head of a span: last NOUN/VERB/ADJ/ADV token, else the last token.
pub fn head(tokens: &[Token]) -> Option<&Token> {
    tokens
        .iter()
        .rev()
        .find(|t| t.pos.is_some_and(Pos::is_head_candidate))
        .or_else(|| tokens.last())
}

fn is_content(pos: Option<Pos>) -> bool {
    matches!(
        pos,
        Some(Pos::Noun | Pos::Verb | Pos::Adj | Pos::Adv | Pos::Pron | Pos::Adp | Pos::Num)
    )
}

/// Observations about one pair shared by the rules and the feature encoder.
#[derive(Clone, Debug)]
pub struct PairFacts {
    pub source_empty: bool,
    pub target_empty: bool,
    pub source_head_pos: Option<Pos>,
    pub target_head_pos: Option<Pos>,
    pub source_head: Option<String>,
    pub target_head: Option<String>,
    /// Source content tokens in the unit.
    pub content_tokens: usize,
    /// Content tokens with some gloss inside the target unit text.
    pub glossed_in_target: usize,
    /// Content tokens with any lexicon entry.
    pub glossable: usize,
    /// Target unit text equals the concatenation of first glosses.
    pub first_gloss_exact: bool,
    pub source_tense_marked: bool,
    pub source_plural: bool,
    pub source_passive: bool,
    pub target_aspect: bool,
    pub target_plural: bool,
    pub target_passive: bool,
    pub source_negations: usize,
    pub target_negations: usize,
    pub idiom_key: bool,
    pub idiom_match: bool,
    pub similarity: Option<f64>,
    pub hypernym: bool,
    pub hyponym: bool,
    pub head_glosses: Vec<String>,
}

impl PairFacts {
    pub fn head_pos_changed(&self) -> bool {
        self.source_head_pos != self.target_head_pos
    }

    /// Every content token glossed inside the target (and at least one).
    pub fn covered(&self) -> bool {
        self.content_tokens > 0 && self.glossed_in_target == self.content_tokens
    }

    pub fn morphology_agrees(&self) -> bool {
        self.source_tense_marked == self.target_aspect
            && self.source_plural == self.target_plural
            && self.source_passive == self.target_passive
    }

    pub fn negation_parity_differs(&self) -> bool {
        self.source_negations % 2 != self.target_negations % 2
    }

    pub fn similarity_or_zero(&self) -> f64 {
        self.similarity.unwrap_or(0.0)
    }

    pub fn gather(record: &PairRecord, res: &RuleResources) -> PairFacts {
        let src = record.source_unit();
        let tgt = record.target_unit();
        let src_head = head(src);
        let tgt_head = head(tgt);
        let tgt_text = record.target_text();

        let mut content_tokens = 0;
        let mut glossed_in_target = 0;
        let mut glossable = 0;
        for tok in src.iter().filter(|t| is_content(t.pos)) {
            content_tokens += 1;
            if let Some(hit) = res.lookup(&tok.surface, tok.pos) {
                glossable += 1;
                if !tgt_text.is_empty() && hit.glosses.iter().any(|g| tgt_text.contains(g.as_str())) {
                    glossed_in_target += 1;
                }
            }
        }
        let first_glosses: Option<String> = if src.is_empty() {
            None
        } else {
            src.iter()
                .map(|t| res.lookup(&t.surface, t.pos).map(|h| h.glosses[0].clone()))
                .collect::<Option<Vec<_>>>()
                .map(|g| g.concat())
        };

        let head_hit = src_head.and_then(|t| res.lookup(&t.surface, t.pos));
        let head_infl = head_hit.as_ref().map(|h| h.inflection);
        let src_head_pos = src_head.and_then(|t| t.pos);
        let source_tense_marked = src_head_pos == Some(Pos::Verb)
            && matches!(head_infl, Some(Inflection::Past | Inflection::Progressive));
        let source_plural =
            src_head_pos == Some(Pos::Noun) && head_infl == Some(Inflection::Plural);
        let source_passive = src
            .iter()
            .position(|t| res.is_marker(MarkerList::Copulas, &t.surface))
            .is_some_and(|i| src[i + 1..].iter().any(|t| t.pos == Some(Pos::Verb)));

        let has = |list: MarkerList| tgt.iter().any(|t| res.is_marker(list, &t.surface));
        let target_plural = tgt.iter().any(|t| {
            res.markers(MarkerList::Plural)
                .iter()
                .any(|m| t.surface == *m || t.surface.ends_with(m.as_str()))
        });
        let source_negations = src
            .iter()
            .filter(|t| {
                res.is_marker(MarkerList::NegationEn, &t.surface)
                    || t.surface.to_lowercase().ends_with("n't")
            })
            .count();
        let target_negations = tgt
            .iter()
            .filter(|t| {
                res.markers(MarkerList::NegationZh)
                    .iter()
                    .any(|m| t.surface.starts_with(m.as_str()))
            })
            .count();

        let src_text = record.source_text();
        let idiom_targets = if src.is_empty() {
            None
        } else {
            res.idiom_targets(&src_text)
        };

        let head_glosses: Vec<String> = head_hit
            .as_ref()
            .map(|h| h.glosses.to_vec())
            .unwrap_or_default();
        let mut source_keys: Vec<String> = head_glosses.clone();
        if let Some(h) = &head_hit {
            source_keys.push(h.lemma.clone());
        } else if let Some(t) = src_head {
            source_keys.push(t.surface.to_lowercase());
        }
        let mut target_keys: Vec<String> = Vec::new();
        if let Some(t) = tgt_head {
            target_keys.push(t.surface.clone());
        }
        if !tgt_text.is_empty() && !target_keys.contains(&tgt_text) {
            target_keys.push(tgt_text.clone());
        }

        let mut similarity: Option<f64> = None;
        for a in &source_keys {
            for b in &target_keys {
                if let Some(s) = res.similarity(a, b) {
                    similarity = Some(similarity.map_or(s, |m: f64| m.max(s)));
                }
            }
        }

        let back: Vec<String> = target_keys
            .iter()
            .flat_map(|t| res.back_glosses(t).iter().cloned())
            .collect();
        let related = |pick: fn(&Relations) -> &Vec<String>, inverse: fn(&Relations) -> &Vec<String>| {
            let forward = source_keys.iter().any(|s| {
                res.relations(s).is_some_and(|r| {
                    pick(r)
                        .iter()
                        .any(|w| target_keys.contains(w) || back.contains(w))
                })
            });
            let backward = target_keys.iter().any(|t| {
                res.relations(t)
                    .is_some_and(|r| inverse(r).iter().any(|w| source_keys.contains(w)))
            });
            forward || backward
        };
        let hypernym = !src.is_empty() && !tgt.is_empty() && related(|r| &r.hypernyms, |r| &r.hyponyms);
        let hyponym = !src.is_empty() && !tgt.is_empty() && related(|r| &r.hyponyms, |r| &r.hypernyms);

        PairFacts {
            source_empty: src.is_empty(),
            target_empty: tgt.is_empty(),
            source_head_pos: src_head_pos,
            target_head_pos: tgt_head.and_then(|t| t.pos),
            source_head: src_head.map(|t| t.surface.clone()),
            target_head: tgt_head.map(|t| t.surface.clone()),
            content_tokens,
            glossed_in_target,
            glossable,
            first_gloss_exact: first_glosses.is_some_and(|g| !tgt_text.is_empty() && g == tgt_text),
            source_tense_marked,
            source_plural,
            source_passive,
            target_aspect: has(MarkerList::Aspect),
            target_plural,
            target_passive: has(MarkerList::Passive),
            source_negations,
            target_negations,
            idiom_key: idiom_targets.is_some(),
            idiom_match: idiom_targets.is_some_and(|ts| ts.contains(&tgt_text)),
            similarity,
            hypernym,
            hyponym,
            head_glosses,
        }
    }
}

/// Condition tally for one rule.
struct Check {
    rule: &'static str,
    label: TechniqueLabel,
    met: usize,
    failed: Vec<&'static str>,
    evidence: String,
    low_confidence: bool,
}

impl Check {
    fn new(rule: &'static str, label: TechniqueLabel) -> Self {
        Check {
            rule,
            label,
            met: 0,
            failed: Vec::new(),
            evidence: String::new(),
            low_confidence: false,
        }
    }

    fn require(mut self, name: &'static str, ok: bool) -> Self {
        if ok {
            self.met += 1;
        } else {
            self.failed.push(name);
        }
        self
    }

    fn evidence(mut self, text: impl Into<String>) -> Self {
        self.evidence = text.into();
        self
    }

    fn fired(&self) -> bool {
        self.failed.is_empty()
    }

    fn ratio(&self) -> f64 {
        self.met as f64 / (self.met + self.failed.len()) as f64
    }
}

fn rules(record: &PairRecord, f: &PairFacts, res: &RuleResources) -> Vec<Check> {
    let th = res.thresholds;
    let tgt = record.target_unit();
    let both = !f.source_empty && !f.target_empty;
    let src_head = f.source_head.clone().unwrap_or_default();
    let tgt_head = f.target_head.clone().unwrap_or_default();
    let sim = f.similarity_or_zero();
    let mut out = Vec::with_capacity(10);

    // 1. RED
    let red_kind = match f.source_head_pos {
        _ if res.is_marker(MarkerList::AnticipatoryIt, &src_head) => Some("anticipatory \"it\""),
        _ if res.is_marker(MarkerList::Copulas, &src_head) => Some("copula"),
        Some(Pos::Adp) => Some("preposition"),
        Some(Pos::Det) => Some("determiner"),
        _ if res.is_marker(MarkerList::Determiners, &src_head) => Some("determiner"),
        Some(Pos::Noun) => Some("noun"),
        Some(Pos::Pron) => Some("pronoun"),
        _ => None,
    };
    out.push(
        Check::new("red", TechniqueLabel::Red)
            .require("empty target span", f.target_empty && !f.source_empty)
            .require("removable source head", red_kind.is_some())
            .evidence(format!(
                "removal of {} {src_head:?}",
                red_kind.unwrap_or("word")
            )),
    );

    // 2. EXP
    let exp_kind = |t: &Token| {
        if res.is_marker(MarkerList::Connectives, &t.surface) {
            Some("logical connective")
        } else if res.is_marker(MarkerList::Resumptive, &t.surface) {
            Some("resumptive anaphor")
        } else if res.is_marker(MarkerList::ChineseSpecific, &t.surface)
            || res.is_marker(MarkerList::Aspect, &t.surface)
        {
            Some("Chinese-specific word")
        } else {
            None
        }
    };
    let exp_ok = !tgt.is_empty() && tgt.iter().all(|t| exp_kind(t).is_some());
    out.push(
        Check::new("exp", TechniqueLabel::Exp)
            .require("empty source span", f.source_empty && !f.target_empty)
            .require("target is connective/anaphor/particle", exp_ok)
            .evidence(format!(
                "added {} {:?}",
                tgt.first().and_then(exp_kind).unwrap_or("word"),
                record.target_text()
            )),
    );

    // 3. EQU
    out.push(
        Check::new("equ", TechniqueLabel::Equ)
            .require("both sides aligned", both)
            .require("source is a fixed expression", f.idiom_key)
            .require("target is a listed equivalent", f.idiom_match)
            .evidence(format!(
                "fixed expression {:?} -> {:?}",
                record.source_text(),
                record.target_text()
            )),
    );

    // 4. LIT
    let pos_name = |p: Option<Pos>| p.map(Pos::as_str).unwrap_or("?");
    out.push(
        Check::new("lit", TechniqueLabel::Lit)
            .require("both sides aligned", both)
            .require("glosses cover source", f.covered())
            .require("same head POS", !f.head_pos_changed())
            .require("marking agrees", f.morphology_agrees())
            .require("negation agrees", !f.negation_parity_differs())
            .evidence(format!(
                "literal {} {src_head:?} -> {tgt_head:?}",
                pos_name(f.source_head_pos)
            )),
    );

    // 5. LEX
    let lex_kind = if f.source_tense_marked != f.target_aspect {
        "change of verbal tense"
    } else if f.source_plural != f.target_plural {
        "plural/singular difference"
    } else {
        "passive voice removed"
    };
    out.push(
        Check::new("lex", TechniqueLabel::Lex)
            .require("both sides aligned", both)
            .require("glosses cover source", f.covered())
            .require("same head POS", !f.head_pos_changed())
            .require("marking differs", !f.morphology_agrees())
            .require("negation agrees", !f.negation_parity_differs())
            .evidence(format!("{lex_kind}: {src_head:?} -> {tgt_head:?}")),
    );

    // 6. TRA
    out.push(
        Check::new("tra", TechniqueLabel::Tra)
            .require("both sides aligned", both)
            .require("glosses cover source", f.covered())
            .require("head POS changed", f.head_pos_changed())
            .evidence(format!(
                "from {} to {}: {src_head:?} -> {tgt_head:?}",
                pos_name(f.source_head_pos),
                pos_name(f.target_head_pos)
            )),
    );

    // 7. GEN
    let noun_to_pronoun =
        f.source_head_pos == Some(Pos::Noun) && f.target_head_pos == Some(Pos::Pron);
    out.push(
        Check::new("gen", TechniqueLabel::Gen)
            .require("both sides aligned", both)
            .require("hypernym or pronoun for referent", f.hypernym || noun_to_pronoun)
            .evidence(if f.hypernym {
                format!("{tgt_head:?} is a hypernym of {src_head:?}")
            } else {
                format!("pronoun {tgt_head:?} stands for {src_head:?}")
            }),
    );

    // 8. PAR
    let pronoun_to_referent =
        f.source_head_pos == Some(Pos::Pron) && f.target_head_pos == Some(Pos::Noun);
    out.push(
        Check::new("par", TechniqueLabel::Par)
            .require("both sides aligned", both)
            .require("hyponym or referent for pronoun", f.hyponym || pronoun_to_referent)
            .evidence(if f.hyponym {
                format!("{tgt_head:?} is a hyponym of {src_head:?}")
            } else {
                format!("pronoun {src_head:?} rendered by its referent {tgt_head:?}")
            }),
    );

    // 9. MOT
    out.push(
        Check::new("mot", TechniqueLabel::Mot)
            .require("both sides aligned", both)
            .require(
                "preposition or noun source",
                matches!(f.source_head_pos, Some(Pos::Adp | Pos::Noun)),
            )
            .require("no gloss match", f.glossed_in_target == 0)
            .require("semantic shift", sim < th.theta_sim)
            .require("head POS changed", f.head_pos_changed())
            .evidence(format!(
                "{} {src_head:?} -> {} {tgt_head:?}, similarity {sim:.2}",
                pos_name(f.source_head_pos),
                pos_name(f.target_head_pos)
            )),
    );

    // 10. MOD
    let band = (th.theta_low..th.theta_sim).contains(&sim) && !f.head_pos_changed();
    let (mod_ok, mod_evidence, low) = if f.negation_parity_differs() {
        (true, "negation of the opposite".to_string(), false)
    } else if f.source_passive != f.target_passive {
        (true, "change between passive and active voice".to_string(), false)
    } else if band {
        (
            true,
            format!("slight meaning shift, similarity {sim:.2}"),
            true,
        )
    } else {
        (false, String::new(), false)
    };
    let mut m = Check::new("mod", TechniqueLabel::Mod)
        .require("both sides aligned", both)
        .require("negation/voice flip or similarity band", mod_ok)
        .evidence(format!("{mod_evidence}: {src_head:?} -> {tgt_head:?}"));
    m.low_confidence = low;
    out.push(m);

    out
}

/// Assigns exactly one technique to `record`.
pub fn classify_pair(record: &PairRecord, res: &RuleResources) -> Result<(TechniqueLabel, RuleTrace)> {
    if record.unit.source.is_none() && record.unit.target.is_none() {
        return Err(Error::invalid(&record.id, "both spans are empty"));
    }
    if !record.has_all_pos() {
        return Err(Error::invalid(&record.id, "missing POS tags"));
    }
    let facts = PairFacts::gather(record, res);
    let checks = rules(record, &facts, res);
    if let Some(c) = checks.iter().find(|c| c.fired()) {
        return Ok((
            c.label,
            RuleTrace {
                fired_rule: c.rule,
                evidence: c.evidence.clone(),
                low_confidence: c.low_confidence,
            },
        ));
    }
    let mut misses: Vec<&Check> = checks.iter().collect();
    misses.sort_by(|a, b| b.ratio().total_cmp(&a.ratio()));
    let reason = misses
        .iter()
        .take(3)
        .map(|c| {
            format!(
                "{} ({}/{}; failed: {})",
                c.rule,
                c.met,
                c.met + c.failed.len(),
                c.failed.join(", ")
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    Err(Error::Unlabelable {
        id: record.id.clone(),
        reason: format!("nearest misses: {reason}"),
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AnnotationReport {
    pub counts: BTreeMap<TechniqueLabel, usize>,
    /// `(record id, message)` for records that could not be labeled.
    pub errors: Vec<(String, String)>,
    /// `(record id, previous label, new label)` where a prior label was
    /// overwritten with a different one.
    pub changed: Vec<(String, TechniqueLabel, TechniqueLabel)>,
    pub low_confidence: usize,
}

/// Labels every record it can; the rest are listed in the report.
pub fn annotate_corpus(
    records: &[PairRecord],
    res: &RuleResources,
) -> (Vec<PairRecord>, AnnotationReport) {
    let mut report = AnnotationReport::default();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        match classify_pair(r, res) {
            Ok((label, trace)) => {
                *report.counts.entry(label).or_default() += 1;
                if trace.low_confidence {
                    report.low_confidence += 1;
                }
                if let Some(prev) = r.technique.filter(|p| *p != label) {
                    report.changed.push((r.id.clone(), prev, label));
                }
                let mut labeled = r.clone();
                labeled.technique = Some(label);
                out.push(labeled);
            }
            Err(e) => report.errors.push((r.id.clone(), e.to_string())),
        }
    }
    (out, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AlignedUnit, Lang, Sentence, Span};

    fn resources() -> RuleResources {
        let mut r = RuleResources::new();
        r.add_gloss("book", &["书"]).unwrap();
        r.add_gloss("decide", &["决定"]).unwrap();
        r.add_gloss("bad", &["坏", "差"]).unwrap();
        r.add_gloss("not", &["不"]).unwrap();
        r.add_gloss("dog", &["狗"]).unwrap();
        r.set_markers(MarkerList::Aspect, &["了", "过", "着"]);
        r.set_markers(MarkerList::Plural, &["们"]);
        r.set_markers(MarkerList::Passive, &["被"]);
        r.set_markers(MarkerList::NegationZh, &["不", "没"]);
        r.set_markers(MarkerList::NegationEn, &["not", "no", "never"]);
        r.set_markers(MarkerList::Connectives, &["因此", "所以"]);
        r.set_markers(MarkerList::ChineseSpecific, &["本", "吧"]);
        r.set_markers(MarkerList::Resumptive, &["这"]);
        r.set_markers(MarkerList::Determiners, &["the", "a"]);
        r.set_markers(MarkerList::Copulas, &["is", "was"]);
        r.set_markers(MarkerList::AnticipatoryIt, &["it"]);
        r
    }

    fn rec(src: &str, tgt: &str, s: Option<(usize, usize)>, t: Option<(usize, usize)>) -> PairRecord {
        PairRecord {
            id: "t".into(),
            source: Sentence::parse_tagged(src, Lang::En),
            target: Sentence::parse_tagged(tgt, Lang::Zh),
            unit: AlignedUnit {
                source: s.map(|(a, b)| Span::new(a, b).unwrap()),
                target: t.map(|(a, b)| Span::new(a, b).unwrap()),
            },
            technique: None,
            quality: None,
        }
    }

    fn label(r: &PairRecord) -> TechniqueLabel {
        classify_pair(r, &resources()).unwrap().0
    }

    #[test]
    fn head_is_last_open_class_token() {
        let s = Sentence::parse_tagged("the/DET big/ADJ dog/NOUN of/ADP", Lang::En);
        assert_eq!(head(&s.tokens).unwrap().surface, "dog");
        let s = Sentence::parse_tagged("in/ADP the/DET", Lang::En);
        assert_eq!(head(&s.tokens).unwrap().surface, "the");
    }

    #[test]
    fn connective_without_source_is_exp() {
        let r = rec(
            "it/PRON rained/VERB we/PRON stayed/VERB",
            "因此/CONJ 我们/PRON 待/VERB",
            None,
            Some((0, 1)),
        );
        assert_eq!(label(&r), TechniqueLabel::Exp);
    }

    #[test]
    fn dropped_determiner_is_red() {
        let r = rec("the/DET dog/NOUN", "狗/NOUN", Some((0, 1)), None);
        let (l, trace) = classify_pair(&r, &resources()).unwrap();
        assert_eq!(l, TechniqueLabel::Red);
        assert!(trace.evidence.contains("determiner"));
    }

    #[test]
    fn dropped_plural_is_lex() {
        let r = rec("I/PRON read/VERB books/NOUN", "我/PRON 读/VERB 书/NOUN", Some((2, 3)), Some((2, 3)));
        assert_eq!(label(&r), TechniqueLabel::Lex);
    }

    #[test]
    fn verb_to_noun_is_tra() {
        let r = rec(
            "he/PRON decided/VERB",
            "他/PRON 做出/VERB 决定/NOUN",
            Some((1, 2)),
            Some((2, 3)),
        );
        assert_eq!(label(&r), TechniqueLabel::Tra);
    }

    #[test]
    fn negation_of_opposite_is_mod() {
        let r = rec("not/PART bad/ADJ", "很/ADV 好/ADJ", Some((0, 2)), Some((0, 2)));
        let (l, trace) = classify_pair(&r, &resources()).unwrap();
        assert_eq!(l, TechniqueLabel::Mod);
        assert!(!trace.low_confidence);
    }

    #[test]
    fn literal_noun_is_lit() {
        let r = rec("the/DET dog/NOUN", "狗/NOUN", Some((1, 2)), Some((0, 1)));
        assert_eq!(label(&r), TechniqueLabel::Lit);
    }

    #[test]
    fn missing_pos_is_an_error() {
        let r = rec("the dog/NOUN", "狗/NOUN", Some((1, 2)), Some((0, 1)));
        assert!(classify_pair(&r, &resources()).is_err());
    }

    #[test]
    fn unlabelable_reports_nearest_misses() {
        let r = rec("zebra/NOUN", "斑马/NOUN", Some((0, 1)), Some((0, 1)));
        match classify_pair(&r, &resources()) {
            Err(Error::Unlabelable { reason, .. }) => assert!(reason.contains("nearest misses")),
            other => panic!("expected unlabelable, got {other:?}"),
        }
    }

    #[test]
    fn empty_target_with_verb_head_is_unlabelable() {
        let r = rec("he/PRON runs/VERB", "他/PRON", Some((1, 2)), None);
        assert!(classify_pair(&r, &resources()).is_err());
    }

    #[test]
    fn annotate_corpus_collects_errors() {
        let good = rec("the/DET dog/NOUN", "狗/NOUN", Some((1, 2)), Some((0, 1)));
        let mut bad = rec("the dog", "狗", Some((1, 2)), Some((0, 1)));
        bad.id = "nopos".into();
        let (out, report) = annotate_corpus(&[good, bad], &resources());
        assert_eq!(out.len(), 1);
        assert_eq!(report.errors.len(), 1);
        assert_eq!(report.errors[0].0, "nopos");
        assert_eq!(report.counts[&TechniqueLabel::Lit], 1);
        let (out, report) = annotate_corpus(&[], &resources());
        assert!(out.is_empty() && report == AnnotationReport::default());
    }
}
