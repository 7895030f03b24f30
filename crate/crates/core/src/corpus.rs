//! Data model for aligned English-Chinese pairs, JSONL/TSV I/O and
//! stratified splitting.
//!
//! JSONL is the canonical on-disk form. Each line is one record with keys in
//! this fixed order:
//!
//! ```text
//! {"id":"r1",
//!  "src_tokens":[{"surface":"the","pos":"DET"},{"surface":"dog","pos":"NOUN"}],
//!  "tgt_tokens":[{"surface":"狗","pos":"NOUN"}],
//!  "src_span":[1,2], "tgt_span":[0,1],
//!  "technique":"LIT", "quality":null}
//! ```
//!
//! Spans are half-open `[start, end)` token ranges; an empty side is `null`.
//! TSV is accepted for bulk import only (see [`Format::Tsv`]).

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coarse part-of-speech tagset shared by both languages.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pos {
    Verb,
    Noun,
    Adj,
    Adv,
    Pron,
    #[serde(alias = "PREP")]
    Adp,
    Det,
    Part,
    Conj,
    Num,
    Aux,
    Other,
}

impl Pos {
    pub const ALL: [Pos; 12] = [
        Pos::Verb,
        Pos::Noun,
        Pos::Adj,
        Pos::Adv,
        Pos::Pron,
        Pos::Adp,
        Pos::Det,
        Pos::Part,
        Pos::Conj,
        Pos::Num,
        Pos::Aux,
        Pos::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Verb => "VERB",
            Pos::Noun => "NOUN",
            Pos::Adj => "ADJ",
            Pos::Adv => "ADV",
            Pos::Pron => "PRON",
            Pos::Adp => "ADP",
            Pos::Det => "DET",
            Pos::Part => "PART",
            Pos::Conj => "CONJ",
            Pos::Num => "NUM",
            Pos::Aux => "AUX",
            Pos::Other => "OTHER",
        }
    }

    /// Open-class tags used to pick a span's head.
    pub fn is_head_candidate(self) -> bool {
        matches!(self, Pos::Noun | Pos::Verb | Pos::Adj | Pos::Adv)
    }

    /// Maps a fine-grained tag onto the coarse set.
    ///
    /// Coarse names (and `PREP`) map to themselves. Otherwise Penn Treebank
    /// and Universal Dependencies tags are matched upper-case, and the
    /// jieba/ICTCLAS tags used for Chinese are matched lower-case:
    ///
    /// | coarse | PTB / UD                          | jieba            |
    /// |--------|-----------------------------------|------------------|
    /// | NOUN   | NN NNS NNP NNPS PROPN             | n* (nr ns nt nz) |
    /// | VERB   | VB VBD VBG VBN VBP VBZ            | v* (vn vd)       |
    /// | ADJ    | JJ JJR JJS                        | a* (ad an)       |
    /// | ADV    | RB RBR RBS WRB                    | d                |
    /// | PRON   | PRP PRP$ WP WP$                   | r                |
    /// | ADP    | IN TO                             | p                |
    /// | DET    | DT PDT WDT                        |                  |
    /// | PART   | RP POS                            | u* y e           |
    /// | CONJ   | CC CCONJ SCONJ                    | c                |
    /// | NUM    | CD                                | m                |
    /// | AUX    | MD                                |                  |
    /// | OTHER  | anything else (incl. jieba `q`)   |                  |
    pub fn from_tag(tag: &str) -> Pos {
        if let Ok(p) = tag.parse::<Pos>() {
            return p;
        }
        match tag {
            "NN" | "NNS" | "NNP" | "NNPS" | "PROPN" => Pos::Noun,
            "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" => Pos::Verb,
            "JJ" | "JJR" | "JJS" => Pos::Adj,
            "RB" | "RBR" | "RBS" | "WRB" => Pos::Adv,
            "PRP" | "PRP$" | "WP" | "WP$" => Pos::Pron,
            "IN" | "TO" => Pos::Adp,
            "DT" | "PDT" | "WDT" => Pos::Det,
            "RP" | "POS" => Pos::Part,
            "CC" | "CCONJ" | "SCONJ" => Pos::Conj,
            "CD" => Pos::Num,
            "MD" => Pos::Aux,
            "d" => Pos::Adv,
            "r" => Pos::Pron,
            "p" => Pos::Adp,
            "c" => Pos::Conj,
            "m" => Pos::Num,
            "y" | "e" => Pos::Part,
            t if t.starts_with('n') => Pos::Noun,
            t if t.starts_with('v') => Pos::Verb,
            t if t.starts_with('a') => Pos::Adj,
            t if t.starts_with('u') => Pos::Part,
            _ => Pos::Other,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pos::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .or(if s == "PREP" { Some(Pos::Adp) } else { None })
            .ok_or_else(|| Error::InvalidArgument(format!("unknown POS tag {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub pos: Option<Pos>,
}

impl Token {
    pub fn new(surface: impl Into<String>, pos: Pos) -> Self {
        Token {
            surface: surface.into(),
            pos: Some(pos),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lang {
    #[serde(rename = "en")]
    En,
    #[serde(rename = "zh")]
    Zh,
}

impl Lang {
    /// Separator used when joining token surfaces into text.
    pub fn joiner(self) -> &'static str {
        match self {
            Lang::En => " ",
            Lang::Zh => "",
        }
    }
}

/// A tokenized sentence. A token's index is its position in `tokens`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub lang: Lang,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>, lang: Lang) -> Self {
        Sentence { tokens, lang }
    }

    /// Builds a sentence from `surface/POS` items separated by whitespace.
    /// Items without a `/POS` suffix carry no tag.
    pub fn parse_tagged(text: &str, lang: Lang) -> Self {
        let tokens = text
            .split_whitespace()
            .map(|item| match item.rsplit_once('/') {
                Some((surface, tag)) if !surface.is_empty() && !tag.is_empty() => Token {
                    surface: surface.to_string(),
                    pos: if tag == "_" { None } else { Some(Pos::from_tag(tag)) },
                },
                _ => Token {
                    surface: item.to_string(),
                    pos: None,
                },
            })
            .collect();
        Sentence { tokens, lang }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn text(&self) -> String {
        self.join(0..self.tokens.len())
    }

    pub fn join(&self, range: std::ops::Range<usize>) -> String {
        self.tokens[range]
            .iter()
            .map(|t| t.surface.as_str())
            .collect::<Vec<_>>()
            .join(self.lang.joiner())
    }

    pub fn slice(&self, span: Option<Span>) -> &[Token] {
        match span {
            Some(s) => &self.tokens[s.start..s.end],
            None => &[],
        }
    }
}

/// Non-empty half-open token range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start >= end {
            return Err(Error::InvalidArgument(format!(
                "span [{start},{end}) is empty or reversed; use null for an empty side"
            )));
        }
        Ok(Span { start, end })
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl TryFrom<[usize; 2]> for Span {
    type Error = String;

    fn try_from(v: [usize; 2]) -> std::result::Result<Self, String> {
        Span::new(v[0], v[1]).map_err(|e| e.to_string())
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> Self {
        [s.start, s.end]
    }
}

/// A sub-sentence alignment. `None` marks an unaligned (empty) side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlignedUnit {
    pub source: Option<Span>,
    pub target: Option<Span>,
}

macro_rules! label_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant,)+
        }

        impl $name {
            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text,)+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::InvalidArgument(format!(
                        concat!("unknown ", stringify!($name), " {:?}"),
                        other
                    ))),
                }
            }
        }
    };
}

label_enum!(
    /// The ten retained translation techniques.
    TechniqueLabel {
        Lit => "LIT",
        Equ => "EQU",
        Tra => "TRA",
        Mod => "MOD",
        Mot => "MOT",
        Par => "PAR",
        Gen => "GEN",
        Lex => "LEX",
        Exp => "EXP",
        Red => "RED",
    }
);

label_enum!(
    QualityLabel {
        GoodLit => "GOOD_LIT",
        GoodNonlit => "GOOD_NONLIT",
        Bad => "BAD",
    }
);

impl TechniqueLabel {
    /// Reporting order (literal first, then the nine non-literal techniques).
    pub const ALL: [TechniqueLabel; 10] = [
        TechniqueLabel::Lit,
        TechniqueLabel::Tra,
        TechniqueLabel::Exp,
        TechniqueLabel::Red,
        TechniqueLabel::Lex,
        TechniqueLabel::Equ,
        TechniqueLabel::Gen,
        TechniqueLabel::Mod,
        TechniqueLabel::Par,
        TechniqueLabel::Mot,
    ];

    pub const NON_LITERAL: [TechniqueLabel; 9] = [
        TechniqueLabel::Tra,
        TechniqueLabel::Exp,
        TechniqueLabel::Red,
        TechniqueLabel::Lex,
        TechniqueLabel::Equ,
        TechniqueLabel::Gen,
        TechniqueLabel::Mod,
        TechniqueLabel::Par,
        TechniqueLabel::Mot,
    ];

    pub fn is_literal(self) -> bool {
        self == TechniqueLabel::Lit
    }
}

impl QualityLabel {
    pub const ALL: [QualityLabel; 3] = [
        QualityLabel::Bad,
        QualityLabel::GoodLit,
        QualityLabel::GoodNonlit,
    ];

    pub fn is_good(self) -> bool {
        self != QualityLabel::Bad
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairRecord {
    pub id: String,
    pub source: Sentence,
    pub target: Sentence,
    pub unit: AlignedUnit,
    pub technique: Option<TechniqueLabel>,
    pub quality: Option<QualityLabel>,
}

impl PairRecord {
    pub fn source_unit(&self) -> &[Token] {
        self.source.slice(self.unit.source)
    }

    pub fn target_unit(&self) -> &[Token] {
        self.target.slice(self.unit.target)
    }

    pub fn source_text(&self) -> String {
        self.unit
            .source
            .map(|s| self.source.join(s.range()))
            .unwrap_or_default()
    }

    pub fn target_text(&self) -> String {
        self.unit
            .target
            .map(|s| self.target.join(s.range()))
            .unwrap_or_default()
    }

    /// Stratification key: quality and technique, whichever are present.
    pub fn label_key(&self) -> Option<String> {
        match (self.quality, self.technique) {
            (Some(q), Some(t)) => Some(format!("{q}:{t}")),
            (Some(q), None) => Some(q.to_string()),
            (None, Some(t)) => Some(t.to_string()),
            (None, None) => None,
        }
    }

    pub fn has_all_pos(&self) -> bool {
        self.source
            .tokens
            .iter()
            .chain(&self.target.tokens)
            .all(|t| t.pos.is_some())
    }

    /// Checks every record invariant.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::invalid(&self.id, msg));
        if self.id.trim().is_empty() {
            return bad("empty id".into());
        }
        if self.source.lang != Lang::En || self.target.lang != Lang::Zh {
            return bad("source must be en and target zh".into());
        }
        for (side, sentence) in [("source", &self.source), ("target", &self.target)] {
            if let Some(i) = sentence.tokens.iter().position(|t| t.surface.trim().is_empty()) {
                return bad(format!("{side} token {i} has an empty surface"));
            }
        }
        match (self.unit.source, self.unit.target) {
            (None, None) => return bad("both spans are empty".into()),
            (s, t) => {
                if let Some(s) = s {
                    if s.end > self.source.len() {
                        return bad(format!(
                            "source span [{},{}) out of range for {} tokens",
                            s.start,
                            s.end,
                            self.source.len()
                        ));
                    }
                }
                if let Some(t) = t {
                    if t.end > self.target.len() {
                        return bad(format!(
                            "target span [{},{}) out of range for {} tokens",
                            t.start,
                            t.end,
                            self.target.len()
                        ));
                    }
                }
            }
        }
        // BAD twins carry the literal rendering, so their spans follow the twin.
        let is_bad = self.quality == Some(QualityLabel::Bad);
        match self.technique {
            _ if is_bad => {}
            Some(TechniqueLabel::Exp) if self.unit.source.is_some() => {
                return bad("EXP requires an empty source span".into())
            }
            Some(TechniqueLabel::Red) if self.unit.target.is_some() => {
                return bad("RED requires an empty target span".into())
            }
            _ => {}
        }
        if is_bad && self.technique == Some(TechniqueLabel::Lit) {
            return bad("a BAD record must carry a non-literal corrective technique".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    /// Read-only import format. Columns, tab-separated:
    /// `id src_tokens tgt_tokens src_span tgt_span technique quality`.
    /// Tokens are space-separated `surface/POS`; spans are `start:end` or
    /// `-`; absent labels are `-` or empty. A first line starting with
    /// `id<TAB>` is treated as a header.
    Tsv,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") => Format::Tsv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "tsv" => Ok(Format::Tsv),
            other => Err(Error::InvalidArgument(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    src_tokens: Vec<Token>,
    tgt_tokens: Vec<Token>,
    src_span: Option<Span>,
    tgt_span: Option<Span>,
    technique: Option<TechniqueLabel>,
    quality: Option<QualityLabel>,
}

impl From<&PairRecord> for RecordLine {
    fn from(r: &PairRecord) -> Self {
        RecordLine {
            id: r.id.clone(),
            src_tokens: r.source.tokens.clone(),
            tgt_tokens: r.target.tokens.clone(),
            src_span: r.unit.source,
            tgt_span: r.unit.target,
            technique: r.technique,
            quality: r.quality,
        }
    }
}

impl From<RecordLine> for PairRecord {
    fn from(l: RecordLine) -> Self {
        PairRecord {
            id: l.id,
            source: Sentence::new(l.src_tokens, Lang::En),
            target: Sentence::new(l.tgt_tokens, Lang::Zh),
            unit: AlignedUnit {
                source: l.src_span,
                target: l.tgt_span,
            },
            technique: l.technique,
            quality: l.quality,
        }
    }
}

/// Serializes one record as a single JSONL line (without newline).
pub fn to_json_line(record: &PairRecord) -> String {
    serde_json::to_string(&RecordLine::from(record)).expect("record serialization is infallible")
}

/// Parses and validates one JSONL line.
pub fn from_json_line(line: &str) -> Result<PairRecord> {
    let parsed: RecordLine = serde_json::from_str(line).map_err(|e| Error::Schema {
        line: 0,
        message: e.to_string(),
    })?;
    let record = PairRecord::from(parsed);
    record.validate()?;
    Ok(record)
}

/// A line that failed to parse or validate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LineError {
    pub line: usize,
    pub id: Option<String>,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "line {} (record {id}): {}", self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Loaded {
    pub records: Vec<PairRecord>,
    pub errors: Vec<LineError>,
}

impl Loaded {
    /// Fails if any line was rejected.
    pub fn into_strict(self, path: &Path) -> Result<Vec<PairRecord>> {
        match self.errors.first() {
            None => Ok(self.records),
            Some(first) => Err(Error::Malformed {
                path: path.to_path_buf(),
                count: self.errors.len(),
                first: first.to_string(),
            }),
        }
    }
}

/// Reads a corpus. Malformed lines are collected in [`Loaded::errors`]
/// with their 1-based line numbers; blank lines are skipped.
pub fn load_corpus(path: &Path, format: Format) -> Result<Loaded> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Loaded::default();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if format == Format::Tsv && line_no == 1 && line.starts_with("id\t") {
            continue;
        }
        let parsed = match format {
            Format::Jsonl => serde_json::from_str::<RecordLine>(&line)
                .map(PairRecord::from)
                .map_err(|e| (None, e.to_string())),
            Format::Tsv => parse_tsv_line(&line).map_err(|e| (None, e)),
        };
        let record = match parsed {
            Ok(r) => r,
            Err((id, message)) => {
                out.errors.push(LineError {
                    line: line_no,
                    id,
                    message,
                });
                continue;
            }
        };
        if let Err(e) = record.validate() {
            out.errors.push(LineError {
                line: line_no,
                id: Some(record.id.clone()),
                message: e.to_string(),
            });
            continue;
        }
        if !seen.insert(record.id.clone()) {
            out.errors.push(LineError {
                line: line_no,
                id: Some(record.id.clone()),
                message: "duplicate record id".into(),
            });
            continue;
        }
        out.records.push(record);
    }
    Ok(out)
}

fn parse_tsv_line(line: &str) -> std::result::Result<PairRecord, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() < 5 || cols.len() > 7 {
        return Err(format!("expected 5 to 7 tab-separated columns, found {}", cols.len()));
    }
    let span = |s: &str| -> std::result::Result<Option<Span>, String> {
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(None);
        }
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("span {s:?} is not start:end"))?;
        let a: usize = a.parse().map_err(|_| format!("bad span start in {s:?}"))?;
        let b: usize = b.parse().map_err(|_| format!("bad span end in {s:?}"))?;
        if a == b {
            return Ok(None);
        }
        Span::new(a, b).map(Some).map_err(|e| e.to_string())
    };
    fn opt<T: FromStr<Err = Error>>(s: Option<&&str>) -> std::result::Result<Option<T>, String> {
        match s.map(|s| s.trim()) {
            None | Some("") | Some("-") => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e: Error| e.to_string()),
        }
    }
    Ok(PairRecord {
        id: cols[0].trim().to_string(),
        source: Sentence::parse_tagged(cols[1], Lang::En),
        target: Sentence::parse_tagged(cols[2], Lang::Zh),
        unit: AlignedUnit {
            source: span(cols[3])?,
            target: span(cols[4])?,
        },
        technique: opt(cols.get(5))?,
        quality: opt(cols.get(6))?,
    })
}

/// Writes records as JSONL. TSV is import-only and rejected here.
pub fn save_corpus(records: &[PairRecord], path: &Path, format: Format) -> Result<()> {
    if format == Format::Tsv {
        return Err(Error::InvalidArgument("TSV is an import-only format".into()));
    }
    for r in records {
        r.validate()?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        writeln!(w, "{}", to_json_line(r)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self> {
        let r = SplitRatios { train, dev, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidArgument(format!(
                "split ratios must lie in [0,1]: {parts:?}"
            )));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "split ratios must sum to 1: {parts:?}"
            )));
        }
        Ok(())
    }

    /// Largest-remainder apportionment of `n` items; ties go to the
    /// earlier split.
    pub fn sizes(&self, n: usize) -> [usize; 3] {
        let exact = [
            self.train * n as f64,
            self.dev * n as f64,
            self.test * n as f64,
        ];
        let mut sizes = exact.map(|x| x.floor() as usize);
        let assigned: usize = sizes.iter().sum();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - exact[a].floor();
            let rb = exact[b] - exact[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().take(n.saturating_sub(assigned)) {
            sizes[i] += 1;
        }
        sizes
    }
}

impl FromStr for SplitRatios {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidArgument(format!("bad ratios {s:?}")))?;
        match parts.as_slice() {
            [a, b, c] => SplitRatios::new(*a, *b, *c),
            _ => Err(Error::InvalidArgument(format!("expected three ratios, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Split {
    pub train: Vec<PairRecord>,
    pub dev: Vec<PairRecord>,
    pub test: Vec<PairRecord>,
    pub warnings: Vec<String>,
}

/// Stratified, seeded train/dev/test partition.
///
/// Records are grouped by [`PairRecord::label_key`]. Each class gets a
/// per-split count that is the floor or ceiling of its proportional share,
/// with split sizes fixed by [`SplitRatios::sizes`]; such a rounding always
/// exists and is found with a small max-flow. Members are shuffled within
/// their class before being dealt out. Classes with fewer than three members
/// go to train with a warning. Each split keeps the input order of its
/// members.
pub fn split(records: &[PairRecord], ratios: SplitRatios, seed: u64) -> Result<Split> {
    ratios.validate()?;
    if records.is_empty() {
        return Err(Error::Empty("split needs at least one record"));
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        let key = r
            .label_key()
            .ok_or_else(|| Error::invalid(&r.id, "split requires labeled records"))?;
        groups.entry(key).or_default().push(i);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let mut assignment = vec![0u8; records.len()];
    let mut forced = 0;
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (name, members) in groups.iter_mut() {
        members.shuffle(&mut rng);
        if members.len() < 3 {
            warnings.push(format!(
                "class {name} has {} member(s); all placed in train",
                members.len()
            ));
            forced += members.len();
        } else {
            classes.push(std::mem::take(members));
        }
    }

    let [train_n, dev_n, _] = ratios.sizes(records.len());
    let pool: usize = classes.iter().map(Vec::len).sum();
    let train = train_n.saturating_sub(forced).min(pool);
    let dev = dev_n.min(pool - train);
    let sizes = [train, dev, pool - train - dev];
    let counts = controlled_rounding(&classes.iter().map(Vec::len).collect::<Vec<_>>(), &sizes);
    for (members, c) in classes.iter().zip(counts) {
        for &idx in &members[c[0]..c[0] + c[1]] {
            assignment[idx] = 1;
        }
        for &idx in &members[c[0] + c[1]..] {
            assignment[idx] = 2;
        }
    }

    let mut out = Split {
        warnings,
        ..Split::default()
    };
    for (r, part) in records.iter().zip(assignment) {
        match part {
            0 => out.train.push(r.clone()),
            1 => out.dev.push(r.clone()),
            _ => out.test.push(r.clone()),
        }
    }
    Ok(out)
}

/// Integer table with row sums `rows`, column sums `cols` and every cell
/// the floor or ceiling of `rows[c] * cols[s] / total`.
fn controlled_rounding(rows: &[usize], cols: &[usize; 3]) -> Vec<[usize; 3]> {
    let total: usize = rows.iter().sum();
    if total == 0 {
        return vec![[0; 3]; rows.len()];
    }
    let mut cells = vec![[0usize; 3]; rows.len()];
    // residual demand per row and column, and which cells may still take one unit
    let mut row_need = vec![0usize; rows.len()];
    let mut col_need = *cols;
    let mut open = vec![[false; 3]; rows.len()];
    let mut fracs = Vec::new();
    for (c, &n) in rows.iter().enumerate() {
        for s in 0..3 {
            let num = n * cols[s];
            cells[c][s] = num / total;
            if !num.is_multiple_of(total) {
                open[c][s] = true;
                fracs.push((num % total, c, s));
            }
            col_need[s] -= cells[c][s];
        }
        row_need[c] = n - cells[c].iter().sum::<usize>();
    }
    // largest remainders first, then repair with augmenting paths
    fracs.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for &(_, c, s) in &fracs {
        if row_need[c] > 0 && col_need[s] > 0 {
            cells[c][s] += 1;
            open[c][s] = false;
            row_need[c] -= 1;
            col_need[s] -= 1;
        }
    }
    while let Some(c0) = (0..rows.len()).find(|&c| row_need[c] > 0) {
        // BFS over rows; a row reaches column s through an open cell, and a
        // column leads back to any row whose rounding there was raised
        let mut prev_row: Vec<Option<(usize, usize)>> = vec![None; rows.len()];
        let mut seen = vec![false; rows.len()];
        seen[c0] = true;
        let mut queue = std::collections::VecDeque::from([c0]);
        let mut end = None;
        'search: while let Some(c) = queue.pop_front() {
            for s in 0..3 {
                if !open[c][s] {
                    continue;
                }
                if col_need[s] > 0 {
                    end = Some((c, s));
                    break 'search;
                }
                for r in 0..rows.len() {
                    let raised = cells[r][s] * total > rows[r] * cols[s];
                    if !seen[r] && raised {
                        seen[r] = true;
                        prev_row[r] = Some((c, s));
                        queue.push_back(r);
                    }
                }
            }
        }
        let Some((mut c, mut s)) = end else {
            unreachable!("controlled rounding always exists");
        };
        col_need[s] -= 1;
        row_need[c0] -= 1;
        loop {
            cells[c][s] += 1;
            open[c][s] = false;
            match prev_row[c] {
                Some((pc, ps)) => {
                    cells[c][ps] -= 1;
                    open[c][ps] = true;
                    c = pc;
                    s = ps;
                }
                None => break,
            }
        }
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn controlled_rounding_keeps_margins() {
        let rows = [12, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3, 48, 7];
        let cols = [81, 9, 10];
        let cells = controlled_rounding(&rows, &cols);
        let total: usize = rows.iter().sum();
        for (c, row) in cells.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), rows[c]);
            for s in 0..3 {
                let q = (rows[c] * cols[s]) as f64 / total as f64;
                assert!((row[s] as f64 - q).abs() < 1.0, "{c} {s}: {} vs {q}", row[s]);
            }
        }
        for s in 0..3 {
            assert_eq!(cells.iter().map(|r| r[s]).sum::<usize>(), cols[s]);
        }
    }

    pub(crate) fn toy(id: &str, technique: TechniqueLabel) -> PairRecord {
        let (src_span, tgt_span) = match technique {
            TechniqueLabel::Exp => (None, Some(Span { start: 0, end: 1 })),
            TechniqueLabel::Red => (Some(Span { start: 0, end: 1 }), None),
            _ => (Some(Span { start: 1, end: 2 }), Some(Span { start: 0, end: 1 })),
        };
        PairRecord {
            id: id.into(),
            source: Sentence::parse_tagged("the/DET dog/NOUN runs/VERB", Lang::En),
            target: Sentence::parse_tagged("狗/n 跑/v", Lang::Zh),
            unit: AlignedUnit {
                source: src_span,
                target: tgt_span,
            },
            technique: Some(technique),
            quality: None,
        }
    }

    #[test]
    fn pos_mapping_covers_both_tagsets() {
        assert_eq!(Pos::from_tag("NNS"), Pos::Noun);
        assert_eq!(Pos::from_tag("VBD"), Pos::Verb);
        assert_eq!(Pos::from_tag("IN"), Pos::Adp);
        assert_eq!(Pos::from_tag("PREP"), Pos::Adp);
        assert_eq!(Pos::from_tag("vn"), Pos::Verb);
        assert_eq!(Pos::from_tag("ul"), Pos::Part);
        assert_eq!(Pos::from_tag("q"), Pos::Other);
        assert_eq!(Pos::from_tag("DET"), Pos::Det);
    }

    #[test]
    fn texts_join_per_language() {
        let r = toy("a", TechniqueLabel::Lit);
        assert_eq!(r.source.text(), "the dog runs");
        assert_eq!(r.target.text(), "狗跑");
        assert_eq!(r.source_text(), "dog");
        assert_eq!(r.target_text(), "狗");
    }

    #[test]
    fn both_spans_empty_is_invalid() {
        let mut r = toy("a", TechniqueLabel::Lit);
        r.unit = AlignedUnit {
            source: None,
            target: None,
        };
        assert!(r.validate().is_err());
    }

    #[test]
    fn exp_with_source_span_is_invalid() {
        let mut r = toy("a", TechniqueLabel::Lit);
        r.technique = Some(TechniqueLabel::Exp);
        assert!(r.validate().is_err());
        let mut r = toy("b", TechniqueLabel::Lit);
        r.technique = Some(TechniqueLabel::Red);
        assert!(r.validate().is_err());
    }

    #[test]
    fn bad_literal_label_is_invalid() {
        let mut r = toy("a", TechniqueLabel::Lit);
        r.quality = Some(QualityLabel::Bad);
        assert!(r.validate().is_err());
        r.technique = Some(TechniqueLabel::Tra);
        assert!(r.validate().is_ok());
    }

    #[test]
    fn tsv_line_parses() {
        let r = parse_tsv_line("x1\tthe/DT dog/NN\t狗/n\t1:2\t0:1\tLIT\t-").unwrap();
        assert_eq!(r.id, "x1");
        assert_eq!(r.source.tokens[1].pos, Some(Pos::Noun));
        assert_eq!(r.unit.source, Some(Span { start: 1, end: 2 }));
        assert_eq!(r.technique, Some(TechniqueLabel::Lit));
        assert_eq!(r.quality, None);
        let r = parse_tsv_line("x2\tthe/DT\t狗/n\t0:1\t-").unwrap();
        assert_eq!(r.unit.target, None);
    }

    #[test]
    fn sizes_use_largest_remainder() {
        let r = SplitRatios::new(0.81, 0.09, 0.10).unwrap();
        assert_eq!(r.sizes(86208), [69828, 7759, 8621]);
        let r = SplitRatios::new(1.0, 0.0, 0.0).unwrap();
        assert_eq!(r.sizes(7), [7, 0, 0]);
    }

    #[test]
    fn ratios_must_sum_to_one() {
        assert!(SplitRatios::new(0.8, 0.1, 0.2).is_err());
        assert!("0.8,0.1".parse::<SplitRatios>().is_err());
        assert!("0.8,0.1,0.1".parse::<SplitRatios>().is_ok());
    }

    #[test]
    fn ten_classes_of_ten_split_eight_one_one() {
        let mut records = Vec::new();
        for (c, t) in TechniqueLabel::ALL.iter().enumerate() {
            for i in 0..10 {
                records.push(toy(&format!("{c}-{i}"), *t));
            }
        }
        for seed in [0, 1, 99, 12345] {
            let s = split(&records, SplitRatios::new(0.8, 0.1, 0.1).unwrap(), seed).unwrap();
            for t in TechniqueLabel::ALL {
                let count = |v: &[PairRecord]| v.iter().filter(|r| r.technique == Some(t)).count();
                assert_eq!((count(&s.train), count(&s.dev), count(&s.test)), (8, 1, 1));
            }
        }
    }

    #[test]
    fn tiny_class_goes_to_train_with_warning() {
        let mut records: Vec<_> = (0..20).map(|i| toy(&format!("l{i}"), TechniqueLabel::Lit)).collect();
        records.push(toy("m0", TechniqueLabel::Mot));
        records.push(toy("m1", TechniqueLabel::Mot));
        let s = split(&records, SplitRatios::new(0.5, 0.25, 0.25).unwrap(), 3).unwrap();
        assert_eq!(s.warnings.len(), 1);
        assert_eq!(
            s.train.iter().filter(|r| r.technique == Some(TechniqueLabel::Mot)).count(),
            2
        );
        assert_eq!(s.train.len() + s.dev.len() + s.test.len(), 22);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(split(&[], SplitRatios::new(1.0, 0.0, 0.0).unwrap(), 0).is_err());
    }

    #[test]
    fn unlabeled_record_is_rejected() {
        let mut r = toy("a", TechniqueLabel::Lit);
        r.technique = None;
        assert!(split(&[r], SplitRatios::new(1.0, 0.0, 0.0).unwrap(), 0).is_err());
    }
}
