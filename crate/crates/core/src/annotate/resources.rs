//! Lexical resources consulted by the rule cascade.
//!
//! A resource directory holds UTF-8 text files; blank lines and lines
//! starting with `#` are ignored:
//!
//! | file              | line format                                |
//! |-------------------|--------------------------------------------|
//! | `lexicon.tsv`     | `src<TAB>gloss1\|gloss2`                   |
//! | `relations.tsv`   | `word<TAB>hypernym\|...<TAB>hyponym\|...`  |
//! | `similarity.tsv`  | `w1<TAB>w2<TAB>score`                      |
//! | `idioms.tsv`      | `src phrase<TAB>tgt1\|tgt2`                |
//! | `lemmas.tsv`      | `form<TAB>lemma<TAB>FEATURE` (optional)    |
//! | `markers/*.txt`   | one entry per line, one file per list      |
//!
//! `FEATURE` is one of `BASE`, `PLURAL`, `PAST`, `PROGRESSIVE`, `THIRD`.
//! The marker lists are named by [`MarkerList::file_name`].

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::Pos;
use crate::error::{Error, Result};

pub const DEFAULT_THETA_SIM: f64 = 0.55;
pub const DEFAULT_THETA_LOW: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    /// Similarity below this counts as a semantic shift.
    pub theta_sim: f64,
    /// Similarity below this is too weak for the modulation band.
    pub theta_low: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            theta_sim: DEFAULT_THETA_SIM,
            theta_low: DEFAULT_THETA_LOW,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.theta_low)
            || !(0.0..=1.0).contains(&self.theta_sim)
            || self.theta_low > self.theta_sim
        {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= theta_low <= theta_sim <= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Inflection {
    Base,
    Plural,
    Past,
    Progressive,
    Third,
}

impl Inflection {
    fn parse(s: &str) -> Option<Inflection> {
        Some(match s {
            "BASE" => Inflection::Base,
            "PLURAL" => Inflection::Plural,
            "PAST" => Inflection::Past,
            "PROGRESSIVE" => Inflection::Progressive,
            "THIRD" => Inflection::Third,
            _ => return None,
        })
    }

    fn as_str(self) -> &'static str {
        match self {
            Inflection::Base => "BASE",
            Inflection::Plural => "PLURAL",
            Inflection::Past => "PAST",
            Inflection::Progressive => "PROGRESSIVE",
            Inflection::Third => "THIRD",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Relations {
    pub hypernyms: Vec<String>,
    pub hyponyms: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MarkerList {
    /// Chinese aspect/tense particles (了, 过, 着).
    Aspect,
    /// Chinese plural marker (们).
    Plural,
    /// Chinese passive marker (被).
    Passive,
    NegationZh,
    NegationEn,
    /// Chinese logical connectives.
    Connectives,
    /// Chinese-specific words with no English counterpart (particles,
    /// classifiers).
    ChineseSpecific,
    /// Chinese resumptive anaphors.
    Resumptive,
    Determiners,
    Copulas,
    AnticipatoryIt,
}

impl MarkerList {
    pub const ALL: [MarkerList; 11] = [
        MarkerList::Aspect,
        MarkerList::Plural,
        MarkerList::Passive,
        MarkerList::NegationZh,
        MarkerList::NegationEn,
        MarkerList::Connectives,
        MarkerList::ChineseSpecific,
        MarkerList::Resumptive,
        MarkerList::Determiners,
        MarkerList::Copulas,
        MarkerList::AnticipatoryIt,
    ];

    pub fn file_name(self) -> &'static str {
        match self {
            MarkerList::Aspect => "aspect.txt",
            MarkerList::Plural => "plural.txt",
            MarkerList::Passive => "passive.txt",
            MarkerList::NegationZh => "negation_zh.txt",
            MarkerList::NegationEn => "negation_en.txt",
            MarkerList::Connectives => "connectives.txt",
            MarkerList::ChineseSpecific => "chinese_specific.txt",
            MarkerList::Resumptive => "resumptive.txt",
            MarkerList::Determiners => "determiners.txt",
            MarkerList::Copulas => "copulas.txt",
            MarkerList::AnticipatoryIt => "anticipatory_it.txt",
        }
    }

    fn english(self) -> bool {
        matches!(
            self,
            MarkerList::NegationEn
                | MarkerList::Determiners
                | MarkerList::Copulas
                | MarkerList::AnticipatoryIt
        )
    }
}

/// A lexicon hit for one source word.
#[derive(Clone, Debug, PartialEq)]
pub struct GlossHit<'a> {
    pub lemma: String,
    pub inflection: Inflection,
    pub glosses: &'a [String],
}

#[derive(Clone, Debug, Default)]
pub struct RuleResources {
    lexicon: HashMap<String, Vec<String>>,
    back_glosses: HashMap<String, Vec<String>>,
    relations: HashMap<String, Relations>,
    similarity: HashMap<(String, String), f64>,
    idioms: HashMap<String, Vec<String>>,
    lemmas: HashMap<String, (String, Inflection)>,
    markers: HashMap<MarkerList, Vec<String>>,
    pub thresholds: Thresholds,
}

impl RuleResources {
    pub fn new() -> Self {
        RuleResources::default()
    }

    // ---- construction ----

    pub fn add_gloss(&mut self, src: &str, glosses: &[&str]) -> Result<()> {
        let key = src.trim().to_lowercase();
        if key.is_empty() || glosses.is_empty() || glosses.iter().any(|g| g.trim().is_empty()) {
            return Err(Error::InvalidArgument(format!(
                "lexicon entry {src:?} needs a key and non-empty glosses"
            )));
        }
        let entry = self.lexicon.entry(key.clone()).or_default();
        for g in glosses {
            if !entry.iter().any(|e| e == g) {
                entry.push(g.to_string());
                let back = self.back_glosses.entry(g.to_string()).or_default();
                if !back.contains(&key) {
                    back.push(key.clone());
                }
            }
        }
        Ok(())
    }

    pub fn add_relation(&mut self, word: &str, hypernyms: &[&str], hyponyms: &[&str]) {
        let entry = self.relations.entry(word.to_string()).or_default();
        entry.hypernyms.extend(hypernyms.iter().map(|s| s.to_string()));
        entry.hyponyms.extend(hyponyms.iter().map(|s| s.to_string()));
    }

    pub fn add_similarity(&mut self, a: &str, b: &str, score: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::InvalidArgument(format!(
                "similarity {a}/{b} = {score} outside [0, 1]"
            )));
        }
        if let Some(&other) = self.similarity.get(&(b.to_string(), a.to_string())) {
            if (other - score).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "asymmetric similarity for {a}/{b}: {score} vs {other}"
                )));
            }
        }
        self.similarity.insert((a.to_string(), b.to_string()), score);
        Ok(())
    }

    pub fn add_idiom(&mut self, src: &str, targets: &[&str]) {
        let entry = self.idioms.entry(normalize_phrase(src)).or_default();
        entry.extend(targets.iter().map(|s| s.to_string()));
    }

    pub fn add_lemma(&mut self, form: &str, lemma: &str, inflection: Inflection) {
        self.lemmas
            .insert(form.to_lowercase(), (lemma.to_lowercase(), inflection));
    }

    pub fn set_markers(&mut self, list: MarkerList, entries: &[&str]) {
        let entries = entries
            .iter()
            .map(|e| {
                if list.english() {
                    e.to_lowercase()
                } else {
                    e.to_string()
                }
            })
            .collect();
        self.markers.insert(list, entries);
    }

    // ---- queries ----

    pub fn glosses(&self, lemma: &str) -> Option<&[String]> {
        self.lexicon.get(lemma).map(Vec::as_slice)
    }

    /// Source words whose glosses include `target`.
    pub fn back_glosses(&self, target: &str) -> &[String] {
        self.back_glosses
            .get(target)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn relations(&self, word: &str) -> Option<&Relations> {
        self.relations.get(word)
    }

    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        self.similarity
            .get(&(a.to_string(), b.to_string()))
            .or_else(|| self.similarity.get(&(b.to_string(), a.to_string())))
            .copied()
    }

    pub fn idiom_targets(&self, src_phrase: &str) -> Option<&[String]> {
        self.idioms
            .get(&normalize_phrase(src_phrase))
            .map(Vec::as_slice)
    }

    pub fn markers(&self, list: MarkerList) -> &[String] {
        self.markers.get(&list).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_marker(&self, list: MarkerList, word: &str) -> bool {
        let word = if list.english() {
            word.to_lowercase()
        } else {
            word.to_string()
        };
        self.markers(list).contains(&word)
    }

    pub fn lexicon_len(&self) -> usize {
        self.lexicon.len()
    }

    pub fn has_relations(&self) -> bool {
        !self.relations.is_empty()
    }

    pub fn has_similarity(&self) -> bool {
        !self.similarity.is_empty()
    }

    /// Candidate lemmas of an English surface form, most specific first.
    pub fn lemma_candidates(&self, surface: &str, pos: Option<Pos>) -> Vec<(String, Inflection)> {
        let w = surface.to_lowercase();
        let mut out = vec![(w.clone(), Inflection::Base)];
        if let Some((lemma, infl)) = self.lemmas.get(&w) {
            out.push((lemma.clone(), *infl));
        }
        let s_form = if pos == Some(Pos::Verb) {
            Inflection::Third
        } else {
            Inflection::Plural
        };
        let mut push = |stem: String, infl: Inflection| {
            if stem.chars().count() >= 2 && !out.iter().any(|(l, _)| *l == stem) {
                out.push((stem, infl));
            }
        };
        if let Some(stem) = w.strip_suffix("ies") {
            push(format!("{stem}y"), s_form);
        }
        if let Some(stem) = w.strip_suffix("es") {
            push(stem.to_string(), s_form);
        }
        if !w.ends_with("ss") {
            if let Some(stem) = w.strip_suffix('s') {
                push(stem.to_string(), s_form);
            }
        }
        if let Some(stem) = w.strip_suffix("ied") {
            push(format!("{stem}y"), Inflection::Past);
        }
        if let Some(stem) = w.strip_suffix("ed") {
            push(stem.to_string(), Inflection::Past);
            push(format!("{stem}e"), Inflection::Past);
            if let Some(undoubled) = undouble(stem) {
                push(undoubled, Inflection::Past);
            }
        }
        if let Some(stem) = w.strip_suffix("ing") {
            push(stem.to_string(), Inflection::Progressive);
            push(format!("{stem}e"), Inflection::Progressive);
            if let Some(undoubled) = undouble(stem) {
                push(undoubled, Inflection::Progressive);
            }
        }
        out
    }

    /// First lemma candidate of `surface` present in the lexicon.
    pub fn lookup(&self, surface: &str, pos: Option<Pos>) -> Option<GlossHit<'_>> {
        self.lemma_candidates(surface, pos)
            .into_iter()
            .find_map(|(lemma, inflection)| {
                self.lexicon.get(&lemma).map(|glosses| GlossHit {
                    lemma,
                    inflection,
                    glosses,
                })
            })
    }

    // ---- file I/O ----

    /// Loads every resource file from `dir`. All files except `lemmas.tsv`
    /// are required.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut res = RuleResources::new();
        let rows = |name: &str, min_cols: usize| -> Result<Vec<(usize, Vec<String>, PathBuf)>> {
            let path = dir.join(name);
            read_rows(&path, min_cols).map(|rows| {
                rows.into_iter()
                    .map(|(line, cols)| (line, cols, path.clone()))
                    .collect()
            })
        };
        let resource_err = |path: &Path, line: usize, e: Error| Error::Resource {
            path: path.to_path_buf(),
            message: format!("line {line}: {e}"),
        };

        for (line, cols, path) in rows("lexicon.tsv", 2)? {
            let glosses: Vec<&str> = split_bar(&cols[1]);
            res.add_gloss(&cols[0], &glosses)
                .map_err(|e| resource_err(&path, line, e))?;
        }
        for (_, cols, _) in rows("relations.tsv", 1)? {
            let hyper = cols.get(1).map(|c| split_bar(c)).unwrap_or_default();
            let hypo = cols.get(2).map(|c| split_bar(c)).unwrap_or_default();
            res.add_relation(&cols[0], &hyper, &hypo);
        }
        for (line, cols, path) in rows("similarity.tsv", 3)? {
            let score: f64 = cols[2].trim().parse().map_err(|_| Error::Resource {
                path: path.clone(),
                message: format!("line {line}: bad score {:?}", cols[2]),
            })?;
            res.add_similarity(&cols[0], &cols[1], score)
                .map_err(|e| resource_err(&path, line, e))?;
        }
        for (_, cols, _) in rows("idioms.tsv", 2)? {
            res.add_idiom(&cols[0], &split_bar(&cols[1]));
        }
        let lemma_path = dir.join("lemmas.tsv");
        if lemma_path.exists() {
            for (line, cols) in read_rows(&lemma_path, 3)? {
                let infl = Inflection::parse(cols[2].trim()).ok_or_else(|| Error::Resource {
                    path: lemma_path.clone(),
                    message: format!("line {line}: unknown feature {:?}", cols[2]),
                })?;
                res.add_lemma(&cols[0], &cols[1], infl);
            }
        }
        for list in MarkerList::ALL {
            let path = dir.join("markers").join(list.file_name());
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let entries: Vec<&str> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .collect();
            res.set_markers(list, &entries);
        }
        Ok(res)
    }

    /// Writes the resources in the layout [`RuleResources::load_dir`] reads.
    /// Entries are sorted so output is stable.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        let markers_dir = dir.join("markers");
        fs::create_dir_all(&markers_dir).map_err(|e| Error::io(&markers_dir, e))?;
        let write = |name: &str, mut lines: Vec<String>| -> Result<()> {
            lines.sort();
            let path = dir.join(name);
            let mut body = lines.join("\n");
            if !body.is_empty() {
                body.push('\n');
            }
            fs::write(&path, body).map_err(|e| Error::io(&path, e))
        };
        write(
            "lexicon.tsv",
            self.lexicon
                .iter()
                .map(|(k, v)| format!("{k}\t{}", v.join("|")))
                .collect(),
        )?;
        write(
            "relations.tsv",
            self.relations
                .iter()
                .map(|(k, r)| format!("{k}\t{}\t{}", r.hypernyms.join("|"), r.hyponyms.join("|")))
                .collect(),
        )?;
        write(
            "similarity.tsv",
            self.similarity
                .iter()
                .map(|((a, b), s)| format!("{a}\t{b}\t{s}"))
                .collect(),
        )?;
        write(
            "idioms.tsv",
            self.idioms
                .iter()
                .map(|(k, v)| format!("{k}\t{}", v.join("|")))
                .collect(),
        )?;
        write(
            "lemmas.tsv",
            self.lemmas
                .iter()
                .map(|(f, (l, i))| format!("{f}\t{l}\t{}", i.as_str()))
                .collect(),
        )?;
        for list in MarkerList::ALL {
            let path = markers_dir.join(list.file_name());
            let mut body = self.markers(list).join("\n");
            body.push('\n');
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn undouble(stem: &str) -> Option<String> {
    let chars: Vec<char> = stem.chars().collect();
    match chars.as_slice() {
        [.., a, b] if a == b && !"aeiou".contains(*a) => {
            Some(chars[..chars.len() - 1].iter().collect())
        }
        _ => None,
    }
}

fn normalize_phrase(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn split_bar(s: &str) -> Vec<&str> {
    s.split('|').map(str::trim).filter(|g| !g.is_empty()).collect()
}

fn read_rows(path: &Path, min_cols: usize) -> Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<String> = line.split('\t').map(str::to_string).collect();
        if cols.len() < min_cols || cols[0].trim().is_empty() {
            return Err(Error::Resource {
                path: path.to_path_buf(),
                message: format!("line {}: expected at least {min_cols} columns", i + 1),
            });
        }
        out.push((i + 1, cols));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_candidates_cover_regular_inflection() {
        let res = RuleResources::new();
        let c = res.lemma_candidates("books", Some(Pos::Noun));
        assert!(c.contains(&("book".into(), Inflection::Plural)));
        let c = res.lemma_candidates("decided", Some(Pos::Verb));
        assert!(c.contains(&("decide".into(), Inflection::Past)));
        let c = res.lemma_candidates("stopped", Some(Pos::Verb));
        assert!(c.contains(&("stop".into(), Inflection::Past)));
        let c = res.lemma_candidates("studies", Some(Pos::Verb));
        assert!(c.contains(&("study".into(), Inflection::Third)));
        let c = res.lemma_candidates("glass", Some(Pos::Noun));
        assert_eq!(c, vec![("glass".into(), Inflection::Base)]);
    }

    #[test]
    fn lookup_prefers_surface_then_lemma_table() {
        let mut res = RuleResources::new();
        res.add_gloss("book", &["书"]).unwrap();
        res.add_gloss("ate", &["吃过"]).unwrap();
        res.add_gloss("eat", &["吃"]).unwrap();
        res.add_lemma("ate", "eat", Inflection::Past);
        let hit = res.lookup("Books", Some(Pos::Noun)).unwrap();
        assert_eq!((hit.lemma.as_str(), hit.inflection), ("book", Inflection::Plural));
        let hit = res.lookup("ate", Some(Pos::Verb)).unwrap();
        assert_eq!(hit.lemma, "ate");
        assert!(res.lookup("zebra", Some(Pos::Noun)).is_none());
    }

    #[test]
    fn similarity_is_symmetric_and_bounded() {
        let mut res = RuleResources::new();
        res.add_similarity("强", "浓", 0.35).unwrap();
        assert_eq!(res.similarity("浓", "强"), Some(0.35));
        assert!(res.add_similarity("浓", "强", 0.5).is_err());
        assert!(res.add_similarity("a", "b", 1.5).is_err());
    }

    #[test]
    fn lexicon_rejects_empty_glosses() {
        let mut res = RuleResources::new();
        assert!(res.add_gloss("dog", &[]).is_err());
        assert!(res.add_gloss("", &["狗"]).is_err());
    }

    #[test]
    fn save_and_load_round_trip() {
        let mut res = RuleResources::new();
        res.add_gloss("Dog", &["狗", "犬"]).unwrap();
        res.add_relation("麻雀", &["鸟"], &[]);
        res.add_similarity("强", "浓", 0.35).unwrap();
        res.add_idiom("piece of cake", &["小菜一碟"]);
        res.add_lemma("went", "go", Inflection::Past);
        for list in MarkerList::ALL {
            res.set_markers(list, &["x"]);
        }
        let dir = tempfile::tempdir().unwrap();
        res.save_dir(dir.path()).unwrap();
        let back = RuleResources::load_dir(dir.path()).unwrap();
        assert_eq!(back.glosses("dog").unwrap(), ["狗", "犬"]);
        assert_eq!(back.back_glosses("犬"), ["dog"]);
        assert_eq!(back.relations("麻雀").unwrap().hypernyms, ["鸟"]);
        assert_eq!(back.similarity("浓", "强"), Some(0.35));
        assert_eq!(back.idiom_targets("Piece  of cake").unwrap(), ["小菜一碟"]);
        assert_eq!(back.lookup("went", Some(Pos::Verb)), None);
        assert!(back.is_marker(MarkerList::Copulas, "X"));
    }

    #[test]
    fn missing_required_file_fails() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            RuleResources::load_dir(dir.path()),
            Err(Error::Io { .. })
        ));
    }
}
