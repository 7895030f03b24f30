//! Deterministic synthetic demo data.
//!
//! Records are built from per-technique templates over a small vocabulary,
//! together with the lexicon, relations, similarity scores, idioms and
//! marker lists the annotator needs to label them. Each record carries the
//! technique its template was built for.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::align::{save_bitext, EmbeddingTable};
use crate::annotate::{Inflection, MarkerList, RuleResources};
use crate::corpus::{
    save_corpus, AlignedUnit, Format, Lang, PairRecord, Sentence, Span, TechniqueLabel, Token,
};
use crate::error::{Error, Result};

pub const DEFAULT_RECORDS: usize = 3300;
pub const EMBEDDING_DIM: usize = 16;

/// (English, Chinese, gender pronoun)
const PEOPLE: &[(&str, &str, &str)] = &[
    ("teacher", "老师", "他"),
    ("student", "学生", "他"),
    ("doctor", "医生", "他"),
    ("farmer", "农民", "他"),
    ("girl", "女孩", "她"),
    ("boy", "男孩", "他"),
    ("driver", "司机", "他"),
    ("writer", "作家", "她"),
    ("worker", "工人", "他"),
    ("nurse", "护士", "她"),
    ("manager", "经理", "她"),
];

/// (English, Chinese, classifier)
const OBJECTS: &[(&str, &str, &str)] = &[
    ("book", "书", "本"),
    ("car", "车", "辆"),
    ("letter", "信", "封"),
    ("picture", "画", "张"),
    ("table", "桌子", "张"),
    ("ticket", "票", "张"),
    ("bag", "包", "个"),
    ("box", "箱子", "个"),
    ("house", "房子", "座"),
    ("bridge", "桥", "座"),
    ("cup", "杯子", "个"),
    ("computer", "电脑", "台"),
    ("key", "钥匙", "把"),
    ("chair", "椅子", "把"),
    ("map", "地图", "张"),
    ("lamp", "灯", "盏"),
    ("umbrella", "伞", "把"),
    ("bicycle", "自行车", "辆"),
    ("newspaper", "报纸", "份"),
];

/// Transitive context verbs: (past form, lemma, Chinese)
const TRANSITIVE: &[(&str, &str, &str)] = &[
    ("saw", "see", "看见"),
    ("bought", "buy", "买"),
    ("found", "find", "找到"),
    ("liked", "like", "喜欢"),
    ("wanted", "want", "想要"),
    ("needed", "need", "需要"),
    ("carried", "carry", "搬"),
    ("sold", "sell", "卖"),
    ("borrowed", "borrow", "借"),
];

/// Intransitive context verbs: (past form, lemma, Chinese)
const INTRANSITIVE: &[(&str, &str, &str)] = &[
    ("left", "leave", "离开"),
    ("answered", "answer", "回答"),
    ("arrived", "arrive", "到达"),
    ("waited", "wait", "等待"),
    ("listened", "listen", "听"),
    ("sat", "sit", "坐"),
];

/// (English tagged, Chinese tagged)
const TAILS: &[(&str, &str)] = &[
    ("", ""),
    ("", ""),
    ("yesterday/ADV", "昨天/NOUN"),
    ("last/ADJ week/NOUN", "上周/NOUN"),
    ("in/ADP the/DET morning/NOUN", "早上/NOUN"),
    ("today/NOUN", "今天/NOUN"),
];

const ADJECTIVES: &[(&str, &str)] = &[
    ("old", "旧"),
    ("new", "新"),
    ("big", "大"),
    ("small", "小"),
    ("red", "红"),
    ("beautiful", "美丽"),
    ("long", "长"),
    ("heavy", "重"),
    ("famous", "著名"),
    ("empty", "空"),
    ("bright", "明亮"),
    ("expensive", "贵"),
];

/// Regular verbs: (lemma, Chinese, third person, past)
const VERBS: &[(&str, &str, &str, &str)] = &[
    ("visit", "访问", "visits", "visited"),
    ("clean", "打扫", "cleans", "cleaned"),
    ("open", "打开", "opens", "opened"),
    ("repair", "修理", "repairs", "repaired"),
    ("wash", "洗", "washes", "washed"),
    ("paint", "粉刷", "paints", "painted"),
    ("watch", "看", "watches", "watched"),
    ("check", "检查", "checks", "checked"),
    ("close", "关", "closes", "closed"),
    ("finish", "完成", "finishes", "finished"),
];

/// Nouns that become verbs: (noun, Chinese verb)
const TRA_NOUNS: &[(&str, &str)] = &[
    ("decision", "决定"),
    ("choice", "选择"),
    ("discussion", "讨论"),
    ("explanation", "解释"),
    ("suggestion", "建议"),
    ("promise", "承诺"),
];

/// Adjectives that become verbs: (adjective, Chinese verb)
const TRA_ADJECTIVES: &[(&str, &str)] = &[
    ("afraid", "害怕"),
    ("grateful", "感谢"),
    ("worried", "担心"),
    ("surprised", "惊讶"),
    ("sorry", "抱歉"),
];

/// (specific, Chinese, general, Chinese, classifier)
const HYPONYMS: &[(&str, &str, &str, &str, &str)] = &[
    ("poodle", "贵宾犬", "dog", "狗", "只"),
    ("rose", "玫瑰", "flower", "花", "朵"),
    ("sparrow", "麻雀", "bird", "鸟", "只"),
    ("oak", "橡树", "tree", "树", "棵"),
    ("sedan", "轿车", "car", "车", "辆"),
    ("novel", "小说", "book", "书", "本"),
    ("salmon", "三文鱼", "fish", "鱼", "条"),
    ("tulip", "郁金香", "flower", "花", "朵"),
    ("kitten", "小猫", "cat", "猫", "只"),
    ("violin", "小提琴", "instrument", "乐器", "把"),
];

/// (general, Chinese, [(specific, Chinese)], classifier)
const HYPERNYMS: &[(&str, &str, &[(&str, &str)], &str)] = &[
    ("animal", "动物", &[("dog", "狗"), ("cat", "猫"), ("horse", "马")], "只"),
    ("vehicle", "交通工具", &[("car", "车"), ("bus", "公共汽车"), ("truck", "卡车")], "辆"),
    ("plant", "植物", &[("tree", "树"), ("flower", "花")], "棵"),
    ("fruit", "水果", &[("apple", "苹果"), ("banana", "香蕉"), ("orange", "橙子")], "个"),
    ("building", "建筑", &[("hospital", "医院"), ("school", "学校"), ("library", "图书馆")], "座"),
    ("drink", "饮料", &[("tea", "茶"), ("coffee", "咖啡"), ("milk", "牛奶")], "杯"),
    ("tool", "工具", &[("hammer", "锤子"), ("knife", "刀")], "把"),
];

/// (English tagged unit, Chinese, Chinese POS)
const MOT_UNITS: &[(&str, &str, &str)] = &[
    ("with/ADP a/DET smile/NOUN", "笑着", "VERB"),
    ("in/ADP tears/NOUN", "哭着", "VERB"),
    ("on/ADP foot/NOUN", "步行", "VERB"),
    ("in/ADP silence/NOUN", "默默地", "ADV"),
    ("in/ADP a/DET whisper/NOUN", "低声", "ADV"),
    ("with/ADP a/DET sigh/NOUN", "叹着气", "VERB"),
    ("in/ADP anger/NOUN", "生气地", "ADV"),
    ("in/ADP surprise/NOUN", "惊讶地", "ADV"),
    ("in/ADP haste/NOUN", "急忙地", "ADV"),
    ("with/ADP joy/NOUN", "高兴地", "ADV"),
];

/// Negation of the opposite: (English tagged, Chinese tagged)
const MOD_NEGATIONS: &[(&str, &str, bool)] = &[
    ("difficult/ADJ", "不/ADV 容易/ADJ", false),
    ("dangerous/ADJ", "不/ADV 安全/ADJ", false),
    ("absent/ADJ", "不/ADV 在场/ADJ", true),
    ("forgot/VERB", "不/ADV 记得/VERB", true),
    ("failed/VERB", "没/ADV 通过/VERB", true),
    ("lost/VERB", "没/ADV 赢/VERB", true),
];

/// Point-of-view shifts: (adjective, gloss, Chinese, similarity, of a person)
const MOD_SHIFTS: &[(&str, &str, &str, f64, bool)] = &[
    ("noisy", "吵闹", "热闹", 0.4, false),
    ("thin", "瘦", "苗条", 0.45, true),
    ("stubborn", "固执", "坚定", 0.35, true),
    ("cheap", "便宜", "实惠", 0.4, false),
    ("strict", "严格", "认真", 0.3, true),
];

const PLACES: &[(&str, &str)] = &[
    ("room", "房间"),
    ("street", "街道"),
    ("park", "公园"),
    ("market", "市场"),
    ("restaurant", "餐厅"),
];

const TOPICS: &[(&str, &str)] = &[
    ("exam", "考试"),
    ("task", "任务"),
    ("job", "工作"),
    ("trip", "旅行"),
];

/// (English frame before the unit, idiom, Chinese frame, Chinese, POS).
/// `{S}` is a person, `{T}` a topic, `{O}` an object.
const IDIOMS: &[(&str, &str, &str, &str, &str)] = &[
    ("the/DET {T}/NOUN was/AUX", "a/DET piece/NOUN of/ADP cake/NOUN", "{T}/NOUN 是/VERB", "小菜一碟", "NOUN"),
    ("the/DET {S}/NOUN will/AUX", "break/VERB the/DET ice/NOUN", "{S}/NOUN 会/AUX", "打破僵局", "VERB"),
    ("the/DET {S}/NOUN will/AUX", "hit/VERB the/DET road/NOUN", "{S}/NOUN 会/AUX", "出发", "VERB"),
    (
        "the/DET {S}/NOUN will/AUX",
        "kill/VERB two/NUM birds/NOUN with/ADP one/NUM stone/NOUN",
        "{S}/NOUN 会/AUX",
        "一石二鸟",
        "VERB",
    ),
    ("the/DET {S}/NOUN will/AUX", "spill/VERB the/DET beans/NOUN", "{S}/NOUN 会/AUX", "说漏嘴", "VERB"),
    ("the/DET {S}/NOUN was/AUX", "under/ADP the/DET weather/NOUN", "{S}/NOUN", "身体不适", "ADJ"),
    (
        "the/DET {O}/NOUN will/AUX",
        "cost/VERB an/DET arm/NOUN and/CONJ a/DET leg/NOUN",
        "{O}/NOUN 会/AUX",
        "贵得离谱",
        "ADJ",
    ),
    ("the/DET {S}/NOUN", "lost/VERB face/NOUN", "{S}/NOUN", "丢脸", "VERB"),
    ("the/DET {S}/NOUN will/AUX", "pull/VERB strings/NOUN", "{S}/NOUN 会/AUX", "走后门", "VERB"),
];

const DAYS: &[(&str, &str)] = &[
    ("monday", "星期一"),
    ("tuesday", "星期二"),
    ("friday", "星期五"),
    ("sunday", "星期天"),
];

/// (verb, Chinese verb, body part, Chinese)
const BODY: &[(&str, &str, &str, &str)] = &[
    ("raised", "举起", "hand", "手"),
    ("shook", "摇", "head", "头"),
    ("washed", "洗", "face", "脸"),
    ("lost", "丢", "key", "钥匙"),
];

const CONNECTIVES: &[&str] = &["然后", "于是", "接着"];

/// Extra lexicon entries for function words, idiom words and context.
const FUNCTION_WORDS: &[(&str, &str)] = &[
    ("the", "这"),
    ("a", "一个"),
    ("an", "一个"),
    ("his", "他的"),
    ("her", "她的"),
    ("he", "他"),
    ("she", "她"),
    ("on", "在"),
    ("in", "在"),
    ("at", "在"),
    ("with", "用|和"),
    ("of", "的"),
    ("is", "是"),
    ("was", "是"),
    ("has", "有"),
    ("will", "会"),
    ("and", "和"),
    ("made", "做"),
    ("piece", "块"),
    ("cake", "蛋糕"),
    ("break", "打破"),
    ("ice", "冰"),
    ("hit", "打"),
    ("road", "路"),
    ("kill", "杀"),
    ("two", "两"),
    ("one", "一"),
    ("stone", "石头"),
    ("spill", "洒"),
    ("bean", "豆子"),
    ("under", "在下面"),
    ("weather", "天气"),
    ("cost", "花费"),
    ("arm", "胳膊"),
    ("leg", "腿"),
    ("lose", "输|丢"),
    ("face", "脸"),
    ("pull", "拉"),
    ("string", "绳子"),
    ("smile", "微笑"),
    ("tear", "眼泪"),
    ("foot", "脚"),
    ("silence", "沉默"),
    ("whisper", "耳语"),
    ("sigh", "叹息"),
    ("anger", "愤怒"),
    ("surprise", "惊喜"),
    ("haste", "仓促"),
    ("joy", "欢乐"),
    ("difficult", "困难"),
    ("dangerous", "危险"),
    ("absent", "缺席"),
    ("forget", "忘记"),
    ("fail", "失败"),
    ("hand", "手"),
    ("head", "头"),
    ("quiet", "安静"),
    ("yesterday", "昨天"),
    ("today", "今天"),
    ("morning", "早上"),
    ("week", "周"),
    ("last", "上"),
];

const IRREGULAR: &[(&str, &str)] = &[
    ("forgot", "forget"),
    ("lost", "lose"),
    ("saw", "see"),
    ("bought", "buy"),
    ("found", "find"),
    ("sold", "sell"),
    ("left", "leave"),
    ("sat", "sit"),
    ("shook", "shake"),
];

/// Toy rule resources covering every template.
pub fn demo_resources() -> RuleResources {
    let mut res = RuleResources::new();
    let mut gloss = |en: &str, zh: &str| {
        let parts: Vec<&str> = zh.split('|').collect();
        res.add_gloss(en, &parts).expect("demo lexicon entries are valid");
    };
    for (en, zh, _) in PEOPLE {
        gloss(en, zh);
    }
    for (en, zh, _) in OBJECTS {
        gloss(en, zh);
    }
    for (_, lemma, zh) in TRANSITIVE.iter().chain(INTRANSITIVE) {
        gloss(lemma, zh);
    }
    for (en, zh) in ADJECTIVES.iter().chain(PLACES).chain(TOPICS).chain(DAYS) {
        gloss(en, zh);
    }
    for (lemma, zh, _, _) in VERBS {
        gloss(lemma, zh);
    }
    for (en, zh) in TRA_NOUNS.iter().chain(TRA_ADJECTIVES) {
        gloss(en, zh);
    }
    for (a, az, b, bz, _) in HYPONYMS {
        gloss(a, az);
        gloss(b, bz);
    }
    for (g, gz, specific, _) in HYPERNYMS {
        gloss(g, gz);
        for (s, sz) in *specific {
            gloss(s, sz);
        }
    }
    for (adj, g, _, _, _) in MOD_SHIFTS {
        gloss(adj, g);
    }
    for (en, zh) in FUNCTION_WORDS {
        gloss(en, zh);
    }
    for (_, _, part, pz) in BODY {
        gloss(part, pz);
    }
    gloss("shake", "摇");
    gloss("raise", "举起");

    for (form, lemma) in IRREGULAR {
        res.add_lemma(form, lemma, Inflection::Past);
    }
    for (a, _, b, _, _) in HYPONYMS {
        res.add_relation(a, &[b], &[]);
        res.add_relation(b, &[], &[a]);
    }
    for (g, _, specific, _) in HYPERNYMS {
        let names: Vec<&str> = specific.iter().map(|(s, _)| *s).collect();
        res.add_relation(g, &[], &names);
        for s in names {
            res.add_relation(s, &[g], &[]);
        }
    }
    for (_, g, zh, sim, _) in MOD_SHIFTS {
        res.add_similarity(g, zh, *sim).expect("demo similarity in range");
    }
    res.add_similarity("困难", "容易", 0.2).expect("in range");
    res.add_similarity("危险", "安全", 0.15).expect("in range");
    for (_, idiom, _, zh, _) in IDIOMS {
        let phrase: Vec<&str> = idiom.split_whitespace().map(|w| w.rsplit_once('/').unwrap().0).collect();
        res.add_idiom(&phrase.join(" "), &[zh]);
    }

    res.set_markers(MarkerList::Aspect, &["了", "过", "着"]);
    res.set_markers(MarkerList::Plural, &["们"]);
    res.set_markers(MarkerList::Passive, &["被"]);
    res.set_markers(MarkerList::NegationZh, &["不", "没", "没有", "别"]);
    res.set_markers(MarkerList::NegationEn, &["not", "no", "never", "n't"]);
    res.set_markers(MarkerList::Connectives, &["然后", "于是", "接着", "所以", "因此", "而且", "但是"]);
    let mut specific: Vec<&str> = OBJECTS.iter().map(|o| o.2).collect();
    specific.extend(["朵", "棵", "条", "只", "杯", "吧", "呢"]);
    specific.sort();
    specific.dedup();
    res.set_markers(MarkerList::ChineseSpecific, &specific);
    res.set_markers(MarkerList::Resumptive, &["其", "此"]);
    res.set_markers(MarkerList::Determiners, &["the", "a", "an", "this", "that", "these", "those"]);
    res.set_markers(MarkerList::Copulas, &["is", "are", "was", "were", "be", "been", "am"]);
    res.set_markers(MarkerList::AnticipatoryIt, &["it"]);
    res
}

/// One templated pair before assembly: tagged text before, inside and after
/// the unit on each side.
#[derive(Default)]
struct Draft {
    src: [String; 3],
    tgt: [String; 3],
}

impl Draft {
    fn new(src: [&str; 3], tgt: [&str; 3]) -> Self {
        Draft {
            src: src.map(str::to_string),
            tgt: tgt.map(str::to_string),
        }
    }
}

fn tokens(text: &str, lang: Lang) -> Vec<Token> {
    Sentence::parse_tagged(text, lang).tokens
}

fn assemble(id: String, draft: &Draft, technique: TechniqueLabel) -> PairRecord {
    let side = |parts: &[String; 3], lang: Lang| {
        let pre = tokens(&parts[0], lang);
        let unit = tokens(&parts[1], lang);
        let post = tokens(&parts[2], lang);
        let span = if unit.is_empty() {
            None
        } else {
            Some(Span::new(pre.len(), pre.len() + unit.len()).expect("non-empty unit"))
        };
        let mut all = pre;
        all.extend(unit);
        all.extend(post);
        (Sentence::new(all, lang), span)
    };
    let (source, s) = side(&draft.src, Lang::En);
    let (target, t) = side(&draft.tgt, Lang::Zh);
    PairRecord {
        id,
        source,
        target,
        unit: AlignedUnit { source: s, target: t },
        technique: Some(technique),
        quality: None,
    }
}

struct Gen {
    rng: ChaCha8Rng,
}

impl Gen {
    fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        items.choose(&mut self.rng).expect("non-empty pool")
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn tail(&mut self) -> (String, String) {
        let (e, z) = self.pick(TAILS);
        (e.to_string(), z.to_string())
    }

    fn person(&mut self) -> (&'static str, &'static str, &'static str) {
        *self.pick(PEOPLE)
    }

    fn object(&mut self) -> (&'static str, &'static str, &'static str) {
        *self.pick(OBJECTS)
    }

    fn lit(&mut self) -> Draft {
        let (s, sz, _) = self.person();
        let (te, tz) = self.tail();
        let (v, _, vz) = *self.pick(TRANSITIVE);
        let (o, oz, _) = self.object();
        match self.rng.random_range(0..4) {
            0 => {
                let (a, az) = *self.pick(ADJECTIVES);
                Draft::new(
                    [&format!("the/DET {s}/NOUN {v}/VERB the/DET"), &format!("{a}/ADJ {o}/NOUN"), &format!("{te} ./PUNCT")],
                    [&format!("{sz}/NOUN {tz} {vz}/VERB 了/PART"), &format!("{az}/ADJ {oz}/NOUN"), "。/PUNCT"],
                )
            }
            1 => {
                let (_, vzh, third, _) = *self.pick(VERBS);
                Draft::new(
                    [&format!("the/DET {s}/NOUN"), &format!("{third}/VERB"), &format!("the/DET {o}/NOUN ./PUNCT")],
                    [&format!("{sz}/NOUN"), &format!("{vzh}/VERB"), &format!("{oz}/NOUN 。/PUNCT")],
                )
            }
            2 => {
                let (_, vzh, _, past) = *self.pick(VERBS);
                Draft::new(
                    [&format!("the/DET {s}/NOUN"), &format!("{past}/VERB"), &format!("the/DET {o}/NOUN {te} ./PUNCT")],
                    [&format!("{sz}/NOUN {tz}"), &format!("{vzh}/VERB 了/PART"), &format!("{oz}/NOUN 。/PUNCT")],
                )
            }
            _ => {
                let (p, pz, _) = self.person();
                Draft::new(
                    [&format!("the/DET {s}/NOUN {v}/VERB the/DET"), &format!("{p}s/NOUN"), &format!("{te} ./PUNCT")],
                    [&format!("{sz}/NOUN {tz} {vz}/VERB 了/PART"), &format!("{pz}们/NOUN"), "。/PUNCT"],
                )
            }
        }
    }

    fn lex(&mut self) -> Draft {
        let (te, tz) = self.tail();
        let (_, vzh, _, past) = *self.pick(VERBS);
        if self.chance(0.5) {
            let (s, sz, _) = self.person();
            let (o, oz, _) = self.object();
            Draft::new(
                [&format!("the/DET {s}/NOUN"), &format!("has/AUX {past}/VERB"), &format!("the/DET {o}/NOUN ./PUNCT")],
                [&format!("{sz}/NOUN"), &format!("{vzh}/VERB"), &format!("{oz}/NOUN 。/PUNCT")],
            )
        } else {
            let (o, oz, _) = self.object();
            Draft::new(
                [&format!("the/DET {o}/NOUN"), &format!("was/AUX {past}/VERB"), &format!("{te} ./PUNCT")],
                [&format!("{oz}/NOUN {tz}"), &format!("{vzh}/VERB"), "。/PUNCT"],
            )
        }
    }

    fn tra(&mut self) -> Draft {
        let (s, sz, _) = self.person();
        let (te, tz) = self.tail();
        if self.chance(0.5) {
            let (n, vz) = *self.pick(TRA_NOUNS);
            Draft::new(
                [&format!("the/DET {s}/NOUN made/VERB"), &format!("a/DET {n}/NOUN"), &format!("{te} ./PUNCT")],
                [&format!("{sz}/NOUN {tz}"), &format!("{vz}/VERB"), "了/PART 。/PUNCT"],
            )
        } else {
            let (a, vz) = *self.pick(TRA_ADJECTIVES);
            Draft::new(
                [&format!("the/DET {s}/NOUN"), &format!("was/AUX {a}/ADJ"), &format!("{te} ./PUNCT")],
                [&format!("{sz}/NOUN {tz}"), &format!("{vz}/VERB"), "。/PUNCT"],
            )
        }
    }

    fn gen(&mut self) -> Draft {
        let (s, sz, pron) = self.person();
        let (te, tz) = self.tail();
        let (v, _, vz) = *self.pick(TRANSITIVE);
        if self.chance(0.6) {
            let (h, _, _, gz, cls) = *self.pick(HYPONYMS);
            Draft::new(
                [&format!("the/DET {s}/NOUN {v}/VERB a/DET"), &format!("{h}/NOUN"), &format!("{te} ./PUNCT")],
                [&format!("{sz}/NOUN {tz} {vz}/VERB 了/PART 一/NUM {cls}/PART"), &format!("{gz}/NOUN"), "。/PUNCT"],
            )
        } else {
            let (o, oz, _) = self.object();
            Draft::new(
                ["the/DET", &format!("{s}/NOUN"), &format!("{v}/VERB the/DET {o}/NOUN {te} ./PUNCT")],
                ["", &format!("{pron}/PRON"), &format!("{tz} {vz}/VERB 了/PART {oz}/NOUN 。/PUNCT")],
            )
        }
    }

    fn par(&mut self) -> Draft {
        let (s, sz, pron) = self.person();
        let (te, tz) = self.tail();
        let (v, _, vz) = *self.pick(TRANSITIVE);
        if self.chance(0.6) {
            let (g, _, specific, cls) = *self.pick(HYPERNYMS);
            let (_, spz) = *self.pick(specific);
            Draft::new(
                [&format!("the/DET {s}/NOUN {v}/VERB the/DET"), &format!("{g}/NOUN"), &format!("{te} ./PUNCT")],
                [&format!("{sz}/NOUN {tz} {vz}/VERB 了/PART 那/DET {cls}/PART"), &format!("{spz}/NOUN"), "。/PUNCT"],
            )
        } else {
            let (o, oz, _) = self.object();
            let en = if pron == "她" { "she" } else { "he" };
            Draft::new(
                ["", &format!("{en}/PRON"), &format!("{v}/VERB the/DET {o}/NOUN {te} ./PUNCT")],
                ["", &format!("{sz}/NOUN"), &format!("{tz} {vz}/VERB 了/PART {oz}/NOUN 。/PUNCT")],
            )
        }
    }

    fn mot(&mut self) -> Draft {
        let (s, sz, _) = self.person();
        let (te, tz) = self.tail();
        let (v, _, vz) = *self.pick(INTRANSITIVE);
        let (unit, mz, mpos) = *self.pick(MOT_UNITS);
        Draft::new(
            [&format!("the/DET {s}/NOUN {v}/VERB"), unit, &format!("{te} ./PUNCT")],
            [&format!("{sz}/NOUN {tz}"), &format!("{mz}/{mpos}"), &format!("{vz}/VERB 了/PART 。/PUNCT")],
        )
    }

    fn modulation(&mut self) -> Draft {
        if self.chance(0.6) {
            let (src, tgt, personal) = *self.pick(MOD_NEGATIONS);
            let (subject, sz) = if personal {
                let (s, sz, _) = self.person();
                (s, sz)
            } else {
                *self.pick(TOPICS)
            };
            if src.ends_with("/VERB") {
                let (t, tz) = *self.pick(TOPICS);
                Draft::new(
                    [&format!("the/DET {subject}/NOUN"), src, &format!("the/DET {t}/NOUN ./PUNCT")],
                    [&format!("{sz}/NOUN"), tgt, &format!("{tz}/NOUN 。/PUNCT")],
                )
            } else {
                Draft::new(
                    [&format!("the/DET {subject}/NOUN was/AUX"), src, "./PUNCT"],
                    [&format!("{sz}/NOUN"), tgt, "。/PUNCT"],
                )
            }
        } else {
            let (adj, _, zh, _, personal) = *self.pick(MOD_SHIFTS);
            let (subject, sz) = if personal {
                let (s, sz, _) = self.person();
                (s, sz)
            } else {
                *self.pick(PLACES)
            };
            Draft::new(
                [&format!("the/DET {subject}/NOUN was/AUX"), &format!("{adj}/ADJ"), "./PUNCT"],
                [&format!("{sz}/NOUN 很/ADV"), &format!("{zh}/ADJ"), "。/PUNCT"],
            )
        }
    }

    fn equ(&mut self) -> Draft {
        let (frame, idiom, zframe, zh, zpos) = *self.pick(IDIOMS);
        let (s, sz, _) = self.person();
        let (t, tz) = *self.pick(TOPICS);
        let (o, oz, _) = self.object();
        let fill = |f: &str| f.replace("{S}", s).replace("{T}", t).replace("{O}", o);
        let zfill = |f: &str| f.replace("{S}", sz).replace("{T}", tz).replace("{O}", oz);
        Draft::new(
            [&fill(frame), idiom, "./PUNCT"],
            [&zfill(zframe), &format!("{zh}/{zpos}"), "。/PUNCT"],
        )
    }

    fn exp(&mut self) -> Draft {
        let (s, sz, _) = self.person();
        let (v, _, vz) = *self.pick(TRANSITIVE);
        let (o, oz, cls) = self.object();
        let (te, tz) = self.tail();
        if self.chance(0.6) {
            Draft::new(
                [&format!("the/DET {s}/NOUN {v}/VERB a/DET {o}/NOUN {te} ./PUNCT"), "", ""],
                [&format!("{sz}/NOUN {tz} {vz}/VERB 了/PART 一/NUM"), &format!("{cls}/PART"), &format!("{oz}/NOUN 。/PUNCT")],
            )
        } else {
            let c = *self.pick(CONNECTIVES);
            let (vi, _, viz) = *self.pick(INTRANSITIVE);
            Draft::new(
                [&format!("the/DET {s}/NOUN {v}/VERB the/DET {o}/NOUN and/CONJ {vi}/VERB ./PUNCT"), "", ""],
                [&format!("{sz}/NOUN {vz}/VERB 了/PART {oz}/NOUN ，/PUNCT"), &format!("{c}/CONJ"), &format!("{viz}/VERB 了/PART 。/PUNCT")],
            )
        }
    }

    fn red(&mut self) -> Draft {
        let (s, sz, pron) = self.person();
        let (te, tz) = self.tail();
        match self.rng.random_range(0..10) {
            0..=3 => {
                let (v, _, vz) = *self.pick(TRANSITIVE);
                let (o, oz, _) = self.object();
                Draft::new(
                    [&format!("the/DET {s}/NOUN {v}/VERB"), "the/DET", &format!("{o}/NOUN {te} ./PUNCT")],
                    [&format!("{sz}/NOUN {tz} {vz}/VERB 了/PART {oz}/NOUN 。/PUNCT"), "", ""],
                )
            }
            4..=6 => {
                let (v, vz, part, pz) = *self.pick(BODY);
                let poss = if pron == "她" { "her" } else { "his" };
                Draft::new(
                    [&format!("the/DET {s}/NOUN {v}/VERB"), &format!("{poss}/PRON"), &format!("{part}/NOUN {te} ./PUNCT")],
                    [&format!("{sz}/NOUN {tz} {vz}/VERB 了/PART {pz}/NOUN 。/PUNCT"), "", ""],
                )
            }
            7 => {
                let (d, dz) = *self.pick(DAYS);
                Draft::new(
                    [&format!("the/DET {s}/NOUN arrived/VERB"), "on/ADP", &format!("{d}/NOUN ./PUNCT")],
                    [&format!("{sz}/NOUN {dz}/NOUN 到达/VERB 了/PART 。/PUNCT"), "", ""],
                )
            }
            _ => {
                let (p, pz) = *self.pick(PLACES);
                let (a, az) = *self.pick(&[("quiet", "安静"), ("big", "大"), ("beautiful", "美丽"), ("bright", "明亮")]);
                Draft::new(
                    [&format!("the/DET {p}/NOUN"), "is/AUX", &format!("{a}/ADJ ./PUNCT")],
                    [&format!("{pz}/NOUN 很/ADV {az}/ADJ 。/PUNCT"), "", ""],
                )
            }
        }
    }
}

/// Share of each technique among generated records, in percent.
const MIX: &[(TechniqueLabel, u32)] = &[
    (TechniqueLabel::Lit, 22),
    (TechniqueLabel::Lex, 9),
    (TechniqueLabel::Tra, 9),
    (TechniqueLabel::Gen, 9),
    (TechniqueLabel::Par, 9),
    (TechniqueLabel::Mot, 9),
    (TechniqueLabel::Mod, 9),
    (TechniqueLabel::Equ, 7),
    (TechniqueLabel::Exp, 8),
    (TechniqueLabel::Red, 9),
];

/// `n` templated records. Techniques are interleaved deterministically in
/// the proportions of the mix.
pub fn generate_records(n: usize, seed: u64) -> Vec<PairRecord> {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let total: u32 = MIX.iter().map(|m| m.1).sum();
    (0..n)
        .map(|i| {
            let slot = (i as u32 * 37) % total;
            let mut acc = 0;
            let technique = MIX
                .iter()
                .find(|(_, w)| {
                    acc += w;
                    slot < acc
                })
                .map(|m| m.0)
                .expect("slot below total");
            let draft = match technique {
                TechniqueLabel::Lit => g.lit(),
                TechniqueLabel::Lex => g.lex(),
                TechniqueLabel::Tra => g.tra(),
                TechniqueLabel::Gen => g.gen(),
                TechniqueLabel::Par => g.par(),
                TechniqueLabel::Mot => g.mot(),
                TechniqueLabel::Mod => g.modulation(),
                TechniqueLabel::Equ => g.equ(),
                TechniqueLabel::Exp => g.exp(),
                TechniqueLabel::Red => g.red(),
            };
            assemble(format!("demo-{i:05}"), &draft, technique)
        })
        .collect()
}

/// Vectors for every token in `records`: English words share a random
/// direction with their first gloss, everything else is random.
pub fn demo_embeddings(records: &[PairRecord], res: &RuleResources, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x656d_6265_6464);
    let random = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..EMBEDDING_DIM).map(|_| rng.random_range(-1.0..1.0)).collect()
    };
    let mut lemmas: BTreeSet<String> = BTreeSet::new();
    let mut english: BTreeSet<String> = BTreeSet::new();
    let mut chinese: BTreeSet<String> = BTreeSet::new();
    for r in records {
        for t in &r.source.tokens {
            english.insert(t.surface.to_lowercase());
            if let Some(hit) = res.lookup(&t.surface, t.pos) {
                lemmas.insert(hit.lemma);
            }
        }
        for t in &r.target.tokens {
            chinese.insert(t.surface.clone());
        }
    }
    let lemma_vecs: std::collections::BTreeMap<String, Vec<f64>> =
        lemmas.into_iter().map(|l| { let v = random(&mut rng); (l, v) }).collect();
    let noisy = |base: &[f64], rng: &mut ChaCha8Rng| -> Vec<f64> {
        base.iter().map(|x| x + rng.random_range(-0.1..0.1)).collect()
    };
    let mut table = EmbeddingTable::new(EMBEDDING_DIM).expect("positive dim");
    for w in &english {
        let v = match res.lookup(w, None).and_then(|h| lemma_vecs.get(&h.lemma)) {
            Some(base) => noisy(base, &mut rng),
            None => random(&mut rng),
        };
        table.insert(w.clone(), v).expect("dimension matches");
    }
    for w in &chinese {
        let base = res
            .back_glosses(w)
            .iter()
            .find_map(|l| lemma_vecs.get(l));
        let v = match base {
            Some(b) => noisy(b, &mut rng),
            None => random(&mut rng),
        };
        table.insert(w.clone(), v).expect("dimension matches");
    }
    table
}

fn write_embeddings(table: &EmbeddingTable, words: &[String], path: &Path) -> Result<()> {
    let mut out = format!("{} {}\n", words.len(), table.dim());
    for w in words {
        let v = table.get(w).expect("word was inserted");
        out.push_str(w);
        for x in v {
            out.push_str(&format!(" {x:.6}"));
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub const DEMO_CONFIG: &str = r#"# Demo pipeline configuration. Paths are relative to --workdir.
seed = 7

[paths]
corpus = "corpus.jsonl"
resources = "resources"
bitext = "bitext.tsv"
output = "out"

[model]
architectures = ["A1", "A2", "A3", "A4"]

[features]
hash_dim = 4096

[train]
hidden = 32
max_epochs = 20
patience = 4
learning_rate = 0.002
"#;

/// Writes `corpus.jsonl`, `resources/`, `bitext.tsv`, `embeddings.txt` and
/// `pipeline.toml` into `dir`.
pub fn write_demo(dir: &Path, n: usize, seed: u64) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let records = generate_records(n, seed);
    let res = demo_resources();
    save_corpus(&records, &dir.join("corpus.jsonl"), Format::Jsonl)?;
    res.save_dir(&dir.join("resources"))?;
    save_bitext(&crate::align::bitext_from_records(&records), &dir.join("bitext.tsv"))?;
    let table = demo_embeddings(&records, &res, seed);
    let mut words: BTreeSet<String> = BTreeSet::new();
    for r in &records {
        words.extend(r.source.tokens.iter().map(|t| t.surface.to_lowercase()));
        words.extend(r.target.tokens.iter().map(|t| t.surface.clone()));
    }
    let words: Vec<String> = words.into_iter().collect();
    write_embeddings(&table, &words, &dir.join("embeddings.txt"))?;
    let cfg = dir.join("pipeline.toml");
    fs::write(&cfg, DEMO_CONFIG).map_err(|e| Error::io(&cfg, e))
}
