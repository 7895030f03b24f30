use std::collections::BTreeSet;

use proptest::prelude::*;

use transtech::align::{embed_align, lexical_align, train_lexical_model, train_lexical_model_traced, EmbeddingTable};
use transtech::corpus::{
    from_json_line, split, to_json_line, AlignedUnit, Lang, PairRecord, Pos, QualityLabel, Sentence,
    Span, SplitRatios, TechniqueLabel, Token,
};
use transtech::demo::{demo_resources, generate_records};
use transtech::encode::{FeatureConfig, Featurizer, InputFormat};
use transtech::eval::evaluate;
use transtech::model::softmax;

const EN: &[&str] = &["dog", "cat", "runs", "the", "big", "house", "sleeps", "red"];
const ZH: &[&str] = &["狗", "猫", "跑", "大", "房子", "睡觉", "红"];

fn sentence(words: &'static [&'static str], lang: Lang) -> impl Strategy<Value = Sentence> {
    prop::collection::vec(prop::sample::select(words), 1..6).prop_map(move |ws| {
        Sentence::new(ws.into_iter().map(|w| Token::new(w, Pos::Noun)).collect(), lang)
    })
}

fn bitext() -> impl Strategy<Value = Vec<(Sentence, Sentence)>> {
    prop::collection::vec((sentence(EN, Lang::En), sentence(ZH, Lang::Zh)), 1..8)
}

fn span_in(len: usize) -> impl Strategy<Value = Option<Span>> {
    prop_oneof![
        1 => Just(None),
        4 => (0..len).prop_flat_map(move |s| (Just(s), s + 1..=len))
            .prop_map(|(s, e)| Some(Span::new(s, e).unwrap())),
    ]
}

fn pair_record() -> impl Strategy<Value = PairRecord> {
    (sentence(EN, Lang::En), sentence(ZH, Lang::Zh), "[a-z0-9.-]{1,12}", 0usize..10, 0usize..4)
        .prop_flat_map(|(s, t, id, tech, q)| {
            let (sl, tl) = (s.len(), t.len());
            (Just(s), Just(t), Just(id), Just(tech), Just(q), span_in(sl), span_in(tl))
        })
        .prop_map(|(s, t, id, tech, q, a, b)| {
            // EXP has no source unit, RED no target unit, everything else both
            match TechniqueLabel::ALL[tech] {
                TechniqueLabel::Exp => (s, t, id, tech, q, None, b.or(Some(Span::new(0, 1).unwrap()))),
                TechniqueLabel::Red => (s, t, id, tech, q, a.or(Some(Span::new(0, 1).unwrap())), None),
                _ => (s, t, id, tech, q, a.or(Some(Span::new(0, 1).unwrap())), b.or(Some(Span::new(0, 1).unwrap()))),
            }
        })
        .prop_map(|(source, target, id, tech, q, a, b)| PairRecord {
            id,
            source,
            target,
            unit: AlignedUnit { source: a, target: b },
            technique: Some(TechniqueLabel::ALL[tech]),
            // BAD never carries LIT
            quality: [None, Some(QualityLabel::GoodLit), Some(QualityLabel::GoodNonlit), Some(QualityLabel::Bad)]
                [if tech == 0 && q == 3 { 1 } else { q }],
        })
}

fn labeled(i: usize, class: usize) -> PairRecord {
    PairRecord {
        id: format!("r{i}"),
        source: Sentence::new(vec![Token::new("dog", Pos::Noun)], Lang::En),
        target: Sentence::new(vec![Token::new("狗", Pos::Noun)], Lang::Zh),
        unit: AlignedUnit {
            source: Some(Span::new(0, 1).unwrap()),
            target: Some(Span::new(0, 1).unwrap()),
        },
        technique: Some(TechniqueLabel::ALL[class % 10]),
        quality: Some([QualityLabel::GoodNonlit, QualityLabel::Bad][class / 10]),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip(r in pair_record()) {
        prop_assert_eq!(from_json_line(&to_json_line(&r)).unwrap(), r);
    }

    #[test]
    fn split_is_a_stratified_partition(
        counts in prop::collection::vec(3usize..120, 1..20),
        seed in any::<u64>(),
    ) {
        let mut records = Vec::new();
        for (class, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                records.push(labeled(records.len(), class));
            }
        }
        let ratios = SplitRatios::new(0.81, 0.09, 0.10).unwrap();
        let parts = split(&records, ratios, seed).unwrap();
        prop_assert_eq!([parts.train.len(), parts.dev.len(), parts.test.len()], ratios.sizes(records.len()));
        let ids: Vec<&str> = parts.train.iter().chain(&parts.dev).chain(&parts.test).map(|r| r.id.as_str()).collect();
        let unique: BTreeSet<&str> = ids.iter().copied().collect();
        prop_assert_eq!(ids.len(), records.len());
        prop_assert_eq!(unique.len(), records.len());
        let total = records.len() as f64;
        for (class, &n) in counts.iter().enumerate() {
            let key = labeled(0, class).label_key();
            for part in [&parts.train, &parts.dev, &parts.test] {
                let got = part.iter().filter(|r| r.label_key() == key).count() as f64;
                let share = n as f64 * part.len() as f64 / total;
                prop_assert!((got - share).abs() < 1.0, "class {} of {}: {} vs {}", class, n, got, share);
            }
        }
        let again = split(&records, ratios, seed).unwrap();
        prop_assert_eq!((again.train, again.dev, again.test), (parts.train, parts.dev, parts.test));
    }

    #[test]
    fn em_log_likelihood_never_decreases(pairs in bitext(), iters in 1usize..8) {
        let (table, ll) = train_lexical_model_traced(&pairs, iters).unwrap();
        prop_assert_eq!(ll.len(), iters + 1);
        for w in ll.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9, "{:?}", ll);
        }
        prop_assert!(table.max_row_deviation() <= 1e-9);
    }

    #[test]
    fn alignment_partitions_tokens_and_respects_threshold(pairs in bitext(), lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let table = train_lexical_model(&pairs, 5).unwrap();
        for (s, t) in &pairs {
            let a = lexical_align(s, t, &table, lo).unwrap();
            let b = lexical_align(s, t, &table, hi).unwrap();
            let linked: BTreeSet<usize> = a.links.iter().map(|l| l.0).collect();
            prop_assert_eq!(linked.len(), a.links.len(), "one link per source token");
            prop_assert_eq!(linked.len() + a.unaligned_source.len(), s.len());
            for l in &a.links {
                prop_assert!(l.1 < t.len() && table.prob(&s.tokens[l.0].surface, &t.tokens[l.1].surface) >= lo);
            }
            let tgt_linked: BTreeSet<usize> = a.links.iter().map(|l| l.1).collect();
            prop_assert_eq!(tgt_linked.len() + a.unaligned_target.len(), t.len());
            for l in &b.links {
                prop_assert!(a.links.contains(l), "raising the threshold added {:?}", l);
            }
        }
    }

    #[test]
    fn embedding_alignment_is_scale_invariant(
        vectors in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), EN.len() + ZH.len()),
        scale in 0.01f64..100.0,
        pairs in bitext(),
    ) {
        let mut a = EmbeddingTable::new(3).unwrap();
        let mut b = EmbeddingTable::new(3).unwrap();
        for (w, v) in EN.iter().chain(ZH).zip(&vectors) {
            a.insert(*w, v.clone()).unwrap();
            b.insert(*w, v.iter().map(|x| x * scale).collect()).unwrap();
        }
        for (s, t) in &pairs {
            let x = embed_align(s, t, &a, 0.3).unwrap();
            let y = embed_align(s, t, &b, 0.3).unwrap();
            prop_assert_eq!(x.links, y.links);
        }
    }

    #[test]
    fn softmax_is_a_distribution(z in prop::collection::vec(-500.0f64..500.0, 1..12)) {
        let p = softmax(&z);
        prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn metrics_ignore_record_order(
        pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60),
        perm_seed in any::<u64>(),
    ) {
        let labels = ["A", "B", "C", "D"];
        let gold: Vec<&str> = pairs.iter().map(|p| labels[p.0]).collect();
        let pred: Vec<&str> = pairs.iter().map(|p| labels[p.1]).collect();
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by_key(|&i| (i as u64).wrapping_mul(perm_seed | 1).rotate_left(17));
        let g2: Vec<&str> = order.iter().map(|&i| gold[i]).collect();
        let p2: Vec<&str> = order.iter().map(|&i| pred[i]).collect();
        let a = evaluate(&gold, &pred, &labels).unwrap();
        let b = evaluate(&g2, &p2, &labels).unwrap();
        prop_assert_eq!(a.confusion.counts, b.confusion.counts);
        prop_assert!((a.accuracy - b.accuracy).abs() <= 1e-12 && (a.macro_f1 - b.macro_f1).abs() <= 1e-12);
        for c in &a.per_class {
            prop_assert!(c.f1 >= 0.0 && c.f1 <= 1.0);
        }
    }

    #[test]
    fn source_only_features_ignore_the_target(seed in 0u64..500, idx in 0usize..20, other in 0usize..20) {
        let res = demo_resources();
        let records = generate_records(20, seed);
        let featurizer = Featurizer::new(&res, FeatureConfig { hash_dim: 512, ..Default::default() });
        let mut swapped = records[idx].clone();
        for (i, tok) in swapped.target.tokens.iter_mut().enumerate() {
            tok.surface = format!("{}{}", records[other].target.tokens[i % records[other].target.len()].surface, i);
        }
        let a = featurizer.encode(&records[idx], InputFormat::Input1).unwrap();
        let b = featurizer.encode(&swapped, InputFormat::Input1).unwrap();
        prop_assert_eq!(a, b);
    }
}
