use textscene_core::corpus::templates::plural;
use textscene_core::corpus::{describe, generate, Condition, CorpusConfig, Family, Split, SynonymTable};
use textscene_core::scene::{Class, Color, Feature, Mode, Motion, ObjectSpec, Shape, Size, Texture};
use textscene_core::text::tokenize;

/// Reads features back out of the words inside one mention span.
fn parse_mention(tokens: &[String], table: &SynonymTable) -> (Option<Shape>, Vec<(Feature, &'static str)>) {
    let words = |key: &'static str| -> Vec<String> {
        table.alternatives(key).iter().flat_map(|w| tokenize(w)).collect()
    };
    let mut shape = None;
    let mut found = Vec::new();
    for t in tokens {
        for &s in Shape::ALL {
            if t == s.name() || t == plural(s) {
                shape = Some(s);
            }
        }
        let mut check = |feature: Feature, names: Vec<&'static str>| {
            for n in names {
                if words(n).contains(t) {
                    found.push((feature, n));
                }
            }
        };
        check(Feature::Color, Color::ALL.iter().map(|c| c.name()).collect());
        check(Feature::Size, Size::ALL.iter().map(|c| c.name()).collect());
        check(Feature::Texture, Texture::ALL.iter().map(|c| c.name()).collect());
        check(Feature::Motion, Motion::ALL.iter().map(|c| c.name()).collect());
    }
    (shape, found)
}

fn expected(obj: &ObjectSpec) -> Vec<(Feature, &'static str)> {
    [Feature::Color, Feature::Size, Feature::Texture, Feature::Motion]
        .into_iter()
        .filter_map(|f| obj.class_name(f).map(|n| (f, n)))
        .collect()
}

#[test]
fn narrative_mentions_recover_the_exact_layout() {
    for mode in [Mode::Static, Mode::Animated] {
        let config = CorpusConfig::scaled(mode, 11, 300, 0, 0);
        let corpus = generate(&config).unwrap();
        let mut checked = 0;
        for s in corpus.all().filter(|s| s.family == Family::Narrative) {
            let d = describe(s, &config).unwrap();
            assert_eq!(d.text, s.text);
            assert_eq!(d.spans.len(), s.layout.objects.len());
            for (obj, &(a, b)) in s.layout.objects.iter().zip(&d.spans) {
                let (shape, mut feats) = parse_mention(&d.tokens[a..b], &config.synonyms);
                assert_eq!(shape, Some(obj.shape), "{}", s.text);
                let mut want = expected(obj);
                feats.sort();
                want.sort();
                assert_eq!(feats, want, "{}", s.text);
            }
            checked += 1;
        }
        assert!(checked > 150);
    }
}

#[test]
fn targets_follow_mention_order() {
    let config = CorpusConfig::scaled(Mode::Full, 5, 400, 0, 0);
    let corpus = generate(&config).unwrap();
    for s in corpus.all().filter(|s| s.family != Family::Quantitative) {
        let d = describe(s, &config).unwrap();
        assert!(d.spans.windows(2).all(|w| w[0].1 <= w[1].0), "{}", s.text);
    }
}

#[test]
fn semi_narrative_mentions_only_state_what_they_keep() {
    let config = CorpusConfig::scaled(Mode::Animated, 3, 400, 0, 0);
    let corpus = generate(&config).unwrap();
    for s in corpus.all().filter(|s| s.family == Family::SemiNarrative) {
        let d = describe(s, &config).unwrap();
        for ((obj, &(a, b)), stated) in s.layout.objects.iter().zip(&d.spans).zip(&d.stated) {
            let (shape, feats) = parse_mention(&d.tokens[a..b], &config.synonyms);
            assert_eq!(shape, Some(obj.shape));
            assert!(stated.contains(Feature::Shape));
            for (f, name) in expected(obj) {
                assert_eq!(feats.contains(&(f, name)), stated.contains(f), "{} {:?}", s.text, f);
            }
        }
    }
}

#[test]
fn quantitative_texts_state_only_counts() {
    let config = CorpusConfig::scaled(Mode::Static, 9, 400, 0, 0);
    let corpus = generate(&config).unwrap();
    for s in corpus.all().filter(|s| s.family == Family::Quantitative) {
        let tokens = tokenize(&s.text);
        let (_, feats) = parse_mention(&tokens, &config.synonyms);
        assert!(feats.is_empty(), "{}", s.text);
    }
}

#[test]
fn cond_b_tests_mostly_hold_withheld_pairs() {
    let config = CorpusConfig::scaled(Mode::Static, 2, 0, 0, 2000);
    let corpus = generate(&config).unwrap();
    let b = corpus.get(Split::Test, Condition::CondB);
    let rate = textscene_core::corpus::forbidden_pair_rate(b, &config.rules.cond_a, 3);
    assert!(rate >= 0.99, "{rate}");
}
