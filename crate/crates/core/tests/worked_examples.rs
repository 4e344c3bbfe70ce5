use std::path::{Path, PathBuf};

use wordclosure::align::{refine, RefineOptions};
use wordclosure::closure::build_closures;
use wordclosure::io::read_pairs;
use wordclosure::model::{ClosureKind, FailReason, FineGrainedViolation, TestCasePair};
use wordclosure::pipeline::{check_corpus, evaluate, sweep, theta_grid, Checker, ResourceFiles};
use wordclosure::similarity::{ConfigKind, LangPair, Thresholds};
use wordclosure::treebank::parse_bracket;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn corpus() -> Vec<TestCasePair> {
    read_pairs(fixtures().join("fixtures.jsonl"), LangPair::EnZh, true).unwrap().pairs
}

fn pair(id: &str) -> TestCasePair {
    corpus().into_iter().find(|p| p.id == id).unwrap()
}

fn checker(kind: ConfigKind) -> Checker {
    let d = fixtures();
    let files = ResourceFiles {
        synonyms: Some(d.join("synonyms.tsv")),
        vectors: Some(d.join("vectors.txt")),
        stopwords: Some(d.join("stopwords.txt")),
    };
    Checker::from_files(kind, &files, Thresholds::defaults(LangPair::EnZh), LangPair::EnZh).unwrap().0
}

#[test]
fn fixture_trees_match_their_translations() {
    for p in corpus() {
        for (tree, text) in [
            (&p.tree_source_translation, &p.source_translation),
            (&p.tree_followup_translation, &p.followup_translation),
        ] {
            if let Some(t) = tree {
                assert_eq!(parse_bracket(t).unwrap().leaves(), text.tokens, "{}", p.id);
            }
        }
    }
}

#[test]
fn refinement_extends_the_alignments() {
    let p = pair("patinv-fn");
    let r = refine(&p, &RefineOptions::default()).unwrap();
    assert!(r.pair.alignment_source.is_superset(&p.alignment_source));
    assert!(r.pair.alignment_source.contains(1, 2));
    assert!(r.pair.alignment_source.contains(14, 8));
    let p = pair("cit-fn");
    let r = refine(&p, &RefineOptions::default()).unwrap();
    assert!(r.pair.alignment_source.contains(5, 3));
    assert!(r.pair.alignment_followup.contains(7, 5));
}

#[test]
fn closure_counts_per_fixture() {
    let expected = [
        ("patinv-fn", 15),
        ("sit-fn", 22),
        ("cit-fn", 12),
        ("cat-fp", 11),
        ("purity-fp", 8),
        ("color-it2", 6),
    ];
    for (id, n) in expected {
        let r = refine(&pair(id), &RefineOptions::default()).unwrap();
        let cs = build_closures(&r.pair, &r.input_map);
        assert_eq!(cs.len(), n, "{id}");
        let touched: usize = cs.iter().map(|c| c.sets.sent_s.len()).sum();
        assert_eq!(touched, r.pair.source_input.len(), "{id}");
    }
}

#[test]
fn mutated_closures_hold_the_mutated_words() {
    let r = refine(&pair("color-it2"), &RefineOptions::default()).unwrap();
    let cs = build_closures(&r.pair, &r.input_map);
    let mwc: Vec<_> = cs.iter().filter(|c| c.kind == ClosureKind::Mwc).collect();
    // Replaced words are not linked across inputs, so each side gets its own.
    assert_eq!(mwc.len(), 2);
    let t = &r.pair.transformation;
    assert!(t.mutated_source.iter().all(|i| mwc.iter().any(|c| c.sets.sent_s.contains(i))));
    assert!(t.mutated_followup.iter().all(|i| mwc.iter().any(|c| c.sets.sent_f.contains(i))));
}

#[test]
fn fixture_verdicts_under_the_default_configuration() {
    let c = checker(ConfigKind::SynonymOrStatic);
    let expect = [
        ("patinv-fn", Some(FineGrainedViolation::new([4], [3]))),
        ("sit-fn", Some(FineGrainedViolation::new([0, 22], [20, 21]))),
        ("cit-fn", Some(FineGrainedViolation::new([], [3]))),
        ("cat-fp", None),
        ("purity-fp", None),
        ("color-it2", Some(FineGrainedViolation::new([4], [4]))),
    ];
    for (id, fine) in expect {
        let v = c.check(&pair(id)).unwrap();
        match fine {
            Some(f) => {
                assert!(v.violation, "{id}");
                assert_eq!(v.fine_grained, f, "{id}");
            }
            None => assert!(!v.violation, "{id}: {:?}", v.failures),
        }
    }
    let v = c.check(&pair("patinv-fn")).unwrap();
    assert!(v.failures.iter().all(|f| f.reason == FailReason::CwcDissimilar));
}

#[test]
fn exact_match_flags_the_paraphrased_fixtures() {
    // No sidecar and no static table leaves surface comparison only.
    let files = ResourceFiles {
        synonyms: None,
        vectors: None,
        stopwords: Some(fixtures().join("stopwords.txt")),
    };
    let c = Checker::from_files(ConfigKind::ContextualVector, &files, Thresholds::uniform(0.5), LangPair::EnZh)
        .unwrap()
        .0;
    let v = c.check(&pair("cat-fp")).unwrap();
    assert!(v.violation);
    assert_eq!(v.fine_grained, FineGrainedViolation::new([2, 3], [10, 11]));
    // With the static table as fallback the paraphrase is accepted.
    assert!(!checker(ConfigKind::ContextualVector).check(&pair("cat-fp")).unwrap().violation);
}

#[test]
fn evaluation_and_sweep_on_fixtures() {
    let c = checker(ConfigKind::SynonymOrStatic);
    let pairs = corpus();
    let outcomes = check_corpus(&c, &pairs, 2).unwrap();
    let e = evaluate(&pairs, &outcomes).unwrap();
    assert_eq!((e.confusion.tp, e.confusion.fp, e.confusion.fn_, e.confusion.tn), (4, 0, 0, 2));
    assert_eq!(e.fine_counts.fp, 0);
    assert_eq!(e.fine_counts.fn_, 0);

    let grid = theta_grid(0.0, 1.0, 0.25).unwrap();
    assert_eq!(grid, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    let s = sweep(&c, &pairs, &grid, 1).unwrap();
    assert_eq!(s.overall.pairs, 6);
    assert_eq!(s.by_transformation.len(), 5);
    assert_eq!(s.by_transformation["IT-2"].pairs, 2);
    let best = s.overall.points.iter().map(|p| p.f1).fold(0.0, f64::max);
    assert_eq!(s.overall.best_f1, best);
    let first_best = s.overall.points.iter().find(|p| p.f1 == best).unwrap();
    assert_eq!(s.overall.best_theta, first_best.theta);
}
