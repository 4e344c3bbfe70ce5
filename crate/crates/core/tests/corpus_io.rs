use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use wordclosure::align::RefineOptions;
use wordclosure::comparator::check_pair;
use wordclosure::io::{load_synonyms, load_vectors, parse_pair_line, read_pairs, read_pairs_from, PairRecord};
use wordclosure::model::{ContextualVectors, FineGrainedViolation, TransformKind};
use wordclosure::similarity::{load_stopwords, ConfigKind, LangPair, SimilarityProvider, Thresholds};
use wordclosure::Error;

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

#[test]
fn fixture_corpus_reads_strictly() {
    let out = read_pairs(fixtures().join("fixtures.jsonl"), LangPair::EnZh, true).unwrap();
    assert_eq!(out.pairs.len(), 6);
    assert!(out.diagnostics.is_empty());
    let kinds: Vec<TransformKind> = out.pairs.iter().map(|p| p.transformation.kind).collect();
    assert!(TransformKind::ALL.iter().all(|k| kinds.contains(k)));
    let purity = out.pairs.iter().find(|p| p.id == "purity-fp").unwrap();
    assert_eq!(purity.input_map.as_ref().unwrap().len(), 6);
    assert_eq!(purity.extra["lang"], "en-zh");
}

#[test]
fn fixture_resources_load() {
    let syn = load_synonyms(fixtures().join("synonyms.tsv")).unwrap();
    assert!(syn.synonyms("考试").contains("测试"));
    let (vec, warnings) = load_vectors(fixtures().join("vectors.txt")).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(vec.dim(), 24);
    let stop = load_stopwords(fixtures().join("stopwords.txt")).unwrap();
    assert!(stop.contains("在") && stop.contains("的"));
}

#[test]
fn every_fixture_line_round_trips_byte_for_byte_as_json() {
    let text = std::fs::read_to_string(fixtures().join("fixtures.jsonl")).unwrap();
    for line in text.lines() {
        let p = parse_pair_line(line, LangPair::EnZh).unwrap();
        let back = serde_json::to_value(PairRecord::from_pair(&p)).unwrap();
        let orig: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(back, orig, "{}", p.id);
    }
}

#[test]
fn schema_violations_are_reported_with_line_numbers() {
    let good = std::fs::read_to_string(fixtures().join("fixtures.jsonl")).unwrap();
    let first = good.lines().next().unwrap();
    let mut rec: serde_json::Value = serde_json::from_str(first).unwrap();
    rec["id"] = "oob".into();
    rec["alignment_source"][0] = serde_json::json!([99, 0]);
    let mut it3 = serde_json::from_str::<serde_json::Value>(good.lines().nth(4).unwrap()).unwrap();
    it3["id"] = "no-map".into();
    it3["transformation"].as_object_mut().unwrap().remove("input_map");
    let text = format!("{first}\n{rec}\n{it3}\n");
    let out = read_pairs_from(&text, "mem", LangPair::EnZh, false).unwrap();
    assert_eq!(out.pairs.len(), 1);
    assert_eq!(out.diagnostics.len(), 2);
    assert_eq!(out.diagnostics[0].line, 2);
    assert!(out.diagnostics[0].message.contains("alignment_in_bounds"));
    assert!(out.diagnostics[1].message.contains("input_map"));
    assert!(matches!(
        read_pairs_from(&text, "mem", LangPair::EnZh, true),
        Err(Error::Format { line: 2, .. })
    ));
}

fn sidecar_line() -> String {
    // 喜欢 and 爱 are out of every static table; the sidecar makes them close.
    serde_json::json!({
        "id": "ctx",
        "transformation": {"kind": "IT-1", "mutated_source_indices": [2], "mutated_followup_indices": [2]},
        "source_input": ["I", "like", "cats"],
        "followup_input": ["I", "like", "dogs"],
        "source_translation": ["我", "喜欢", "猫"],
        "followup_translation": ["我", "爱", "狗"],
        "alignment_source": [[0, 0], [1, 1], [2, 2]],
        "alignment_followup": [[0, 0], [1, 1], [2, 2]],
        "contextual_vectors": {
            "source": {"0": [1.0, 0.0], "1": [0.6, 0.8], "2": [0.0, 1.0]},
            "followup": {"0": [1.0, 0.0], "1": [0.8, 0.6], "2": [1.0, 0.0]}
        }
    })
    .to_string()
}

#[test]
fn contextual_sidecar_parses_and_drives_config_three() {
    let p = parse_pair_line(&sidecar_line(), LangPair::EnZh).unwrap();
    let cv = p.contextual_vectors.as_ref().unwrap();
    assert_eq!(cv.source[&1], vec![0.6, 0.8]);
    let stop = Default::default();
    // cos((0.6, 0.8), (0.8, 0.6)) = 0.96.
    let at = |t: f64| {
        let prov = SimilarityProvider::new(ConfigKind::ContextualVector, None, None, Thresholds::uniform(t)).unwrap();
        check_pair(&p, &prov, &stop, &RefineOptions::default()).unwrap()
    };
    assert!(!at(0.9).violation);
    let v = at(0.97);
    assert!(v.violation);
    assert_eq!(v.fine_grained, FineGrainedViolation::new([1], [1]));
}

#[test]
fn config_three_without_sidecar_falls_back_to_exact_match() {
    let mut p = parse_pair_line(&sidecar_line(), LangPair::EnZh).unwrap();
    p.contextual_vectors = None;
    let prov = SimilarityProvider::new(ConfigKind::ContextualVector, None, None, Thresholds::uniform(0.5)).unwrap();
    let v = check_pair(&p, &prov, &Default::default(), &RefineOptions::default()).unwrap();
    assert!(v.violation);
}

#[test]
fn sidecar_dimension_mismatch_is_invalid() {
    let mut rec: serde_json::Value = serde_json::from_str(&sidecar_line()).unwrap();
    rec["contextual_vectors"]["followup"]["2"] = serde_json::json!([1.0, 0.0, 0.0]);
    let err = parse_pair_line(&rec.to_string(), LangPair::EnZh).unwrap_err();
    assert!(err.contains("contextual_dimension"), "{err}");
    rec["contextual_vectors"]["followup"]["2"] = serde_json::json!([1.0, 0.0]);
    rec["contextual_vectors"]["followup"]["7"] = serde_json::json!([1.0, 0.0]);
    let err = parse_pair_line(&rec.to_string(), LangPair::EnZh).unwrap_err();
    assert!(err.contains("contextual_in_bounds"), "{err}");
}

#[test]
fn language_defaults_apply_when_records_omit_lang() {
    let p = parse_pair_line(&sidecar_line(), LangPair::ZhEn).unwrap();
    assert_eq!(p.source_input.language, "zh");
    assert_eq!(p.source_translation.language, "en");
    assert!(!p.extra.contains_key("lang"));
    let cv = ContextualVectors {
        source: BTreeMap::from([(0, vec![1.0])]),
        followup: BTreeMap::new(),
    };
    let s = serde_json::to_string(&cv).unwrap();
    assert_eq!(s, r#"{"source":{"0":[1.0]},"followup":{}}"#);
}
