//! Output-relation check over the closures of a refined pair.

use std::collections::{BTreeSet, HashSet};

use crate::align::{refine, RefineOptions, RefinedPair};
use crate::closure::{build_closures, stopword_only};
use crate::error::Result;
use crate::model::{
    ClosureKind, FailReason, Failure, FineGrainedViolation, TestCasePair, TransformKind, Verdict, WordClosure,
};
use crate::similarity::{PairJudge, SimilarityProvider};

/// A pair after refinement and closure construction. Independent of the
/// similarity provider and threshold, so it can be re-checked cheaply.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub refined: RefinedPair,
    pub closures: Vec<WordClosure>,
}

impl PreparedPair {
    pub fn pair(&self) -> &TestCasePair {
        &self.refined.pair
    }
}

pub fn prepare(pair: &TestCasePair, opts: &RefineOptions) -> Result<PreparedPair> {
    let refined = refine(pair, opts)?;
    let closures = build_closures(&refined.pair, &refined.input_map);
    Ok(PreparedPair { refined, closures })
}

fn content(indices: &BTreeSet<usize>, tokens: &[String], stopwords: &HashSet<String>) -> Vec<usize> {
    indices
        .iter()
        .copied()
        .filter(|&i| tokens.get(i).is_some_and(|t| !stopwords.contains(t)))
        .collect()
}

fn check_cwcs(
    pair: &TestCasePair,
    closures: &[WordClosure],
    judge: &PairJudge<'_>,
    stopwords: &HashSet<String>,
    out: &mut Vec<Failure>,
) {
    for (k, c) in closures.iter().enumerate() {
        if c.kind != ClosureKind::Cwc || stopword_only(&c.sets, pair, stopwords) {
            continue;
        }
        let ts = content(&c.sets.tran_s, &pair.source_translation.tokens, stopwords);
        let tf = content(&c.sets.tran_f, &pair.followup_translation.tokens, stopwords);
        if !judge.similar(&ts, &tf) {
            out.push(Failure {
                reason: FailReason::CwcDissimilar,
                closures: vec![k],
                flagged: FineGrainedViolation::new(ts, tf),
            });
        }
    }
}

/// The replaced word and its replacement differ in meaning, so their
/// translations must differ too.
fn check_mwc_pool(
    pair: &TestCasePair,
    closures: &[WordClosure],
    judge: &PairJudge<'_>,
    stopwords: &HashSet<String>,
    out: &mut Vec<Failure>,
) {
    let mut ids = Vec::new();
    let mut ps = BTreeSet::new();
    let mut pf = BTreeSet::new();
    for (k, c) in closures.iter().enumerate() {
        if c.kind == ClosureKind::Mwc {
            ids.push(k);
            ps.extend(content(&c.sets.tran_s, &pair.source_translation.tokens, stopwords));
            pf.extend(content(&c.sets.tran_f, &pair.followup_translation.tokens, stopwords));
        }
    }
    if ps.is_empty() || pf.is_empty() {
        return;
    }
    let ps: Vec<usize> = ps.into_iter().collect();
    let pf: Vec<usize> = pf.into_iter().collect();
    if judge.similar(&ps, &pf) {
        out.push(Failure {
            reason: FailReason::MwcSimilar,
            closures: ids,
            flagged: FineGrainedViolation::new(ps, pf),
        });
    }
}

/// Translation tokens outside every CWC and MWC, minus stopwords.
fn leftovers(closures: &[WordClosure], len: usize, tokens: &[String], stopwords: &HashSet<String>, source: bool) -> Vec<usize> {
    let mut covered = vec![false; len];
    for c in closures.iter().filter(|c| c.kind != ClosureKind::Uwc) {
        let set = if source { &c.sets.tran_s } else { &c.sets.tran_f };
        for &i in set {
            if i < len {
                covered[i] = true;
            }
        }
    }
    (0..len)
        .filter(|&i| !covered[i] && !stopwords.contains(&tokens[i]))
        .collect()
}

/// Greedy one-to-one matching of leftover tokens, best score first. Returns
/// the unmatched remainder of each side.
pub fn match_leftovers(os: &[usize], of: &[usize], judge: &PairJudge<'_>) -> (Vec<usize>, Vec<usize>) {
    let theta = judge.theta();
    let mut cands: Vec<(f64, usize, usize)> = Vec::new();
    for &i in os {
        for &j in of {
            if let Some(s) = judge.token_score(i, j) {
                if s >= theta {
                    cands.push((s, i, j));
                }
            }
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_s = BTreeSet::new();
    let mut used_f = BTreeSet::new();
    for (_, i, j) in cands {
        if !used_s.contains(&i) && !used_f.contains(&j) {
            used_s.insert(i);
            used_f.insert(j);
        }
    }
    (
        os.iter().copied().filter(|i| !used_s.contains(i)).collect(),
        of.iter().copied().filter(|j| !used_f.contains(j)).collect(),
    )
}

fn check_leftovers(
    pair: &TestCasePair,
    closures: &[WordClosure],
    judge: &PairJudge<'_>,
    stopwords: &HashSet<String>,
    out: &mut Vec<Failure>,
) {
    let ts = &pair.source_translation.tokens;
    let tf = &pair.followup_translation.tokens;
    let os = leftovers(closures, ts.len(), ts, stopwords, true);
    let of = leftovers(closures, tf.len(), tf, stopwords, false);
    let (us, uf) = match_leftovers(&os, &of, judge);
    if us.is_empty() && uf.is_empty() {
        return;
    }
    let holders = closures
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            c.kind == ClosureKind::Uwc
                && (us.iter().any(|i| c.sets.tran_s.contains(i)) || uf.iter().any(|j| c.sets.tran_f.contains(j)))
        })
        .map(|(k, _)| k)
        .collect();
    out.push(Failure {
        reason: FailReason::LeftoverUnmatched,
        closures: holders,
        flagged: FineGrainedViolation::new(us, uf),
    });
}

/// Checks a prepared pair at the provider's threshold for its
/// transformation, or at `theta` when given.
pub fn check_prepared(
    prepared: &PreparedPair,
    provider: &SimilarityProvider,
    stopwords: &HashSet<String>,
    theta: Option<f64>,
) -> Verdict {
    let pair = prepared.pair();
    let judge = match theta {
        Some(t) => provider.judge_at(pair, t),
        None => provider.judge(pair),
    };
    let mut failures = Vec::new();
    check_cwcs(pair, &prepared.closures, &judge, stopwords, &mut failures);
    if pair.transformation.kind == TransformKind::It5 {
        check_mwc_pool(pair, &prepared.closures, &judge, stopwords, &mut failures);
    }
    check_leftovers(pair, &prepared.closures, &judge, stopwords, &mut failures);
    Verdict::from_failures(pair.id.clone(), failures)
}

/// Refines, builds closures and checks one pair.
pub fn check_pair(
    pair: &TestCasePair,
    provider: &SimilarityProvider,
    stopwords: &HashSet<String>,
    opts: &RefineOptions,
) -> Result<Verdict> {
    Ok(check_prepared(&prepare(pair, opts)?, provider, stopwords, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{it2_pair, AlignmentMap, TokenizedText, TransformationMeta};
    use crate::similarity::{ConfigKind, SynonymTable, Thresholds, VectorTable};

    fn provider() -> SimilarityProvider {
        let mut syn = SynonymTable::new();
        syn.insert("喜欢", ["爱"]);
        let mut v = VectorTable::new(3).unwrap();
        v.insert("猫", vec![1.0, 0.0, 0.0]).unwrap();
        v.insert("狗", vec![0.0, 1.0, 0.0]).unwrap();
        v.insert("猫咪", vec![0.9, 0.1, 0.0]).unwrap();
        SimilarityProvider::new(ConfigKind::SynonymOrStatic, Some(syn), Some(v), Thresholds::uniform(0.8)).unwrap()
    }

    fn stop() -> HashSet<String> {
        ["我".to_string()].into()
    }

    #[test]
    fn clean_pair_passes() {
        let v = check_pair(&it2_pair(), &provider(), &stop(), &RefineOptions::default()).unwrap();
        assert!(!v.violation, "{v:?}");
        assert!(v.fine_grained.is_empty());
    }

    #[test]
    fn dissimilar_cwc_is_flagged() {
        let mut p = it2_pair();
        p.followup_translation.tokens[2] = "狗".into();
        let v = check_pair(&p, &provider(), &stop(), &RefineOptions::default()).unwrap();
        assert!(v.violation);
        assert_eq!(v.failures[0].reason, FailReason::CwcDissimilar);
        assert_eq!(v.fine_grained, FineGrainedViolation::new([2], [2]));
    }

    #[test]
    fn near_synonym_cwc_passes_by_cosine() {
        let mut p = it2_pair();
        p.followup_translation.tokens[2] = "猫咪".into();
        let v = check_pair(&p, &provider(), &stop(), &RefineOptions::default()).unwrap();
        assert!(!v.violation);
    }

    #[test]
    fn mwc_pool_similarity_fails_only_for_it5() {
        let mut p = it2_pair();
        p.transformation = TransformationMeta::replacement(TransformKind::It5, 1, 1);
        let v = check_pair(&p, &provider(), &stop(), &RefineOptions::default()).unwrap();
        assert_eq!(v.failures.len(), 1);
        assert_eq!(v.failures[0].reason, FailReason::MwcSimilar);
        assert_eq!(v.fine_grained, FineGrainedViolation::new([1], [1]));
    }

    #[test]
    fn extra_unaligned_token_is_a_leftover() {
        let mut p = it2_pair();
        p.followup_translation = TokenizedText::new(vec!["我", "爱", "猫", "狗"], "zh");
        let v = check_pair(&p, &provider(), &stop(), &RefineOptions::default()).unwrap();
        assert!(v.violation);
        assert_eq!(v.failures[0].reason, FailReason::LeftoverUnmatched);
        assert_eq!(v.fine_grained, FineGrainedViolation::new([], [3]));
    }

    #[test]
    fn leftovers_match_by_identity() {
        let mut p = it2_pair();
        p.source_translation = TokenizedText::new(vec!["我", "喜欢", "猫", "狗"], "zh");
        p.followup_translation = TokenizedText::new(vec!["狗", "我", "爱", "猫"], "zh");
        p.alignment_followup = AlignmentMap::from_edges([(0, 1), (1, 2), (2, 3)]);
        let v = check_pair(&p, &provider(), &stop(), &RefineOptions::default()).unwrap();
        // The shared unique 狗 has no aligned inputs on either side.
        assert!(!v.violation, "{v:?}");
    }

    #[test]
    fn empty_translation_side_against_content_fails() {
        let mut p = it2_pair();
        p.followup_translation = TokenizedText::new(vec!["我", "爱", "狗"], "zh");
        p.alignment_followup = AlignmentMap::from_edges([(0, 0), (1, 1), (2, 0)]);
        let v = check_pair(&p, &provider(), &stop(), &RefineOptions::default()).unwrap();
        assert_eq!(v.failures[0].reason, FailReason::CwcDissimilar);
        assert_eq!(v.failures[0].flagged, FineGrainedViolation::new([2], []));
    }

    #[test]
    fn greedy_matching_prefers_higher_scores() {
        let mut p = it2_pair();
        p.source_translation = TokenizedText::new(vec!["猫", "狗"], "zh");
        p.followup_translation = TokenizedText::new(vec!["猫咪", "猫"], "zh");
        let prov = provider();
        let judge = prov.judge_at(&p, 0.8);
        // 猫-猫 (1.0) beats 猫-猫咪; 狗 has no partner above 0.8.
        let (us, uf) = match_leftovers(&[0, 1], &[0, 1], &judge);
        assert_eq!(us, vec![1]);
        assert_eq!(uf, vec![0]);
    }
}
