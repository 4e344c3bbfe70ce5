//! Word closure construction and classification.

use std::collections::{BTreeSet, HashSet};

use crate::model::{ClosureKind, ClosureSets, InputMap, TestCasePair, TransformationMeta, WordClosure};

struct Links {
    ms_fwd: Vec<Vec<usize>>,
    ms_back: Vec<Vec<usize>>,
    mf_fwd: Vec<Vec<usize>>,
    mf_back: Vec<Vec<usize>>,
    mi_fwd: Vec<Vec<usize>>,
    mi_back: Vec<Vec<usize>>,
}

impl Links {
    fn new(pair: &TestCasePair, input_map: &InputMap) -> Self {
        let ns = pair.source_input.len();
        let nf = pair.followup_input.len();
        let (ms_fwd, ms_back) = pair.alignment_source.adjacency(ns, pair.source_translation.len());
        let (mf_fwd, mf_back) = pair.alignment_followup.adjacency(nf, pair.followup_translation.len());
        let mut mi_fwd = vec![Vec::new(); ns];
        let mut mi_back = vec![Vec::new(); nf];
        for (s, f) in input_map.edges() {
            if s < ns && f < nf {
                mi_fwd[s].push(f);
                mi_back[f].push(s);
            }
        }
        Self {
            ms_fwd,
            ms_back,
            mf_fwd,
            mf_back,
            mi_fwd,
            mi_back,
        }
    }
}

/// Adds every neighbour of `from` into `into`; returns whether `into` grew.
fn gather(into: &mut BTreeSet<usize>, from: &BTreeSet<usize>, adj: &[Vec<usize>]) -> bool {
    let before = into.len();
    for &i in from {
        into.extend(adj[i].iter().copied());
    }
    into.len() != before
}

/// Grows the four sets until none of the six propagation steps adds a word.
fn close(c: &mut ClosureSets, l: &Links) {
    loop {
        let mut changed = false;
        // 1) S_s -> S_f, 2) S_s -> T_s, 3) S_f -> T_f,
        // 4) T_f -> S_f, 5) S_f -> S_s, 6) T_s -> S_s
        changed |= gather(&mut c.sent_f, &c.sent_s, &l.mi_fwd);
        changed |= gather(&mut c.tran_s, &c.sent_s, &l.ms_fwd);
        changed |= gather(&mut c.tran_f, &c.sent_f, &l.mf_fwd);
        let tran_f = c.tran_f.clone();
        changed |= gather(&mut c.sent_f, &tran_f, &l.mf_back);
        let sent_f = c.sent_f.clone();
        changed |= gather(&mut c.sent_s, &sent_f, &l.mi_back);
        let tran_s = c.tran_s.clone();
        changed |= gather(&mut c.sent_s, &tran_s, &l.ms_back);
        if !changed {
            break;
        }
    }
}

/// Builds all closures of a refined pair: seeds are the unmarked source
/// input tokens left to right, then the unmarked follow-up input tokens.
/// Each closure comes back classified against the pair's transformation.
pub fn build_closures(pair: &TestCasePair, input_map: &InputMap) -> Vec<WordClosure> {
    let links = Links::new(pair, input_map);
    let ns = pair.source_input.len();
    let nf = pair.followup_input.len();
    let mut marked_s = vec![false; ns];
    let mut marked_f = vec![false; nf];
    let mut out = Vec::new();

    let seeds = (0..ns).map(|i| (true, i)).chain((0..nf).map(|i| (false, i)));
    for (source_side, i) in seeds {
        let already = if source_side { marked_s[i] } else { marked_f[i] };
        if already {
            continue;
        }
        let mut sets = ClosureSets::default();
        if source_side {
            sets.sent_s.insert(i);
        } else {
            sets.sent_f.insert(i);
        }
        close(&mut sets, &links);
        for &w in &sets.sent_s {
            marked_s[w] = true;
        }
        for &w in &sets.sent_f {
            marked_f[w] = true;
        }
        let kind = classify_closure(&sets, &pair.transformation);
        out.push(WordClosure { sets, kind });
    }
    out
}

/// MWC when any mutated input token is inside; CWC when all four sets are
/// non-empty; UWC otherwise.
pub fn classify_closure(c: &ClosureSets, t: &TransformationMeta) -> ClosureKind {
    let mutated = c.sent_s.iter().any(|i| t.mutated_source.contains(i))
        || c.sent_f.iter().any(|i| t.mutated_followup.contains(i));
    if mutated {
        ClosureKind::Mwc
    } else if !c.tran_s.is_empty() && !c.tran_f.is_empty() && !c.sent_s.is_empty() && !c.sent_f.is_empty() {
        ClosureKind::Cwc
    } else {
        ClosureKind::Uwc
    }
}

/// True when every translation token of the closure is a stopword, or it has
/// no translation tokens at all.
pub fn stopword_only(c: &ClosureSets, pair: &TestCasePair, stopwords: &HashSet<String>) -> bool {
    let is_stop = |tok: Option<&str>| tok.is_some_and(|t| stopwords.contains(t));
    c.tran_s.iter().all(|&i| is_stop(pair.source_translation.get(i)))
        && c.tran_f.iter().all(|&i| is_stop(pair.followup_translation.get(i)))
}
