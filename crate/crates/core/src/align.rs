//! Input map construction and alignment refinement.
//!
//! The phrase pass recovers alignments of unaligned translation words from
//! the phrase that contains them. The shared-token pass aligns words
//! occurring exactly once in both translations with the same input words on
//! both sides.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::{AlignmentMap, InputMap, TestCasePair, TokenizedText, TransformKind};
use crate::treebank::{classify_label, parse_bracket, ConstituencyTree, LabelClass, LabelTable};

/// Derives the correspondence between unmutated source and follow-up input
/// tokens. An explicit `input_map` on the pair always wins.
pub fn build_input_map(pair: &TestCasePair) -> Result<InputMap> {
    if let Some(map) = &pair.input_map {
        return Ok(map.clone());
    }
    let t = &pair.transformation;
    let ns = pair.source_input.len();
    let nf = pair.followup_input.len();
    match t.kind {
        TransformKind::It1 | TransformKind::It2 | TransformKind::It5 => Ok(InputMap::from_edges(
            (0..ns.min(nf))
                .filter(|i| !t.mutated_source.contains(i) && !t.mutated_followup.contains(i))
                .map(|i| (i, i)),
        )),
        TransformKind::It4 => {
            let start = t.mutated_followup.first().copied().unwrap_or(ns);
            let span = t.mutated_followup.len();
            Ok(InputMap::from_edges((0..ns).filter_map(|i| {
                let f = if i < start { i } else { i + span };
                (f < nf).then_some((i, f))
            })))
        }
        TransformKind::It3 => Err(Error::MissingInputMap(pair.id.clone())),
    }
}

/// Phrase pass: for each translation token with no alignment, if the smallest
/// subtree holding it and another word is a non-verb phrase, align it with
/// the input words of its neighbouring leaves.
///
/// Tokens are visited left to right and later tokens see edges added for
/// earlier ones.
pub fn refine_phrase_alignment(
    input: &TokenizedText,
    translation: &TokenizedText,
    tree: &ConstituencyTree,
    alignment: &AlignmentMap,
    labels: &LabelTable,
) -> AlignmentMap {
    let mut refined = alignment.clone();
    let nt = translation.len();
    let ni = input.len();
    let mut aligned = vec![false; nt];
    for (i, o) in alignment.edges() {
        if i < ni && o < nt {
            aligned[o] = true;
        }
    }
    let unaligned: Vec<usize> = (0..nt).filter(|&o| !aligned[o]).collect();
    for leaf in unaligned {
        let Some(sub) = tree.smallest_covering_subtree(leaf) else {
            continue;
        };
        if classify_label(tree.label(sub), labels) != LabelClass::Phrase {
            continue;
        }
        let targets: BTreeSet<usize> = tree
            .adjacent_leaves(sub, leaf)
            .into_iter()
            .flat_map(|n| refined.inputs_of(n).collect::<Vec<_>>())
            .collect();
        for s in targets {
            refined.insert(s, leaf);
        }
    }
    refined
}

fn surface_counts(text: &TokenizedText) -> BTreeMap<&str, (usize, usize)> {
    let mut counts: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (i, tok) in text.tokens.iter().enumerate() {
        let e = counts.entry(tok.as_str()).or_insert((0, i));
        e.0 += 1;
    }
    counts
}

/// Index of every translation surface string that occurs exactly once in
/// `T_s` and exactly once in `T_f`, in `T_s` order.
pub fn shared_unique_tokens(source: &TokenizedText, followup: &TokenizedText) -> Vec<(usize, usize)> {
    let cs = surface_counts(source);
    let cf = surface_counts(followup);
    let mut out: Vec<(usize, usize)> = cs
        .iter()
        .filter_map(|(w, &(n, i))| match cf.get(w) {
            Some(&(1, j)) if n == 1 => Some((i, j)),
            _ => None,
        })
        .collect();
    out.sort_unstable();
    out
}

/// Maps input tokens from one side to the other: through the input map
/// when the token is mapped, otherwise to the unmapped tokens of the other
/// side carrying the same surface.
struct CrossSide<'a> {
    from: &'a TokenizedText,
    to: &'a TokenizedText,
    mapped: BTreeMap<usize, usize>,
    to_unmapped: BTreeSet<usize>,
}

impl<'a> CrossSide<'a> {
    fn new(from: &'a TokenizedText, to: &'a TokenizedText, edges: impl Iterator<Item = (usize, usize)>) -> Self {
        let mapped: BTreeMap<usize, usize> = edges.collect();
        let to_mapped: BTreeSet<usize> = mapped.values().copied().collect();
        let to_unmapped = (0..to.len()).filter(|i| !to_mapped.contains(i)).collect();
        Self {
            from,
            to,
            mapped,
            to_unmapped,
        }
    }

    fn image(&self, i: usize) -> Vec<usize> {
        if let Some(&j) = self.mapped.get(&i) {
            return vec![j];
        }
        let Some(surface) = self.from.get(i) else {
            return Vec::new();
        };
        self.to_unmapped
            .iter()
            .copied()
            .filter(|&j| self.to.get(j) == Some(surface))
            .collect()
    }
}

fn surfaces<'a>(text: &'a TokenizedText, idx: &BTreeSet<usize>) -> BTreeSet<&'a str> {
    idx.iter().filter_map(|&i| text.get(i)).collect()
}

/// Shared-token pass for `shared_unique_tokens`. Aligned input words are compared by surface string; when
/// they differ, each occurrence is aligned with the union.
pub fn refine_shared_unique_tokens(
    pair: &TestCasePair,
    input_map: &InputMap,
    alignment_source: &AlignmentMap,
    alignment_followup: &AlignmentMap,
) -> (AlignmentMap, AlignmentMap) {
    let mut ms = alignment_source.clone();
    let mut mf = alignment_followup.clone();
    let s_to_f = CrossSide::new(&pair.source_input, &pair.followup_input, input_map.edges());
    let f_to_s = CrossSide::new(&pair.followup_input, &pair.source_input, input_map.edges().map(|(s, f)| (f, s)));
    let ns = pair.source_input.len();
    let nf = pair.followup_input.len();

    for (ts, tf) in shared_unique_tokens(&pair.source_translation, &pair.followup_translation) {
        let aligned_s: BTreeSet<usize> = ms.inputs_of(ts).filter(|&i| i < ns).collect();
        let aligned_f: BTreeSet<usize> = mf.inputs_of(tf).filter(|&i| i < nf).collect();
        if surfaces(&pair.source_input, &aligned_s) == surfaces(&pair.followup_input, &aligned_f) {
            continue;
        }
        for &k in &aligned_f {
            for i in f_to_s.image(k) {
                ms.insert(i, ts);
            }
        }
        for &i in &aligned_s {
            for k in s_to_f.image(i) {
                mf.insert(k, tf);
            }
        }
    }
    (ms, mf)
}

/// A pair after alignment refinement, with its input map.
#[derive(Debug, Clone)]
pub struct RefinedPair {
    pub pair: TestCasePair,
    pub input_map: InputMap,
    pub diagnostics: Vec<String>,
}

fn language_of(text: &TokenizedText) -> &str {
    &text.language
}

/// Phrase tables used for each translation, chosen from the translation
/// language unless overridden.
#[derive(Debug, Clone, Default)]
pub struct RefineOptions {
    pub labels: Option<LabelTable>,
}

fn phrase_pass(
    name: &str,
    input: &TokenizedText,
    translation: &TokenizedText,
    tree: Option<&String>,
    alignment: &AlignmentMap,
    opts: &RefineOptions,
    diagnostics: &mut Vec<String>,
) -> AlignmentMap {
    let Some(src) = tree else {
        diagnostics.push(format!("{name}: no parse tree, phrase refinement skipped"));
        return alignment.clone();
    };
    let tree = match parse_bracket(src) {
        Ok(t) => t,
        Err(e) => {
            diagnostics.push(format!("{name}: {e}, phrase refinement skipped"));
            return alignment.clone();
        }
    };
    if tree.leaves() != translation.tokens {
        diagnostics.push(format!("{name}: tree leaves differ from tokens, phrase refinement skipped"));
        return alignment.clone();
    }
    let labels = opts
        .labels
        .clone()
        .unwrap_or_else(|| LabelTable::for_language(language_of(translation)));
    refine_phrase_alignment(input, translation, &tree, alignment, &labels)
}

/// Builds the input map, runs the phrase pass on both sides, then the
/// shared-token pass.
pub fn refine(pair: &TestCasePair, opts: &RefineOptions) -> Result<RefinedPair> {
    let input_map = build_input_map(pair)?;
    let mut diagnostics = Vec::new();
    let ms = phrase_pass(
        "source",
        &pair.source_input,
        &pair.source_translation,
        pair.tree_source_translation.as_ref(),
        &pair.alignment_source,
        opts,
        &mut diagnostics,
    );
    let mf = phrase_pass(
        "followup",
        &pair.followup_input,
        &pair.followup_translation,
        pair.tree_followup_translation.as_ref(),
        &pair.alignment_followup,
        opts,
        &mut diagnostics,
    );
    let (ms, mf) = refine_shared_unique_tokens(pair, &input_map, &ms, &mf);
    let mut refined = pair.clone();
    refined.alignment_source = ms;
    refined.alignment_followup = mf;
    Ok(RefinedPair {
        pair: refined,
        input_map,
        diagnostics,
    })
}
