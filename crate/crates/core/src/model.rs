//! Shared domain types for a metamorphic test case pair and the results of
//! checking it.
//!
//! Every token is identified by its side and position, never by its surface
//! string: two equal words at different positions are distinct objects.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// A pre-tokenized text. Tokens are kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedText {
    pub tokens: Vec<String>,
    pub language: String,
}

impl TokenizedText {
    pub fn new<S: Into<String>>(tokens: Vec<S>, language: impl Into<String>) -> Self {
        Self {
            tokens: tokens.into_iter().map(Into::into).collect(),
            language: language.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }
}

/// Many-to-many token correspondence between an input text and its
/// translation, stored as `(input_index, output_index)` edges.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct AlignmentMap {
    edges: BTreeSet<(usize, usize)>,
}

impl AlignmentMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(edges: I) -> Self {
        Self {
            edges: edges.into_iter().collect(),
        }
    }

    /// Returns `true` if the edge was not present before.
    pub fn insert(&mut self, input: usize, output: usize) -> bool {
        self.edges.insert((input, output))
    }

    pub fn contains(&self, input: usize, output: usize) -> bool {
        self.edges.contains(&(input, output))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Output indices aligned with `input`.
    pub fn outputs_of(&self, input: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .range((input, 0)..=(input, usize::MAX))
            .map(|&(_, o)| o)
    }

    /// Input indices aligned with `output`.
    pub fn inputs_of(&self, output: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |&&(_, o)| o == output)
            .map(|&(i, _)| i)
    }

    pub fn is_superset(&self, other: &AlignmentMap) -> bool {
        self.edges.is_superset(&other.edges)
    }

    /// Adjacency lists in both directions, sized to the given text lengths.
    /// Out-of-range edges are ignored.
    pub fn adjacency(&self, input_len: usize, output_len: usize) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
        let mut fwd = vec![Vec::new(); input_len];
        let mut back = vec![Vec::new(); output_len];
        for (i, o) in self.edges() {
            if i < input_len && o < output_len {
                fwd[i].push(o);
                back[o].push(i);
            }
        }
        (fwd, back)
    }
}

/// 1:1 correspondence between unmutated tokens of the source and follow-up
/// inputs, as `(source_index, followup_index)` edges.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InputMap {
    edges: BTreeSet<(usize, usize)>,
}

impl InputMap {
    pub fn from_edges<I: IntoIterator<Item = (usize, usize)>>(edges: I) -> Self {
        Self {
            edges: edges.into_iter().collect(),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn followup_of(&self, source: usize) -> Option<usize> {
        self.edges
            .range((source, 0)..=(source, usize::MAX))
            .next()
            .map(|&(_, f)| f)
    }

    pub fn source_of(&self, followup: usize) -> Option<usize> {
        self.edges.iter().find(|&&(_, f)| f == followup).map(|&(s, _)| s)
    }
}

/// The five input transformations of the metamorphic relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransformKind {
    /// Replace one word with another of the same part of speech.
    #[serde(rename = "IT-1")]
    It1,
    /// Replace one word with another of similar meaning.
    #[serde(rename = "IT-2")]
    It2,
    /// Extract a noun phrase of the source as the follow-up.
    #[serde(rename = "IT-3")]
    It3,
    /// Insert an adjunct into the source.
    #[serde(rename = "IT-4")]
    It4,
    /// Replace one word with another of different meaning.
    #[serde(rename = "IT-5")]
    It5,
}

impl TransformKind {
    pub const ALL: [TransformKind; 5] = [Self::It1, Self::It2, Self::It3, Self::It4, Self::It5];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::It1 => "IT-1",
            Self::It2 => "IT-2",
            Self::It3 => "IT-3",
            Self::It4 => "IT-4",
            Self::It5 => "IT-5",
        }
    }

    /// Position in [`TransformKind::ALL`].
    pub fn ordinal(self) -> usize {
        self as usize
    }

    /// Single-word replacement transformations.
    pub fn is_replacement(self) -> bool {
        matches!(self, Self::It1 | Self::It2 | Self::It5)
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "IT-1" | "IT1" | "1" => Ok(Self::It1),
            "IT-2" | "IT2" | "2" => Ok(Self::It2),
            "IT-3" | "IT3" | "3" => Ok(Self::It3),
            "IT-4" | "IT4" | "4" => Ok(Self::It4),
            "IT-5" | "IT5" | "5" => Ok(Self::It5),
            other => Err(Error::Config(format!("unknown transformation kind `{other}`"))),
        }
    }
}

/// What the input transformation changed.
///
/// For IT-3 the mutated source indices are the source tokens outside the
/// extracted noun phrase; for IT-4 the mutated follow-up indices are the
/// inserted adjunct span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformationMeta {
    pub kind: TransformKind,
    pub mutated_source: BTreeSet<usize>,
    pub mutated_followup: BTreeSet<usize>,
}

impl TransformationMeta {
    pub fn new(
        kind: TransformKind,
        mutated_source: impl IntoIterator<Item = usize>,
        mutated_followup: impl IntoIterator<Item = usize>,
    ) -> Self {
        Self {
            kind,
            mutated_source: mutated_source.into_iter().collect(),
            mutated_followup: mutated_followup.into_iter().collect(),
        }
    }

    /// Replacement of one source token by one follow-up token.
    pub fn replacement(kind: TransformKind, source: usize, followup: usize) -> Self {
        Self::new(kind, [source], [followup])
    }
}

/// Token-level location of a violation: indices into `T_s` and `T_f`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
pub struct FineGrainedViolation {
    pub source: BTreeSet<usize>,
    pub followup: BTreeSet<usize>,
}

impl FineGrainedViolation {
    pub fn new(source: impl IntoIterator<Item = usize>, followup: impl IntoIterator<Item = usize>) -> Self {
        Self {
            source: source.into_iter().collect(),
            followup: followup.into_iter().collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty() && self.followup.is_empty()
    }

    pub fn len(&self) -> usize {
        self.source.len() + self.followup.len()
    }

    pub fn extend(&mut self, other: &FineGrainedViolation) {
        self.source.extend(other.source.iter().copied());
        self.followup.extend(other.followup.iter().copied());
    }
}

/// Human label for a pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldLabel {
    pub violation: bool,
    pub fine_grained: Option<FineGrainedViolation>,
}

/// Per-token contextual embeddings for the two translations, keyed by token
/// index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ContextualVectors {
    #[serde(default)]
    pub source: BTreeMap<usize, Vec<f32>>,
    #[serde(default)]
    pub followup: BTreeMap<usize, Vec<f32>>,
}

/// A metamorphic test case pair with everything needed to check it.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCasePair {
    pub id: String,
    pub source_input: TokenizedText,
    pub followup_input: TokenizedText,
    pub source_translation: TokenizedText,
    pub followup_translation: TokenizedText,
    /// `source_input` ↔ `source_translation`.
    pub alignment_source: AlignmentMap,
    /// `followup_input` ↔ `followup_translation`.
    pub alignment_followup: AlignmentMap,
    pub input_map: Option<InputMap>,
    pub transformation: TransformationMeta,
    pub tree_source_translation: Option<String>,
    pub tree_followup_translation: Option<String>,
    pub contextual_vectors: Option<ContextualVectors>,
    pub gold: Option<GoldLabel>,
    /// Record fields this crate does not interpret, kept for round-tripping.
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// Which text a token index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    SourceInput,
    SourceTranslation,
    FollowupInput,
    FollowupTranslation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ClosureKind {
    /// Same input words with translations on both sides.
    Cwc,
    /// Contains a mutated input word.
    Mwc,
    /// Same input words lacking a translation on at least one side.
    Uwc,
}

/// Four index sets into `S_s`, `T_s`, `S_f`, `T_f`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct ClosureSets {
    pub sent_s: BTreeSet<usize>,
    pub tran_s: BTreeSet<usize>,
    pub sent_f: BTreeSet<usize>,
    pub tran_f: BTreeSet<usize>,
}

impl ClosureSets {
    pub fn is_empty(&self) -> bool {
        self.sent_s.is_empty() && self.tran_s.is_empty() && self.sent_f.is_empty() && self.tran_f.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordClosure {
    #[serde(flatten)]
    pub sets: ClosureSets,
    pub kind: ClosureKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailReason {
    CwcDissimilar,
    MwcSimilar,
    LeftoverUnmatched,
}

impl FailReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::CwcDissimilar => "CWC_DISSIMILAR",
            Self::MwcSimilar => "MWC_SIMILAR",
            Self::LeftoverUnmatched => "LEFTOVER_UNMATCHED",
        }
    }
}

/// One failed comparison. `closures` are positions in the pair's closure
/// list; leftover failures list the UWCs that held unmatched tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub reason: FailReason,
    pub closures: Vec<usize>,
    pub flagged: FineGrainedViolation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub pair_id: String,
    pub violation: bool,
    pub fine_grained: FineGrainedViolation,
    pub failures: Vec<Failure>,
}

impl Verdict {
    pub fn from_failures(pair_id: impl Into<String>, failures: Vec<Failure>) -> Self {
        let mut fine_grained = FineGrainedViolation::default();
        for f in &failures {
            fine_grained.extend(&f.flagged);
        }
        Self {
            pair_id: pair_id.into(),
            violation: !failures.is_empty(),
            fine_grained,
            failures,
        }
    }
}

/// A schema problem found by [`validate_pair`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub invariant: &'static str,
    pub detail: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

fn finding(invariant: &'static str, detail: String) -> Finding {
    Finding { invariant, detail }
}

/// Checks every structural invariant of a pair. An empty result means the
/// pair is well-formed.
pub fn validate_pair(pair: &TestCasePair) -> Vec<Finding> {
    let mut out = Vec::new();
    let ns = pair.source_input.len();
    let nf = pair.followup_input.len();
    let nts = pair.source_translation.len();
    let ntf = pair.followup_translation.len();

    for (name, text) in [
        ("source_input", &pair.source_input),
        ("followup_input", &pair.followup_input),
        ("source_translation", &pair.source_translation),
        ("followup_translation", &pair.followup_translation),
    ] {
        if text.is_empty() {
            out.push(finding("non_empty_text", format!("{name} has no tokens")));
        }
    }

    for (name, map, ni, no) in [
        ("alignment_source", &pair.alignment_source, ns, nts),
        ("alignment_followup", &pair.alignment_followup, nf, ntf),
    ] {
        for (i, o) in map.edges() {
            if i >= ni || o >= no {
                out.push(finding(
                    "alignment_in_bounds",
                    format!("{name} edge ({i}, {o}) outside {ni}x{no}"),
                ));
            }
        }
    }

    let t = &pair.transformation;
    for &i in &t.mutated_source {
        if i >= ns {
            out.push(finding("mutated_in_bounds", format!("mutated source index {i} >= {ns}")));
        }
    }
    for &i in &t.mutated_followup {
        if i >= nf {
            out.push(finding("mutated_in_bounds", format!("mutated follow-up index {i} >= {nf}")));
        }
    }

    match t.kind {
        TransformKind::It1 | TransformKind::It2 | TransformKind::It5 => {
            if t.mutated_source.len() != 1 || t.mutated_followup.len() != 1 || ns != nf {
                out.push(finding(
                    "replacement_form",
                    format!(
                        "{} needs one mutated token per side and equal lengths (got {}/{} mutated, {ns}/{nf} tokens)",
                        t.kind,
                        t.mutated_source.len(),
                        t.mutated_followup.len()
                    ),
                ));
            }
        }
        TransformKind::It4 => {
            if !t.mutated_source.is_empty() {
                out.push(finding("insertion_form", "IT-4 must not mutate source tokens".into()));
            }
            if !is_contiguous(&t.mutated_followup) {
                out.push(finding(
                    "insertion_form",
                    "IT-4 inserted tokens must form one non-empty contiguous span".into(),
                ));
            } else if nf != ns + t.mutated_followup.len() {
                out.push(finding(
                    "insertion_form",
                    format!("IT-4 follow-up length {nf} != {ns} + {}", t.mutated_followup.len()),
                ));
            }
        }
        TransformKind::It3 => {
            if !t.mutated_followup.is_empty() {
                out.push(finding("extraction_form", "IT-3 must not mutate follow-up tokens".into()));
            }
            match &pair.input_map {
                None => out.push(finding("extraction_form", "IT-3 requires an explicit input_map".into())),
                Some(map) => {
                    let kept = ns.saturating_sub(t.mutated_source.iter().filter(|&&i| i < ns).count());
                    if kept != nf {
                        out.push(finding(
                            "extraction_form",
                            format!("IT-3 keeps {kept} source tokens but follow-up has {nf}"),
                        ));
                    }
                    let mut last: Option<(usize, usize)> = None;
                    for (s, f) in map.edges() {
                        if s < ns && f < nf && pair.source_input.tokens[s] != pair.followup_input.tokens[f] {
                            out.push(finding(
                                "extraction_form",
                                format!("input_map edge ({s}, {f}) links different words"),
                            ));
                        }
                        if let Some((ps, pf)) = last {
                            if f <= pf || s <= ps {
                                out.push(finding(
                                    "extraction_form",
                                    format!("input_map edge ({s}, {f}) breaks subsequence order"),
                                ));
                            }
                        }
                        last = Some((s, f));
                    }
                }
            }
        }
    }

    if let Some(map) = &pair.input_map {
        let mut seen_s = BTreeSet::new();
        let mut seen_f = BTreeSet::new();
        for (s, f) in map.edges() {
            if s >= ns || f >= nf {
                out.push(finding("input_map_in_bounds", format!("input_map edge ({s}, {f}) outside {ns}x{nf}")));
            }
            if t.mutated_source.contains(&s) || t.mutated_followup.contains(&f) {
                out.push(finding("input_map_unmutated", format!("input_map edge ({s}, {f}) touches a mutated token")));
            }
            if !seen_s.insert(s) || !seen_f.insert(f) {
                out.push(finding("input_map_one_to_one", format!("input_map edge ({s}, {f}) reuses an index")));
            }
        }
    }

    for (name, tree, text) in [
        ("tree_source_translation", &pair.tree_source_translation, &pair.source_translation),
        ("tree_followup_translation", &pair.tree_followup_translation, &pair.followup_translation),
    ] {
        if let Some(src) = tree {
            match crate::treebank::parse_bracket(src) {
                Ok(tree) => {
                    if tree.leaves() != text.tokens {
                        out.push(finding("tree_leaves_match", format!("{name} leaves differ from translation tokens")));
                    }
                }
                Err(e) => out.push(finding("tree_parses", format!("{name}: {e}"))),
            }
        }
    }

    if let Some(cv) = &pair.contextual_vectors {
        for (name, map, n) in [("source", &cv.source, nts), ("followup", &cv.followup, ntf)] {
            let mut dim = None;
            for (&i, v) in map {
                if i >= n {
                    out.push(finding("contextual_in_bounds", format!("{name} vector index {i} >= {n}")));
                }
                if v.is_empty() || dim.is_some_and(|d| d != v.len()) {
                    out.push(finding("contextual_dimension", format!("{name} vector {i} has dimension {}", v.len())));
                }
                dim.get_or_insert(v.len());
            }
        }
    }

    if let Some(fg) = pair.gold.as_ref().and_then(|g| g.fine_grained.as_ref()) {
        for &i in &fg.source {
            if i >= nts {
                out.push(finding("gold_in_bounds", format!("gold source index {i} >= {nts}")));
            }
        }
        for &i in &fg.followup {
            if i >= ntf {
                out.push(finding("gold_in_bounds", format!("gold follow-up index {i} >= {ntf}")));
            }
        }
    }

    out
}

fn is_contiguous(set: &BTreeSet<usize>) -> bool {
    match (set.first(), set.last()) {
        (Some(&lo), Some(&hi)) => hi - lo + 1 == set.len(),
        _ => false,
    }
}

#[cfg(test)]
pub(crate) use tests::it2_pair;

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn it2_pair() -> TestCasePair {
        TestCasePair {
            id: "it2".into(),
            source_input: TokenizedText::new(vec!["I", "like", "cats"], "en"),
            followup_input: TokenizedText::new(vec!["I", "love", "cats"], "en"),
            source_translation: TokenizedText::new(vec!["我", "喜欢", "猫"], "zh"),
            followup_translation: TokenizedText::new(vec!["我", "爱", "猫"], "zh"),
            alignment_source: AlignmentMap::from_edges([(0, 0), (1, 1), (2, 2)]),
            alignment_followup: AlignmentMap::from_edges([(0, 0), (1, 1), (2, 2)]),
            input_map: None,
            transformation: TransformationMeta::replacement(TransformKind::It2, 1, 1),
            tree_source_translation: None,
            tree_followup_translation: None,
            contextual_vectors: None,
            gold: None,
            extra: BTreeMap::new(),
        }
    }

    #[test]
    fn well_formed_pair_has_no_findings() {
        assert!(validate_pair(&it2_pair()).is_empty());
    }

    #[test]
    fn out_of_bounds_alignment_edge() {
        let mut p = it2_pair();
        p.source_input = TokenizedText::new(vec!["a", "b", "c", "d"], "en");
        p.followup_input = TokenizedText::new(vec!["a", "x", "c", "d"], "en");
        p.alignment_source.insert(5, 0);
        let f = validate_pair(&p);
        assert_eq!(f.len(), 1, "{f:?}");
        assert_eq!(f[0].invariant, "alignment_in_bounds");
    }

    #[test]
    fn replacement_with_unequal_lengths() {
        let mut p = it2_pair();
        p.transformation.kind = TransformKind::It1;
        let src: Vec<String> = (0..10).map(|i| format!("w{i}")).collect();
        let mut fol = src.clone();
        fol.insert(3, "extra".into());
        p.source_input = TokenizedText::new(src, "en");
        p.followup_input = TokenizedText::new(fol, "en");
        let f = validate_pair(&p);
        assert_eq!(f.len(), 1, "{f:?}");
        assert_eq!(f[0].invariant, "replacement_form");
    }

    #[test]
    fn tree_leaf_mismatch_is_reported() {
        let mut p = it2_pair();
        p.tree_source_translation = Some("(IP (PN 我) (VV 喜欢))".into());
        let f = validate_pair(&p);
        assert_eq!(f.len(), 1);
        assert_eq!(f[0].invariant, "tree_leaves_match");
    }

    #[test]
    fn alignment_lookups_are_consistent() {
        let m = AlignmentMap::from_edges([(0, 1), (0, 2), (3, 2)]);
        assert_eq!(m.outputs_of(0).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(m.inputs_of(2).collect::<Vec<_>>(), vec![0, 3]);
        for (i, o) in m.edges() {
            assert!(m.outputs_of(i).any(|x| x == o));
            assert!(m.inputs_of(o).any(|x| x == i));
        }
    }
}
