//! Semantic similarity between translation fragments.
//!
//! Five provider configurations are supported: a synonym database alone,
//! cosine over static word vectors, cosine over contextual vectors, and the
//! disjunction of the synonym database with either vector kind.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{TestCasePair, TransformKind};

/// Word → synonyms. Every word is its own synonym.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SynonymTable {
    entries: HashMap<String, BTreeSet<String>>,
}

impl SynonymTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces the entry for `word`.
    pub fn insert<I, S>(&mut self, word: &str, synonyms: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set: BTreeSet<String> = synonyms.into_iter().map(Into::into).collect();
        set.insert(word.to_string());
        self.entries.insert(word.to_string(), set);
    }

    pub fn synonyms(&self, word: &str) -> BTreeSet<String> {
        match self.entries.get(word) {
            Some(set) => set.clone(),
            None => BTreeSet::from([word.to_string()]),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn are_synonyms(&self, a: &str, b: &str) -> bool {
        a == b || self.entries.get(a).is_some_and(|s| s.contains(b)) || self.entries.get(b).is_some_and(|s| s.contains(a))
    }
}

/// Word → dense vector of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTable {
    dim: usize,
    entries: HashMap<String, Vec<f32>>,
}

impl VectorTable {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("vector dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            entries: HashMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Returns the previous vector for `word`, if any.
    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f32>) -> Result<Option<Vec<f32>>> {
        if vector.len() != self.dim {
            return Err(Error::Config(format!(
                "vector of dimension {} in a table of dimension {}",
                vector.len(),
                self.dim
            )));
        }
        Ok(self.entries.insert(word.into(), vector))
    }

    pub fn get(&self, word: &str) -> Option<&[f32]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Reads a stopword list: one token per line, blank lines ignored.
pub fn load_stopwords(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

pub fn parse_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().to_string())
        .collect()
}

/// `W_i` and `W_j` are similar iff the synonym closure of one contains the
/// other's.
pub fn synonym_similar(wi: &[&str], wj: &[&str], table: &SynonymTable) -> bool {
    let si: BTreeSet<String> = wi.iter().flat_map(|w| table.synonyms(w)).collect();
    let sj: BTreeSet<String> = wj.iter().flat_map(|w| table.synonyms(w)).collect();
    si.is_subset(&sj) || sj.is_subset(&si)
}

fn mean(vectors: &[&[f32]]) -> Option<Vec<f64>> {
    let first = vectors.first()?;
    let mut acc = vec![0.0f64; first.len()];
    for v in vectors {
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += f64::from(*x);
        }
    }
    let n = vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Some(acc)
}

/// Cosine of the mean vectors; `None` when either side is empty or its mean
/// is the zero vector.
pub fn mean_cosine(a: &[&[f32]], b: &[&[f32]]) -> Option<f64> {
    let ma = mean(a)?;
    let mb = mean(b)?;
    if ma.len() != mb.len() {
        return None;
    }
    let dot: f64 = ma.iter().zip(&mb).map(|(x, y)| x * y).sum();
    let na = ma.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = mb.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(dot / (na * nb))
}

/// Cosine of the mean in-vocabulary vectors. `None` means abstain.
pub fn vector_score(wi: &[&str], wj: &[&str], table: &VectorTable) -> Option<f64> {
    let a: Vec<&[f32]> = wi.iter().filter_map(|w| table.get(w)).collect();
    let b: Vec<&[f32]> = wj.iter().filter_map(|w| table.get(w)).collect();
    mean_cosine(&a, &b)
}

fn same_multiset(wi: &[&str], wj: &[&str]) -> bool {
    if wi.len() != wj.len() {
        return false;
    }
    let mut a = wi.to_vec();
    let mut b = wj.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    a == b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConfigKind {
    /// Synonym database.
    #[serde(rename = "config-1")]
    Synonym,
    /// Cosine of static word vectors.
    #[serde(rename = "config-2")]
    StaticVector,
    /// Cosine of contextual vectors.
    #[serde(rename = "config-3")]
    ContextualVector,
    /// Synonyms or static vectors.
    #[serde(rename = "config-4")]
    SynonymOrStatic,
    /// Synonyms or contextual vectors.
    #[serde(rename = "config-5")]
    SynonymOrContextual,
}

impl ConfigKind {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Self::Synonym),
            2 => Ok(Self::StaticVector),
            3 => Ok(Self::ContextualVector),
            4 => Ok(Self::SynonymOrStatic),
            5 => Ok(Self::SynonymOrContextual),
            _ => Err(Error::Config(format!("configuration must be 1..5, got {n}"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Self::Synonym => 1,
            Self::StaticVector => 2,
            Self::ContextualVector => 3,
            Self::SynonymOrStatic => 4,
            Self::SynonymOrContextual => 5,
        }
    }

    pub fn uses_synonyms(self) -> bool {
        matches!(self, Self::Synonym | Self::SynonymOrStatic | Self::SynonymOrContextual)
    }

    pub fn uses_vectors(self) -> bool {
        !matches!(self, Self::Synonym)
    }

    pub fn uses_context(self) -> bool {
        matches!(self, Self::ContextualVector | Self::SynonymOrContextual)
    }
}

impl fmt::Display for ConfigKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config-{}", self.number())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LangPair {
    #[serde(rename = "en-zh")]
    EnZh,
    #[serde(rename = "zh-en")]
    ZhEn,
}

impl LangPair {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::EnZh => "en-zh",
            Self::ZhEn => "zh-en",
        }
    }

    pub fn source_language(self) -> &'static str {
        match self {
            Self::EnZh => "en",
            Self::ZhEn => "zh",
        }
    }

    pub fn target_language(self) -> &'static str {
        match self {
            Self::EnZh => "zh",
            Self::ZhEn => "en",
        }
    }
}

impl FromStr for LangPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "en-zh" | "en2zh" => Ok(Self::EnZh),
            "zh-en" | "zh2en" => Ok(Self::ZhEn),
            other => Err(Error::Config(format!("unknown language pair `{other}`"))),
        }
    }
}

impl fmt::Display for LangPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How cosine values are read before comparison with a threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CosineScale {
    /// Cosine as computed, in [-1, 1].
    #[default]
    Raw,
    /// `(cos + 1) / 2`, in [0, 1].
    Unit,
}

impl CosineScale {
    pub fn apply(self, cosine: f64) -> f64 {
        match self {
            Self::Raw => cosine,
            Self::Unit => (cosine + 1.0) / 2.0,
        }
    }

    pub fn range(self) -> (f64, f64) {
        match self {
            Self::Raw => (-1.0, 1.0),
            Self::Unit => (0.0, 1.0),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Raw => "raw",
            Self::Unit => "unit",
        }
    }
}

impl FromStr for CosineScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "unit" => Ok(Self::Unit),
            other => Err(Error::Config(format!("unknown cosine scale `{other}`"))),
        }
    }
}

/// Thresholds per transformation kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    per_kind: [f64; 5],
}

impl Thresholds {
    pub fn uniform(theta: f64) -> Self {
        Self { per_kind: [theta; 5] }
    }

    /// Tuned values for IT-1..IT-5.
    pub fn defaults(lang: LangPair) -> Self {
        match lang {
            LangPair::EnZh => Self {
                per_kind: [0.75, 0.77, 0.63, 0.77, 0.75],
            },
            LangPair::ZhEn => Self {
                per_kind: [0.65, 0.65, 0.49, 0.66, 0.60],
            },
        }
    }

    pub fn get(&self, kind: TransformKind) -> f64 {
        self.per_kind[kind.ordinal()]
    }

    pub fn as_array(&self) -> [f64; 5] {
        self.per_kind
    }
}

/// A configured similarity judge. Read-only after construction.
#[derive(Debug, Clone)]
pub struct SimilarityProvider {
    kind: ConfigKind,
    synonyms: Option<SynonymTable>,
    vectors: Option<VectorTable>,
    thresholds: Thresholds,
    scale: CosineScale,
}

fn check_thresholds(thresholds: &Thresholds, scale: CosineScale) -> Result<()> {
    let (lo, hi) = scale.range();
    for t in thresholds.as_array() {
        if !(lo..=hi).contains(&t) {
            return Err(Error::Config(format!(
                "threshold {t} outside [{lo}, {hi}] for the {} cosine scale",
                scale.as_str()
            )));
        }
    }
    Ok(())
}

impl SimilarityProvider {
    /// Config-1, 2 and 4 need every table they read. Config-3 and 5 read
    /// per-pair contextual vectors and fall back to `vectors` when a pair
    /// carries none, so for them the static table is optional.
    pub fn new(
        kind: ConfigKind,
        synonyms: Option<SynonymTable>,
        vectors: Option<VectorTable>,
        thresholds: Thresholds,
    ) -> Result<Self> {
        if kind.uses_synonyms() && synonyms.is_none() {
            return Err(Error::Config(format!("{kind} requires a synonym table")));
        }
        if matches!(kind, ConfigKind::StaticVector | ConfigKind::SynonymOrStatic) && vectors.is_none() {
            return Err(Error::Config(format!("{kind} requires a vector table")));
        }
        check_thresholds(&thresholds, CosineScale::Raw)?;
        Ok(Self {
            kind,
            synonyms,
            vectors,
            thresholds,
            scale: CosineScale::Raw,
        })
    }

    /// Same provider with thresholds read on `scale`.
    pub fn with_cosine_scale(self, scale: CosineScale) -> Result<Self> {
        check_thresholds(&self.thresholds, scale)?;
        Ok(Self { scale, ..self })
    }

    pub fn cosine_scale(&self) -> CosineScale {
        self.scale
    }

    pub fn kind(&self) -> ConfigKind {
        self.kind
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.thresholds
    }

    pub fn with_thresholds(&self, thresholds: Thresholds) -> Self {
        Self {
            thresholds,
            ..self.clone()
        }
    }

    pub fn threshold_for(&self, kind: TransformKind) -> f64 {
        self.thresholds.get(kind)
    }

    fn combine(&self, exact: bool, synonym: impl FnOnce() -> bool, cosine: impl FnOnce() -> Option<f64>, theta: f64) -> bool {
        if exact {
            return true;
        }
        let syn = || self.kind.uses_synonyms() && synonym();
        if self.kind == ConfigKind::Synonym {
            return syn();
        }
        if syn() {
            return true;
        }
        // Abstention falls back to exact match, which already failed.
        cosine().is_some_and(|c| c >= theta)
    }

    /// Surface-level similarity at threshold `theta`, using static vectors.
    pub fn similar_at(&self, wi: &[&str], wj: &[&str], theta: f64) -> bool {
        self.combine(
            same_multiset(wi, wj),
            || synonym_similar(wi, wj, self.synonyms.as_ref().expect("checked at construction")),
            || self.vectors.as_ref().and_then(|v| vector_score(wi, wj, v)).map(|c| self.scale.apply(c)),
            theta,
        )
    }

    pub fn similar(&self, wi: &[&str], wj: &[&str], kind: TransformKind) -> bool {
        self.similar_at(wi, wj, self.threshold_for(kind))
    }

    /// Binds the provider to one pair, resolving its threshold and
    /// contextual vectors.
    pub fn judge<'a>(&'a self, pair: &'a TestCasePair) -> PairJudge<'a> {
        self.judge_at(pair, self.threshold_for(pair.transformation.kind))
    }

    pub fn judge_at<'a>(&'a self, pair: &'a TestCasePair, theta: f64) -> PairJudge<'a> {
        PairJudge {
            provider: self,
            pair,
            theta,
        }
    }
}

/// Compares fragments of `T_s` against fragments of `T_f` for one pair.
pub struct PairJudge<'a> {
    provider: &'a SimilarityProvider,
    pair: &'a TestCasePair,
    theta: f64,
}

impl<'a> PairJudge<'a> {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    fn surfaces_s(&self, idx: &[usize]) -> Vec<&'a str> {
        idx.iter().filter_map(|&i| self.pair.source_translation.get(i)).collect()
    }

    fn surfaces_f(&self, idx: &[usize]) -> Vec<&'a str> {
        idx.iter().filter_map(|&i| self.pair.followup_translation.get(i)).collect()
    }

    fn vectors(&self, idx: &[usize], source: bool) -> Vec<&'a [f32]> {
        let ctx = self
            .pair
            .contextual_vectors
            .as_ref()
            .filter(|_| self.provider.kind.uses_context());
        match ctx {
            Some(cv) => {
                let side = if source { &cv.source } else { &cv.followup };
                idx.iter().filter_map(|i| side.get(i).map(Vec::as_slice)).collect()
            }
            None => {
                let Some(table) = self.provider.vectors.as_ref() else {
                    return Vec::new();
                };
                let words = if source { self.surfaces_s(idx) } else { self.surfaces_f(idx) };
                words.into_iter().filter_map(|w| table.get(w)).collect()
            }
        }
    }

    /// Cosine between the fragments on the provider's scale, `None` on
    /// abstention or for configurations without vectors.
    pub fn cosine(&self, source_idx: &[usize], followup_idx: &[usize]) -> Option<f64> {
        if !self.provider.kind.uses_vectors() {
            return None;
        }
        mean_cosine(&self.vectors(source_idx, true), &self.vectors(followup_idx, false)).map(|c| self.provider.scale.apply(c))
    }

    pub fn similar(&self, source_idx: &[usize], followup_idx: &[usize]) -> bool {
        if source_idx.is_empty() || followup_idx.is_empty() {
            return source_idx.is_empty() && followup_idx.is_empty();
        }
        let ws = self.surfaces_s(source_idx);
        let wf = self.surfaces_f(followup_idx);
        self.provider.combine(
            same_multiset(&ws, &wf),
            || synonym_similar(&ws, &wf, self.provider.synonyms.as_ref().expect("checked at construction")),
            || self.cosine(source_idx, followup_idx),
            self.theta,
        )
    }

    /// Ranking score for matching single leftover tokens: 1 for identical
    /// words or synonyms, else the cosine. A pair is acceptable iff its
    /// score is at least the threshold.
    pub fn token_score(&self, source: usize, followup: usize) -> Option<f64> {
        let a = self.pair.source_translation.get(source)?;
        let b = self.pair.followup_translation.get(followup)?;
        if a == b {
            return Some(1.0);
        }
        if self.provider.kind.uses_synonyms()
            && self.provider.synonyms.as_ref().is_some_and(|t| t.are_synonyms(a, b))
        {
            return Some(1.0);
        }
        self.cosine(&[source], &[followup])
    }
}
