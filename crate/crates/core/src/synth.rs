//! Seeded synthetic pairs for property tests, oracle checks and benchmarks.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AlignmentMap, ClosureSets, FineGrainedViolation, GoldLabel, InputMap, TestCasePair, TokenizedText, TransformKind,
    TransformationMeta,
};
use crate::similarity::{ConfigKind, SimilarityProvider, SynonymTable, Thresholds, VectorTable};

/// Error planted in the follow-up translation of a structured pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Injection {
    None,
    DropTranslation,
    SwapMeaning,
    AddRedundant,
}

impl Injection {
    pub const ALL: [Injection; 4] = [Self::None, Self::DropTranslation, Self::SwapMeaning, Self::AddRedundant];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::DropTranslation => "drop-translation",
            Self::SwapMeaning => "swap-meaning",
            Self::AddRedundant => "add-redundant",
        }
    }
}

impl fmt::Display for Injection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Injection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown injection `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Inclusive token count range for each text.
    pub lengths: (usize, usize),
    /// Probability of each possible alignment edge in random mode.
    pub density: f64,
    pub kind: TransformKind,
    pub inject: Injection,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            lengths: (1, 12),
            density: 0.3,
            kind: TransformKind::It2,
            inject: Injection::None,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn check(&self) -> Result<()> {
        let (lo, hi) = self.lengths;
        if lo == 0 || lo > hi {
            return Err(Error::Config(format!("bad length range {lo}..={hi}")));
        }
        if !(0.0..=1.0).contains(&self.density) {
            return Err(Error::Config(format!("density {} outside [0, 1]", self.density)));
        }
        Ok(())
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_alignment(rng: &mut ChaCha8Rng, n_in: usize, n_out: usize, density: f64) -> AlignmentMap {
    let mut m = AlignmentMap::new();
    for i in 0..n_in {
        for o in 0..n_out {
            // gen_bool(1.0) is always true and gen_bool(0.0) always false.
            if rng.gen_bool(density) {
                m.insert(i, o);
            }
        }
    }
    m
}

fn words(rng: &mut ChaCha8Rng, n: usize, prefix: &str, vocab: usize) -> Vec<String> {
    (0..n).map(|_| format!("{prefix}{}", rng.gen_range(0..vocab))).collect()
}

/// A pair with random tokens and independently sampled alignment edges.
/// The input side follows the transformation's shape; IT-3 pairs carry an
/// explicit input map.
pub fn random_pair(cfg: &SynthConfig, rng: &mut ChaCha8Rng, id: impl Into<String>) -> TestCasePair {
    let (lo, hi) = cfg.lengths;
    let len = |rng: &mut ChaCha8Rng| rng.gen_range(lo..=hi);
    let mut ns = len(rng);
    let source_input = words(rng, ns, "w", 6);
    let mut input_map = None;
    let (followup_input, meta) = match cfg.kind {
        TransformKind::It1 | TransformKind::It2 | TransformKind::It5 => {
            let m = rng.gen_range(0..ns);
            let mut f = source_input.clone();
            f[m] = format!("r{}", rng.gen_range(0..6));
            (f, TransformationMeta::replacement(cfg.kind, m, m))
        }
        TransformKind::It4 => {
            // Keep the follow-up within the length bound.
            if ns == hi && hi > 1 {
                ns -= 1;
            }
            let span = rng.gen_range(1..=(hi.saturating_sub(ns)).max(1));
            let at = rng.gen_range(0..=ns);
            let mut f: Vec<String> = source_input[..ns].to_vec();
            let inserted = words(rng, span, "a", 6);
            f.splice(at..at, inserted);
            (f, TransformationMeta::new(cfg.kind, [], at..at + span))
        }
        TransformKind::It3 => {
            let a = rng.gen_range(0..ns);
            let b = rng.gen_range(a + 1..=ns);
            input_map = Some(InputMap::from_edges((a..b).map(|i| (i, i - a))));
            let mutated = (0..ns).filter(|i| !(a..b).contains(i));
            (source_input[a..b].to_vec(), TransformationMeta::new(cfg.kind, mutated, []))
        }
    };
    let source_input = source_input[..ns].to_vec();
    let nts = len(rng);
    let ntf = len(rng);
    let alignment_source = random_alignment(rng, ns, nts, cfg.density);
    let alignment_followup = random_alignment(rng, followup_input.len(), ntf, cfg.density);
    TestCasePair {
        id: id.into(),
        source_translation: TokenizedText::new(words(rng, nts, "t", 6), "zh"),
        followup_translation: TokenizedText::new(words(rng, ntf, "t", 6), "zh"),
        source_input: TokenizedText::new(source_input, "en"),
        followup_input: TokenizedText::new(followup_input, "en"),
        alignment_source,
        alignment_followup,
        input_map,
        transformation: meta,
        tree_source_translation: None,
        tree_followup_translation: None,
        contextual_vectors: None,
        gold: None,
        extra: BTreeMap::new(),
    }
}

pub fn random_corpus(cfg: &SynthConfig, count: usize) -> Result<Vec<TestCasePair>> {
    cfg.check()?;
    let mut rng = rng_for(cfg.seed);
    Ok((0..count).map(|k| random_pair(cfg, &mut rng, format!("rand-{k}"))).collect())
}

const TREE_LABELS: [&str; 9] = ["NP", "VP", "IP", "ADJP", "PP", "QP", "LCP", "DNP", "FRAG"];

fn tree_span(rng: &mut ChaCha8Rng, tokens: &[String], out: &mut String) {
    let label = TREE_LABELS[rng.gen_range(0..TREE_LABELS.len())];
    if tokens.len() == 1 {
        let leaf = format!("(NN {})", tokens[0]);
        if rng.gen_bool(0.3) {
            out.push_str(&format!("({label} {leaf})"));
        } else {
            out.push_str(&leaf);
        }
        return;
    }
    let parts = rng.gen_range(2..=3.min(tokens.len()));
    let mut cuts: BTreeSet<usize> = BTreeSet::new();
    while cuts.len() < parts - 1 {
        cuts.insert(rng.gen_range(1..tokens.len()));
    }
    out.push('(');
    out.push_str(label);
    let mut lo = 0;
    for hi in cuts.into_iter().chain([tokens.len()]) {
        out.push(' ');
        tree_span(rng, &tokens[lo..hi], out);
        lo = hi;
    }
    out.push(')');
}

/// A random bracketed tree whose leaves are `tokens`.
pub fn random_tree(rng: &mut ChaCha8Rng, tokens: &[String]) -> String {
    let mut out = String::new();
    if !tokens.is_empty() {
        tree_span(rng, tokens, &mut out);
    }
    out
}

/// Attaches random trees over both translations.
pub fn with_random_trees(mut pair: TestCasePair, rng: &mut ChaCha8Rng) -> TestCasePair {
    pair.tree_source_translation = Some(random_tree(rng, &pair.source_translation.tokens));
    pair.tree_followup_translation = Some(random_tree(rng, &pair.followup_translation.tokens));
    pair
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Closures computed independently as the connected components, containing
/// at least one input token, of the undirected graph over all four texts.
pub fn closure_oracle(pair: &TestCasePair, input_map: &InputMap) -> BTreeSet<ClosureSets> {
    let ns = pair.source_input.len();
    let nts = pair.source_translation.len();
    let nf = pair.followup_input.len();
    let ntf = pair.followup_translation.len();
    let (o_ts, o_sf, o_tf) = (ns, ns + nts, ns + nts + nf);
    let mut uf = UnionFind::new(o_tf + ntf);
    for (i, o) in pair.alignment_source.edges() {
        uf.union(i, o_ts + o);
    }
    for (i, o) in pair.alignment_followup.edges() {
        uf.union(o_sf + i, o_tf + o);
    }
    for (s, f) in input_map.edges() {
        uf.union(s, o_sf + f);
    }
    let mut comps: BTreeMap<usize, ClosureSets> = BTreeMap::new();
    for node in 0..o_tf + ntf {
        let root = uf.find(node);
        let c = comps.entry(root).or_default();
        if node < o_ts {
            c.sent_s.insert(node);
        } else if node < o_sf {
            c.tran_s.insert(node - o_ts);
        } else if node < o_tf {
            c.sent_f.insert(node - o_sf);
        } else {
            c.tran_f.insert(node - o_tf);
        }
    }
    comps
        .into_values()
        .filter(|c| !c.sent_s.is_empty() || !c.sent_f.is_empty())
        .collect()
}

/// A bilingual toy dictionary. Entries `2k` and `2k + 1` are synonyms;
/// every entry has its own one-hot vector.
#[derive(Debug, Clone)]
pub struct Lexicon {
    pub source: Vec<String>,
    pub target: Vec<String>,
}

impl Lexicon {
    pub fn new(size: usize) -> Self {
        let size = size.max(8) & !1;
        Self {
            source: (0..size).map(|k| format!("w{k:03}")).collect(),
            target: (0..size).map(|k| format!("词{k:03}")).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }

    pub fn synonym_of(k: usize) -> usize {
        k ^ 1
    }

    pub fn synonyms(&self) -> SynonymTable {
        let mut t = SynonymTable::new();
        for (k, w) in self.target.iter().enumerate() {
            t.insert(w, [self.target[Self::synonym_of(k)].clone()]);
        }
        t
    }

    pub fn vector_rows(&self) -> Vec<(String, Vec<f32>)> {
        let n = self.len();
        self.target
            .iter()
            .enumerate()
            .map(|(k, w)| {
                let mut v = vec![0.0f32; n];
                v[k] = 1.0;
                (w.clone(), v)
            })
            .collect()
    }

    pub fn vectors(&self) -> VectorTable {
        let mut t = VectorTable::new(self.len()).expect("non-empty lexicon");
        for (w, v) in self.vector_rows() {
            t.insert(w, v).expect("dimension matches");
        }
        t
    }

    /// Function words that never occur in generated sentences.
    pub fn stopwords(&self) -> Vec<String> {
        ["的", "了", "在"].iter().map(|s| s.to_string()).collect()
    }

    pub fn provider(&self, kind: ConfigKind, thresholds: Thresholds) -> Result<SimilarityProvider> {
        let syn = kind.uses_synonyms().then(|| self.synonyms());
        let vec = kind.uses_vectors().then(|| self.vectors());
        SimilarityProvider::new(kind, syn, vec, thresholds)
    }

    /// Writes `synonyms.tsv`, `vectors.txt` and `stopwords.txt` into `dir`.
    pub fn write_resources(&self, dir: &Path) -> Result<ResourcePaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let paths = ResourcePaths {
            synonyms: dir.join("synonyms.tsv"),
            vectors: dir.join("vectors.txt"),
            stopwords: dir.join("stopwords.txt"),
        };
        let mut syn = String::new();
        for (k, w) in self.target.iter().enumerate() {
            syn.push_str(&format!("{w}\t{}\n", self.target[Self::synonym_of(k)]));
        }
        std::fs::write(&paths.synonyms, syn).map_err(|e| Error::io(&paths.synonyms, e))?;
        let mut buf = Vec::new();
        crate::io::write_vectors(&mut buf, &self.vector_rows()).map_err(|e| Error::io(&paths.vectors, e))?;
        std::fs::write(&paths.vectors, buf).map_err(|e| Error::io(&paths.vectors, e))?;
        let mut stop = self.stopwords().join("\n");
        stop.push('\n');
        std::fs::write(&paths.stopwords, stop).map_err(|e| Error::io(&paths.stopwords, e))?;
        Ok(paths)
    }
}

#[derive(Debug, Clone)]
pub struct ResourcePaths {
    pub synonyms: PathBuf,
    pub vectors: PathBuf,
    pub stopwords: PathBuf,
}

/// Draws distinct lexicon entries, never picking a synonym of one already
/// drawn.
struct Draw<'a> {
    rng: &'a mut ChaCha8Rng,
    used: HashSet<usize>,
    size: usize,
}

impl Draw<'_> {
    fn fresh(&mut self) -> usize {
        loop {
            let k = self.rng.gen_range(0..self.size);
            if !self.used.contains(&k) && !self.used.contains(&Lexicon::synonym_of(k)) {
                self.used.insert(k);
                return k;
            }
        }
    }

    fn synonym(&mut self, k: usize) -> usize {
        let s = Lexicon::synonym_of(k);
        self.used.insert(s);
        s
    }
}

fn identity_edges(n: usize) -> AlignmentMap {
    AlignmentMap::from_edges((0..n).map(|i| (i, i)))
}

/// A dictionary-translated pair with one-to-one alignments and, when asked,
/// one planted error whose exact location becomes the gold label.
pub fn structured_pair(cfg: &SynthConfig, lex: &Lexicon, rng: &mut ChaCha8Rng, id: impl Into<String>) -> TestCasePair {
    let (lo, hi) = cfg.lengths;
    let lo = lo.max(2);
    let hi = hi.max(lo).min(lex.len() / 4);
    let n = rng.gen_range(lo..=hi);
    let mut draw = Draw {
        rng,
        used: HashSet::new(),
        size: lex.len(),
    };
    let src: Vec<usize> = (0..n).map(|_| draw.fresh()).collect();
    let mut input_map = None;
    let (fol, meta, kept): (Vec<usize>, TransformationMeta, Vec<(usize, usize)>) = match cfg.kind {
        TransformKind::It1 | TransformKind::It2 | TransformKind::It5 => {
            let m = draw.rng.gen_range(0..n);
            let mut f = src.clone();
            f[m] = if cfg.kind == TransformKind::It2 {
                draw.synonym(src[m])
            } else {
                draw.fresh()
            };
            let kept = (0..n).filter(|&i| i != m).map(|i| (i, i)).collect();
            (f, TransformationMeta::replacement(cfg.kind, m, m), kept)
        }
        TransformKind::It4 => {
            let span = draw.rng.gen_range(1..=2);
            let at = draw.rng.gen_range(0..=n);
            let mut f = src.clone();
            let ins: Vec<usize> = (0..span).map(|_| draw.fresh()).collect();
            f.splice(at..at, ins);
            let kept = (0..n).map(|i| (i, if i < at { i } else { i + span })).collect();
            (f, TransformationMeta::new(cfg.kind, [], at..at + span), kept)
        }
        TransformKind::It3 => {
            let a = draw.rng.gen_range(0..=n - 2);
            let b = draw.rng.gen_range(a + 2..=n);
            let kept: Vec<(usize, usize)> = (a..b).map(|i| (i, i - a)).collect();
            input_map = Some(InputMap::from_edges(kept.iter().copied()));
            let mutated = (0..n).filter(|i| !(a..b).contains(i));
            (src[a..b].to_vec(), TransformationMeta::new(cfg.kind, mutated, []), kept)
        }
    };

    let mut tf: Vec<usize> = fol.clone();
    let mut mf: Vec<(usize, usize)> = (0..fol.len()).map(|i| (i, i)).collect();
    let mut gold = FineGrainedViolation::default();
    if !kept.is_empty() {
        let (si, fi) = kept[draw.rng.gen_range(0..kept.len())];
        match cfg.inject {
            Injection::None => {}
            Injection::SwapMeaning => {
                tf[fi] = draw.fresh();
                gold = FineGrainedViolation::new([si], [fi]);
            }
            Injection::DropTranslation => {
                tf.remove(fi);
                mf = (0..fol.len())
                    .filter(|&i| i != fi)
                    .map(|i| (i, if i < fi { i } else { i - 1 }))
                    .collect();
                gold = FineGrainedViolation::new([si], []);
            }
            Injection::AddRedundant => {
                let at = draw.rng.gen_range(0..=tf.len());
                tf.insert(at, draw.fresh());
                for e in &mut mf {
                    if e.1 >= at {
                        e.1 += 1;
                    }
                }
                gold = FineGrainedViolation::new([], [at]);
            }
        }
    }

    let text = |ids: &[usize], table: &[String], lang: &str| {
        TokenizedText::new(ids.iter().map(|&k| table[k].clone()).collect::<Vec<_>>(), lang)
    };
    TestCasePair {
        id: id.into(),
        source_input: text(&src, &lex.source, "en"),
        followup_input: text(&fol, &lex.source, "en"),
        source_translation: text(&src, &lex.target, "zh"),
        followup_translation: text(&tf, &lex.target, "zh"),
        alignment_source: identity_edges(n),
        alignment_followup: AlignmentMap::from_edges(mf),
        input_map,
        transformation: meta,
        tree_source_translation: None,
        tree_followup_translation: None,
        contextual_vectors: None,
        gold: Some(GoldLabel {
            violation: !gold.is_empty(),
            fine_grained: Some(gold),
        }),
        extra: BTreeMap::new(),
    }
}

pub fn structured_corpus(cfg: &SynthConfig, lex: &Lexicon, count: usize) -> Result<Vec<TestCasePair>> {
    cfg.check()?;
    let mut rng = rng_for(cfg.seed);
    Ok((0..count)
        .map(|k| structured_pair(cfg, lex, &mut rng, format!("synth-{k}")))
        .collect())
}

/// A structured corpus cycling through every transformation and injection.
pub fn mixed_corpus(lex: &Lexicon, count: usize, lengths: (usize, usize), seed: u64) -> Result<Vec<TestCasePair>> {
    let mut rng = rng_for(seed);
    let mut kinds = TransformKind::ALL.to_vec();
    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        kinds.shuffle(&mut rng);
        let cfg = SynthConfig {
            lengths,
            density: 0.0,
            kind: kinds[0],
            inject: Injection::ALL[k % Injection::ALL.len()],
            seed,
        };
        cfg.check()?;
        out.push(structured_pair(&cfg, lex, &mut rng, format!("synth-{k}")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::build_input_map;
    use crate::closure::build_closures;
    use crate::model::validate_pair;

    #[test]
    fn densities_zero_and_one() {
        let mut rng = rng_for(1);
        let none = random_pair(&SynthConfig { density: 0.0, ..Default::default() }, &mut rng, "a");
        assert!(none.alignment_source.is_empty() && none.alignment_followup.is_empty());
        let full = random_pair(&SynthConfig { density: 1.0, ..Default::default() }, &mut rng, "b");
        assert_eq!(
            full.alignment_source.len(),
            full.source_input.len() * full.source_translation.len()
        );
    }

    #[test]
    fn random_pairs_are_valid_for_every_kind() {
        for kind in TransformKind::ALL {
            let cfg = SynthConfig { kind, seed: 9, ..Default::default() };
            for p in random_corpus(&cfg, 50).unwrap() {
                assert!(validate_pair(&p).is_empty(), "{kind}: {:?}", validate_pair(&p));
                assert!(p.followup_input.len() <= 12 && p.source_input.len() <= 12);
            }
        }
    }

    #[test]
    fn oracle_matches_on_a_small_case() {
        let p = crate::model::it2_pair();
        let im = build_input_map(&p).unwrap();
        let built: BTreeSet<ClosureSets> = build_closures(&p, &im).into_iter().map(|c| c.sets).collect();
        assert_eq!(built, closure_oracle(&p, &im));
    }

    #[test]
    fn structured_pairs_are_valid_and_labelled() {
        let lex = Lexicon::new(200);
        for kind in TransformKind::ALL {
            for inject in Injection::ALL {
                let cfg = SynthConfig { kind, inject, lengths: (3, 10), seed: 4, ..Default::default() };
                for p in structured_corpus(&cfg, &lex, 20).unwrap() {
                    assert!(validate_pair(&p).is_empty(), "{kind} {inject}: {:?}", validate_pair(&p));
                    let g = p.gold.as_ref().unwrap();
                    assert_eq!(g.violation, inject != Injection::None);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_corpus() {
        let lex = Lexicon::new(100);
        let a = mixed_corpus(&lex, 30, (3, 8), 5).unwrap();
        let b = mixed_corpus(&lex, 30, (3, 8), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_trees_cover_the_tokens() {
        let mut rng = rng_for(3);
        for n in 1..10 {
            let toks: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
            let t = crate::treebank::parse_bracket(&random_tree(&mut rng, &toks)).unwrap();
            assert_eq!(t.leaves(), toks);
        }
    }

    #[test]
    fn injection_names() {
        for i in Injection::ALL {
            assert_eq!(i.as_str().parse::<Injection>().unwrap(), i);
        }
        assert!("shuffle".parse::<Injection>().is_err());
    }
}
