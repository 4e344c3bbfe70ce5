//! Corpus-level checking, evaluation and threshold sweeps.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::align::RefineOptions;
use crate::comparator::{check_prepared, prepare, PreparedPair};
use crate::error::{Error, Result};
use crate::io::{load_synonyms, load_vectors, Diagnostic};
use crate::metrics::{CoarseMetrics, Confusion, FineCounts, Prf};
use crate::model::{FailReason, TestCasePair, TransformKind, Verdict, WordClosure};
use crate::similarity::{load_stopwords, ConfigKind, LangPair, SimilarityProvider, Thresholds};

/// Everything needed to check pairs. Shared read-only across workers.
#[derive(Debug, Clone)]
pub struct Checker {
    pub provider: SimilarityProvider,
    pub stopwords: HashSet<String>,
    pub refine: RefineOptions,
    pub lang: LangPair,
}

/// Resource files behind a [`Checker`].
#[derive(Debug, Clone, Default)]
pub struct ResourceFiles {
    pub synonyms: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

impl Checker {
    pub fn new(provider: SimilarityProvider, stopwords: HashSet<String>, lang: LangPair) -> Self {
        Self {
            provider,
            stopwords,
            refine: RefineOptions::default(),
            lang,
        }
    }

    /// Loads the tables a configuration needs. Returns loader warnings.
    pub fn from_files(
        kind: ConfigKind,
        files: &ResourceFiles,
        thresholds: Thresholds,
        lang: LangPair,
    ) -> Result<(Self, Vec<String>)> {
        let mut warnings = Vec::new();
        let synonyms = match (&files.synonyms, kind.uses_synonyms()) {
            (Some(p), true) => Some(load_synonyms(p)?),
            _ => None,
        };
        let vectors = match (&files.vectors, kind.uses_vectors()) {
            (Some(p), true) => {
                let (t, w) = load_vectors(p)?;
                warnings.extend(w);
                Some(t)
            }
            _ => None,
        };
        let stopwords = match &files.stopwords {
            Some(p) => load_stopwords(p)?,
            None => HashSet::new(),
        };
        let provider = SimilarityProvider::new(kind, synonyms, vectors, thresholds)?;
        Ok((Self::new(provider, stopwords, lang), warnings))
    }

    pub fn prepare(&self, pair: &TestCasePair) -> Result<PreparedPair> {
        prepare(pair, &self.refine)
    }

    pub fn check(&self, pair: &TestCasePair) -> Result<Verdict> {
        Ok(check_prepared(&self.prepare(pair)?, &self.provider, &self.stopwords, None))
    }

    pub fn stopwords_sha256(&self) -> String {
        let mut words: Vec<&String> = self.stopwords.iter().collect();
        words.sort();
        let mut h = Sha256::new();
        for w in words {
            h.update(w.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn config_echo(&self) -> Value {
        let th: BTreeMap<&str, f64> = TransformKind::ALL
            .iter()
            .map(|k| (k.as_str(), self.provider.threshold_for(*k)))
            .collect();
        json!({
            "provider": self.provider.kind().to_string(),
            "cosine_scale": self.provider.cosine_scale().as_str(),
            "lang": self.lang.as_str(),
            "thresholds": th,
            "stopwords": self.stopwords.len(),
            "stopwords_sha256": self.stopwords_sha256(),
        })
    }
}

/// Maps `f` over `items` on a pool of `workers` threads, keeping input order.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    if workers == 0 {
        return Err(Error::Config("workers must be at least 1".into()));
    }
    if workers == 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

/// The result of checking one pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairOutcome {
    pub id: String,
    pub kind: TransformKind,
    pub result: std::result::Result<Verdict, String>,
    pub diagnostics: Vec<String>,
}

impl PairOutcome {
    pub fn verdict(&self) -> Option<&Verdict> {
        self.result.as_ref().ok()
    }
}

pub fn check_one(checker: &Checker, pair: &TestCasePair) -> PairOutcome {
    let (result, diagnostics) = match checker.prepare(pair) {
        Ok(prep) => (
            Ok(check_prepared(&prep, &checker.provider, &checker.stopwords, None)),
            prep.refined.diagnostics,
        ),
        Err(e) => (Err(e.to_string()), Vec::new()),
    };
    PairOutcome {
        id: pair.id.clone(),
        kind: pair.transformation.kind,
        result,
        diagnostics,
    }
}

pub fn check_corpus(checker: &Checker, pairs: &[TestCasePair], workers: usize) -> Result<Vec<PairOutcome>> {
    par_map(pairs, workers, |p| check_one(checker, p))
}

fn outcome_json(o: &PairOutcome) -> Value {
    match &o.result {
        Ok(v) => json!({
            "id": o.id,
            "transformation": o.kind.as_str(),
            "violation": v.violation,
            "fine_grained": v.fine_grained,
            "failures": v.failures,
            "diagnostics": o.diagnostics,
        }),
        Err(e) => json!({
            "id": o.id,
            "transformation": o.kind.as_str(),
            "error": e,
        }),
    }
}

fn aggregates(outcomes: &[PairOutcome]) -> Value {
    let mut by_kind: BTreeMap<&str, (u64, u64)> = TransformKind::ALL.iter().map(|k| (k.as_str(), (0, 0))).collect();
    let mut by_reason: BTreeMap<&str, u64> = [FailReason::CwcDissimilar, FailReason::MwcSimilar, FailReason::LeftoverUnmatched]
        .iter()
        .map(|r| (r.as_str(), 0))
        .collect();
    let mut errors = 0u64;
    let mut violations = 0u64;
    let mut flagged = 0u64;
    for o in outcomes {
        let e = by_kind.get_mut(o.kind.as_str()).expect("all kinds present");
        e.0 += 1;
        match &o.result {
            Ok(v) => {
                if v.violation {
                    violations += 1;
                    e.1 += 1;
                }
                flagged += v.fine_grained.len() as u64;
                for f in &v.failures {
                    *by_reason.get_mut(f.reason.as_str()).expect("all reasons present") += 1;
                }
            }
            Err(_) => errors += 1,
        }
    }
    let by_kind: BTreeMap<&str, Value> = by_kind
        .into_iter()
        .map(|(k, (n, v))| (k, json!({"pairs": n, "violations": v})))
        .collect();
    json!({
        "pairs": outcomes.len(),
        "checked": outcomes.len() as u64 - errors,
        "errors": errors,
        "violations": violations,
        "flagged_tokens": flagged,
        "by_transformation": by_kind,
        "failures_by_reason": by_reason,
    })
}

pub fn check_report(checker: &Checker, outcomes: &[PairOutcome], input: &[Diagnostic]) -> Value {
    json!({
        "config": checker.config_echo(),
        "input_diagnostics": input,
        "pairs": outcomes.iter().map(outcome_json).collect::<Vec<_>>(),
        "aggregates": aggregates(outcomes),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub confusion: Confusion,
    pub coarse: CoarseMetrics,
    pub fine_counts: FineCounts,
    pub fine: Prf,
}

/// Scores verdicts against gold labels. Every pair must carry gold; pairs
/// whose check failed are skipped.
pub fn evaluate(pairs: &[TestCasePair], outcomes: &[PairOutcome]) -> Result<Evaluation> {
    let mut confusion = Confusion::default();
    let mut fine_counts = FineCounts::default();
    for (p, o) in pairs.iter().zip(outcomes) {
        let gold = p.gold.as_ref().ok_or_else(|| Error::MissingGold(p.id.clone()))?;
        let Some(v) = o.verdict() else { continue };
        confusion.add(gold.violation, v.violation);
        if let Some(g) = &gold.fine_grained {
            fine_counts.add(g, &v.fine_grained);
        }
    }
    Ok(Evaluation {
        confusion,
        coarse: confusion.metrics(),
        fine_counts,
        fine: fine_counts.prf(),
    })
}

fn ratios_json(m: &CoarseMetrics) -> Value {
    json!({
        "accuracy": m.accuracy.percent(),
        "precision": m.precision.percent(),
        "recall": m.recall.percent(),
        "f1": m.f1.percent(),
    })
}

pub fn evaluation_json(e: &Evaluation) -> Value {
    json!({
        "confusion": e.confusion,
        "coarse": e.coarse,
        "coarse_percent": ratios_json(&e.coarse),
        "fine_counts": e.fine_counts,
        "fine": e.fine,
        "fine_percent": {
            "precision": e.fine.precision.percent(),
            "recall": e.fine.recall.percent(),
            "f1": e.fine.f1.percent(),
        },
    })
}

/// `start, start + step, ..` up to and including `stop`, computed from an
/// integer counter.
pub fn theta_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !step.is_finite() || step <= 0.0 || !start.is_finite() || !stop.is_finite() || stop < start {
        return Err(Error::Sweep(format!("bad sweep range {start}..{stop} step {step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| ((start + k as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub confusion: Confusion,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCurve {
    pub pairs: usize,
    pub points: Vec<SweepPoint>,
    pub best_theta: f64,
    pub best_f1: f64,
}

/// Coarse F1 at each threshold. The best threshold is the smallest one
/// reaching the maximum.
fn sweep_curve(
    checker: &Checker,
    prepared: &[(&TestCasePair, &PreparedPair)],
    grid: &[f64],
    workers: usize,
) -> Result<SweepCurve> {
    let mut points = Vec::with_capacity(grid.len());
    for &theta in grid {
        let preds = par_map(prepared, workers, |(_, prep)| {
            check_prepared(prep, &checker.provider, &checker.stopwords, Some(theta)).violation
        })?;
        let mut c = Confusion::default();
        for ((p, _), pred) in prepared.iter().zip(preds) {
            let gold = p.gold.as_ref().ok_or_else(|| Error::MissingGold(p.id.clone()))?;
            c.add(gold.violation, pred);
        }
        points.push(SweepPoint {
            theta,
            confusion: c,
            f1: c.prf().f1.value,
        });
    }
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.f1 > points[best].f1 {
            best = i;
        }
    }
    Ok(SweepCurve {
        pairs: prepared.len(),
        best_theta: points[best].theta,
        best_f1: points[best].f1,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub overall: SweepCurve,
    pub by_transformation: BTreeMap<String, SweepCurve>,
}

/// Prepares every pair once, then re-checks it at each threshold.
pub fn sweep(checker: &Checker, pairs: &[TestCasePair], grid: &[f64], workers: usize) -> Result<SweepReport> {
    if pairs.is_empty() {
        return Err(Error::Sweep("cannot sweep an empty corpus".into()));
    }
    if grid.is_empty() {
        return Err(Error::Sweep("empty threshold grid".into()));
    }
    if let Some(p) = pairs.iter().find(|p| p.gold.is_none()) {
        return Err(Error::MissingGold(p.id.clone()));
    }
    let prepared = par_map(pairs, workers, |p| checker.prepare(p))?
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<(&TestCasePair, &PreparedPair)> = pairs.iter().zip(prepared.iter()).collect();
    let overall = sweep_curve(checker, &all, grid, workers)?;
    let mut by_transformation = BTreeMap::new();
    for kind in TransformKind::ALL {
        let subset: Vec<_> = all.iter().copied().filter(|(p, _)| p.transformation.kind == kind).collect();
        if !subset.is_empty() {
            by_transformation.insert(kind.as_str().to_string(), sweep_curve(checker, &subset, grid, workers)?);
        }
    }
    Ok(SweepReport {
        overall,
        by_transformation,
    })
}

/// Closures of every pair, in corpus order.
pub fn closures_report(checker: &Checker, pairs: &[TestCasePair], workers: usize) -> Result<Value> {
    let rows = par_map(pairs, workers, |p| -> Value {
        match checker.prepare(p) {
            Ok(prep) => closure_json(p, &prep.closures),
            Err(e) => json!({"id": p.id, "error": e.to_string()}),
        }
    })?;
    Ok(json!({ "pairs": rows }))
}

fn closure_json(p: &TestCasePair, closures: &[WordClosure]) -> Value {
    let words = |idx: &std::collections::BTreeSet<usize>, toks: &[String]| -> Vec<String> {
        idx.iter().map(|&i| toks[i].clone()).collect()
    };
    let rows: Vec<Value> = closures
        .iter()
        .map(|c| {
            json!({
                "kind": c.kind,
                "sent_s": c.sets.sent_s,
                "tran_s": c.sets.tran_s,
                "sent_f": c.sets.sent_f,
                "tran_f": c.sets.tran_f,
                "words": {
                    "sent_s": words(&c.sets.sent_s, &p.source_input.tokens),
                    "tran_s": words(&c.sets.tran_s, &p.source_translation.tokens),
                    "sent_f": words(&c.sets.sent_f, &p.followup_input.tokens),
                    "tran_f": words(&c.sets.tran_f, &p.followup_translation.tokens),
                },
            })
        })
        .collect();
    json!({"id": p.id, "closures": rows})
}
