//! Corpus and resource file formats.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    validate_pair, AlignmentMap, ContextualVectors, FineGrainedViolation, GoldLabel, InputMap, TestCasePair,
    TokenizedText, TransformKind, TransformationMeta,
};
use crate::similarity::{LangPair, SynonymTable, VectorTable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformationRecord {
    pub kind: TransformKind,
    #[serde(default)]
    pub mutated_source_indices: Vec<usize>,
    #[serde(default)]
    pub mutated_followup_indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_map: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRecord {
    pub violation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fine_grained: Option<FineGrainedViolation>,
}

/// One line of a pair corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<LangPair>,
    pub transformation: TransformationRecord,
    pub source_input: Vec<String>,
    pub followup_input: Vec<String>,
    pub source_translation: Vec<String>,
    pub followup_translation: Vec<String>,
    #[serde(default)]
    pub alignment_source: Vec<(usize, usize)>,
    #[serde(default)]
    pub alignment_followup: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree_source_translation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree_followup_translation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contextual_vectors: Option<ContextualVectors>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<GoldRecord>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl PairRecord {
    pub fn into_pair(self, default_lang: LangPair) -> TestCasePair {
        let lang = self.lang.unwrap_or(default_lang);
        let (sl, tl) = (lang.source_language(), lang.target_language());
        let t = self.transformation;
        let mut extra = self.extra;
        if let Some(l) = self.lang {
            extra.insert("lang".into(), serde_json::Value::String(l.as_str().into()));
        }
        TestCasePair {
            id: self.id,
            source_input: TokenizedText::new(self.source_input, sl),
            followup_input: TokenizedText::new(self.followup_input, sl),
            source_translation: TokenizedText::new(self.source_translation, tl),
            followup_translation: TokenizedText::new(self.followup_translation, tl),
            alignment_source: AlignmentMap::from_edges(self.alignment_source),
            alignment_followup: AlignmentMap::from_edges(self.alignment_followup),
            input_map: t.input_map.map(InputMap::from_edges),
            transformation: TransformationMeta::new(t.kind, t.mutated_source_indices, t.mutated_followup_indices),
            tree_source_translation: self.tree_source_translation,
            tree_followup_translation: self.tree_followup_translation,
            contextual_vectors: self.contextual_vectors,
            gold: self.gold.map(|g| GoldLabel {
                violation: g.violation,
                fine_grained: g.fine_grained,
            }),
            extra,
        }
    }

    pub fn from_pair(pair: &TestCasePair) -> Self {
        let mut extra = pair.extra.clone();
        let lang = extra
            .remove("lang")
            .and_then(|v| v.as_str().and_then(|s| s.parse().ok()));
        Self {
            id: pair.id.clone(),
            lang,
            transformation: TransformationRecord {
                kind: pair.transformation.kind,
                mutated_source_indices: pair.transformation.mutated_source.iter().copied().collect(),
                mutated_followup_indices: pair.transformation.mutated_followup.iter().copied().collect(),
                input_map: pair.input_map.as_ref().map(|m| m.edges().collect()),
            },
            source_input: pair.source_input.tokens.clone(),
            followup_input: pair.followup_input.tokens.clone(),
            source_translation: pair.source_translation.tokens.clone(),
            followup_translation: pair.followup_translation.tokens.clone(),
            alignment_source: pair.alignment_source.edges().collect(),
            alignment_followup: pair.alignment_followup.edges().collect(),
            tree_source_translation: pair.tree_source_translation.clone(),
            tree_followup_translation: pair.tree_followup_translation.clone(),
            contextual_vectors: pair.contextual_vectors.clone(),
            gold: pair.gold.as_ref().map(|g| GoldRecord {
                violation: g.violation,
                fine_grained: g.fine_grained.clone(),
            }),
            extra,
        }
    }
}

/// A line that could not be turned into a valid pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct ReadOutcome {
    pub pairs: Vec<TestCasePair>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses and validates one JSONL line.
pub fn parse_pair_line(line: &str, default_lang: LangPair) -> std::result::Result<TestCasePair, String> {
    let record: PairRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let pair = record.into_pair(default_lang);
    let findings = validate_pair(&pair);
    if findings.is_empty() {
        Ok(pair)
    } else {
        let msgs: Vec<String> = findings.iter().map(ToString::to_string).collect();
        Err(format!("pair `{}`: {}", pair.id, msgs.join("; ")))
    }
}

/// Reads pairs from JSONL text. Lenient mode collects bad lines as
/// diagnostics; strict mode fails on the first one.
pub fn read_pairs_from(text: &str, name: &str, default_lang: LangPair, strict: bool) -> Result<ReadOutcome> {
    let mut out = ReadOutcome::default();
    let mut ids = BTreeSet::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = parse_pair_line(line, default_lang).and_then(|p| {
            if ids.insert(p.id.clone()) {
                Ok(p)
            } else {
                Err(format!("duplicate pair id `{}`", p.id))
            }
        });
        match parsed {
            Ok(p) => out.pairs.push(p),
            Err(message) if strict => {
                return Err(Error::Format {
                    path: name.to_string(),
                    line: line_no,
                    message,
                })
            }
            Err(message) => out.diagnostics.push(Diagnostic { line: line_no, message }),
        }
    }
    Ok(out)
}

pub fn read_pairs(path: impl AsRef<Path>, default_lang: LangPair, strict: bool) -> Result<ReadOutcome> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_pairs_from(&text, &path.display().to_string(), default_lang, strict)
}

pub fn write_pairs<W: Write>(mut w: W, pairs: &[TestCasePair]) -> Result<()> {
    for p in pairs {
        let line = serde_json::to_string(&PairRecord::from_pair(p))?;
        writeln!(w, "{line}").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

pub fn write_pairs_file(path: impl AsRef<Path>, pairs: &[TestCasePair]) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_pairs(&mut w, pairs)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// `word<TAB>syn1,syn2,...` per line. Later lines for the same word add to
/// its synonyms.
pub fn parse_synonyms(text: &str, name: &str) -> Result<SynonymTable> {
    let mut acc: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((word, syns)) = line.split_once('\t') else {
            return Err(Error::Format {
                path: name.into(),
                line: n + 1,
                message: "expected `word<TAB>synonyms`".into(),
            });
        };
        let word = word.trim();
        if word.is_empty() {
            return Err(Error::Format {
                path: name.into(),
                line: n + 1,
                message: "empty headword".into(),
            });
        }
        acc.entry(word.to_string())
            .or_default()
            .extend(syns.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from));
    }
    let mut table = SynonymTable::new();
    for (w, s) in acc {
        table.insert(&w, s);
    }
    Ok(table)
}

pub fn load_synonyms(path: impl AsRef<Path>) -> Result<SynonymTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_synonyms(&text, &path.display().to_string())
}

/// Header `count dim`, then `word v1 .. vdim` per line. Returns the table
/// and warnings for duplicate words, where the last vector wins.
pub fn parse_vectors<R: BufRead>(reader: R, name: &str) -> Result<(VectorTable, Vec<String>)> {
    let fmt_err = |line: usize, message: String| Error::Format {
        path: name.into(),
        line,
        message,
    };
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(name, e))?,
        None => return Err(fmt_err(1, "missing `count dim` header".into())),
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (count, dim) = match parts.as_slice() {
        [c, d] => match (c.parse::<usize>(), d.parse::<usize>()) {
            (Ok(c), Ok(d)) if d > 0 => (c, d),
            _ => return Err(fmt_err(1, format!("bad header `{header}`"))),
        },
        _ => return Err(fmt_err(1, format!("bad header `{header}`"))),
    };
    let mut table = VectorTable::new(dim)?;
    let mut warnings = Vec::new();
    let mut rows = 0usize;
    for (n, line) in lines.enumerate() {
        let line_no = n + 2;
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let word = it.next().expect("non-blank line has a field");
        let values: Vec<f32> = it
            .map(|x| x.parse::<f32>().map_err(|_| fmt_err(line_no, format!("bad number `{x}`"))))
            .collect::<Result<_>>()?;
        if values.len() != dim {
            return Err(fmt_err(
                line_no,
                format!("`{word}` has {} values, header says {dim}", values.len()),
            ));
        }
        if table.insert(word, values)?.is_some() {
            warnings.push(format!("{name}:{line_no}: duplicate vector for `{word}`, keeping the last"));
        }
        rows += 1;
    }
    if rows != count {
        warnings.push(format!("{name}: header declares {count} vectors, found {rows}"));
    }
    Ok((table, warnings))
}

pub fn load_vectors(path: impl AsRef<Path>) -> Result<(VectorTable, Vec<String>)> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_vectors(BufReader::new(f), &path.display().to_string())
}

pub fn write_vectors<W: Write>(mut w: W, rows: &[(String, Vec<f32>)]) -> std::io::Result<()> {
    let dim = rows.first().map_or(0, |r| r.1.len());
    writeln!(w, "{} {}", rows.len(), dim)?;
    for (word, v) in rows {
        let vals: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{} {}", word, vals.join(" "))?;
    }
    Ok(())
}
