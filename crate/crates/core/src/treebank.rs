//! Penn-style bracketed constituency trees.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    /// Constituent label for internal nodes, the token for leaves.
    pub label: String,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    /// Set for leaves only.
    pub leaf_index: Option<usize>,
    /// Half-open range of leaf indices dominated by this node.
    pub span: (usize, usize),
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.leaf_index.is_some()
    }

    pub fn leaf_count(&self) -> usize {
        self.span.1 - self.span.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstituencyTree {
    nodes: Vec<Node>,
    root: NodeId,
    leaf_nodes: Vec<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelClass {
    Clause,
    Phrase,
    VerbPhrase,
    Other,
}

/// Maps constituent labels onto [`LabelClass`]. Anything not listed is
/// [`LabelClass::Other`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTable {
    pub clause: BTreeSet<String>,
    pub verb_phrase: BTreeSet<String>,
    pub phrase: BTreeSet<String>,
}

fn set(items: &[&str]) -> BTreeSet<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl LabelTable {
    /// Chinese Treebank labels.
    pub fn chinese() -> Self {
        Self {
            clause: set(&["IP", "CP", "S"]),
            verb_phrase: set(&["VP"]),
            phrase: set(&["NP", "DNP", "PP", "QP", "ADJP", "DP", "LCP", "CLP"]),
        }
    }

    /// Penn Treebank labels.
    pub fn english() -> Self {
        Self {
            clause: set(&["S", "SBAR", "SINV", "SQ"]),
            verb_phrase: set(&["VP"]),
            phrase: set(&["NP", "PP", "ADJP", "ADVP", "QP", "WHNP"]),
        }
    }

    /// Picks the table for an ISO language code; unknown codes get the
    /// English table.
    pub fn for_language(lang: &str) -> Self {
        if lang.to_ascii_lowercase().starts_with("zh") {
            Self::chinese()
        } else {
            Self::english()
        }
    }
}

/// Strips function tags and indices: `NP-SBJ-1` → `NP`, `NP=2` → `NP`.
fn base_label(label: &str) -> &str {
    if label.starts_with('-') {
        return label;
    }
    label.split(['-', '=']).next().unwrap_or(label)
}

pub fn classify_label(label: &str, table: &LabelTable) -> LabelClass {
    let base = base_label(label);
    if table.verb_phrase.contains(base) {
        LabelClass::VerbPhrase
    } else if table.clause.contains(base) {
        LabelClass::Clause
    } else if table.phrase.contains(base) {
        LabelClass::Phrase
    } else {
        LabelClass::Other
    }
}

fn decode_token(raw: &str) -> String {
    match raw {
        "-LRB-" => "(".into(),
        "-RRB-" => ")".into(),
        _ => raw.into(),
    }
}

fn encode_token(tok: &str) -> &str {
    match tok {
        "(" => "-LRB-",
        ")" => "-RRB-",
        _ => tok,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Lex<'a> {
    Open(usize),
    Close(usize),
    Atom(usize, &'a str),
}

fn lex(text: &str) -> Vec<Lex<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (char_pos, (byte, ch)) in text.char_indices().enumerate() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some((b, c)) = start.take() {
                out.push(Lex::Atom(c, &text[b..byte]));
            }
            if ch == '(' {
                out.push(Lex::Open(char_pos));
            } else if ch == ')' {
                out.push(Lex::Close(char_pos));
            }
        } else if start.is_none() {
            start = Some((byte, char_pos));
        }
    }
    if let Some((b, c)) = start {
        out.push(Lex::Atom(c, &text[b..]));
    }
    out
}

struct Parser<'a> {
    lexemes: Vec<Lex<'a>>,
    pos: usize,
    end: usize,
    nodes: Vec<Node>,
    leaf_nodes: Vec<NodeId>,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, offset: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Bracket {
            offset,
            message: message.into(),
        })
    }

    fn push(&mut self, label: String, leaf_index: Option<usize>) -> NodeId {
        let id = self.nodes.len();
        self.nodes.push(Node {
            label,
            children: Vec::new(),
            parent: None,
            leaf_index,
            span: (0, 0),
        });
        id
    }

    /// Parses one bracketed constituent; the current lexeme must be `(`.
    fn constituent(&mut self) -> Result<NodeId> {
        let open_at = match self.lexemes.get(self.pos) {
            Some(Lex::Open(at)) => *at,
            Some(Lex::Close(at)) | Some(Lex::Atom(at, _)) => return self.err(*at, "expected `(`"),
            None => return self.err(self.end, "unexpected end of input"),
        };
        self.pos += 1;
        let label = match self.lexemes.get(self.pos) {
            Some(Lex::Atom(_, a)) => {
                self.pos += 1;
                a.to_string()
            }
            _ => String::new(),
        };
        let id = self.push(label, None);
        let first_leaf = self.leaf_nodes.len();
        loop {
            match self.lexemes.get(self.pos).cloned() {
                Some(Lex::Close(_)) => {
                    self.pos += 1;
                    break;
                }
                Some(Lex::Open(_)) => {
                    let child = self.constituent()?;
                    self.nodes[child].parent = Some(id);
                    self.nodes[id].children.push(child);
                }
                Some(Lex::Atom(_, a)) => {
                    self.pos += 1;
                    let index = self.leaf_nodes.len();
                    let leaf = self.push(decode_token(a), Some(index));
                    self.nodes[leaf].span = (index, index + 1);
                    self.nodes[leaf].parent = Some(id);
                    self.leaf_nodes.push(leaf);
                    self.nodes[id].children.push(leaf);
                }
                None => return self.err(self.end, format!("unbalanced `(` opened at offset {open_at}")),
            }
        }
        if self.nodes[id].children.is_empty() {
            return self.err(open_at, "empty constituent");
        }
        self.nodes[id].span = (first_leaf, self.leaf_nodes.len());
        Ok(id)
    }
}

/// Parses a Penn-style bracketing such as `(IP (NP (PN 它)) (VP (VV 提供)))`.
///
/// A wrapper with an empty label and a single child, as emitted by some
/// parsers (`( (S ...) )`), is kept as the root.
pub fn parse_bracket(text: &str) -> Result<ConstituencyTree> {
    let end = text.chars().count();
    let mut parser = Parser {
        lexemes: lex(text),
        pos: 0,
        end,
        nodes: Vec::new(),
        leaf_nodes: Vec::new(),
    };
    if parser.lexemes.is_empty() {
        return parser.err(0, "empty input");
    }
    let root = parser.constituent()?;
    if let Some(extra) = parser.lexemes.get(parser.pos) {
        let at = match extra {
            Lex::Open(a) | Lex::Close(a) | Lex::Atom(a, _) => *a,
        };
        return parser.err(at, "trailing input after the root constituent");
    }
    Ok(ConstituencyTree {
        nodes: parser.nodes,
        root,
        leaf_nodes: parser.leaf_nodes,
    })
}

impl ConstituencyTree {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len_leaves(&self) -> usize {
        self.leaf_nodes.len()
    }

    pub fn leaves(&self) -> Vec<String> {
        self.leaf_nodes.iter().map(|&n| self.nodes[n].label.clone()).collect()
    }

    pub fn leaf_node(&self, leaf: usize) -> Option<NodeId> {
        self.leaf_nodes.get(leaf).copied()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[id].label
    }

    pub fn dominates(&self, node: NodeId, leaf: usize) -> bool {
        let (lo, hi) = self.nodes[node].span;
        lo <= leaf && leaf < hi
    }

    /// Lowest ancestor of `leaf` that dominates at least two leaves, or the
    /// root when the tree has a single leaf. `None` if `leaf` is out of range.
    pub fn smallest_covering_subtree(&self, leaf: usize) -> Option<NodeId> {
        let mut cur = self.leaf_node(leaf)?;
        while let Some(parent) = self.nodes[cur].parent {
            cur = parent;
            if self.nodes[cur].leaf_count() >= 2 {
                return Some(cur);
            }
        }
        Some(self.root)
    }

    /// Direct left and right neighbours of `leaf` within `node`'s leaves.
    pub fn adjacent_leaves(&self, node: NodeId, leaf: usize) -> Vec<usize> {
        let (lo, hi) = self.nodes[node].span;
        if leaf < lo || leaf >= hi {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(2);
        if leaf > lo {
            out.push(leaf - 1);
        }
        if leaf + 1 < hi {
            out.push(leaf + 1);
        }
        out
    }

    /// Bracketed rendering that [`parse_bracket`] reads back to the same tree.
    pub fn to_bracket(&self) -> String {
        let mut out = String::new();
        self.render(self.root, &mut out);
        out
    }

    fn render(&self, id: NodeId, out: &mut String) {
        let node = &self.nodes[id];
        if node.is_leaf() {
            out.push_str(encode_token(&node.label));
            return;
        }
        out.push('(');
        out.push_str(&node.label);
        for &c in &node.children {
            if !out.ends_with('(') || !node.label.is_empty() {
                out.push(' ');
            }
            self.render(c, out);
        }
        out.push(')');
    }

    /// Structural shape for isomorphism checks: labels and nesting only.
    pub fn shape(&self) -> String {
        let mut out = String::new();
        self.shape_of(self.root, &mut out);
        out
    }

    fn shape_of(&self, id: NodeId, out: &mut String) {
        let node = &self.nodes[id];
        let _ = write!(out, "[{}", node.label);
        for &c in &node.children {
            self.shape_of(c, out);
        }
        out.push(']');
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG4_TREE: &str = "(IP (PP (P 在) (NP (NT 1) (NT 月份))) (NP (DT 大多数) (NN 保单)) (VP (ADVP (AD 都)) (VP (VV 会) (VP (VV 提供) (NP (DNP (NP (LCP (NP (JJ 大) (NN 流行)) (LC 期间)) (NN 建筑物)) (DEG 的)) (NP (NN 维护) (NN 成本)))))))";

    #[test]
    fn parses_noun_phrase() {
        let t = parse_bracket("(NP (NN 1) (NN 月份))").unwrap();
        assert_eq!(t.label(t.root()), "NP");
        assert_eq!(t.leaves(), vec!["1", "月份"]);
    }

    #[test]
    fn parses_clause() {
        let t = parse_bracket("(IP (NP (PN 它)) (VP (VV 提供)))").unwrap();
        assert_eq!(t.leaves(), vec!["它", "提供"]);
        assert_eq!(classify_label(t.label(t.root()), &LabelTable::chinese()), LabelClass::Clause);
    }

    #[test]
    fn unbalanced_input_fails_at_end() {
        let text = "(NP (NN 1)";
        match parse_bracket(text) {
            Err(Error::Bracket { offset, .. }) => assert_eq!(offset, text.chars().count()),
            other => panic!("expected bracket error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_trailing_and_empty() {
        assert!(parse_bracket("(NP a) b").is_err());
        assert!(parse_bracket("").is_err());
        assert!(parse_bracket("()").is_err());
        assert!(parse_bracket("a").is_err());
    }

    #[test]
    fn escaped_brackets_round_trip() {
        let t = parse_bracket("(NP (-LRB- -LRB-) (NN x) (-RRB- -RRB-))").unwrap();
        assert_eq!(t.leaves(), vec!["(", "x", ")"]);
        let again = parse_bracket(&t.to_bracket()).unwrap();
        assert_eq!(again.shape(), t.shape());
    }

    #[test]
    fn covering_subtree_of_month() {
        let t = parse_bracket(FIG4_TREE).unwrap();
        let month = t.leaves().iter().position(|l| l == "月份").unwrap();
        let sub = t.smallest_covering_subtree(month).unwrap();
        assert_eq!(t.label(sub), "NP");
        assert_eq!(t.node(sub).span, (1, 3));
        assert_eq!(t.adjacent_leaves(sub, month), vec![1]);
    }

    #[test]
    fn covering_subtree_of_adverb_is_verb_phrase() {
        let t = parse_bracket(FIG4_TREE).unwrap();
        let dou = t.leaves().iter().position(|l| l == "都").unwrap();
        let sub = t.smallest_covering_subtree(dou).unwrap();
        assert_eq!(classify_label(t.label(sub), &LabelTable::chinese()), LabelClass::VerbPhrase);
    }

    #[test]
    fn single_leaf_tree_returns_root() {
        let t = parse_bracket("(NP (NN x))").unwrap();
        assert_eq!(t.smallest_covering_subtree(0), Some(t.root()));
        assert!(t.adjacent_leaves(t.node(t.leaf_node(0).unwrap()).parent.unwrap(), 0).is_empty());
    }

    #[test]
    fn balanced_binary_tree() {
        // Oracle: ancestors of leaf 2 are (X c d) then (S ...); the lowest
        // with two leaves is (X c d), spanning 2..4.
        let t = parse_bracket("(S (X (A a) (B b)) (X (C c) (D d)))").unwrap();
        let sub = t.smallest_covering_subtree(2).unwrap();
        assert_eq!(t.node(sub).span, (2, 4));
        assert_eq!(t.label(sub), "X");
    }

    #[test]
    fn three_leaf_phrase_middle_has_two_neighbours() {
        let t = parse_bracket("(NP (A a) (B b) (C c))").unwrap();
        assert_eq!(t.adjacent_leaves(t.root(), 1), vec![0, 2]);
    }

    #[test]
    fn label_classes() {
        let zh = LabelTable::chinese();
        assert_eq!(classify_label("NP", &zh), LabelClass::Phrase);
        assert_eq!(classify_label("VP", &zh), LabelClass::VerbPhrase);
        assert_eq!(classify_label("IP", &zh), LabelClass::Clause);
        assert_eq!(classify_label("NN", &zh), LabelClass::Other);
        assert_eq!(classify_label("WHATEVER", &zh), LabelClass::Other);
        let en = LabelTable::english();
        assert_eq!(classify_label("NP-SBJ", &en), LabelClass::Phrase);
        assert_eq!(classify_label("SBAR", &en), LabelClass::Clause);
        assert_eq!(classify_label("-NONE-", &en), LabelClass::Other);
    }
}
