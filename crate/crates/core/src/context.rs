//! The four naming contexts of a method.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::callgraph::CallGraph;
use crate::corpus::{Corpus, MethodRecord};
use crate::subtoken::{split_identifier, SubToken};

pub const DEFAULT_L_MAX: usize = 64;

/// String form of a padding slot in exported bundles.
pub const PAD_TEXT: &str = "\u{0}PAD";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextKind {
    Internal,
    Interaction,
    Sibling,
    Enclosing,
}

impl ContextKind {
    pub const ALL: [ContextKind; 4] = [
        ContextKind::Internal,
        ContextKind::Interaction,
        ContextKind::Sibling,
        ContextKind::Enclosing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContextKind::Internal => "internal",
            ContextKind::Interaction => "interaction",
            ContextKind::Sibling => "sibling",
            ContextKind::Enclosing => "enclosing",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// Checking sees callers and callees; suggestion sees callees only, since a
/// method being named has no callers yet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Checking,
    Suggestion,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Checking => "checking",
            Mode::Suggestion => "suggestion",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "checking" => Some(Mode::Checking),
            "suggestion" => Some(Mode::Suggestion),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Slot {
    Token(SubToken),
    Pad,
}

impl Serialize for Slot {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Slot::Token(t) => s.serialize_str(t.as_str()),
            Slot::Pad => s.serialize_str(PAD_TEXT),
        }
    }
}

impl<'de> Deserialize<'de> for Slot {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct SlotVisitor;
        impl Visitor<'_> for SlotVisitor {
            type Value = Slot;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a sub-token or the PAD marker")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Slot, E> {
                if v == PAD_TEXT {
                    return Ok(Slot::Pad);
                }
                SubToken::new(v)
                    .map(Slot::Token)
                    .ok_or_else(|| E::custom("invalid sub-token"))
            }
        }
        d.deserialize_str(SlotVisitor)
    }
}

/// A context sequence, possibly padded. Slots past `true_length` are PAD.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<Slot>,
    pub true_length: usize,
}

impl TokenSeq {
    pub fn from_tokens(tokens: Vec<SubToken>) -> Self {
        let true_length = tokens.len();
        TokenSeq {
            tokens: tokens.into_iter().map(Slot::Token).collect(),
            true_length,
        }
    }

    /// The non-PAD prefix.
    pub fn real(&self) -> impl Iterator<Item = &SubToken> + '_ {
        self.tokens[..self.true_length]
            .iter()
            .filter_map(|s| match s {
                Slot::Token(t) => Some(t),
                Slot::Pad => None,
            })
    }

    pub fn real_strs(&self) -> Vec<&str> {
        self.real().map(SubToken::as_str).collect()
    }

    pub fn is_empty(&self) -> bool {
        self.true_length == 0
    }
}

/// Keeps the first `l_max` tokens and PAD-fills the tail up to `l_max`.
pub fn pad_truncate(seq: &TokenSeq, l_max: usize) -> TokenSeq {
    assert!(l_max >= 1, "l_max must be at least 1");
    let true_length = seq.true_length.min(l_max);
    let mut tokens: Vec<Slot> = seq.tokens[..true_length].to_vec();
    tokens.resize(l_max, Slot::Pad);
    TokenSeq {
        tokens,
        true_length,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextBundle {
    pub internal: TokenSeq,
    pub interaction: TokenSeq,
    pub sibling: TokenSeq,
    pub enclosing: TokenSeq,
    pub mode: Mode,
}

impl ContextBundle {
    pub fn get(&self, kind: ContextKind) -> &TokenSeq {
        match kind {
            ContextKind::Internal => &self.internal,
            ContextKind::Interaction => &self.interaction,
            ContextKind::Sibling => &self.sibling,
            ContextKind::Enclosing => &self.enclosing,
        }
    }

    pub fn padded(&self, l_max: usize) -> ContextBundle {
        ContextBundle {
            internal: pad_truncate(&self.internal, l_max),
            interaction: pad_truncate(&self.interaction, l_max),
            sibling: pad_truncate(&self.sibling, l_max),
            enclosing: pad_truncate(&self.enclosing, l_max),
            mode: self.mode,
        }
    }
}

fn extend_split(out: &mut Vec<SubToken>, ident: &str) {
    out.extend(split_identifier(ident));
}

fn internal_tokens(m: &MethodRecord, out: &mut Vec<SubToken>) {
    for ident in &m.body_tokens {
        extend_split(out, ident);
    }
    for p in &m.params {
        extend_split(out, &p.ty);
        extend_split(out, &p.name);
    }
    if m.return_type != "void" {
        extend_split(out, &m.return_type);
    }
}

/// Body identifiers, then parameter type/name pairs, then the return type.
/// The method's own name is not included.
pub fn build_internal_context(m: &MethodRecord) -> TokenSeq {
    let mut out = Vec::new();
    internal_tokens(m, &mut out);
    TokenSeq::from_tokens(out)
}

fn name_and_content(m: &MethodRecord, out: &mut Vec<SubToken>) {
    out.extend(m.name_subtokens.iter().cloned());
    internal_tokens(m, out);
}

/// Name and internal tokens of each callee (call-site order), followed in
/// checking mode by each caller (id order). Self-calls are skipped.
pub fn build_interaction_context(
    corpus: &Corpus,
    graph: &CallGraph,
    m: usize,
    mode: Mode,
) -> TokenSeq {
    let mut out = Vec::new();
    for &callee in graph.callees[m].iter().filter(|&&c| c != m) {
        name_and_content(&corpus.methods[callee], &mut out);
    }
    if mode == Mode::Checking {
        for caller in graph
            .callers_by_id(corpus, m)
            .into_iter()
            .filter(|&c| c != m)
        {
            name_and_content(&corpus.methods[caller], &mut out);
        }
    }
    TokenSeq::from_tokens(out)
}

/// Name and internal tokens of the other methods of the class, in
/// declaration order.
pub fn build_sibling_context(corpus: &Corpus, m: usize) -> TokenSeq {
    let mut out = Vec::new();
    for sib in corpus.class_methods(corpus.class_of(m)).filter(|&s| s != m) {
        name_and_content(&corpus.methods[sib], &mut out);
    }
    TokenSeq::from_tokens(out)
}

/// Class name followed by the class-level entity names.
pub fn build_enclosing_context(corpus: &Corpus, m: usize) -> TokenSeq {
    let class = &corpus.classes[corpus.class_of(m)];
    let mut out = split_identifier(&class.name);
    for ident in &class.entity_names {
        extend_split(&mut out, ident);
    }
    TokenSeq::from_tokens(out)
}

/// All four contexts of method `m`, unpadded.
pub fn build_bundle(corpus: &Corpus, graph: &CallGraph, m: usize, mode: Mode) -> ContextBundle {
    ContextBundle {
        internal: build_internal_context(&corpus.methods[m]),
        interaction: build_interaction_context(corpus, graph, m, mode),
        sibling: build_sibling_context(corpus, m),
        enclosing: build_enclosing_context(corpus, m),
        mode,
    }
}

/// Strings of a token list, for assertions and export.
pub fn strings(tokens: &[SubToken]) -> Vec<String> {
    tokens.iter().map(|t| String::from(t.as_str())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::parse_source;

    fn setup(src: &str) -> (Corpus, CallGraph) {
        let c = Corpus::from_files([parse_source("T.java", src).unwrap()]).unwrap();
        let g = CallGraph::build(&c);
        (c, g)
    }

    fn seq(tokens: &[&str]) -> TokenSeq {
        TokenSeq::from_tokens(tokens.iter().map(|t| SubToken::new(t).unwrap()).collect())
    }

    #[test]
    fn internal_ordering() {
        let (c, _) = setup("class A { int add(int left, int right){return left+right;} }");
        let ctx = build_internal_context(&c.methods[0]);
        assert_eq!(
            ctx.real_strs(),
            ["left", "right", "int", "left", "int", "right", "int"]
        );
    }

    #[test]
    fn void_empty_method_has_no_internal_tokens() {
        let (c, _) = setup("class A { void tick() {} }");
        assert!(build_internal_context(&c.methods[0]).is_empty());
    }

    #[test]
    fn checking_sees_callers_suggestion_does_not() {
        let (c, g) =
            setup("class A { int target() { return 1; } void helperUser() { target(); } }");
        let checking = build_interaction_context(&c, &g, 0, Mode::Checking);
        let suggestion = build_interaction_context(&c, &g, 0, Mode::Suggestion);
        assert!(suggestion.is_empty());
        assert_eq!(checking.real_strs(), ["helper", "user", "target"]);
    }

    #[test]
    fn isolated_method_has_empty_interaction() {
        let (c, g) = setup("class A { int f() { return 1; } }");
        for mode in [Mode::Checking, Mode::Suggestion] {
            assert!(build_interaction_context(&c, &g, 0, mode).is_empty());
        }
    }

    #[test]
    fn recursion_does_not_leak_own_name() {
        let (c, g) = setup("class A { int countDown(int n) { return countDown(n); } }");
        assert!(build_interaction_context(&c, &g, 0, Mode::Checking).is_empty());
    }

    #[test]
    fn siblings_in_declaration_order() {
        let (c, _) = setup(
            "class Canvas { void onMouseUp(int alpha) {} void onMouseOver() {} void onMouseDown(int beta) {} }",
        );
        let ctx = build_sibling_context(&c, 1);
        assert_eq!(
            ctx.real_strs(),
            ["on", "mouse", "up", "int", "alpha", "on", "mouse", "down", "int", "beta"]
        );
        let (c, _) = setup("class Solo { void only() {} }");
        assert!(build_sibling_context(&c, 0).is_empty());
    }

    #[test]
    fn enclosing_uses_class_level_names() {
        let (c, _) =
            setup("class InputStream { private byte[] stream; byte[] read() { return stream; } }");
        assert_eq!(
            build_enclosing_context(&c, 0).real_strs(),
            ["input", "stream", "stream"]
        );
        let (c, _) = setup("class EmptyHolder { void f() {} }");
        assert_eq!(
            build_enclosing_context(&c, 0).real_strs(),
            ["empty", "holder"]
        );
    }

    #[test]
    fn pad_truncate_cases() {
        let s = seq(&["aa", "bb", "cc"]);
        let p = pad_truncate(&s, 5);
        assert_eq!(p.tokens.len(), 5);
        assert_eq!(p.true_length, 3);
        assert_eq!(&p.tokens[3..], &[Slot::Pad, Slot::Pad]);

        let s5 = seq(&["aa", "bb", "cc", "dd", "ee"]);
        assert_eq!(pad_truncate(&s5, 5), s5);

        let s9 = seq(&["aa", "bb", "cc", "dd", "ee", "ff", "gg", "hh", "ii"]);
        let t = pad_truncate(&s9, 5);
        assert_eq!(t.tokens[..], s9.tokens[..5]);
        assert_eq!(t.true_length, 5);
    }
}
