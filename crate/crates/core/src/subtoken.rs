//! Identifier splitting into lowercase sub-tokens.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

/// Hungarian-notation prefixes that are stripped when directly followed by
/// an uppercase letter. Longest first so `str` wins over `s`.
pub const HUNGARIAN_PREFIXES: [&str; 10] = ["str", "m", "s", "g", "p", "b", "n", "f", "i", "c"];

/// A lowercase identifier fragment of at least two ASCII letters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SubToken(String);

impl SubToken {
    /// Builds a sub-token, returning `None` unless `text` is at least two
    /// characters over `[a-z0-9]`.
    pub fn new(text: &str) -> Option<Self> {
        let valid = text.len() >= 2
            && text
                .bytes()
                .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit());
        valid.then(|| SubToken(String::from(text)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SubToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for SubToken {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SubToken {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        SubToken::new(&value).ok_or(value)
    }
}

impl From<SubToken> for String {
    fn from(value: SubToken) -> Self {
        value.0
    }
}

fn strip_hungarian(ident: &str) -> &str {
    for prefix in HUNGARIAN_PREFIXES {
        if let Some(rest) = ident.strip_prefix(prefix) {
            if rest.as_bytes().first().is_some_and(u8::is_ascii_uppercase) {
                return rest;
            }
        }
    }
    ident
}

/// Splits an identifier on camel-case boundaries, underscores, digits and
/// any other non-letter character, after stripping a Hungarian prefix.
/// Pieces are lowercased and single-character pieces are dropped.
pub fn split_identifier(ident: &str) -> Vec<SubToken> {
    let ident = strip_hungarian(ident);
    let mut out = Vec::new();
    for segment in ident.split(|c: char| !c.is_ascii_alphabetic()) {
        split_camel(segment.as_bytes(), &mut out);
    }
    out
}

fn split_camel(seg: &[u8], out: &mut Vec<SubToken>) {
    let mut start = 0;
    for i in 1..seg.len() {
        let prev = seg[i - 1];
        let cur = seg[i];
        let lower_to_upper = prev.is_ascii_lowercase() && cur.is_ascii_uppercase();
        // "HTTPResponse": the last capital of a run opens the next word.
        let acronym_end = prev.is_ascii_uppercase()
            && cur.is_ascii_uppercase()
            && seg.get(i + 1).is_some_and(u8::is_ascii_lowercase);
        if lower_to_upper || acronym_end {
            push_piece(&seg[start..i], out);
            start = i;
        }
    }
    push_piece(&seg[start..], out);
}

fn push_piece(piece: &[u8], out: &mut Vec<SubToken>) {
    if piece.len() < 2 {
        return;
    }
    let lower: String = piece
        .iter()
        .map(|b| b.to_ascii_lowercase() as char)
        .collect();
    out.push(SubToken(lower));
}

/// Joins sub-tokens into a camelCase identifier.
pub fn recompose<S: AsRef<str>>(subtokens: &[S]) -> String {
    let mut out = String::new();
    for (i, tok) in subtokens.iter().enumerate() {
        let tok = tok.as_ref();
        if i == 0 {
            out.push_str(tok);
        } else {
            let mut chars = tok.chars();
            if let Some(first) = chars.next() {
                out.push(first.to_ascii_uppercase());
                out.extend(chars);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn split(s: &str) -> Vec<String> {
        split_identifier(s).into_iter().map(String::from).collect()
    }

    #[test]
    fn curated_identifiers() {
        let table: [(&str, &[&str]); 30] = [
            ("calculateFlowLayout", &["calculate", "flow", "layout"]),
            ("m", &[]),
            ("parseHTTP_Response2", &["parse", "http", "response"]),
            ("getPreferredSize", &["get", "preferred", "size"]),
            ("HTTPResponse", &["http", "response"]),
            ("JViewport", &["viewport"]),
            ("mCount", &["count"]),
            ("strName", &["name"]),
            ("bDoChilds", &["do", "childs"]),
            ("sInstance", &["instance"]),
            ("gConfig", &["config"]),
            ("pNext", &["next"]),
            ("nItems", &["items"]),
            ("fScale", &["scale"]),
            ("iIndex", &["index"]),
            ("cChar", &["char"]),
            ("stream", &["stream"]),
            ("string", &["string"]),
            ("MAX_VALUE", &["max", "value"]),
            ("snake_case_name", &["snake", "case", "name"]),
            ("getX", &["get"]),
            ("x", &[]),
            ("toUTF8String", &["to", "utf", "string"]),
            ("base64Encode", &["base", "encode"]),
            ("__init__", &["init"]),
            ("$jacocoData", &["jacoco", "data"]),
            ("IOException", &["io", "exception"]),
            ("processFinallyStmt", &["process", "finally", "stmt"]),
            ("aB", &[]),
            ("isHTMLTagOK", &["is", "html", "tag", "ok"]),
        ];
        for (ident, expected) in table {
            assert_eq!(split(ident), expected, "identifier {ident}");
        }
    }

    #[test]
    fn hungarian_requires_uppercase_follower() {
        assert_eq!(split("strength"), vec!["strength"]);
        assert_eq!(split("member"), vec!["member"]);
        assert_eq!(split("sValue"), vec!["value"]);
    }

    #[test]
    fn recompose_examples() {
        assert_eq!(recompose(&["get", "preferred", "size"]), "getPreferredSize");
        assert_eq!(recompose(&["run"]), "run");
        assert_eq!(
            recompose(&["process", "finally", "stmt"]),
            "processFinallyStmt"
        );
    }

    #[test]
    fn subtoken_validation() {
        assert!(SubToken::new("ab").is_some());
        assert!(SubToken::new("a").is_none());
        assert!(SubToken::new("Ab").is_none());
        assert!(SubToken::new("a_b").is_none());
    }
}
