//! Seeded generator for a small Java corpus with delegation methods.
//!
//! Every class holds ordinary methods whose name sub-tokens occur in their
//! own bodies, and delegation methods `Object verbNounNoun()` whose body is
//! a single call to a private helper. Helper names split into no
//! sub-tokens, so a delegation method's internal context is just
//! `[object]` and its name is recoverable only from the helper's body.
//! Helpers themselves have empty names and are never training targets.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{parse_source, Corpus, CorpusError};
use crate::java::ParseError;

const VERBS: [&str; 12] = [
    "get", "set", "compute", "load", "save", "find", "create", "update", "read", "write", "build",
    "reset",
];
const NOUNS: [&str; 32] = [
    "size", "width", "height", "name", "label", "color", "stream", "grouping", "layout", "buffer",
    "record", "index", "cache", "value", "total", "price", "order", "user", "file", "path",
    "token", "count", "limit", "score", "margin", "border", "title", "header", "message",
    "session", "query", "result",
];
const FILLERS: [&str; 4] = ["Impl", "Internal", "Now", "Direct"];
const TYPES: [&str; 4] = ["int", "long", "double", "String"];
const CLASS_WORDS: [&str; 12] = [
    "Ledger", "Panel", "Registry", "Gateway", "Builder", "Tracker", "Monitor", "Catalog",
    "Adapter", "Router", "Pool", "Keeper",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub plain_per_class: usize,
    pub delegating_per_class: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    /// 10 classes of 6 plain and 4 delegation methods: 100 named methods.
    fn default() -> Self {
        SyntheticConfig {
            classes: 10,
            plain_per_class: 6,
            delegating_per_class: 4,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceFile {
    pub path: String,
    pub text: String,
}

fn cap(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => format!("{}{}", f.to_ascii_uppercase(), c.as_str()),
        None => String::new(),
    }
}

/// `aB`, `aC`, …, `bA`, …: names whose pieces are all one letter.
fn helper_name(k: usize) -> String {
    let first = (b'a' + (k / 25) as u8) as char;
    let mut second = (b'A' + (k % 25) as u8) as char;
    if second.to_ascii_lowercase() == first {
        second = 'Z';
    }
    format!("{first}{second}")
}

/// One Java file per class, in path order.
pub fn generate(cfg: &SyntheticConfig) -> Vec<SourceFile> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut used: Vec<String> = Vec::new();
    let mut fresh_name = |rng: &mut ChaCha8Rng, nouns: usize| -> Vec<&'static str> {
        loop {
            let mut parts = alloc::vec![*VERBS.choose(rng).expect("non-empty")];
            let mut pool = NOUNS;
            let (picked, _) = pool.partial_shuffle(rng, nouns);
            parts.extend_from_slice(picked);
            let key = parts.join("-");
            if !used.contains(&key) {
                used.push(key);
                return parts;
            }
        }
    };
    let mut helpers = 0usize;
    let mut files = Vec::with_capacity(cfg.classes);
    for c in 0..cfg.classes {
        let noun = cap(NOUNS[c % NOUNS.len()]);
        let mut class = format!("{noun}{}", CLASS_WORDS[c % CLASS_WORDS.len()]);
        if c >= CLASS_WORDS.len() {
            class.push_str(&format!("{c}"));
        }
        let mut body = String::new();
        let fa = NOUNS[(c * 7 + 3) % NOUNS.len()];
        let fb = NOUNS[(c * 11 + 5) % NOUNS.len()];
        body.push_str(&format!(
            "    private int {fa}State;\n    private String {fb}Text;\n"
        ));

        let mut methods: Vec<String> = Vec::new();
        for _ in 0..cfg.plain_per_class {
            let nouns = rng.gen_range(1..=2);
            let parts = fresh_name(&mut rng, nouns);
            let ty = TYPES[rng.gen_range(0..TYPES.len())];
            let param = NOUNS[rng.gen_range(0..NOUNS.len())];
            let name = format!(
                "{}{}",
                parts[0],
                parts[1..].iter().map(|p| cap(p)).collect::<String>()
            );
            let local = format!(
                "{}{}",
                parts[1],
                parts[2..].iter().map(|p| cap(p)).collect::<String>()
            );
            methods.push(format!(
                "    public {ty} {name}({ty} {param}) {{\n        {ty} {local} = {param} + {verb}Offset;\n        return {local};\n    }}\n",
                verb = parts[0],
            ));
        }
        for _ in 0..cfg.delegating_per_class {
            let parts = fresh_name(&mut rng, 2);
            let name = format!("{}{}{}", parts[0], cap(parts[1]), cap(parts[2]));
            let helper = helper_name(helpers);
            helpers += 1;
            let local = format!("{}{}", parts[1], cap(parts[2]));
            let filler = FILLERS[rng.gen_range(0..FILLERS.len())];
            methods.push(format!(
                "    public Object {name}() {{\n        return {helper}(false);\n    }}\n"
            ));
            methods.push(format!(
                "    private Object {helper}(boolean flag) {{\n        Object {local} = {verb}{filler}(flag);\n        return {local};\n    }}\n",
                verb = parts[0],
            ));
        }
        for m in methods {
            body.push('\n');
            body.push_str(&m);
        }
        files.push(SourceFile {
            path: format!("src/{class}.java"),
            text: format!("public class {class} {{\n{body}}}\n"),
        });
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    files
}

#[derive(Debug, thiserror::Error)]
pub enum SyntheticError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Generated sources parsed into a corpus.
pub fn corpus(cfg: &SyntheticConfig) -> Result<Corpus, SyntheticError> {
    let mut parsed = Vec::new();
    for f in generate(cfg) {
        parsed.push(parse_source(&f.path, &f.text)?);
    }
    Ok(Corpus::from_files(parsed)?)
}
