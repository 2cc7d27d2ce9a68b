use alloc::string::String;
use alloc::vec::Vec;

use super::ParseError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Keyword(&'static str),
    Literal,
    Punct(&'static str),
}

#[derive(Clone, Debug)]
pub struct Token {
    pub kind: TokenKind,
    pub line: u32,
    pub column: u32,
}

const KEYWORDS: &[&str] = &[
    "abstract",
    "assert",
    "boolean",
    "break",
    "byte",
    "case",
    "catch",
    "char",
    "class",
    "const",
    "continue",
    "default",
    "do",
    "double",
    "else",
    "enum",
    "extends",
    "final",
    "finally",
    "float",
    "for",
    "goto",
    "if",
    "implements",
    "import",
    "instanceof",
    "int",
    "interface",
    "long",
    "native",
    "new",
    "package",
    "private",
    "protected",
    "public",
    "return",
    "short",
    "static",
    "strictfp",
    "super",
    "switch",
    "synchronized",
    "this",
    "throw",
    "throws",
    "transient",
    "try",
    "void",
    "volatile",
    "while",
    "true",
    "false",
    "null",
];

pub const PRIMITIVES: &[&str] = &[
    "boolean", "byte", "char", "short", "int", "long", "float", "double",
];

// Longest first so maximal munch works by linear scan.
const PUNCTS: &[&str] = &[
    ">>>=", "<<=", ">>=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", ">=", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", "(", ")", "{", "}", "[", "]", ";", ",", ".",
    "@", "=", ">", "<", "!", "~", "?", ":", "+", "-", "*", "/", "&", "|", "^", "%",
];

// `>>` and `>>>` are left as repeated `>` so generic argument lists close
// cleanly; expressions only need the identifiers around them.

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self, ahead: usize) -> Option<u8> {
        self.src.get(self.pos + ahead).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek(0)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.column = 1;
        } else if b & 0xC0 != 0x80 {
            // count chars, not UTF-8 continuation bytes
            self.column += 1;
        }
        Some(b)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s.as_bytes())
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::new(self.line, self.column, message)
    }
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b'$' || b >= 0x80
}

fn is_ident_part(b: u8) -> bool {
    is_ident_start(b) || b.is_ascii_digit()
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        src: text.as_bytes(),
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    while let Some(b) = cur.peek(0) {
        if b.is_ascii_whitespace() {
            cur.bump();
            continue;
        }
        if cur.starts_with("//") {
            while cur.peek(0).is_some_and(|c| c != b'\n') {
                cur.bump();
            }
            continue;
        }
        if cur.starts_with("/*") {
            let err = cur.error("unterminated block comment");
            cur.bump();
            cur.bump();
            loop {
                if cur.starts_with("*/") {
                    cur.bump();
                    cur.bump();
                    break;
                }
                if cur.bump().is_none() {
                    return Err(err);
                }
            }
            continue;
        }
        let (line, column) = (cur.line, cur.column);
        let kind = if is_ident_start(b) {
            let start = cur.pos;
            while cur.peek(0).is_some_and(is_ident_part) {
                cur.bump();
            }
            let word = core::str::from_utf8(&cur.src[start..cur.pos])
                .map_err(|_| ParseError::new(line, column, "invalid UTF-8 in identifier"))?;
            match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => TokenKind::Keyword(k),
                None => TokenKind::Ident(String::from(word)),
            }
        } else if b.is_ascii_digit()
            || (b == b'.' && cur.peek(1).is_some_and(|c| c.is_ascii_digit()))
        {
            lex_number(&mut cur);
            TokenKind::Literal
        } else if cur.starts_with("\"\"\"") {
            lex_text_block(&mut cur)?;
            TokenKind::Literal
        } else if b == b'"' || b == b'\'' {
            lex_quoted(&mut cur, b)?;
            TokenKind::Literal
        } else if let Some(p) = PUNCTS.iter().find(|p| cur.starts_with(p)) {
            for _ in 0..p.len() {
                cur.bump();
            }
            TokenKind::Punct(p)
        } else {
            return Err(cur.error("unexpected character"));
        };
        out.push(Token { kind, line, column });
    }
    Ok(out)
}

fn lex_number(cur: &mut Cursor<'_>) {
    // Permissive: digits, letters (hex, suffixes, exponents), underscores,
    // dots and exponent signs.
    let start = cur.pos;
    let hex = cur.src[start..].starts_with(b"0x") || cur.src[start..].starts_with(b"0X");
    while let Some(c) = cur.peek(0) {
        let exp_sign = (c == b'+' || c == b'-')
            && !hex
            && cur.pos > start
            && matches!(cur.src[cur.pos - 1], b'e' | b'E');
        if c == b'.' && cur.peek(1).is_some_and(|d| !d.is_ascii_digit()) {
            break;
        }
        if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || exp_sign {
            cur.bump();
        } else {
            break;
        }
    }
}

fn lex_quoted(cur: &mut Cursor<'_>, quote: u8) -> Result<(), ParseError> {
    let err = cur.error("unterminated literal");
    cur.bump();
    loop {
        match cur.bump() {
            None | Some(b'\n') => return Err(err),
            Some(b'\\') => {
                cur.bump();
            }
            Some(c) if c == quote => return Ok(()),
            Some(_) => {}
        }
    }
}

fn lex_text_block(cur: &mut Cursor<'_>) -> Result<(), ParseError> {
    let err = cur.error("unterminated text block");
    for _ in 0..3 {
        cur.bump();
    }
    loop {
        if cur.starts_with("\"\"\"") {
            for _ in 0..3 {
                cur.bump();
            }
            return Ok(());
        }
        match cur.bump() {
            None => return Err(err),
            Some(b'\\') => {
                cur.bump();
            }
            Some(_) => {}
        }
    }
}
