//! A name-oriented parser for a subset of Java.
//!
//! Declarations (classes, interfaces, enums, fields, methods) are parsed
//! structurally. Method bodies, field initializers and initializer blocks are
//! reduced to identifier streams plus call sites; nothing else about
//! statements or expressions is retained.

mod lexer;
mod parser;

use alloc::string::String;
use core::fmt;

pub use lexer::{tokenize, Token, TokenKind};
pub(crate) use parser::parse_file;

/// Unsupported or malformed syntax, with a 1-based source position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub message: String,
}

impl ParseError {
    pub fn new(line: u32, column: u32, message: &str) -> Self {
        ParseError {
            line,
            column,
            message: String::from(message),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl core::error::Error for ParseError {}
