use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::lexer::{tokenize, Token, TokenKind, PRIMITIVES};
use super::ParseError;
use crate::corpus::{CallSite, ClassRecord, MethodRecord, Param, ParsedFile};
use crate::subtoken::split_identifier;

const MODIFIERS: &[&str] = &[
    "public",
    "protected",
    "private",
    "static",
    "final",
    "abstract",
    "synchronized",
    "native",
    "transient",
    "volatile",
    "strictfp",
    "default",
];

pub(crate) fn parse_file(file: &str, text: &str) -> Result<ParsedFile, ParseError> {
    let toks = tokenize(text)?;
    let eof = toks.last().map_or((1, 1), |t| (t.line, t.column + 1));
    let mut p = Parser {
        toks: &toks,
        pos: 0,
        file,
        eof,
        out: ParsedFile::default(),
        ids: BTreeMap::new(),
    };
    p.compilation_unit()?;
    Ok(p.out)
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    file: &'a str,
    eof: (u32, u32),
    out: ParsedFile,
    /// Per-class id collision counters for same-arity overloads.
    ids: BTreeMap<String, u32>,
}

/// What a method body or initializer reduces to.
#[derive(Default)]
struct Reduced {
    idents: Vec<String>,
    calls: Vec<CallSite>,
}

impl<'a> Parser<'a> {
    fn kind_at(&self, i: usize) -> Option<&'a TokenKind> {
        self.toks.get(i).map(|t| &t.kind)
    }

    fn peek(&self) -> Option<&'a TokenKind> {
        self.kind_at(self.pos)
    }

    fn peek_at(&self, ahead: usize) -> Option<&'a TokenKind> {
        self.kind_at(self.pos + ahead)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Punct(q)) if *q == p)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Keyword(q)) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        let hit = self.is_punct(p);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn error(&self, message: &str) -> ParseError {
        let (line, column) = self
            .toks
            .get(self.pos)
            .map_or(self.eof, |t| (t.line, t.column));
        ParseError::new(line, column, message)
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), ParseError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{p}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(TokenKind::Ident(s)) => {
                self.pos += 1;
                Ok(s.clone())
            }
            _ => Err(self.error("expected identifier")),
        }
    }

    fn line(&self) -> u32 {
        self.toks.get(self.pos).map_or(self.eof.0, |t| t.line)
    }

    fn prev_line(&self) -> u32 {
        self.toks[self.pos - 1].line
    }

    /// Index of the token closing the bracket opened at `open`.
    fn matching(&self, open: usize) -> Result<usize, ParseError> {
        let (o, c) = match self.kind_at(open) {
            Some(TokenKind::Punct("(")) => ("(", ")"),
            Some(TokenKind::Punct("{")) => ("{", "}"),
            Some(TokenKind::Punct("[")) => ("[", "]"),
            _ => return Err(self.error("expected opening bracket")),
        };
        let mut depth = 0usize;
        for i in open..self.toks.len() {
            match &self.toks[i].kind {
                TokenKind::Punct(p) if *p == o => depth += 1,
                TokenKind::Punct(p) if *p == c => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(i);
                    }
                }
                _ => {}
            }
        }
        let t = &self.toks[open];
        Err(ParseError::new(
            t.line,
            t.column,
            &format!("unbalanced `{o}`"),
        ))
    }

    fn skip_balanced(&mut self) -> Result<(), ParseError> {
        self.pos = self.matching(self.pos)? + 1;
        Ok(())
    }

    fn skip_angles(&mut self) -> Result<(), ParseError> {
        let mut depth = 0usize;
        while let Some(k) = self.peek() {
            match k {
                TokenKind::Punct("<") => depth += 1,
                TokenKind::Punct(">") => {
                    depth -= 1;
                    if depth == 0 {
                        self.pos += 1;
                        return Ok(());
                    }
                }
                TokenKind::Punct(";" | "{" | "}") => break,
                _ => {}
            }
            self.pos += 1;
        }
        Err(self.error("unbalanced type arguments"))
    }

    fn skip_to_semicolon(&mut self) -> Result<(), ParseError> {
        while let Some(k) = self.peek() {
            self.pos += 1;
            if *k == TokenKind::Punct(";") {
                return Ok(());
            }
        }
        Err(self.error("expected `;`"))
    }

    fn skip_annotation(&mut self) -> Result<(), ParseError> {
        self.pos += 1; // '@'
        self.expect_ident()?;
        while self.is_punct(".") && matches!(self.peek_at(1), Some(TokenKind::Ident(_))) {
            self.pos += 2;
        }
        if self.is_punct("(") {
            self.skip_balanced()?;
        }
        Ok(())
    }

    fn modifiers(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                Some(TokenKind::Keyword(k)) if MODIFIERS.contains(k) => self.pos += 1,
                Some(TokenKind::Punct("@"))
                    if !matches!(self.peek_at(1), Some(TokenKind::Keyword("interface"))) =>
                {
                    self.skip_annotation()?
                }
                Some(TokenKind::Ident(s))
                    if s == "sealed" && matches!(self.peek_at(1), Some(TokenKind::Keyword(_))) =>
                {
                    self.pos += 1
                }
                Some(TokenKind::Ident(s))
                    if s == "non"
                        && self.peek_at(1) == Some(&TokenKind::Punct("-"))
                        && matches!(self.peek_at(2), Some(TokenKind::Ident(t)) if t == "sealed") =>
                {
                    self.pos += 3
                }
                _ => return Ok(()),
            }
        }
    }

    fn compilation_unit(&mut self) -> Result<(), ParseError> {
        if self.is_kw("package") {
            self.skip_to_semicolon()?;
        }
        while self.is_kw("import") {
            self.skip_to_semicolon()?;
        }
        while self.peek().is_some() {
            if self.eat_punct(";") {
                continue;
            }
            self.modifiers()?;
            self.type_decl(None)?;
        }
        Ok(())
    }

    fn starts_type_decl(&self) -> bool {
        matches!(
            self.peek(),
            Some(TokenKind::Keyword("class" | "interface" | "enum"))
        ) || (self.is_punct("@")
            && matches!(self.peek_at(1), Some(TokenKind::Keyword("interface"))))
    }

    /// Parses a type declaration at the cursor and returns its simple name.
    fn type_decl(&mut self, outer: Option<&str>) -> Result<String, ParseError> {
        if let Some(TokenKind::Ident(s)) = self.peek() {
            if s == "record" {
                return Err(self.error("record declarations are not supported"));
            }
        }
        if !self.starts_type_decl() {
            return Err(self.error("expected class, interface or enum declaration"));
        }
        let annotation_type = self.is_punct("@");
        if annotation_type {
            self.pos += 1;
        }
        let is_enum = self.is_kw("enum");
        self.pos += 1;
        let name = self.expect_ident()?;
        let path = match outer {
            Some(o) => format!("{o}.{name}"),
            None => name.clone(),
        };
        let class_idx = self.out.classes.len();
        self.out.classes.push(ClassRecord {
            id: format!("{}#{}", self.file, path),
            name: name.clone(),
            field_names: Vec::new(),
            method_ids: Vec::new(),
            entity_names: Vec::new(),
        });
        // Header: type parameters, extends/implements/permits lists.
        while !self.is_punct("{") {
            match self.peek() {
                None | Some(TokenKind::Punct(";" | "}")) => {
                    return Err(self.error("expected `{` to open type body"))
                }
                Some(TokenKind::Punct("<")) => self.skip_angles()?,
                Some(TokenKind::Punct("(")) => self.skip_balanced()?,
                _ => self.pos += 1,
            }
        }
        if annotation_type {
            self.skip_balanced()?;
            return Ok(name);
        }
        self.pos += 1;
        if is_enum {
            self.enum_constants(class_idx)?;
        }
        self.class_body(class_idx, &path, &name)?;
        Ok(name)
    }

    fn enum_constants(&mut self, class_idx: usize) -> Result<(), ParseError> {
        loop {
            while self.is_punct("@") {
                self.skip_annotation()?;
            }
            if self.eat_punct(";") || self.is_punct("}") {
                return Ok(());
            }
            let constant = self.expect_ident()?;
            self.out.classes[class_idx].entity_names.push(constant);
            if self.is_punct("(") {
                let close = self.matching(self.pos)?;
                let r = self.reduce(self.pos + 1, close);
                self.out.classes[class_idx].entity_names.extend(r.idents);
                self.pos = close + 1;
            }
            if self.is_punct("{") {
                self.skip_balanced()?;
            }
            if !self.eat_punct(",") && !self.is_punct(";") && !self.is_punct("}") {
                return Err(self.error("expected `,`, `;` or `}` after enum constant"));
            }
        }
    }

    fn class_body(
        &mut self,
        class_idx: usize,
        path: &str,
        class_name: &str,
    ) -> Result<(), ParseError> {
        loop {
            if self.eat_punct("}") {
                return Ok(());
            }
            if self.peek().is_none() {
                return Err(self.error("unexpected end of file in class body"));
            }
            if self.eat_punct(";") {
                continue;
            }
            let start_line = self.line();
            self.modifiers()?;
            if self.is_punct("{") {
                let close = self.matching(self.pos)?;
                let r = self.reduce(self.pos + 1, close);
                self.out.classes[class_idx].entity_names.extend(r.idents);
                self.pos = close + 1;
                continue;
            }
            if self.starts_type_decl()
                || matches!(self.peek(), Some(TokenKind::Ident(s)) if s == "record")
            {
                let nested = self.type_decl(Some(path))?;
                self.out.classes[class_idx].entity_names.push(nested);
                continue;
            }
            if self.is_punct("<") {
                self.skip_angles()?;
            }
            let is_ctor = matches!(self.peek(), Some(TokenKind::Ident(s)) if s == class_name)
                && self.peek_at(1) == Some(&TokenKind::Punct("("));
            if is_ctor {
                // Constructors are not naming targets.
                self.pos += 1;
                self.skip_balanced()?;
                while !self.is_punct("{") {
                    if self.peek().is_none() || self.is_punct(";") {
                        return Err(self.error("expected constructor body"));
                    }
                    self.pos += 1;
                }
                self.skip_balanced()?;
                continue;
            }
            let ty = self.parse_type()?;
            let name = self.expect_ident()?;
            if self.is_punct("(") {
                self.method(class_idx, start_line, ty, name)?;
            } else {
                self.fields(class_idx, name)?;
            }
        }
    }

    /// Parses a type and returns its base identifier, flattening qualifiers,
    /// generic arguments and array dimensions.
    fn parse_type(&mut self) -> Result<String, ParseError> {
        while self.is_punct("@") {
            self.skip_annotation()?;
        }
        let mut base = match self.peek() {
            Some(TokenKind::Keyword(k)) if *k == "void" || PRIMITIVES.contains(k) => {
                self.pos += 1;
                (*k).to_string()
            }
            Some(TokenKind::Ident(s)) => {
                self.pos += 1;
                s.clone()
            }
            _ => return Err(self.error("expected type")),
        };
        loop {
            if self.is_punct("<") {
                self.skip_angles()?;
            }
            if self.is_punct(".") {
                if let Some(TokenKind::Ident(s)) = self.peek_at(1) {
                    base = s.clone();
                    self.pos += 2;
                    continue;
                }
            }
            break;
        }
        self.skip_dims();
        Ok(base)
    }

    fn skip_dims(&mut self) {
        while self.is_punct("[") && self.peek_at(1) == Some(&TokenKind::Punct("]")) {
            self.pos += 2;
        }
    }

    fn method(
        &mut self,
        class_idx: usize,
        start_line: u32,
        ret: String,
        name: String,
    ) -> Result<(), ParseError> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.eat_punct(")") {
            loop {
                self.modifiers()?;
                let ty = self.parse_type()?;
                self.eat_punct("...");
                let pname = match self.peek() {
                    Some(TokenKind::Keyword("this")) => {
                        self.pos += 1;
                        String::from("this")
                    }
                    _ => self.expect_ident()?,
                };
                self.skip_dims();
                if pname != "this" {
                    params.push(Param { ty, name: pname });
                }
                if self.eat_punct(",") {
                    continue;
                }
                self.expect_punct(")")?;
                break;
            }
        }
        self.skip_dims();
        if self.is_kw("throws") {
            self.pos += 1;
            loop {
                self.parse_type()?;
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        if self.is_kw("default") {
            // annotation element default value
            self.skip_to_semicolon()?;
            return self.push_method(class_idx, start_line, ret, name, params, Reduced::default());
        }
        let body = if self.eat_punct(";") {
            Reduced::default()
        } else if self.is_punct("{") {
            let close = self.matching(self.pos)?;
            let r = self.reduce(self.pos + 1, close);
            self.pos = close + 1;
            r
        } else {
            return Err(self.error("expected method body or `;`"));
        };
        self.push_method(class_idx, start_line, ret, name, params, body)
    }

    fn push_method(
        &mut self,
        class_idx: usize,
        start_line: u32,
        ret: String,
        name: String,
        params: Vec<Param>,
        body: Reduced,
    ) -> Result<(), ParseError> {
        let end_line = self.prev_line();
        let class = &mut self.out.classes[class_idx];
        let base = format!("{}.{}/{}", class.id, name, params.len());
        let n = self.ids.entry(base.clone()).or_insert(0);
        *n += 1;
        let id = if *n == 1 { base } else { format!("{base}~{n}") };
        class.method_ids.push(id.clone());
        self.out.methods.push(MethodRecord {
            id,
            name_subtokens: split_identifier(&name),
            name,
            return_type: ret,
            params,
            body_tokens: body.idents,
            class_id: class.id.clone(),
            callee_sites: body.calls,
            line_count: end_line.saturating_sub(start_line) + 1,
        });
        Ok(())
    }

    fn fields(&mut self, class_idx: usize, first: String) -> Result<(), ParseError> {
        let mut name = first;
        loop {
            self.skip_dims();
            {
                let class = &mut self.out.classes[class_idx];
                class.field_names.push(name.clone());
                class.entity_names.push(name);
            }
            if self.eat_punct("=") {
                let end = self.expression_end()?;
                let r = self.reduce(self.pos, end);
                self.out.classes[class_idx].entity_names.extend(r.idents);
                self.pos = end;
            }
            if self.eat_punct(",") {
                name = self.expect_ident()?;
                continue;
            }
            return self.expect_punct(";");
        }
    }

    /// Position of the `,` or `;` ending the expression at the cursor.
    fn expression_end(&self) -> Result<usize, ParseError> {
        let mut depth = 0usize;
        for i in self.pos..self.toks.len() {
            match &self.toks[i].kind {
                TokenKind::Punct("(" | "[" | "{") => depth += 1,
                TokenKind::Punct(")" | "]" | "}") => {
                    if depth == 0 {
                        break;
                    }
                    depth -= 1;
                }
                TokenKind::Punct("," | ";") if depth == 0 => return Ok(i),
                _ => {}
            }
        }
        Err(self.error("unterminated initializer"))
    }

    /// Reduces tokens `[from, to)` to identifiers and call sites.
    fn reduce(&self, from: usize, to: usize) -> Reduced {
        let mut r = Reduced::default();
        let mut after_new = false;
        let mut i = from;
        while i < to {
            match &self.toks[i].kind {
                TokenKind::Punct("@") => {
                    // annotation inside a body: skip its name and arguments
                    i += 1;
                    while i < to {
                        match self.kind_at(i) {
                            Some(TokenKind::Ident(_) | TokenKind::Punct(".")) => i += 1,
                            _ => break,
                        }
                    }
                    if self.kind_at(i) == Some(&TokenKind::Punct("(")) {
                        i = self.matching(i).map_or(to, |c| c + 1);
                    }
                    continue;
                }
                TokenKind::Keyword("new") => after_new = true,
                TokenKind::Keyword(k) if PRIMITIVES.contains(k) => r.idents.push((*k).to_string()),
                TokenKind::Ident(name) => {
                    let next = self.kind_at(i + 1);
                    let local_var = name == "var" && matches!(next, Some(TokenKind::Ident(_)));
                    if !local_var {
                        r.idents.push(name.clone());
                    }
                    match next {
                        Some(TokenKind::Punct("(")) if !after_new => {
                            if let Ok(close) = self.matching(i + 1) {
                                let declaration = matches!(
                                    self.kind_at(close + 1),
                                    Some(TokenKind::Punct("{") | TokenKind::Keyword("throws"))
                                );
                                if !declaration {
                                    r.calls.push(CallSite {
                                        name: name.clone(),
                                        args: self.count_args(i + 1, close),
                                    });
                                }
                            }
                            after_new = false;
                        }
                        Some(TokenKind::Punct(".")) | Some(TokenKind::Punct("<")) => {}
                        _ => after_new = false,
                    }
                }
                _ => {}
            }
            i += 1;
        }
        r
    }

    fn count_args(&self, open: usize, close: usize) -> usize {
        if close == open + 1 {
            return 0;
        }
        let mut depth = 0usize;
        let mut commas = 0;
        for t in &self.toks[open + 1..close] {
            match t.kind {
                TokenKind::Punct("(" | "[" | "{") => depth += 1,
                TokenKind::Punct(")" | "]" | "}") => depth = depth.saturating_sub(1),
                TokenKind::Punct(",") if depth == 0 => commas += 1,
                _ => {}
            }
        }
        commas + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(src: &str) -> ParsedFile {
        parse_file("T.java", src).unwrap()
    }

    #[test]
    fn empty_class() {
        let f = parse("class A {}");
        assert_eq!(f.classes.len(), 1);
        assert!(f.methods.is_empty());
        assert_eq!(f.classes[0].id, "T.java#A");
    }

    #[test]
    fn overloads_get_distinct_ids() {
        let f = parse("class A { int f(int a) { return a; } int f(int a, int b) { return a; } }");
        assert_eq!(f.methods.len(), 2);
        assert_ne!(f.methods[0].id, f.methods[1].id);
        assert_eq!(f.methods[0].id, "T.java#A.f/1");
        assert_eq!(f.methods[1].id, "T.java#A.f/2");
    }

    #[test]
    fn same_arity_overloads_are_disambiguated() {
        let f = parse("class A { void f(int a) {} void f(String s) {} }");
        assert_eq!(f.methods[0].id, "T.java#A.f/1");
        assert_eq!(f.methods[1].id, "T.java#A.f/1~2");
    }

    #[test]
    fn call_sites_and_arity() {
        let f = parse(
            "class A { void g() { foo(); bar(1, baz(2, 3), new X(4)); a.b.c(x -> { y(); }, z); } }",
        );
        let calls: Vec<(&str, usize)> = f.methods[0]
            .callee_sites
            .iter()
            .map(|c| (c.name.as_str(), c.args))
            .collect();
        assert_eq!(
            calls,
            [("foo", 0), ("bar", 3), ("baz", 2), ("c", 2), ("y", 0)]
        );
    }

    #[test]
    fn anonymous_class_methods_are_not_calls() {
        let f =
            parse("class A { void g() { run(new Runnable() { public void run() { go(); } }); } }");
        let calls: Vec<&str> = f.methods[0]
            .callee_sites
            .iter()
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(calls, ["run", "go"]);
        assert_eq!(f.methods[0].body_tokens, ["run", "Runnable", "run", "go"]);
    }

    #[test]
    fn generics_flatten_to_base() {
        let f = parse(
            "import java.util.*; class A<T> { private java.util.Map<String, List<T>> index = new HashMap<>();\n public <K extends Comparable<K>> List<K> sorted(Map.Entry<K, T>[] items, int... rest) throws java.io.IOException { return null; } }",
        );
        let m = &f.methods[0];
        assert_eq!(m.return_type, "List");
        assert_eq!(
            m.params[0],
            Param {
                ty: "Entry".into(),
                name: "items".into()
            }
        );
        assert_eq!(
            m.params[1],
            Param {
                ty: "int".into(),
                name: "rest".into()
            }
        );
        assert_eq!(f.classes[0].field_names, ["index"]);
        assert_eq!(f.classes[0].entity_names, ["index", "HashMap"]);
    }

    #[test]
    fn nested_and_enum() {
        let f = parse(
            "package p; public class Outer { static final int MAX = LIMIT; enum Kind { ALPHA, BETA(Gamma.X) { }; int code() { return 1; } } interface Cb { void fire(Event e); } }",
        );
        let ids: Vec<&str> = f.classes.iter().map(|c| c.id.as_str()).collect();
        assert_eq!(
            ids,
            ["T.java#Outer", "T.java#Outer.Kind", "T.java#Outer.Cb"]
        );
        assert_eq!(f.classes[0].entity_names, ["MAX", "LIMIT", "Kind", "Cb"]);
        assert_eq!(f.classes[1].entity_names, ["ALPHA", "BETA", "Gamma", "X"]);
        assert_eq!(f.methods.len(), 2);
        assert_eq!(f.methods[1].name, "fire");
        assert!(f.methods[1].body_tokens.is_empty());
    }

    #[test]
    fn annotations_and_constructors_skipped() {
        let f = parse(
            "@Entity(name = \"x\") class A { @Inject A(B b) { this.b = b; } @Override public String toString() { @SuppressWarnings(\"u\") int n = size(); return name; } }",
        );
        assert_eq!(f.methods.len(), 1);
        assert_eq!(f.methods[0].body_tokens, ["int", "n", "size", "name"]);
    }

    #[test]
    fn line_count_spans_declaration() {
        let f = parse("class A {\n  int f() {\n    return 1;\n  }\n  void g() {}\n}");
        assert_eq!(f.methods[0].line_count, 3);
        assert_eq!(f.methods[1].line_count, 1);
    }

    #[test]
    fn errors_carry_position() {
        let err = parse_file("T.java", "class A {\n  int f( {\n}").unwrap_err();
        assert_eq!(err.line, 2);
        let err = parse_file("T.java", "record P(int x) {}").unwrap_err();
        assert!(err.message.contains("record"));
        assert!(parse_file("T.java", "class A { void f() {").is_err());
    }

    #[test]
    fn deterministic() {
        let src = "class A { int f(int a) { return g(a); } int g(int b) { return b; } }";
        assert_eq!(parse(src), parse(src));
    }
}
