//! Ingestion of `.java` trees and the JSON-lines corpus files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use methodctx_core::corpus::{parse_source, ClassRecord, Corpus, MethodRecord, SCHEMA_VERSION};
use methodctx_core::CallGraph;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::CliError;

pub const METHODS_FILE: &str = "methods.jsonl";
pub const CLASSES_FILE: &str = "classes.jsonl";
pub const CALLGRAPH_FILE: &str = "callgraph.json";
pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

/// One JSON-lines record: `{"schema": 1, ...fields}`.
#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    schema: u32,
    #[serde(flatten)]
    record: T,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileError {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub schema: u32,
    pub files: usize,
    pub classes: usize,
    pub methods: usize,
    /// Methods whose name has at least one sub-token.
    pub named_methods: usize,
    pub call_edges: usize,
    pub unresolved_calls: usize,
    /// Files skipped because they failed to parse.
    pub parse_errors: Vec<FileError>,
}

impl Diagnostics {
    pub fn summary(&self) -> String {
        format!(
            "{} files, {} classes, {} methods ({} named), {} call edges, {} unresolved calls, {} parse errors",
            self.files,
            self.classes,
            self.methods,
            self.named_methods,
            self.call_edges,
            self.unresolved_calls,
            self.parse_errors.len()
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallGraphFile {
    pub schema: u32,
    pub callees: BTreeMap<String, Vec<String>>,
    pub unresolved: usize,
}

pub struct Ingested {
    pub corpus: Corpus,
    pub graph: CallGraph,
    pub diagnostics: Diagnostics,
}

/// `.java` files under `root`, as root-relative `/`-separated paths in
/// byte order.
pub fn java_files(root: &Path) -> Result<Vec<(String, PathBuf)>, CliError> {
    if !root.is_dir() {
        return Err(CliError::Usage(format!(
            "{} is not a directory",
            root.display()
        )));
    }
    let mut out = Vec::new();
    for entry in WalkDir::new(root).follow_links(false) {
        let entry = entry.map_err(|e| CliError::io(root, e.into()))?;
        let path = entry.path();
        if entry.file_type().is_file() && path.extension().is_some_and(|e| e == "java") {
            let rel = path.strip_prefix(root).unwrap_or(path);
            let rel: Vec<String> = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect();
            out.push((rel.join("/"), path.to_path_buf()));
        }
    }
    out.sort();
    Ok(out)
}

/// Parses every `.java` file under `root` in path order. Files that fail
/// to parse are skipped and listed in the diagnostics.
pub fn ingest(root: &Path) -> Result<Ingested, CliError> {
    let files = java_files(root)?;
    if files.is_empty() {
        return Err(CliError::Usage(format!(
            "no .java files under {}",
            root.display()
        )));
    }
    let mut parsed = Vec::with_capacity(files.len());
    let mut parse_errors = Vec::new();
    for (rel, path) in &files {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        match parse_source(rel, &text) {
            Ok(p) => parsed.push(p),
            Err(e) => parse_errors.push(FileError {
                file: rel.clone(),
                line: e.line,
                column: e.column,
                message: e.message,
            }),
        }
    }
    let corpus = Corpus::from_files(parsed).map_err(|e| CliError::Runtime(e.to_string()))?;
    let graph = CallGraph::build(&corpus);
    let diagnostics = Diagnostics {
        schema: SCHEMA_VERSION,
        files: files.len(),
        classes: corpus.classes.len(),
        methods: corpus.methods.len(),
        named_methods: corpus
            .methods
            .iter()
            .filter(|m| !m.name_subtokens.is_empty())
            .count(),
        call_edges: graph.edge_count(),
        unresolved_calls: graph.unresolved,
        parse_errors,
    };
    Ok(Ingested {
        corpus,
        graph,
        diagnostics,
    })
}

fn jsonl<T: Serialize + Clone>(records: &[T]) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(
            &mut out,
            &Versioned {
                schema: SCHEMA_VERSION,
                record: r.clone(),
            },
        )?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

pub fn to_json_line<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec(value)?;
    out.push(b'\n');
    Ok(out)
}

/// Writes the four corpus files into `dir`, creating it if needed.
pub fn write_corpus(dir: &Path, ing: &Ingested) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_file(&dir.join(METHODS_FILE), &jsonl(&ing.corpus.methods)?)?;
    write_file(&dir.join(CLASSES_FILE), &jsonl(&ing.corpus.classes)?)?;
    let cg = CallGraphFile {
        schema: SCHEMA_VERSION,
        callees: ing.graph.callee_ids(&ing.corpus),
        unresolved: ing.graph.unresolved,
    };
    write_file(&dir.join(CALLGRAPH_FILE), &to_json_line(&cg)?)?;
    write_file(
        &dir.join(DIAGNOSTICS_FILE),
        &to_json_line(&ing.diagnostics)?,
    )
}

/// Records of a JSON-lines file; blank lines are skipped and every record
/// must carry the current schema version.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: Versioned<T> = serde_json::from_str(line)
            .map_err(|e| CliError::Runtime(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if v.schema != SCHEMA_VERSION {
            return Err(CliError::Runtime(format!(
                "{}:{}: schema {} is not supported (expected {SCHEMA_VERSION})",
                path.display(),
                i + 1,
                v.schema
            )));
        }
        out.push(v.record);
    }
    Ok(out)
}

/// Loads the corpus written by [`write_corpus`].
pub fn read_corpus(dir: &Path) -> Result<Corpus, CliError> {
    let methods: Vec<MethodRecord> = read_jsonl(&dir.join(METHODS_FILE))?;
    let classes: Vec<ClassRecord> = read_jsonl(&dir.join(CLASSES_FILE))?;
    Corpus::from_records(classes, methods).map_err(|e| CliError::Runtime(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(files: &[(&str, &str)]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for (p, text) in files {
            let path = dir.path().join(p);
            fs::create_dir_all(path.parent().unwrap()).unwrap();
            fs::write(path, text).unwrap();
        }
        dir
    }

    #[test]
    fn files_are_sorted_and_filtered() {
        let d = tree(&[
            ("b/B.java", "class B {}"),
            ("a/A.java", "class A {}"),
            ("a/notes.txt", "x"),
        ]);
        let names: Vec<String> = java_files(d.path())
            .unwrap()
            .into_iter()
            .map(|(r, _)| r)
            .collect();
        assert_eq!(names, ["a/A.java", "b/B.java"]);
    }

    #[test]
    fn empty_tree_is_a_usage_error() {
        let d = tree(&[("x.txt", "")]);
        assert!(matches!(ingest(d.path()), Err(CliError::Usage(_))));
    }

    #[test]
    fn broken_file_is_reported_and_skipped() {
        let d = tree(&[
            ("A.java", "class A { int f() { return 1; } }"),
            ("B.java", "class B { int g( }"),
        ]);
        let ing = ingest(d.path()).unwrap();
        assert_eq!(ing.diagnostics.files, 2);
        assert_eq!(ing.diagnostics.methods, 1);
        assert_eq!(ing.diagnostics.parse_errors.len(), 1);
        assert_eq!(ing.diagnostics.parse_errors[0].file, "B.java");
    }

    #[test]
    fn corpus_round_trips() {
        let d = tree(&[(
            "A.java",
            "class A { private int total; int getTotal() { return total; } void reset() { getTotal(); } }",
        )]);
        let ing = ingest(d.path()).unwrap();
        let out = tempfile::tempdir().unwrap();
        write_corpus(out.path(), &ing).unwrap();
        let back = read_corpus(out.path()).unwrap();
        assert_eq!(back.methods, ing.corpus.methods);
        assert_eq!(back.classes, ing.corpus.classes);
        let first = fs::read_to_string(out.path().join(METHODS_FILE)).unwrap();
        assert!(first.starts_with("{\"schema\":1,"));
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("m.jsonl");
        fs::write(
            &p,
            "{\"schema\":2,\"file\":\"a\",\"line\":1,\"column\":1,\"message\":\"m\"}\n",
        )
        .unwrap();
        assert!(read_jsonl::<FileError>(&p).is_err());
    }
}
