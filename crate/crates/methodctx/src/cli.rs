//! Argument parsing and dispatch. Exit codes: 0 success, 1 runtime
//! failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use methodctx_core::context::Mode;

use crate::checkpoint::Checkpoints;
use crate::commands::{
    cmd_ablate, cmd_check, cmd_eval, cmd_ingest, cmd_suggest, cmd_train, jsonl, read_predictions,
    AblationFile,
};
use crate::config::{parse_mode, RunConfig};
use crate::corpus_io::{read_corpus, to_json_line, write_file};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "methodctx",
    version,
    about = "Method name consistency checking and name suggestion"
)]
struct Args {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// checking | suggestion; overrides `mode` for train and ablate and the
    /// context mode for check and suggest
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Overrides `suggest.k`
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Output directory (ingest, train) or file (check, suggest, eval, ablate)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a source tree into corpus files
    Ingest { root: Option<PathBuf> },
    /// Train the embedding, the model and the classifier
    Train { corpus: Option<PathBuf> },
    /// Label every named method consistent or inconsistent
    Check {
        corpus: Option<PathBuf>,
        /// Checkpoint directory written by `train`
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Suggest names for every method
    Suggest {
        corpus: Option<PathBuf>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Score suggestions against the corpus names
    Eval {
        predictions: PathBuf,
        corpus: Option<PathBuf>,
    },
    /// Train and score the context and mechanism variants
    Ablate { corpus: Option<PathBuf> },
}

fn pick(
    flag: Option<PathBuf>,
    configured: &Option<PathBuf>,
    what: &str,
) -> Result<PathBuf, CliError> {
    flag.or_else(|| configured.clone()).ok_or_else(|| {
        CliError::Usage(format!(
            "no {what} given on the command line or in the configuration"
        ))
    })
}

fn emit(out: &Option<PathBuf>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(p) => write_file(p, bytes),
        None => stdout
            .write_all(bytes)
            .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

fn execute(args: Args, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.fit.seed = s;
    }
    let mode = args
        .mode
        .as_deref()
        .map(|m| parse_mode("--mode", m))
        .transpose()?;
    if let Some(k) = args.k {
        if k == 0 {
            return Err(CliError::Usage("--k must be at least 1".into()));
        }
        cfg.k = k;
    }
    let say = |stream: &mut dyn Write, msg: String| {
        let _ = writeln!(stream, "{msg}");
    };
    match args.command {
        Command::Ingest { root } => {
            let root = pick(root, &cfg.source_root, "source root")?;
            let out = pick(args.out, &cfg.corpus_dir, "output directory (--out)")?;
            let d = cmd_ingest(&root, &out)?;
            say(stdout, format!("ingested {}", d.summary()));
            for e in &d.parse_errors {
                say(
                    stderr,
                    format!("warning: {}:{}:{}: {}", e.file, e.line, e.column, e.message),
                );
            }
        }
        Command::Train { corpus } => {
            if let Some(m) = mode {
                cfg.fit.mode = m;
            }
            let corpus = pick(corpus, &cfg.corpus_dir, "corpus directory")?;
            let out = pick(args.out, &cfg.model_dir, "output directory (--out)")?;
            let s = cmd_train(&corpus, &cfg, &out)?;
            let loss = s
                .final_loss
                .map_or_else(|| "-".to_string(), |l| format!("{l:.6}"));
            say(
                stdout,
                format!(
                    "trained on {} methods, vocabulary {}, final loss {loss}, classifier {}",
                    s.methods,
                    s.vocabulary,
                    if s.classifier { "yes" } else { "no" }
                ),
            );
        }
        Command::Check { corpus, model } => {
            let corpus = read_corpus(&pick(corpus, &cfg.corpus_dir, "corpus directory")?)?;
            let ck = Checkpoints::load(&pick(
                model,
                &cfg.model_dir,
                "checkpoint directory (--model)",
            )?)?;
            let records = cmd_check(&corpus, &ck, mode.unwrap_or(Mode::Checking))?;
            emit(&args.out, &jsonl(&records)?, stdout)?;
            let flagged = records
                .iter()
                .filter(|r| r.label == methodctx_core::tasks::Label::Inconsistent)
                .count();
            say(
                stderr,
                format!("checked {} methods, {flagged} inconsistent", records.len()),
            );
        }
        Command::Suggest { corpus, model } => {
            let corpus = read_corpus(&pick(corpus, &cfg.corpus_dir, "corpus directory")?)?;
            let ck = Checkpoints::load(&pick(
                model,
                &cfg.model_dir,
                "checkpoint directory (--model)",
            )?)?;
            let records = cmd_suggest(&corpus, &ck, mode.unwrap_or(Mode::Suggestion), cfg.k);
            emit(&args.out, &jsonl(&records)?, stdout)?;
            say(
                stderr,
                format!("suggested names for {} methods", records.len()),
            );
        }
        Command::Eval {
            predictions,
            corpus,
        } => {
            let corpus = read_corpus(&pick(corpus, &cfg.corpus_dir, "corpus directory")?)?;
            let report = cmd_eval(&read_predictions(&predictions)?, &corpus)?;
            if let Some(p) = &args.out {
                write_file(p, &to_json_line(&report)?)?;
            }
            say(stdout, report.to_text().trim_end().to_string());
        }
        Command::Ablate { corpus } => {
            if let Some(m) = mode {
                cfg.fit.mode = m;
            }
            let corpus = read_corpus(&pick(corpus, &cfg.corpus_dir, "corpus directory")?)?;
            let report = cmd_ablate(&corpus, &cfg)?;
            if let Some(p) = &args.out {
                let file = AblationFile {
                    schema: methodctx_core::corpus::SCHEMA_VERSION,
                    report: report.clone(),
                };
                write_file(p, &to_json_line(&file)?)?;
            }
            say(stdout, report.to_text().trim_end().to_string());
        }
    }
    Ok(())
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                2
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match execute(args, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
