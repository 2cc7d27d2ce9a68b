use std::fs;
use std::path::{Path, PathBuf};

use methodctx::commands::render_contexts;
use methodctx::corpus_io::ingest;
use methodctx_core::context::{build_bundle, Mode};
use methodctx_core::embedding::GloveConfig;
use methodctx_core::model::{ModelConfig, TrainConfig};
use methodctx_core::synthetic::{self, SyntheticConfig};
use methodctx_core::tasks::{check_consistency, fit, CnnTrainConfig, FitConfig};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn rendered(name: &str) -> String {
    let ing = ingest(&fixture(name).join("src")).unwrap();
    let mut text = render_contexts(&ing.corpus, Mode::Checking);
    text.push_str(&render_contexts(&ing.corpus, Mode::Suggestion));
    text
}

#[test]
fn fig1_contexts_match_golden_bytes() {
    assert_eq!(
        rendered("fig1").as_bytes(),
        fs::read(fixture("fig1/contexts.txt")).unwrap()
    );
}

#[test]
fn fig2_contexts_match_golden_bytes() {
    assert_eq!(
        rendered("fig2").as_bytes(),
        fs::read(fixture("fig2/contexts.txt")).unwrap()
    );
}

fn line<'a>(text: &'a str, method: &str, mode: &str, kind: &str) -> &'a str {
    let block = text
        .split("# ")
        .find(|b| b.starts_with(&format!("{method} ({mode})")))
        .unwrap_or_else(|| panic!("{method} ({mode}) missing"));
    block
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{kind}:")))
        .unwrap()
        .trim()
}

#[test]
fn fig2_anchors() {
    let text = rendered("fig2");
    let id = "FlowPanel.java#FlowPanel.getPreferredSize/0";
    for mode in ["checking", "suggestion"] {
        assert_eq!(
            line(&text, id, mode, "internal"),
            "calculate flow layout dimension"
        );
    }
    // `m.getPreferredSize()` resolves by name, so getPreferredSize is both
    // caller and callee of calculateFlowLayout; suggestion keeps only the
    // callee half
    let callee = "FlowPanel.java#FlowPanel.calculateFlowLayout/1";
    let half = "get preferred size calculate flow layout dimension";
    assert_eq!(
        line(&text, callee, "checking", "interaction"),
        format!("{half} {half}")
    );
    assert_eq!(line(&text, callee, "suggestion", "interaction"), half);
}

#[test]
fn fig1_anchors() {
    let text = rendered("fig1");
    let id = "BoltBuilder.java#BoltBuilder.declareGrouping/4";
    let internal = line(&text, id, "checking", "internal");
    for t in [
        "shuffle grouping",
        "get component id",
        "stream id",
        "get fields",
    ] {
        assert!(internal.contains(t), "{t} in {internal}");
    }
    assert_eq!(line(&text, id, "checking", "enclosing"), "bolt builder");
}

/// The Fig. 1 method next to a small synthetic project: trained on the
/// fixed name, the classifier prefers it to the old one.
#[test]
fn fixed_name_outscores_the_old_one() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src");
    for f in synthetic::generate(&SyntheticConfig {
        classes: 3,
        plain_per_class: 4,
        delegating_per_class: 2,
        seed: 11,
    }) {
        let p = src.join(&f.path);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, f.text).unwrap();
    }
    fs::copy(
        fixture("fig1/src/BoltBuilder.java"),
        src.join("BoltBuilder.java"),
    )
    .unwrap();
    let ing = ingest(&src).unwrap();
    let cfg = FitConfig {
        mode: Mode::Checking,
        glove: GloveConfig {
            dim: 16,
            epochs: 50,
            ..GloveConfig::default()
        },
        model: ModelConfig {
            hidden: 24,
            attention: 24,
            l_max: 48,
            max_name_len: 4,
            ..ModelConfig::default()
        },
        train: TrainConfig {
            epochs: 200,
            learning_rate: 0.03,
            ..TrainConfig::default()
        },
        cnn: Some(CnnTrainConfig::default()),
        negatives: 4,
        ..FitConfig::default()
    };
    let fitted = fit(&ing.corpus, &cfg).unwrap();
    let cnn = fitted.cnn.as_ref().unwrap();
    let i = ing
        .corpus
        .methods
        .iter()
        .position(|m| m.name == "declareGrouping")
        .unwrap();
    let bundle = build_bundle(&ing.corpus, &ing.graph, i, Mode::Checking);
    let fixed = check_consistency(&bundle, "declareGrouping", &fitted.model, cnn)
        .unwrap()
        .score;
    let old = check_consistency(&bundle, "declareStream", &fitted.model, cnn)
        .unwrap()
        .score;
    assert!(
        old < fixed,
        "declareStream {old} vs declareGrouping {fixed}"
    );
}
