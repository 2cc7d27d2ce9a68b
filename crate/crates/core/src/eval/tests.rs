use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

#[test]
fn subtoken_metric_examples() {
    let m = subtoken_metrics("getPreferredSize", "getSize").unwrap();
    assert_eq!(m.precision, 1.0);
    assert!(close(m.recall, 2.0 / 3.0));
    assert!(close(m.f_score, 0.8));
    assert_eq!(
        subtoken_metrics("getSize", "getSize").unwrap(),
        Prf {
            precision: 1.0,
            recall: 1.0,
            f_score: 1.0
        }
    );
    assert_eq!(
        subtoken_metrics("getSize", "putName").unwrap(),
        Prf {
            precision: 0.0,
            recall: 0.0,
            f_score: 0.0
        }
    );
    assert_eq!(
        subtoken_metrics("x", "getSize"),
        Err(EvalError::EmptyName(String::from("x")))
    );
}

#[test]
fn exmatch_examples() {
    assert!(exmatch("getSize", "getSize"));
    assert!(!exmatch("getSize", "sizeGet"));
    assert!(exmatch("getSize", "GET_SIZE"));
    assert!(!exmatch("getSize", "getsize"));
}

#[test]
fn set_metric_examples() {
    let one = set_metrics(&[("getPreferredSize", "getSize")]).unwrap();
    assert_eq!(one.precision, 1.0);
    assert!(close(one.recall, 2.0 / 3.0));
    assert_eq!(one.exmatch_rate, 0.0);
    let two = set_metrics(&[("getSize", "getSize"), ("getSize", "putName")]).unwrap();
    assert_eq!(
        (two.precision, two.recall, two.f_score, two.exmatch_rate),
        (0.5, 0.5, 0.5, 0.5)
    );
    assert_eq!(set_metrics::<&str>(&[]), Err(EvalError::NoPairs));
}

#[test]
fn classification_examples() {
    let r = classification_metrics(&ClassificationCounts {
        tp: 2,
        fp: 1,
        tn: 2,
        fn_: 1,
    });
    assert!(close(r.inconsistent.precision, 2.0 / 3.0));
    assert!(close(r.inconsistent.recall, 2.0 / 3.0));
    assert!(close(r.accuracy, 2.0 / 3.0));
    let perfect = classification_metrics(&ClassificationCounts {
        tp: 3,
        fp: 0,
        tn: 4,
        fn_: 0,
    });
    for v in [
        perfect.accuracy,
        perfect.inconsistent.f_score,
        perfect.consistent.f_score,
    ] {
        assert_eq!(v, 1.0);
    }
    let none = classification_metrics(&ClassificationCounts::default());
    assert!(none.undefined_accuracy && none.inconsistent.undefined && none.consistent.undefined);
    assert_eq!(none.accuracy, 0.0);
}

#[test]
fn recording_outcomes() {
    let mut c = ClassificationCounts::default();
    c.record(true, true);
    c.record(true, false);
    c.record(false, false);
    c.record(false, true);
    c.record(false, false);
    assert_eq!(
        c,
        ClassificationCounts {
            tp: 1,
            fp: 1,
            tn: 2,
            fn_: 1
        }
    );
}

fn sized(lines: u32, e: &str, r: &str) -> SizedResult {
    SizedResult {
        line_count: lines,
        expected: String::from(e),
        recommended: String::from(r),
    }
}

#[test]
fn single_bucket_equals_set_metrics() {
    let res = vec![
        sized(2, "getSize", "getSize"),
        sized(4, "getName", "setName"),
    ];
    let by = accuracy_by_size(&res, &DEFAULT_BUCKETS).unwrap();
    let all = set_metrics(&[("getSize", "getSize"), ("getName", "setName")]).unwrap();
    assert_eq!(by[0].1, Some(all));
    assert!(by[1..].iter().all(|(_, s)| s.is_none()));
}

#[test]
fn two_bucket_split() {
    let res = vec![
        sized(3, "getSize", "getSize"),
        sized(30, "getName", "setName"),
        sized(7, "aa", "bb"),
    ];
    let by = accuracy_by_size(&res, &DEFAULT_BUCKETS).unwrap();
    assert_eq!(
        by[0].1,
        Some(set_metrics(&[("getSize", "getSize")]).unwrap())
    );
    assert_eq!(by[1].1, Some(set_metrics(&[("aa", "bb")]).unwrap()));
    assert_eq!(by[2].1, None);
    assert_eq!(
        by[3].1,
        Some(set_metrics(&[("getName", "setName")]).unwrap())
    );
}

#[test]
fn grid_shape_and_text() {
    let grid = standard_grid();
    assert_eq!(grid.len(), 7);
    assert_eq!(
        grid[0].contexts,
        vec![crate::context::ContextKind::Internal]
    );
    let s = SuggestionScores {
        precision: 1.0,
        recall: 0.5,
        f_score: 2.0 / 3.0,
        exmatch_rate: 0.25,
        count: 4,
    };
    let report = AblationReport {
        rows: vec![AblationRow {
            variant: String::from("only"),
            suggestion: s,
            checking: None,
        }],
    };
    let text = report.to_text();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().ends_with("25.0%"));
}

const WORDS: [&str; 6] = ["get", "set", "size", "name", "value", "item"];

fn name_strategy() -> impl Strategy<Value = Vec<usize>> {
    proptest::collection::vec(0usize..WORDS.len(), 1..5)
}

fn render(ids: &[usize]) -> String {
    let parts: Vec<&str> = ids.iter().map(|&i| WORDS[i]).collect();
    crate::subtoken::recompose(&parts)
}

proptest! {
    #[test]
    fn metrics_match_set_arithmetic(e in name_strategy(), r in name_strategy()) {
        let es: BTreeSet<usize> = e.iter().copied().collect();
        let rs: BTreeSet<usize> = r.iter().copied().collect();
        let common = es.iter().filter(|x| rs.contains(x)).count() as f64;
        let p = common / rs.len() as f64;
        let rec = common / es.len() as f64;
        let f = if common == 0.0 { 0.0 } else { 2.0 * p * rec / (p + rec) };
        let got = subtoken_metrics(&render(&e), &render(&r)).unwrap();
        prop_assert_eq!(got, Prf { precision: p, recall: rec, f_score: f });
        prop_assert_eq!(exmatch(&render(&e), &render(&r)), e == r);
    }

    #[test]
    fn swapping_exchanges_precision_and_recall(e in name_strategy(), r in name_strategy()) {
        let a = subtoken_metrics(&render(&e), &render(&r)).unwrap();
        let b = subtoken_metrics(&render(&r), &render(&e)).unwrap();
        prop_assert_eq!((a.precision, a.recall), (b.recall, b.precision));
    }

    #[test]
    fn exmatch_implies_perfect_scores(e in name_strategy()) {
        let n = render(&e);
        let snake: Vec<String> = e.iter().map(|&i| WORDS[i].to_uppercase()).collect();
        let other = snake.join("_");
        prop_assert!(exmatch(&n, &other));
        prop_assert_eq!(subtoken_metrics(&n, &other).unwrap(), Prf { precision: 1.0, recall: 1.0, f_score: 1.0 });
    }

    #[test]
    fn set_metrics_are_means(pairs in proptest::collection::vec((name_strategy(), name_strategy()), 1..12)) {
        let rendered: Vec<(String, String)> = pairs.iter().map(|(e, r)| (render(e), render(r))).collect();
        let got = set_metrics(&rendered).unwrap();
        let mut sums = [0.0; 4];
        for (e, r) in &rendered {
            let m = subtoken_metrics(e, r).unwrap();
            sums[0] += m.precision;
            sums[1] += m.recall;
            sums[2] += m.f_score;
            sums[3] += if exmatch(e, r) { 1.0 } else { 0.0 };
        }
        let n = rendered.len() as f64;
        prop_assert_eq!([got.precision, got.recall, got.f_score, got.exmatch_rate], sums.map(|s| s / n));
    }

    #[test]
    fn accuracy_is_correct_over_total(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
        let c = ClassificationCounts { tp, fp, tn, fn_ };
        let r = classification_metrics(&c);
        let total = tp + fp + tn + fn_;
        if total > 0 {
            prop_assert_eq!(r.accuracy, (tp + tn) as f64 / total as f64);
        }
        if tp + fp > 0 {
            prop_assert_eq!(r.inconsistent.precision, tp as f64 / (tp + fp) as f64);
        }
        if tn + fp > 0 {
            prop_assert_eq!(r.consistent.recall, tn as f64 / (tn + fp) as f64);
        }
    }
}
