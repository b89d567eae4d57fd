use std::path::Path;
use std::process::{Command, Output};

fn stance(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stance"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = stance(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(
        p,
        &[
            "synth",
            "--out",
            "pool",
            "--users-per-side",
            "150",
            "--polarization",
            "0.95",
            "--seed",
            "3",
            "--timeline-tweets",
            "5",
        ],
    );
    ok(
        p,
        &[
            "synth",
            "--out",
            "test",
            "--users-per-side",
            "10",
            "--polarization",
            "0.95",
            "--max-tweets",
            "3",
            "--timeline-tweets",
            "30",
            "--seed",
            "4",
            "--id-prefix",
            "t_",
        ],
    );
    ok(
        p,
        &[
            "bootstrap",
            "--tweets",
            "pool/tweets.jsonl",
            "--out",
            "boot",
            "--n-active",
            "300",
            "--min-tweets",
            "5",
            "--per-cluster",
            "100",
            "--seed",
            "3",
            "--reference",
            "pool/gold.tsv",
        ],
    );
    dir
}

const SPLIT: [&str; 10] = [
    "--train-tweets",
    "pool/tweets.jsonl",
    "--train-labels",
    "boot/labels.tsv",
    "--train-timeline",
    "pool/timeline.jsonl",
    "--test-tweets",
    "test/tweets.jsonl",
    "--test-gold",
    "test/gold.tsv",
];

#[test]
fn synth_bootstrap_classify_report() {
    let dir = prepared();
    let p = dir.path();
    for file in ["labels.tsv", "embedding.csv", "clusters.csv", "bootstrap.json"] {
        assert!(p.join("boot").join(file).exists(), "{file}");
    }
    let embedding = std::fs::read_to_string(p.join("boot/embedding.csv")).unwrap();
    assert_eq!(embedding.lines().next(), Some("point_id,x0,x1"));

    std::fs::write(
        p.join("svm.conf"),
        "# baseline\nmethod = SVM_RT\ntopic = demo\nsvm.c = 0.5\n",
    )
    .unwrap();
    let mut args = vec![
        "classify",
        "--config",
        "svm.conf",
        "--expand-test",
        "--test-timeline",
        "test/timeline.jsonl",
        "--out",
        "svm",
    ];
    args.extend(SPLIT);
    let stdout = ok(p, &args);
    assert!(stdout.starts_with(
        "topic,method,condition,A,P,R,F,coverage,n_test,n_unassigned\ndemo,SVM_RT,expanded_test,"
    ));
    let config: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("svm/config.json")).unwrap()).unwrap();
    assert_eq!(config["hyperparameters"]["svm_c"], 0.5);

    let mut args = vec![
        "classify",
        "--method",
        "textclf",
        "--topic",
        "demo",
        "--set",
        "text.dim=12",
        "--out",
        "text",
    ];
    args.extend(SPLIT);
    ok(p, &args);

    let predictions = std::fs::read_to_string(p.join("svm/predictions.tsv")).unwrap();
    assert_eq!(predictions.lines().count(), 20);
    let scored = ok(
        p,
        &[
            "evaluate",
            "--gold",
            "test/gold.tsv",
            "--predictions",
            "svm/predictions.tsv",
            "--topic",
            "demo",
            "--method",
            "SVM_RT",
            "--condition",
            "expanded_test",
        ],
    );
    assert_eq!(scored, stdout);

    ok(
        p,
        &[
            "report",
            "text/row.json",
            "svm/row.json",
            "--csv",
            "all.csv",
            "--json",
            "all.json",
        ],
    );
    let csv = std::fs::read_to_string(p.join("all.csv")).unwrap();
    let methods: Vec<_> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_owned())
        .collect();
    assert_eq!(methods, ["SVM_RT", "TEXTCLF"]);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(p.join("all.json")).unwrap()).unwrap();
    assert!(json["note"].as_str().unwrap().contains("unassigned"));
    assert!(json["summary"]["SVM_RT/expanded_test"].is_object());
    assert!(json["summary"]["TEXTCLF/no_expansion"].is_object());
}

#[test]
fn unassigned_predictions_are_scored_separately() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("gold.tsv"), "a\t0\nb\t1\nc\t1\n").unwrap();
    std::fs::write(p.join("pred.tsv"), "a\t0\nb\tUNASSIGNED\nc\t1\n").unwrap();
    let out = ok(
        p,
        &["evaluate", "--gold", "gold.tsv", "--predictions", "pred.tsv"],
    );
    assert_eq!(
        out.lines().nth(1),
        Some("unknown,unknown,no_expansion,100.0,100.0,100.0,100.0,66.7,3,1")
    );
}

#[test]
fn bad_invocations_fail_cleanly() {
    let dir = prepared();
    let p = dir.path();
    let cases: [(&[&str], &str); 4] = [
        (&["--method", "SVM_RT", "--expand-test"], "timeline"),
        (&["--method", "KNN"], "KNN"),
        (&[], "no method"),
        (&["--method", "SVM_RT", "--set", "svm.gamma=2"], "svm.gamma"),
    ];
    for (extra, needle) in cases {
        let mut args = vec!["classify", "--out", "x"];
        args.extend(SPLIT);
        args.extend(extra);
        let out = stance(p, &args);
        assert!(!out.status.success(), "{extra:?}");
        let stderr = String::from_utf8_lossy(&out.stderr);
        assert!(stderr.contains(needle), "{extra:?}: {stderr}");
    }
    let out = stance(
        p,
        &[
            "classify", "--method", "EXTERNAL", "--out", "x", SPLIT[0], SPLIT[1], SPLIT[2], SPLIT[3],
            SPLIT[6], SPLIT[7], SPLIT[8], SPLIT[9],
        ],
    );
    assert!(!out.status.success());
}
