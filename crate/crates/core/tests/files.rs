use stance_core::corpus::{load_corpus, merge_timeline, read_gold_labels};
use stance_core::evalkit::{parse_report_csv, report_csv, report_json, ConfusionMatrix, ReportRow};
use stance_core::features::{build_vocab, FeatureMode, Vocabulary};
use stance_core::synth::{generate, SynthParams};
use stance_core::{Class, StanceLabel};

#[test]
fn synthetic_corpus_survives_disk() {
    let data = generate(&SynthParams {
        n_users_per_side: 20,
        timeline_tweets_per_user: 5,
        seed: 4,
        ..SynthParams::default()
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    data.write_to(dir.path()).unwrap();

    let topical = load_corpus(&dir.path().join("tweets.jsonl"), "synthetic").unwrap();
    let (merged, stats) = merge_timeline(&topical, &dir.path().join("timeline.jsonl")).unwrap();
    assert_eq!(stats.appended, 200);
    assert_eq!(stats.skipped_unknown_user + stats.skipped_duplicate, 0);
    let mut merged = merged;
    merged.attach_gold(&read_gold_labels(&dir.path().join("gold.tsv")).unwrap());

    assert_eq!(merged.len(), data.corpus.len());
    for (id, user) in &data.corpus.users {
        let back = merged.get(id).unwrap();
        assert_eq!(back.gold_label, user.gold_label);
        let texts = |u: &stance_core::corpus::UserRecord| {
            let mut t: Vec<_> = u
                .topical_tweets
                .iter()
                .chain(&u.timeline_tweets)
                .map(|t| (t.id.clone(), t.text.clone(), t.retweeted_user.clone()))
                .collect();
            t.sort();
            t
        };
        assert_eq!(texts(back), texts(user));
    }

    let accounts = std::fs::read_to_string(dir.path().join("accounts.tsv")).unwrap();
    assert_eq!(accounts.lines().count(), 400);
}

#[test]
fn vocabulary_tsv_round_trip() {
    let data = generate(&SynthParams {
        n_users_per_side: 10,
        seed: 1,
        ..SynthParams::default()
    })
    .unwrap();
    for mode in [FeatureMode::Rt, FeatureMode::Text] {
        let vocab = build_vocab(&data.corpus, mode, 1, false);
        let back = Vocabulary::from_tsv(mode, &vocab.to_tsv()).unwrap();
        assert_eq!(back, vocab);
        assert_eq!(back.index_of(vocab.term(0)), Some(0));
    }
}

#[test]
fn reports_keep_unassigned_and_undefined_rows() {
    let mut cm = ConfusionMatrix::default();
    cm.record(Class::ZERO, StanceLabel::Class(Class::ZERO));
    cm.record(Class::ONE, StanceLabel::Class(Class::ZERO));
    cm.record(Class::ONE, StanceLabel::Unassigned);
    let mut empty = ConfusionMatrix::default();
    empty.record(Class::ZERO, StanceLabel::Unassigned);
    let rows = vec![
        ReportRow::new("guns", "SVM_RT", "no_expansion", cm),
        ReportRow::new("guns", "UNSUPERVISED", "no_expansion", empty),
    ];
    let parsed = parse_report_csv(&report_csv(&rows)).unwrap();
    assert_eq!(parsed.len(), 2);
    assert_eq!(parsed[0]["A"], "50.0");
    assert_eq!(parsed[0]["n_unassigned"], "1");
    assert_eq!(parsed[1]["F"], "NA");
    assert_eq!(parsed[1]["coverage"], "0.0");

    let json: serde_json::Value = serde_json::from_str(&report_json(&rows)).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    assert!(json["rows"][1]["metrics"].is_null());
}
