use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn disadapt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_disadapt"))
        .args(args)
        .output()
        .expect("spawn disadapt")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_corpus(root: &Path, n: &str) -> std::path::PathBuf {
    let corpus = root.join("corpus");
    let o = disadapt(&["synth", "--n", n, "--seed", "3", "--out", p(&corpus)]);
    assert!(o.status.success(), "{}", stderr(&o));
    corpus
}

#[test]
fn synth_writes_three_files_per_record() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "6");
    let dirs: Vec<_> = fs::read_dir(&corpus).unwrap().collect();
    assert_eq!(dirs.len(), 6);
    for f in ["rr_filter.csv", "info.csv", "uad.csv"] {
        assert!(corpus.join("rec00000").join(f).is_file(), "missing {f}");
    }
}

#[test]
fn train_then_predict() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "30");
    let model = tmp.path().join("models/gbm.json");
    let o = disadapt(&["train", "--corpus", p(&corpus), "--algorithm", "gbm", "--stages", "20", "--out", p(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("train auc="));
    assert!(model.is_file());
    assert!(tmp.path().join("models/gbm.split.json").is_file());

    let o = disadapt(&["predict", "--model", p(&model), "--record", p(&corpus.join("rec00004"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o);
    assert!(line.starts_with("score="), "{line}");
    let label = line.trim().rsplit("label=").next().unwrap();
    assert!(label == "0" || label == "1");
}

#[test]
fn predict_reports_short_record() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "12");
    let model = tmp.path().join("spec.json");
    let o = disadapt(&[
        "train", "--corpus", p(&corpus), "--features", "spectrogram", "--stages", "5", "--out", p(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let short = tmp.path().join("short");
    let o = disadapt(&["synth", "--n", "1", "--min-len", "150", "--max-len", "150", "--out", p(&short)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = disadapt(&["predict", "--model", p(&model), "--record", p(&short.join("rec00000"))]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.starts_with("error[RecordTooShort]"), "{err}");
    assert!(err.contains("300"), "minimum length not named: {err}");
}

#[test]
fn evaluate_single_spec_writes_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "30");
    let out = tmp.path().join("eval");
    let o = disadapt(&[
        "evaluate", "--corpus", p(&corpus), "--algorithm", "logistic", "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "split.json",
        "comparison.txt",
        "comparison.json",
        "models/logistic-raw.json",
        "reports/logistic-raw.json",
        "reports/logistic-raw.txt",
        "roc/logistic-raw.csv",
    ] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let roc = fs::read_to_string(out.join("roc/logistic-raw.csv")).unwrap();
    assert!(roc.starts_with("fpr,tpr\n0,0\n"), "{roc}");
    assert!(roc.trim_end().ends_with("1,1"));
}

#[test]
fn evaluate_saved_model() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "20");
    let model = tmp.path().join("mine.json");
    let o = disadapt(&["train", "--corpus", p(&corpus), "--stages", "10", "--out", p(&model)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("eval");
    let o = disadapt(&["evaluate", "--corpus", p(&corpus), "--model", p(&model), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("mine"));
    assert!(out.join("reports/mine.json").is_file());
}

#[test]
fn spectrogram_exports() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = small_corpus(tmp.path(), "8");
    let out = tmp.path().join("grids");
    let o = disadapt(&["spectrogram", "--corpus", p(&corpus), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["mean0.csv", "mean1.csv", "diff.csv"] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 201, "{f}");
        assert!(rows.iter().all(|r| r.split(',').count() == 51), "{f}");
    }

    let one = tmp.path().join("one");
    let o = disadapt(&["spectrogram", "--record", p(&corpus.join("rec00001")), "--out", p(&one)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(one.join("fragment_0.csv").is_file());
}

#[test]
fn spectrogram_class_filter_with_no_members() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c");
    // a single record is class 1 under the default balance
    let o = disadapt(&["synth", "--n", "1", "--out", p(&corpus)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = disadapt(&["spectrogram", "--corpus", p(&corpus), "--class", "0", "--out", p(&tmp.path().join("g"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error[EmptyClass]"), "{}", stderr(&o));
}

#[test]
fn error_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = disadapt(&["predict", "--model", p(&tmp.path().join("none.json")), "--record", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).starts_with("error[IoFailure]"), "{}", stderr(&o));

    let o = disadapt(&["synth"]);
    assert_eq!(o.status.code(), Some(2));

    let o = disadapt(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));

    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"format_version\": 1, \"algorithm\"").unwrap();
    let o = disadapt(&["predict", "--model", p(&bad), "--record", p(tmp.path())]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error[CorruptModel]"), "{}", stderr(&o));
}

#[test]
fn config_file_overrides_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("cfg.toml");
    fs::write(&cfg, "[synth]\nn_records = 4\nmin_len = 120\nmax_len = 130\n").unwrap();
    let out = tmp.path().join("c");
    let o = disadapt(&["synth", "--config", p(&cfg), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_dir(&out).unwrap().count(), 4);

    fs::write(&cfg, "[synth]\nn_records = 0\n").unwrap();
    let o = disadapt(&["synth", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).starts_with("error[InvalidConfig]"));
}
