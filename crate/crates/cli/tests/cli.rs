use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn seqtag(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seqtag"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("failed to launch seqtag")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("process had no exit code")
}

fn make_corpus(dir: &Path, n_docs: usize) -> PathBuf {
    let out = seqtag(
        &["gen-synthetic", "corpus", "--n-docs", &n_docs.to_string()],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    dir.join("corpus")
}

fn last_f1(text: &str) -> f64 {
    let line = text
        .lines()
        .last()
        .unwrap_or_else(|| panic!("empty output: {text:?}"));
    let value = line
        .strip_prefix("F1=")
        .unwrap_or_else(|| panic!("last line is not F1=...: {line:?}"));
    value.parse().unwrap()
}

#[test]
fn pipeline_train_tag_eval_memorizes_tiny_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 12);

    let out = seqtag(&["train", "--train", "corpus", "--model-out", "m.bin"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(dir.join("m.bin").exists());
    assert!(dir.join("m.bin.trace").exists());

    let out = seqtag(&["tag", "m.bin", "corpus", "tagged"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = seqtag(&["eval", "corpus", "tagged"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(last_f1(&stdout(&out)) > 0.9);
}

#[test]
fn eval_gold_against_itself_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 5);

    let out = seqtag(&["eval", "corpus", "corpus"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().last(), Some("F1=1.0000"));
}

#[test]
fn tag_preserves_token_count_on_untagged_input() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 6);
    let out = seqtag(
        &[
            "train",
            "--train",
            "corpus",
            "--model-out",
            "m.bin",
            "--epochs",
            "1",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let gold = fs::read_to_string(dir.join("corpus/synthetic-0000.conll")).unwrap();
    let stripped: String = gold
        .lines()
        .map(|line| {
            if line.starts_with('#') || line.is_empty() {
                line.to_string()
            } else {
                line.split('\t').next().unwrap().to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(dir.join("plain.conll"), format!("{stripped}\n")).unwrap();

    let out = seqtag(&["tag", "m.bin", "plain.conll", "pred.conll"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let tagged = fs::read_to_string(dir.join("pred.conll")).unwrap();
    let in_tokens = gold
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .count();
    let out_tokens = tagged
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .count();
    assert_eq!(in_tokens, out_tokens);
    for line in tagged
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        assert_eq!(line.split('\t').count(), 2, "untagged line: {line:?}");
    }
}

#[test]
fn constrained_output_passes_validate() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 6);
    seqtag(
        &[
            "train",
            "--train",
            "corpus",
            "--model-out",
            "m.bin",
            "--epochs",
            "1",
        ],
        dir,
    );
    let out = seqtag(&["tag", "m.bin", "corpus", "tagged"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let out = seqtag(&["validate", "tagged"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out), "");
}

#[test]
fn unconstrained_tagging_reports_violation_count() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 5);
    seqtag(
        &[
            "train",
            "--train",
            "corpus",
            "--model-out",
            "m.bin",
            "--epochs",
            "1",
        ],
        dir,
    );
    let out = seqtag(&["tag", "m.bin", "corpus", "tagged", "--no-constrain"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("BIO violations in unconstrained output"));
}

#[test]
fn missing_training_corpus_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = seqtag(
        &["train", "--train", "no-such-dir", "--model-out", "m.bin"],
        tmp.path(),
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn zero_epochs_is_rejected_before_any_work() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 3);
    let out = seqtag(
        &[
            "train",
            "--train",
            "corpus",
            "--model-out",
            "m.bin",
            "--epochs",
            "0",
        ],
        dir,
    );
    assert_eq!(code(&out), 1);
    assert!(!dir.join("m.bin").exists());
}

#[test]
fn tokenization_mismatch_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("a.conll"), "mix\tO\nbuffer\tO\n").unwrap();
    fs::write(dir.join("b.conll"), "mix\tO\n").unwrap();
    let out = seqtag(&["eval", "a.conll", "b.conll"], dir);
    assert_eq!(code(&out), 2);
}

#[test]
fn validate_lists_violations_and_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("bad.conll"), "mix\tB-Action\nit\tI-Mention\n").unwrap();
    let out = seqtag(&["validate", "bad.conll"], dir);
    assert_eq!(code(&out), 3);
    let listing = stdout(&out);
    let lines: Vec<&str> = listing.lines().collect();
    assert_eq!(lines, vec!["bad:0:1 B-Action->I-Mention"]);
}

#[test]
fn convert_writes_conll_and_drops_misaligned_spans() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let brat = dir.join("brat");
    fs::create_dir(&brat).unwrap();
    fs::write(brat.join("p1.txt"), "Mix the buffer gently.\n").unwrap();
    fs::write(
        brat.join("p1.ann"),
        "T1\tAction 0 3\tMix\nT2\tReagent 8 14\tbuffer\nT3\tAction 2 6\tx th\n",
    )
    .unwrap();

    let out = seqtag(&["convert", "brat", "out"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("does not align"));
    assert!(stdout(&out).contains("1 annotations dropped"));

    let conll = fs::read_to_string(dir.join("out/p1.conll")).unwrap();
    assert!(conll.contains("Mix\tB-Action"));
    assert!(conll.contains("buffer\tB-Reagent"));

    let out = seqtag(&["validate", "out"], dir);
    assert_eq!(code(&out), 0);
}

#[test]
fn convert_with_empty_ann_yields_all_outside_tags() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let brat = dir.join("brat");
    fs::create_dir(&brat).unwrap();
    fs::write(brat.join("p1.txt"), "Mix the buffer.\n").unwrap();
    fs::write(brat.join("p1.ann"), "").unwrap();

    let out = seqtag(&["convert", "brat", "out"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let conll = fs::read_to_string(dir.join("out/p1.conll")).unwrap();
    for line in conll
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
    {
        assert!(line.ends_with("\tO"), "unexpected tag: {line:?}");
    }
}

#[test]
fn convert_unpaired_files_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let brat = dir.join("brat");
    fs::create_dir(&brat).unwrap();
    fs::write(brat.join("p1.txt"), "Mix.\n").unwrap();
    let out = seqtag(&["convert", "brat", "out"], dir);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("missing matching .ann"));
}

#[test]
fn one_by_one_sweep_matches_train_plus_eval() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 8);

    let out = seqtag(
        &[
            "sweep",
            "--train",
            "corpus",
            "--dev",
            "corpus",
            "--lr-grid",
            "0.1",
            "--wd-grid",
            "0.005",
            "--output",
            "sweep.txt",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = fs::read_to_string(dir.join("sweep.txt")).unwrap();
    let best = table.lines().find(|l| l.starts_with("best:")).unwrap();
    let swept = best.rsplit("F1=").next().unwrap().to_string();

    seqtag(&["train", "--train", "corpus", "--model-out", "m.bin"], dir);
    seqtag(&["tag", "m.bin", "corpus", "tagged"], dir);
    let out = seqtag(&["eval", "corpus", "tagged"], dir);
    let direct = format!("{:.4}", last_f1(&stdout(&out)));
    assert_eq!(swept, direct);
}

#[test]
fn sweep_grid_fills_every_cell_and_marks_best() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 6);
    let out = seqtag(
        &[
            "sweep",
            "--train",
            "corpus",
            "--dev",
            "corpus",
            "--lr-grid",
            "0.05,0.1",
            "--wd-grid",
            "0.0005,0.005",
            "--epochs",
            "1",
            "--output",
            "sweep.txt",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let table = fs::read_to_string(dir.join("sweep.txt")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert!(rows[0].starts_with("# seqtag "));
    assert!(rows[1].starts_with("wd\\lr"));
    assert!(rows[2].starts_with("0.0005"));
    assert!(rows[3].starts_with("0.005"));
    assert_eq!(rows[2].split_whitespace().count(), 3);
    assert!(rows[4].starts_with("best: lr="));
    assert!(!table.contains("NaN"));
}

#[test]
fn gen_synthetic_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    seqtag(&["gen-synthetic", "a", "--n-docs", "4"], dir);
    seqtag(&["gen-synthetic", "b", "--n-docs", "4"], dir);
    let a = fs::read_to_string(dir.join("a/synthetic-0003.conll")).unwrap();
    let b = fs::read_to_string(dir.join("b/synthetic-0003.conll")).unwrap();
    assert_eq!(a, b);

    seqtag(&["gen-synthetic", "c", "--n-docs", "4", "--seed", "7"], dir);
    let c = fs::read_to_string(dir.join("c/synthetic-0003.conll")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn config_file_overrides_defaults_and_flags_override_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 3);
    fs::write(dir.join("run.cfg"), "epochs=1\n").unwrap();

    let out = seqtag(
        &[
            "train",
            "--train",
            "corpus",
            "--model-out",
            "a.bin",
            "--config",
            "run.cfg",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let trace = fs::read_to_string(dir.join("a.bin.trace")).unwrap();
    assert_eq!(trace.lines().count(), 2, "header plus one epoch:\n{trace}");

    let out = seqtag(
        &[
            "train",
            "--train",
            "corpus",
            "--model-out",
            "b.bin",
            "--config",
            "run.cfg",
            "--epochs",
            "2",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let trace = fs::read_to_string(dir.join("b.bin.trace")).unwrap();
    assert_eq!(trace.lines().count(), 3, "header plus two epochs:\n{trace}");
}

#[test]
fn unknown_config_key_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 3);
    fs::write(dir.join("run.cfg"), "learning=fast\n").unwrap();
    let out = seqtag(
        &[
            "train",
            "--train",
            "corpus",
            "--model-out",
            "m.bin",
            "--config",
            "run.cfg",
        ],
        dir,
    );
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("unknown key"));
}

#[test]
fn text_outputs_begin_with_a_header_line() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 4);
    seqtag(
        &[
            "train",
            "--train",
            "corpus",
            "--model-out",
            "m.bin",
            "--epochs",
            "1",
        ],
        dir,
    );
    seqtag(&["tag", "m.bin", "corpus", "tagged"], dir);
    seqtag(&["eval", "corpus", "tagged", "--tsv", "scores.tsv"], dir);

    for path in [
        dir.join("corpus/synthetic-0000.conll"),
        dir.join("m.bin.trace"),
        dir.join("tagged/synthetic-0000.conll"),
        dir.join("scores.tsv"),
    ] {
        let text = fs::read_to_string(&path).unwrap();
        let first = text.lines().next().unwrap();
        assert!(
            first.starts_with("# seqtag ") && first.contains("seed=") && first.contains("config="),
            "{}: bad header {first:?}",
            path.display()
        );
    }
}

#[test]
fn tsv_report_covers_every_type_plus_avg() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 4);
    seqtag(&["eval", "corpus", "corpus", "--tsv", "scores.tsv"], dir);
    let tsv = fs::read_to_string(dir.join("scores.tsv")).unwrap();
    let data_lines: Vec<&str> = tsv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data_lines.len(), 19, "18 types plus avg:\n{tsv}");
    assert!(data_lines.last().unwrap().starts_with("avg\t"));
}

#[test]
fn bilstm_round_trips_through_the_cli() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    make_corpus(dir, 4);
    let out = seqtag(
        &[
            "train",
            "--train",
            "corpus",
            "--model",
            "bilstm",
            "--model-out",
            "m.bin",
            "--epochs",
            "1",
            "--embed-dim",
            "8",
            "--hidden-dim",
            "8",
        ],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = seqtag(&["tag", "m.bin", "corpus", "tagged"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = seqtag(&["validate", "tagged"], dir);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn help_and_version_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&seqtag(&["--help"], tmp.path())), 0);
    assert_eq!(code(&seqtag(&["--version"], tmp.path())), 0);
    assert_eq!(code(&seqtag(&["train", "--help"], tmp.path())), 0);
}

#[test]
fn bad_usage_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&seqtag(&["frobnicate"], tmp.path())), 1);
    assert_eq!(code(&seqtag(&["train"], tmp.path())), 1);
    assert_eq!(code(&seqtag(&[], tmp.path())), 1);
}
