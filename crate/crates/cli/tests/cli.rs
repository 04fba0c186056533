use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn barrier() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_barrier"));
    c.env_remove("BARRIER_OUTPUT_DIR");
    c
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("spawn barrier")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn mini() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/mini")
}

fn corpus_flags<'a>(cmd: &'a mut Command, dir: &Path) -> &'a mut Command {
    cmd.arg("--pairs")
        .arg(dir.join("pairs.csv"))
        .arg("--concepts")
        .arg(dir.join("concepts.jsonl"))
        .arg("--countries")
        .arg(dir.join("countries.csv"))
        .arg("--publishers")
        .arg(dir.join("publishers.csv"))
}

fn synth(dir: &Path, n: usize) {
    let o = run(barrier()
        .args(["synth", "--n-examples", &n.to_string(), "--n-other-pairs", "20", "--out"])
        .arg(dir));
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn help_and_version_exit_zero() {
    assert!(run(barrier().arg("--help")).status.success());
    let o = run(barrier().arg("--version"));
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("barrier "));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(barrier().arg("frobnicate")).status.code(), Some(1));
    assert_eq!(run(barrier().args(["train", "--model", "svm"])).status.code(), Some(1));
    assert_eq!(run(barrier().args(["run", "--folds", "ten"])).status.code(), Some(1));
}

#[test]
fn missing_input_names_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(corpus_flags(barrier().arg("run"), tmp.path()).arg("--output-dir").arg(tmp.path().join("out")));
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.starts_with("error: pairs: not found"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn malformed_input_is_a_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    for f in ["concepts.jsonl", "countries.csv", "publishers.csv"] {
        fs::copy(mini().join(f), tmp.path().join(f)).unwrap();
    }
    fs::write(tmp.path().join("pairs.csv"), "from,to\nonly,two\n").unwrap();
    let o = run(corpus_flags(barrier().arg("annotate"), tmp.path()).arg("--output-dir").arg(tmp.path().join("out")));
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: pairs:"), "{}", stderr(&o));
}

#[test]
fn unknown_model_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(corpus_flags(barrier().arg("run"), &mini())
        .args(["--models", "perceptron", "--output-dir"])
        .arg(tmp.path()));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("perceptron"), "{}", stderr(&o));
}

#[test]
fn concept_freq_lists_top_concepts() {
    let o = run(corpus_flags(barrier().args(["concept-freq", "-n", "5"]), &mini()));
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "rank\tconcept\tfrequency");
    assert_eq!(lines.len(), 6);
    let counts: Vec<u64> = lines[1..].iter().map(|l| l.rsplit('\t').next().unwrap().parse().unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn annotate_writes_one_dataset_per_barrier() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(corpus_flags(barrier().arg("annotate"), &mini())
        .args(["--event", "mini", "--barriers", "economic,political", "--output-dir"])
        .arg(tmp.path()));
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> = fs::read_dir(tmp.path().join("datasets"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, ["mini_economic.csv", "mini_political.csv"]);
    assert!(tmp.path().join("ingest_report.txt").is_file());
}

#[test]
fn output_dir_falls_back_to_env() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("from-env");
    let o = run(corpus_flags(barrier().arg("annotate"), &mini())
        .current_dir(tmp.path())
        .env("BARRIER_OUTPUT_DIR", &target));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(target.join("config.toml").is_file());
    assert!(!tmp.path().join("results").exists());

    let flag = tmp.path().join("from-flag");
    let o = run(corpus_flags(barrier().arg("annotate"), &mini())
        .env("BARRIER_OUTPUT_DIR", &target)
        .arg("--output-dir")
        .arg(&flag));
    assert!(o.status.success());
    assert!(flag.join("config.toml").is_file());
}

#[test]
fn run_then_replay_from_config() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, 120);
    let first = tmp.path().join("first");
    let o = run(corpus_flags(barrier().arg("run"), &corpus)
        .args(["--models", "most-frequent,knn,naive-bayes", "--folds", "5", "--seed", "9", "--output-dir"])
        .arg(&first));
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["report.md", "report.csv", "results.json", "config.toml", "vocabulary.csv"] {
        assert!(first.join(f).is_file(), "{f}");
    }
    let md = fs::read_to_string(first.join("report.md")).unwrap();
    assert!(md.contains("| Barrier | Model | CA | Mic-Pre | Mic-Rec | Mic-F1 |"), "{md}");

    let second = tmp.path().join("second");
    let o = run(barrier()
        .arg("run")
        .arg("--config")
        .arg(first.join("config.toml"))
        .arg("--output-dir")
        .arg(&second));
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read(first.join("report.csv")).unwrap(),
        fs::read(second.join("report.csv")).unwrap()
    );

    let o = run(barrier()
        .args(["report", "--format", "csv", "--results"])
        .arg(first.join("results.json")));
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), fs::read_to_string(first.join("report.csv")).unwrap());
}

#[test]
fn train_and_evaluate_on_dataset_files() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    synth(&corpus, 120);
    let out = tmp.path().join("prep");
    let o = run(corpus_flags(barrier().arg("annotate"), &corpus)
        .args(["--event", "syn", "--barriers", "economic,time-zone", "--output-dir"])
        .arg(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    let economic = out.join("datasets/syn_economic.csv");
    let time_zone = out.join("datasets/syn_time-zone.csv");

    let model = tmp.path().join("tree.json");
    let o = run(barrier()
        .args(["train", "--model", "decision-tree", "--param", "max_leaf_nodes=8", "--dataset"])
        .arg(&economic)
        .arg("--out")
        .arg(&model));
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert_eq!(json["spec"]["hyperparameters"]["max_leaf_nodes"], 8.0);

    let o = run(barrier()
        .args(["train", "--model", "svm", "--param", "lambda=-1", "--dataset"])
        .arg(&economic)
        .arg("--out")
        .arg(tmp.path().join("bad.json")));
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));

    let eval = tmp.path().join("eval");
    let o = run(barrier()
        .args(["evaluate", "--models", "stratified,svm", "--folds", "4", "--dataset"])
        .arg(&economic)
        .arg("--dataset")
        .arg(&time_zone)
        .arg("--output-dir")
        .arg(&eval));
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(eval.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5, "{csv}");

    let o = run(barrier()
        .args(["evaluate", "--dataset"])
        .arg(&economic)
        .arg("--dataset")
        .arg(&economic)
        .arg("--output-dir")
        .arg(&eval));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_spec_file_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.toml");
    fs::write(&spec, "n_examples = 40\nn_other_pairs = 5\nseed = 3\n").unwrap();
    let out = tmp.path().join("c");
    let o = run(barrier().arg("synth").arg("--spec").arg(&spec).args(["--n-examples", "30", "--out"]).arg(&out));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("30 spreading examples"), "{}", stdout(&o));
    assert_eq!(fs::read_to_string(out.join("truth.csv")).unwrap().lines().count(), 31);

    fs::write(&spec, "n_exmaples = 40\n").unwrap();
    let o = run(barrier().arg("synth").arg("--spec").arg(&spec).arg("--out").arg(&out));
    assert_eq!(o.status.code(), Some(1));
}
