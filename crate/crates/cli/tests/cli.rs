use std::path::Path;
use std::process::{Command, Output};

use phonebench::dsp::FeatureMatrix;
use phonebench::eval::BenchmarkReport;

fn phonebench(args: &[&str]) -> Output {
    phonebench_env(args, None)
}

fn phonebench_env(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_phonebench"));
    cmd.args(args).env_remove("PHONEBENCH_SEED").env("RUST_LOG", "warn");
    if let Some(s) = seed {
        cmd.env("PHONEBENCH_SEED", s);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn synth(dir: &Path, n: usize, extra: &[&str]) {
    let out = dir.display().to_string();
    let n = n.to_string();
    let mut args = vec!["dataset", "synth", "--n", &n, "--seed", "7", "--out", &out];
    args.extend(extra);
    let o = phonebench(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

fn p(dir: &Path, rel: &str) -> String {
    dir.join(rel).display().to_string()
}

#[test]
fn synth_writes_requested_rows_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, 500, &[]);
    let manifest = std::fs::read_to_string(d.join("manifest.tsv")).unwrap();
    assert_eq!(manifest.lines().count(), 501);
    let o = phonebench(&["dataset", "validate", &p(d, "manifest.tsv")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("total: 500"));
    assert!(text.contains("coverage: 33/33"));
    let class_lines = text.lines().filter(|l| l.split('\t').count() == 2).count();
    assert_eq!(class_lines, 33);
}

#[test]
fn validate_reports_bad_label_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, 40, &[]);
    let path = d.join("manifest.tsv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let cols: Vec<&str> = lines[3].split('\t').collect();
    lines[3] = format!("{}\t{}\t{}\tQQ", cols[0], cols[1], cols[2]);
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let o = phonebench(&["dataset", "validate", &path.display().to_string()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
    assert!(stderr(&o).contains("QQ"));
}

#[test]
fn features_dimensions_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, 24, &[]);
    let m = p(d, "manifest.tsv");
    for (repr, dim, file) in [("mfcc-segment", 48, "f.csv"), ("lpc-frame", 32, "f.pbft"), ("external", 16, "e.csv")] {
        let out = p(d, file);
        let o = phonebench(&["features", "--repr", repr, "--manifest", &m, "--out", &out]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains(&format!("d = {dim}")), "{}", stdout(&o));
        let f = FeatureMatrix::load(&out).unwrap();
        assert_eq!((f.n_rows(), f.dim()), (24, dim));
    }
    let o = phonebench(&["features", "--repr", "mfcc-frame", "--manifest", &m, "--out", &p(d, "f.txt")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn autoencoder_representation_needs_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d, 24, &[]);
    let m = p(d, "manifest.tsv");
    let o = phonebench(&["features", "--repr", "ae-small", "--manifest", &m, "--out", &p(d, "a.csv")]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("config"), "{}", stderr(&o));

    let model = p(d, "small.pbnn");
    let o = phonebench(&[
        "ae-train", "--repr", "ae-small", "--manifest", &m, "--out", &model, "--first-width", "32", "--epochs", "2",
        "--limit", "200", "--loss-csv", &p(d, "loss.csv"),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(d.join("loss.csv")).unwrap().lines().count(), 4);
    let o = phonebench(&["features", "--repr", "ae-small", "--manifest", &m, "--out", &p(d, "a.csv"), "--model", &model]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("d = 32"));
    // a small-bottleneck model cannot serve the big representation
    let o = phonebench(&["features", "--repr", "ae-big", "--manifest", &m, "--out", &p(d, "b.csv"), "--model", &model]);
    assert_eq!(code(&o), 1);
    let o = phonebench(&["ae-train", "--repr", "mfcc-frame", "--manifest", &m, "--out", &model]);
    assert_eq!(code(&o), 1);
}

fn write_config(d: &Path, name: &str, out: &str, extra: &str) -> String {
    let text = format!(
        "manifest = \"corpus/manifest.tsv\"\ninventory = \"corpus/inventory.tsv\"\noutput_dir = \"{out}\"\n\
         representations = [\"mfcc-frame\", \"lpc-frame\"]\nclassifiers = [\"decision_tree\", \"logreg_l2\", \"random_forest\"]\n\
         k = 3\nseed = 5\n{extra}\n[hyper]\nrf_trees = 5\n"
    );
    std::fs::write(d.join(name), text).unwrap();
    p(d, name)
}

#[test]
fn bench_is_deterministic_and_reports_render() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(&d.join("corpus"), 60, &["--classes", "a,s,SIL"]);
    let cfg = write_config(d, "run.toml", "out", "");
    let first = phonebench(&["bench", "--config", &cfg]);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let a = std::fs::read(d.join("out/report.json")).unwrap();
    let second = phonebench(&["bench", "--config", &cfg]);
    assert_eq!(code(&second), 0);
    assert_eq!(a, std::fs::read(d.join("out/report.json")).unwrap());
    assert!(d.join("out/resolved_config.toml").exists());

    let report = BenchmarkReport::load(d.join("out/report.json")).unwrap();
    assert_eq!((report.n_cells(), report.seed, report.k), (6, 5, 3));
    let o = phonebench(&["report", "table1", &p(d, "out/report.json")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("| Representation | DT | LR (L2) | RF |"), "{}", stdout(&o));
    let o = phonebench(&["report", "table2", &p(d, "out/report.json"), "--cell", "lpc-frame:random_forest"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("All Vowels"));
    for bad in ["lpc-frame", "lpc-frame:svm", "ae-big:random_forest"] {
        let o = phonebench(&["report", "table2", &p(d, "out/report.json"), "--cell", bad]);
        assert_eq!(code(&o), 1, "{bad}");
    }
}

#[test]
fn seed_environment_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(&d.join("corpus"), 45, &["--classes", "a,s,SIL"]);
    let cfg = write_config(d, "run.toml", "out", "");
    let o = phonebench_env(&["bench", "--config", &cfg], Some("77"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(BenchmarkReport::load(d.join("out/report.json")).unwrap().seed, 77);
    let resolved = std::fs::read_to_string(d.join("out/resolved_config.toml")).unwrap();
    assert!(resolved.contains("seed = 77"));
    let o = phonebench_env(&["bench", "--config", &cfg], Some("seven"));
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("PHONEBENCH_SEED"));
}

#[test]
fn bench_logs_resolved_config_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(&d.join("corpus"), 45, &["--classes", "a,s,SIL"]);
    let cfg = write_config(d, "run.toml", "out", "");
    let o = Command::new(env!("CARGO_BIN_EXE_phonebench"))
        .args(["bench", "--config", &cfg])
        .env_remove("PHONEBENCH_SEED")
        .env_remove("RUST_LOG")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let err = stderr(&o);
    assert!(err.contains("seed 5"), "{err}");
    assert!(err.contains("resolved config"));
    assert!(err.contains("representations = [\"mfcc-frame\", \"lpc-frame\"]"), "{err}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&phonebench(&["--help"])), 0);
    assert_eq!(code(&phonebench(&["frobnicate"])), 1);
    assert_eq!(code(&phonebench(&["features", "--repr", "mfcc-cube", "--manifest", "m", "--out", "o.csv"])), 1);
    assert_eq!(code(&phonebench(&["bench", "--config", &p(d, "missing.toml")])), 1);
    assert_eq!(code(&phonebench(&["report", "table1", &p(d, "missing.json")])), 1);

    synth(&d.join("corpus"), 45, &["--classes", "a,s,SIL"]);
    std::fs::write(d.join("bad.toml"), "manifest = 3\n").unwrap();
    assert_eq!(code(&phonebench(&["bench", "--config", &p(d, "bad.toml")])), 1);
    let cfg = write_config(d, "ae.toml", "out", "representations = [\"ae-small\"]");
    // duplicate key: representations is set twice
    assert_eq!(code(&phonebench(&["bench", "--config", &cfg])), 1);

    // an SMO budget of one pass with an unreachable tolerance is a solver
    // failure, not a user error
    let text = "manifest = \"corpus/manifest.tsv\"\ninventory = \"corpus/inventory.tsv\"\noutput_dir = \"o2\"\n\
                representations = [\"mfcc-frame\"]\nclassifiers = [\"svm_rbf\"]\nk = 3\n\
                [hyper]\nsvm_max_passes = 1\nsvm_tol = 1e-300\n";
    std::fs::write(d.join("smo.toml"), text).unwrap();
    let o = phonebench(&["bench", "--config", &p(d, "smo.toml")]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("smo did not converge"));
    assert!(stderr(&o).contains("cell mfcc-frame:svm_rbf"));
}
