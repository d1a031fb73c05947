use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergolab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn scenario(name: &str) -> String {
    scenarios().join(name).display().to_string()
}

/// Every output file except wall-clock timings, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else if path.file_name().unwrap() != "timings.json" {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn check_ds_on_shift_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["check-ds", &scenario("shift_delta.toml")], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(tmp.path().join("shift_delta/check-ds/ds.csv").is_file());
}

#[test]
fn maximal_delta_row() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["maximal", &scenario("shift_delta.toml")], tmp.path());
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(tmp.path().join("shift_delta/maximal/weak_type.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# scenario=shift_delta seed=1 "));
    assert_eq!(lines.next().unwrap(), "lambda,measure,bound,ratio,pass");
    assert!(csv.lines().any(|l| l == "0.25,3,16,0.1875,true"), "{csv}");
}

#[test]
fn scaled_identity_fails_converge() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["converge", &scenario("failing/scaled_identity.toml")], tmp.path());
    assert_eq!(code(&o), 1);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("ds_precondition FAIL"), "{stdout}");
}

#[test]
fn bundled_suite_passes_strictly() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["all", &scenarios().display().to_string(), "--strict"], tmp.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let record: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("rearrange_312/record.json")).unwrap()).unwrap();
    assert_eq!(record["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(record["command"], "all");
    assert!(record["verdicts"].as_array().unwrap().iter().all(|v| v["pass"] == true));
    let profile = std::fs::read_to_string(tmp.path().join("rearrange_312/rearrange/rearrangement.csv")).unwrap();
    let rows: Vec<&str> = profile.lines().skip(2).collect();
    assert_eq!(rows, ["1,3,3", "2,2,5", "4,1,7"]);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let suite = scenarios().display().to_string();
    assert_eq!(code(&run(&["all", &suite], a.path())), 0);
    assert_eq!(code(&run(&["all", &suite, "--threads", "1"], b.path())), 0);
    let (x, y) = (snapshot(a.path()), snapshot(b.path()));
    assert!(x.len() > 50);
    assert_eq!(x.keys().collect::<Vec<_>>(), y.keys().collect::<Vec<_>>());
    for (path, bytes) in &x {
        assert!(bytes == &y[path], "{} differs", path.display());
    }
}

#[test]
fn seed_override_changes_random_inputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let s = scenario("random_kernel.toml");
    run(&["rearrange", &s], a.path());
    run(&["rearrange", &s, "--seed", "99"], b.path());
    let file = "random_kernel/rearrange/rearrangement.csv";
    let (x, y) = (std::fs::read_to_string(a.path().join(file)).unwrap(), std::fs::read_to_string(b.path().join(file)).unwrap());
    assert!(y.starts_with("# scenario=random_kernel seed=99 "));
    assert_ne!(x.lines().nth(2), y.lines().nth(2));
}

#[test]
fn strict_counts_estimate_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("shift_delta.toml")).unwrap();
    let path = tmp.path().join("tight.toml");
    std::fs::write(&path, text.replace("egorov_threshold = 0.02", "egorov_threshold = 1e-6")).unwrap();
    let p = path.display().to_string();
    assert_eq!(code(&run(&["converge", &p], tmp.path())), 0);
    assert_eq!(code(&run(&["converge", &p, "--strict"], tmp.path())), 1);
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = |name: &str, body: &str| {
        let path = tmp.path().join(name);
        std::fs::write(&path, body).unwrap();
        path.display().to_string()
    };
    let base = std::fs::read_to_string(scenarios().join("rearrange_312.toml")).unwrap();
    let cases = [
        bad("syntax.toml", "name = [\n"),
        bad("unknown_key.toml", &base.replace("epsilon = 1.5", "epsilon = 1.5\ncolour = 3")),
        bad("bad_name.toml", &base.replace("\"rearrange_312\"", "\"a/b\"")),
        bad("short_literal.toml", &base.replace("[3.0, 1.0, 2.0]", "[3.0, 1.0]")),
        tmp.path().join("missing.toml").display().to_string(),
    ];
    for case in &cases {
        let o = run(&["rearrange", case], tmp.path());
        assert_eq!(code(&o), 2, "{case}: {}", String::from_utf8_lossy(&o.stderr));
    }
    // `converge` needs a grid the scenario does not declare.
    assert_eq!(code(&run(&["converge", &scenario("rearrange_312.toml")], tmp.path())), 2);
    assert_eq!(code(&run(&["sideways", &scenario("rearrange_312.toml")], tmp.path())), 2);
}
