use std::path::Path;
use std::process::{Command, Output};

fn pta_bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pta-bench"))
        .args(args)
        .env("PTA_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn files_in(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn small_pta_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = pta_bench(&[
        "run",
        "--task",
        "mc",
        "--model",
        "pta",
        "--units",
        "10",
        "--length",
        "1500",
        "--repetitions",
        "2",
        "--epochs",
        "2",
        "--input-scaling",
        "0.1",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert!(text(&o.stdout).contains("mc pta mc: mean"));
    assert_eq!(
        files_in(dir.path()),
        [
            "comparison.csv",
            "mc-pta-n10-w0.1-summary.json",
            "mc-pta-n10-w0.1-trace.csv"
        ]
    );
    let summary = std::fs::read_to_string(dir.path().join("mc-pta-n10-w0.1-summary.json")).unwrap();
    assert!(summary.contains("\"repetitions\": 2"));
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# small baseline\ntask = nlm\nmodel = scr\nunits = 8\nlength = 1200\nrepetitions = 3\nbudget = 2\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = pta_bench(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--repetitions",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let stdout = text(&o.stdout);
    assert!(stdout.contains("nlm scr nmse"), "{stdout}");
    assert!(
        stdout.contains("over 1 repetitions (search budget 2)"),
        "{stdout}"
    );
    let table = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    assert_eq!(table.lines().count(), 2);
}

#[test]
fn invalid_input_exits_nonzero_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let o = pta_bench(&[
        "run",
        "--task",
        "nlm",
        "--model",
        "scr",
        "--repetitions",
        "0",
        "--out",
        out,
    ]);
    assert!(!o.status.success());
    assert!(
        text(&o.stderr).contains("repetitions"),
        "{}",
        text(&o.stderr)
    );

    let o = pta_bench(&["run", "--task", "sine", "--model", "pta"]);
    assert!(!o.status.success());

    let o = pta_bench(&["run", "--model", "pta", "--out", out]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).starts_with("error:"));

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "colour = blue\n").unwrap();
    let o = pta_bench(&["run", "--config", bad.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(text(&o.stderr).contains("colour"), "{}", text(&o.stderr));
}

#[test]
fn export_writes_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("narma.csv");
    let o = pta_bench(&[
        "export",
        "--task",
        "narma20",
        "--length",
        "500",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let body = std::fs::read_to_string(&path).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("input_0,target_0"));
    assert_eq!(lines.count(), 500);
}
