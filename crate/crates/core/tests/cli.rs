use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid-maneuver"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn gen_is_reproducible_and_writes_every_trial() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&run(&["gen"], a.path()));
    ok(&run(&["gen"], b.path()));
    let logs = a.path().join("logs");
    assert_eq!(fs::read_dir(&logs).unwrap().count(), 7);
    assert!(a.path().join("manifest.json").is_file());
    assert_eq!(dir_bytes(&logs), dir_bytes(&b.path().join("logs")));
    assert_eq!(
        fs::read(a.path().join("manifest.json")).unwrap(),
        fs::read(b.path().join("manifest.json")).unwrap()
    );
}

#[test]
fn stages_chain_and_report_every_test_maneuver() {
    let dir = tempfile::tempdir().unwrap();
    for stage in ["gen", "identify", "train", "evaluate"] {
        ok(&run(&[stage], dir.path()));
    }
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    let maneuvers = report["maneuvers"].as_array().unwrap();
    assert_eq!(maneuvers.len(), 4);
    for m in maneuvers {
        for model in ["physical", "hybrid", "datadriven"] {
            assert!(m[model]["rmse"].as_array().unwrap().iter().all(|x| x.as_f64().unwrap().is_finite()));
        }
    }
    assert!(dir.path().join("coefficients.json").is_file());
    assert!(dir.path().join("loss_trace.csv").is_file());
    assert_eq!(fs::read_dir(dir.path().join("rollouts")).unwrap().count(), 4);

    // a different seed changes the config hash; later stages refuse the
    // old artifacts unless forced
    let refused = run(&["train", "--seed", "7"], dir.path());
    assert!(!refused.status.success());
    assert!(String::from_utf8_lossy(&refused.stderr).contains("hash"));
    ok(&run(&["rollout", "--seed", "7", "--force"], dir.path()));
}

#[test]
fn corrupt_log_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    ok(&run(&["gen"], dir.path()));
    let log = fs::read_dir(dir.path().join("logs")).unwrap().next().unwrap().unwrap().path();
    let text = fs::read_to_string(&log).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[9] = "not,a,number,row,at,all,x,y,z";
    fs::write(&log, lines.join("\n")).unwrap();
    let o = run(&["identify"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&*log.file_name().unwrap().to_string_lossy()), "{err}");
    assert!(err.contains("10"), "{err}");
}

#[test]
fn config_prints_a_loadable_document() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&run(&["config", "--seed", "5"], dir.path()));
    let path = dir.path().join("run.toml");
    fs::write(&path, &text).unwrap();
    let again = ok(&run(&["config", "--config", path.to_str().unwrap()], dir.path()));
    assert_eq!(text, again);
    assert!(text.contains("seed = 5"));
}

#[test]
fn bad_config_is_rejected_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[training]\nbatch_size = 0\n").unwrap();
    let o = run(&["gen", "--config", path.to_str().unwrap()], &dir.path().join("out"));
    assert!(!o.status.success());
    assert!(!dir.path().join("out").exists());
}
