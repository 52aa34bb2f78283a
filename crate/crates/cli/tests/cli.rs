use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ftc-workbench"));
    c.env_remove("FTC_WORKBENCH_THREADS");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().arg("--version").output().unwrap().status.code(), Some(0));
}

#[test]
fn usage_errors_exit_64() {
    for args in [&["frobnicate"][..], &["synth", "--bogus"], &["simulate", "--case", "7"], &["simulate", "--variant", "pid"], &[]] {
        let o = bin().args(args).output().unwrap();
        assert_eq!(code(&o), 64, "{args:?}: {}", stderr(&o));
    }
    let o = bin().arg("synth").env("FTC_WORKBENCH_THREADS", "zero").output().unwrap();
    assert_eq!(code(&o), 64);
    assert!(stderr(&o).contains("FTC_WORKBENCH_THREADS"));
}

#[test]
fn stage_errors_have_their_own_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("empty");
    assert_eq!(code(&run(&["analyze"], &out)), 3);
    assert_eq!(code(&run(&["simulate"], &out)), 4);
    assert_eq!(code(&run(&["evaluate"], &out)), 5);

    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "seed = \"one\"\n").unwrap();
    let o = bin().args(["synth", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error: synth"));

    let o = bin().args(["synth", "--points", "9"]).arg("--out").arg(&out).output().unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn single_point_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin().args(["synth", "--points", "3", "--seed", "11", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("synthesis.toml")).unwrap();
    let export: toml::Value = toml::from_str(&text).unwrap();
    assert_eq!(export["config_hash"].as_str().map(str::len), Some(64));
    let controllers = export["controller"].as_array().unwrap();
    assert_eq!(controllers.len(), 3);
    assert!(controllers.iter().all(|c| c["point"].as_integer() == Some(3)));
    assert_eq!(export["seed"].as_integer(), Some(11));
}

#[test]
fn full_pipeline_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let first = run(&["all"], &out);
    let c = code(&first);
    assert!(c == 0 || c == 1, "{}", stderr(&first));

    let verdicts = std::fs::read_to_string(out.join("tracking_verdicts.csv")).unwrap();
    let all_pass = verdicts.lines().skip(1).all(|l| l.contains(",true,"));
    let stdout = String::from_utf8_lossy(&first.stdout);
    assert_eq!(c == 0, all_pass && !stdout.contains("FAIL"), "{stdout}");

    let mut names: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    for f in [
        "synthesis.toml",
        "poles.csv",
        "mu.csv",
        "tracking.csv",
        "tracking_verdicts.csv",
        "sim_case1_lqr.csv",
        "sim_case2_gs_shif.csv",
        "bars_psi.csv",
    ] {
        assert!(names.iter().any(|n| n == f), "{f} missing from {names:?}");
    }
    let snapshot: Vec<Vec<u8>> = names.iter().map(|n| std::fs::read(out.join(n)).unwrap()).collect();
    for (n, bytes) in names.iter().zip(&snapshot) {
        let text = String::from_utf8_lossy(bytes);
        assert!(text.contains("config_hash"), "{n} has no config hash");
        assert!(text.contains("seed"), "{n} has no seed");
    }

    assert_eq!(code(&run(&["all"], &out)), c);
    for (n, bytes) in names.iter().zip(&snapshot) {
        assert!(std::fs::read(out.join(n)).unwrap() == *bytes, "{n} changed on rerun");
    }

    // single stages on the same directory
    let o = run(&["simulate", "--case", "1", "--variant", "lqr"], &out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(std::fs::read(out.join("sim_case1_lqr.csv")).unwrap() == snapshot[names.iter().position(|n| n == "sim_case1_lqr.csv").unwrap()]);
    let header = std::fs::read_to_string(out.join("sim_case1_lqr.csv")).unwrap();
    let header = header.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("t,x,y,z,u,v,w,q0,q1,q2,q3,p,q,r,V,phi,theta,psi,href,phiref,thetaref,psiref,rotor1a"));
    assert!(header.contains(",eff_rotor2b,"));
    assert_eq!(code(&run(&["evaluate"], &out)), c);
    assert_eq!(code(&run(&["analyze"], &out)), 0);
}
