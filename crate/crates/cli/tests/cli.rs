use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn orbitlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbitlab"))
        .args(args)
        .env_remove("ORBITLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn list_names_suites_checks_and_experiments() {
    let o = orbitlab(&["list"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in [
        "group",
        "coadjoint",
        "quantization",
        "groupoid",
        "semiclassics",
        "induction",
        "all",
    ] {
        assert!(text.contains(&format!("  {name}\n")), "{name} missing");
    }
    for name in ["trace", "character", "covariance", "haar"] {
        assert!(text.contains(&format!("  {name} ")), "{name} missing");
    }
    assert!(text.contains("coadjoint.alpha0_agreement"));
}

#[test]
fn passing_suite_exits_zero_and_prints_coverage() {
    let o = orbitlab(&["verify", "coadjoint", "--seed", "7", "--coverage"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.starts_with("suite coadjoint seed 7\n"));
    assert!(text.contains("7 checks, 0 failed"));
    assert!(text.contains("coverage:"));
    assert!(text.contains("-> induction::induction.rho_identification"));
}

#[test]
fn failing_invariant_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "coarse.toml", "[manifold]\nn = 16\n");
    let o = orbitlab(&["verify", "coadjoint", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL coadjoint.alpha0_agreement"));
}

#[test]
fn config_errors_exit_two_with_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[manifold]\nn = 64\n\n[semiclassics]\nk_min = 6\nk_max = 4\n",
    );
    let o = orbitlab(&["verify", "group", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 6"), "{err}");
    assert!(err.contains("semiclassics.k_max"), "{err}");

    let cfg = write(dir.path(), "typo.toml", "[manifold]\nlenght = 3.0\n");
    let o = orbitlab(&["sweep", "haar", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let missing = dir.path().join("absent.toml");
    let o = orbitlab(&["verify", "group", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_names_exit_two() {
    assert_eq!(orbitlab(&["verify", "topology"]).status.code(), Some(2));
    assert_eq!(orbitlab(&["sweep", "entropy"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_reproducible_csv_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let out_s = out.to_str().unwrap();
    let o = orbitlab(&["sweep", "haar", "--out", out_s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read(out.join("haar.csv")).unwrap();
    let dat = fs::read(out.join("haar.dat")).unwrap();
    let text = String::from_utf8(csv.clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,value_re,value_im,target_re,target_im,abs_error");
    assert_eq!(lines.len(), 1 + 8 + 1);
    assert!(lines.last().unwrap().starts_with("fit,"));
    assert_eq!(String::from_utf8(dat.clone()).unwrap().lines().count(), 1 + 8);

    let again = orbitlab(&["sweep", "haar", "--out", out_s]);
    assert!(again.status.success());
    assert_eq!(fs::read(out.join("haar.csv")).unwrap(), csv);
    assert_eq!(fs::read(out.join("haar.dat")).unwrap(), dat);
}

#[test]
fn thread_override_is_validated() {
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_orbitlab"))
            .args(["verify", "coadjoint"])
            .env("ORBITLAB_THREADS", value)
            .output()
            .unwrap()
    };
    assert_eq!(run("2").status.code(), Some(0));
    assert_eq!(run("zero").status.code(), Some(2));
    assert_eq!(run("0").status.code(), Some(2));
}
