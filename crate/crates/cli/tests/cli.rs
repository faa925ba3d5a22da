use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wfk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wfk")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn rerun_from_manifest_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&wfk(d, &["run", "--out", "first", "--noise", "0.025", "--seed", "11"]));
    ok(&wfk(d, &["run", "--config", "first/manifest.cfg", "--out", "second"]));
    let mut names: Vec<_> = fs::read_dir(d.join("first")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for required in [
        "kspace.ksp",
        "surfels.csv",
        "curves.csv",
        "curves.svg",
        "manifest.cfg",
        "phantom.cfg",
        "edge_01.pgm",
        "edge_16.pgm.scale",
    ] {
        assert!(names.iter().any(|n| n == required), "missing {required}");
    }
    for n in &names {
        let a = fs::read(d.join("first").join(n)).unwrap();
        let b = fs::read(d.join("second").join(n)).unwrap();
        assert!(a == b, "{n:?} differs between runs");
    }
}

#[test]
fn missing_input_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = wfk(d, &["run", "--set", "phantom=absent.cfg", "--out", "never"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.cfg"));
    assert!(!d.join("never").exists());

    let out = wfk(d, &["run", "--set", "ksp=absent.ksp", "--out", "never"]);
    assert!(!out.status.success());
    assert!(!d.join("never").exists());

    let out = wfk(d, &["run", "--set", "m=6", "--set", "alpha=0.9", "--out", "never"]);
    assert!(!out.status.success());
    assert!(!d.join("never").exists());
}

#[test]
fn stepwise_commands_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(&wfk(d, &["phantom", "--m", "6", "--out", "p.ksp", "--emit-config", "scene.cfg"]));
    assert!(fs::read_to_string(d.join("scene.cfg")).unwrap().contains("ellipse"));
    ok(&wfk(d, &["noise", "--in", "p.ksp", "--level", "0.05", "--seed", "2", "--out", "n.ksp"]));
    assert_eq!(fs::metadata(d.join("p.ksp")).unwrap().len(), fs::metadata(d.join("n.ksp")).unwrap().len());
    ok(&wfk(d, &["filter", "--in", "p.ksp", "--theta", "pi/4", "--out", "f.pgm"]));
    assert!(fs::read(d.join("f.pgm")).unwrap().starts_with(b"P5\n64 64\n65535\n"));
    assert!(d.join("f.pgm.scale").exists());
    ok(&wfk(d, &["extract", "--in", "p.ksp", "--out", "s.csv"]));
    let surfels = fs::read_to_string(d.join("s.csv")).unwrap();
    assert!(surfels.starts_with("x,y,theta,strength\n") && surfels.lines().count() > 100);
    ok(&wfk(d, &["segment", "--in", "p.ksp", "--out", "c.csv", "--svg", "c.svg"]));
    assert!(fs::read_to_string(d.join("c.csv")).unwrap().starts_with("curve_id,seq,x,y\n"));
    assert!(fs::read_to_string(d.join("c.svg")).unwrap().contains("<polyline"));
}

#[test]
fn constants_report_and_thread_cap() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out =
        Command::new(env!("CARGO_BIN_EXE_wfk")).current_dir(d).env("WFK_THREADS", "1").args(["constants"]).output().unwrap();
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("C_geo") && text.contains("second term printed"));

    fs::write(d.join("sq.cfg"), "polyline 1 0.25 0.25 0.75 0.25 0.75 0.75 0.25 0.75\n").unwrap();
    let out = wfk(d, &["constants", "--set", "phantom=sq.cfg"]);
    ok(&out);
    assert!(String::from_utf8(out.stdout).unwrap().contains("square regime"));
}
