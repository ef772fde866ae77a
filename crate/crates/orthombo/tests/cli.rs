use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_orthombo");

fn orthombo(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut c = Command::new(BIN);
    c.args(args).env_remove("MBO_THREADS");
    for (k, v) in env {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn tables_report_mismatches() {
    let o = orthombo(&["tables"], &[]);
    assert_eq!(o.status.code(), Some(3));
    let s = stdout(&o);
    assert!(s.contains("entries match"), "{s}");
    assert!(s.contains("mismatch"), "{s}");
}

#[test]
fn constant_field_converges_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.conf",
        "scenario.name = torus_disk_n1(0)\ngrid.size = 32\n",
    );
    let o = orthombo(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("iterations=1 converged=true"), "{s}");
    assert!(s.contains("state=constant"), "{s}");
    for f in ["config.txt", "energy.csv", "summary.txt", "final.mbof", "snapshot_00000.mbof"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let csv = fs::read_to_string(out.join("energy.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
}

#[test]
fn iteration_cap_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.conf",
        &format!(
            "scenario.name = torus_star_defect\ngrid.size = 32\nrun.max_iters = 2\noutput.dir = {}\n",
            dir.path().join("o").display()
        ),
    );
    let o = orthombo(&["run", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("iterations=2 converged=false"));
}

#[test]
fn bad_inputs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.conf");
    let o = orthombo(&["run", "--config", missing.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let cfg = write_config(dir.path(), "b.conf", "scenario.name = torus_star_defect\nrun.tau = -1\n");
    let o = orthombo(&["run", "--config", &cfg], &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let cfg = write_config(dir.path(), "g.conf", "scenario.name = torus_star_defect\ngrid.size = 32\n");
    let o = orthombo(&["run", "--config", &cfg], &[("MBO_THREADS", "many")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_validates_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "c.conf",
        "scenario.name = torus_winding(1)\ngrid.size = 32\nrun.max_iters = 3\n",
    );
    orthombo(&["run", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    let snap = out.join("snapshot_00000.mbof");
    let o = orthombo(&["check", snap.to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("grid [32, 32]") && s.contains("winding=(0,1)"), "{s}");

    let mut bytes = fs::read(&snap).unwrap();
    bytes[0] = b'X';
    let bad = dir.path().join("bad.mbof");
    fs::write(&bad, &bytes).unwrap();
    assert_eq!(orthombo(&["check", bad.to_str().unwrap()], &[]).status.code(), Some(1));

    let mut bytes = fs::read(&snap).unwrap();
    let last = bytes.len() - 8;
    bytes[last..].copy_from_slice(&3.0f64.to_le_bytes());
    fs::write(&bad, &bytes).unwrap();
    assert_eq!(orthombo(&["check", bad.to_str().unwrap()], &[]).status.code(), Some(1));
}

#[test]
fn output_independent_of_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.conf",
        "scenario.name = torus_star_defect\ngrid.size = 64\nrun.max_iters = 15\noutput.snapshot_every = 5\n",
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    orthombo(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"], &[]);
    orthombo(&["run", "--config", &cfg, "--out", b.to_str().unwrap()], &[("MBO_THREADS", "3")]);
    for f in ["snapshot_00005.mbof", "snapshot_00010.mbof", "final.mbof", "energy.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}
