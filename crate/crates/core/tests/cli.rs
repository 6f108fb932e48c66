use std::path::Path;
use std::process::{Command, Output};

fn vemlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vemlab")).args(args).output().expect("vemlab should start")
}

fn ok(args: &[&str]) -> String {
    let out = vemlab(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Data rows of a CSV as field vectors, comments and header stripped.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(csv: &str, name: &str) -> usize {
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    header.split(',').position(|c| c == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn gen_square(dir: &Path, n: u32) -> String {
    let path = dir.join(format!("square{n}.json"));
    ok(&["mesh", "gen", "--kind", "square", "--n", &n.to_string(), "--out", path.to_str().unwrap()]);
    path.to_str().unwrap().to_string()
}

#[test]
fn mesh_gen_writes_meshes_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen_square(dir.path(), 2);
    let mesh = polyvem::mesh::read_mesh(Path::new(&path)).unwrap();
    assert_eq!(mesh.n_cells(), 4);
    assert!(Path::new(&format!("{path}.config.json")).exists());

    let json = ok(&["mesh", "gen", "--kind", "collapse", "--eps", "0.01"]);
    assert_eq!(polyvem::mesh::mesh_from_json(&json).unwrap().n_cells(), 1);
}

#[test]
fn invalid_arguments_exit_2() {
    assert_eq!(vemlab(&["mesh", "gen", "--kind", "square", "--n", "0"]).status.code(), Some(2));
    assert_eq!(vemlab(&["mesh", "gen", "--kind", "collapse", "--eps", "2"]).status.code(), Some(2));
    assert_eq!(vemlab(&["solve", "--mesh", "/nonexistent.json", "--p", "1"]).status.code(), Some(2));
    assert_eq!(vemlab(&["converge", "--p", "1", "--space", "bogus"]).status.code(), Some(2));
    assert_eq!(vemlab(&[]).status.code(), Some(2));
}

#[test]
fn solve_reproduces_linear_solution_and_converges() {
    let dir = tempfile::tempdir().unwrap();
    let m4 = gen_square(dir.path(), 4);
    let m8 = gen_square(dir.path(), 8);

    let csv = ok(&["solve", "--mesh", &m4, "--p", "1", "--mms", "poly:1"]);
    let err = column(&csv, "err_h1_proj");
    assert!(rows(&csv)[0][err].parse::<f64>().unwrap() <= 1e-8);

    let coarse = ok(&["solve", "--mesh", &m4, "--p", "2", "--stab", "proj"]);
    let fine = ok(&["solve", "--mesh", &m8, "--p", "2", "--stab", "proj"]);
    let e = |csv: &str| rows(csv)[0][err].parse::<f64>().unwrap();
    assert!(e(&fine) < e(&coarse) / 3.0);
}

#[test]
fn header_records_the_configuration_and_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = gen_square(dir.path(), 4);
    let out = dir.path().join("a.csv");
    let summary = dir.path().join("s.json");
    let mut runs = Vec::new();
    for _ in 0..2 {
        ok(&["solve", "--mesh", &mesh, "--p", "2", "--space", "nonconf", "--out", out.to_str().unwrap(),
            "--summary", summary.to_str().unwrap()]);
        runs.push(std::fs::read(&out).unwrap());
    }
    let a = runs.pop().unwrap();
    assert_eq!(a, runs[0]);

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# vemlab v"));
    let config = lines.next().unwrap().strip_prefix("# config: ").unwrap();
    let value: serde_json::Value = serde_json::from_str(config).unwrap();
    assert_eq!(value["command"], "solve");
    assert_eq!(value["p"], 2);
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(&summary).unwrap()).unwrap();
    assert!(summary.is_object());
}

#[test]
fn config_replay_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("conv.csv");
    ok(&["converge", "--p", "1", "--levels", "2", "--solver", "direct", "--out", out.to_str().unwrap()]);
    let first = std::fs::read_to_string(&out).unwrap();
    let config = dir.path().join("run.json");
    std::fs::write(&config, first.lines().nth(1).unwrap().strip_prefix("# config: ").unwrap()).unwrap();
    std::fs::remove_file(&out).unwrap();

    ok(&["--config", config.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), first);
    assert_eq!(vemlab(&["--config", config.to_str().unwrap(), "converge", "--p", "1"]).status.code(), Some(2));
}

#[test]
fn converge_rates_match_degree() {
    for (p, lo, hi) in [("1", 0.85, 1.15), ("2", 1.8, 2.2)] {
        let csv = ok(&["converge", "--p", p, "--levels", "3"]);
        let rate = column(&csv, "rate");
        let last = rows(&csv).last().unwrap()[rate].parse::<f64>().unwrap();
        assert!((lo..=hi).contains(&last), "p = {p}: rate {last}");
    }
}

#[test]
fn stability_sweeps_run() {
    let h = ok(&["stab", "--sweep", "h", "--p", "1", "--h-levels", "2", "--oracle-level", "2"]);
    assert_eq!(rows(&h).len(), 2);
    let p = ok(&["stab", "--sweep", "p", "--pmax", "3", "--geom", "pentagon", "--oracle-level", "2"]);
    assert_eq!(rows(&p).len(), 3);
    let c = ok(&["stab", "--sweep", "collapse", "--eps-min", "1e-2", "--stab", "proj", "--oracle-level", "2"]);
    let ratio = column(&c, "ratio");
    for row in rows(&c) {
        let r: f64 = row[ratio].parse().unwrap();
        assert!(r >= 1.0 && r.is_finite());
    }
}

#[test]
fn interpolation_checks_pass() {
    for args in [
        ["--p", "2", "--v", "poly:2", "--geom", "pentagon"],
        ["--p", "1", "--v", "exp", "--geom", "collapse:0.1"],
        ["--p", "2", "--v", "sinsin", "--geom", "hexagon:3"],
    ] {
        let mut all = vec!["interp", "--oracle-level", "3"];
        all.extend(args);
        let csv = ok(&all);
        let pass = column(&csv, "pass");
        assert!(rows(&csv).iter().all(|r| r[pass] == "true"), "{args:?}\n{csv}");
    }
}
