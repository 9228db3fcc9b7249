use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fpplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpplab")).args(args).output().unwrap()
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

const Z2_SMALL: &str = "[bundle]\nkind = \"lattice\"\ndim = 2\nhalf_width = 10\n\n[distribution]\nkind = \"exponential\"\nrate = 1.0\n\n[experiment]\nkind = \"midpoint\"\nseed = 1\ntrials = 40\nn_values = [2, 4]\nk_a = 1\n";

#[test]
fn tree_run_reports_certain_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("tree_midpoint.toml");
    let out = fpplab(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty());
    let csv = std::fs::read_to_string(dir.path().join("tree_midpoint.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,trial,crossed,touches_boundary,d_omega,hops,origin_distance"));
    assert!(lines.all(|l| l.split(',').nth(2) == Some("1")));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tree_midpoint.summary.json")).unwrap()).unwrap();
    for s in summary["result"]["scales"].as_array().unwrap() {
        assert_eq!(s["estimate"], 1.0);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tree_midpoint.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn reruns_are_byte_identical_and_seed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z2.toml", Z2_SMALL);
    let mut csvs = Vec::new();
    let mut hashes = Vec::new();
    for (k, extra) in [vec!["--threads", "1"], vec!["--threads", "2"], vec!["--seed", "99"]].iter().enumerate() {
        let out_dir = dir.path().join(format!("o{k}"));
        let mut args = vec!["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()];
        args.extend(extra.iter().copied());
        assert_eq!(fpplab(&args).status.code(), Some(0));
        csvs.push(std::fs::read(out_dir.join("z2.csv")).unwrap());
        let m: serde_json::Value = serde_json::from_slice(&std::fs::read(out_dir.join("z2.manifest.json")).unwrap()).unwrap();
        hashes.push(m["config_sha256"].as_str().unwrap().to_string());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_ne!(csvs[0], csvs[2]);
    assert_eq!(hashes[0], hashes[1]);
    assert_ne!(hashes[0], hashes[2]);
}

#[test]
fn infeasible_scale_exits_three_naming_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let body = Z2_SMALL.replace("n_values = [2, 4]\nk_a = 1", "n_values = [8]\nk_a = 3\nmargin = { additive = 0 }");
    let cfg = write(dir.path(), "far.toml", &body);
    let out = fpplab(&["run", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("n + K_A + margin = 8 + 3 + 0 exceeds safe_radius 10"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn config_errors_exit_two_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write(dir.path(), "typo.toml", &Z2_SMALL.replace("trials = 40", "trails = 40"));
    let out = fpplab(&["run", "--config", &typo]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("typo.toml:"), "{err}");

    let rate = write(dir.path(), "rate.toml", &Z2_SMALL.replace("rate = 1.0", "rate = -1.0"));
    let out = fpplab(&["run", "--config", &rate]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("rate.toml:6:"), "{err}");

    let json = write(dir.path(), "bad.json", "{\n  \"bundle\": {\"kind\": \"tree\",\n  \"degree\": 3 \"depth\": 2}\n}\n");
    let out = fpplab(&["run", "--config", &json]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("bad.json:3:"));
}

#[test]
fn unwritable_output_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z2.toml", Z2_SMALL);
    let blocker = write(dir.path(), "file", "");
    let out = fpplab(&["run", "--config", &cfg, "--out", &blocker]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn gen_output_reloads_as_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("t.edges");
    let out = fpplab(&["gen", "kind=tiling", "p=3", "q=7", "layers=3", "--out", edges.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let direct = String::from_utf8(fpplab(&["describe", "kind=tiling", "p=3", "q=7", "layers=3"]).stdout).unwrap();
    let reload = String::from_utf8(fpplab(&["describe", "kind=edge_list", &format!("path={}", edges.display())]).stdout).unwrap();
    let line = |s: &str, key: &str| s.lines().find(|l| l.starts_with(key)).unwrap().to_string();
    for key in ["vertices:", "edges:", "max_degree:", "geodesic_length:", "origin:"] {
        assert_eq!(line(&direct, key), line(&reload, key));
    }
}

#[test]
fn describe_matches_closed_forms() {
    let out = String::from_utf8(fpplab(&["describe", "kind=tree", "degree=3", "depth=8"]).stdout).unwrap();
    // 1 + 3 (2^8 - 1)
    assert!(out.contains("vertices: 766\n"));
    let out = String::from_utf8(fpplab(&["describe", "kind=lattice", "dim=2", "half_width=1"]).stdout).unwrap();
    assert!(out.contains("vertices: 9\nedges: 12\n"));
}

#[test]
fn every_shipped_config_parses() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let p = entry.unwrap().path();
        let (cfg, _) = fpplab::cli::load_config(&p).unwrap_or_else(|e| panic!("{}: {e:?}", p.display()));
        assert!(cfg.name.is_some());
    }
}
