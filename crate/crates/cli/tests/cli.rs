use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_crackfem");

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = "case = \"case1a\"\n\
[material]\nmu = 1.0\nlambda = 1.0\ngamma = 0.5\n\
[mesh]\nnx = 16\nny = 8\n";

fn crackfem(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

#[test]
fn run_writes_artifacts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = crackfem(
        &["--output-dir", out_dir.to_str().unwrap(), "--threads", "2", "run", cfg.to_str().unwrap()],
        &[],
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("converged"), "{stdout}");
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    for name in ["convergence.csv", "profile.csv", "opening.csv", "fields.vtk"] {
        assert!(manifest.contains(name), "{manifest}");
    }
    let sig = "case1a/a1_b1_s0.1";
    assert!(out_dir.join(sig).join("fields.vtk").exists());
}

#[test]
fn missing_required_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "case = \"case1a\"\n[material]\nlambda = 1.0\ngamma = 0.5\n");
    let out = crackfem(&["run", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("material.mu"), "{}", text(&out.stderr));
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}[mesh2]\nnx = 3\n"));
    let out = crackfem(&["mesh-info", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("mesh2.nx"), "{}", text(&out.stderr));
}

#[test]
fn mesh_info_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = crackfem(&["mesh-info", cfg.to_str().unwrap()], &[]);
    assert!(out.status.success());
    let s = text(&out.stdout);
    assert!(s.contains("153") && s.contains("128"), "{s}");
}

#[test]
fn environment_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = crackfem(&["mesh-info", cfg.to_str().unwrap()], &[("CRACKFEM_MESH__NX", "8")]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let s = text(&out.stdout);
    // 9 x 9 nodes, 64 elements
    assert!(s.contains("81") && s.contains("64"), "{s}");
}

#[test]
fn compare_loads_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "case = \"uniform_y\"\n[material]\nmu = 1.0\nlambda = 1.0\ngamma = 0.5\n\
         [mesh]\nnx = 16\nny = 8\n[compare]\nsigma_t = [0.001, 0.01]\n",
    );
    let out_dir = dir.path().join("cmp");
    let out = crackfem(&["--output-dir", out_dir.to_str().unwrap(), "compare-loads", cfg.to_str().unwrap()], &[]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let summary = fs::read_to_string(out_dir.join("compare_y").join("summary.csv")).unwrap();
    assert_eq!(summary, text(&out.stdout));
    assert_eq!(summary.lines().count(), 1 + 2 * 3);
    assert!(out_dir.join("compare_y").join("sigma_0.01.csv").exists());
}

#[test]
fn repeated_runs_give_identical_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}[sweep]\nbeta = [0.5, 2.0]\n"));
    let manifests: Vec<String> = ["a", "b"]
        .iter()
        .map(|d| {
            let out_dir = dir.path().join(d);
            let out = crackfem(&["--output-dir", out_dir.to_str().unwrap(), "run", cfg.to_str().unwrap()], &[]);
            assert!(out.status.success());
            fs::read_to_string(out_dir.join("manifest.txt")).unwrap()
        })
        .collect();
    assert_eq!(manifests[0], manifests[1]);
}

#[test]
fn unsettled_run_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}[picard]\nmax_iter = 1\ntol = 1e-30\n"));
    let out_dir = dir.path().join("o");
    let out = crackfem(&["--output-dir", out_dir.to_str().unwrap(), "run", cfg.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(fs::read_to_string(out_dir.join("manifest.txt")).unwrap().contains("status=max_iter"));
}
