use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_hstrip");

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/default.json")
}

fn hstrip(args: &[&str], out: &Path) -> Output {
    Command::new(BIN).args(args).arg("--out").arg(out).env_remove("HSTRIP_OUT").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// A small K₂ run config next to a copy of the shipped graph file.
fn small_config(dir: &Path, extra: &str) -> PathBuf {
    fs::copy(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/k2.json"), dir.join("k2.json")).unwrap();
    let cfg = format!(
        r#"{{
  "seed": 11,
  "graph": "k2.json",
  "lo": -2,
  "hi": 4,
  "sampler": {{ "burn_in": 200, "samples": 400, "chains": 2 }},
  "decay": {{ "ls": [1, 2, 3] }},
  "vrjp": {{ "mixing_runs": 2000, "localization_lo": -20, "localization_hi": 20,
             "localization_steps": 2000, "localization_runs": 400 }}{extra}
}}"#
    );
    let path = dir.join("run.json");
    fs::write(&path, cfg).unwrap();
    path
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn verify_passes_on_default_config() {
    let out = tempfile::tempdir().unwrap();
    let o = hstrip(&["verify", "--config", default_config().to_str().unwrap()], out.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.path().join("verify/verify.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["checks"].as_array().unwrap().len() >= 15);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.path().join("verify/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["files"][0]["name"], "verify.json");
}

#[test]
fn non_positive_beta_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let graph = fs::read_to_string(dir.path().join("k2.json")).unwrap().replace("\"beta_vertical\": [1.0]", "\"beta_vertical\": [-0.5]");
    fs::write(dir.path().join("k2.json"), graph).unwrap();
    let o = hstrip(&["decay", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("beta_vertical"), "{}", stderr(&o));
}

#[test]
fn config_diagnostics_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let cfg = small_config(dir.path(), ",\n  \"sampler_typo\": 1");
    let o = hstrip(&["codec", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sampler_typo"), "{}", stderr(&o));

    let path = dir.path().join("broken.json");
    fs::write(&path, "{\n  \"seed\": 1,\n  \"graph\": \"k2.json\"\n  \"lo\": 0\n}").unwrap();
    let o = hstrip(&["codec", "--config", path.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.json:4:"), "{}", stderr(&o));

    fs::write(&path, r#"{ "graph": "k2.json", "lo": 0, "hi": 1 }"#).unwrap();
    let o = hstrip(&["codec", "--config", path.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));

    fs::write(&path, r#"{ "seed": 1, "graph": "missing.json", "lo": 0, "hi": 1 }"#).unwrap();
    let o = hstrip(&["codec", "--config", path.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.json"), "{}", stderr(&o));

    let cfg = small_config(dir.path(), ",\n  \"deformation\": { \"alpha\": 0.0, \"eta\": -1.0, \"c9\": 0.1 }");
    let o = hstrip(&["codec", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("eta"), "{}", stderr(&o));
}

#[test]
fn same_seed_gives_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let cfg = cfg.to_str().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for cmd in ["decay", "codec"] {
        assert!(hstrip(&[cmd, "--config", cfg], &a).status.success());
        assert!(hstrip(&[cmd, "--config", cfg], &b).status.success());
        let (fa, fb) = (read_dir_sorted(&a.join(cmd)), read_dir_sorted(&b.join(cmd)));
        assert!(fa.iter().any(|(n, _)| n.ends_with(".csv")));
        assert_eq!(fa, fb, "{cmd}");
    }
    let header = fs::read_to_string(a.join("decay/decay.csv")).unwrap();
    assert!(header.starts_with("l,estimate,stderr,n_eff\n"));
    assert_eq!(header.lines().count(), 4);

    let c = dir.path().join("c");
    assert!(hstrip(&["decay", "--config", cfg, "--seed", "12"], &c).status.success());
    assert_ne!(fs::read(a.join("decay/decay.csv")).unwrap(), fs::read(c.join("decay/decay.csv")).unwrap());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(c.join("decay/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 12);
}

#[test]
fn vrjp_flags_and_output_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "");
    let env_out = dir.path().join("env_out");
    let run = || {
        Command::new(BIN)
            .args(["vrjp", "--config", cfg.to_str().unwrap(), "--horizon", "5", "--runs", "7", "--tmax", "2"])
            .env("HSTRIP_OUT", &env_out)
            .output()
            .unwrap()
    };
    let o = run();
    assert!(o.status.success(), "{}", stderr(&o));
    let first = read_dir_sorted(&env_out.join("vrjp"));
    let traj = fs::read_to_string(env_out.join("vrjp/trajectories.csv")).unwrap();
    assert_eq!(traj.lines().count(), 8);
    let mixing: serde_json::Value = serde_json::from_slice(&fs::read(env_out.join("vrjp/mixing.json")).unwrap()).unwrap();
    assert_eq!(mixing["t_max"], 2);
    assert_eq!(mixing["paths"].as_array().unwrap().len(), 3);
    assert!(run().status.success());
    assert_eq!(read_dir_sorted(&env_out.join("vrjp")), first);

    let o = Command::new(BIN).args(["vrjp", "--config", cfg.to_str().unwrap(), "--horizon", "0"]).env("HSTRIP_OUT", &env_out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectrum_reports_perron_data() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/single_vertex.json"), dir.path().join("g.json")).unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{ "seed": 3, "graph": "g.json", "lo": -2, "hi": 4 }"#).unwrap();
    let o = hstrip(&["spectrum", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert!(o.status.success(), "{}", stderr(&o));
    let s: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("out/spectrum/spectrum.json")).unwrap()).unwrap();
    // Single-vertex base: λ = 2K₀(1)e/√(2π).
    assert!((s["lambda"].as_f64().unwrap() - 0.913_149).abs() < 1e-5, "{s}");
    assert!(s["c4"].as_f64().unwrap() > 0.0);
    let energy = fs::read_to_string(dir.path().join("out/spectrum/energy.csv")).unwrap();
    assert!(energy.starts_with("l,alpha,energy,c4,rest\n"));
}
