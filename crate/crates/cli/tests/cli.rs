use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CAT: &str = r#"
seeds = [1, 2]
[[maps]]
linear = [[2, 1], [1, 1]]
[exponents]
steps = 20000
expect_lambda_u = 0.9624236501192069
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn ergolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ergolab")).args(args).output().unwrap()
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    ergolab(&args)
}

fn run_dirs(out: &Path, cmd: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(out.join(cmd)).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exponents_pass_and_write_headed_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cat.toml", CAT);
    let o = run("exponents", &cfg, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("expected_lambda_u: PASS"));

    let dirs = run_dirs(tmp.path(), "exponents");
    assert_eq!(dirs.len(), 1);
    let csv = fs::read_to_string(dirs[0].join("exponents.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# config_hash=") && header.ends_with(" seeds=1;2"), "{header}");
    assert_eq!(lines.next(), Some("seed,lambda_u,lambda_s,stderr_u,mean_log_det,n_steps"));
    assert!(!csv.contains('\r'));

    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dirs[0].join("record.json")).unwrap()).unwrap();
    assert_eq!(record["experiment"], "exponents");
    assert_eq!(record["header"].as_str(), Some(&header[2..]));
    assert!(record["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn reruns_never_overwrite() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cat.toml", CAT);
    for _ in 0..2 {
        assert_eq!(run("exponents", &cfg, tmp.path(), &[]).status.code(), Some(0));
    }
    let dirs = run_dirs(tmp.path(), "exponents");
    assert_eq!(dirs.len(), 2);
    let a = fs::read_to_string(dirs[0].join("exponents.csv")).unwrap();
    let b = fs::read_to_string(dirs[1].join("exponents.csv")).unwrap();
    assert_eq!(a, b, "same config and seeds give identical output");
}

#[test]
fn seeds_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cat.toml", CAT);
    let o = run("exponents", &cfg, tmp.path(), &["--seeds", "7,8,9", "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let dir = &run_dirs(tmp.path(), "exponents")[0];
    let csv = fs::read_to_string(dir.join("exponents.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with("seeds=7;8;9"));
    assert_eq!(csv.lines().count(), 2 + 3 + 1);
}

#[test]
fn failed_check_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cat.toml", &CAT.replace("0.9624236501192069", "0.5"));
    let o = run("exponents", &cfg, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("expected_lambda_u: FAIL"));
    assert!(run_dirs(tmp.path(), "exponents")[0].join("record.json").exists());
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let unknown = write(tmp.path(), "unknown.toml", &format!("{CAT}\nbogus = 1\n"));
    let singular = write(tmp.path(), "singular.toml", "[[maps]]\nlinear = [[1, 1], [1, 1]]\n");
    let empty = write(tmp.path(), "empty.toml", "seeds = [1]\n");
    let no_seeds = write(tmp.path(), "noseeds.toml", &CAT.replace("seeds = [1, 2]", "seeds = []"));
    for (cfg, what) in [(&unknown, "bogus"), (&singular, "map 0"), (&empty, "maps"), (&no_seeds, "seed")] {
        let o = run("exponents", cfg, tmp.path(), &[]);
        assert_eq!(o.status.code(), Some(2), "{}", cfg.display());
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(what), "{err}");
    }
    let o = run("exponents", &tmp.path().join("missing.toml"), tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mixed_cocycle_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "mixed.toml", "[mixed_cocycle]\nt = [0.0, 0.3, 0.5, 1.0]\nsteps = 50000\n");
    let o = run("mixed-cocycle", &cfg, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let dir = &run_dirs(tmp.path(), "mixed-cocycle")[0];
    let csv = fs::read_to_string(dir.join("mixed_cocycle.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 4);
    assert!(fs::read_to_string(dir.join("mixed_cocycle.svg")).unwrap().starts_with("<!-- config_hash="));
}

#[test]
fn dimension_sources() {
    let tmp = tempfile::tempdir().unwrap();
    for (source, expect) in [("uniform", 1.0), ("cantor", 0.6309), ("point", 0.0)] {
        let cfg = write(
            tmp.path(),
            &format!("{source}.toml"),
            &format!("[dimension]\nsource = \"{source}\"\nsamples = 5000\nexpect = {expect}\ntolerance = 0.06\n"),
        );
        let o = run("dimension", &cfg, tmp.path(), &[]);
        assert_eq!(o.status.code(), Some(0), "{source}: {}", stdout(&o));
    }
    assert_eq!(run_dirs(tmp.path(), "dimension").len(), 3);
}

#[test]
fn cones_report_certificate_or_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let ab = write(
        tmp.path(),
        "ab.toml",
        "[[maps]]\nlinear = [[2, 1], [1, 1]]\n[[maps]]\nlinear = [[1, 1], [1, 2]]\n[cones]\nexpect = \"certificate\"\n",
    );
    let inv = write(
        tmp.path(),
        "inv.toml",
        "[[maps]]\nlinear = [[2, 1], [1, 1]]\n[[maps]]\nlinear = [[1, -1], [-1, 2]]\n[cones]\nexpect = \"failure\"\n",
    );
    for cfg in [&ab, &inv] {
        let o = run("cones", cfg, tmp.path(), &[]);
        assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    }
    let dirs = run_dirs(tmp.path(), "cones");
    let names: Vec<bool> = dirs.iter().map(|d| d.join("certificate.json").exists()).collect();
    assert_eq!(names.iter().filter(|&&b| b).count(), 1);
    assert!(dirs.iter().any(|d| d.join("failure.json").exists()));
}

#[test]
fn stopping_times_for_the_cat_map() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cat.toml", "[[maps]]\nlinear = [[2, 1], [1, 1]]\n[stopping_times]\ndeltas = [1e-1, 1e-3, 1e-6]\nm_max = 60\nj_max = 200\nexponent_steps = 20000\n");
    let o = run("stopping-times", &cfg, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("closed_form: PASS"));
}

#[test]
fn trichotomy_of_commuting_maps_is_atomic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "comm.toml",
        "start_rational = [1, 2, 5]\n[[maps]]\nlinear = [[2, 1], [1, 1]]\n[[maps]]\nlinear = [[5, 3], [3, 2]]\n[trichotomy]\nsamples = 20000\nexponent_steps = 20000\nexpect = \"Atomic\"\n",
    );
    let o = run("trichotomy", &cfg, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let dir = &run_dirs(tmp.path(), "trichotomy")[0];
    for f in ["verdict.json", "fourier.csv", "atoms.csv", "fourier.svg", "samples.svg", "record.json"] {
        assert!(dir.join(f).exists(), "{f}");
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let tmp = tempfile::tempdir().unwrap();
    let mut n = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        // cones is quick and exercises parsing and validation for every file
        let o = run("cones", &p, tmp.path(), &[]);
        let code = o.status.code();
        let has_maps = fs::read_to_string(&p).unwrap().contains("[[maps]]");
        assert_eq!(code, Some(if has_maps { 0 } else { 2 }), "{}: {}", p.display(), String::from_utf8_lossy(&o.stderr));
        n += 1;
    }
    assert!(n >= 5);
}
