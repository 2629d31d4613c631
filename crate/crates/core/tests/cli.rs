use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use magheat::cli_io::{read_snapshot, DIAGNOSTICS_COLUMNS};
use magheat::grid::{BoxFace, StaggeredGrid};

const SMALL: &str = "[domain]\nnx = 2\nny = 2\nnz = 2\n[time]\nt_final = 0.1\ntau = 0.025\n";

fn magheat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_magheat")).args(args).output().unwrap()
}

fn write_cfg(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, format!("{SMALL}{extra}")).unwrap();
    p
}

fn run_in(cmd: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    magheat(&args)
}

#[test]
fn unknown_subcommand_prints_usage() {
    let o = magheat(&["simulate", "--config", "x.cfg"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_rejected() {
    let o = magheat(&["run", "--config", "x.cfg", "--verbose"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = run_in("run", &tmp.path().join("absent.cfg"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn invalid_config_names_module_and_writes_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "bad.cfg", "[model]\nlambda0 = 0.0\n");
    let out = tmp.path().join("out");
    let o = run_in("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("lambda0"), "{err}");
    assert!(err.starts_with("error ["), "{err}");
    assert!(!out.exists());
}

#[test]
fn zero_initial_field_gives_zero_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "zero.cfg",
        "[model]\nB0_preset = { kind = \"zero\" }\n[output]\nsnapshot_times = [0.0, 0.1]\n",
    );
    let out = tmp.path().join("out");
    let o = run_in("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0));
    let mut reader = csv::Reader::from_path(out.join("diagnostics.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, DIAGNOSTICS_COLUMNS);
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        rows += 1;
        for (name, v) in header.iter().zip(rec.iter()).skip(2) {
            assert_eq!(v.parse::<f64>().unwrap(), 0.0, "column {name}");
        }
    }
    assert_eq!(rows, 4);

    let g = StaggeredGrid::build([1.0; 3], [2; 3], &[BoxFace::ZMinus]).unwrap();
    let snaps: Vec<PathBuf> = {
        let mut v: Vec<PathBuf> = fs::read_dir(&out)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "txt"))
            .collect();
        v.sort();
        v
    };
    assert_eq!(snaps.len(), 2);
    for p in snaps {
        let s = read_snapshot(&p).unwrap();
        assert_eq!(s.node_count, g.node_count());
        assert_eq!(s.b.len(), g.edge_count());
        assert_eq!(s.xi.len(), g.node_count());
        assert!(s.b.iter().chain(s.xi.iter()).all(|&v| v == 0.0));
    }
}

#[test]
fn verify_with_same_seed_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "v.cfg", "[study]\ntrials = 10\n");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let oa = run_in("verify", &cfg, &a, &["--seed", "7"]);
    let ob = run_in("verify", &cfg, &b, &["--seed", "7"]);
    assert_eq!(oa.status.code(), ob.status.code());
    assert_eq!(oa.stdout, ob.stdout);
    let ta = fs::read(a.join("certification.txt")).unwrap();
    assert_eq!(ta, fs::read(b.join("certification.txt")).unwrap());
    assert!(String::from_utf8_lossy(&ta).contains("lemma_id = monotone_psi"));
    let c = tmp.path().join("c");
    run_in("verify", &cfg, &c, &["--seed", "8"]);
    assert_ne!(ta, fs::read(c.join("certification.txt")).unwrap());
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "d.cfg", "");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run_in("run", &cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run_in("run", &cfg, &b, &[]).status.code(), Some(0));
    assert_eq!(
        fs::read(a.join("diagnostics.csv")).unwrap(),
        fs::read(b.join("diagnostics.csv")).unwrap()
    );
}

#[test]
fn mms_exit_code_reflects_bands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(tmp.path(), "m.cfg", "[model]\nlambda0 = 1.0\nlambda1 = 0.5\n");
    let out = tmp.path().join("out");
    let o = run_in("mms", &cfg, &out, &[]);
    let table = fs::read_to_string(out.join("mms_orders.csv")).unwrap();
    assert!(table.lines().count() > 1);
    let manifest = magheat::cli_io::parse_config(&cfg).unwrap();
    let report = magheat::rothe::mms_verify(
        &manifest.grid().unwrap(),
        &manifest.model_config(),
        manifest.study.manufactured,
    )
    .unwrap();
    assert_eq!(o.status.code(), Some(if report.pass { 0 } else { 4 }));
}
