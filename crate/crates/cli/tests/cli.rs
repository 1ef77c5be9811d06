//! End-to-end behaviour of the `dxray` binary.

use std::path::Path;
use std::process::{Command, Output};

fn dxray(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dxray"));
    cmd.args(args).env_remove("XRAY_CACHE_DIR");
    if let Some(dir) = cache {
        cmd.env("XRAY_CACHE_DIR", dir);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn exit_codes() {
    let ok = dxray(&["eval", "zeta", "2+0i"], None);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("1.64493406685E0"), "{}", stdout(&ok));

    let pole = dxray(&["eval", "zeta", "1+0i"], None);
    assert_eq!(pole.status.code(), Some(1));

    assert_eq!(dxray(&["eval", "nosuch", "2"], None).status.code(), Some(2));
    assert_eq!(dxray(&["zeros", "zeta", "--region", "1,0,0,1"], None).status.code(), Some(2));
    assert_eq!(dxray(&["frobnicate"], None).status.code(), Some(2));
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = dxray(&["zeros", "dh", "--region", "0,1,60,200", "--tol", "1e-9", "--dump-config"], None);
    assert_eq!(first.status.code(), Some(0));
    let dump = stdout(&first);
    assert!(dump.contains("region=0,1,60,200\n") && dump.contains("tol=1e-9\n"), "{dump}");
    let file = dir.path().join("run.cfg");
    std::fs::write(&file, &dump).unwrap();
    let again = dxray(&["zeros", "--config", file.to_str().unwrap(), "--dump-config"], None);
    assert_eq!(stdout(&again), dump);
}

#[test]
fn cache_hit_is_byte_identical() {
    let cache = tempfile::tempdir().unwrap();
    let args = ["zeros", "zeta", "--region", "0,1,10,30"];
    let cold = dxray(&args, Some(cache.path()));
    assert_eq!(cold.status.code(), Some(0));
    assert_eq!(std::fs::read_dir(cache.path()).unwrap().count(), 1);
    let warm = dxray(&args, Some(cache.path()));
    assert_eq!(warm.stdout, cold.stdout);
    assert_eq!(warm.status.code(), Some(0));
    let uncached = dxray(&args, None);
    assert_eq!(uncached.stdout, cold.stdout);
}

#[test]
fn zeta_zeros_csv() {
    let out = stdout(&dxray(&["zeros", "zeta", "--region", "0,1,10,30"], None));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "function,sigma,t,residual,multiplicity,on_line,pair_id");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("zeta,5.00000000000E-1,1.41347251417E1,"), "{}", lines[1]);
    assert!(lines.iter().skip(1).all(|l| l.contains(",1,true,")));
}

#[test]
fn empty_region_prints_header_only() {
    let out = dxray(&["zeros", "zeta", "--region", "2,3,1,2"], None);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "function,sigma,t,residual,multiplicity,on_line,pair_id\n");
}

#[test]
fn xray_writes_svg_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();
    let out = dxray(&["xray", "zeta", "--window", "2,3,1,2", "--out-dir", out_dir], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("xray.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let csv = std::fs::read_to_string(dir.path().join("xray.csv")).unwrap();
    assert!(csv.starts_with("component_id,kind,classification,idx,sigma,t,re_f,im_f\n"));
}

#[test]
fn ratio_trace_on_the_line() {
    let out = dxray(&["ratio-trace", "--sigma", "0.5", "--t", "14"], None);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("PASS"));
}
