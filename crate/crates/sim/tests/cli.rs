use std::path::PathBuf;
use std::process::{Command, Output};

use twrelay::config::load_config;

fn twrelay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twrelay")).args(args).output().unwrap()
}

fn shipped(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("twrelay-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn shipped_configs_load() {
    let region = load_config(&shipped("rate_region.conf")).unwrap();
    assert_eq!((region.num_sources, region.antennas, region.trials), (4, 8, 2000));
    let sum = load_config(&shipped("sumrate.conf")).unwrap();
    assert_eq!(sum.subgroups, Some(vec![1, 2, 4]));
    assert_eq!(sum.snr_db.as_ref().map(Vec::len), Some(13));
}

#[test]
fn bad_config_exits_2_and_names_the_key() {
    let text = std::fs::read_to_string(shipped("rate_region.conf")).unwrap().replace("rho = 0", "rho = 2");
    let path = scratch("bad.conf", &text);
    let out = twrelay(&["rate-region", "--config", path.to_str().unwrap(), "--trials", "1"]);
    let _ = std::fs::remove_file(&path);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rho"));
}

#[test]
fn missing_config_exits_2() {
    let out = twrelay(&["sumrate", "--config", "/nonexistent/twrelay.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn rate_region_csv_to_stdout() {
    let out = twrelay(&["rate-region", "--scheme", "mi", "--points", "3", "--trials", "2", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scheme,sweep_param,rate_pair1,rate_pair2,trials,stderr1,stderr2");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.starts_with("MI,")));
}

#[test]
fn sumrate_groups_flag() {
    let cfg = scratch(
        "small.conf",
        "K_T = 8\nM = 8\np_source_db = 10\np_relay_db = 10\nrho = 0\nseed = 1\ntrials = 3\nsnr_db = 0, 10\n",
    );
    let out = twrelay(&["sumrate", "--config", cfg.to_str().unwrap(), "--groups", "2,4"]);
    let _ = std::fs::remove_file(&cfg);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let ns: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(ns, ["2", "4", "best", "2", "4", "best"]);
}

#[test]
fn invalid_group_count_is_a_config_error() {
    let out = twrelay(&["sumrate", "--groups", "3", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
