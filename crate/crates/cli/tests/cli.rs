use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn depthlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_depthlab"))
        .current_dir(dir)
        .env_remove("DEPTHLAB_CACHE")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

#[test]
fn census_then_depth() {
    let dir = tempfile::tempdir().unwrap();
    let out = depthlab(dir.path(), &["census", "-L", "6", "-t", "10", "-o", "c.jsonl"]);
    assert!(out.status.success());
    let summary = stdout_json(&out);
    assert_eq!(summary["count"], 6);
    assert_eq!(summary["kraft"], "13/64");
    let text = fs::read_to_string(dir.path().join("c.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 4);

    let out = depthlab(dir.path(), &["depth", "-c", "c.jsonl", "-x", "1", "-s", "0"]);
    assert!(out.status.success());
    let report = stdout_json(&out);
    assert_eq!(report["depth_hat"], 2);
    assert_eq!(report["k_hat"], 6);
    assert_eq!(report["q_hat"], "1/64");
}

#[test]
fn queries_build_from_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let kt = stdout_json(&depthlab(dir.path(), &["kt", "-L", "6", "-t", "10", "-x", ""]));
    assert_eq!(kt["k_t"], 3);
    let qt = stdout_json(&depthlab(dir.path(), &["qt", "-L", "6", "-t", "10", "-x", ""]));
    assert_eq!(qt["q_t"], "11/64");
    let missing = stdout_json(&depthlab(dir.path(), &["kt", "-L", "6", "-t", "10", "-x", "0101"]));
    assert_eq!(missing["k_t"], "none-found");
    // t = 2 * |x|^1 = 2 for x = "1".
    let per = stdout_json(&depthlab(dir.path(), &["depth", "-L", "6", "--per-output-length", "2,1", "-x", "1"]));
    assert_eq!(per["bounds"]["t"], 2);
    assert_eq!(per["depth_hat"], 2);
    let csv = depthlab(dir.path(), &["--format", "csv", "depth", "-L", "6", "-t", "10", "-x", "1"]);
    assert_eq!(
        String::from_utf8(csv.stdout).unwrap(),
        "x,k_hat,q_hat,s,depth_hat,witness\n1,6,1/64,0,2,010000\n"
    );
}

#[test]
fn cache_is_reused_and_repaired() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cache_arg = cache.to_str().unwrap();
    let args = ["--cache", cache_arg, "census", "-L", "6", "-t", "10", "-o", "a.jsonl"];
    assert_eq!(stdout_json(&depthlab(dir.path(), &args))["source"], "built");
    let cached = cache.join("UM-1/L6/t10/cap6.jsonl");
    assert!(cached.exists());

    let args_b = ["--cache", cache_arg, "census", "-L", "6", "-t", "10", "-o", "b.jsonl"];
    assert_eq!(stdout_json(&depthlab(dir.path(), &args_b))["source"], "cached");
    assert_eq!(
        fs::read(dir.path().join("a.jsonl")).unwrap(),
        fs::read(dir.path().join("b.jsonl")).unwrap()
    );

    let tampered = fs::read_to_string(&cached).unwrap().replace("\"steps\":2", "\"steps\":3");
    fs::write(&cached, tampered).unwrap();
    let out = depthlab(dir.path(), &args_b);
    assert!(out.status.success());
    assert_eq!(stdout_json(&out)["source"], "rebuilt");
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert_eq!(
        fs::read(&cached).unwrap(),
        fs::read(dir.path().join("a.jsonl")).unwrap()
    );
}

#[test]
fn cache_flag_beats_environment() {
    let dir = tempfile::tempdir().unwrap();
    let run = |flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_depthlab"));
        cmd.current_dir(dir.path()).env("DEPTHLAB_CACHE", "from-env");
        if let Some(f) = flag {
            cmd.args(["--cache", f]);
        }
        cmd.args(["census", "-L", "3", "-t", "5", "-o", "c.jsonl"]).output().unwrap()
    };
    assert!(run(None).status.success());
    assert!(dir.path().join("from-env/UM-1/L3/t5/cap3.jsonl").exists());
    assert!(run(Some("from-flag")).status.success());
    assert!(dir.path().join("from-flag/UM-1/L3/t5/cap3.jsonl").exists());
}

#[test]
fn output_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let one = depthlab(dir.path(), &["--workers", "1", "census", "-L", "12", "-t", "50"]);
    let four = depthlab(dir.path(), &["--workers", "4", "census", "-L", "12", "-t", "50"]);
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    let p1 = depthlab(dir.path(), &["--workers", "1", "--format", "csv", "proxy", "--corpus", "noise:4096:7", "--corpus", "structured:64:64"]);
    let p3 = depthlab(dir.path(), &["--workers", "3", "--format", "csv", "proxy", "--corpus", "noise:4096:7", "--corpus", "structured:64:64"]);
    assert_eq!(p1.stdout, p3.stdout);
    assert!(String::from_utf8_lossy(&p1.stdout).starts_with("name,n_bytes,compressed_bits,decode_steps,steps_per_output_byte\n"));
}

#[test]
fn verify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("honest.json"),
        r#"{"claim":{"kind":"output","p":"010000","x":"1","t":2}}"#,
    )
    .unwrap();
    let out = depthlab(dir.path(), &["verify", "--scenario", "honest.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["verdict"], "accept");

    // "011000" prints the empty string, so 6 bits is not minimal for it.
    fs::write(
        dir.path().join("false.json"),
        r#"{"claim":{"kind":"minimality","p":"011000","x":"","t":10}}"#,
    )
    .unwrap();
    let out = depthlab(dir.path(), &["verify", "--scenario", "false.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout_json(&out)["verdict"]["reject"].is_object());
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "reject");
}

#[test]
fn usage_and_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["census", "-L", "2", "-t", "10"],
        vec!["nonsense"],
        vec!["kt", "-L", "6", "-t", "10", "-x", "012"],
        vec!["kt", "-x", "1"],
        vec!["proxy", "--model", "1,2"],
        vec!["--workers", "0", "census", "-L", "3", "-t", "1"],
    ] {
        let out = depthlab(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"), "{args:?}");
    }
    fs::write(dir.path().join("bad.jsonl"), "garbage\n").unwrap();
    let out = depthlab(dir.path(), &["kt", "-c", "bad.jsonl", "-x", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "malformed-census");
}

#[test]
fn refute_and_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout_json(&depthlab(dir.path(), &["refute", "-x", "1", "--threshold", "3", "-L", "9", "-t", "50"]));
    assert_eq!(out["result"]["found"]["program"], "010000");
    let out = stdout_json(&depthlab(dir.path(), &["refute", "-x", "1", "--threshold", "2", "-L", "9", "-t", "50"]));
    assert_eq!(out["result"], "no_refutation_found");
    let out = depthlab(dir.path(), &["diagonal", "-n", "2", "-T", "4", "-L", "9", "-o", "cert.json"]);
    assert!(out.status.success());
    let cert: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("cert.json")).unwrap()).unwrap();
    assert_eq!(cert, stdout_json(&out));
    assert_eq!(cert["threshold"], "1/4");
}

#[test]
fn every_subcommand_has_help() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["census", "kt", "qt", "depth", "diagonal", "audit", "speedup", "verify", "refute", "proxy"] {
        let out = depthlab(dir.path(), &[sub, "--help"]);
        assert!(out.status.success(), "{sub}");
    }
    let out = depthlab(dir.path(), &["audit", "-L", "6", "-t", "10", "--transforms", "append0,reverse"]);
    let report = stdout_json(&out);
    assert_eq!(report["transform_set"], "depthlab-transforms/1");
    assert_eq!(report["rows"].as_array().unwrap().len(), 6);
    let out = depthlab(dir.path(), &["speedup", "-L", "6", "-t", "10", "-x", "1"]);
    let record = stdout_json(&out);
    assert_eq!(record["lookup_report"], record["enumeration_report"]);
    assert_eq!(record["lookup_cost"]["nanos"], 0);
}
