#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn relattr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relattr"))
        .args(args)
        .output()
        .expect("spawn relattr")
}

pub fn ok(args: &[&str]) -> Output {
    let out = relattr(args);
    assert!(
        out.status.success(),
        "relattr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn code(args: &[&str]) -> i32 {
    relattr(args).status.code().expect("exit code")
}

/// Path as an owned-forever `&str`, so argument arrays can mix literals and
/// joined paths. Leaks a few bytes per call, which is fine in tests.
pub fn p(path: &Path) -> &'static str {
    Box::leak(path.to_str().unwrap().into())
}

/// Runs `synth` into `dir` and returns the config path.
pub fn synth(dir: &Path, extra: &[&str]) -> std::path::PathBuf {
    let mut args = vec!["synth", "--out", p(dir)];
    args.extend_from_slice(extra);
    ok(&args);
    dir.join("config.json")
}
