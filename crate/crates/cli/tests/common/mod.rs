//! Golden-case manifest shared by the golden and acceptance targets.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub struct Case {
    pub config: &'static str,
    pub command: &'static str,
    pub format: &'static str,
    pub exit: i32,
}

const fn case(config: &'static str, command: &'static str, format: &'static str, exit: i32) -> Case {
    Case {
        config,
        command,
        format,
        exit,
    }
}

pub const CASES: &[Case] = &[
    case("eval_half", "eval", "table", 0),
    case("eval_grid", "eval", "csv", 0),
    case("admissibility_ok", "admissibility", "json", 0),
    case("admissibility_violated", "admissibility", "table", 0),
    case("integrate_convergent", "integrate", "json", 0),
    case("integrate_divergent", "integrate", "table", 2),
    case("integrate_damped_tail", "integrate", "table", 3),
    case("mass_divergent", "mass", "csv", 2),
    case("norm_gaussian", "norm", "csv", 0),
    case("norm_sampled", "norm", "json", 0),
    case("hsnorm_gaussian", "hsnorm", "table", 0),
    case("hsnorm_divergent", "hsnorm", "json", 2),
    case("spectrum_small", "spectrum", "csv", 0),
    case("gap_gamma4", "gap", "table", 0),
    case("flow_short", "flow", "csv", 0),
    case("ricci_lambda2", "ricci", "table", 0),
    case("partition_refused", "partition", "table", 2),
    case("partition_damped", "partition", "json", 0),
    case("unknown_key", "eval", "table", 1),
    case("bad_value", "eval", "table", 1),
    case("report_default", "report", "json", 0),
];

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omega"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn run_case(c: &Case, out_dir: Option<&Path>) -> Output {
    let config = golden_dir().join(format!("{}.toml", c.config));
    let config = config.to_str().unwrap();
    let mut args = vec![c.command, "--config", config, "--format", c.format, "--seed", "7"];
    let out_str;
    if let Some(d) = out_dir {
        out_str = d.to_str().unwrap().to_string();
        args.extend(["--out", &out_str]);
    }
    run(&args)
}

/// Absolute paths differ between checkouts, so they are masked in stderr.
pub fn normalize(stderr: &[u8]) -> String {
    String::from_utf8_lossy(stderr).replace(golden_dir().to_str().unwrap(), "<golden>")
}

pub fn stdout_path(c: &Case) -> PathBuf {
    golden_dir().join(format!("{}.{}.out", c.config, c.format))
}

pub fn stderr_path(c: &Case) -> PathBuf {
    golden_dir().join(format!("{}.stderr", c.config))
}

/// Differences between one run of `c` and its checked-in files.
pub fn diff_case(c: &Case) -> Vec<String> {
    let out = run_case(c, None);
    let code = out.status.code().expect("exit code");
    if code != c.exit {
        return vec![format!(
            "{}: exit {code}, expected {}; stderr: {}",
            c.config,
            c.exit,
            normalize(&out.stderr)
        )];
    }
    let mut failures = Vec::new();
    let stdout = String::from_utf8(out.stdout).unwrap();
    compare(&stdout_path(c), &stdout, &mut failures);
    if c.exit != 0 {
        compare(&stderr_path(c), &normalize(&out.stderr), &mut failures);
    }
    failures
}

fn compare(path: &Path, actual: &str, failures: &mut Vec<String>) {
    if std::env::var_os("OMEGA_BLESS").is_some() {
        std::fs::write(path, actual).unwrap();
        return;
    }
    match std::fs::read_to_string(path) {
        Ok(expected) if expected == actual => {}
        Ok(expected) => failures.push(format!(
            "{} differs\n--- expected\n{expected}\n--- actual\n{actual}",
            path.display()
        )),
        Err(e) => failures.push(format!("{}: {e}", path.display())),
    }
}
