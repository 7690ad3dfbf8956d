//! End-to-end tests of the `yardsale` binary: exit codes, output files,
//! reproducibility across runs and worker counts, and the flag/env/config
//! precedence chain.

use std::fs;
use std::process::{Command, Output};

use tempfile::TempDir;

fn yardsale() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_yardsale"));
    // Isolate from any ambient overrides.
    for (key, _) in std::env::vars() {
        if key.starts_with("YARDSALE_") {
            cmd.env_remove(key);
        }
    }
    cmd
}

fn run(args: &[&str]) -> Output {
    yardsale().args(args).output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Small fast settings shared by most tests; lambda > 0 equilibrates well
/// inside the step budget, and the loose tolerance absorbs small-N window
/// noise, so these runs exit 0.
fn fast_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut args = vec![
        "single-run",
        "--n",
        "64",
        "--replicas",
        "4",
        "--seed",
        "11",
        "--lambda",
        "0.3",
        "--max-steps",
        "600",
        "--equil-window",
        "100",
        "--equil-tol",
        "0.05",
        "--out",
        out,
    ];
    args.extend_from_slice(extra);
    args
}

#[test]
fn no_arguments_is_a_usage_error() {
    let output = run(&[]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let output = run(&["sweep-f", "--bogus", "1"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn out_of_range_lambda_names_the_key() {
    let output = run(&["single-run", "--lambda", "1.5"]);
    assert_eq!(output.status.code(), Some(2));
    let err = stderr(&output);
    assert!(err.contains("lambda"), "{err}");
    assert!(err.contains("1.5"), "{err}");
}

#[test]
fn single_run_writes_table_lorenz_and_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run.csv");
    let out = out.to_str().unwrap();

    let output = run(&fast_args(out, &[]));
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));

    let text = stdout(&output);
    assert!(text.contains("# resolved manifest"), "{text}");
    assert!(text.contains("n = 64"));
    assert!(text.contains("lambda = 0.3"));

    let table = fs::read_to_string(out).unwrap();
    let mut lines = table.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("n_replicas,converged_fraction,mean_steps,gini_mean,gini_stderr"));
    assert_eq!(lines.count(), 1, "one data row for one point");

    let lorenz = fs::read_to_string(dir.path().join("run.lorenz.csv")).unwrap();
    let lorenz_lines: Vec<&str> = lorenz.lines().collect();
    assert_eq!(lorenz_lines[0], "F,L");
    assert_eq!(lorenz_lines.len(), 1 + 64 + 1, "header plus N+1 points");
    assert_eq!(lorenz_lines[1], "0,0");
    assert_eq!(*lorenz_lines.last().unwrap(), "1,1");

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["tool"], "yardsale");
    assert_eq!(meta["master_seed"], 11);
    assert_eq!(meta["manifest"]["n"], 64);
    assert_eq!(meta["manifest"]["experiment"], "single-run");
}

#[test]
fn sweep_f_row_count_matches_grid() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sweep.csv");
    let out_str = out.to_str().unwrap();

    let output = run(&[
        "sweep-f",
        "--f-min",
        "0.3",
        "--f-max",
        "0.5",
        "--f-step",
        "0.1",
        "--n",
        "64",
        "--replicas",
        "3",
        "--seed",
        "5",
        "--max-steps",
        "800",
        "--equil-window",
        "100",
        "--equil-tol",
        "0.05",
        "--out",
        out_str,
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));

    let table = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("f,n_replicas,"));
    assert_eq!(lines.len(), 1 + 3, "header plus 3 grid rows");
    assert!(lines[1].starts_with("0.3,3,"));
    assert!(lines[3].starts_with("0.5,3,"));

    // Lorenz blocks: one (N+1)-point curve per grid value, each anchored at
    // (0,0) and (1,1).
    let lorenz = fs::read_to_string(dir.path().join("sweep.lorenz.csv")).unwrap();
    let lorenz_lines: Vec<&str> = lorenz.lines().collect();
    assert_eq!(lorenz_lines[0], "f,F,L");
    assert_eq!(lorenz_lines.len(), 1 + 3 * 65);
    for start in [1usize, 1 + 65, 1 + 2 * 65] {
        assert!(
            lorenz_lines[start].ends_with(",0,0"),
            "{}",
            lorenz_lines[start]
        );
        assert!(
            lorenz_lines[start + 64].ends_with(",1,1"),
            "{}",
            lorenz_lines[start + 64]
        );
    }
}

#[test]
fn full_protection_grid_emits_51_rows() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("grid.csv");
    let out_str = out.to_str().unwrap();

    let output = run(&[
        "sweep-f",
        "--f-min",
        "0",
        "--f-max",
        "0.5",
        "--f-step",
        "0.01",
        "--n",
        "32",
        "--replicas",
        "2",
        "--seed",
        "1",
        "--max-steps",
        "300",
        "--equil-window",
        "50",
        "--equil-tol",
        "0.2",
        "--out",
        out_str,
    ]);
    // The f = 0 cell condenses and may stay unconverged; either completion
    // code is a finished run.
    assert!(
        matches!(output.status.code(), Some(0) | Some(4)),
        "stderr: {}",
        stderr(&output)
    );
    let table = fs::read_to_string(&out).unwrap();
    assert_eq!(table.lines().count(), 1 + 51, "header plus one row per f");
}

#[test]
fn identical_manifests_are_byte_identical_across_worker_counts() {
    // Same manifest each time (same relative out path, fresh working
    // directory), only the worker count varies.
    let make = |workers: &str| -> (TempDir, Vec<u8>, Vec<u8>, Vec<u8>) {
        let dir = TempDir::new().unwrap();
        let output = yardsale()
            .current_dir(dir.path())
            .args([
                "sweep-lambda",
                "--lambda-values",
                "0.2,0.5",
                "--n",
                "64",
                "--replicas",
                "6",
                "--seed",
                "9",
                "--max-steps",
                "600",
                "--equil-window",
                "100",
                "--equil-tol",
                "0.05",
                "--workers",
                workers,
                "--out",
                "run.csv",
            ])
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));
        let table = fs::read(dir.path().join("run.csv")).unwrap();
        let lorenz = fs::read(dir.path().join("run.lorenz.csv")).unwrap();
        let meta = fs::read(dir.path().join("run.meta.json")).unwrap();
        (dir, table, lorenz, meta)
    };

    let first = make("1");
    let second = make("2");
    let third = make("1");
    // Data files ignore the worker count; the metadata sidecar records it
    // (it is part of the manifest), so it is compared across reruns only.
    assert_eq!(first.1, second.1, "table bytes differ across worker counts");
    assert_eq!(
        first.2, second.2,
        "lorenz bytes differ across worker counts"
    );
    assert_eq!(first.1, third.1, "table bytes differ across reruns");
    assert_eq!(first.2, third.2, "lorenz bytes differ across reruns");
    assert_eq!(first.3, third.3, "metadata bytes differ across reruns");
}

#[test]
fn unconverged_replicas_exit_code_4() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("frozen.csv");
    let out_str = out.to_str().unwrap();

    // A condensation run cannot satisfy a 1e-9 stationarity tolerance in
    // 300 steps.
    let output = run(&[
        "single-run",
        "--n",
        "64",
        "--replicas",
        "2",
        "--seed",
        "3",
        "--f",
        "0",
        "--max-steps",
        "300",
        "--equil-window",
        "100",
        "--equil-tol",
        "1e-9",
        "--out",
        out_str,
    ]);
    assert_eq!(output.status.code(), Some(4), "stderr: {}", stderr(&output));
    assert!(out.exists(), "tables are written even when unconverged");
}

#[test]
fn unwritable_output_path_exits_3() {
    // /dev/null is not a directory, so the write must fail after the
    // (cheap) run completes.
    let output = run(&fast_args("/dev/null/nested/run.csv", &[]));
    assert_eq!(output.status.code(), Some(3), "stderr: {}", stderr(&output));
    assert!(stderr(&output).contains("/dev/null"), "{}", stderr(&output));
}

#[test]
fn jsonl_format_emits_one_object_per_row() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rows.jsonl");
    let out_str = out.to_str().unwrap();

    let output = run(&[
        "sweep-lambda",
        "--lambda-values",
        "0.25,0.75",
        "--n",
        "64",
        "--replicas",
        "3",
        "--seed",
        "2",
        "--max-steps",
        "600",
        "--equil-window",
        "100",
        "--equil-tol",
        "0.05",
        "--format",
        "jsonl",
        "--out",
        out_str,
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));

    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<serde_json::Value> = text
        .lines()
        .map(|line| serde_json::from_str(line).unwrap())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["lambda"], 0.25);
    assert_eq!(rows[1]["lambda"], 0.75);
    assert_eq!(rows[0]["n_replicas"], 3);
    assert!(rows[0]["gini_mean"].is_number());
}

#[test]
fn environment_and_config_fill_in_below_flags() {
    let dir = TempDir::new().unwrap();
    let config_path = dir.path().join("run.cfg");
    fs::write(&config_path, "replicas = 9\nseed = 1000\nn = 70\n").unwrap();
    let out = dir.path().join("prec.csv");

    // Flag beats env (seed), env beats config (n), config beats default
    // (replicas).
    let output = yardsale()
        .args([
            "single-run",
            "--seed",
            "11",
            "--lambda",
            "0.3",
            "--max-steps",
            "600",
            "--equil-window",
            "100",
            "--equil-tol",
            "0.05",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .env("YARDSALE_N", "80")
        .env("YARDSALE_SEED", "2000")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));

    let text = stdout(&output);
    assert!(text.contains("seed = 11"), "flag wins: {text}");
    assert!(text.contains("n = 80"), "env beats config: {text}");
    assert!(
        text.contains("replicas = 9"),
        "config beats default: {text}"
    );
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = TempDir::new().unwrap();
    let config_path = dir.path().join("bad.cfg");
    fs::write(&config_path, "turbo = yes\n").unwrap();
    let out = dir.path().join("never.csv");

    let output = yardsale()
        .args(fast_args(out.to_str().unwrap(), &["--config"]))
        .arg(config_path.to_str().unwrap())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("turbo"));
    assert!(!out.exists(), "no output on usage errors");
}

#[test]
fn p_star_reports_its_minimizer() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("pstar.csv");
    let out_str = out.to_str().unwrap();

    let output = run(&[
        "p-star",
        "--lambda",
        "0.4",
        "--p-values",
        "0.05,0.3,1.0",
        "--n",
        "80",
        "--replicas",
        "4",
        "--seed",
        "17",
        "--max-steps",
        "800",
        "--equil-window",
        "100",
        "--equil-tol",
        "0.05",
        "--out",
        out_str,
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("p* = "), "{text}");

    let table = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert!(lines[0].starts_with("lambda,p,"));
    assert_eq!(lines.len(), 1 + 3);
}

#[test]
fn manifest_echo_round_trips_as_config() {
    // The echoed manifest is itself a valid config file reproducing the run.
    let dir = TempDir::new().unwrap();
    let out_a = dir.path().join("a.csv");
    let output = run(&fast_args(out_a.to_str().unwrap(), &[]));
    assert_eq!(output.status.code(), Some(0));

    let echo: String = stdout(&output)
        .lines()
        .skip_while(|l| *l != "# resolved manifest")
        .skip(1)
        .take_while(|l| !l.is_empty())
        .filter(|l| {
            // experiment is the subcommand, not a key; grids with `-` mean unset.
            !l.starts_with("experiment = ") && !l.ends_with("= -")
        })
        .map(|l| format!("{l}\n"))
        .collect();
    let config_path = dir.path().join("echo.cfg");
    fs::write(
        &config_path,
        echo.replace(out_a.to_str().unwrap(), "IGNORED"),
    )
    .unwrap();

    let out_b = dir.path().join("b.csv");
    let output = run(&[
        "single-run",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "stderr: {}", stderr(&output));
    assert_eq!(
        fs::read(&out_a).unwrap(),
        fs::read(&out_b).unwrap(),
        "echoed manifest reproduces the run"
    );
}
