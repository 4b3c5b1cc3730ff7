//! End-to-end tests driving the `metatune` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_metatune"));
    // Keep tests hermetic: ignore any adapter configured in the environment.
    cmd.env_remove("METATUNE_BACKEND");
    cmd
}

fn run_ok(cmd: &mut Command) -> Output {
    let output = cmd.output().expect("binary runs");
    assert!(
        output.status.success(),
        "command failed: {:?}\nstdout: {}\nstderr: {}",
        cmd,
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

fn write(path: &Path, body: &str) {
    std::fs::write(path, body).unwrap();
}

struct MockUniverse {
    dir: tempfile::TempDir,
    manifest: PathBuf,
    script: PathBuf,
}

/// Three benchmarks where only context_bound=2 configurations verify the
/// threaded ones quickly; everything else times out or stays unknown.
fn mock_universe() -> MockUniverse {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut manifest_lines = Vec::new();
    for i in 0..2 {
        let name = format!("threads_{i}.c");
        write(
            &root.join(&name),
            &format!(
                "int g;\nvoid *w(void *a){{ g = g + {i}; return 0; }}\n\
                 int main() {{\n  pthread_t t;\n  pthread_create(&t, 0, w, 0);\n  \
                 pthread_join(t, 0);\n  return g;\n}}\n"
            ),
        );
        manifest_lines.push(format!(
            "{}\t{}\ttrue",
            root.join(&name).display(),
            root.join("unreach-call.prp").display()
        ));
    }
    write(
        &root.join("plain.c"),
        "int main() { int x = 1 + 2; return x; }\n",
    );
    manifest_lines.push(format!(
        "{}\t{}\ttrue",
        root.join("plain.c").display(),
        root.join("unreach-call.prp").display()
    ));
    write(
        &root.join("unreach-call.prp"),
        "CHECK( init(main()), LTL(G ! call(reach_error())) )\n",
    );

    let script = root.join("mock.script");
    write(
        &script,
        "threads_* context_bound=2 true 1.0\n\
         threads_* * true 9999\n\
         plain.c * true 0.5\n",
    );
    let manifest = root.join("benchmarks.manifest");
    write(&manifest, &format!("{}\n", manifest_lines.join("\n")));
    MockUniverse {
        dir,
        manifest,
        script,
    }
}

#[test]
fn extract_prints_one_json_line_per_file() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.c");
    write(
        &a,
        "int g; int main(){ int i; for(i=0;i<10;i++){ g = g + 1; } return g; }",
    );
    let b = dir.path().join("b.c");
    write(&b, "");
    let output = run_ok(bin().arg("extract").arg(&a).arg(&b));
    let stdout = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("{\"threads_created\":0,"));
    assert!(lines[0].contains("\"global_var_accesses\":3"));
    assert!(lines[0].contains("\"loop_iterations\":10"));
    assert_eq!(
        lines[1],
        "{\"threads_created\":0,\"threads_joined\":0,\"mutex_locks\":0,\"atomic_locks\":0,\
         \"global_var_accesses\":0,\"global_fn_calls\":0,\"binary_operators\":0,\
         \"nondet_variables\":0,\"min_global_var_access\":0,\"min_global_fn_calls\":0,\
         \"loop_iterations\":0}"
    );
}

#[test]
fn extract_fails_cleanly_on_missing_file() {
    let status = bin()
        .arg("extract")
        .arg("/no/such/file.c")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(64));
}

#[test]
fn grid_dumps_240_configurations() {
    let output = run_ok(bin().arg("grid"));
    let stdout = String::from_utf8(output.stdout).unwrap();
    let configs: Vec<&str> = stdout
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .collect();
    assert_eq!(configs.len(), 240);
    assert_eq!(configs[0], "1,None,1,1,0,0,0,0");
    assert!(
        configs.contains(&"U,None,1,U,0,0,0,0"),
        "default config in grid"
    );
}

#[test]
fn grid_round_trips_through_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.txt");
    run_ok(bin().arg("grid").arg("--out").arg(&path));
    let output = run_ok(bin().arg("grid").arg("--grid").arg(&path));
    let dumped = String::from_utf8(output.stdout).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), dumped);
}

#[test]
fn full_pipeline_label_train_predict_verify_report() {
    let u = mock_universe();
    let root = u.dir.path();
    let dataset = root.join("dataset.csv");
    let adapter = format!("mock:{}", u.script.display());

    // Label the full grid.
    run_ok(
        bin()
            .arg("label")
            .arg("--manifest")
            .arg(&u.manifest)
            .arg("--timeout")
            .arg("180")
            .arg("--jobs")
            .arg("4")
            .arg("--out")
            .arg(&dataset)
            .arg("--adapter")
            .arg(&adapter),
    );
    let text = std::fs::read_to_string(&dataset).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 240);

    // Train.
    let model = root.join("model.txt");
    run_ok(
        bin()
            .arg("train")
            .arg("--dataset")
            .arg(&dataset)
            .arg("--out")
            .arg(&model),
    );
    assert!(std::fs::read_to_string(&model)
        .unwrap()
        .starts_with("lfdt 1\nfeatures 19\n"));

    // Predict: the threaded program should get a context-bound=2 config.
    let output = run_ok(
        bin()
            .arg("predict")
            .arg("--model")
            .arg(&model)
            .arg(root.join("threads_0.c")),
    );
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("predicted-class: 0"), "stdout: {stdout}");
    assert!(stdout.contains("--context-bound 2"), "stdout: {stdout}");

    // Verify end to end with the mock backend: exits 0 on a true verdict.
    let output = run_ok(
        bin()
            .arg("verify")
            .arg("-p")
            .arg(root.join("unreach-call.prp"))
            .arg("--model")
            .arg(&model)
            .arg("--adapter")
            .arg(&adapter)
            .arg("--timeout")
            .arg("180")
            .arg(root.join("threads_1.c")),
    );
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("verdict: true"), "stdout: {stdout}");
    assert!(stdout.contains("--context-bound 2"), "stdout: {stdout}");

    // Default-flag run for comparison: single-config grid.
    let default_grid = root.join("default.grid");
    write(&default_grid, "U,None,1,U,0,0,0,0\n");
    let baseline = root.join("baseline.csv");
    run_ok(
        bin()
            .arg("label")
            .arg("--manifest")
            .arg(&u.manifest)
            .arg("--grid")
            .arg(&default_grid)
            .arg("--timeout")
            .arg("180")
            .arg("--out")
            .arg(&baseline)
            .arg("--adapter")
            .arg(&adapter),
    );

    // Predicted-flags run: one row per benchmark via --model.
    let predicted = root.join("predicted.csv");
    run_ok(
        bin()
            .arg("label")
            .arg("--manifest")
            .arg(&u.manifest)
            .arg("--model")
            .arg(&model)
            .arg("--timeout")
            .arg("180")
            .arg("--out")
            .arg(&predicted)
            .arg("--adapter")
            .arg(&adapter),
    );
    assert_eq!(
        std::fs::read_to_string(&predicted).unwrap().lines().count(),
        1 + 3
    );

    // Report: default times out on the threaded pair, prediction fixes both.
    let counts_csv = root.join("counts.csv");
    let output = run_ok(
        bin()
            .arg("report")
            .arg("--default")
            .arg(&baseline)
            .arg("--predicted")
            .arg(&predicted)
            .arg("--out-csv")
            .arg(&counts_csv),
    );
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(
        stdout.contains("improvement in correct results: +200.0%"),
        "stdout: {stdout}"
    );
    let counts = std::fs::read_to_string(&counts_csv).unwrap();
    assert!(counts.contains("default,1,0,0,0,2"), "counts: {counts}");
    assert!(counts.contains("predicted,3,0,0,0,0"), "counts: {counts}");
}

#[test]
fn label_resumes_from_existing_journal() {
    let u = mock_universe();
    let root = u.dir.path();
    let dataset = root.join("dataset.csv");
    let journal = root.join("cells.journal");
    let adapter = format!("mock:{}", u.script.display());
    let mut cmd = bin();
    cmd.arg("label")
        .arg("--manifest")
        .arg(&u.manifest)
        .arg("--journal")
        .arg(&journal)
        .arg("--timeout")
        .arg("180")
        .arg("--out")
        .arg(&dataset)
        .arg("--adapter")
        .arg(&adapter);
    run_ok(&mut cmd);
    let first = std::fs::read_to_string(&dataset).unwrap();
    assert_eq!(
        std::fs::read_to_string(&journal).unwrap().lines().count(),
        3 * 240
    );

    // Re-running with the full journal re-executes nothing and reproduces
    // the same dataset.
    let mut cmd = bin();
    cmd.arg("label")
        .arg("--manifest")
        .arg(&u.manifest)
        .arg("--journal")
        .arg(&journal)
        .arg("--timeout")
        .arg("180")
        .arg("--out")
        .arg(&dataset)
        .arg("--adapter")
        .arg(&adapter);
    run_ok(&mut cmd);
    assert_eq!(std::fs::read_to_string(&dataset).unwrap(), first);
    assert_eq!(
        std::fs::read_to_string(&journal).unwrap().lines().count(),
        3 * 240
    );
}

#[test]
fn verify_exit_codes_follow_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(&root.join("a.c"), "int main(){return 0;}");
    write(&root.join("p.prp"), "prop");
    let model = root.join("model.txt");
    // Constant single-leaf model over the 19-dim pipeline vectors.
    write(
        &model,
        "lfdt 1\nfeatures 19\nnodes 1\nnode 0 leaf 0 1 0 0 0 0 0\nroot 0\n",
    );

    for (verdict, code) in [("true", 0), ("false", 0), ("unknown", 10), ("error", 30)] {
        let script = root.join(format!("{verdict}.script"));
        write(&script, &format!("a.c * {verdict} 1.0\n"));
        let status = bin()
            .arg("verify")
            .arg("-p")
            .arg(root.join("p.prp"))
            .arg("--model")
            .arg(&model)
            .arg("--adapter")
            .arg(format!("mock:{}", script.display()))
            .arg(root.join("a.c"))
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(code), "verdict {verdict}");
    }

    // Timeout: scripted delay beyond the timeout.
    let script = root.join("slow.script");
    write(&script, "a.c * true 9999\n");
    let status = bin()
        .arg("verify")
        .arg("-p")
        .arg(root.join("p.prp"))
        .arg("--model")
        .arg(&model)
        .arg("--adapter")
        .arg(format!("mock:{}", script.display()))
        .arg("--timeout")
        .arg("2")
        .arg(root.join("a.c"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(20));

    // Spawn failure is a backend error, not a usage error.
    let script = root.join("broken.script");
    write(&script, "a.c * spawnfail 0\n");
    let status = bin()
        .arg("verify")
        .arg("-p")
        .arg(root.join("p.prp"))
        .arg("--model")
        .arg(&model)
        .arg("--adapter")
        .arg(format!("mock:{}", script.display()))
        .arg(root.join("a.c"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(30));
}

#[test]
fn verify_missing_model_errors_before_spawning() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(&root.join("a.c"), "int main(){return 0;}");
    write(&root.join("p.prp"), "prop");
    // The adapter script is deliberately absent too: if verify tried to
    // resolve/spawn the backend before failing on the model, the error
    // message would differ.
    let output = bin()
        .arg("verify")
        .arg("-p")
        .arg(root.join("p.prp"))
        .arg("--model")
        .arg(root.join("missing-model.txt"))
        .arg(root.join("a.c"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(64));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("missing-model.txt"), "stderr: {stderr}");
}

#[test]
fn verify_fallback_default_skips_prediction() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(&root.join("a.c"), "int main(){return 0;}");
    write(&root.join("p.prp"), "prop");
    let script = root.join("mock.script");
    write(&script, "a.c * true 1.0\n");
    let output = bin()
        .arg("verify")
        .arg("-p")
        .arg(root.join("p.prp"))
        .arg("--fallback-default")
        .arg("--adapter")
        .arg(format!("mock:{}", script.display()))
        .arg(root.join("a.c"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(
        stdout.contains("flags: (default configuration)"),
        "stdout: {stdout}"
    );
    assert!(stdout.contains("verdict: true"), "stdout: {stdout}");
}

#[test]
fn backend_env_var_selects_adapter() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(&root.join("a.c"), "int main(){return 0;}");
    write(&root.join("p.prp"), "prop");
    let script = root.join("mock.script");
    write(&script, "a.c * false 1.0\n");
    let status = bin()
        .env("METATUNE_BACKEND", format!("mock:{}", script.display()))
        .arg("verify")
        .arg("-p")
        .arg(root.join("p.prp"))
        .arg("--fallback-default")
        .arg(root.join("a.c"))
        .status()
        .unwrap();
    // A false verdict is still definitive.
    assert_eq!(status.code(), Some(0));
}

#[test]
fn empty_file_verifies_through_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    write(&root.join("empty.c"), "");
    write(&root.join("p.prp"), "prop");
    let model = root.join("model.txt");
    write(
        &model,
        "lfdt 1\nfeatures 19\nnodes 1\nnode 0 leaf 3 0 0 0 1 0 0\nroot 0\n",
    );
    let script = root.join("mock.script");
    write(&script, "empty.c * unknown 0.25\n");
    let status = bin()
        .arg("verify")
        .arg("-p")
        .arg(root.join("p.prp"))
        .arg("--model")
        .arg(&model)
        .arg("--adapter")
        .arg(format!("mock:{}", script.display()))
        .arg(root.join("empty.c"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(10));
}
