use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_onebit");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn campaign_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run.csv");
    let out_s = out.to_str().unwrap();
    let args = [
        "campaign", "--nt", "3", "--nr", "3", "--trials", "4", "--seed", "11", "--methods", "es,svd,rq,rqm,qa",
        "--sampler", "exact", "--restarts", "2", "--out", out_s,
    ];
    ok(&args);
    let first = std::fs::read(&out).unwrap();
    let text = String::from_utf8(first.clone()).unwrap();
    assert!(text.starts_with("trial,seed,method,snr,iterations,converged,wall_us\n"));
    assert_eq!(text.lines().count(), 1 + 4 * 5);
    assert!(text.contains("\n3,14,qa-exact,"));

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(summary["summaries"].as_array().unwrap().len(), 5);
    assert!(summary["summaries"][0]["mean_wall_us"].as_f64().unwrap() >= 0.0);

    ok(&args);
    assert_eq!(std::fs::read(&out).unwrap(), first);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "nt = 2\nnr = 2\ntrials = 5\nseed = 3\nmethods = \"es,svd\"\n").unwrap();
    let stdout = ok(&["campaign", "--config", cfg.to_str().unwrap(), "--trials", "2"]);
    let rows: Vec<&str> = stdout.lines().filter(|l| l.contains(",es,") || l.contains(",svd,")).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("0,3,es,"));

    std::fs::write(&cfg, "nt = 2\nbogus = 1\n").unwrap();
    let out = run(&["campaign", "--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));
}

#[test]
fn invalid_campaigns_are_refused() {
    for args in [
        &["campaign", "--methods", "qa-bridge", "--trials", "1"][..],
        &["campaign", "--methods", "magic"][..],
        &["campaign", "--nt", "16", "--nr", "16", "--methods", "es"][..],
        &["campaign", "--trials", "0"][..],
    ] {
        assert!(!run(args).status.success(), "{args:?} should fail");
    }
}

#[test]
fn channel_file_feeds_solve_one_and_anneal_report() {
    let dir = tempfile::tempdir().unwrap();
    let ch = dir.path().join("h.json");
    ok(&["gen-channel", "--nt", "4", "--nr", "3", "--seed", "5", "--out", ch.to_str().unwrap()]);
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ch).unwrap()).unwrap();
    assert_eq!(doc["n_t"], 4);
    assert_eq!(doc["entries"].as_array().unwrap().len(), 12);

    let by_file = ok(&["solve-one", "--channel", ch.to_str().unwrap(), "--sampler", "exact", "--methods", "es,svd,qa"]);
    let by_seed = ok(&["solve-one", "--nt", "4", "--nr", "3", "--seed", "5", "--sampler", "exact", "--methods", "es,svd,qa"]);
    assert_eq!(by_file, by_seed);
    assert!(by_file.contains("es "));
    assert!(by_file.contains("k=1"));

    let csv = dir.path().join("dist.csv");
    let report = ok(&[
        "anneal-report", "--channel", ch.to_str().unwrap(), "--reads", "500", "--csv", csv.to_str().unwrap(),
    ]);
    assert!(report.contains("Anneal time"));
    assert!(report.contains("Total (sum of stages)"));
    let table = std::fs::read_to_string(&csv).unwrap();
    assert!(table.starts_with("rank,bits,energy,objective,snr,probability"));
    let first = table.lines().nth(1).unwrap();
    assert!(first.ends_with(",true"), "top row should attain the optimum: {first}");
}

#[test]
fn anneal_report_rejects_bad_receive_vector() {
    let out = run(&["anneal-report", "--nt", "3", "--nr", "3", "--g", "+-"]);
    assert!(!out.status.success());
    let out = run(&["anneal-report", "--nt", "3", "--nr", "3", "--g", "+x+"]);
    assert!(!out.status.success());
}

#[test]
fn serve_local_round_trip_and_error_exit() {
    use std::io::Write;
    use std::process::Stdio;
    let serve = |input: &str| {
        let mut child = Command::new(BIN)
            .args(["serve-local", "--sampler", "exact"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .unwrap();
        child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
        child.wait_with_output().unwrap()
    };
    let req = r#"{"n":2,"sense":"min","coeffs":[[0,0,-1.0],[0,1,1.0],[1,1,-1.0]],"num_reads":2,"annealing_time_us":20,"ferromagnetic_coupling":3}"#;
    let out = serve(req);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["samples"].as_array().unwrap().len(), 2);
    assert_eq!(doc["samples"][0]["energy"], -1.0);

    let out = serve("{\"n\": 0}");
    assert_eq!(out.status.code(), Some(2));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["error"], "parse");
}
