//! End-to-end tests of the `busched` binary: every subcommand, the file
//! artifacts it writes, and the exit-code contract (0 ok, 2 input error).

use busched_core::fixtures;
use busched_core::io::{load_schedule, save_instance};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn busched(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_busched"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn gen_california_defaults_to_54_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = busched(dir.path(), &["gen", "--preset", "california", "-o", "c.json"]);
    assert_success(&out);
    let body = fs::read_to_string(dir.path().join("c.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&body).unwrap();
    let trips = v["trips"].as_array().unwrap();
    assert_eq!(trips.len(), 54);
    for t in trips {
        let minutes = t["duration_s"].as_i64().unwrap() as f64 / 60.0;
        assert!((22.0..=66.0).contains(&minutes));
    }
    // provenance sidecar records the seedable parameters
    let sidecar = fs::read_to_string(dir.path().join("c.provenance.json")).unwrap();
    let p: serde_json::Value = serde_json::from_str(&sidecar).unwrap();
    assert_eq!(p["command"], "gen");
    assert_eq!(p["params"]["n_trips"], 54);
    assert!(p["params"]["seed"].is_u64());
}

#[test]
fn gen_rejects_zero_trips_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = busched(dir.path(), &["gen", "-n", "0", "-o", "zero.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gen_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.json", "b.json"] {
        let out = busched(
            dir.path(),
            &["gen", "--preset", "hcpss", "-n", "100", "--seed", "7", "-o", name],
        );
        assert_success(&out);
    }
    let a = fs::read(dir.path().join("a.json")).unwrap();
    let b = fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(v["trips"].as_array().unwrap().len(), 100);
}

#[test]
fn solve_e1_yields_one_tour_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let inst = fixtures::e1();
    save_instance(&inst, dir.path().join("e1.json")).unwrap();

    let out = busched(dir.path(), &["solve", "e1.json", "--goal", "75", "-o", "run"]);
    assert_success(&out);

    let schedule = load_schedule(dir.path().join("run/schedule.json"), &inst).unwrap();
    assert_eq!(schedule.n_tours(), 1);
    assert_eq!(schedule.tours()[0].trip_ids(), &[0, 1, 2]);

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/report.json")).unwrap())
            .unwrap();
    let old_exceed = report["old"]["exceed_minutes"].as_f64().unwrap();
    let new_exceed = report["new"]["exceed_minutes"].as_f64().unwrap();
    assert!(new_exceed <= old_exceed);
    assert_eq!(new_exceed, 45.0);
    assert!(report["timing"]["blocking_s"].is_f64());
    assert!(dir.path().join("run/report.txt").exists());
}

#[test]
fn solve_monotonicity_on_generated_instance() {
    let dir = tempfile::tempdir().unwrap();
    let gen = busched(
        dir.path(),
        &["gen", "--preset", "hcpss", "-n", "60", "--seed", "11", "-o", "i.json"],
    );
    assert_success(&gen);
    let out = busched(dir.path(), &["solve", "i.json", "-o", "run"]);
    assert_success(&out);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("run/report.json")).unwrap())
            .unwrap();
    assert!(
        report["new"]["exceed_minutes"].as_f64().unwrap()
            <= report["old"]["exceed_minutes"].as_f64().unwrap()
    );
    assert_eq!(report["old"]["n_tours"], report["new"]["n_tours"]);
}

#[test]
fn solve_stage1_only_skips_balancing() {
    let dir = tempfile::tempdir().unwrap();
    let gen = busched(
        dir.path(),
        &["gen", "--preset", "hcpss", "-n", "30", "--seed", "5", "-o", "i.json"],
    );
    assert_success(&gen);
    let out = busched(dir.path(), &["solve", "i.json", "--stage1-only", "-o", "s1"]);
    assert_success(&out);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s1/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["old"], report["new"]);
}

#[test]
fn solve_rejects_malformed_instance_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), "{\"version\": 1,").unwrap();
    let out = busched(dir.path(), &["solve", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    let out = busched(dir.path(), &["solve", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn export_mip_is_deterministic_and_counts_match() {
    let dir = tempfile::tempdir().unwrap();
    let inst = fixtures::instance_minutes(
        &[(0.0, 30.0), (40.0, 20.0)],
        &[vec![0.0, 10.0], vec![10.0, 0.0]],
        75.0,
    );
    save_instance(&inst, dir.path().join("n2.json")).unwrap();
    for name in ["m1.lp", "m2.lp"] {
        let out = busched(dir.path(), &["export-mip", "n2.json", "-o", name]);
        assert_success(&out);
        let text = String::from_utf8(out.stdout).unwrap();
        assert!(text.contains("total=9"), "{text}");
    }
    let a = fs::read(dir.path().join("m1.lp")).unwrap();
    let b = fs::read(dir.path().join("m2.lp")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains(" p_0 >= 0\n"));
}

#[test]
fn export_mip_objective_follows_mbus_flag() {
    let dir = tempfile::tempdir().unwrap();
    let inst = fixtures::e1();
    save_instance(&inst, dir.path().join("e1.json")).unwrap();
    for (flag, name) in [("600", "small.lp"), ("60000", "big.lp")] {
        let out = busched(
            dir.path(),
            &["export-mip", "e1.json", "--mbus", flag, "-o", name],
        );
        assert_success(&out);
    }
    let small = fs::read_to_string(dir.path().join("small.lp")).unwrap();
    let big = fs::read_to_string(dir.path().join("big.lp")).unwrap();
    assert_ne!(small, big);
    // only the objective row may differ
    let tail = |s: &str| s.split_once("Subject To").unwrap().1.to_string();
    assert_eq!(tail(&small), tail(&big));
    assert!(small.contains("600 x_0_1_0"));
    assert!(big.contains("60000 x_0_1_0"));
}

#[test]
fn oracle_proves_e1_and_flags_node_limit() {
    let dir = tempfile::tempdir().unwrap();
    let inst = fixtures::e1();
    save_instance(&inst, dir.path().join("e1.json")).unwrap();
    let out = busched(dir.path(), &["oracle", "e1.json", "-o", "r.json"]);
    assert_success(&out);
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["buses"], 1);
    assert_eq!(r["proven_optimal"], true);
    assert_eq!(r["objective"], 66_750.0);

    // a tiny node budget still exits 0, but reports the incumbent unproven
    let gen = busched(
        dir.path(),
        &["gen", "--preset", "hcpss", "-n", "12", "--seed", "2", "-o", "i.json"],
    );
    assert_success(&gen);
    let out = busched(
        dir.path(),
        &["oracle", "i.json", "--node-limit", "3", "-o", "lim.json"],
    );
    assert_success(&out);
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("lim.json")).unwrap()).unwrap();
    assert_eq!(r["proven_optimal"], false);
}

#[test]
fn oracle_and_solve_agree_on_bus_count_for_small_instances() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..4 {
        let name = format!("i{seed}.json");
        let gen = busched(
            dir.path(),
            &[
                "gen", "--preset", "hcpss", "-n", "7", "--schools", "3", "--seed",
                &seed.to_string(), "-o", &name,
            ],
        );
        assert_success(&gen);
        let out = busched(
            dir.path(),
            &["oracle", &name, "--mg", "0", "-o", "oracle.json"],
        );
        assert_success(&out);
        let oracle: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("oracle.json")).unwrap())
                .unwrap();

        let run_dir = format!("run{seed}");
        let out = busched(dir.path(), &["solve", &name, "-o", &run_dir]);
        assert_success(&out);
        let report: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join(run_dir).join("report.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(report["new"]["n_tours"], oracle["buses"], "seed {seed}");
    }
}

#[test]
fn sweep_writes_csv_with_requested_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = busched(
        dir.path(),
        &[
            "sweep", "--preset", "hcpss", "-n", "25", "--seeds", "4", "--jobs", "2", "-o",
            "sweep.csv",
        ],
    );
    assert_success(&out);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5); // header + 4 seeds
    assert!(lines[0].starts_with("seed,n,tours"));
    assert!(lines[1].starts_with("0,25,"));
    assert!(lines[4].starts_with("3,25,"));
}
