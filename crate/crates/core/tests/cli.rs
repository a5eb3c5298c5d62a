use std::path::Path;
use std::process::{Command, Output};

const MATRON: &str = "000000000000000000000000000000000000000000000000000000000021";
const SIRE: &str = "000000000000000000000000000000000000000000000000000000000042";

fn kittylab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kittylab")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn mix_echoes_matron_for_all_ones_seed() {
    let seed = "f".repeat(64);
    let out = kittylab(&["mix", "--matron", MATRON, "--sire", SIRE, "--seed", &seed]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(MATRON));
    assert_eq!(lines.next(), Some("cell\tmatron\tsire\tchild\tmutated"));
    assert_eq!(lines.count(), 48);
}

#[test]
fn identical_parents_give_the_same_gene() {
    let seed = "0123456789abcdef".repeat(4);
    let out = kittylab(&["mix", "--matron", MATRON, "--sire", MATRON, "--seed", &seed]);
    assert_eq!(stdout(&out).lines().next(), Some(MATRON));
}

#[test]
fn malformed_input_exits_2() {
    let seed = "0".repeat(64);
    assert_eq!(kittylab(&["mix", "--matron", "abc", "--sire", SIRE, "--seed", &seed]).status.code(), Some(2));
    assert_eq!(kittylab(&["mix", "--matron", MATRON, "--sire", SIRE, "--seed", "00"]).status.code(), Some(2));
    assert_eq!(kittylab(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn predict_with_seed_matches_mix() {
    let seed = "5a".repeat(32);
    let mixed = kittylab(&["mix", "--matron", MATRON, "--sire", SIRE, "--seed", &seed]);
    let predicted = kittylab(&["predict", "--matron", MATRON, "--sire", SIRE, "--target-seed", &seed]);
    assert_eq!(stdout(&predicted).trim(), stdout(&mixed).lines().next().unwrap());
}

#[test]
fn predict_csv_rows_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("law.csv");
    let out = kittylab(&[
        "predict", "--matron", MATRON, "--sire", SIRE, "--monte-carlo", "20000", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("cell,value,probability,monte_carlo,abs_error"));
    let mut sums = [0.0f64; 48];
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let cell: usize = f[0].parse().unwrap();
        sums[cell] += f[2].parse::<f64>().unwrap();
        assert!(f[4].parse::<f64>().unwrap() < 0.03);
    }
    assert!(sums.iter().all(|s| (s - 1.0).abs() < 1e-9));
}

#[test]
fn predict_to_unwritable_path_fails_at_runtime() {
    let out = kittylab(&["predict", "--matron", MATRON, "--sire", SIRE, "--out", "/nonexistent/dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn cattributes_lists_registry_matches() {
    let mut cells = [0u8; 48];
    cells[0] = 15;
    cells[36] = 23;
    let gene = kittylab::GeneArray::new(cells).unwrap().to_hex();
    let out = kittylab(&["cattributes", "--gene", &gene]);
    assert_eq!(stdout(&out), "driver\n");

    let dir = tempfile::tempdir().unwrap();
    let reg = dir.path().join("reg.json");
    std::fs::write(&reg, r#"[{"name": "zero-tail", "constraints": [[47, 0]]}]"#).unwrap();
    let out = kittylab(&["cattributes", "--gene", &gene, "--registry", reg.to_str().unwrap()]);
    assert_eq!(stdout(&out), "zero-tail\n");
}

#[test]
fn jewel_scenario_small_counts() {
    let text = stdout(&kittylab(&["jewel-scenario", "--children", "9"]));
    assert!(text.contains("gross 4.5\n") && text.contains("gilded 9\n"));
    let text = stdout(&kittylab(&["jewel-scenario", "--children", "0"]));
    assert!(text.contains("gross 0\n") && text.contains("fees 0\n") && text.contains("lapis 0\n"));
}

#[test]
fn auction_sim_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("auctions.csv");
    let out = kittylab(&["auction-sim", "--auctions", "50", "--delay", "0", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("colluder_win_rate 1.0000"));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().next(), Some("auction_id,winner_class,price,block"));
    assert_eq!(csv.lines().count(), 51);
    assert_eq!(kittylab(&["auction-sim", "--start-price", "1", "--end-price", "2"]).status.code(), Some(2));
}

fn write_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("scenario.json");
    std::fs::write(
        &path,
        format!(r#"{{"agents": {{"rich_informed": 1, "poor_naive": 2}}, "horizon_blocks": 400{extra}}}"#),
    )
    .unwrap();
    path
}

#[test]
fn market_sim_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), r#", "entropy": "joint""#);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = kittylab(&[
            "market-sim", "--config", config.to_str().unwrap(), "--seed", "4", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (std::fs::read(out.join("report.json")).unwrap(), std::fs::read(out.join("trades.csv")).unwrap())
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let report: serde_json::Value = serde_json::from_slice(&a.0).unwrap();
    assert_eq!(report["rng_seed"], 4);
    assert_eq!(report["entropy"], "joint");
    assert_eq!(report["condition_flags"].as_array().unwrap().len(), 5);
}

#[test]
fn market_sim_replicates_write_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = dir.path().join("out");
    let o = kittylab(&[
        "market-sim", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--replicates", "3",
    ]);
    assert!(o.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"], 3);
}

#[test]
fn market_sim_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let missing = dir.path().join("missing.json");
    let o = kittylab(&["market-sim", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"agents": {}, "horizon_blocks": 10}"#).unwrap();
    let o = kittylab(&["market-sim", "--config", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn market_sim_resolves_registry_next_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("reg.json"), r#"[{"name": "any-zero", "constraints": [[0, 0]]}]"#).unwrap();
    let config = write_config(dir.path(), r#", "registry_path": "reg.json""#);
    let out = dir.path().join("out");
    let o = kittylab(&["market-sim", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(out.join("report.json")).unwrap();
    assert!(report.contains("any-zero"));
}

#[test]
fn cooldown_table_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("cooldowns.json");
    std::fs::write(&table, "[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14]").unwrap();
    let config = write_config(dir.path(), "");
    let run = |env: Option<&Path>| {
        let out = dir.path().join(if env.is_some() { "fast" } else { "default" });
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_kittylab"));
        cmd.args(["market-sim", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        match env {
            Some(p) => cmd.env("KITTYLAB_COOLDOWN_TABLE", p),
            None => cmd.env_remove("KITTYLAB_COOLDOWN_TABLE"),
        };
        assert!(cmd.output().unwrap().status.success());
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        report["breedings"].as_u64().unwrap()
    };
    assert!(run(Some(&table)) > run(None));

    std::fs::write(&table, "[3, 2, 1]").unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_kittylab"));
    let out = dir.path().join("bad");
    cmd.args(["market-sim", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("KITTYLAB_COOLDOWN_TABLE", &table);
    assert_eq!(cmd.output().unwrap().status.code(), Some(1));
}
