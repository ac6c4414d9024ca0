//! The binary end to end.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pimc-ho"))
        .args(args)
        .env_remove("PIMC_HO_PRECISION")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn energies_rows_match_table_one() {
    let o = run(&["energies", "--family", "pa", "--tau", "5", "--n", "2,4,8", "--kind", "thermo"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(3).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].contains("0.32195122"));
    assert!(rows[1].contains("0.43161837"));
    assert!(rows[2].contains("0.48424396"));
    assert!(!out.contains("E_H"));
}

#[test]
fn tables_render() {
    let o = run(&["table1"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert!(t.contains("0.50084554") && t.contains("0.50678353") && t.contains("0.30755"));
    let o = run(&["table2", "--format", "csv"]);
    let t = stdout(&o);
    assert!(t.lines().next().unwrap().starts_with("N,Sakkos CA1,CA1"));
    assert_eq!(t.lines().count(), 8);
}

#[test]
fn csv_is_byte_identical_across_runs() {
    let args = ["energies", "--family", "bd*", "--eps", "0.3", "--n", "1..64*2", "--format", "csv"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert_eq!(text.lines().count(), 8);
    // Ten significant digits.
    let cell = text.lines().nth(1).unwrap().split(',').nth(4).unwrap();
    assert_eq!(cell.split('e').next().unwrap().replace(['.', '-'], "").len(), 10, "{cell}");
}

#[test]
fn optimizer_recovers_twelfth_order_parameters() {
    let o = run(&["optimize", "--family", "bda", "--target", "twelfth"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = stdout(&o);
    assert!(t.contains("alpha = 0.142872"), "{t}");
    assert!(t.contains("t1 = 0.264654"), "{t}");
    let o = run(&["optimize", "--family", "acb", "--target", "twelfth"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("no real solution"));
}

#[test]
fn oracle_for_the_exact_kernel() {
    let o = run(&["oracle", "--family", "exact", "--n", "1", "--tau", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let t = stdout(&o);
    let row = t.lines().find(|l| l.contains("E_T")).unwrap();
    let cols: Vec<f64> = row.split_whitespace().filter_map(|c| c.parse().ok()).collect();
    // N, tau, analytic, oracle, rel diff
    assert!((cols[2] - 0.50678365).abs() < 1e-8, "{row}");
    assert!((cols[3] - cols[2]).abs() / cols[2] < 1e-5, "{row}");
}

#[test]
fn config_file_and_write_to_path() {
    let dir = std::env::temp_dir().join(format!("pimc-ho-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("pa.txt");
    std::fs::write(&cfg, "[steps]\nlabel = mine\nV 0.5\nT 1\nV 0.5\n").unwrap();
    let out = dir.join("out.csv");
    let o = run(&[
        "energies",
        "--config",
        cfg.to_str().unwrap(),
        "--tau",
        "5",
        "--n",
        "2",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(std::fs::read_to_string(&out).unwrap().contains("3.219512195e-1"));

    std::fs::write(&cfg, "[steps]\nV 0.5\nT one\nV 0.5\n").unwrap();
    let o = run(&["energies", "--config", cfg.to_str().unwrap(), "--tau", "5", "--n", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 3") && e.lines().count() == 1, "{e}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn exit_codes() {
    let o = run(&["energies", "--family", "nope", "--tau", "5", "--n", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["energies", "--family", "pa", "--n", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["energies", "--family", "pa", "--tau", "5", "--eps", "1", "--n", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["energies", "--family", "pa", "--tau", "5", "--n", "0,2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["oracle", "--family", "exact", "--n", "1", "--tau", "0.1", "--grid-L", "6", "--grid-M", "65"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr(&o).lines().count(), 1);
    let o = run(&["oracle", "--family", "pa", "--n", "1", "--tau", "1", "--grid-M", "64"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn precision_from_environment() {
    let args = ["convergence", "--family", "ti", "--kind", "hamiltonian", "--n", "10..100*1.5"];
    let o = Command::new(env!("CARGO_BIN_EXE_pimc-ho")).args(args).env("PIMC_HO_PRECISION", "extended").output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("fitted order"));
    let o = Command::new(env!("CARGO_BIN_EXE_pimc-ho")).args(args).env("PIMC_HO_PRECISION", "quad").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn figures_write_one_csv_per_panel() {
    let dir = std::env::temp_dir().join(format!("pimc-ho-fig-{}", std::process::id()));
    let o = run(&["figures", "--figure", "1", "--out", dir.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> =
        std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(names.len(), 6);
    assert!(names.contains(&"fig1_bd_prime.csv".to_string()));
    let head = std::fs::read_to_string(dir.join("fig1_pa.csv")).unwrap();
    assert!(head.starts_with("tau,label,energy\n"));
    std::fs::remove_dir_all(&dir).ok();
}
