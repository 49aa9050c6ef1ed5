use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_schwarz1d");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SCHWARZ1D_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn matrix_for_two_subdomains() {
    let o = run(&[
        "matrix",
        "--n",
        "2",
        "--ell",
        "1",
        "--delta",
        "1/2",
        "--backend",
        "exact",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "0,0,0,0\n0,0,1/2,0\n0,1/2,0,0\n0,0,0,0\n");
    assert!(stderr(&o).contains("row sums"));
}

#[test]
fn matrix_first_row_is_zero() {
    for n in ["3", "6", "11"] {
        let o = run(&["matrix", "--n", n]);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        let first = text.lines().next().unwrap();
        assert!(first.split(',').all(|c| c == "0"), "N = {n}: {first}");
    }
}

#[test]
fn invalid_geometry_exits_2_with_json_message() {
    let o = run(&["matrix", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let msg: Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(msg["error"], "invalid_input");

    let o = run(&["norms", "--n", "4", "--delta", "3/4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn size_cap_is_enforced() {
    let o = run(&["matrix", "--n", "20", "--max-dim", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn norms_examples() {
    let o = run(&["norms", "--n", "10", "--n-max", "4"]);
    let norms: Vec<String> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect();
    assert_eq!(norms, vec!["1"; 5]);

    let o = run(&[
        "norms", "--n", "2", "--ell", "1", "--delta", "1/2", "--n-max", "3",
    ]);
    assert_eq!(
        stdout(&o),
        "n,norm,ratio\n0,1,\n1,1/2,1/2\n2,1/4,1/2\n3,1/8,1/2\n"
    );

    let o = run(&["norms", "--n", "5", "--n-max", "0"]);
    assert_eq!(stdout(&o), "n,norm,ratio\n0,1,\n");
}

#[test]
fn json_carries_the_csv_cells() {
    let csv = stdout(&run(&["norms", "--n", "4", "--n-max", "6"]));
    let json: Value = serde_json::from_str(&stdout(&run(&[
        "norms", "--n", "4", "--n-max", "6", "--format", "json",
    ])))
    .unwrap();
    let rows = json.as_array().unwrap();
    for (line, row) in csv.lines().skip(1).zip(rows) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(row["n"], cells[0]);
        assert_eq!(row["norm"], cells[1]);
        assert_eq!(row["ratio"], cells[2]);
    }
    assert_eq!(rows.len(), csv.lines().count() - 1);
}

#[test]
fn decimals_promote_to_float_with_warning() {
    let o = run(&["norms", "--n", "2", "--delta", "0.5", "--n-max", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning"));
    assert!(stdout(&o).contains("5.0000000000000000e-1"));

    let o = run(&["norms", "--n", "2", "--delta", "0.5", "--backend", "exact"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_rejects_float() {
    let o = run(&["verify", "--n", "4", "--backend", "float"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exact"));
}

#[test]
fn verify_even_counts_pass() {
    let o = run(&[
        "verify", "--n", "2:12:2", "--n-max", "48", "--format", "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["pass"], true);
    assert_eq!(report["runs"].as_array().unwrap().len(), 6);
}

// Odd N: the strict half of the centre-block claim fails by an exact
// equality in one slot, so the full desk-scale run exits 3 with that check
// as the only failure.
#[test]
fn verify_full_range_fails_only_on_odd_centre() {
    let o = run(&[
        "verify",
        "--n",
        "2:13",
        "--n-max",
        "52",
        "--backend",
        "exact",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["pass"], false);
    for run in report["runs"].as_array().unwrap() {
        let n = run["decomposition"]["N"].as_u64().unwrap();
        for check in run["checks"].as_array().unwrap() {
            let failed = check["asserted"] == true && check["pass"] == false;
            let expected = n % 2 == 1 && check["name"] == "lemma5_odd_addendum";
            assert_eq!(failed, expected, "N = {n}: {check}");
        }
    }
}

#[test]
fn injected_fault_breaks_norm_equivalence() {
    let o = run(&["verify", "--n", "4", "--inject-fault", "--format", "json"]);
    assert_eq!(o.status.code(), Some(3));
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let lemma1 = &report["runs"][0]["checks"][0];
    assert_eq!(lemma1["name"], "lemma1_norm_via_ones");
    assert_eq!(lemma1["pass"], false);
    assert!(lemma1["first_violation"]
        .as_str()
        .unwrap()
        .starts_with("n = "));
}

#[test]
fn sweep_and_not_converged() {
    let o = run(&["sweep", "--n", "2:8:2", "--tol", "1e-6"]);
    assert_eq!(o.status.code(), Some(0));
    let iterations: Vec<u64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert_eq!(iterations.len(), 4);
    assert!(iterations.windows(2).all(|w| w[0] <= w[1]));

    let o = run(&["sweep", "--n", "8", "--max-iterations", "3"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("not_converged"));
}

#[test]
fn spectrum_for_half_overlap() {
    let o = run(&["spectrum", "--n", "2", "--delta", "1/2", "--format", "json"]);
    let rows: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rho: f64 = rows[0]["rho"].as_str().unwrap().parse().unwrap();
    let bound: f64 = rows[0]["bound"].as_str().unwrap().parse().unwrap();
    assert!((rho - 0.5).abs() < 1e-12);
    assert!((bound - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn iterate_emits_trace_curves_and_interface() {
    let o = run(&["iterate", "--n", "3", "--n-max", "2"]);
    let text = stdout(&o);
    assert!(text.starts_with("n,j,a_j,b_j,left_value,right_value\n"));
    assert_eq!(text.lines().count(), 1 + 3 * 3);

    let o = run(&[
        "iterate",
        "--n",
        "3",
        "--n-max",
        "1",
        "--emit",
        "curves",
        "--samples",
        "5",
    ]);
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 3 * 5);

    let o = run(&["iterate", "--n", "3", "--n-max", "1", "--emit", "interface"]);
    let text = stdout(&o);
    assert!(text.starts_with("n,index,block,slot,x,value\n"));
    assert!(text.contains("\n1,1,1,1,0,0\n"));
}

#[test]
fn iterate_from_endpoint_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e0.csv");
    fs::write(&path, "# left,right\n1,1\n1/2,1/2\n1,1\n").unwrap();
    let init = format!("file:{}", path.display());
    let o = run(&["iterate", "--n", "3", "--n-max", "0", "--init", &init]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains(",1/2,1/2\n"));

    fs::write(&path, "1,1\n").unwrap();
    let o = run(&["iterate", "--n", "3", "--init", &init]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str| {
        vec![
            "iterate".to_string(),
            "--n".into(),
            "5".into(),
            "--init".into(),
            "random:42".into(),
            "--emit".into(),
            "curves".into(),
            "-o".into(),
            dir.path().join(name).display().to_string(),
        ]
    };
    for name in ["a.csv", "b.csv"] {
        let a = args(name);
        let refs: Vec<&str> = a.iter().map(String::as_str).collect();
        assert_eq!(run(&refs).status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a.csv")).unwrap();
    let b = fs::read(dir.path().join("b.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);

    let sweep = || {
        stdout(&run(&[
            "sweep", "--n", "2:16:2", "--tol", "1e-6", "--format", "json",
        ]))
    };
    assert_eq!(sweep(), sweep());
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(BIN)
        .args(["norms", "--n", "4", "--format", "json"])
        .env("SCHWARZ1D_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written = fs::read_to_string(dir.path().join("norms.json")).unwrap();
    assert!(written.starts_with('['));
}

#[test]
fn printed_config_round_trips() {
    let o = run(&[
        "spectrum",
        "--n",
        "2,4,8",
        "--delta",
        "2/8",
        "--print-config",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let cfg = schwarz1d_cli::RunConfig::from_canonical(&text).unwrap();
    assert_eq!(format!("{}\n", cfg.to_canonical()), text);
    assert_eq!(cfg.delta, "1/4");
    assert_eq!(cfg.subdomains, vec![2, 4, 8]);
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(run(&["norms"]).status.code(), Some(2));
    assert_eq!(
        run(&["norms", "--n", "4", "--init", "twos"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
