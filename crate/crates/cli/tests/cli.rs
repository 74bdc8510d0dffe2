use std::fs;
use std::process::{Command, Output};

fn sesqui(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sesqui")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_field(line: &str, i: usize) -> f64 {
    line.split(',').nth(i).unwrap().parse().unwrap()
}

#[test]
fn hurwitz_plain_and_exact() {
    let o = sesqui(&["hurwitz", "--n", "23"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "3\n");
    assert_eq!(stdout(&sesqui(&["hurwitz", "--n", "23", "--exact"])), "3/1\n");
    let range = stdout(&sesqui(&["hurwitz", "--n", "3", "--to", "4", "--exact"]));
    assert_eq!(range, "n,H\n3,1/3\n4,1/2\n");
}

#[test]
fn scalar_invariants() {
    assert_eq!(stdout(&sesqui(&["classno", "--d", "-23"])), "3\n");
    assert_eq!(stdout(&sesqui(&["hplus", "--d", "12"])), "2\n");
    let r: f64 = stdout(&sesqui(&["regulator", "--d", "5"])).trim().parse().unwrap();
    assert!((r - 2.0 * ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
    let j = stdout(&sesqui(&["hstar", "--d", "5", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&j).unwrap();
    assert_eq!(v["d"], 5);
}

#[test]
fn rchi_first_table_row() {
    let o = sesqui(&["rchi", "--h", "1", "--char", "kronecker:-4", "--terms", "10000", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let row = out.lines().nth(1).unwrap();
    assert!((csv_field(row, 5) - 0.0289).abs() < 1e-3, "{row}");
}

#[test]
fn exit_codes() {
    assert_eq!(sesqui(&["rchi", "--h", "2", "--char", "kronecker:8"]).status.code(), Some(2));
    assert_eq!(sesqui(&["hurwitz"]).status.code(), Some(1));
    assert_eq!(sesqui(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sesqui(&["rchi", "--h", "1", "--char", "dirichlet:4"]).status.code(), Some(1));
    assert_eq!(sesqui(&["classno", "--d", "-12"]).status.code(), Some(2));
    assert_eq!(sesqui(&["dseries", "--h", "14", "--s", "0.5"]).status.code(), Some(2));
    assert_eq!(sesqui(&["hurwitz", "--n", "5", "--plot", "svg"]).status.code(), Some(1));
}

#[test]
fn table_character_syntax() {
    let a = stdout(&sesqui(&["theta", "--char", "table:4:0,1,0,-1", "--n", "25"]));
    let b = stdout(&sesqui(&["theta", "--char", "kronecker:-4", "--n", "25"]));
    assert_eq!(a, b);
    assert!(a.contains("\n9,-6\n"));
}

#[test]
fn eta_json_mirrors_csv() {
    let j = stdout(&sesqui(&["eta", "--form", "f2", "--n", "25", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&j).unwrap();
    assert_eq!(v["coefficients"][13], "6");
    assert_eq!(v["coefficients"][25], "-1");
    let c = stdout(&sesqui(&["eta", "--factors", "4:2,8:2", "--n", "25"]));
    assert!(c.contains("\n13,6\n") && c.contains("\n25,-1\n"));
}

#[test]
fn manifest_and_plot_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s14.csv");
    let o = sesqui(&["shifted-sum", "--h", "14", "--m-max", "400", "--out", out.to_str().unwrap(), "--plot", "svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("m,S_exact_num,S_exact_den,S_float,normalized_54,normalized_32\n"));
    let svg = fs::read_to_string(dir.path().join("s14.csv.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("s14.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["subcommand"], "shifted-sum");
    assert_eq!(m["parameters"]["h"], 14);
    assert!(m["library_version"].is_string());
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn output_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for t in ["1", "3"] {
        let out = dir.path().join(format!("r{t}.csv"));
        let o = sesqui(&["rchi", "--hmax", "12", "--terms", "2000", "--threads", t, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        bodies.push(fs::read(&out).unwrap());
        let m: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join(format!("r{t}.csv.manifest.json"))).unwrap())
                .unwrap();
        assert_eq!(m["truncation"]["truncation"], 2000);
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn decompose_near_published_coefficients() {
    let o = sesqui(&["decompose", "--target", "rchi", "--char", "kronecker:-4", "--terms", "10000", "--hmax", "12"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let x: Vec<f64> = out.lines().skip(1).take(3).map(|l| csv_field(l, 1)).collect();
    assert!((x[0] - 0.0286).abs() < 2e-3 && x[1].abs() < 2e-3 && (x[2] - 0.0579).abs() < 2e-3, "{x:?}");
}

#[test]
fn project_matches_rchi() {
    let p = stdout(&sesqui(&["project", "--hmax", "6", "--terms", "3000"]));
    let r = stdout(&sesqui(&["rchi", "--hmax", "6", "--terms", "3000"]));
    for (a, b) in p.lines().skip(1).zip(r.lines().skip(1)) {
        assert!((csv_field(a, 5) - csv_field(b, 5)).abs() < 1e-12);
    }
}

#[test]
fn dseries_row() {
    let out = stdout(&sesqui(&["dseries", "--h", "14", "--s", "3", "--m-max", "400"]));
    let row = out.lines().nth(1).unwrap();
    assert!(row.starts_with("14,3.0,400,"));
    assert!(csv_field(row, 4) >= 0.0);
}

#[test]
fn selftest_quick_passes() {
    let o = sesqui(&["selftest", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).lines().skip(1).all(|l| l.contains(",true,")));
}
