use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const POWER2: &str = r#"{"family":"power","scale":1,"exponent":2}"#;
const POWER4: &str = r#"{"family":"power","scale":1,"exponent":4}"#;
const WHITE: &str = r#"{"family":"const","scale":1}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spectral-da"))
}

fn problem(dir: &TempDir, name: &str, prior: &str, noise: &str, data: &str) -> PathBuf {
    let path = dir.path().join(name);
    let text = format!(r#"{{"prior_spectrum":{prior},"noise_spectrum":{noise},"data":{data}}}"#);
    std::fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str], file: &Path) -> Output {
    bin().arg(args[0]).arg(file).args(&args[1..]).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(o)).unwrap()
}

#[test]
fn classify_reports() {
    let dir = TempDir::new().unwrap();
    let wp = problem(&dir, "wp.json", POWER2, WHITE, r#"{"support":[]}"#);
    let v = json(&run(&["classify"], &wp));
    assert_eq!(v["well_posed_all_y"], true);
    assert_eq!(v["bad_set_dense"], false);

    let dense = problem(&dir, "dense.json", POWER4, POWER2, r#"{"support":[]}"#);
    let v = json(&run(&["classify"], &dense));
    assert_eq!(v["bad_set_dense"], true);
    assert_eq!(v["noise_lower_bound"], 0.0);
}

#[test]
fn constants() {
    let dir = TempDir::new().unwrap();
    let wp = problem(&dir, "wp.json", POWER2, WHITE, r#"{"support":[]}"#);
    let v = json(&run(&["constant"], &wp));
    assert!((v["log_c"].as_f64().unwrap() + 0.650923).abs() < 1e-6);

    let eq = problem(&dir, "eq.json", POWER2, POWER2, r#"{"support":[[2,1]]}"#);
    let v = json(&run(&["constant"], &eq));
    assert_eq!(v["log_c"], "-inf");
    assert!(!v["certificates"].as_array().unwrap().is_empty());

    let v = json(&run(&["constant", "--truncate", "100"], &eq));
    let expected = -50.0 * std::f64::consts::LN_2 - 0.5 * 1.0 / (0.25 + 0.25);
    assert!((v["log_c"].as_f64().unwrap() - expected).abs() < 1e-9);

    let single = problem(&dir, "one.json", r#"{"family":"exp","scale":1e-300,"ratio":0.5,"prefix":[1]}"#, WHITE, r#"{"support":[]}"#);
    let v = json(&run(&["constant"], &single));
    assert!((v["log_c"].as_f64().unwrap() + 0.346574).abs() < 1e-6);
}

#[test]
fn assimilation_tables() {
    let dir = TempDir::new().unwrap();
    let single = problem(&dir, "one.json", r#"{"family":"exp","scale":1e-300,"ratio":0.5,"prefix":[1]}"#, WHITE, r#"{"support":[[1,2]]}"#);
    let out = stdout(&run(&["assimilate"], &single));
    assert_eq!(out, "mode, mean, variance, gain\n1, 1.0, 0.5, 0.5\n");
    assert_eq!(stdout(&run(&["assimilate", "--modes="], &single)), "mode, mean, variance, gain\n");

    let eq = problem(&dir, "eq.json", POWER2, POWER2, r#"{"support":[[1,3]]}"#);
    let out = stdout(&run(&["assimilate", "--modes", "1,2"], &eq));
    assert!(out.starts_with("ILL-POSED (fallback: prior)\n"), "{out}");
    assert!(out.ends_with("mode, mean, variance, gain\n1, 0.0, 1.0, 0.0\n2, 0.0, 0.25, 0.0\n"), "{out}");
}

#[test]
fn adversarial_data() {
    let dir = TempDir::new().unwrap();
    let p = problem(&dir, "p.json", POWER4, POWER2, r#"{"support":[]}"#);
    let v = json(&run(&["adversarial", "--delta", "1"], &p));
    let idx: Vec<u64> = v["construction"]["indices"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    assert_eq!(&idx[..8], &[2, 3, 4, 5, 6, 8, 12, 16]);
    assert_eq!(v["construction"]["rule"], "corollary-5");
    assert_eq!(v["construction"]["delta"], 1.0);
    assert_eq!(v["support"][0], serde_json::json!([2, 0.5]));

    // the output is itself valid data
    let round = dir.path().join("round.json");
    let text = format!(r#"{{"prior_spectrum":{POWER4},"noise_spectrum":{POWER2},"data":{}}}"#, stdout(&run(&["adversarial"], &p)));
    std::fs::write(&round, text).unwrap();
    assert_eq!(json(&run(&["constant"], &round))["log_c"], "-inf");

    let white = problem(&dir, "w.json", POWER2, WHITE, r#"{"support":[]}"#);
    assert_eq!(run(&["adversarial"], &white).status.code(), Some(3));
}

#[test]
fn monte_carlo() {
    let dir = TempDir::new().unwrap();
    let wp = problem(&dir, "wp.json", POWER2, WHITE, r#"{"support":[]}"#);
    let v = json(&run(&["mc", "--truncate", "10", "--n", "100000", "--seed", "3"], &wp));
    let (e, s) = (v["estimate"].as_f64().unwrap(), v["stderr"].as_f64().unwrap());
    assert!((e + 0.603412).abs() <= 3.0 * s);

    let out = stdout(&run(&["sweep", "--dims", "1,10,100", "--n", "2000", "--seed", "5"], &wp));
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "N, ess, mean_log_weight, stderr, seed");
    assert_eq!(lines.len(), 4);
    assert!(lines[3].starts_with("100, ") && lines[3].ends_with(", 5"));
    assert_eq!(run(&["sweep", "--dims", "10,10"], &wp).status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{not json").unwrap();
    let o = run(&["classify"], &bad);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let extra = dir.path().join("extra.json");
    std::fs::write(&extra, format!(r#"{{"prior_spectrum":{POWER2},"noise_spectrum":{WHITE},"colour":1}}"#)).unwrap();
    assert_eq!(run(&["classify"], &extra).status.code(), Some(2));

    let neg = problem(&dir, "neg.json", r#"{"family":"const","scale":-1}"#, WHITE, r#"{"support":[]}"#);
    assert_eq!(run(&["classify"], &neg).status.code(), Some(2));

    assert_eq!(run(&["classify"], &dir.path().join("missing.json")).status.code(), Some(2));

    let not_tc = problem(&dir, "ntc.json", WHITE, WHITE, r#"{"support":[]}"#);
    assert_eq!(run(&["classify"], &not_tc).status.code(), Some(3));

    let mixed = dir.path().join("mixed.json");
    std::fs::write(
        &mixed,
        format!(
            r#"{{"prior_spectrum":{POWER2},"noise_spectrum":{WHITE},
               "prior_mean":{{"support":[],"tail":{{"scale":1,"exponent":2,"start":1}}}},
               "data":{{"support":[],"tail":{{"scale":1,"exponent":1,"start":1}}}}}}"#
        ),
    )
    .unwrap();
    assert_eq!(run(&["constant"], &mixed).status.code(), Some(4));
    assert_eq!(run(&["constant", "--truncate", "5"], &mixed).status.code(), Some(0));
    assert_eq!(run(&["constant", "--truncate", "0"], &mixed).status.code(), Some(2));
}

#[test]
fn output_file_and_tail_cutoff() {
    let dir = TempDir::new().unwrap();
    let wp = problem(&dir, "wp.json", POWER2, WHITE, r#"{"support":[]}"#);
    let out = dir.path().join("out.json");
    let o = bin().args(["--output"]).arg(&out).arg("constant").arg(&wp).output().unwrap();
    assert!(o.status.success() && o.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let default_width = v["bracket_width"].as_f64().unwrap();

    let o = bin().env("SPECTRAL_DA_TAIL_CUTOFF", "100").arg("constant").arg(&wp).output().unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let coarse = v["bracket_width"].as_f64().unwrap();
    assert!(coarse > default_width && coarse < 1e-3, "{coarse} vs {default_width}");
    let oracle = -0.5 * (std::f64::consts::PI.sinh() / std::f64::consts::PI).ln();
    assert!((v["log_c"].as_f64().unwrap() - oracle).abs() <= coarse / 2.0 + 1e-15);

    let o = bin().env("SPECTRAL_DA_TAIL_CUTOFF", "lots").arg("constant").arg(&wp).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn run_parameters_come_from_the_file() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("p.json");
    std::fs::write(
        &path,
        format!(r#"{{"prior_spectrum":{POWER2},"noise_spectrum":{WHITE},"data":{{"support":[[1,1]]}},"samples":500,"seed":9,"dims":[2,4],"modes":[1,3]}}"#),
    )
    .unwrap();
    let out = stdout(&run(&["sweep"], &path));
    assert_eq!(out.lines().count(), 3);
    assert!(out.lines().nth(1).unwrap().ends_with(", 9"));
    let out = stdout(&run(&["assimilate"], &path));
    assert_eq!(out.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect::<Vec<_>>(), ["1", "3"]);
    let v = json(&run(&["mc", "--seed", "10"], &path));
    assert_eq!(v["samples"], 500);
    assert_eq!(v["seed"], 10);
}
