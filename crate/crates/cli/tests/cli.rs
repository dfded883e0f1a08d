use std::process::{Command, Output};

fn bvgamma(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvgamma"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV output, split on commas (the tested columns never
/// contain quoted commas).
fn rows(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn law_reports() {
    let o = bvgamma(&["law", "--spec", "phi1", "--report", "N"]);
    assert!(o.status.success());
    assert_eq!(rows(&o)[0][..2], ["1", "1"]);

    let o = bvgamma(&["law", "--spec", "psi:2", "--report", "N"]);
    assert_eq!(rows(&o)[0][0], "11/6");
    assert!(rows(&o)[0][1].starts_with("1.833"));

    let o = bvgamma(&["law", "--spec", "theta", "--probe", "1.5"]);
    assert_eq!(rows(&o)[0], ["1.5", "0.5"]);

    let o = bvgamma(&["law", "--spec", "psi:2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("admissible,true"));
}

#[test]
fn invalid_law_is_a_configuration_error() {
    let o = bvgamma(&["law", "--spec", "phi:0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("phi:0"));
}

#[test]
fn minprob_examples() {
    let o = bvgamma(&["minprob", "--law", "phi1", "--n", "8"]);
    assert!(o.status.success());
    let v: f64 = rows(&o)[0][1].parse().unwrap();
    assert!((v - 7.0 * 4f64.ln()).abs() < 1e-8 * v);

    let o = bvgamma(&["minprob", "--law", "phi:3", "--n", "12"]);
    assert_eq!(rows(&o)[0][3], "period-3");

    let o = bvgamma(&["minprob", "--law", "psi:2", "--n", "16,32,64", "--starts", "16"]);
    let per_n: Vec<f64> = rows(&o).iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(per_n.len(), 3);
    assert!(per_n.windows(2).all(|w| w[1] > w[0]), "{per_n:?}");
    assert!(per_n[2] < 4.0 * 2f64.ln());
}

#[test]
fn minprob_json_and_minimizer_dump() {
    let o = bvgamma(&["--json", "minprob", "--law", "phi1", "--n", "4", "--starts", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let min = v["results"][0]["minimizer"].as_array().unwrap();
    assert_eq!(min.len(), 4);
    let o = bvgamma(&["minprob", "--law", "phi1", "--n", "3", "--starts", "2", "--dump-minimizer"]);
    assert_eq!(rows(&o)[0][4].split(' ').count(), 3);
}

#[test]
fn verify_suites() {
    for (suite, count) in [("rearrange", "300"), ("telescope", "2000"), ("domination", "500"), ("chain", "200")] {
        let o = bvgamma(&["verify", suite, "--count", count, "--seed", "7"]);
        assert!(o.status.success(), "{suite}: {}", String::from_utf8_lossy(&o.stderr));
        let r = &rows(&o)[0];
        let margin: f64 = r[3].parse().unwrap();
        assert!(margin >= -1e-10, "{suite}: {margin}");
        assert_eq!(r[6], "true");
    }
}

#[test]
fn failed_check_exits_one_with_witness() {
    // Demanding every margin be at least 1 must fail.
    let o = bvgamma(&["verify", "telescope", "--count", "50", "--tolerance=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("witness"));
}

#[test]
fn unknown_suite_is_a_configuration_error() {
    let o = bvgamma(&["verify", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_examples() {
    let o = bvgamma(&["bounds", "psi", "--m", "1..12"]);
    assert!(o.status.success());
    let ks: Vec<f64> = rows(&o).iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(ks.len(), 12);
    assert!(*ks.last().unwrap() > 0.9);
    assert!((ks[1] - 12.0 / 11.0 * 2f64.ln()).abs() < 1e-15);

    let o = bvgamma(&["--json", "bounds", "theta"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["k_lower"].as_f64(), Some(1.0));
    assert_eq!(v[0]["dimension_uniform"].as_bool(), Some(true));

    let o = bvgamma(&["bounds", "counterexample"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("c2,6/11"));
}

#[test]
fn zeta_bound_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.json");
    std::fs::write(&f, r#"{"points":[[0,1.0]],"left":{"geometric-left":{"ratio":4.0}}}"#).unwrap();
    let o = bvgamma(&["bounds", "zeta", "--sequence", f.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&o)[0][4], "1");
}

#[test]
fn energy_modes() {
    let o = bvgamma(&["energy", "pointwise", "--law", "phi1", "--u", "linear", "--deltas", "1e-1..1e-2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ratios: Vec<f64> = rows(&o).iter().map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(ratios.len(), 3);
    assert!(ratios.windows(2).all(|w| w[1] > w[0]));

    let o = bvgamma(&["energy", "geometric", "--d", "1..3"]);
    let gs: Vec<String> = rows(&o).iter().map(|r| r[1].clone()).collect();
    assert_eq!(gs[..2], ["2", "4"]);

    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("u.csv");
    std::fs::write(&u, "x,v\n0,0\n1,1\n2,0\n3,\n").unwrap();
    let o = bvgamma(&["energy", "step", "--law", "phi1", "--u", u.to_str().unwrap(), "--delta", "0.5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&o)[0][1], "inf");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"command":"minprob","law":"phi1","n":5,"starts":2}"#).unwrap();
    let c = cfg.to_str().unwrap();

    let o = bvgamma(&["--config", c]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(rows(&o)[0][0], "5");

    let o = bvgamma(&["--config", c, "minprob", "--n", "6"]);
    assert_eq!(rows(&o)[0][0], "6");

    std::fs::write(&cfg, r#"{"command":"minprob","bogus":1}"#).unwrap();
    assert_eq!(bvgamma(&["--config", c]).status.code(), Some(2));
}

#[test]
fn outputs_are_reproducible_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        for args in [
            vec!["minprob", "--law", "psi:2", "--n", "12", "--starts", "8"],
            vec!["verify", "chain", "--count", "100"],
        ] {
            let path = dir.path().join(format!("{}-{threads}.csv", args[0]));
            let o = Command::new(env!("CARGO_BIN_EXE_bvgamma"))
                .env("BVGAMMA_THREADS", threads)
                .args(&args)
                .args(["--output", path.to_str().unwrap()])
                .output()
                .unwrap();
            assert!(o.status.success());
            outputs.push(std::fs::read(&path).unwrap());
        }
    }
    assert_eq!(outputs[0], outputs[2]);
    assert_eq!(outputs[1], outputs[3]);
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_bvgamma"))
        .env("BVGAMMA_THREADS", "zero")
        .args(["law", "--spec", "phi1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
