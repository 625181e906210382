use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dircat::report::AnalysisReport;
use tempfile::TempDir;

fn dircat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dircat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_lines(dir: &Path, name: &str, header: Option<&str>, values: &[f64]) -> PathBuf {
    let mut s = String::new();
    if let Some(h) = header {
        s.push_str(h);
        s.push('\n');
    }
    for v in values {
        s.push_str(&format!("{v}\n"));
    }
    let p = dir.join(name);
    std::fs::write(&p, s).unwrap();
    p
}

/// Deterministic pseudo-data in [0, 1] with a point mass at zero.
fn pseudo(n: usize, shift: f64, step: u64) -> Vec<f64> {
    let mut x = 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(step);
    (0..n)
        .map(|_| {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            let u = (x >> 11) as f64 / (1u64 << 53) as f64;
            if u < 0.2 {
                0.0
            } else {
                (u * u + shift).min(1.0)
            }
        })
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_is_reproducible_and_conserves_input() {
    let dir = TempDir::new().unwrap();
    let c = write_lines(dir.path(), "c.txt", Some("value"), &pseudo(2000, 0.0, 1));
    let e = write_lines(dir.path(), "e.txt", None, &pseudo(1500, 0.05, 2));
    let out1 = dir.path().join("r1.json");
    let out2 = dir.path().join("r2.json");
    let csv1 = dir.path().join("q1.csv");
    let csv2 = dir.path().join("q2.csv");
    for (out, csv) in [(&out1, &csv1), (&out2, &csv2)] {
        let o = dircat(&[
            "analyze",
            "--control",
            s(&c),
            "--experiment",
            s(&e),
            "--bins",
            "50",
            "--draws",
            "20000",
            "--seed",
            "42",
            "--out",
            s(out),
            "--quantile-csv",
            s(csv),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = std::fs::read(&out1).unwrap();
    assert_eq!(a, std::fs::read(&out2).unwrap());
    assert_eq!(std::fs::read(&csv1).unwrap(), std::fs::read(&csv2).unwrap());

    let text = String::from_utf8(a).unwrap();
    assert!(!text.contains('\r'));
    let report = AnalysisReport::from_json(&text).unwrap();
    assert_eq!(report.to_json(), text);
    assert_eq!(report.observations.control, 2000);
    assert_eq!(report.observations.experiment, 1500);
    assert_eq!(report.config.seed, 42);
    assert_eq!(report.quantile_curve.len(), 99);
    assert_eq!(report.quantile_band, "pointwise");
    assert_eq!(report.version, env!("CARGO_PKG_VERSION"));
    assert!(report.chance_to_beat.estimate > 0.9);
}

#[test]
fn same_file_gives_even_odds() {
    let dir = TempDir::new().unwrap();
    let c = write_lines(dir.path(), "c.txt", None, &pseudo(3000, 0.0, 3));
    let o = dircat(&[
        "analyze",
        "--control",
        s(&c),
        "--experiment",
        s(&c),
        "--draws",
        "40000",
        "--seed",
        "9",
        "--quantiles",
        "0.5:0.5:0.1",
    ]);
    assert!(o.status.success());
    let r = AnalysisReport::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    let ctb = r.chance_to_beat;
    assert!((ctb.estimate - 0.5).abs() <= 4.0 * ctb.std_error, "{ctb:?}");
}

#[test]
fn missing_seed_is_generated_and_reported() {
    let dir = TempDir::new().unwrap();
    let c = write_lines(dir.path(), "c.txt", None, &[0.1, 0.2, 0.3]);
    let o = dircat(&[
        "analyze",
        "--control",
        s(&c),
        "--experiment",
        s(&c),
        "--draws",
        "100",
        "--quantiles",
        "0.5:0.5:0.1",
    ]);
    assert!(o.status.success());
    let stderr = String::from_utf8(o.stderr).unwrap();
    let seed: u64 = stderr
        .lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .expect("seed printed")
        .trim()
        .parse()
        .unwrap();
    let r = AnalysisReport::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(r.config.seed, seed);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = write_lines(dir.path(), "good.txt", None, &[0.1, 0.5]);
    let outside = write_lines(dir.path(), "outside.txt", None, &[0.1, 1.25]);
    let garbage = dir.path().join("garbage.txt");
    std::fs::write(&garbage, "x\n0.5\noops\n").unwrap();
    let base = |other: &Path| {
        vec![
            "analyze".to_string(),
            "--control".into(),
            s(&good).into(),
            "--experiment".into(),
            s(other).into(),
            "--seed".into(),
            "1".into(),
            "--draws".into(),
            "200".into(),
        ]
    };
    let run = |args: Vec<String>| {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        dircat(&refs)
    };

    let o = run(base(&garbage));
    assert_eq!(o.status.code(), Some(2));
    let msg = String::from_utf8(o.stderr).unwrap();
    assert!(msg.contains("garbage.txt:3"), "{msg}");

    let o = run(base(&outside));
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8(o.stderr).unwrap().contains("1.25"));

    let mut clamped = base(&outside);
    clamped.push("--clamp".into());
    let o = run(clamped);
    assert!(o.status.success());
    let r = AnalysisReport::from_json(std::str::from_utf8(&o.stdout).unwrap()).unwrap();
    assert_eq!(r.clamped.experiment.above, 1);
    assert_eq!(r.observations.experiment, 2);

    for extra in [
        vec!["--bins", "1"],
        vec!["--gamma", "1.5"],
        vec!["--quantiles", "0.9:0.1:0.1"],
        vec!["--prior-strength", "2"],
        vec!["--lower", "1", "--upper", "0"],
        vec!["--no-such-flag"],
    ] {
        let mut args = base(&good);
        args.extend(extra.iter().map(|a| a.to_string()));
        assert_eq!(run(args).status.code(), Some(4), "{extra:?}");
    }

    let mut args = base(&good);
    args.extend([
        "--out".into(),
        s(&dir.path().join("missing/dir/r.json")).into(),
    ]);
    assert_eq!(run(args).status.code(), Some(5));
}

#[test]
fn history_prior_flags() {
    let dir = TempDir::new().unwrap();
    let c = write_lines(dir.path(), "c.txt", None, &pseudo(200, 0.0, 4));
    let h = write_lines(dir.path(), "h.txt", Some("past"), &pseudo(500, 0.0, 5));
    let o = dircat(&[
        "analyze",
        "--control",
        s(&c),
        "--experiment",
        s(&c),
        "--seed",
        "3",
        "--draws",
        "500",
        "--prior-history",
        s(&h),
        "--prior-strength",
        "0.1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("\"kind\": \"history\""));
    assert!(text.contains("\"observations\": 500"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = dircat(&[
            "simulate",
            "--sims",
            "1",
            "--seed",
            "7",
            "--bins",
            "8,32",
            "--draws",
            "1000",
            "--resamples",
            "500",
            "--resolution",
            "100000",
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        (
            std::fs::read(&out).unwrap(),
            std::fs::read(out.with_extension("json")).unwrap(),
        )
    };
    let (csv_a, side_a) = run("a.csv");
    let (csv_b, side_b) = run("b.csv");
    assert_eq!(csv_a, csv_b);
    assert_eq!(side_a, side_b);
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with(
        "sim_id,estimator,bin_count,tau,statistic,truth,estimate,offset,ci_lo,ci_hi,covered"
    ));
    let sidecar: serde_json::Value = serde_json::from_slice(&side_a).unwrap();
    assert_eq!(sidecar["seed"], 7);
    assert_eq!(sidecar["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(sidecar["completed"], 1);
}

#[test]
fn offsets_are_recomputable_from_csv_columns() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.csv");
    let o = dircat(&[
        "simulate",
        "--sims",
        "2",
        "--seed",
        "1",
        "--bins",
        "16",
        "--draws",
        "500",
        "--resamples",
        "300",
        "--resolution",
        "100000",
        "--visitors-min",
        "1000",
        "--visitors-max",
        "2000",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (t, e, off) = (col("truth"), col("estimate"), col("offset"));
    let (emp, emp_off) = (col("empirical"), col("empirical_offset"));
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let f = |i: usize| rec[i].parse::<f64>().unwrap();
        assert_eq!(f(off), f(t) - f(e));
        assert_eq!(f(emp_off), f(emp) - f(e));
        rows += 1;
    }
    assert!(rows > 0);
}

#[test]
fn two_bins_are_flagged_as_wide() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("r.csv");
    let o = dircat(&[
        "simulate",
        "--sims",
        "30",
        "--seed",
        "2",
        "--bins",
        "2,64",
        "--draws",
        "1000",
        "--resamples",
        "500",
        "--resolution",
        "100000",
        "--visitors-min",
        "2000",
        "--visitors-max",
        "4000",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sidecar: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.with_extension("json")).unwrap()).unwrap();
    let wide: Vec<&str> = sidecar["wide_offsets"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap())
        .collect();
    assert!(wide.contains(&"dirichlet[2] mean_diff"), "{wide:?}");
    assert!(
        !wide
            .iter()
            .any(|w| w.starts_with("dirichlet[64] mean_diff")),
        "{wide:?}"
    );
}

#[test]
fn simulate_rejects_unwritable_output() {
    let o = dircat(&[
        "simulate",
        "--sims",
        "1",
        "--seed",
        "1",
        "--out",
        "/nonexistent/dir/r.csv",
    ]);
    assert_eq!(o.status.code(), Some(5));
    let o = dircat(&[
        "simulate", "--sims", "1", "--seed", "1", "--taus", "0.9,0.1", "--out", "x.csv",
    ]);
    assert_eq!(o.status.code(), Some(4));
}
