use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn hybrbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrbf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = hybrbf(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

struct Dir(TempDir);

impl Dir {
    fn new() -> Self {
        Self(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn write(&self, name: &str, body: &str) -> String {
        fs::write(self.path(name), body).unwrap();
        self.s(name)
    }
}

fn toml_file(path: &Path) -> toml::Table {
    fs::read_to_string(path).unwrap().parse().unwrap()
}

fn float(t: &toml::Table, key: &str) -> f64 {
    t[key].as_float().unwrap()
}

fn stdout_number(stdout: &str, label: &str) -> f64 {
    let line = stdout.lines().find(|l| l.starts_with(label)).unwrap();
    line.rsplit(' ').next().unwrap().parse().unwrap()
}

#[test]
fn fit_two_points_matches_the_analytic_solve() {
    let d = Dir::new();
    let input = d.write("two.csv", "x1,value\n0,1\n1,0\n");
    let stdout = ok(&[
        "fit",
        "--input",
        &input,
        "--output",
        &d.s("m.toml"),
        "--kernel",
        "gaussian",
        "--epsilon",
        "1",
    ]);
    let model = toml_file(&d.path("m.toml"));
    let c: Vec<f64> = model["coeffs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_float().unwrap())
        .collect();
    let e1 = (-1.0f64).exp();
    let det = 1.0 - e1 * e1;
    assert!((c[0] - 1.0 / det).abs() <= 1e-14);
    assert!((c[1] + e1 / det).abs() <= 1e-14);
    assert_eq!(stdout_number(&stdout, "minimum separation"), 1.0);
}

#[test]
fn fit_rejects_duplicate_rows() {
    let d = Dir::new();
    let input = d.write("dup.csv", "x1,x2,value\n0,0,1\n0.5,0.5,2\n0,0,1\n");
    let out = hybrbf(&[
        "fit",
        "--input",
        &input,
        "--output",
        &d.s("m.toml"),
        "--kernel",
        "cubic",
    ]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("degenerate input: points 0 and 2"),
        "{}",
        stderr(&out)
    );
    assert!(!d.path("m.toml").exists());
}

#[test]
fn malformed_csv_names_the_line() {
    let d = Dir::new();
    let input = d.write("bad.csv", "x1,x2,value\n0,0,1\n0.5,oops,2\n");
    let out = hybrbf(&[
        "fit",
        "--input",
        &input,
        "--output",
        &d.s("m.toml"),
        "--kernel",
        "cubic",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn augmented_fit_passes_the_patch_test_and_evaluates_at_its_centers() {
    let d = Dir::new();
    ok(&[
        "generate",
        "--layout",
        "grid",
        "--n",
        "81",
        "--truth",
        "linear",
        "--output",
        &d.s("lin.csv"),
    ]);
    let stdout = ok(&[
        "fit",
        "--input",
        &d.s("lin.csv"),
        "--output",
        &d.s("m.toml"),
        "--epsilon",
        "1",
        "--alpha",
        "1",
        "--beta",
        "1e-6",
        "--augment",
    ]);
    assert!(stdout_number(&stdout, "data residual") <= 1e-10, "{stdout}");

    ok(&[
        "eval",
        "--model",
        &d.s("m.toml"),
        "--input",
        &d.s("lin.csv"),
        "--output",
        &d.s("out.csv"),
    ]);
    let lines: Vec<String> = fs::read_to_string(d.path("out.csv"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let given: Vec<String> = fs::read_to_string(d.path("lin.csv"))
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(lines.len(), given.len());
    assert_eq!(lines[0], "x1,x2,value");
    for (a, b) in lines.iter().zip(&given).skip(1) {
        let va: Vec<f64> = a.split(',').map(|v| v.parse().unwrap()).collect();
        let vb: Vec<f64> = b.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(va[..2], vb[..2]);
        assert!((va[2] - vb[2]).abs() <= 1e-10);
    }

    // the output is itself a valid target file
    ok(&[
        "eval",
        "--model",
        &d.s("m.toml"),
        "--input",
        &d.s("out.csv"),
        "--output",
        &d.s("again.csv"),
    ]);
    assert_eq!(
        fs::read_to_string(d.path("again.csv")).unwrap(),
        fs::read_to_string(d.path("out.csv")).unwrap()
    );
}

#[test]
fn eval_edge_cases() {
    let d = Dir::new();
    let input = d.write("two.csv", "x1,value\n0,1\n1,0\n");
    ok(&[
        "fit",
        "--input",
        &input,
        "--output",
        &d.s("m.toml"),
        "--kernel",
        "gaussian",
        "--epsilon",
        "1",
    ]);

    let empty = d.write("empty.csv", "");
    ok(&[
        "eval",
        "--model",
        &d.s("m.toml"),
        "--input",
        &empty,
        "--output",
        &d.s("e.csv"),
    ]);
    assert_eq!(fs::read_to_string(d.path("e.csv")).unwrap(), "");

    let wrong = d.write("wrong.csv", "x1,x2\n0,0\n");
    let out = hybrbf(&[
        "eval",
        "--model",
        &d.s("m.toml"),
        "--input",
        &wrong,
        "--output",
        &d.s("w.csv"),
    ]);
    assert!(!out.status.success());
    assert!(
        stderr(&out).contains("2-D, the model is 1-D"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn fault_pipeline_through_the_cli() {
    let d = Dir::new();
    ok(&[
        "generate",
        "--layout",
        "fault",
        "--n",
        "78",
        "--seed",
        "4",
        "--output",
        &d.s("fault.csv"),
    ]);
    ok(&[
        "optimize",
        "--input",
        &d.s("fault.csv"),
        "--output",
        &d.s("p.toml"),
        "--objective",
        "loocv",
        "--seed",
        "4",
    ]);
    let p = toml_file(&d.path("p.toml"));
    let (e, a, b) = (float(&p, "epsilon"), float(&p, "alpha"), float(&p, "beta"));
    assert!((0.01..=20.0).contains(&e) && (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
    assert!(float(&p, "best_cost").is_finite());
    let trace = fs::read_to_string(d.path("p-trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 6);

    let (es, as_, bs) = (e.to_string(), a.to_string(), b.to_string());
    ok(&[
        "fit",
        "--input",
        &d.s("fault.csv"),
        "--output",
        &d.s("m.toml"),
        "--epsilon",
        &es,
        "--alpha",
        &as_,
        "--beta",
        &bs,
    ]);
    let mut targets = String::from("x1,x2\n");
    for i in 0..501 {
        for j in 0..501 {
            targets.push_str(&format!("{},{}\n", 0.1 * i as f64, 0.1 * j as f64));
        }
    }
    let targets = d.write("grid.csv", &targets);
    ok(&[
        "eval",
        "--model",
        &d.s("m.toml"),
        "--input",
        &targets,
        "--output",
        &d.s("surface.csv"),
    ]);
    let rows = fs::read_to_string(d.path("surface.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    assert_eq!(rows, 251001);
}

#[test]
fn optimize_reports_stability_violations() {
    let d = Dir::new();
    ok(&[
        "generate",
        "--layout",
        "grid",
        "--n",
        "25",
        "--output",
        &d.s("f.csv"),
    ]);
    let out = hybrbf(&[
        "optimize",
        "--input",
        &d.s("f.csv"),
        "--output",
        &d.s("p.toml"),
        "--c1",
        "3",
        "--c2",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(
        stderr(&out).contains("0 < c1+c2 < 4 violated"),
        "{}",
        stderr(&out)
    );
    assert!(!d.path("p.toml").exists());
}

#[test]
fn optimize_is_reproducible_and_flags_beat_the_config_file() {
    let d = Dir::new();
    ok(&[
        "generate",
        "--layout",
        "halton",
        "--n",
        "40",
        "--output",
        &d.s("h.csv"),
    ]);
    let cfg = d.write("run.toml", "seed = 5\nswarm = 6\ngenerations = 2\n");
    let run = |out: &str, extra: &[&str]| {
        let mut args = vec![
            "optimize",
            "--input",
            &d.s("h.csv"),
            "--output",
            out,
            "--config",
            &cfg,
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        args.extend(extra.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(&refs);
    };
    run(&d.s("a.toml"), &[]);
    run(&d.s("b.toml"), &[]);
    assert_eq!(
        fs::read(d.path("a.toml")).unwrap(),
        fs::read(d.path("b.toml")).unwrap()
    );
    assert_eq!(
        fs::read(d.path("a-trace.csv")).unwrap(),
        fs::read(d.path("b-trace.csv")).unwrap()
    );
    let a = toml_file(&d.path("a.toml"));
    assert_eq!(a["seed"].as_integer(), Some(5));
    assert_eq!(a["swarm"].as_integer(), Some(6));

    run(&d.s("c.toml"), &["--seed", "6"]);
    let c = toml_file(&d.path("c.toml"));
    assert_eq!(c["seed"].as_integer(), Some(6));
    assert_eq!(c["swarm"].as_integer(), Some(6));
}

#[test]
fn optimize_rms_on_franke_625_recovers_epsilon() {
    let d = Dir::new();
    ok(&[
        "generate",
        "--layout",
        "grid",
        "--n",
        "625",
        "--truth",
        "franke",
        "--output",
        &d.s("f.csv"),
    ]);
    ok(&[
        "optimize",
        "--input",
        &d.s("f.csv"),
        "--output",
        &d.s("p.toml"),
        "--objective",
        "rms",
        "--truth",
        "franke",
        "--swarm",
        "40",
        "--generations",
        "5",
        "--seed",
        "1",
    ]);
    let eps = float(&toml_file(&d.path("p.toml")), "epsilon");
    assert!((3.0..=8.0).contains(&eps), "epsilon {eps}");
}

#[test]
fn rms_objective_without_truth_is_a_usage_error() {
    let d = Dir::new();
    ok(&[
        "generate",
        "--layout",
        "grid",
        "--n",
        "25",
        "--output",
        &d.s("f.csv"),
    ]);
    let out = hybrbf(&[
        "optimize",
        "--input",
        &d.s("f.csv"),
        "--output",
        &d.s("p.toml"),
        "--objective",
        "rms",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--truth"));
}

fn report_files(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

fn main_csv(dir: &Path, study: &str) -> String {
    let name = report_files(dir)
        .into_iter()
        .find(|n| {
            n.starts_with(study)
                && n.ends_with(".csv")
                && n.matches('-').count() == study.matches('-').count() + 1
        })
        .unwrap();
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn bench_linear_reproduction_has_six_cells() {
    let d = Dir::new();
    let out = d.s("reports");
    ok(&[
        "bench",
        "--study",
        "linear-reproduction",
        "--n",
        "25,81",
        "--output",
        &out,
        "--swarm",
        "8",
        "--generations",
        "2",
    ]);
    let csv = main_csv(&d.path("reports"), "linear-reproduction");
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(report_files(&d.path("reports"))
        .iter()
        .any(|n| n.ends_with(".txt")));
}

#[test]
fn bench_scaling_has_a_slope_row() {
    let d = Dir::new();
    ok(&[
        "bench",
        "--study",
        "scaling",
        "--n",
        "400,900,1600",
        "--output",
        &d.s("r"),
    ]);
    let csv = main_csv(&d.path("r"), "scaling");
    assert!(csv.lines().any(|l| l.contains("loglog-slope")), "{csv}");
}

#[test]
fn bench_spectra_writes_spectrum_files() {
    let d = Dir::new();
    ok(&[
        "bench",
        "--study",
        "spectra",
        "--n",
        "625",
        "--output",
        &d.s("r"),
        "--swarm",
        "4",
        "--generations",
        "1",
    ]);
    let files = report_files(&d.path("r"));
    let rows = |suffix: &str| {
        let name = files
            .iter()
            .find(|n| n.ends_with(suffix))
            .unwrap_or_else(|| panic!("{suffix} in {files:?}"));
        fs::read_to_string(d.path("r").join(name))
            .unwrap()
            .lines()
            .count()
            - 1
    };
    assert_eq!(rows("-spectrum-n625-hybrid-rms.csv"), 625);
    assert_eq!(rows("-spectrum-n625-hybrid-poly-rms.csv"), 628);
}

#[test]
fn bench_rejects_unknown_studies_and_bad_specs() {
    let out = hybrbf(&["bench", "--study", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    let d = Dir::new();
    let out = hybrbf(&[
        "bench",
        "--study",
        "spectra",
        "--n",
        "26",
        "--output",
        &d.s("r"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("perfect square"));
    let out = hybrbf(&[
        "bench",
        "--study",
        "scaling",
        "--n",
        "400,900",
        "--output",
        &d.s("r"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_reads_experiment_overrides_from_the_config_file() {
    let d = Dir::new();
    let cfg = d.write("b.toml", "[experiment]\nnode_counts = [25]\nvariants = [\"hybrid+poly\"]\neval_grid_n = 10\n\n[experiment.pso]\nswarm_size = 3\ngenerations = 1\n");
    ok(&[
        "bench",
        "--study",
        "linear-reproduction",
        "--config",
        &cfg,
        "--output",
        &d.s("r"),
    ]);
    let csv = main_csv(&d.path("r"), "linear-reproduction");
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.contains("hybrid+poly"));
}
