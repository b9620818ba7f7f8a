use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fracpx"));
    c.env_remove("FRACPX_OUT_DIR");
    c
}

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn assert_schema(file: &Path, schema: &str) {
    let schema = read_json(&repo().join("schemas").join(format!("{schema}.schema.json")));
    let v = jsonschema::validator_for(&schema).unwrap();
    let inst = read_json(file);
    let errs: Vec<String> = v.iter_errors(&inst).map(|e| e.to_string()).collect();
    assert!(errs.is_empty(), "{}: {errs:?}", file.display());
}

const LINEAR: &str = r#"
[domain]
lower = [0.0]
upper = [1.0]
nodes = [65]

[exponent.p]
kind = "constant"
value = 2.0
s = 0.5

[function]
kind = "linear"
grad = [1.0]
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], cfg: &Path, out: &Path) -> i32 {
    let st = bin()
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap();
    st.status.code().unwrap()
}

#[test]
fn norm_of_linear_function() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "c.toml", LINEAR);
    assert_eq!(run(&["norm"], &cfg, d.path()), 0);
    let f = d.path().join("norm_report.json");
    assert_schema(&f, "norm_report");
    let r = read_json(&f);
    // 2 / ((p(1-s)) (p(1-s) + 1)) with p = 2, s = 1/2
    let g = r["sobolev"]["gagliardo_modular"].as_f64().unwrap();
    assert!((g - 1.0).abs() < 0.02, "{g}");
    assert_eq!(r["passed"], true);
}

#[test]
fn norm_of_constant_function() {
    let d = tempfile::tempdir().unwrap();
    let text = LINEAR.replace("kind = \"linear\"\ngrad = [1.0]", "kind = \"constant\"\nvalue = 3.0")
        + "\n[exponent.q]\nkind = \"constant\"\nvalue = 2.0\n";
    let cfg = write_config(d.path(), "c.toml", &text);
    assert_eq!(run(&["norm"], &cfg, d.path()), 0);
    let r = read_json(&d.path().join("norm_report.json"));
    assert!((r["lebesgue"]["modular"].as_f64().unwrap() - 9.0).abs() < 1e-12);
    assert!((r["lebesgue"]["norm"].as_f64().unwrap() - 3.0).abs() < 1e-8);
    assert_eq!(r["sobolev"]["gagliardo_modular"].as_f64().unwrap(), 0.0);
}

#[test]
fn config_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let bad = write_config(d.path(), "bad.toml", &LINEAR.replace("value = 2.0", "value = 0.9"));
    assert_eq!(run(&["norm"], &bad, d.path()), 1);

    let broken = write_config(d.path(), "broken.toml", &LINEAR.replace("value = 2.0", "value = "));
    let out = bin()
        .args(["norm", "--config"])
        .arg(&broken)
        .arg("--out")
        .arg(d.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 9"), "{msg}");

    let missing = d.path().join("nope.toml");
    assert_eq!(run(&["norm"], &missing, d.path()), 1);
}

#[test]
fn zero_nonlinearity_solves_to_zero() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "z.toml", &format!("{LINEAR}\n[cutoff]\nenabled = false\n"));
    assert_eq!(run(&["solve"], &cfg, d.path()), 0);
    let f = d.path().join("solve_report.json");
    assert_schema(&f, "solve_report");
    let r = read_json(&f);
    assert!(r["result"]["sup_norm"].as_f64().unwrap() < 1e-4);
    let hist = std::fs::read_to_string(d.path().join("history.csv")).unwrap();
    assert!(hist.starts_with("iteration,energy,residual_norm\n"));

    // the tail term alone is not admissible
    let on = write_config(d.path(), "on.toml", LINEAR);
    assert_eq!(run(&["solve"], &on, d.path()), 1);
}

#[test]
fn non_convergence_exits_three_with_report() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "c.toml",
        &format!("{LINEAR}\n[nonlinearity]\nkind = \"prototype\"\nlambda = 5.0\n[exponent.q]\nkind = \"constant\"\nvalue = 3.0\n[exponent.r]\nkind = \"constant\"\nvalue = 1.7\n[solver]\nmax_iters = 2\n[cutoff]\nbeta = 0.1\n"),
    );
    assert_eq!(run(&["solve"], &cfg, d.path()), 3);
    let r = read_json(&d.path().join("solve_report.json"));
    assert_eq!(r["result"]["converged"], false);
    assert_eq!(r["result"]["stop_reason"], "max_iterations");
}

#[test]
fn solve_then_degiorgi_on_default_config() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path();
    let st = bin().args(["solve", "--out"]).arg(out).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let sol = out.join("solution.csv");
    let st = bin().args(["degiorgi", "--out"]).arg(out).arg("--solution").arg(&sol).status().unwrap();
    assert_eq!(st.code(), Some(0));
    let f = out.join("degiorgi_report.json");
    assert_schema(&f, "degiorgi_report");
    let r = read_json(&f);
    let v = r["parts"][0]["verdict"].as_str().unwrap();
    assert!(v.starts_with("vanishes at level"), "{v}");
    let csv = std::fs::read_to_string(out.join("degiorgi_trace.csv")).unwrap();
    assert!(csv.starts_with("n,k_n,measure,z_n\n"));
    assert!(out.join("degiorgi_trace_neg.csv").exists());

    // same file on a 65-node grid
    let cfg = write_config(out, "c.toml", LINEAR);
    assert_eq!(run(&["degiorgi", "--solution", sol.to_str().unwrap()], &cfg, &out.join("x")), 1);
}

#[test]
fn degiorgi_formula_records_bound() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path();
    assert_eq!(bin().args(["solve", "--out"]).arg(out).status().unwrap().code(), Some(0));
    let text = fracpx_cli::DEFAULT_CONFIG.replace(
        "mode = \"sup_fraction\"\nvalue = 0.55",
        "mode = \"formula\"\nc16 = 1.0\ngamma1 = 1.0\ngamma2 = 1.0\nb = 1.0",
    );
    let cfg = write_config(out, "f.toml", &text);
    let code = run(&["degiorgi", "--solution", out.join("solution.csv").to_str().unwrap()], &cfg, out);
    let r = read_json(&out.join("degiorgi_report.json"));
    assert_schema(&out.join("degiorgi_report.json"), "degiorgi_report");
    let part = &r["parts"][0];
    assert!(part["selection"]["k_star"].is_number());
    let bound = part["bound"]["passed"].as_bool().unwrap();
    assert_eq!(code == 0, bound && r["passed"].as_bool().unwrap());
}

#[test]
fn zero_solution_gives_zero_trace() {
    let d = tempfile::tempdir().unwrap();
    let sol = d.path().join("zero.csv");
    let mut s = String::from("x,value\n");
    for i in 0..65 {
        s.push_str(&format!("{:e},0\n", i as f64 / 64.0));
    }
    std::fs::write(&sol, s).unwrap();
    let cfg = write_config(d.path(), "c.toml", LINEAR);
    assert_eq!(run(&["degiorgi", "--solution", sol.to_str().unwrap()], &cfg, d.path()), 0);
    let r = read_json(&d.path().join("degiorgi_report.json"));
    for part in r["parts"].as_array().unwrap() {
        for lvl in part["trace"]["levels"].as_array().unwrap() {
            assert_eq!(lvl["z"].as_f64().unwrap(), 0.0);
        }
        assert_eq!(part["verdict"], "vanishes at level 0");
    }
}

#[test]
fn solve_is_deterministic_and_env_sets_out_dir() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = (d.path().join("a"), d.path().join("b"));
    assert_eq!(bin().args(["solve", "--seed", "3", "--out"]).arg(&a).status().unwrap().code(), Some(0));
    let st = bin()
        .args(["solve", "--seed", "3", "--threads", "2"])
        .env("FRACPX_OUT_DIR", &b)
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    for f in ["solution.csv", "history.csv", "solve_report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn negative_control_fails_subspace_stage() {
    let d = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/negative_control.toml");
    assert_eq!(run(&["suite"], &cfg, d.path()), 2);
    let f = d.path().join("suite_summary.json");
    assert_schema(&f, "suite_summary");
    let r = read_json(&f);
    assert_eq!(r["failed"], serde_json::json!(["subspace"]));
    assert_schema(&d.path().join("multistart.json"), "multistart");
}

#[test]
fn sweep_config_writes_stability_table() {
    let d = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/sweep.toml");
    assert_eq!(run(&["suite"], &cfg, d.path()), 0);
    let table = std::fs::read_to_string(d.path().join("imbedding_sweep.csv")).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows[0], "nodes,max_ratio");
    assert_eq!(rows.len(), 4);
    let r = read_json(&d.path().join("suite_summary.json"));
    let stage = r["stages"].as_array().unwrap().iter().find(|s| s["name"] == "imbedding_sweep").unwrap();
    assert_eq!(stage["status"], "passed");
}

#[test]
fn bundled_configs_parse() {
    for f in ["default", "negative_control", "sweep", "variable_exponent"] {
        fracpx_cli::config::load(&repo().join(format!("configs/{f}.toml"))).unwrap();
    }
    let out = bin().arg("default-config").output().unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), fracpx_cli::DEFAULT_CONFIG);
}

#[test]
fn variable_exponent_norm_and_solve() {
    let d = tempfile::tempdir().unwrap();
    let cfg = repo().join("configs/variable_exponent.toml");
    assert_eq!(run(&["norm"], &cfg, d.path()), 0);
    assert_eq!(run(&["solve"], &cfg, d.path()), 0);
    let r = read_json(&d.path().join("solve_report.json"));
    assert!(r["result"]["energy"].as_f64().unwrap() < 0.0);
}
