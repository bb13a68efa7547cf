use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn bwopt(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bwopt"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("BWOPT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: &Output) -> String {
    assert!(o.status.success(), "failed: {}\n{}", o.status, String::from_utf8_lossy(&o.stderr));
    stdout(o)
}

#[test]
fn analyze_star_lists_both_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&bwopt(dir.path(), &["analyze", "--gen", "star:10", "--d", "10"]));
    assert!(text.contains("all workers"));
    assert!(text.contains("single worker"));
    let csv = fs::read_to_string(dir.path().join("analysis.csv")).unwrap();
    assert!(csv.starts_with("method,regime,workers,"));
    assert!(csv.lines().any(|l| l.starts_with("grace/star,all workers,10,")));
}

#[test]
fn missing_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = bwopt(dir.path(), &["analyze", "/nonexistent/topology.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_parameters_are_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = bwopt(dir.path(), &["analyze", "--gen", "ring:5", "--eps", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn invalid_topology_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[[nodes]]\nid = 1\nh = 1.0\n\n[[links]]\na = 1\nb = 1\nbandwidth = 1.0\n").unwrap();
    let o = bwopt(dir.path(), &["analyze", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));
}

#[test]
fn generator_matches_its_exported_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = bwopt::graph::topology::generate("torus:3x3:b=2").unwrap();
    let file = dir.path().join("torus.toml");
    fs::write(&file, spec.to_toml()).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&bwopt(&a, &["analyze", "--gen", "torus:3x3:b=2"]));
    ok(&bwopt(&b, &["analyze", file.to_str().unwrap()]));
    let read = |p: &Path| fs::read_to_string(p.join("analysis.csv")).unwrap();
    let keep = |s: String| s.lines().filter(|l| !l.contains("/p_torus")).collect::<Vec<_>>().join("\n");
    assert_eq!(keep(read(&a)), keep(read(&b)));
}

#[test]
fn topology_round_trips_through_toml() {
    let text = fs::read_to_string(fixture("switch_example.toml")).unwrap();
    let (spec, g) = bwopt::graph::TopologySpec::parse_graph(&text).unwrap();
    let (again, g2) = bwopt::graph::TopologySpec::parse_graph(&spec.to_toml()).unwrap();
    assert_eq!(spec, again);
    assert_eq!(g.ids(), g2.ids());
    assert_eq!(g.links().len(), g2.links().len());
}

#[test]
fn plan_five_node_trace_lists_the_splits() {
    let dir = tempfile::tempdir().unwrap();
    ok(&bwopt(dir.path(), &["plan", fixture("five_node.toml").to_str().unwrap(), "--d", "10"]));
    let trace = fs::read_to_string(dir.path().join("selection_trace.txt")).unwrap();
    for line in [
        "components: {1,2,3,4,5}",
        "components: {1,2,3,5} {4}",
        "components: {1,2,5} {3} {4}",
        "components: {1,2} {3} {4} {5}",
        "components: {1} {2} {3} {4} {5}",
    ] {
        assert!(trace.contains(line), "missing {line}\n{trace}");
    }
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["cut_tree"].as_array().unwrap().len(), 4);
    assert_eq!(plan["selection"].as_array().unwrap().len(), 5);
}

#[test]
fn plan_switch_example_packs_three_trees() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&bwopt(
        dir.path(),
        &["plan", fixture("switch_example.toml").to_str().unwrap(), "--terminals", "1,2,6"],
    ));
    assert!(text.contains("p = 3"), "{text}");
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["packing"]["p"], 3);
    assert_eq!(plan["packing"]["valid"], true);
}

#[test]
fn plan_singleton_subset_needs_no_packing() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&bwopt(dir.path(), &["plan", "--gen", "star:10"]));
    assert!(text.contains("no communication needed"), "{text}");
    let plan: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    assert_eq!(plan["packing"]["p"], 0);
}

#[test]
fn simulate_star_allreduce_takes_about_two_d() {
    let dir = tempfile::tempdir().unwrap();
    let text = ok(&bwopt(dir.path(), &["simulate", "--gen", "star:10", "--d", "1000"]));
    let line = text.lines().find(|l| l.starts_with("completion")).unwrap();
    let t: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((2000.0..=2200.0).contains(&t), "{t}");
    assert!(fs::read_to_string(dir.path().join("trace.csv")).unwrap().starts_with("time,event_kind,"));
    let util: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("utilization.json")).unwrap()).unwrap();
    assert_eq!(util["arcs"].as_array().unwrap().len(), 20);
}

#[test]
fn simulate_store_and_forward_and_naive_reduce_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(&bwopt(dir.path(), &["simulate", "--gen", "ring:5", "--d", "50", "--transfer", "store-and-forward"]));
    let text = ok(&bwopt(dir.path(), &["simulate", "--gen", "star:4", "--d", "10", "--op", "naive-reduce", "--pivot", "1"]));
    assert!(text.contains("completion 30 s"), "{text}");
}

fn experiment(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["experiment", "--gen", "star:4", "--methods", "grace,grace-all,sync,leon,hero", "--seeds", "1,2"];
    args.extend_from_slice(extra);
    bwopt(out, &args)
}

#[test]
fn small_experiment_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    ok(&experiment(dir.path(), &["--iters", "10", "--dim", "4"]));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 11);
    for m in ["grace", "grace-all", "sync", "leon", "hero"] {
        let run = fs::read_to_string(dir.path().join(format!("runs/{m}_seed1.csv"))).unwrap();
        assert!(run.starts_with("iter,sim_time_s,grad_norm_sq,f_value,total_batch\n"));
        assert_eq!(run.lines().count(), 12);
    }
    assert!(!dir.path().join("runs/.grace_seed1.csv.tmp").exists());
}

#[test]
fn zero_iterations_exit_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    ok(&experiment(dir.path(), &["--iters", "0"]));
    let run = fs::read_to_string(dir.path().join("runs/grace_seed1.csv")).unwrap();
    assert_eq!(run.lines().count(), 2);
}

#[test]
fn experiments_are_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&experiment(&a, &["--iters", "15", "--objective", "logreg", "--dim", "4", "--components", "2"]));
    ok(&experiment(&b, &["--iters", "15", "--objective", "logreg", "--dim", "4", "--components", "2"]));
    for f in ["summary.csv", "long.csv", "config.toml", "runs/leon_seed2.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn experiment_config_file_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    fs::write(&cfg, "gen = \"ring:4\"\nmethods = [\"grace-subset\"]\nsubset = [0, 1]\nseeds = [7]\niters = 3\ndim = 2\n")
        .unwrap();
    ok(&bwopt(dir.path(), &["experiment", "--config", cfg.to_str().unwrap()]));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let row = summary.lines().nth(1).unwrap();
    assert!(row.starts_with("grace-subset,7,max_iters,3,"), "{row}");
    assert!(row.split(',').nth(8) == Some("2"), "{row}");
}

#[test]
fn experiment_rejects_unknown_methods() {
    let dir = tempfile::tempdir().unwrap();
    let o = bwopt(dir.path(), &["experiment", "--gen", "star:3", "--methods", "adam"]);
    assert_eq!(o.status.code(), Some(2));
}
