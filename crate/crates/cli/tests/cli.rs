use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lightkg_core::evaluation::GoldSet;
use lightkg_core::graph::{deserialize_graph, GraphFormat};
use lightkg_core::Graph;

fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo").join(name)
}

fn lightkg(args: &[&Path]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lightkg"))
        .args(args)
        .env_remove("LIGHTKG_MODEL")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn p(s: &str) -> &Path {
    Path::new(s)
}

#[test]
fn missing_config_exits_1() {
    let tmp = tempfile::tempdir().unwrap();
    let out = lightkg(&[
        p("pipeline"),
        &demo("corpus.jsonl"),
        p("-c"),
        &tmp.path().join("nope.json"),
        p("-o"),
        &tmp.path().join("out"),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));
}

#[test]
fn unknown_flag_exits_1() {
    let out = lightkg(&[p("extract"), p("--bogus")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn malformed_corpus_exits_2_and_names_the_line() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("bad.jsonl");
    fs::write(&corpus, "{\"id\":\"a\",\"text\":\"fine\"}\nnot json\n").unwrap();
    let out = lightkg(&[p("extract"), &corpus, p("-o"), &tmp.path().join("t.jsonl")]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("bad.jsonl") && stderr.contains('2'), "{stderr}");
}

#[test]
fn stages_compose_to_the_pipeline_output() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let config = demo("config.json");
    ok(&lightkg(&[p("pipeline"), &demo("corpus.jsonl"), p("-c"), &config, p("-o"), &t.join("run")]));
    ok(&lightkg(&[p("extract"), &demo("corpus.jsonl"), p("-c"), &config, p("-o"), &t.join("triples.jsonl")]));
    ok(&lightkg(&[p("aggregate"), &t.join("triples.jsonl"), p("-c"), &config, p("-o"), &t.join("agg.json")]));
    ok(&lightkg(&[p("discover"), &t.join("agg.json"), p("-c"), &config, p("-o"), &t.join("graph.json")]));

    assert_eq!(
        fs::read(t.join("triples.jsonl")).unwrap(),
        fs::read(t.join("run/triples.jsonl")).unwrap()
    );
    assert_eq!(
        fs::read(t.join("graph.json")).unwrap(),
        fs::read(t.join("run/graph.json")).unwrap()
    );
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(t.join("run/summary.json")).unwrap()).unwrap();
    assert!(summary["evaluation"]["relation"]["f1"].is_number());
}

#[test]
fn graphml_output_reads_back_as_the_same_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    ok(&lightkg(&[p("extract"), &demo("corpus.jsonl"), p("-o"), &t.join("triples.jsonl")]));
    ok(&lightkg(&[p("aggregate"), &t.join("triples.jsonl"), p("-o"), &t.join("g.json")]));
    ok(&lightkg(&[p("aggregate"), &t.join("triples.jsonl"), p("-o"), &t.join("g.graphml")]));
    let a: Graph = deserialize_graph(&fs::read(t.join("g.json")).unwrap(), GraphFormat::Json).unwrap();
    let b: Graph = deserialize_graph(&fs::read(t.join("g.graphml")).unwrap(), GraphFormat::GraphMl).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fixture_pipeline_matches_golden_graph() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    ok(&lightkg(&[
        p("pipeline"),
        &demo("fixture_corpus.jsonl"),
        p("-c"),
        &demo("fixture_config.json"),
        p("-o"),
        &out,
    ]));
    assert_eq!(
        fs::read(out.join("graph.json")).unwrap(),
        fs::read(demo("golden/fixture_graph.json")).unwrap()
    );
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["counts"]["repaired_chunks"], 1);
    assert_eq!(summary["counts"]["rejected_lines"], 2);
}

#[test]
fn fixture_miss_exits_3_and_quarantines_partial_output() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("c.jsonl");
    fs::write(&corpus, "{\"id\":\"unseen\",\"text\":\"No fixture answers this.\"}\n").unwrap();
    let out = tmp.path().join("run");
    let res = lightkg(&[p("pipeline"), &corpus, p("-c"), &demo("fixture_config.json"), p("-o"), &out]);
    assert_eq!(res.status.code(), Some(3));
    assert!(!out.join("graph.json").exists());
    assert!(tmp.path().join("run.quarantine").join("error.txt").exists());
}

#[test]
fn eval_of_golden_graph_against_itself_is_perfect() {
    let tmp = tempfile::tempdir().unwrap();
    let golden = demo("golden/graph.json");
    let g: Graph = deserialize_graph(&fs::read(&golden).unwrap(), GraphFormat::Json).unwrap();
    let gold = tmp.path().join("gold.jsonl");
    fs::write(&gold, GoldSet::of_graph(&g).to_jsonl()).unwrap();

    let out = lightkg(&[p("eval"), &golden, p("--gold"), &gold, p("--json")]);
    ok(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for metric in ["entity", "relation"] {
        for score in ["p", "r", "f1"] {
            assert_eq!(report[metric][score], 1.0, "{metric}.{score}");
        }
    }
    assert_eq!(report["spurious"], serde_json::json!([]));
    assert_eq!(report["missing"], serde_json::json!([]));
}

#[test]
fn eval_json_shape_and_table() {
    let tmp = tempfile::tempdir().unwrap();
    let report_path = tmp.path().join("report.json");
    let out = lightkg(&[
        p("eval"),
        &demo("golden/graph.json"),
        p("--gold"),
        &demo("gold.jsonl"),
        p("--policy"),
        p("relaxed"),
        p("--json"),
        p("--report"),
        &report_path,
    ]);
    ok(&out);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report, serde_json::from_slice::<serde_json::Value>(&fs::read(&report_path).unwrap()).unwrap());
    for key in ["entity", "relation"] {
        for score in ["p", "r", "f1"] {
            assert!(report[key][score].as_f64().is_some_and(|f| (0.0..=1.0).contains(&f)), "{key}.{score}");
        }
    }
    for key in ["matched", "missing", "spurious"] {
        assert!(report[key].is_array(), "{key}");
    }
    let first = &report["matched"][0];
    assert!(first["predicted"]["kind"].is_string() && first["gold"]["kind"].is_string(), "{first}");

    let table = lightkg(&[p("eval"), &demo("golden/graph.json"), p("--gold"), &demo("gold.jsonl")]);
    ok(&table);
    let text = String::from_utf8_lossy(&table.stdout);
    assert!(text.contains("entity") && text.contains("relation"), "{text}");
}

#[test]
fn unknown_policy_is_a_usage_error() {
    let out = lightkg(&[
        p("eval"),
        &demo("golden/graph.json"),
        p("--gold"),
        &demo("gold.jsonl"),
        p("--policy"),
        p("fuzzy"),
    ]);
    assert_eq!(out.status.code(), Some(1));
}
