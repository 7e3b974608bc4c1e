use std::fs;
use std::path::Path;

use tempfile::TempDir;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn umetric(args: &[&str]) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("umetric").chain(args.iter().copied());
    let code = umetric::run(argv, &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = path(dir, name);
    fs::write(&p, text).unwrap();
    p
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

const THREE: &str = r#"{"points":["a","b","c"],"distances":[[0,1,2],[1,0,2],[2,2,0]]}"#;
const PATH: &str = r#"{"points":["a","b","c"],"distances":[[0,1,2],[1,0,1],[2,1,0]]}"#;

#[test]
fn validate_reports_ultrametric_input() {
    let dir = TempDir::new().unwrap();
    let space = write(&dir, "s.json", THREE);
    let r = umetric(&["validate", &space]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let v = json(&r.stdout);
    assert_eq!(v["is_ultrametric"], true);
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
}

#[test]
fn validate_lists_the_strong_triangle_violation() {
    let dir = TempDir::new().unwrap();
    let space = write(&dir, "s.json", PATH);
    let r = umetric(&["validate", &space]);
    assert_eq!(r.code, 0);
    let v = json(&r.stdout);
    assert_eq!(v["is_metric"], true);
    assert_eq!(v["is_ultrametric"], false);
    let first = &v["violations"][0];
    assert_eq!(
        (
            first["i"].as_str(),
            first["j"].as_str(),
            first["k"].as_str()
        ),
        (Some("a"), Some("c"), Some("b"))
    );
    assert_eq!(
        (first["lhs"].as_f64(), first["rhs"].as_f64()),
        (Some(2.0), Some(1.0))
    );
}

#[test]
fn embed_then_check_round_trip() {
    let dir = TempDir::new().unwrap();
    let space = path(&dir, "space.json");
    let emb = path(&dir, "emb.json");
    for (kind, extra) in [
        ("dendrogram", vec![]),
        ("padic", vec!["--p-base", "3", "--depth", "4"]),
    ] {
        let mut args = vec![
            "gen", "--kind", kind, "--n", "32", "--seed", "9", "-o", &space,
        ];
        args.extend(extra);
        assert_eq!(umetric(&args).code, 0);
        for p in ["1", "1.5", "2", "3", "10"] {
            assert_eq!(umetric(&["embed", "--p", p, &space, "-o", &emb]).code, 0);
            let r = umetric(&["check", &space, &emb]);
            assert_eq!(r.code, 0, "{}", r.stderr);
            assert!(json(&r.stdout)["max_rel_error"].as_f64().unwrap() <= 1e-9);
        }
        assert_eq!(
            umetric(&["embed", "--target", "c0", &space, "-o", &emb]).code,
            0
        );
        assert_eq!(
            json(&fs::read_to_string(&emb).unwrap())["target"]["kind"],
            "c0"
        );
        assert_eq!(umetric(&["check", &space, &emb]).code, 0);
    }
}

#[test]
fn check_fails_on_a_tampered_embedding() {
    let dir = TempDir::new().unwrap();
    let space = write(&dir, "s.json", THREE);
    let emb = path(&dir, "e.json");
    assert_eq!(umetric(&["embed", "--p", "2", &space, "-o", &emb]).code, 0);
    let tampered = fs::read_to_string(&emb)
        .unwrap()
        .replace("1.4142135623730951", "1.5");
    fs::write(&emb, tampered).unwrap();
    let r = umetric(&["check", &space, &emb]);
    assert_eq!(r.code, 1);
    assert_eq!(json(&r.stdout)["pass"], false);
}

#[test]
fn small_p_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let space = write(&dir, "s.json", THREE);
    let r = umetric(&["embed", "--p", "0.5", &space]);
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("p must be >= 1"), "{}", r.stderr);
    assert_eq!(umetric(&["embed", &space]).code, 2);
    assert_eq!(
        umetric(&["embed", "--target", "c0", "--p", "2", &space]).code,
        2
    );
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let path_space = write(&dir, "p.json", PATH);
    let bad_json = write(&dir, "bad.json", "{\"points\": [");
    let dup = write(
        &dir,
        "dup.json",
        r#"{"points":["a","a"],"distances":[[0,1],[1,0]]}"#,
    );
    let asym = write(&dir, "asym.csv", ",a,b\na,0,1\nb,2,0\n");
    assert_eq!(umetric(&["tree", &path_space]).code, 1);
    assert_eq!(umetric(&["embed", "--p", "2", &path_space]).code, 1);
    assert_eq!(umetric(&["validate", &bad_json]).code, 2);
    assert_eq!(umetric(&["validate", &dup]).code, 2);
    assert_eq!(umetric(&["validate", &asym]).code, 2);
    assert_eq!(umetric(&["validate", &path(&dir, "missing.json")]).code, 2);
    assert_eq!(umetric(&["frobnicate"]).code, 2);
    assert_eq!(umetric(&["--help"]).code, 0);
    assert_eq!(umetric(&["tree", "--format", "csv", &path_space]).code, 2);
}

#[test]
fn csv_spaces_load_with_or_without_the_corner_cell() {
    let dir = TempDir::new().unwrap();
    let with = write(&dir, "a.csv", ",a,b,c\na,0,1,2\nb,1,0,2\nc,2,2,0\n");
    let without = write(&dir, "b.csv", "a,b,c\na,0,1,2\nb,1,0,2\nc,2,2,0\n");
    let a = umetric(&["tree", &with]);
    let b = umetric(&["tree", &without]);
    assert_eq!(a.code, 0);
    assert_eq!(a.stdout, b.stdout);
    let mislabelled = write(&dir, "c.csv", "a,b\nb,0,1\na,1,0\n");
    assert_eq!(umetric(&["validate", &mislabelled]).code, 2);
}

#[test]
fn gen_csv_and_json_describe_the_same_space() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "s.csv");
    let js = path(&dir, "s.json");
    assert_eq!(
        umetric(&[
            "gen",
            "--kind",
            "dendrogram",
            "--n",
            "20",
            "--seed",
            "4",
            "--format",
            "csv",
            "-o",
            &csv
        ])
        .code,
        0
    );
    assert_eq!(
        umetric(&[
            "gen",
            "--kind",
            "dendrogram",
            "--n",
            "20",
            "--seed",
            "4",
            "-o",
            &js
        ])
        .code,
        0
    );
    assert_eq!(
        umetric(&["tree", &csv]).stdout,
        umetric(&["tree", &js]).stdout
    );
}

#[test]
fn tree_export_lists_members_by_label() {
    let dir = TempDir::new().unwrap();
    let space = write(&dir, "s.json", THREE);
    let v = json(&umetric(&["tree", &space]).stdout);
    assert_eq!(v["root"], 0);
    let nodes = v["nodes"].as_array().unwrap();
    assert_eq!(nodes.len(), 5);
    assert_eq!(nodes[0]["members"], serde_json::json!(["a", "b", "c"]));
    assert_eq!(nodes[0]["radius"], 2.0);
    assert_eq!(nodes[1]["members"], serde_json::json!(["a", "b"]));
    assert_eq!(nodes[1]["representative"], "a");
    assert_eq!(nodes[1]["parent"], 0);
    assert!(nodes[0]["parent"].is_null());
}

#[test]
fn outputs_are_deterministic() {
    let runs: Vec<String> = (0..2)
        .map(|_| umetric(&["gen", "--kind", "erdos-renyi", "--n", "15", "--seed", "3"]).stdout)
        .collect();
    assert_eq!(runs[0], runs[1]);
    let other = umetric(&["gen", "--kind", "erdos-renyi", "--n", "15", "--seed", "4"]).stdout;
    assert_ne!(runs[0], other);
    let a = umetric(&["wn", "--n", "12", "--trials", "2", "--seed", "5"]).stdout;
    assert_eq!(
        a,
        umetric(&["wn", "--n", "12", "--trials", "2", "--seed", "5"]).stdout
    );
}

#[test]
fn subdominant_and_distortion_agree() {
    let dir = TempDir::new().unwrap();
    let space = write(&dir, "s.json", PATH);
    let fitted = path(&dir, "f.json");
    assert_eq!(umetric(&["subdominant", &space, "-o", &fitted]).code, 0);
    let fit = json(&fs::read_to_string(&fitted).unwrap());
    assert_eq!(fit["distortion"], 2.0);
    assert_eq!(fit["distances"][0][2], 1.0);
    let map = write(&dir, "m.json", r#"{"a":"a","b":"b","c":"c"}"#);
    let r = umetric(&[
        "distortion",
        "--src",
        &space,
        "--dst",
        &fitted,
        "--map",
        &map,
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(json(&r.stdout)["distortion"], 2.0);
    let partial = write(&dir, "p.json", r#"{"a":"a"}"#);
    assert_eq!(
        umetric(&[
            "distortion",
            "--src",
            &space,
            "--dst",
            &fitted,
            "--map",
            &partial
        ])
        .code,
        2
    );
}

#[test]
fn dvoretzky_certificate_pipeline() {
    let dir = TempDir::new().unwrap();
    let space = path(&dir, "s.json");
    let cert = path(&dir, "c.json");
    assert_eq!(
        umetric(&[
            "gen",
            "--kind",
            "random-metric",
            "--n",
            "12",
            "--seed",
            "7",
            "-o",
            &space
        ])
        .code,
        0
    );
    let r = umetric(&[
        "dvoretzky",
        "--space",
        &space,
        "--distortion",
        "1.3",
        "--p",
        "2",
        "-o",
        &cert,
    ]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let c = json(&fs::read_to_string(&cert).unwrap());
    assert_eq!(c["method"], "exact");
    assert!(c["achieved_distortion"].as_f64().unwrap() <= 1.3);
    assert_eq!(
        c["size"].as_u64().unwrap() as usize,
        c["subset"].as_array().unwrap().len()
    );
    assert_eq!(c["embedding"]["target"]["p"], 2.0);
    let greedy = umetric(&[
        "dvoretzky",
        "--space",
        &space,
        "--distortion",
        "1.3",
        "--method",
        "greedy",
        "--strategy",
        "peel-worst",
    ]);
    assert_eq!(json(&greedy.stdout)["method"], "greedy-peel-worst");
    assert!(json(&greedy.stdout)["size"].as_u64() <= c["size"].as_u64());
    assert_eq!(
        umetric(&[
            "dvoretzky",
            "--space",
            &space,
            "--distortion",
            "2",
            "--exact-cap",
            "5"
        ])
        .code,
        1
    );
    assert_eq!(
        umetric(&["dvoretzky", "--space", &space, "--distortion", "0.5"]).code,
        2
    );
}

#[test]
fn wn_records_feed_plot() {
    let dir = TempDir::new().unwrap();
    let records = path(&dir, "r.jsonl");
    assert_eq!(
        umetric(&["wn", "--n", "10", "--trials", "4", "--seed", "1", "-o", &records]).code,
        0
    );
    assert_eq!(fs::read_to_string(&records).unwrap().lines().count(), 4);
    let r = umetric(&["plot", &records]);
    assert_eq!(r.code, 0);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], "n,mean_size,max_size");
    assert!(lines[1].starts_with("10,"));
    let timed = umetric(&[
        "wn", "--n", "10", "--trials", "4", "--seed", "1", "--timing",
    ])
    .stdout;
    let untimed = fs::read_to_string(&records).unwrap();
    for (a, b) in timed.lines().zip(untimed.lines()) {
        assert!(a.starts_with(b.trim_end_matches('}')));
    }
}

#[test]
fn extendcheck_sweeps_every_ball() {
    let dir = TempDir::new().unwrap();
    let space = path(&dir, "s.json");
    assert_eq!(
        umetric(&[
            "gen",
            "--kind",
            "dendrogram",
            "--n",
            "15",
            "--seed",
            "2",
            "-o",
            &space
        ])
        .code,
        0
    );
    let r = umetric(&["extendcheck", &space, "--p", "2"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert_eq!(json(&r.stdout)["pass"], true);
    let single = umetric(&[
        "extendcheck",
        &space,
        "--target",
        "c0",
        "--center",
        "x0",
        "--inner",
        "0",
        "--outer",
        "1",
    ]);
    assert_eq!(json(&single.stdout)["checks"], 1);
    assert_eq!(
        umetric(&["extendcheck", &space, "--p", "2", "--center", "nope"]).code,
        2
    );
    assert_eq!(
        umetric(&[
            "extendcheck",
            &space,
            "--p",
            "2",
            "--inner",
            "1",
            "--outer",
            "0.5"
        ])
        .code,
        2
    );
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "c.toml", "seed = 11\nformat = \"csv\"\n");
    let from_file = umetric(&[
        "--config",
        &config,
        "gen",
        "--kind",
        "random-metric",
        "--n",
        "4",
    ]);
    let explicit = umetric(&[
        "gen",
        "--kind",
        "random-metric",
        "--n",
        "4",
        "--seed",
        "11",
        "--format",
        "csv",
    ]);
    assert_eq!(from_file.code, 0);
    assert_eq!(from_file.stdout, explicit.stdout);
    let overridden = umetric(&[
        "--config",
        &config,
        "gen",
        "--kind",
        "random-metric",
        "--n",
        "4",
        "--seed",
        "12",
    ]);
    assert_ne!(overridden.stdout, from_file.stdout);
    let broken = write(&dir, "b.toml", "sed = 1\n");
    assert_eq!(
        umetric(&["--config", &broken, "gen", "--kind", "padic", "--n", "4"]).code,
        2
    );
    assert_eq!(
        umetric(&[
            "--tolerance-rel",
            "-1",
            "gen",
            "--kind",
            "padic",
            "--n",
            "4"
        ])
        .code,
        2
    );
}

#[test]
fn selftest_passes_and_bless_reproduces_the_goldens() {
    let r = umetric(&["selftest"]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    assert!(r.stdout.ends_with("0 failed\n"));
    let dir = TempDir::new().unwrap();
    assert_eq!(
        umetric(&["selftest", "--bless", dir.path().to_str().unwrap()]).code,
        0
    );
    let bundled = Path::new(env!("CARGO_MANIFEST_DIR")).join("golden");
    for entry in fs::read_dir(&bundled).unwrap() {
        let entry = entry.unwrap();
        let fresh = fs::read(dir.path().join(entry.file_name())).unwrap();
        assert_eq!(
            fresh,
            fs::read(entry.path()).unwrap(),
            "{:?}",
            entry.file_name()
        );
    }
}
