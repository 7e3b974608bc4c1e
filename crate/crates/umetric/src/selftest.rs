//! Bundled golden outputs plus a gen -> validate -> tree -> embed -> check
//! round trip over a fixed matrix of generated spaces.

use std::fmt::Write as _;
use std::path::Path;

use umetric_core::dvoretzky::best_subset_exact;
use umetric_core::embed::embed_space;
use umetric_core::{
    build_tree, generate, isometry_check, subdominant_ultrametric, validate, wn_experiment,
    EmbeddingTarget, FiniteMetricSpace, GenKind, GenSpec, Tolerance,
};

use crate::format;

struct Golden {
    file: &'static str,
    expected: &'static str,
    produce: fn() -> String,
}

macro_rules! golden {
    ($file:literal, $produce:expr) => {
        Golden {
            file: $file,
            expected: include_str!(concat!("../golden/", $file)),
            produce: $produce,
        }
    };
}

fn space(kind: GenKind, n: usize, seed: u64) -> FiniteMetricSpace {
    generate(&GenSpec::new(kind, n, seed)).expect("bundled specs are valid")
}

fn dendrogram12() -> FiniteMetricSpace {
    space(GenKind::dendrogram(), 12, 1)
}

fn padic10() -> FiniteMetricSpace {
    space(GenKind::padic(3, 3), 10, 2)
}

fn three_point() -> FiniteMetricSpace {
    FiniteMetricSpace::from_rows(
        vec!["a".into(), "b".into(), "c".into()],
        &[
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 2.0],
            vec![2.0, 2.0, 0.0],
        ],
    )
    .expect("valid")
}

fn embed_json(space: &FiniteMetricSpace, target: EmbeddingTarget) -> String {
    format::embedding_to_json(
        &embed_space(space, target, Tolerance::default()).expect("ultrametric input"),
    )
}

fn goldens() -> Vec<Golden> {
    vec![
        golden!("gen-dendrogram.json", || format::space_to_json(
            &dendrogram12(),
            None
        )),
        golden!("gen-padic.json", || format::space_to_json(&padic10(), None)),
        golden!("gen-erdos-renyi.csv", || format::space_to_csv(&space(
            GenKind::erdos_renyi(),
            8,
            3
        ))),
        golden!("gen-random-metric.json", || format::space_to_json(
            &space(GenKind::random_metric(), 6, 4),
            None
        )),
        golden!("validate-padic.json", || {
            let s = padic10();
            format::validation_to_json(&s, &validate(&s, Tolerance::default()))
        }),
        golden!("validate-random-metric.json", || {
            let s = space(
                GenKind::RandomMetric {
                    low: 1.0,
                    high: 3.0,
                },
                5,
                4,
            );
            format::validation_to_json(&s, &validate(&s, Tolerance::default()))
        }),
        golden!("tree-dendrogram.json", || {
            let s = dendrogram12();
            format::tree_to_json(
                &s,
                &build_tree(&s, Tolerance::default()).expect("ultrametric input"),
            )
        }),
        golden!("embed-three-point-p2.json", || embed_json(
            &three_point(),
            EmbeddingTarget::Lp { p: 2.0 }
        )),
        golden!("embed-three-point-p1.json", || embed_json(
            &three_point(),
            EmbeddingTarget::Lp { p: 1.0 }
        )),
        golden!("embed-padic-p3.json", || embed_json(
            &padic10(),
            EmbeddingTarget::Lp { p: 3.0 }
        )),
        golden!("embed-dendrogram-c0.csv", || {
            let emb = embed_space(&dendrogram12(), EmbeddingTarget::C0, Tolerance::default())
                .expect("ultrametric");
            format::embedding_to_csv(&emb)
        }),
        golden!("subdominant-random-metric.json", || {
            let fit = subdominant_ultrametric(&space(GenKind::random_metric(), 6, 4));
            format::space_to_json(&fit.to_space(), Some(fit.distortion))
        }),
        golden!("dvoretzky-random-metric.json", || {
            let s = space(
                GenKind::RandomMetric {
                    low: 1.0,
                    high: 4.0,
                },
                10,
                5,
            );
            let mut cert = best_subset_exact(&s, 1.5).expect("small space");
            cert.attach_lp(2.0, Tolerance::default())
                .expect("fitted space is ultrametric");
            format::certificate_to_json(&cert)
        }),
        golden!("wn-n10.jsonl", wn_records),
        golden!("plot-wn.csv", || {
            let records = format::read_records_jsonl(&wn_records()).expect("own output parses");
            format::plot_csv(&records)
        }),
    ]
}

fn wn_records() -> String {
    [8, 10]
        .into_iter()
        .flat_map(|n| wn_experiment(n, 3, 6, 22).expect("valid experiment"))
        .map(|r| format::record_to_jsonl(&r, None))
        .collect()
}

fn roundtrip_specs() -> Vec<GenSpec> {
    let mut specs = Vec::new();
    for seed in 1..=3 {
        for n in [2, 17, 60] {
            specs.push(GenSpec::new(GenKind::dendrogram(), n, seed));
        }
        specs.push(GenSpec::new(GenKind::padic(2, 6), 40, seed));
        specs.push(GenSpec::new(GenKind::padic(3, 4), 50, seed));
        specs.push(GenSpec::new(GenKind::padic(5, 2), 25, seed));
    }
    specs
}

const ROUNDTRIP_TARGETS: [EmbeddingTarget; 6] = [
    EmbeddingTarget::Lp { p: 1.0 },
    EmbeddingTarget::Lp { p: 1.5 },
    EmbeddingTarget::Lp { p: 2.0 },
    EmbeddingTarget::Lp { p: 3.0 },
    EmbeddingTarget::Lp { p: 10.0 },
    EmbeddingTarget::C0,
];

fn target_name(target: EmbeddingTarget) -> String {
    match target {
        EmbeddingTarget::Lp { p } => format!("lp{p}"),
        EmbeddingTarget::C0 => "c0".into(),
    }
}

/// Serializes, re-reads and checks one generated space under every target.
fn roundtrip(spec: &GenSpec) -> Result<(), String> {
    let tol = Tolerance::default();
    let original = generate(spec).map_err(|e| e.to_string())?;
    let text = format::space_to_json(&original, None);
    let space = format::read_space_json(text.as_bytes(), tol).map_err(|e| e.to_string())?;
    if space != original {
        return Err("space changed across a JSON round trip".into());
    }
    if !validate(&space, tol).is_ultrametric {
        return Err("generated space is not ultrametric".into());
    }
    let tree = build_tree(&space, tol).map_err(|e| e.to_string())?;
    format::tree_to_json(&space, &tree);
    for target in ROUNDTRIP_TARGETS {
        let emb = embed_space(&space, target, tol).map_err(|e| e.to_string())?;
        let emb_text = format::embedding_to_json(&emb);
        let reread =
            format::read_embedding_json(emb_text.as_bytes(), &space).map_err(|e| e.to_string())?;
        let check = isometry_check(&space, &reread, tol).map_err(|e| e.to_string())?;
        if !check.pass {
            return Err(format!(
                "{}: max relative error {}",
                target_name(target),
                check.max_rel_error
            ));
        }
    }
    Ok(())
}

fn first_difference(expected: &str, actual: &str) -> usize {
    expected
        .lines()
        .zip(actual.lines())
        .position(|(a, b)| a != b)
        .unwrap_or_else(|| expected.lines().count().min(actual.lines().count()))
        + 1
}

/// Appends one line per check to `report` and returns the number of failures.
pub fn run(report: &mut String) -> usize {
    let mut failures = 0;
    let mut total = 0;
    for g in goldens() {
        total += 1;
        let actual = (g.produce)();
        if actual == g.expected {
            let _ = writeln!(report, "golden {}: ok", g.file);
        } else {
            failures += 1;
            let line = first_difference(g.expected, &actual);
            let _ = writeln!(report, "golden {}: MISMATCH at line {line}", g.file);
        }
    }
    for spec in roundtrip_specs() {
        total += 1;
        let name = format!("{}-n{}-seed{}", spec.kind.name(), spec.n, spec.seed);
        match roundtrip(&spec) {
            Ok(()) => {
                let _ = writeln!(report, "roundtrip {name}: ok");
            }
            Err(why) => {
                failures += 1;
                let _ = writeln!(report, "roundtrip {name}: FAILED ({why})");
            }
        }
    }
    let _ = writeln!(
        report,
        "selftest: {} passed, {failures} failed",
        total - failures
    );
    failures
}

/// Writes the current output of every golden case into `dir`.
pub fn bless(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for g in goldens() {
        std::fs::write(dir.join(g.file), (g.produce)())?;
    }
    Ok(())
}
