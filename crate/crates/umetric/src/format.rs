//! Reading and writing spaces, trees, embeddings, reports and experiment
//! records.
//!
//! Every writer is deterministic: maps are emitted in point or node order and
//! floats go through the shortest round-trip representation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use umetric_core::{
    BallTree, Bound, DistortionReport, EmbeddingTarget, ExperimentRecord, FiniteMetricSpace,
    IsometryCheck, NodeId, PointMap, SearchMethod, SparseEmbedding, SubsetCertificate, Tolerance,
    ValidationReport,
};

use crate::error::FormatError;

type Result<T> = std::result::Result<T, FormatError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceFormat {
    Json,
    Csv,
}

impl SpaceFormat {
    /// `.csv` files are CSV, anything else is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => SpaceFormat::Csv,
            _ => SpaceFormat::Json,
        }
    }
}

fn pretty<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("in-memory serialization cannot fail");
    s.push('\n');
    s
}

fn number(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_owned()
    } else {
        x.to_string()
    }
}

// ---------------------------------------------------------------- spaces

#[derive(Serialize, Deserialize)]
struct SpaceDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    points: Vec<String>,
    distances: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distortion: Option<f64>,
}

impl SpaceDoc {
    fn new(space: &FiniteMetricSpace, distortion: Option<f64>) -> Self {
        SpaceDoc {
            name: space.name().map(str::to_owned),
            points: space.labels().to_vec(),
            distances: space.rows().map(<[f64]>::to_vec).collect(),
            distortion,
        }
    }

    fn into_space(self, tol: Tolerance) -> Result<FiniteMetricSpace> {
        let space = FiniteMetricSpace::from_rows_with_tolerance(self.points, &self.distances, tol)?;
        Ok(match self.name {
            Some(name) => space.with_name(name),
            None => space,
        })
    }
}

pub fn read_space(bytes: &[u8], format: SpaceFormat, tol: Tolerance) -> Result<FiniteMetricSpace> {
    match format {
        SpaceFormat::Json => read_space_json(bytes, tol),
        SpaceFormat::Csv => read_space_csv(bytes, tol),
    }
}

pub fn read_space_json(bytes: &[u8], tol: Tolerance) -> Result<FiniteMetricSpace> {
    let doc: SpaceDoc = serde_json::from_slice(bytes)?;
    doc.into_space(tol)
}

/// Header row of labels (optionally preceded by an empty corner cell), then
/// one row per point: its label followed by its distances.
pub fn read_space_csv(bytes: &[u8], tol: Tolerance) -> Result<FiniteMetricSpace> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(FormatError::Malformed("CSV input is empty".into())),
    };
    let body: Vec<csv::StringRecord> = records.collect::<std::result::Result<_, _>>()?;
    let n = body.len();
    let labels: Vec<String> = if header.len() == n + 1 && header[0].is_empty() {
        header.iter().skip(1).map(str::to_owned).collect()
    } else if header.len() == n {
        header.iter().map(str::to_owned).collect()
    } else {
        return Err(FormatError::Malformed(format!(
            "CSV header has {} labels but there are {n} rows",
            header.len()
        )));
    };
    let mut rows = Vec::with_capacity(n);
    for (r, record) in body.iter().enumerate() {
        if record.len() != n + 1 {
            return Err(FormatError::Malformed(format!(
                "CSV row {} has {} cells, expected a label and {n} distances",
                r + 1,
                record.len()
            )));
        }
        if record[0] != labels[r] {
            return Err(FormatError::Malformed(format!(
                "CSV row {} is labelled {:?} but the header says {:?}",
                r + 1,
                &record[0],
                labels[r]
            )));
        }
        let row = record
            .iter()
            .skip(1)
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| {
                    FormatError::Malformed(format!("CSV row {}: {cell:?} is not a number", r + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(FiniteMetricSpace::from_rows_with_tolerance(
        labels, &rows, tol,
    )?)
}

/// The space in JSON; `distortion` adds the field carried by fitted spaces.
pub fn space_to_json(space: &FiniteMetricSpace, distortion: Option<f64>) -> String {
    pretty(&SpaceDoc::new(space, distortion))
}

pub fn space_to_csv(space: &FiniteMetricSpace) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("").chain(space.labels().iter().map(String::as_str));
    w.write_record(header).expect("writing to memory");
    for (label, row) in space.labels().iter().zip(space.rows()) {
        let cells = std::iter::once(label.clone()).chain(row.iter().map(|&d| number(d)));
        w.write_record(cells).expect("writing to memory");
    }
    csv_string(w)
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("flushing to memory"))
        .expect("CSV of UTF-8 input is UTF-8")
}

// ---------------------------------------------------------------- trees

#[derive(Serialize)]
struct TreeDoc<'a> {
    root: NodeId,
    depth: usize,
    level_sizes: &'a [usize],
    nodes: Vec<NodeDoc<'a>>,
}

#[derive(Serialize)]
struct NodeDoc<'a> {
    id: NodeId,
    parent: Option<NodeId>,
    members: Vec<&'a str>,
    radius: f64,
    representative: &'a str,
    children: &'a [NodeId],
}

pub fn tree_to_json(space: &FiniteMetricSpace, tree: &BallTree) -> String {
    let nodes = tree
        .nodes()
        .iter()
        .map(|node| NodeDoc {
            id: node.id,
            parent: node.parent,
            members: node.members.iter().map(|&m| space.label(m)).collect(),
            radius: node.radius,
            representative: space.label(node.representative),
            children: &node.children,
        })
        .collect();
    pretty(&TreeDoc {
        root: tree.root(),
        depth: tree.depth(),
        level_sizes: tree.level_sizes(),
        nodes,
    })
}

// ---------------------------------------------------------------- embeddings

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TargetDoc {
    Lp { p: f64 },
    C0,
}

impl From<EmbeddingTarget> for TargetDoc {
    fn from(t: EmbeddingTarget) -> Self {
        match t {
            EmbeddingTarget::Lp { p } => TargetDoc::Lp { p },
            EmbeddingTarget::C0 => TargetDoc::C0,
        }
    }
}

/// Point vectors keyed by label, in point order.
struct Vectors<'a>(&'a SparseEmbedding);

impl Serialize for Vectors<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let emb = self.0;
        let mut map = s.serialize_map(Some(emb.len()))?;
        for (label, vector) in emb.labels.iter().zip(&emb.vectors) {
            map.serialize_entry(label, &Coordinates(vector))?;
        }
        map.end()
    }
}

struct Coordinates<'a>(&'a [(NodeId, f64)]);

impl Serialize for Coordinates<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (node, value) in self.0 {
            map.serialize_entry(node, value)?;
        }
        map.end()
    }
}

#[derive(Serialize)]
struct EmbeddingOut<'a> {
    target: TargetDoc,
    dimension: usize,
    nodes: &'a [NodeId],
    vectors: Vectors<'a>,
}

#[derive(Deserialize)]
struct EmbeddingIn {
    target: TargetDoc,
    dimension: usize,
    nodes: Vec<NodeId>,
    vectors: BTreeMap<String, BTreeMap<NodeId, f64>>,
}

fn embedding_value(emb: &SparseEmbedding) -> EmbeddingOut<'_> {
    EmbeddingOut {
        target: emb.target.into(),
        dimension: emb.dimension,
        nodes: &emb.nodes,
        vectors: Vectors(emb),
    }
}

pub fn embedding_to_json(emb: &SparseEmbedding) -> String {
    pretty(&embedding_value(emb))
}

/// Reads an embedding and lines its vectors up with the points of `space`.
/// Every point of the space needs a vector and no other labels may appear.
pub fn read_embedding_json(bytes: &[u8], space: &FiniteMetricSpace) -> Result<SparseEmbedding> {
    let doc: EmbeddingIn = serde_json::from_slice(bytes)?;
    let target = match doc.target {
        TargetDoc::Lp { p } => EmbeddingTarget::lp(p)?,
        TargetDoc::C0 => EmbeddingTarget::C0,
    };
    if let Some(extra) = doc.vectors.keys().find(|l| space.index_of(l).is_none()) {
        return Err(FormatError::Malformed(format!(
            "embedding has a vector for unknown point {extra:?}"
        )));
    }
    let mut vectors = Vec::with_capacity(space.len());
    for label in space.labels() {
        let coords = doc.vectors.get(label).ok_or_else(|| {
            FormatError::Malformed(format!("embedding has no vector for point {label:?}"))
        })?;
        if let Some(node) = coords.keys().find(|n| doc.nodes.binary_search(n).is_err()) {
            return Err(FormatError::Malformed(format!(
                "point {label:?} uses undeclared coordinate {node}"
            )));
        }
        vectors.push(coords.iter().map(|(&n, &v)| (n, v)).collect());
    }
    let mut nodes = doc.nodes;
    nodes.sort_unstable();
    Ok(SparseEmbedding {
        target,
        dimension: doc.dimension,
        nodes,
        labels: space.labels().to_vec(),
        vectors,
        tree_fingerprint: None,
    })
}

/// Dense matrix: a header of node ids, then one row per point, zero-padded.
pub fn embedding_to_csv(emb: &SparseEmbedding) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once(String::new()).chain(emb.nodes.iter().map(|n| n.to_string()));
    w.write_record(header).expect("writing to memory");
    for (point, label) in emb.labels.iter().enumerate() {
        let cells =
            std::iter::once(label.clone()).chain(emb.dense_row(point).into_iter().map(number));
        w.write_record(cells).expect("writing to memory");
    }
    csv_string(w)
}

// ---------------------------------------------------------------- reports

#[derive(Serialize)]
struct ViolationDoc<'a> {
    i: &'a str,
    j: &'a str,
    k: &'a str,
    lhs: f64,
    rhs: f64,
    kind: &'static str,
}

#[derive(Serialize)]
struct ValidationDoc<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<&'a str>,
    n: usize,
    diameter: f64,
    is_metric: bool,
    is_ultrametric: bool,
    violations: Vec<ViolationDoc<'a>>,
}

pub fn validation_to_json(space: &FiniteMetricSpace, report: &ValidationReport) -> String {
    use umetric_core::metric::ViolationKind;
    let violations = report
        .violations
        .iter()
        .map(|v| ViolationDoc {
            i: space.label(v.i),
            j: space.label(v.j),
            k: space.label(v.k),
            lhs: v.lhs,
            rhs: v.rhs,
            kind: match v.kind {
                ViolationKind::Triangle => "triangle",
                ViolationKind::Ultrametric => "ultrametric",
            },
        })
        .collect();
    pretty(&ValidationDoc {
        name: space.name(),
        n: space.len(),
        diameter: space.diameter(),
        is_metric: report.is_metric,
        is_ultrametric: report.is_ultrametric,
        violations,
    })
}

fn label_pair(space: &FiniteMetricSpace, (i, j): (usize, usize)) -> [&str; 2] {
    [space.label(i), space.label(j)]
}

#[derive(Serialize)]
struct CheckDoc<'a> {
    max_abs_error: f64,
    max_rel_error: f64,
    worst_pair: Option<[&'a str; 2]>,
    pass: bool,
}

pub fn check_to_json(space: &FiniteMetricSpace, check: &IsometryCheck) -> String {
    pretty(&CheckDoc {
        max_abs_error: check.max_abs_error,
        max_rel_error: check.max_rel_error,
        worst_pair: check.worst_pair.map(|p| label_pair(space, p)),
        pass: check.pass,
    })
}

#[derive(Serialize)]
struct DistortionDoc<'a> {
    expansion: f64,
    contraction: f64,
    distortion: f64,
    scale: f64,
    worst_expansion_pair: [&'a str; 2],
    worst_contraction_pair: [&'a str; 2],
}

pub fn distortion_to_json(src: &FiniteMetricSpace, report: &DistortionReport) -> String {
    pretty(&DistortionDoc {
        expansion: report.expansion,
        contraction: report.contraction,
        distortion: report.distortion,
        scale: report.scale,
        worst_expansion_pair: label_pair(src, report.worst_expansion_pair),
        worst_contraction_pair: label_pair(src, report.worst_contraction_pair),
    })
}

/// A JSON object from source labels to target labels.
pub fn read_point_map_json(
    bytes: &[u8],
    src: &FiniteMetricSpace,
    dst: &FiniteMetricSpace,
) -> Result<PointMap> {
    let pairs: BTreeMap<String, String> = serde_json::from_slice(bytes)?;
    Ok(PointMap::from_labels(
        src,
        dst,
        pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())),
    )?)
}

#[derive(Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
enum BoundDoc {
    AtMost(f64),
    Below(f64),
}

#[derive(Serialize)]
struct CertificateDoc<'a> {
    method: &'static str,
    bound: BoundDoc,
    size: usize,
    subset: &'a [String],
    achieved_distortion: f64,
    fitted: SpaceDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    embedding: Option<EmbeddingOut<'a>>,
}

pub fn method_name(method: SearchMethod) -> &'static str {
    use umetric_core::GreedyStrategy;
    match method {
        SearchMethod::Exact => "exact",
        SearchMethod::Greedy(GreedyStrategy::FarthestFirst) => "greedy-farthest-first",
        SearchMethod::Greedy(GreedyStrategy::PeelWorst) => "greedy-peel-worst",
    }
}

pub fn certificate_to_json(cert: &SubsetCertificate) -> String {
    pretty(&CertificateDoc {
        method: method_name(cert.method),
        bound: match cert.bound {
            Bound::AtMost(d) => BoundDoc::AtMost(d),
            Bound::Below(d) => BoundDoc::Below(d),
        },
        size: cert.len(),
        subset: &cert.labels,
        achieved_distortion: cert.achieved_distortion,
        fitted: SpaceDoc::new(&cert.fitted.to_space(), None),
        embedding: cert.lp_coordinates.as_ref().map(embedding_value),
    })
}

// ---------------------------------------------------------------- experiment records

#[derive(Serialize, Deserialize)]
struct RecordDoc {
    n: usize,
    trial: usize,
    seed: u64,
    largest_exact: usize,
    exact: bool,
    largest_greedy: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<f64>,
}

/// One JSON object followed by a newline. `elapsed_ms` is only written when
/// timing was requested, since it makes output nondeterministic.
pub fn record_to_jsonl(record: &ExperimentRecord, elapsed_ms: Option<f64>) -> String {
    let doc = RecordDoc {
        n: record.n,
        trial: record.trial,
        seed: record.seed,
        largest_exact: record.largest_exact,
        exact: record.exact,
        largest_greedy: record.largest_greedy,
        elapsed_ms,
    };
    let mut s = serde_json::to_string(&doc).expect("in-memory serialization cannot fail");
    s.push('\n');
    s
}

pub fn read_records_jsonl(text: &str) -> Result<Vec<ExperimentRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(k, line)| {
            let doc: RecordDoc = serde_json::from_str(line)
                .map_err(|e| FormatError::Malformed(format!("record on line {}: {e}", k + 1)))?;
            Ok(ExperimentRecord {
                n: doc.n,
                trial: doc.trial,
                seed: doc.seed,
                largest_exact: doc.largest_exact,
                exact: doc.exact,
                largest_greedy: doc.largest_greedy,
            })
        })
        .collect()
}

/// `n,mean_size,max_size` rows in ascending `n`, using `largest_exact`.
pub fn plot_csv(records: &[ExperimentRecord]) -> String {
    let mut by_n: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for r in records {
        by_n.entry(r.n).or_default().push(r.largest_exact);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "mean_size", "max_size"])
        .expect("writing to memory");
    for (n, sizes) in by_n {
        let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
        let max = sizes.iter().max().copied().unwrap_or(0);
        w.write_record([n.to_string(), number(mean), max.to_string()])
            .expect("writing to memory");
    }
    csv_string(w)
}
