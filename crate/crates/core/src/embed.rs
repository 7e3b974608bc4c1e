//! Isometric embeddings of a finite ultrametric space into `l_p` and `c_0`.
//!
//! There is one coordinate per non-root node of the ball tree. A point `x`
//! is supported on the nodes of its root-to-leaf path; at a node `v` with
//! parent `u` it takes the value
//!
//! ```text
//! l_p:  ((r_u^p - r_v^p) / 2)^(1/p)
//! c_0:  r_u
//! ```
//!
//! Two points share their coordinates above their lowest common ancestor `w`
//! and have disjoint supports below it, so in `l_p` the `p`-th power of their
//! distance telescopes to `(r_w^p - 0) / 2 + (r_w^p - 0) / 2 = r_w^p`, which is
//! their ultrametric distance. In `c_0` the largest differing coordinate is
//! `r_w`. Every vector has `||f(x)||_p^p = r_0^p / 2`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, Tolerance};
use crate::tree::{build_tree, closed_ball, BallTree, NodeId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmbeddingTarget {
    Lp { p: f64 },
    C0,
}

impl EmbeddingTarget {
    pub fn lp(p: f64) -> Result<Self> {
        if !(1.0..f64::INFINITY).contains(&p) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(EmbeddingTarget::Lp { p })
    }

    /// Norm of a sparse vector given by its non-zero values.
    pub fn norm<I: IntoIterator<Item = f64>>(&self, values: I) -> f64 {
        match *self {
            EmbeddingTarget::C0 => values.into_iter().fold(0.0, |m, v| m.max(v.abs())),
            EmbeddingTarget::Lp { p } => lp_norm(values, p),
        }
    }
}

/// `(sum |v|^p)^(1/p)` computed relative to the largest entry so that tiny
/// or huge magnitudes do not under- or overflow for large `p`.
fn lp_norm<I: IntoIterator<Item = f64>>(values: I, p: f64) -> f64 {
    let vals: Vec<f64> = values.into_iter().map(f64::abs).collect();
    let max = vals.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return vals.iter().sum();
    }
    let sum: f64 = vals.iter().map(|&v| pow(v / max, p)).sum();
    max * pow(sum, 1.0 / p)
}

#[inline]
fn pow(x: f64, y: f64) -> f64 {
    if y == 1.0 {
        x
    } else if y == 2.0 {
        x * x
    } else {
        libm::pow(x, y)
    }
}

/// `l_p` coordinates along a root-to-leaf chain of radii `r_0, r_1, ..., r_k`:
/// entry `m - 1` is `((r_{m-1}^p - r_m^p) / 2)^(1/p)`.
///
/// Computed as `r_{m-1} * ((1 - (r_m / r_{m-1})^p) / 2)^(1/p)` with the inner
/// difference clamped at 0; a chain that has already reached radius 0
/// contributes zeros.
pub fn lp_path_coordinates(radii: &[f64], p: f64) -> Vec<f64> {
    radii
        .windows(2)
        .map(|w| {
            let (outer, inner) = (w[0], w[1]);
            if outer <= 0.0 {
                return 0.0;
            }
            let ratio = pow(inner / outer, p);
            let diff = ((1.0 - ratio) / 2.0).max(0.0);
            outer * pow(diff, 1.0 / p)
        })
        .collect()
}

/// `c_0` coordinates along a chain of radii: entry `m - 1` is `r_{m-1}`.
pub fn c0_path_coordinates(radii: &[f64]) -> Vec<f64> {
    radii.windows(2).map(|w| w[0]).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseEmbedding {
    pub target: EmbeddingTarget,
    /// Number of coordinates (non-root tree nodes).
    pub dimension: usize,
    /// Node ids in coordinate order.
    pub nodes: Vec<NodeId>,
    pub labels: Vec<String>,
    /// Per point, `(node, value)` pairs sorted by node id, zeros omitted.
    pub vectors: Vec<Vec<(NodeId, f64)>>,
    /// [`BallTree::fingerprint`] of the source tree, when known.
    pub tree_fingerprint: Option<u64>,
}

impl SparseEmbedding {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn coordinate(&self, point: usize, node: NodeId) -> f64 {
        let v = &self.vectors[point];
        v.binary_search_by_key(&node, |&(id, _)| id)
            .map_or(0.0, |k| v[k].1)
    }

    pub fn norm(&self, point: usize) -> f64 {
        self.target
            .norm(self.vectors[point].iter().map(|&(_, v)| v))
    }

    /// Distance between two embedded points in the target norm.
    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let diff = sparse_difference(&self.vectors[a], &self.vectors[b]);
        self.target.norm(diff)
    }

    /// Dense row for `point`, zero-padded in coordinate order.
    pub fn dense_row(&self, point: usize) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|&id| self.coordinate(point, id))
            .collect()
    }
}

fn sparse_difference(a: &[(NodeId, f64)], b: &[(NodeId, f64)]) -> Vec<f64> {
    use core::cmp::Ordering;
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.get(i), b.get(j)) {
            (Some(&(na, va)), Some(&(nb, vb))) => match na.cmp(&nb) {
                Ordering::Equal => {
                    out.push(va - vb);
                    i += 1;
                    j += 1;
                }
                Ordering::Less => {
                    out.push(va);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(vb);
                    j += 1;
                }
            },
            (Some(&(_, va)), None) => {
                out.push(va);
                i += 1;
            }
            (None, Some(&(_, vb))) => {
                out.push(vb);
                j += 1;
            }
            (None, None) => return out,
        }
    }
}

fn embed_with(
    tree: &BallTree,
    labels: Vec<String>,
    target: EmbeddingTarget,
) -> Result<SparseEmbedding> {
    if labels.len() != tree.num_points() {
        return Err(Error::SizeMismatch {
            expected: tree.num_points(),
            got: labels.len(),
        });
    }
    let vectors = (0..tree.num_points())
        .map(|x| {
            let path = tree.path(x);
            let radii: Vec<f64> = path.iter().map(|&id| tree.node(id).radius).collect();
            let coords = match target {
                EmbeddingTarget::Lp { p } => lp_path_coordinates(&radii, p),
                EmbeddingTarget::C0 => c0_path_coordinates(&radii),
            };
            path[1..]
                .iter()
                .zip(coords)
                .filter(|&(_, v)| v != 0.0)
                .map(|(&id, v)| (id, v))
                .collect()
        })
        .collect();
    Ok(SparseEmbedding {
        target,
        dimension: tree.len() - 1,
        nodes: (1..tree.len()).collect(),
        labels,
        vectors,
        tree_fingerprint: Some(tree.fingerprint()),
    })
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| alloc::format!("{i}")).collect()
}

/// `l_p` embedding of the tree's points. Labels are the point indices; use
/// [`embed_lp_labeled`] to carry the space's labels.
pub fn embed_lp(tree: &BallTree, p: f64) -> Result<SparseEmbedding> {
    embed_with(
        tree,
        default_labels(tree.num_points()),
        EmbeddingTarget::lp(p)?,
    )
}

pub fn embed_c0(tree: &BallTree) -> SparseEmbedding {
    embed_with(tree, default_labels(tree.num_points()), EmbeddingTarget::C0)
        .expect("label count matches by construction")
}

pub fn embed_lp_labeled(
    space: &FiniteMetricSpace,
    tree: &BallTree,
    p: f64,
) -> Result<SparseEmbedding> {
    embed_with(tree, space.labels().to_vec(), EmbeddingTarget::lp(p)?)
}

pub fn embed_c0_labeled(space: &FiniteMetricSpace, tree: &BallTree) -> Result<SparseEmbedding> {
    embed_with(tree, space.labels().to_vec(), EmbeddingTarget::C0)
}

/// Builds the tree and embeds in one step, carrying labels.
pub fn embed_space(
    space: &FiniteMetricSpace,
    target: EmbeddingTarget,
    tol: Tolerance,
) -> Result<SparseEmbedding> {
    let tree = build_tree(space, tol)?;
    if let EmbeddingTarget::Lp { p } = target {
        EmbeddingTarget::lp(p)?;
    }
    embed_with(&tree, space.labels().to_vec(), target)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsometryCheck {
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    /// Pair with the largest relative error; `None` when there are no pairs.
    pub worst_pair: Option<(usize, usize)>,
    pub pass: bool,
}

/// Compares every embedded distance with the original one. Passes iff the
/// largest relative error is at most `tol.rel`.
pub fn isometry_check(
    space: &FiniteMetricSpace,
    emb: &SparseEmbedding,
    tol: Tolerance,
) -> Result<IsometryCheck> {
    let n = space.len();
    if emb.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: emb.len(),
        });
    }
    let mut check = IsometryCheck {
        max_abs_error: 0.0,
        max_rel_error: 0.0,
        worst_pair: None,
        pass: true,
    };
    for x in 0..n {
        for y in (x + 1)..n {
            let want = space.dist(x, y);
            let abs = (emb.distance(x, y) - want).abs();
            let rel = abs / want;
            check.max_abs_error = check.max_abs_error.max(abs);
            if check.worst_pair.is_none() || rel > check.max_rel_error || rel.is_nan() {
                check.max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
                check.worst_pair = Some((x, y));
            }
        }
    }
    check.pass = check.max_rel_error <= tol.rel;
    Ok(check)
}

/// Checks that embedding the larger ball `B(center, outer)` and restricting
/// to the smaller ball `B(center, inner)` agrees, up to an isometry of the
/// target, with embedding the smaller ball directly.
///
/// The isometry is certified coordinate-wise: every coordinate of the small
/// embedding must match some unused coordinate of the restricted large one
/// with equal values on every point, and every large-embedding coordinate
/// left unmatched must be constant over the small ball (a translation).
/// Pairwise embedded distances must agree as well.
pub fn extend_check(
    space: &FiniteMetricSpace,
    center: usize,
    inner: f64,
    outer: f64,
    target: EmbeddingTarget,
    tol: Tolerance,
) -> Result<bool> {
    if !(0.0..=outer).contains(&inner) {
        return Err(Error::InvalidRadius {
            radius: inner,
            outer,
        });
    }
    if let EmbeddingTarget::Lp { p } = target {
        EmbeddingTarget::lp(p)?;
    }
    let small_ball = closed_ball(space, center, inner, tol)?;
    let large_ball = closed_ball(space, center, outer, tol)?;

    let small = space.subspace(&small_ball)?;
    let large = space.subspace(&large_ball)?;
    let f1 = embed_with(&build_tree(&small, tol)?, small.labels().to_vec(), target)?;
    let f2 = embed_with(&build_tree(&large, tol)?, large.labels().to_vec(), target)?;

    // Position of each small-ball point inside the large subspace.
    let within: Vec<usize> = small_ball
        .iter()
        .map(|p| {
            large_ball
                .binary_search(p)
                .expect("small ball lies in the large ball")
        })
        .collect();

    for a in 0..within.len() {
        for b in (a + 1)..within.len() {
            if !tol.approx_eq(f1.distance(a, b), f2.distance(within[a], within[b])) {
                return Ok(false);
            }
        }
    }

    let column = |emb: &SparseEmbedding, points: &[usize], node: NodeId| -> Vec<f64> {
        points.iter().map(|&x| emb.coordinate(x, node)).collect()
    };
    let small_points: Vec<usize> = (0..within.len()).collect();
    let same = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(&a, &b)| tol.approx_eq(a, b));

    let large_columns: Vec<(NodeId, Vec<f64>)> = f2
        .nodes
        .iter()
        .map(|&id| (id, column(&f2, &within, id)))
        .collect();
    let mut used = alloc::vec![false; large_columns.len()];
    for &node in &f1.nodes {
        let want = column(&f1, &small_points, node);
        if want.iter().all(|&v| v == 0.0) {
            continue;
        }
        let hit = large_columns
            .iter()
            .enumerate()
            .find(|(k, (_, col))| !used[*k] && same(col, &want));
        match hit {
            Some((k, _)) => used[k] = true,
            None => return Ok(false),
        }
    }
    let translation_only = large_columns
        .iter()
        .zip(&used)
        .filter(|(_, &u)| !u)
        .all(|((_, col), _)| col.iter().all(|&v| tol.approx_eq(v, col[0])));
    Ok(translation_only)
}
