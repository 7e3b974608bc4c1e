//! Distortion of point maps and the best ultrametric approximation from below.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;

/// An injective map from the points of a source space to those of a target
/// space, by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointMap {
    targets: Vec<usize>,
}

impl PointMap {
    pub fn new(targets: Vec<usize>, target_len: usize) -> Result<Self> {
        let mut hit = alloc::vec![false; target_len];
        for &t in &targets {
            if t >= target_len {
                return Err(Error::PointOutOfRange {
                    index: t,
                    len: target_len,
                });
            }
            if core::mem::replace(&mut hit[t], true) {
                return Err(Error::NotInjective { target: t });
            }
        }
        Ok(PointMap { targets })
    }

    pub fn identity(n: usize) -> Self {
        PointMap {
            targets: (0..n).collect(),
        }
    }

    /// Maps by label: every source label must appear exactly once in `pairs`.
    pub fn from_labels<'a, I>(
        src: &FiniteMetricSpace,
        dst: &FiniteMetricSpace,
        pairs: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut targets = alloc::vec![usize::MAX; src.len()];
        for (from, to) in pairs {
            let i = src
                .index_of(from)
                .ok_or_else(|| Error::UnknownLabel(from.into()))?;
            let j = dst
                .index_of(to)
                .ok_or_else(|| Error::UnknownLabel(to.into()))?;
            targets[i] = j;
        }
        if let Some(missing) = targets.iter().position(|&t| t == usize::MAX) {
            return Err(Error::PointOutOfRange {
                index: missing,
                len: src.len(),
            });
        }
        Self::new(targets, dst.len())
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.targets[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistortionReport {
    /// `max d_Y(f x, f y) / d_X(x, y)`
    pub expansion: f64,
    /// `max d_X(x, y) / d_Y(f x, f y)`
    pub contraction: f64,
    pub distortion: f64,
    /// `1 / contraction`: the largest `r` with `r d_X <= d_Y o f`.
    pub scale: f64,
    pub worst_expansion_pair: (usize, usize),
    pub worst_contraction_pair: (usize, usize),
}

pub fn map_distortion(
    src: &FiniteMetricSpace,
    dst: &FiniteMetricSpace,
    map: &PointMap,
) -> Result<DistortionReport> {
    let n = src.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    if map.len() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            got: map.len(),
        });
    }
    let mut report = DistortionReport {
        expansion: 0.0,
        contraction: 0.0,
        distortion: 0.0,
        scale: 0.0,
        worst_expansion_pair: (0, 1),
        worst_contraction_pair: (0, 1),
    };
    for x in 0..n {
        for y in (x + 1)..n {
            let d_src = src.dist(x, y);
            let d_dst = dst.dist(map.apply(x), map.apply(y));
            if d_dst == 0.0 {
                return Err(Error::CollapsedPair { i: x, j: y });
            }
            let up = d_dst / d_src;
            let down = d_src / d_dst;
            if up > report.expansion {
                report.expansion = up;
                report.worst_expansion_pair = (x, y);
            }
            if down > report.contraction {
                report.contraction = down;
                report.worst_contraction_pair = (x, y);
            }
        }
    }
    report.distortion = report.expansion * report.contraction;
    report.scale = 1.0 / report.contraction;
    Ok(report)
}

/// The largest ultrametric lying below a metric, together with how far the
/// metric sits above it.
#[derive(Debug, Clone, PartialEq)]
pub struct UltrametricFit {
    pub base: FiniteMetricSpace,
    /// Row-major `n x n` matrix of the subdominant ultrametric.
    pub sub: Vec<f64>,
    /// `max d / sub` over pairs; 1 for spaces with fewer than two points.
    pub distortion: f64,
}

impl UltrametricFit {
    #[inline]
    pub fn sub(&self, i: usize, j: usize) -> f64 {
        self.sub[i * self.base.len() + j]
    }

    /// The fitted ultrametric as a space with the base labels.
    pub fn to_space(&self) -> FiniteMetricSpace {
        let space = FiniteMetricSpace::from_fn(self.base.labels().to_vec(), |i, j| self.sub(i, j))
            .expect("subdominant of a valid space is a valid space");
        match self.base.name() {
            Some(name) => space.with_name(name),
            None => space,
        }
    }
}

/// Minimum spanning tree by Prim's algorithm on the complete graph restricted
/// to `points`. Returns `(parent position, weight)` per position, the first
/// position being the root.
fn prim(space: &FiniteMetricSpace, points: &[usize]) -> Vec<(usize, f64)> {
    let k = points.len();
    let mut in_tree = alloc::vec![false; k];
    let mut best = alloc::vec![(0usize, f64::INFINITY); k];
    let mut out = alloc::vec![(0usize, 0.0); k];
    if k == 0 {
        return out;
    }
    best[0] = (0, 0.0);
    for _ in 0..k {
        let mut u = usize::MAX;
        for v in 0..k {
            if !in_tree[v] && (u == usize::MAX || best[v].1 < best[u].1) {
                u = v;
            }
        }
        in_tree[u] = true;
        out[u] = best[u];
        for v in 0..k {
            if !in_tree[v] {
                let w = space.dist(points[u], points[v]);
                if w < best[v].1 {
                    best[v] = (u, w);
                }
            }
        }
    }
    out
}

/// Bottleneck (largest edge) on the tree path between every pair of
/// positions.
fn tree_bottlenecks(tree: &[(usize, f64)]) -> Vec<f64> {
    let k = tree.len();
    let mut adj: Vec<Vec<(usize, f64)>> = alloc::vec![Vec::new(); k];
    for (v, &(u, w)) in tree.iter().enumerate().skip(1) {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    let mut out = alloc::vec![0.0; k * k];
    let mut stack = Vec::new();
    for s in 0..k {
        let row = &mut out[s * k..(s + 1) * k];
        let mut seen = alloc::vec![false; k];
        seen[s] = true;
        stack.push((s, 0.0f64));
        while let Some((u, m)) = stack.pop() {
            row[u] = m;
            for &(v, w) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push((v, m.max(w)));
                }
            }
        }
    }
    out
}

/// Subdominant ultrametric: `sub(x, y)` is the smallest possible largest step
/// over all paths from `x` to `y`, read off a minimum spanning tree.
pub fn subdominant_ultrametric(space: &FiniteMetricSpace) -> UltrametricFit {
    let points: Vec<usize> = (0..space.len()).collect();
    let sub = tree_bottlenecks(&prim(space, &points));
    let distortion = ratio_max(space, &points, &sub);
    UltrametricFit {
        base: space.clone(),
        sub,
        distortion,
    }
}

fn ratio_max(space: &FiniteMetricSpace, points: &[usize], sub: &[f64]) -> f64 {
    let k = points.len();
    let mut worst: f64 = 1.0;
    for a in 0..k {
        for b in (a + 1)..k {
            worst = worst.max(space.dist(points[a], points[b]) / sub[a * k + b]);
        }
    }
    worst
}

/// Smallest distortion with which the space embeds into any ultrametric
/// space. Spaces with fewer than two points give 1.
pub fn ultrametric_distortion(space: &FiniteMetricSpace) -> f64 {
    subdominant_ultrametric(space).distortion
}

/// [`ultrametric_distortion`] of the subspace induced on `points`, without
/// materializing it.
pub fn subset_ultrametric_distortion(space: &FiniteMetricSpace, points: &[usize]) -> f64 {
    if points.len() < 2 {
        return 1.0;
    }
    let sub = tree_bottlenecks(&prim(space, points));
    ratio_max(space, points, &sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn names(n: usize) -> Vec<String> {
        (0..n)
            .map(|i| ["a", "b", "c", "d", "e", "f"][i].to_string())
            .collect()
    }

    fn three(ab: f64, ac: f64, bc: f64) -> FiniteMetricSpace {
        FiniteMetricSpace::from_rows(
            names(3),
            &[vec![0.0, ab, ac], vec![ab, 0.0, bc], vec![ac, bc, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn identity_has_distortion_one() {
        let s = three(1.0, 2.0, 1.5);
        let r = map_distortion(&s, &s, &PointMap::identity(3)).unwrap();
        assert_eq!((r.distortion, r.scale), (1.0, 1.0));
    }

    #[test]
    fn path_to_its_subdominant() {
        let src = three(1.0, 2.0, 1.0);
        let dst = three(1.0, 1.0, 1.0);
        let r = map_distortion(&src, &dst, &PointMap::identity(3)).unwrap();
        assert_eq!((r.expansion, r.contraction, r.distortion), (1.0, 2.0, 2.0));
        assert_eq!(r.worst_contraction_pair, (0, 2));
    }

    #[test]
    fn scaling_is_not_distortion() {
        let src = FiniteMetricSpace::from_fn(names(2), |_, _| 1.0).unwrap();
        let dst = FiniteMetricSpace::from_fn(names(2), |_, _| 5.0).unwrap();
        let r = map_distortion(&src, &dst, &PointMap::identity(2)).unwrap();
        assert_eq!(
            (r.expansion, r.contraction, r.distortion, r.scale),
            (5.0, 0.2, 1.0, 5.0)
        );
    }

    #[test]
    fn map_errors() {
        let s = three(1.0, 2.0, 2.0);
        assert!(matches!(
            PointMap::new(vec![0, 0, 1], 3),
            Err(Error::NotInjective { target: 0 })
        ));
        let one = FiniteMetricSpace::from_fn(names(1), |_, _| 1.0).unwrap();
        assert!(matches!(
            map_distortion(&one, &one, &PointMap::identity(1)),
            Err(Error::TooFewPoints { .. })
        ));
        assert!(map_distortion(&s, &s, &PointMap::identity(2)).is_err());
    }

    #[test]
    fn subdominant_of_path() {
        let fit = subdominant_ultrametric(&three(1.0, 2.0, 1.0));
        assert_eq!(
            (fit.sub(0, 1), fit.sub(1, 2), fit.sub(0, 2)),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(fit.distortion, 2.0);
    }

    #[test]
    fn ultrametric_is_its_own_subdominant() {
        let s = three(1.0, 2.0, 2.0);
        let fit = subdominant_ultrametric(&s);
        assert_eq!(fit.to_space(), s);
        assert_eq!(fit.distortion, 1.0);
    }

    #[test]
    fn wn_style_path_plus_isolated() {
        // 1-edges a-b, b-c; d isolated; all other pairs 2
        let s = FiniteMetricSpace::from_fn(names(4), |i, j| {
            if (i, j) == (0, 1) || (i, j) == (1, 2) {
                1.0
            } else {
                2.0
            }
        })
        .unwrap();
        let fit = subdominant_ultrametric(&s);
        assert_eq!(fit.sub(0, 2), 1.0);
        assert!((0..3).all(|i| fit.sub(i, 3) == 2.0));
        assert_eq!(fit.distortion, 2.0);
    }

    #[test]
    fn four_cycle_has_distortion_two() {
        let s = FiniteMetricSpace::from_fn(names(4), |i, j| if j - i == 2 { 2.0 } else { 1.0 })
            .unwrap();
        assert_eq!(ultrametric_distortion(&s), 2.0);
    }

    #[test]
    fn subset_variant_matches_subspace() {
        let s =
            FiniteMetricSpace::from_fn(names(5), |i, j| 1.0 + ((i * 7 + j * 3) % 5) as f64 / 5.0)
                .unwrap();
        let pts = [0, 2, 3, 4];
        let sub = s.subspace(&pts).unwrap();
        assert_eq!(
            subset_ultrametric_distortion(&s, &pts),
            ultrametric_distortion(&sub)
        );
    }
}
