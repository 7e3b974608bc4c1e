//! Finite metric spaces and checks of the (strong) triangle inequality.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};

/// Comparison slack for distances: `max(abs, rel * |scale|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-9,
            abs: 1e-12,
        }
    }
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Result<Self> {
        if !(rel >= 0.0 && abs >= 0.0) || !rel.is_finite() || !abs.is_finite() {
            return Err(Error::InvalidTolerance { rel, abs });
        }
        Ok(Tolerance { rel, abs })
    }

    #[inline]
    pub fn slack(&self, scale: f64) -> f64 {
        let r = self.rel * scale.abs();
        if r > self.abs {
            r
        } else {
            self.abs
        }
    }

    #[inline]
    pub fn approx_eq(&self, a: f64, b: f64) -> bool {
        let scale = if a.abs() > b.abs() { a } else { b };
        (a - b).abs() <= self.slack(scale)
    }
}

/// A finite metric space: distinct labels plus a symmetric distance matrix
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricSpace {
    name: Option<String>,
    labels: Vec<String>,
    dist: Vec<f64>,
}

impl FiniteMetricSpace {
    /// Builds a space from labels and matrix rows, checking structure only:
    /// square shape, unique labels, zero diagonal, symmetry, no negative or
    /// zero off-diagonal entries. The triangle inequality is left to
    /// [`validate`].
    pub fn from_rows(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows_with_tolerance(labels, rows, Tolerance::default())
    }

    pub fn from_rows_with_tolerance(
        labels: Vec<String>,
        rows: &[Vec<f64>],
        tol: Tolerance,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        if rows.len() != n {
            return Err(Error::NotSquare {
                row: rows.len(),
                len: rows.len(),
                expected: n,
            });
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    row: r,
                    len: row.len(),
                    expected: n,
                });
            }
        }
        check_unique(&labels)?;
        let mut dist = alloc::vec![0.0; n * n];
        for i in 0..n {
            let d = rows[i][i];
            if !d.is_finite() {
                return Err(Error::NonFinite { i, j: i });
            }
            if d.abs() > tol.abs {
                return Err(Error::NonZeroDiagonal { i, value: d });
            }
            for j in (i + 1)..n {
                let (fwd, bwd) = (rows[i][j], rows[j][i]);
                if !fwd.is_finite() {
                    return Err(Error::NonFinite { i, j });
                }
                if !bwd.is_finite() {
                    return Err(Error::NonFinite { i: j, j: i });
                }
                if fwd < 0.0 {
                    return Err(Error::NegativeDistance { i, j, value: fwd });
                }
                if bwd < 0.0 {
                    return Err(Error::NegativeDistance {
                        i: j,
                        j: i,
                        value: bwd,
                    });
                }
                if !tol.approx_eq(fwd, bwd) {
                    return Err(Error::Asymmetric {
                        i,
                        j,
                        forward: fwd,
                        backward: bwd,
                    });
                }
                if fwd == 0.0 || bwd == 0.0 {
                    return Err(Error::ZeroDistance { i, j });
                }
                dist[i * n + j] = fwd;
                dist[j * n + i] = fwd;
            }
        }
        Ok(FiniteMetricSpace {
            name: None,
            labels,
            dist,
        })
    }

    /// Builds a space from a distance function evaluated on `i < j`.
    #[allow(clippy::needless_range_loop)]
    pub fn from_fn(labels: Vec<String>, mut d: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let n = labels.len();
        let mut rows = alloc::vec![alloc::vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = d(i, j);
                rows[i][j] = v;
                rows[j][i] = v;
            }
        }
        Self::from_rows(labels, &rows)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.dist[i * n..(i + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.dist.chunks(self.len())
    }

    /// The induced subspace on `points` (in the given order).
    pub fn subspace(&self, points: &[usize]) -> Result<Self> {
        let n = self.len();
        if points.is_empty() {
            return Err(Error::EmptySpace);
        }
        if let Some(&bad) = points.iter().find(|&&p| p >= n) {
            return Err(Error::PointOutOfRange { index: bad, len: n });
        }
        let labels: Vec<String> = points.iter().map(|&p| self.labels[p].clone()).collect();
        check_unique(&labels)?;
        let k = points.len();
        let mut dist = alloc::vec![0.0; k * k];
        for (a, &pa) in points.iter().enumerate() {
            for (b, &pb) in points.iter().enumerate() {
                dist[a * k + b] = self.dist(pa, pb);
            }
        }
        Ok(FiniteMetricSpace {
            name: self.name.clone(),
            labels,
            dist,
        })
    }

    /// Same labels, every distance multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidSpec(
                "scale factor must be positive and finite",
            ));
        }
        Ok(FiniteMetricSpace {
            name: self.name.clone(),
            labels: self.labels.clone(),
            dist: self.dist.iter().map(|d| d * factor).collect(),
        })
    }

    /// Sorted distinct off-diagonal distances.
    pub fn distance_values(&self) -> Vec<f64> {
        let n = self.len();
        let mut vals: Vec<f64> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| self.dist(i, j))
            .collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        vals
    }

    /// Largest pairwise distance; 0 for a singleton.
    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }
}

fn check_unique(labels: &[String]) -> Result<()> {
    let mut sorted: Vec<&String> = labels.iter().collect();
    sorted.sort();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::DuplicateLabel(w[0].clone()));
        }
    }
    Ok(())
}

/// Largest pairwise distance of the space.
pub fn diameter(space: &FiniteMetricSpace) -> f64 {
    space.diameter()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `d(i,j) > d(i,k) + d(k,j)`
    Triangle,
    /// `d(i,j) > max(d(i,k), d(k,j))` while the ordinary triangle inequality holds.
    Ultrametric,
}

/// A triple `(i, j, k)` where the side `d(i,j)` (`lhs`) exceeds the bound
/// through `k` (`rhs`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub kind: ViolationKind,
}

impl Violation {
    pub fn magnitude(&self) -> f64 {
        self.lhs - self.rhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub is_metric: bool,
    pub is_ultrametric: bool,
    /// Worst offenders, largest `lhs - rhs` first, capped at
    /// [`MAX_VIOLATIONS`]. Empty iff `is_ultrametric`.
    pub violations: Vec<Violation>,
}

pub const MAX_VIOLATIONS: usize = 100;

/// Checks the triangle and strong triangle inequalities over all triples.
pub fn validate(space: &FiniteMetricSpace, tol: Tolerance) -> ValidationReport {
    let n = space.len();
    let mut is_metric = true;
    let mut is_ultrametric = true;
    let mut worst: Vec<Violation> = Vec::new();

    for i in 0..n {
        for j in (i + 1)..n {
            let lhs = space.dist(i, j);
            let slack = tol.slack(lhs);
            for k in 0..n {
                if k == i || k == j {
                    continue;
                }
                let (a, b) = (space.dist(i, k), space.dist(k, j));
                let sum = a + b;
                let max = a.max(b);
                let v = if lhs > sum + slack {
                    is_metric = false;
                    is_ultrametric = false;
                    Violation {
                        i,
                        j,
                        k,
                        lhs,
                        rhs: sum,
                        kind: ViolationKind::Triangle,
                    }
                } else if lhs > max + slack {
                    is_ultrametric = false;
                    Violation {
                        i,
                        j,
                        k,
                        lhs,
                        rhs: max,
                        kind: ViolationKind::Ultrametric,
                    }
                } else {
                    continue;
                };
                push_capped(&mut worst, v);
            }
        }
    }
    worst.sort_by(cmp_violations);
    worst.truncate(MAX_VIOLATIONS);
    ValidationReport {
        is_metric,
        is_ultrametric,
        violations: worst,
    }
}

fn cmp_violations(a: &Violation, b: &Violation) -> Ordering {
    b.magnitude()
        .total_cmp(&a.magnitude())
        .then_with(|| (a.i, a.j, a.k).cmp(&(b.i, b.j, b.k)))
}

// Keeps the MAX_VIOLATIONS worst entries without holding all O(n^3) of them.
fn push_capped(worst: &mut Vec<Violation>, v: Violation) {
    if worst.len() < 2 * MAX_VIOLATIONS {
        worst.push(v);
        return;
    }
    worst.sort_by(cmp_violations);
    worst.truncate(MAX_VIOLATIONS);
    worst.push(v);
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn three(ab: f64, ac: f64, bc: f64) -> FiniteMetricSpace {
        FiniteMetricSpace::from_rows(
            labels(&["a", "b", "c"]),
            &[vec![0.0, ab, ac], vec![ab, 0.0, bc], vec![ac, bc, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn two_point_space() {
        let s =
            FiniteMetricSpace::from_rows(labels(&["a", "b"]), &[vec![0.0, 1.0], vec![1.0, 0.0]])
                .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.dist(0, 1), 1.0);
    }

    #[test]
    fn structural_errors() {
        let asym =
            FiniteMetricSpace::from_rows(labels(&["a", "b"]), &[vec![0.0, 1.0], vec![2.0, 0.0]]);
        assert!(matches!(asym, Err(Error::Asymmetric { .. })));
        assert!(asym.unwrap_err().is_shape_error());

        let dup =
            FiniteMetricSpace::from_rows(labels(&["a", "a"]), &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(dup, Err(Error::DuplicateLabel("a".to_string())));

        let neg =
            FiniteMetricSpace::from_rows(labels(&["a", "b"]), &[vec![0.0, -1.0], vec![-1.0, 0.0]]);
        assert!(matches!(neg, Err(Error::NegativeDistance { .. })));

        let zero =
            FiniteMetricSpace::from_rows(labels(&["a", "b"]), &[vec![0.0, 0.0], vec![0.0, 0.0]]);
        assert_eq!(zero, Err(Error::ZeroDistance { i: 0, j: 1 }));

        let ragged =
            FiniteMetricSpace::from_rows(labels(&["a", "b"]), &[vec![0.0, 1.0], vec![1.0]]);
        assert!(matches!(ragged, Err(Error::NotSquare { .. })));

        let diag =
            FiniteMetricSpace::from_rows(labels(&["a", "b"]), &[vec![0.5, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(diag, Err(Error::NonZeroDiagonal { .. })));

        assert_eq!(
            FiniteMetricSpace::from_rows(vec![], &[]),
            Err(Error::EmptySpace)
        );
    }

    #[test]
    fn long_legged_isoceles_is_ultrametric() {
        let r = validate(&three(1.0, 2.0, 2.0), Tolerance::default());
        assert!(r.is_metric && r.is_ultrametric);
        assert!(r.violations.is_empty());
    }

    #[test]
    fn path_metric_violates_strong_inequality() {
        // d(a,b)=1, d(b,c)=1, d(a,c)=2
        let r = validate(&three(1.0, 2.0, 1.0), Tolerance::default());
        assert!(r.is_metric);
        assert!(!r.is_ultrametric);
        assert_eq!(r.violations.len(), 1);
        let v = r.violations[0];
        assert_eq!((v.i, v.j, v.k, v.lhs, v.rhs), (0, 2, 1, 2.0, 1.0));
        assert_eq!(v.kind, ViolationKind::Ultrametric);
    }

    #[test]
    fn triangle_violation_is_reported() {
        let r = validate(&three(1.0, 3.0, 1.0), Tolerance::default());
        assert!(!r.is_metric && !r.is_ultrametric);
        assert_eq!(r.violations[0].kind, ViolationKind::Triangle);
        assert_eq!(r.violations[0].rhs, 2.0);
    }

    #[test]
    fn singleton_is_vacuously_ultrametric() {
        let s = FiniteMetricSpace::from_rows(labels(&["x"]), &[vec![0.0]]).unwrap();
        let r = validate(&s, Tolerance::default());
        assert!(r.is_metric && r.is_ultrametric);
        assert_eq!(s.diameter(), 0.0);
    }

    #[test]
    fn tolerance_absorbs_float_noise() {
        let r = validate(&three(1.0, 2.0, 2.0 - 1e-12), Tolerance::default());
        assert!(r.is_ultrametric);
        let strict = Tolerance::new(0.0, 0.0).unwrap();
        assert!(!validate(&three(1.0, 2.0, 2.0 - 1e-12), strict).is_ultrametric);
        assert!(Tolerance::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn diameter_is_max_entry() {
        assert_eq!(three(1.0, 2.0, 2.0).diameter(), 2.0);
    }

    #[test]
    fn violations_are_capped_and_sorted() {
        // Path metric on 12 points has far more than 100 violating triples.
        let n = 12;
        let names: Vec<String> = (0..n).map(|i| alloc::format!("p{i}")).collect();
        let s = FiniteMetricSpace::from_fn(names, |i, j| (j - i) as f64).unwrap();
        let r = validate(&s, Tolerance::default());
        assert_eq!(r.violations.len(), MAX_VIOLATIONS);
        assert!(r
            .violations
            .windows(2)
            .all(|w| w[0].magnitude() >= w[1].magnitude()));
        // worst: d(p0, p11) = 11 against max(5, 6) through p5 or p6
        assert_eq!(r.violations[0].magnitude(), 5.0);
    }
}
