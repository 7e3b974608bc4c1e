//! Searching a finite metric space for large subsets that are nearly
//! ultrametric.
//!
//! A subset `S` whose induced metric embeds into an ultrametric with
//! distortion `D` also embeds into every `l_p` with distortion `D`: fit the
//! subdominant ultrametric and embed that isometrically. The routines here
//! find such subsets, exactly for small spaces and greedily otherwise, and
//! package the result as a [`SubsetCertificate`] that can be re-verified.
//!
//! Ultrametric distortion never increases when passing to a subset, so the
//! feasible subsets form a down-closed family. The exact search exploits this
//! with a candidate-set branch and bound: a point that cannot join the
//! current subset can never join any extension of it.

use alloc::string::String;
use alloc::vec::Vec;

use crate::distortion::{subdominant_ultrametric, subset_ultrametric_distortion, UltrametricFit};
use crate::embed::{embed_space, isometry_check, EmbeddingTarget, SparseEmbedding};
use crate::error::{Error, Result};
use crate::gen::{generate, GenKind, GenSpec};
use crate::metric::{FiniteMetricSpace, Tolerance};
use crate::rng::SplitMix64;

/// Largest space [`best_subset_exact`] accepts.
pub const DEFAULT_EXACT_CAP: usize = 22;

/// Acceptance rule for a subset's ultrametric distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// `distortion <= D`
    AtMost(f64),
    /// `distortion < D`
    Below(f64),
}

impl Bound {
    pub fn check(self) -> Result<Self> {
        match self {
            Bound::AtMost(d) if d >= 1.0 => Ok(self),
            Bound::Below(d) if d > 1.0 => Ok(self),
            Bound::AtMost(d) | Bound::Below(d) => Err(Error::InvalidBound(d)),
        }
    }

    #[inline]
    pub fn admits(self, distortion: f64) -> bool {
        match self {
            Bound::AtMost(d) => distortion <= d,
            Bound::Below(d) => distortion < d,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Bound::AtMost(d) | Bound::Below(d) => d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMethod {
    Exact,
    Greedy(GreedyStrategy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreedyStrategy {
    /// Grow from a start point, always trying the point farthest from the
    /// current subset next.
    FarthestFirst,
    /// Start from everything and drop the point in the most triples that
    /// break the strong triangle inequality.
    PeelWorst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetCertificate {
    /// Point indices of the subset, ascending.
    pub subset: Vec<usize>,
    pub labels: Vec<String>,
    /// Subdominant ultrametric of the induced subspace.
    pub fitted: UltrametricFit,
    pub achieved_distortion: f64,
    pub bound: Bound,
    /// Coordinates of the fitted ultrametric in `l_p`, once attached.
    pub lp_coordinates: Option<SparseEmbedding>,
    pub method: SearchMethod,
}

impl SubsetCertificate {
    fn new(
        space: &FiniteMetricSpace,
        mut subset: Vec<usize>,
        bound: Bound,
        method: SearchMethod,
    ) -> Result<Self> {
        subset.sort_unstable();
        let induced = space.subspace(&subset)?;
        let fitted = subdominant_ultrametric(&induced);
        Ok(SubsetCertificate {
            labels: induced.labels().to_vec(),
            achieved_distortion: fitted.distortion,
            subset,
            fitted,
            bound,
            lp_coordinates: None,
            method,
        })
    }

    pub fn len(&self) -> usize {
        self.subset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subset.is_empty()
    }

    /// Embeds the fitted ultrametric into `l_p` and stores the coordinates.
    pub fn attach_lp(&mut self, p: f64, tol: Tolerance) -> Result<&SparseEmbedding> {
        let target = EmbeddingTarget::lp(p)?;
        let emb = embed_space(&self.fitted.to_space(), target, tol)?;
        Ok(self.lp_coordinates.insert(emb))
    }

    /// Re-checks the certificate against `space` from scratch: the subset's
    /// distortion meets the bound, and attached coordinates are isometric to
    /// the fitted ultrametric.
    pub fn verify(&self, space: &FiniteMetricSpace, tol: Tolerance) -> Result<bool> {
        let induced = space.subspace(&self.subset)?;
        let fitted = subdominant_ultrametric(&induced);
        if !self.bound.admits(fitted.distortion) {
            return Ok(false);
        }
        if let Some(emb) = &self.lp_coordinates {
            if !isometry_check(&fitted.to_space(), emb, tol)?.pass {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn best_subset_exact(
    space: &FiniteMetricSpace,
    max_distortion: f64,
) -> Result<SubsetCertificate> {
    best_subset_exact_with(space, Bound::AtMost(max_distortion), DEFAULT_EXACT_CAP)
}

/// Maximum-cardinality subset meeting `bound`. Among subsets of maximum size,
/// returns the one whose labels, sorted, are lexicographically smallest.
pub fn best_subset_exact_with(
    space: &FiniteMetricSpace,
    bound: Bound,
    cap: usize,
) -> Result<SubsetCertificate> {
    let bound = bound.check()?;
    let n = space.len();
    if n > cap {
        return Err(Error::CapExceeded { n, cap });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| space.label(a).cmp(space.label(b)));

    let values = space.distance_values();
    let best = match values[..] {
        [] | [_] => order,
        [short, long] if !bound.admits(long / short) => {
            // Distortion is 1 exactly when the short-distance graph is a
            // disjoint union of cliques, and long/short otherwise.
            let mut search = ClusterSearch::new(space, short);
            search.run(order);
            search.best
        }
        [_, _] => order,
        _ => {
            let mut search = GenericSearch {
                space,
                bound,
                best: Vec::new(),
            };
            search.run(Vec::new(), order);
            search.best
        }
    };
    SubsetCertificate::new(space, best, bound, SearchMethod::Exact)
}

struct GenericSearch<'a> {
    space: &'a FiniteMetricSpace,
    bound: Bound,
    best: Vec<usize>,
}

impl GenericSearch<'_> {
    fn run(&mut self, mut current: Vec<usize>, candidates: Vec<usize>) {
        if current.len() + candidates.len() <= self.best.len() {
            return;
        }
        let Some((&v, rest)) = candidates.split_first() else {
            self.best = current;
            return;
        };
        current.push(v);
        let narrowed: Vec<usize> = rest
            .iter()
            .copied()
            .filter(|&u| {
                current.push(u);
                let ok = self
                    .bound
                    .admits(subset_ultrametric_distortion(self.space, &current));
                current.pop();
                ok
            })
            .collect();
        self.run(current.clone(), narrowed);
        current.pop();
        self.run(current, rest.to_vec());
    }
}

/// Maximum induced cluster subgraph of the graph `d(x, y) == short`.
struct ClusterSearch {
    adjacent: Vec<bool>,
    n: usize,
    comp_of: Vec<usize>,
    comp_size: Vec<usize>,
    current: Vec<usize>,
    best: Vec<usize>,
}

const OUT: usize = usize::MAX;

impl ClusterSearch {
    fn new(space: &FiniteMetricSpace, short: f64) -> Self {
        let n = space.len();
        let mut adjacent = alloc::vec![false; n * n];
        for x in 0..n {
            for y in 0..n {
                adjacent[x * n + y] = x != y && space.dist(x, y) == short;
            }
        }
        ClusterSearch {
            adjacent,
            n,
            comp_of: alloc::vec![OUT; n],
            comp_size: Vec::new(),
            current: Vec::new(),
            best: Vec::new(),
        }
    }

    /// Component `u` would join (`Some(None)` for a fresh one), or `None` if
    /// adding `u` breaks the union-of-cliques structure.
    fn joins(&self, u: usize) -> Option<Option<usize>> {
        let mut comp = None;
        let mut count = 0;
        for &x in &self.current {
            if self.adjacent[u * self.n + x] {
                let c = self.comp_of[x];
                match comp {
                    None => comp = Some(c),
                    Some(prev) if prev != c => return None,
                    _ => {}
                }
                count += 1;
            }
        }
        match comp {
            None => Some(None),
            Some(c) if count == self.comp_size[c] => Some(Some(c)),
            Some(_) => None,
        }
    }

    fn run(&mut self, candidates: Vec<usize>) {
        if self.current.len() + candidates.len() <= self.best.len() {
            return;
        }
        let Some((&v, rest)) = candidates.split_first() else {
            self.best = self.current.clone();
            return;
        };
        let joined = self.joins(v).expect("candidates are always compatible");
        let c = joined.unwrap_or_else(|| {
            self.comp_size.push(0);
            self.comp_size.len() - 1
        });
        self.comp_of[v] = c;
        self.comp_size[c] += 1;
        self.current.push(v);

        let narrowed: Vec<usize> = rest
            .iter()
            .copied()
            .filter(|&u| self.joins(u).is_some())
            .collect();
        self.run(narrowed);

        self.current.pop();
        self.comp_size[c] -= 1;
        self.comp_of[v] = OUT;
        if joined.is_none() {
            self.comp_size.pop();
        }
        self.run(rest.to_vec());
    }
}

pub fn best_subset_greedy(
    space: &FiniteMetricSpace,
    max_distortion: f64,
    strategy: GreedyStrategy,
    seed: u64,
) -> Result<SubsetCertificate> {
    best_subset_greedy_with(space, Bound::AtMost(max_distortion), strategy, seed)
}

/// Heuristic subset search. Farthest-first starts at point `seed % n`;
/// peel-worst ignores the seed.
pub fn best_subset_greedy_with(
    space: &FiniteMetricSpace,
    bound: Bound,
    strategy: GreedyStrategy,
    seed: u64,
) -> Result<SubsetCertificate> {
    let bound = bound.check()?;
    let n = space.len();
    let subset = match strategy {
        GreedyStrategy::FarthestFirst => farthest_first(space, bound, (seed % n as u64) as usize),
        GreedyStrategy::PeelWorst => peel_worst(space, bound),
    };
    SubsetCertificate::new(space, subset, bound, SearchMethod::Greedy(strategy))
}

fn farthest_first(space: &FiniteMetricSpace, bound: Bound, start: usize) -> Vec<usize> {
    let n = space.len();
    let mut subset = alloc::vec![start];
    let mut open = alloc::vec![true; n];
    open[start] = false;
    // Distance from each point to the current subset.
    let mut gap: Vec<f64> = (0..n).map(|x| space.dist(start, x)).collect();
    loop {
        let mut next: Option<usize> = None;
        for x in (0..n).filter(|&x| open[x]) {
            if next.is_none_or(|y| gap[x] > gap[y]) {
                next = Some(x);
            }
        }
        let Some(x) = next else { break };
        open[x] = false;
        subset.push(x);
        if bound.admits(subset_ultrametric_distortion(space, &subset)) {
            for (y, g) in gap.iter_mut().enumerate() {
                *g = g.min(space.dist(x, y));
            }
        } else {
            subset.pop();
        }
    }
    subset
}

fn peel_worst(space: &FiniteMetricSpace, bound: Bound) -> Vec<usize> {
    let tol = Tolerance::default();
    let mut subset: Vec<usize> = (0..space.len()).collect();
    while !bound.admits(subset_ultrametric_distortion(space, &subset)) {
        let k = subset.len();
        let mut counts = alloc::vec![0usize; k];
        for a in 0..k {
            for b in (a + 1)..k {
                let long = space.dist(subset[a], subset[b]);
                for c in 0..k {
                    if c == a || c == b {
                        continue;
                    }
                    let via = space
                        .dist(subset[a], subset[c])
                        .max(space.dist(subset[c], subset[b]));
                    if long > via + tol.slack(long) {
                        counts[a] += 1;
                        counts[b] += 1;
                        counts[c] += 1;
                    }
                }
            }
        }
        let mut worst = 0;
        for a in 1..k {
            if counts[a] > counts[worst] {
                worst = a;
            }
        }
        subset.remove(worst);
    }
    subset
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentRecord {
    pub n: usize,
    pub trial: usize,
    /// Seed of this trial's `W_n`.
    pub seed: u64,
    /// Largest subset with ultrametric distortion strictly below 2; a greedy
    /// lower bound when `exact` is false.
    pub largest_exact: usize,
    pub exact: bool,
    pub largest_greedy: usize,
}

/// For each trial, samples `W_n` from `G(n, 1/2)` and measures the largest
/// subset embeddable into an ultrametric with distortion `< 2`. Trial `t`
/// uses seed `SplitMix64::derive(seed, t)`.
pub fn wn_experiment(
    n: usize,
    trials: usize,
    seed: u64,
    exact_cap: usize,
) -> Result<Vec<ExperimentRecord>> {
    if trials == 0 {
        return Err(Error::InvalidSpec("need at least one trial"));
    }
    (0..trials)
        .map(|trial| wn_trial(n, trial, seed, exact_cap))
        .collect()
}

/// Trial `trial` of [`wn_experiment`] on its own.
pub fn wn_trial(n: usize, trial: usize, seed: u64, exact_cap: usize) -> Result<ExperimentRecord> {
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let bound = Bound::Below(2.0);
    let trial_seed = SplitMix64::derive(seed, trial as u64);
    let space = generate(&GenSpec::new(GenKind::erdos_renyi(), n, trial_seed))?;
    let greedy = best_subset_greedy_with(&space, bound, GreedyStrategy::FarthestFirst, trial_seed)?;
    let exact = n <= exact_cap;
    let largest_exact = if exact {
        best_subset_exact_with(&space, bound, exact_cap)?.len()
    } else {
        greedy.len()
    };
    Ok(ExperimentRecord {
        n,
        trial,
        seed: trial_seed,
        largest_exact,
        exact,
        largest_greedy: greedy.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn path3() -> FiniteMetricSpace {
        FiniteMetricSpace::from_rows(
            ["a", "b", "c"].iter().map(|s| s.to_string()).collect(),
            &[
                vec![0.0, 1.0, 2.0],
                vec![1.0, 0.0, 1.0],
                vec![2.0, 1.0, 0.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn ultrametric_keeps_everything() {
        let s = generate(&GenSpec::new(GenKind::dendrogram(), 9, 1)).unwrap();
        assert_eq!(best_subset_exact(&s, 1.0).unwrap().len(), 9);
        for strategy in [GreedyStrategy::FarthestFirst, GreedyStrategy::PeelWorst] {
            assert_eq!(best_subset_greedy(&s, 1.0, strategy, 3).unwrap().len(), 9);
        }
    }

    #[test]
    fn path_metric_exact() {
        let cert = best_subset_exact(&path3(), 1.5).unwrap();
        assert_eq!(cert.len(), 2);
        assert_eq!(cert.labels, vec!["a", "b"]);
        assert_eq!(cert.achieved_distortion, 1.0);
        assert_eq!(best_subset_exact(&path3(), 2.0).unwrap().len(), 3);
    }

    #[test]
    fn path_metric_farthest_first() {
        let cert = best_subset_greedy(&path3(), 1.5, GreedyStrategy::FarthestFirst, 0).unwrap();
        assert_eq!(cert.subset, vec![0, 2]);
        assert!(cert.achieved_distortion <= 1.5);
    }

    #[test]
    fn peel_worst_meets_bound() {
        let cert = best_subset_greedy(&path3(), 1.5, GreedyStrategy::PeelWorst, 0).unwrap();
        assert_eq!(cert.len(), 2);
        assert!(cert.achieved_distortion <= 1.5);
    }

    #[test]
    fn cap_and_bound_errors() {
        let big = generate(&GenSpec::new(GenKind::erdos_renyi(), 23, 0)).unwrap();
        assert_eq!(
            best_subset_exact(&big, 1.5).unwrap_err(),
            Error::CapExceeded { n: 23, cap: 22 }
        );
        assert_eq!(
            best_subset_exact(&path3(), 0.9).unwrap_err(),
            Error::InvalidBound(0.9)
        );
        assert!(best_subset_exact_with(&path3(), Bound::Below(1.0), 22).is_err());
    }

    #[test]
    fn small_wn() {
        let two = wn_experiment(2, 3, 5, 22).unwrap();
        assert!(two.iter().all(|r| r.largest_exact == 2 && r.exact));
        let three = wn_experiment(3, 16, 1, 22).unwrap();
        assert!(three.iter().all(|r| (2..=3).contains(&r.largest_exact)));
        assert!(three.iter().all(|r| r.largest_greedy <= r.largest_exact));
    }

    #[test]
    fn attach_and_verify() {
        let s = generate(&GenSpec::new(GenKind::random_metric(), 8, 4)).unwrap();
        let mut cert = best_subset_exact(&s, 1.2).unwrap();
        cert.attach_lp(2.0, Tolerance::default()).unwrap();
        assert!(cert.verify(&s, Tolerance::default()).unwrap());
    }
}
