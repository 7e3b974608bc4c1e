//! Seeded generators of test spaces.
//!
//! All randomness comes from [`SplitMix64`](crate::rng::SplitMix64), so a
//! [`GenSpec`] determines its output bit for bit on every platform.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metric::FiniteMetricSpace;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GenKind {
    /// Random rooted tree; every split picks between `min_branching` and
    /// `max_branching` children, and each child radius is the parent radius
    /// times a factor in `[decay / 2, decay)`. The root radius is 1.
    Dendrogram {
        min_branching: usize,
        max_branching: usize,
        decay: f64,
    },
    /// Distinct base-`base` digit strings of length `depth`; distance
    /// `base^-(common prefix length)`, rescaled to diameter 1.
    Padic { base: u32, depth: u32 },
    /// `W_n`: distance 1 across edges of a `G(n, edge_prob)` graph, 2 across
    /// non-edges.
    ErdosRenyi { edge_prob: f64 },
    /// Entries uniform in `[low, high]`, closed under shortest paths.
    RandomMetric { low: f64, high: f64 },
}

impl GenKind {
    pub fn dendrogram() -> Self {
        GenKind::Dendrogram {
            min_branching: 2,
            max_branching: 4,
            decay: 0.6,
        }
    }

    pub fn padic(base: u32, depth: u32) -> Self {
        GenKind::Padic { base, depth }
    }

    pub fn erdos_renyi() -> Self {
        GenKind::ErdosRenyi { edge_prob: 0.5 }
    }

    pub fn random_metric() -> Self {
        GenKind::RandomMetric {
            low: 1.0,
            high: 2.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GenKind::Dendrogram { .. } => "dendrogram",
            GenKind::Padic { .. } => "padic",
            GenKind::ErdosRenyi { .. } => "erdos-renyi",
            GenKind::RandomMetric { .. } => "random-metric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub kind: GenKind,
    pub n: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(kind: GenKind, n: usize, seed: u64) -> Self {
        GenSpec { kind, n, seed }
    }

    pub fn check(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be at least 1"));
        }
        match self.kind {
            GenKind::Dendrogram {
                min_branching,
                max_branching,
                decay,
            } => {
                if min_branching < 2 || max_branching < min_branching {
                    return Err(Error::InvalidSpec(
                        "branching range must satisfy 2 <= min <= max",
                    ));
                }
                if !(decay > 0.0 && decay < 1.0) {
                    return Err(Error::InvalidSpec("decay must lie in (0, 1)"));
                }
            }
            GenKind::Padic { base, depth } => {
                if base < 2 {
                    return Err(Error::InvalidSpec("p-adic base must be at least 2"));
                }
                if depth < 1 {
                    return Err(Error::InvalidSpec("p-adic depth must be at least 1"));
                }
                match (base as u64).checked_pow(depth) {
                    Some(count) if (self.n as u64) <= count => {}
                    Some(_) => {
                        return Err(Error::InvalidSpec("n exceeds base^depth distinct strings"))
                    }
                    None if depth > 64 => return Err(Error::InvalidSpec("p-adic depth too large")),
                    None => {}
                }
            }
            GenKind::ErdosRenyi { edge_prob } => {
                if !(0.0..=1.0).contains(&edge_prob) {
                    return Err(Error::InvalidSpec("edge probability must lie in [0, 1]"));
                }
            }
            GenKind::RandomMetric { low, high } => {
                if !(low > 0.0 && high >= low && high.is_finite()) {
                    return Err(Error::InvalidSpec("need 0 < low <= high < inf"));
                }
            }
        }
        Ok(())
    }

    /// Non-fatal remarks about the spec (currently: a non-prime p-adic base).
    pub fn warnings(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if let GenKind::Padic { base, .. } = self.kind {
            if base >= 2 && !is_prime(base) {
                out.push("p-adic base is not prime; the space is still ultrametric");
            }
        }
        out
    }
}

fn is_prime(x: u32) -> bool {
    x >= 2
        && (2..)
            .take_while(|d| d * d <= x)
            .all(|d| !x.is_multiple_of(d))
}

pub fn generate(spec: &GenSpec) -> Result<FiniteMetricSpace> {
    spec.check()?;
    let mut rng = SplitMix64::new(spec.seed);
    let n = spec.n;
    let space = match spec.kind {
        GenKind::Dendrogram {
            min_branching,
            max_branching,
            decay,
        } => dendrogram(&mut rng, n, min_branching, max_branching, decay)?,
        GenKind::Padic { base, depth } => padic(&mut rng, n, base, depth)?,
        GenKind::ErdosRenyi { edge_prob } => {
            let mut d = alloc::vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = if rng.next_f64() < edge_prob { 1.0 } else { 2.0 };
                    d[i * n + j] = v;
                    d[j * n + i] = v;
                }
            }
            FiniteMetricSpace::from_fn(numbered("v", n), |i, j| d[i * n + j])?
        }
        GenKind::RandomMetric { low, high } => {
            let mut d = alloc::vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = low + (high - low) * rng.next_f64();
                    d[i * n + j] = v;
                    d[j * n + i] = v;
                }
            }
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let via = d[i * n + k] + d[k * n + j];
                        if via < d[i * n + j] {
                            d[i * n + j] = via;
                        }
                    }
                }
            }
            FiniteMetricSpace::from_fn(numbered("x", n), |i, j| d[i * n + j])?
        }
    };
    Ok(space.with_name(alloc::format!(
        "{}-n{}-seed{}",
        spec.kind.name(),
        n,
        spec.seed
    )))
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| alloc::format!("{prefix}{i}")).collect()
}

fn dendrogram(
    rng: &mut SplitMix64,
    n: usize,
    min_branching: usize,
    max_branching: usize,
    decay: f64,
) -> Result<FiniteMetricSpace> {
    let mut d = alloc::vec![0.0; n * n];
    let mut points: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut points);
    let mut stack: Vec<(Vec<usize>, f64)> = alloc::vec![(points, 1.0)];
    while let Some((group, radius)) = stack.pop() {
        if group.len() < 2 {
            continue;
        }
        let k = rng.range_inclusive(
            min_branching.min(group.len()),
            max_branching.min(group.len()),
        );
        // k - 1 distinct cut positions in 1..len
        let mut cuts: Vec<usize> = (1..group.len()).collect();
        rng.shuffle(&mut cuts);
        cuts.truncate(k - 1);
        cuts.sort_unstable();
        let mut parts = Vec::with_capacity(k);
        let mut start = 0;
        for &c in cuts.iter().chain(core::iter::once(&group.len())) {
            parts.push(group[start..c].to_vec());
            start = c;
        }
        for (a, pa) in parts.iter().enumerate() {
            for pb in &parts[a + 1..] {
                for &x in pa {
                    for &y in pb {
                        d[x * n + y] = radius;
                        d[y * n + x] = radius;
                    }
                }
            }
        }
        for part in parts {
            let factor = decay * (1.0 - 0.5 * rng.next_f64());
            stack.push((part, radius * factor));
        }
    }
    FiniteMetricSpace::from_fn(numbered("x", n), |i, j| d[i * n + j])
}

fn padic(rng: &mut SplitMix64, n: usize, base: u32, depth: u32) -> Result<FiniteMetricSpace> {
    let base64 = base as u64;
    let total = base64.checked_pow(depth);
    let mut codes: Vec<Vec<u32>> = match total {
        Some(total) if total <= 4 * n as u64 + 64 => {
            // Partial Fisher-Yates over the whole code range.
            let mut all: Vec<u64> = (0..total).collect();
            for i in 0..n {
                let j = i + rng.below(total - i as u64) as usize;
                all.swap(i, j);
            }
            all.truncate(n);
            all.into_iter().map(|c| digits(c, base, depth)).collect()
        }
        _ => {
            let mut seen = BTreeSet::new();
            while seen.len() < n {
                let code: Vec<u32> = (0..depth).map(|_| rng.below(base64) as u32).collect();
                seen.insert(code);
            }
            seen.into_iter().collect()
        }
    };
    codes.sort();
    let labels: Vec<String> = codes.iter().map(|c| code_label(c, base)).collect();
    let raw = |i: usize, j: usize| {
        let common = codes[i]
            .iter()
            .zip(&codes[j])
            .take_while(|(a, b)| a == b)
            .count();
        libm::pow(base as f64, -(common as f64))
    };
    let mut max: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max = max.max(raw(i, j));
        }
    }
    let scale = if max > 0.0 { max } else { 1.0 };
    FiniteMetricSpace::from_fn(labels, |i, j| raw(i, j) / scale)
}

fn digits(mut code: u64, base: u32, depth: u32) -> Vec<u32> {
    let mut out = alloc::vec![0u32; depth as usize];
    for slot in out.iter_mut().rev() {
        *slot = (code % base as u64) as u32;
        code /= base as u64;
    }
    out
}

fn code_label(code: &[u32], base: u32) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    for (k, digit) in code.iter().enumerate() {
        if base <= 10 {
            let _ = write!(s, "{digit}");
        } else {
            if k > 0 {
                s.push('.');
            }
            let _ = write!(s, "{digit}");
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{validate, Tolerance};

    #[test]
    fn padic_full_binary_depth_two() {
        let s = generate(&GenSpec::new(GenKind::padic(2, 2), 4, 0)).unwrap();
        assert_eq!(s.labels(), &["00", "01", "10", "11"]);
        assert_eq!(s.distance_values(), alloc::vec![0.5, 1.0]);
        assert_eq!(s.dist(0, 1), 0.5);
        assert_eq!(s.dist(1, 2), 1.0);
        assert!(validate(&s, Tolerance::default()).is_ultrametric);
    }

    #[test]
    fn padic_rejects_bad_specs() {
        assert!(generate(&GenSpec::new(GenKind::padic(2, 0), 1, 0)).is_err());
        assert!(generate(&GenSpec::new(GenKind::padic(1, 3), 1, 0)).is_err());
        assert!(generate(&GenSpec::new(GenKind::padic(2, 3), 10, 0)).is_err());
        let spec = GenSpec::new(GenKind::padic(4, 2), 5, 0);
        assert!(generate(&spec).is_ok());
        assert_eq!(spec.warnings().len(), 1);
    }

    #[test]
    fn padic_large_base_labels() {
        let s = generate(&GenSpec::new(GenKind::padic(11, 2), 3, 5)).unwrap();
        assert!(s.labels().iter().all(|l| l.contains('.')));
    }

    #[test]
    fn erdos_renyi_pair() {
        let s = generate(&GenSpec::new(GenKind::erdos_renyi(), 2, 11)).unwrap();
        assert!(s.dist(0, 1) == 1.0 || s.dist(0, 1) == 2.0);
    }

    #[test]
    fn dendrogram_singleton() {
        let s = generate(&GenSpec::new(GenKind::dendrogram(), 1, 4)).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn zero_points_rejected() {
        assert!(generate(&GenSpec::new(GenKind::erdos_renyi(), 0, 0)).is_err());
    }

    #[test]
    fn random_metric_is_metric() {
        let spec = GenSpec::new(
            GenKind::RandomMetric {
                low: 0.1,
                high: 10.0,
            },
            12,
            8,
        );
        let s = generate(&spec).unwrap();
        assert!(validate(&s, Tolerance::default()).is_metric);
    }

    #[test]
    fn seeds_are_reproducible() {
        for kind in [
            GenKind::dendrogram(),
            GenKind::padic(3, 4),
            GenKind::erdos_renyi(),
            GenKind::random_metric(),
        ] {
            let spec = GenSpec::new(kind, 17, 99);
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        }
    }
}
