//! Brute-force reference computations for tests.
//!
//! Nothing here calls the tree, embedding, subdominant or subset-search code;
//! these routines only read distances and enumerate.

use alloc::vec::Vec;

use crate::metric::FiniteMetricSpace;

/// Calls `visit` with every partition of `items` into at least `min_blocks`
/// non-empty blocks.
pub fn for_each_partition(
    items: &[usize],
    min_blocks: usize,
    visit: &mut dyn FnMut(&[Vec<usize>]),
) {
    fn rec(
        items: &[usize],
        k: usize,
        blocks: &mut Vec<Vec<usize>>,
        min_blocks: usize,
        visit: &mut dyn FnMut(&[Vec<usize>]),
    ) {
        if k == items.len() {
            if blocks.len() >= min_blocks {
                visit(blocks);
            }
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(items[k]);
            rec(items, k + 1, blocks, min_blocks, visit);
            blocks[b].pop();
        }
        blocks.push(alloc::vec![items[k]]);
        rec(items, k + 1, blocks, min_blocks, visit);
        blocks.pop();
    }
    rec(items, 0, &mut Vec::new(), min_blocks, visit);
}

/// Enumerates every ultrametric on the points whose values come from
/// `values` (ascending), as a hierarchy: a block with `>= 2` points picks a
/// value strictly below its parent's and splits into `>= 2` sub-blocks; pairs
/// split there get that value. `accept` is called for each split with the
/// cross pairs and may veto the branch; `leaf` is called for each complete
/// ultrametric.
/// Called with the partial matrix and the newly assigned pair and value.
type Accept<'a> = dyn FnMut(&[f64], usize, usize, f64) -> bool + 'a;

struct Hierarchies<'a> {
    values: &'a [f64],
    n: usize,
    u: Vec<f64>,
}

impl Hierarchies<'_> {
    fn run(
        &mut self,
        pending: &mut Vec<(Vec<usize>, usize)>,
        accept: &mut Accept<'_>,
        leaf: &mut dyn FnMut(&[f64]),
    ) {
        let Some((block, hi)) = pending.pop() else {
            leaf(&self.u);
            return;
        };
        if block.len() < 2 {
            self.run(pending, accept, leaf);
            pending.push((block, hi));
            return;
        }
        let mut parts: Vec<Vec<Vec<usize>>> = Vec::new();
        for_each_partition(&block, 2, &mut |p| parts.push(p.to_vec()));
        for v in 0..hi {
            let value = self.values[v];
            for p in &parts {
                self.clear(&block);
                let mut ok = true;
                'outer: for (a, pa) in p.iter().enumerate() {
                    for pb in &p[a + 1..] {
                        for &x in pa {
                            for &y in pb {
                                self.u[x * self.n + y] = value;
                                self.u[y * self.n + x] = value;
                                if !accept(&self.u, x, y, value) {
                                    ok = false;
                                    break 'outer;
                                }
                            }
                        }
                    }
                }
                if ok {
                    let depth = pending.len();
                    for part in p.iter().cloned() {
                        pending.push((part, v));
                    }
                    self.run(pending, accept, leaf);
                    pending.truncate(depth);
                }
            }
        }
        self.clear(&block);
        pending.push((block, hi));
    }

    fn clear(&mut self, block: &[usize]) {
        for &x in block {
            for &y in block {
                self.u[x * self.n + y] = 0.0;
            }
        }
    }
}

fn distinct_values(space: &FiniteMetricSpace) -> Vec<f64> {
    let n = space.len();
    let mut vals = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            vals.push(space.dist(i, j));
        }
    }
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    vals
}

/// Smallest `(max u/d) * (max d/u)` over all ultrametrics `u` with values in
/// the distance set of `space`. Exponential; meant for `n <= 6`.
pub fn min_ultrametric_distortion(space: &FiniteMetricSpace) -> f64 {
    let n = space.len();
    if n < 2 {
        return 1.0;
    }
    let values = distinct_values(space);
    // The accept hook prunes on the partial product over assigned pairs.
    let mut h = Hierarchies {
        values: &values,
        n,
        u: alloc::vec![0.0; n * n],
    };
    let all: Vec<usize> = (0..n).collect();
    let best_cell = core::cell::Cell::new(f64::INFINITY);
    let mut accept = |u: &[f64], _x: usize, _y: usize, _v: f64| {
        let (mut up, mut down) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in (i + 1)..n {
                let uv = u[i * n + j];
                if uv > 0.0 {
                    let d = space.dist(i, j);
                    up = up.max(uv / d);
                    down = down.max(d / uv);
                }
            }
        }
        up * down < best_cell.get()
    };
    let mut leaf = |u: &[f64]| {
        let (mut up, mut down) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = space.dist(i, j);
                up = up.max(u[i * n + j] / d);
                down = down.max(d / u[i * n + j]);
            }
        }
        if up * down < best_cell.get() {
            best_cell.set(up * down);
        }
    };
    h.run(
        &mut alloc::vec![(all, values.len())],
        &mut accept,
        &mut leaf,
    );
    best_cell.get()
}

/// Entrywise maximum over all ultrametrics `u <= d` with values in the
/// distance set of `space` (row-major). Exponential; meant for `n <= 7`.
pub fn max_dominated_ultrametric(space: &FiniteMetricSpace) -> Vec<f64> {
    let n = space.len();
    let values = distinct_values(space);
    let mut top = alloc::vec![0.0; n * n];
    if n < 2 {
        return top;
    }
    let mut h = Hierarchies {
        values: &values,
        n,
        u: alloc::vec![0.0; n * n],
    };
    let all: Vec<usize> = (0..n).collect();
    let mut accept = |_u: &[f64], x: usize, y: usize, v: f64| v <= space.dist(x, y);
    let mut leaf = |u: &[f64]| {
        for (t, &v) in top.iter_mut().zip(u) {
            if v > *t {
                *t = v;
            }
        }
    };
    h.run(
        &mut alloc::vec![(all, values.len())],
        &mut accept,
        &mut leaf,
    );
    top
}

/// Minimax path distances by a Floyd-Warshall sweep over `(min, max)`.
pub fn minimax_paths(space: &FiniteMetricSpace) -> Vec<f64> {
    let n = space.len();
    let mut m: Vec<f64> = (0..n * n).map(|k| space.dist(k / n, k % n)).collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = m[i * n + k].max(m[k * n + j]);
                if via < m[i * n + j] {
                    m[i * n + j] = via;
                }
            }
        }
    }
    m
}

/// Largest subset size accepted by `feasible`, by visiting all `2^n` subsets.
pub fn max_subset_size(n: usize, feasible: &mut dyn FnMut(&[usize]) -> bool) -> usize {
    assert!(n < 25, "naive enumeration is limited to small n");
    let mut best = 0;
    let mut subset = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        subset.clear();
        subset.extend((0..n).filter(|&i| mask & (1 << i) != 0));
        if feasible(&subset) {
            best = size;
        }
    }
    best
}

/// Whether the graph `d == short` induced on `subset` is a disjoint union of
/// cliques (no induced path on three vertices).
pub fn is_cluster_subgraph(space: &FiniteMetricSpace, subset: &[usize], short: f64) -> bool {
    let adj = |a: usize, b: usize| space.dist(a, b) == short;
    for &x in subset {
        for &y in subset {
            for &z in subset {
                if x != y && y != z && x != z && adj(x, y) && adj(y, z) && !adj(x, z) {
                    return false;
                }
            }
        }
    }
    true
}

/// `(sum |a_i - b_i|^p)^(1/p)` over dense vectors, or the sup norm when `p`
/// is infinite.
pub fn dense_distance(a: &[f64], b: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        return a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
    }
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| libm::pow((x - y).abs(), p))
        .sum();
    libm::pow(s, 1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn partition_counts_are_bell_numbers() {
        for (n, bell) in [(1, 1), (2, 2), (3, 5), (4, 15), (5, 52)] {
            let items: Vec<usize> = (0..n).collect();
            let mut count = 0;
            for_each_partition(&items, 1, &mut |_| count += 1);
            assert_eq!(count, bell);
        }
    }

    #[test]
    fn path_metric_oracles() {
        let s = FiniteMetricSpace::from_fn(
            ["a", "b", "c"].iter().map(|s| s.to_string()).collect(),
            |i, j| (j - i) as f64,
        )
        .unwrap();
        assert_eq!(min_ultrametric_distortion(&s), 2.0);
        let top = max_dominated_ultrametric(&s);
        assert_eq!((top[1], top[2], top[5]), (1.0, 1.0, 1.0));
        assert_eq!(minimax_paths(&s)[2], 1.0);
    }
}
