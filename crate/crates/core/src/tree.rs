//! The nested partition of a finite ultrametric space into closed balls.
//!
//! Starting from the whole space (a ball of radius `diam X`), every ball of
//! radius `r > 0` is split into the classes of the relation `d(x, y) < r`.
//! In an ultrametric space this relation is an equivalence, each class is a
//! closed ball of strictly smaller diameter, and distinct classes sit at
//! distance exactly `r` from each other. Repeating until every ball is a
//! single point yields a rooted tree in which the distance of two points is
//! the radius of their lowest common ancestor.
//!
//! Conventions that make the tree canonical:
//!
//! * the representative of a ball is its smallest point index;
//! * children are ordered by smallest member, so the first child always holds
//!   the parent's representative (and inherits it);
//! * node ids are assigned breadth-first, so the nodes of each level form a
//!   contiguous id range.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::metric::{FiniteMetricSpace, Tolerance};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub struct BallNode {
    pub id: NodeId,
    /// Sorted point indices.
    pub members: Vec<usize>,
    /// Diameter of `members`.
    pub radius: f64,
    pub representative: usize,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Edge count from the root.
    pub depth: usize,
}

impl BallNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BallTree {
    nodes: Vec<BallNode>,
    depth: usize,
    level_sizes: Vec<usize>,
    leaf_of: Vec<NodeId>,
}

impl BallTree {
    pub const ROOT: NodeId = 0;

    pub fn root(&self) -> NodeId {
        Self::ROOT
    }

    pub fn nodes(&self) -> &[BallNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &BallNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of points of the underlying space.
    pub fn num_points(&self) -> usize {
        self.leaf_of.len()
    }

    /// Maximal root-to-leaf edge count.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Cardinality of the partition at each level `0..=depth`. A leaf that
    /// ends above the deepest level keeps counting as its own block below
    /// it, so every level is a partition of the whole space.
    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }

    pub fn leaf(&self, point: usize) -> NodeId {
        self.leaf_of[point]
    }

    /// Node ids from the root down to the leaf of `point`.
    pub fn path(&self, point: usize) -> Vec<NodeId> {
        let mut path = Vec::with_capacity(self.nodes[self.leaf_of[point]].depth + 1);
        let mut cur = Some(self.leaf_of[point]);
        while let Some(id) = cur {
            path.push(id);
            cur = self.nodes[id].parent;
        }
        path.reverse();
        path
    }

    pub fn lca(&self, x: usize, y: usize) -> NodeId {
        let (mut a, mut b) = (self.leaf_of[x], self.leaf_of[y]);
        while self.nodes[a].depth > self.nodes[b].depth {
            a = self.nodes[a].parent.unwrap();
        }
        while self.nodes[b].depth > self.nodes[a].depth {
            b = self.nodes[b].parent.unwrap();
        }
        while a != b {
            a = self.nodes[a].parent.unwrap();
            b = self.nodes[b].parent.unwrap();
        }
        a
    }

    /// Radius of the lowest common ancestor of two points; equals their
    /// distance for `x != y` and is 0 for `x == y`.
    pub fn lca_radius(&self, x: usize, y: usize) -> f64 {
        self.nodes[self.lca(x, y)].radius
    }

    /// The node whose member set is exactly `ball`, if any. `ball` may be
    /// given in any order.
    pub fn find_ball_node(&self, ball: &[usize]) -> Option<NodeId> {
        let mut sorted = ball.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let first = *sorted.first()?;
        if first >= self.num_points() || *sorted.last()? >= self.num_points() {
            return None;
        }
        let mut cur = Some(self.leaf_of[first]);
        while let Some(id) = cur {
            let node = &self.nodes[id];
            if node.members.len() == sorted.len() {
                return (node.members == sorted).then_some(id);
            }
            if node.members.len() > sorted.len() {
                return None;
            }
            cur = node.parent;
        }
        None
    }

    /// Structural fingerprint (FNV-1a over members and radii), used to tie an
    /// embedding to the tree it came from.
    pub fn fingerprint(&self) -> u64 {
        const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
        const PRIME: u64 = 0x0000_0100_0000_01b3;
        let mut h = OFFSET;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= u64::from(b);
                h = h.wrapping_mul(PRIME);
            }
        };
        for node in &self.nodes {
            eat(node.members.len() as u64);
            for &m in &node.members {
                eat(m as u64);
            }
            eat(node.radius.to_bits());
            eat(node.parent.map_or(u64::MAX, |p| p as u64));
        }
        h
    }
}

/// Builds the ball-partition tree of an ultrametric space.
///
/// A pair with `d(x, y) >= radius - slack` counts as realizing the radius, so
/// it is split apart. If the relation fails to partition a ball (the input is
/// not ultrametric within `tol`), returns [`Error::NotUltrametric`].
pub fn build_tree(space: &FiniteMetricSpace, tol: Tolerance) -> Result<BallTree> {
    let n = space.len();
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    let all: Vec<usize> = (0..n).collect();
    let mut nodes = alloc::vec![BallNode {
        id: 0,
        radius: diameter_of(space, &all),
        members: all,
        representative: 0,
        parent: None,
        children: Vec::new(),
        depth: 0,
    }];
    let mut leaf_of = alloc::vec![usize::MAX; n];
    let mut queue = VecDeque::from([0usize]);

    while let Some(id) = queue.pop_front() {
        if nodes[id].members.len() == 1 {
            leaf_of[nodes[id].members[0]] = id;
            continue;
        }
        let classes = split_ball(space, &nodes[id].members, nodes[id].radius, tol)?;
        let depth = nodes[id].depth + 1;
        for class in classes {
            let child = nodes.len();
            nodes.push(BallNode {
                id: child,
                radius: diameter_of(space, &class),
                representative: class[0],
                members: class,
                parent: Some(id),
                children: Vec::new(),
                depth,
            });
            nodes[id].children.push(child);
            queue.push_back(child);
        }
    }

    let depth = nodes.iter().map(|v| v.depth).max().unwrap_or(0);
    let mut level_sizes = alloc::vec![0usize; depth + 1];
    for v in &nodes {
        if v.is_leaf() {
            for size in &mut level_sizes[v.depth..] {
                *size += 1;
            }
        } else {
            level_sizes[v.depth] += 1;
        }
    }
    Ok(BallTree {
        nodes,
        depth,
        level_sizes,
        leaf_of,
    })
}

/// Classes of `d(x, y) < radius - slack` on `members`, each sorted, ordered
/// by smallest member.
fn split_ball(
    space: &FiniteMetricSpace,
    members: &[usize],
    radius: f64,
    tol: Tolerance,
) -> Result<Vec<Vec<usize>>> {
    let threshold = radius - tol.slack(radius);
    let close = |x: usize, y: usize| space.dist(x, y) < threshold;
    let mut class_of = alloc::vec![usize::MAX; members.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (a, &x) in members.iter().enumerate() {
        if class_of[a] != usize::MAX {
            continue;
        }
        let c = classes.len();
        let mut class = alloc::vec![x];
        class_of[a] = c;
        for (b, &y) in members.iter().enumerate().skip(a + 1) {
            if close(x, y) {
                if class_of[b] != usize::MAX {
                    // y is already tied to an earlier seed that x is far from.
                    let seed = classes[class_of[b]][0];
                    return Err(Error::NotUltrametric { x: seed, y, z: x });
                }
                class_of[b] = c;
                class.push(y);
            }
        }
        classes.push(class);
    }
    // Every pair must be close exactly when it shares a class.
    for (a, &x) in members.iter().enumerate() {
        for (b, &y) in members.iter().enumerate().skip(a + 1) {
            if close(x, y) != (class_of[a] == class_of[b]) {
                let seed = classes[class_of[a]][0];
                return Err(Error::NotUltrametric {
                    x: seed,
                    y: x,
                    z: y,
                });
            }
        }
    }
    Ok(classes)
}

fn diameter_of(space: &FiniteMetricSpace, members: &[usize]) -> f64 {
    let mut diam: f64 = 0.0;
    for (a, &x) in members.iter().enumerate() {
        for &y in &members[a + 1..] {
            diam = diam.max(space.dist(x, y));
        }
    }
    diam
}

/// `{y : d(center, y) <= r + slack}`, sorted.
pub fn closed_ball(
    space: &FiniteMetricSpace,
    center: usize,
    r: f64,
    tol: Tolerance,
) -> Result<Vec<usize>> {
    if center >= space.len() {
        return Err(Error::PointOutOfRange {
            index: center,
            len: space.len(),
        });
    }
    if r.is_nan() || r < 0.0 {
        return Err(Error::InvalidRadius {
            radius: r,
            outer: r,
        });
    }
    let bound = r + tol.slack(r);
    Ok((0..space.len())
        .filter(|&y| space.dist(center, y) <= bound)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::{String, ToString};
    use alloc::vec;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn three() -> FiniteMetricSpace {
        FiniteMetricSpace::from_rows(
            labels(&["a", "b", "c"]),
            &[
                vec![0.0, 1.0, 2.0],
                vec![1.0, 0.0, 2.0],
                vec![2.0, 2.0, 0.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn three_point_tree() {
        let t = build_tree(&three(), Tolerance::default()).unwrap();
        let root = t.node(t.root());
        assert_eq!(root.members, vec![0, 1, 2]);
        assert_eq!(root.radius, 2.0);
        assert_eq!(root.children.len(), 2);
        let ab = t.node(root.children[0]);
        let c = t.node(root.children[1]);
        assert_eq!((ab.members.clone(), ab.radius), (vec![0, 1], 1.0));
        assert_eq!((c.members.clone(), c.radius), (vec![2], 0.0));
        let kids: Vec<_> = ab
            .children
            .iter()
            .map(|&k| t.node(k).members.clone())
            .collect();
        assert_eq!(kids, vec![vec![0], vec![1]]);
        assert_eq!(t.depth(), 2);
        assert_eq!(t.level_sizes(), &[1, 2, 3]);
        assert_eq!(ab.representative, root.representative);
    }

    #[test]
    fn singleton_tree() {
        let s = FiniteMetricSpace::from_rows(labels(&["x"]), &[vec![0.0]]).unwrap();
        let t = build_tree(&s, Tolerance::default()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.node(0).radius, 0.0);
        assert!(t.node(0).is_leaf());
        assert_eq!(t.depth(), 0);
    }

    #[test]
    fn equilateral_splits_into_singletons() {
        let s = FiniteMetricSpace::from_fn(labels(&["a", "b", "c", "d"]), |_, _| 1.0).unwrap();
        let t = build_tree(&s, Tolerance::default()).unwrap();
        assert_eq!(t.node(0).radius, 1.0);
        assert_eq!(t.node(0).children.len(), 4);
        assert!(t
            .node(0)
            .children
            .iter()
            .all(|&c| t.node(c).members.len() == 1));
    }

    #[test]
    fn closed_balls() {
        let s = three();
        let tol = Tolerance::default();
        assert_eq!(closed_ball(&s, 0, 1.0, tol).unwrap(), vec![0, 1]);
        assert_eq!(closed_ball(&s, 0, 0.0, tol).unwrap(), vec![0]);
        assert_eq!(closed_ball(&s, 2, 2.0, tol).unwrap(), vec![0, 1, 2]);
        assert!(closed_ball(&s, 0, -1.0, tol).is_err());
    }

    #[test]
    fn ball_lookup() {
        let t = build_tree(&three(), Tolerance::default()).unwrap();
        assert_eq!(t.find_ball_node(&[1, 0]), Some(1));
        assert_eq!(t.find_ball_node(&[1, 2]), None);
        assert_eq!(t.find_ball_node(&[0, 1, 2]), Some(t.root()));
        assert_eq!(t.find_ball_node(&[]), None);
    }

    #[test]
    fn lca_radii() {
        let t = build_tree(&three(), Tolerance::default()).unwrap();
        assert_eq!(t.lca_radius(0, 1), 1.0);
        assert_eq!(t.lca_radius(0, 2), 2.0);
        assert_eq!(t.lca_radius(0, 0), 0.0);
    }

    #[test]
    fn rejects_path_metric() {
        let s = FiniteMetricSpace::from_rows(
            labels(&["a", "b", "c"]),
            &[
                vec![0.0, 1.0, 2.0],
                vec![1.0, 0.0, 1.0],
                vec![2.0, 1.0, 0.0],
            ],
        )
        .unwrap();
        assert!(matches!(
            build_tree(&s, Tolerance::default()),
            Err(Error::NotUltrametric { .. })
        ));
    }

    #[test]
    fn near_radius_pairs_are_split() {
        // d(a,b) sits within slack of the diameter: treated as equal to it.
        let s = FiniteMetricSpace::from_rows(
            labels(&["a", "b", "c"]),
            &[
                vec![0.0, 2.0 - 1e-13, 2.0],
                vec![2.0 - 1e-13, 0.0, 2.0],
                vec![2.0, 2.0, 0.0],
            ],
        )
        .unwrap();
        let t = build_tree(&s, Tolerance::default()).unwrap();
        assert_eq!(t.node(0).children.len(), 3);
    }
}
