//! Graphs, regions, boundaries, colorings, coarse-grained sets and covering
//! schedules.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphKind {
    Chain { n: usize },
    BaryTree { b: usize, height: usize },
    Grid2d { w: usize, h: usize },
    Custom { n: usize, edges: Vec<(usize, usize)> },
}

/// Sorted, deduplicated vertex list.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Region(Vec<usize>);

impl Region {
    pub fn new(mut v: Vec<usize>) -> Region {
        v.sort_unstable();
        v.dedup();
        Region(v)
    }

    pub fn empty() -> Region {
        Region(Vec::new())
    }

    pub fn range(lo: usize, hi_inclusive: usize) -> Region {
        Region((lo..=hi_inclusive).collect())
    }

    pub fn sites(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    pub fn union(&self, o: &Region) -> Region {
        let mut v = self.0.clone();
        v.extend_from_slice(&o.0);
        Region::new(v)
    }

    pub fn intersect(&self, o: &Region) -> Region {
        Region(self.0.iter().copied().filter(|x| o.contains(*x)).collect())
    }

    pub fn minus(&self, o: &Region) -> Region {
        Region(self.0.iter().copied().filter(|x| !o.contains(*x)).collect())
    }

    pub fn is_subset(&self, o: &Region) -> bool {
        self.0.iter().all(|x| o.contains(*x))
    }

    pub fn is_disjoint(&self, o: &Region) -> bool {
        self.0.iter().all(|x| !o.contains(*x))
    }
}

impl From<Vec<usize>> for Region {
    fn from(v: Vec<usize>) -> Region {
        Region::new(v)
    }
}

#[derive(Clone, Debug)]
pub struct SpinGraph {
    pub kind: GraphKind,
    pub d: usize,
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<Vec<usize>>,
    dist: Vec<Vec<usize>>,
    coords: Vec<Vec<usize>>,
}

impl SpinGraph {
    pub fn build(kind: GraphKind, d: usize) -> Result<SpinGraph> {
        if d < 2 {
            return Err(Error::Config(format!("local dimension {d} must be >= 2")));
        }
        let (n, edges, coords) = match &kind {
            GraphKind::Chain { n } => {
                if *n < 1 {
                    return Err(Error::Config("chain needs n >= 1".into()));
                }
                let e = (1..*n).map(|i| (i - 1, i)).collect();
                (*n, e, (0..*n).map(|i| vec![i]).collect())
            }
            GraphKind::BaryTree { b, height } => {
                if *b < 2 {
                    return Err(Error::Config("tree branching b must be >= 2".into()));
                }
                // breadth-first numbering: children of v are b*v+1 .. b*v+b
                let mut n = 0usize;
                let mut level = 1usize;
                for _ in 0..=*height {
                    n += level;
                    level *= b;
                }
                let e = (1..n).map(|v| ((v - 1) / b, v)).collect();
                let mut depth = vec![0usize; n];
                for v in 1..n {
                    depth[v] = depth[(v - 1) / b] + 1;
                }
                (n, e, depth.into_iter().map(|x| vec![x]).collect())
            }
            GraphKind::Grid2d { w, h } => {
                if *w < 1 || *h < 1 {
                    return Err(Error::Config("grid sizes must be >= 1".into()));
                }
                // row-major: vertex = row * w + col
                let mut e = Vec::new();
                for r in 0..*h {
                    for c in 0..*w {
                        let v = r * w + c;
                        if c + 1 < *w {
                            e.push((v, v + 1));
                        }
                        if r + 1 < *h {
                            e.push((v, v + w));
                        }
                    }
                }
                let coords = (0..w * h).map(|v| vec![v / w, v % w]).collect();
                (w * h, e, coords)
            }
            GraphKind::Custom { n, edges } => {
                if *n < 1 {
                    return Err(Error::Config("custom graph needs n >= 1".into()));
                }
                let mut set = BTreeSet::new();
                for &(a, b) in edges {
                    if a == b {
                        return Err(Error::Config(format!("self-loop at vertex {a}")));
                    }
                    if a >= *n || b >= *n {
                        return Err(Error::Config(format!("edge ({a},{b}) out of range")));
                    }
                    set.insert((a.min(b), a.max(b)));
                }
                (*n, set.into_iter().collect(), (0..*n).map(|i| vec![i]).collect())
            }
        };
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        let dist: Vec<Vec<usize>> = (0..n).map(|s| bfs(&adj, &[s])).collect();
        if dist[0].iter().any(|&x| x == usize::MAX) {
            return Err(Error::Config("graph is not connected".into()));
        }
        Ok(SpinGraph {
            kind,
            d,
            n,
            edges,
            adj,
            dist,
            coords,
        })
    }

    pub fn chain(n: usize) -> Result<SpinGraph> {
        Self::build(GraphKind::Chain { n }, 2)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(|a| a.len()).max().unwrap_or(0)
    }

    pub fn all(&self) -> Region {
        Region((0..self.n).collect())
    }

    /// Validated region from a vertex list.
    pub fn region(&self, v: Vec<usize>) -> Result<Region> {
        if let Some(x) = v.iter().find(|&&x| x >= self.n) {
            return Err(Error::Argument(format!("vertex {x} not in graph")));
        }
        Ok(Region::new(v))
    }

    pub fn vertex_distance(&self, a: usize, b: usize) -> usize {
        self.dist[a][b]
    }

    pub fn distance(&self, a: &Region, b: &Region) -> Result<usize> {
        if a.is_empty() || b.is_empty() {
            return Err(Error::Argument("distance of an empty region".into()));
        }
        let mut best = usize::MAX;
        for &x in a.sites() {
            for &y in b.sites() {
                best = best.min(self.dist[x][y]);
            }
        }
        Ok(best)
    }

    /// ∂A = {x ∉ A : dist(x, A) < r}
    pub fn boundary(&self, a: &Region, r: usize) -> Result<Region> {
        if r < 2 {
            return Err(Error::Argument(format!("interaction range {r} must be >= 2")));
        }
        if a.is_empty() {
            return Ok(Region::empty());
        }
        let d = bfs(&self.adj, a.sites());
        Ok(Region(
            (0..self.n).filter(|&x| d[x] > 0 && d[x] < r).collect(),
        ))
    }

    /// Nearest-neighbour boundary.
    pub fn bd(&self, a: &Region) -> Region {
        self.boundary(a, 2).expect("r = 2 is valid")
    }

    /// A∂ = A ∪ ∂A
    pub fn closure(&self, a: &Region) -> Region {
        a.union(&self.bd(a))
    }

    /// Edges with both endpoints in `a`.
    pub fn edges_within(&self, a: &Region) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(x, y)| a.contains(x) && a.contains(y))
            .collect()
    }

    /// Edges with exactly one endpoint in `a` and the other in `b`.
    pub fn edges_between(&self, a: &Region, b: &Region) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|&(x, y)| (a.contains(x) && b.contains(y)) || (a.contains(y) && b.contains(x)))
            .collect()
    }

    /// ∂_B A: vertices of A adjacent to B.
    pub fn inner_boundary_towards(&self, a: &Region, b: &Region) -> Region {
        Region(
            a.sites()
                .iter()
                .copied()
                .filter(|&x| self.adj[x].iter().any(|&y| b.contains(y)))
                .collect(),
        )
    }

    /// Coordinate along which regions are sliced: position for chains and
    /// custom graphs, depth for trees, row for grids.
    pub fn slice_coord(&self, v: usize) -> usize {
        self.coords[v][0]
    }

    pub fn coords(&self, v: usize) -> &[usize] {
        &self.coords[v]
    }

    pub fn two_coloring(&self) -> Result<Coloring> {
        let mut label = vec![u8::MAX; self.n];
        label[0] = 0;
        let mut q = VecDeque::from([0usize]);
        while let Some(v) = q.pop_front() {
            for &w in &self.adj[v] {
                if label[w] == u8::MAX {
                    label[w] = 1 - label[v];
                    q.push_back(w);
                } else if label[w] == label[v] {
                    return Err(Error::NotBipartite(w));
                }
            }
        }
        Ok(Coloring { labels: label })
    }

    /// Number of connected edge sets of size `m` containing edge `e`.
    pub fn connected_subset_count(&self, e: (usize, usize), m: usize) -> Result<usize> {
        if m == 0 {
            return Err(Error::Argument("subset size must be >= 1".into()));
        }
        if m > 8 {
            return Err(Error::Resource(format!("subset size {m} > 8")));
        }
        let e0 = self
            .edges
            .iter()
            .position(|&x| x == (e.0.min(e.1), e.0.max(e.1)))
            .ok_or_else(|| Error::Argument(format!("{e:?} is not an edge")))?;
        let mut layer: HashSet<Vec<usize>> = HashSet::from([vec![e0]]);
        for _ in 1..m {
            let mut next = HashSet::new();
            for set in &layer {
                let verts: HashSet<usize> = set
                    .iter()
                    .flat_map(|&i| [self.edges[i].0, self.edges[i].1])
                    .collect();
                for (i, &(a, b)) in self.edges.iter().enumerate() {
                    if set.contains(&i) || !(verts.contains(&a) || verts.contains(&b)) {
                        continue;
                    }
                    let mut s = set.clone();
                    s.push(i);
                    s.sort_unstable();
                    next.insert(s);
                }
            }
            layer = next;
        }
        Ok(layer.len())
    }

    /// Largest n_m^{1/m} over all edges and m ≤ m_max.
    pub fn growth_constant_estimate(&self, m_max: usize) -> Result<f64> {
        let mut best: f64 = 0.0;
        for &e in &self.edges {
            for m in 1..=m_max {
                let c = self.connected_subset_count(e, m)? as f64;
                best = best.max(c.powf(1.0 / m as f64));
            }
        }
        Ok(best)
    }

    /// Growth constant used in the high-temperature guard.
    pub fn growth_constant(&self) -> f64 {
        match self.kind {
            // n_m = m on an infinite chain, maximal at m = 3
            GraphKind::Chain { .. } => 3f64.powf(1.0 / 3.0),
            GraphKind::Grid2d { .. } => 2.0 * 2.0 * std::f64::consts::E,
            _ => std::f64::consts::E * self.max_degree().max(1) as f64,
        }
    }

    /// B_{x,l}: the descendants of `x` (including `x`) at most `l` levels
    /// below it. Only meaningful for trees; on other graphs it is the ball
    /// restricted to coordinates not smaller than that of `x`.
    pub fn subtree(&self, x: usize, l: usize) -> Region {
        match self.kind {
            GraphKind::BaryTree { b, .. } => {
                let mut out = vec![x];
                let mut frontier = vec![x];
                for _ in 0..l {
                    let mut next = Vec::new();
                    for &v in &frontier {
                        for c in b * v + 1..=b * v + b {
                            if c < self.n {
                                next.push(c);
                            }
                        }
                    }
                    out.extend_from_slice(&next);
                    frontier = next;
                }
                Region::new(out)
            }
            _ => Region(
                (0..self.n)
                    .filter(|&y| self.dist[x][y] <= l && self.coords[y][0] >= self.coords[x][0])
                    .collect(),
            ),
        }
    }
}

fn bfs(adj: &[Vec<usize>], sources: &[usize]) -> Vec<usize> {
    let mut d = vec![usize::MAX; adj.len()];
    let mut q = VecDeque::new();
    for &s in sources {
        d[s] = 0;
        q.push_back(s);
    }
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if d[w] == usize::MAX {
                d[w] = d[v] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coloring {
    pub labels: Vec<u8>,
}

impl Coloring {
    pub fn check(&self, g: &SpinGraph) -> Result<()> {
        if self.labels.len() != g.n() {
            return Err(Error::Argument("coloring size does not match graph".into()));
        }
        for &(a, b) in g.edges() {
            if self.labels[a] == self.labels[b] || self.labels[a] > 1 {
                return Err(Error::Argument(format!("coloring invalid on edge ({a},{b})")));
            }
        }
        Ok(())
    }

    /// Γ₀: the label-0 vertices.
    pub fn zeros(&self) -> Region {
        Region(
            (0..self.labels.len())
                .filter(|&v| self.labels[v] == 0)
                .collect(),
        )
    }

    pub fn avoids_zeros(&self, r: &Region) -> bool {
        r.sites().iter().all(|&v| self.labels[v] != 0)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoarseGrain {
    pub centers: Vec<usize>,
    pub sets: Vec<Region>,
    /// Largest number of closures R_k∂ containing a single vertex.
    pub multiplicity: usize,
}

/// One region per label-0 vertex whose boundary contains no label-0 vertex.
pub fn coarse_grain_sets(g: &SpinGraph, col: &Coloring, l0: usize) -> Result<CoarseGrain> {
    col.check(g)?;
    let mut centers = Vec::new();
    let mut sets = Vec::new();
    for x in 0..g.n() {
        if col.labels[x] != 0 {
            continue;
        }
        let r = match g.kind {
            GraphKind::Chain { .. } | GraphKind::Custom { .. } => {
                if l0 < 2 || l0 % 2 != 0 {
                    return Err(Error::Argument("chain coarse-graining needs even l0 >= 2".into()));
                }
                Region(
                    (0..g.n())
                        .filter(|&y| g.vertex_distance(x, y) <= l0)
                        .collect(),
                )
            }
            GraphKind::BaryTree { .. } => {
                if l0 < 2 || l0 % 2 != 0 {
                    return Err(Error::Argument("tree coarse-graining needs even l0 >= 2".into()));
                }
                g.subtree(x, l0)
            }
            GraphKind::Grid2d { .. } => {
                if l0 < 1 {
                    return Err(Error::Argument("grid coarse-graining needs l0 >= 1".into()));
                }
                let cx = g.coords(x);
                Region(
                    (0..g.n())
                        .filter(|&y| {
                            let cy = g.coords(y);
                            let sup = cx
                                .iter()
                                .zip(cy)
                                .map(|(a, b)| a.abs_diff(*b))
                                .max()
                                .unwrap_or(0);
                            sup < l0 || (sup == l0 && col.labels[y] == 0)
                        })
                        .collect(),
                )
            }
        };
        let b = g.bd(&r);
        if !col.avoids_zeros(&b) {
            return Err(Error::Geometry(format!(
                "coarse set around {x} has a label-0 boundary vertex"
            )));
        }
        centers.push(x);
        sets.push(r);
    }
    let mut count = vec![0usize; g.n()];
    for r in &sets {
        for &v in g.closure(r).sites() {
            count[v] += 1;
        }
    }
    Ok(CoarseGrain {
        centers,
        sets,
        multiplicity: count.into_iter().max().unwrap_or(0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverCase {
    Case1,
    Case2,
}

#[derive(Clone, Debug, Serialize)]
pub struct CoveringSchedule {
    pub pairs: Vec<(Region, Region)>,
    pub overlap: usize,
    pub case: CoverCase,
}

/// C(a) = {c ≤ a} plus the label-0 vertices at c = a+1.
fn lower_cut(g: &SpinGraph, col: &Coloring, t: &Region, base: usize, a: usize) -> Region {
    Region(
        t.sites()
            .iter()
            .copied()
            .filter(|&v| {
                let c = g.slice_coord(v) - base;
                c <= a || (c == a + 1 && col.labels[v] == 0)
            })
            .collect(),
    )
}

/// D(b) = {c ≥ b} plus the label-0 vertices at c = b-1.
fn upper_cut(g: &SpinGraph, col: &Coloring, t: &Region, base: usize, b: usize) -> Region {
    Region(
        t.sites()
            .iter()
            .copied()
            .filter(|&v| {
                let c = g.slice_coord(v) - base;
                c >= b || (c + 1 == b && col.labels[v] == 0)
            })
            .collect(),
    )
}

/// Checks the schedule invariants for one pair; returns the overlap distance.
pub fn check_pair(g: &SpinGraph, target: &Region, c: &Region, d: &Region) -> Result<usize> {
    if c.union(d) != *target {
        return Err(Error::Geometry("C ∪ D differs from the target".into()));
    }
    let cd = c.minus(d);
    let dc = d.minus(c);
    if cd.is_empty() || dc.is_empty() || c.is_disjoint(d) {
        return Err(Error::Geometry("pair is not a proper overlap".into()));
    }
    g.distance(&cd, &dc)
}

/// Overlapping pairs (C_i, D_i) covering `target` with pairwise disjoint
/// overlaps, sliced along the graph's slice coordinate.
pub fn covering_schedule(
    g: &SpinGraph,
    target: &Region,
    case: CoverCase,
    n_div: usize,
) -> Result<CoveringSchedule> {
    if target.is_empty() {
        return Err(Error::Argument("empty target".into()));
    }
    let col = g.two_coloring()?;
    let base = target.sites().iter().map(|&v| g.slice_coord(v)).min().unwrap();
    let big_l = target
        .sites()
        .iter()
        .map(|&v| g.slice_coord(v) - base)
        .max()
        .unwrap();
    let raw = match case {
        CoverCase::Case1 => (big_l as f64).sqrt().floor() as usize,
        CoverCase::Case2 => {
            if n_div < 1 {
                return Err(Error::Argument("divisor N must be >= 1".into()));
            }
            big_l / n_div
        }
    };
    let l = raw - raw % 2;
    let min_l = match case {
        CoverCase::Case1 => 4,
        CoverCase::Case2 => (2 * n_div).max(4),
    };
    if l < 2 {
        return Err(Error::ScheduleInfeasible { min_l, got: big_l });
    }
    let mut pairs: Vec<(Region, Region)> = Vec::new();
    let mut used = Region::empty();
    for a in 0..=big_l {
        for b in 0..=a + 1 {
            let c = lower_cut(g, &col, target, base, a);
            let d = upper_cut(g, &col, target, base, b);
            let Ok(dist) = check_pair(g, target, &c, &d) else {
                continue;
            };
            if dist != l {
                continue;
            }
            let bc = g.bd(&c).intersect(target);
            let bd = g.bd(&d).intersect(target);
            if !col.avoids_zeros(&bc) || !col.avoids_zeros(&bd) {
                continue;
            }
            let ov = c.intersect(&d);
            if !ov.is_disjoint(&used) {
                continue;
            }
            used = used.union(&ov);
            pairs.push((c, d));
        }
    }
    if pairs.is_empty() {
        return Err(Error::ScheduleInfeasible { min_l, got: big_l });
    }
    Ok(CoveringSchedule {
        pairs,
        overlap: l,
        case,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(b: usize, h: usize) -> SpinGraph {
        SpinGraph::build(GraphKind::BaryTree { b, height: h }, 2).unwrap()
    }

    fn grid(w: usize, h: usize) -> SpinGraph {
        SpinGraph::build(GraphKind::Grid2d { w, h }, 2).unwrap()
    }

    #[test]
    fn build_examples() {
        let c = SpinGraph::chain(2).unwrap();
        assert_eq!((c.n(), c.edges().len()), (2, 1));
        let t = tree(2, 2);
        assert_eq!((t.n(), t.edges().len()), (7, 6));
        let g = grid(2, 2);
        assert_eq!((g.n(), g.edges().len()), (4, 4));
        assert!(matches!(
            SpinGraph::build(GraphKind::BaryTree { b: 1, height: 2 }, 2),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            SpinGraph::build(GraphKind::Custom { n: 3, edges: vec![(0, 1)] }, 2),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn distance_examples() {
        let c = SpinGraph::chain(5).unwrap();
        let r = |v: Vec<usize>| Region::new(v);
        assert_eq!(c.distance(&r(vec![0]), &r(vec![0])).unwrap(), 0);
        assert_eq!(c.distance(&r(vec![0]), &r(vec![4])).unwrap(), 4);
        let t = tree(2, 2);
        // leaves 3 and 6 sit in different branches
        assert_eq!(t.distance(&r(vec![3]), &r(vec![6])).unwrap(), 4);
        assert!(c.distance(&Region::empty(), &r(vec![1])).is_err());
    }

    #[test]
    fn boundary_examples() {
        let c = SpinGraph::chain(5).unwrap();
        assert_eq!(c.bd(&Region::new(vec![2])).sites(), &[1, 3]);
        assert!(c.bd(&c.all()).is_empty());
        assert!(c.bd(&Region::empty()).is_empty());
        let g = grid(3, 3);
        assert_eq!(g.bd(&Region::new(vec![4])).sites(), &[1, 3, 5, 7]);
        assert!(c.boundary(&Region::new(vec![2]), 1).is_err());
        assert_eq!(c.boundary(&Region::new(vec![2]), 3).unwrap().sites(), &[0, 1, 3, 4]);
    }

    #[test]
    fn distance_metric_exhaustive() {
        for g in [SpinGraph::chain(12).unwrap(), tree(2, 2), grid(3, 4)] {
            let n = g.n();
            for a in 0..n {
                for b in 0..n {
                    assert_eq!(g.vertex_distance(a, b), g.vertex_distance(b, a));
                    for c in 0..n {
                        assert!(
                            g.vertex_distance(a, c)
                                <= g.vertex_distance(a, b) + g.vertex_distance(b, c)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn coloring_examples() {
        let c = SpinGraph::chain(4).unwrap();
        assert_eq!(c.two_coloring().unwrap().labels, vec![0, 1, 0, 1]);
        let t = tree(2, 2);
        assert_eq!(t.two_coloring().unwrap().labels, vec![0, 1, 1, 0, 0, 0, 0]);
        let tri = SpinGraph::build(
            GraphKind::Custom { n: 3, edges: vec![(0, 1), (1, 2), (0, 2)] },
            2,
        )
        .unwrap();
        assert!(matches!(tri.two_coloring(), Err(Error::NotBipartite(_))));
    }

    #[test]
    fn subset_counts() {
        let c = SpinGraph::chain(9).unwrap();
        assert_eq!(c.connected_subset_count((0, 1), 1).unwrap(), 1);
        assert_eq!(c.connected_subset_count((3, 4), 2).unwrap(), 2);
        assert_eq!(c.connected_subset_count((3, 4), 3).unwrap(), 3);
        let g = grid(4, 4);
        let nu = 2.0 * 2.0 * std::f64::consts::E;
        let n3 = g.connected_subset_count((5, 6), 3).unwrap() as f64;
        assert!(n3 <= nu.powi(3));
        assert!(c.connected_subset_count((3, 4), 9).is_err());
        let est = c.growth_constant_estimate(6).unwrap();
        assert!(est <= c.growth_constant() + 1e-12);
    }

    #[test]
    fn chain_coarse_grain() {
        let c = SpinGraph::chain(9).unwrap();
        let col = c.two_coloring().unwrap();
        let cg = coarse_grain_sets(&c, &col, 2).unwrap();
        assert_eq!(cg.centers, vec![0, 2, 4, 6, 8]);
        for (x, r) in cg.centers.iter().zip(&cg.sets) {
            let lo = x.saturating_sub(2);
            let hi = (x + 2).min(8);
            assert_eq!(r, &Region::range(lo, hi));
        }
        // every vertex is covered
        let mut cov = Region::empty();
        for r in &cg.sets {
            cov = cov.union(&c.closure(r));
        }
        assert_eq!(cov, c.all());
        assert!(cg.multiplicity >= 1);
        assert!(coarse_grain_sets(&c, &col, 3).is_err());
    }

    #[test]
    fn tree_and_grid_coarse_grain() {
        let t = tree(2, 4);
        let col = t.two_coloring().unwrap();
        let cg = coarse_grain_sets(&t, &col, 2).unwrap();
        for (x, r) in cg.centers.iter().zip(&cg.sets) {
            // oracle: BFS descendants within two levels
            let want: Vec<usize> = (0..t.n())
                .filter(|&y| {
                    let mut z = y;
                    let mut k = 0;
                    while z != *x && z != 0 && k <= 2 {
                        z = (z - 1) / 2;
                        k += 1;
                    }
                    z == *x && k <= 2
                })
                .collect();
            assert_eq!(r.sites(), &want[..]);
            assert!(col.avoids_zeros(&t.bd(r)));
        }
        let g = grid(5, 5);
        let col = g.two_coloring().unwrap();
        let cg = coarse_grain_sets(&g, &col, 1).unwrap();
        for (x, r) in cg.centers.iter().zip(&cg.sets) {
            // l0 = 1: the center plus label-0 sites on the unit sup-shell
            assert!(r.contains(*x));
            for &y in r.sites() {
                assert_eq!(col.labels[y], 0);
            }
            assert!(col.avoids_zeros(&g.bd(r)));
        }
        let mut wrong = col.clone();
        wrong.labels[0] = 1;
        assert!(coarse_grain_sets(&g, &wrong, 1).is_err());
    }

    #[test]
    fn chain_schedules() {
        let c = SpinGraph::chain(17).unwrap();
        let t = c.all();
        let s = covering_schedule(&c, &t, CoverCase::Case1, 2).unwrap();
        assert_eq!(s.overlap, 4);
        assert!(!s.pairs.is_empty());
        let mut used = Region::empty();
        for (cc, dd) in &s.pairs {
            assert_eq!(check_pair(&c, &t, cc, dd).unwrap(), 4);
            let ov = cc.intersect(dd);
            assert!(ov.is_disjoint(&used));
            used = used.union(&ov);
            assert_eq!(cc.sites()[0] % 2, 0);
            assert_eq!(dd.sites()[0] % 2, 0);
            assert_eq!(cc.sites().last().unwrap() % 2, 0);
        }
        let c9 = SpinGraph::chain(9).unwrap();
        let s = covering_schedule(&c9, &c9.all(), CoverCase::Case2, 2).unwrap();
        assert_eq!(s.overlap, 4);
        let c3 = SpinGraph::chain(3).unwrap();
        assert!(matches!(
            covering_schedule(&c3, &c3.all(), CoverCase::Case1, 2),
            Err(Error::ScheduleInfeasible { .. })
        ));
    }

    #[test]
    fn tree_schedule() {
        let t = tree(2, 6);
        let target = t.subtree(0, 6);
        let s = covering_schedule(&t, &target, CoverCase::Case2, 2).unwrap();
        let col = t.two_coloring().unwrap();
        for (c, d) in &s.pairs {
            assert_eq!(check_pair(&t, &target, c, d).unwrap(), s.overlap);
            assert!(col.avoids_zeros(&t.bd(c).intersect(&target)));
            assert!(col.avoids_zeros(&t.bd(d).intersect(&target)));
        }
    }

    #[test]
    fn grid_schedule() {
        let g = grid(4, 9);
        let s = covering_schedule(&g, &g.all(), CoverCase::Case2, 2).unwrap();
        for (c, d) in &s.pairs {
            assert_eq!(check_pair(&g, &g.all(), c, d).unwrap(), s.overlap);
        }
    }
}
