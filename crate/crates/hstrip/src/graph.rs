//! Base graphs, finite strips, the backbone tree and reflections.
//!
//! A strip is `{lo..=hi} × V₀`. Vertex `(n, v)` has id `(n - lo)·|V₀| + v`.
//! Edges are grouped by level: the `|E₀|` vertical copies at level `n` come
//! first, followed by the `|V₀|` horizontal edges from level `n` to `n + 1`.
//! Half-integer edge levels are stored doubled (`level2 = 2n` for vertical,
//! `2n + 1` for horizontal) so that they stay exact.

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Finite connected graph `G₀` with a pin vertex and a spanning tree `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BaseGraphSpec", into = "BaseGraphSpec")]
pub struct BaseGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    pin: usize,
    tree: Vec<usize>,
    tree_order: Vec<usize>,
    tree_parent: Vec<Option<(usize, usize)>>,
}

/// Plain serialized form of a [`BaseGraph`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseGraphSpec {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub base_tree: Vec<[usize; 2]>,
    pub pin: usize,
}

impl TryFrom<BaseGraphSpec> for BaseGraph {
    type Error = Error;
    fn try_from(s: BaseGraphSpec) -> Result<Self> {
        BaseGraph::new(
            s.vertices,
            s.edges.iter().map(|e| (e[0], e[1])).collect(),
            s.pin,
            s.base_tree.iter().map(|e| (e[0], e[1])).collect(),
        )
    }
}

impl From<BaseGraph> for BaseGraphSpec {
    fn from(g: BaseGraph) -> Self {
        BaseGraphSpec {
            vertices: g.n,
            edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
            base_tree: g.tree.iter().map(|&k| [g.edges[k].0, g.edges[k].1]).collect(),
            pin: g.pin,
        }
    }
}

impl BaseGraph {
    /// Validate and build a base graph. Edges are normalized to `a < b`;
    /// `base_tree` lists edges of `edges` forming a spanning tree.
    pub fn new(
        n: usize,
        edges: Vec<(usize, usize)>,
        pin: usize,
        base_tree: Vec<(usize, usize)>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("no vertices".into()));
        }
        if pin >= n {
            return Err(Error::InvalidGraph(format!("pin {pin} not a vertex")));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a},{b}) has unknown endpoint")));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self loop at {a}")));
            }
            let e = (a.min(b), a.max(b));
            if norm.contains(&e) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a},{b})")));
            }
            norm.push(e);
        }
        let mut uf = UnionFind::<usize>::new(n);
        for &(a, b) in &norm {
            uf.union(a, b);
        }
        if (0..n).any(|v| !uf.equiv(0, v)) {
            return Err(Error::InvalidGraph("base graph is disconnected".into()));
        }
        let mut tree = Vec::with_capacity(base_tree.len());
        for &(a, b) in &base_tree {
            let e = (a.min(b), a.max(b));
            match norm.iter().position(|&x| x == e) {
                Some(k) if !tree.contains(&k) => tree.push(k),
                Some(_) => return Err(Error::InvalidGraph(format!("base tree repeats ({a},{b})"))),
                None => {
                    return Err(Error::InvalidGraph(format!(
                        "base tree edge ({a},{b}) is not a graph edge"
                    )))
                }
            }
        }
        tree.sort_unstable();
        if tree.len() + 1 != n {
            return Err(Error::InvalidGraph(format!(
                "base tree has {} edges, expected {}",
                tree.len(),
                n - 1
            )));
        }
        let mut uf = UnionFind::<usize>::new(n);
        for &k in &tree {
            if !uf.union(norm[k].0, norm[k].1) {
                return Err(Error::InvalidGraph("base tree contains a cycle".into()));
            }
        }
        let mut tree_parent = vec![None; n];
        let mut tree_order = vec![pin];
        let mut seen = vec![false; n];
        seen[pin] = true;
        let mut i = 0;
        while i < tree_order.len() {
            let u = tree_order[i];
            i += 1;
            for (pos, &k) in tree.iter().enumerate() {
                let (a, b) = norm[k];
                let w = if a == u { b } else if b == u { a } else { continue };
                if !seen[w] {
                    seen[w] = true;
                    tree_parent[w] = Some((pos, u));
                    tree_order.push(w);
                }
            }
        }
        Ok(BaseGraph { n, edges: norm, pin, tree, tree_order, tree_parent })
    }

    /// One vertex, no edges: the strip is a chain.
    pub fn single_vertex() -> Self {
        BaseGraph::new(1, vec![], 0, vec![]).expect("valid")
    }

    /// Two vertices joined by one edge, pinned at 0: the strip is a ladder.
    pub fn k2() -> Self {
        BaseGraph::new(2, vec![(0, 1)], 0, vec![(0, 1)]).expect("valid")
    }

    /// Cycle on `n ≥ 3` vertices, pinned at 0, with the path `0-1-…-(n-1)` as `S`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph("cycle needs at least 3 vertices".into()));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        let tree: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        BaseGraph::new(n, edges, 0, tree)
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn pin(&self) -> usize {
        self.pin
    }
    /// Edge `k` of `E₀` as `(a, b)` with `a < b`.
    pub fn edge(&self, k: usize) -> (usize, usize) {
        self.edges[k]
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    /// Indices into [`edges`](Self::edges) of the spanning tree `S`, sorted.
    pub fn tree_edges(&self) -> &[usize] {
        &self.tree
    }
    /// `|S|`.
    pub fn tree_len(&self) -> usize {
        self.tree.len()
    }
    /// Base vertices in breadth-first order from the pin within `S`.
    pub fn tree_order(&self) -> &[usize] {
        &self.tree_order
    }
    /// Parent of `v` in `S` rooted at the pin: `(position in tree_edges, parent)`.
    pub fn tree_parent(&self, v: usize) -> Option<(usize, usize)> {
        self.tree_parent[v]
    }
    /// Position of edge `k` within `S`, if it belongs to `S`.
    pub fn tree_position(&self, k: usize) -> Option<usize> {
        self.tree.binary_search(&k).ok()
    }
}

/// Translation-invariant weights `β` and the pinning strength `ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// One entry per edge of `E₀`.
    pub vertical: Vec<f64>,
    /// One entry per vertex of `V₀` (the horizontal edges `v_{n+1/2}`).
    pub horizontal: Vec<f64>,
    pub epsilon: f64,
}

impl Weights {
    pub fn uniform(base: &BaseGraph, beta: f64, epsilon: f64) -> Self {
        Weights {
            vertical: vec![beta; base.n_edges()],
            horizontal: vec![beta; base.n_vertices()],
            epsilon,
        }
    }

    pub fn validate(&self, base: &BaseGraph) -> Result<()> {
        let bad = |field: &str, reason: String| Error::InvalidWeight { field: field.into(), reason };
        if self.vertical.len() != base.n_edges() {
            return Err(bad(
                "beta_vertical",
                format!("expected {} entries, got {}", base.n_edges(), self.vertical.len()),
            ));
        }
        if self.horizontal.len() != base.n_vertices() {
            return Err(bad(
                "beta_horizontal",
                format!("expected {} entries, got {}", base.n_vertices(), self.horizontal.len()),
            ));
        }
        for (i, &b) in self.vertical.iter().enumerate() {
            if !(b > 0.0 && b.is_finite()) {
                return Err(bad(&format!("beta_vertical[{i}]"), format!("must be positive, got {b}")));
            }
        }
        for (i, &b) in self.horizontal.iter().enumerate() {
            if !(b > 0.0 && b.is_finite()) {
                return Err(bad(&format!("beta_horizontal[{i}]"), format!("must be positive, got {b}")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(bad("epsilon", format!("must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// Smallest β over all edge classes.
    pub fn beta_min(&self) -> f64 {
        self.vertical.iter().chain(&self.horizontal).cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Base graph plus weights as stored in a JSON config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub base_tree: Vec<[usize; 2]>,
    pub pin: usize,
    pub beta_vertical: Vec<f64>,
    pub beta_horizontal: Vec<f64>,
    pub epsilon: f64,
}

impl GraphFile {
    pub fn into_parts(self) -> Result<(BaseGraph, Weights)> {
        let base = BaseGraph::try_from(BaseGraphSpec {
            vertices: self.vertices,
            edges: self.edges,
            base_tree: self.base_tree,
            pin: self.pin,
        })?;
        let w = Weights {
            vertical: self.beta_vertical,
            horizontal: self.beta_horizontal,
            epsilon: self.epsilon,
        };
        w.validate(&base)?;
        Ok((base, w))
    }

    pub fn from_parts(base: &BaseGraph, w: &Weights) -> Self {
        let spec = BaseGraphSpec::from(base.clone());
        GraphFile {
            vertices: spec.vertices,
            edges: spec.edges,
            base_tree: spec.base_tree,
            pin: spec.pin,
            beta_vertical: w.vertical.clone(),
            beta_horizontal: w.horizontal.clone(),
            epsilon: w.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeKind {
    /// Copy of base edge `E₀[k]`.
    Vertical(usize),
    /// Horizontal edge through base vertex `v`.
    Horizontal(usize),
}

/// A strip edge with its bookkeeping orientation `tail → head`
/// (lower level to higher for horizontal, lower base id to higher for vertical).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub kind: EdgeKind,
    /// Twice the edge level.
    pub level2: i32,
    pub tail: usize,
    pub head: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrientedEdge {
    pub edge: usize,
    pub tail: usize,
    pub head: usize,
}

impl OrientedEdge {
    pub fn reversed(self) -> Self {
        OrientedEdge { edge: self.edge, tail: self.head, head: self.tail }
    }
}

/// Edge-id set forming a spanning tree of a strip. Ids are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpanningTree {
    edges: Vec<usize>,
}

impl SpanningTree {
    /// Validates with union-find: acyclic and `|V| - 1` edges.
    pub fn new(strip: &StripGraph, mut edges: Vec<usize>) -> Result<Self> {
        edges.sort_unstable();
        edges.dedup();
        check_spanning_tree(strip, &edges)?;
        Ok(SpanningTree { edges })
    }

    /// Caller guarantees `edges` is a sorted spanning tree.
    pub(crate) fn from_sorted_unchecked(edges: Vec<usize>) -> Self {
        SpanningTree { edges }
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.edges.binary_search(&e).is_ok()
    }
}

/// Union-find spanning-tree validator.
pub fn check_spanning_tree(strip: &StripGraph, edges: &[usize]) -> Result<()> {
    let nv = strip.n_vertices();
    if edges.len() + 1 != nv {
        return Err(Error::NotSpanningTree(format!(
            "{} edges for {} vertices",
            edges.len(),
            nv
        )));
    }
    let mut uf = UnionFind::<usize>::new(nv);
    for &e in edges {
        if e >= strip.n_edges() {
            return Err(Error::NotSpanningTree(format!("unknown edge {e}")));
        }
        let ed = strip.edge(e);
        if !uf.union(ed.tail, ed.head) {
            return Err(Error::NotSpanningTree(format!("edge {e} closes a cycle")));
        }
    }
    Ok(())
}

/// A spanning tree with parent pointers from a chosen root.
#[derive(Debug, Clone)]
pub struct RootedTree {
    root: usize,
    parent: Vec<Option<(usize, usize)>>,
    depth: Vec<usize>,
    order: Vec<usize>,
    tin: Vec<usize>,
    tout: Vec<usize>,
    child_of_edge: Vec<Option<usize>>,
}

impl RootedTree {
    pub fn new(strip: &StripGraph, tree: &SpanningTree, root: usize) -> Self {
        let nv = strip.n_vertices();
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
        for &e in tree.edges() {
            let ed = strip.edge(e);
            adj[ed.tail].push((ed.head, e));
            adj[ed.head].push((ed.tail, e));
        }
        let mut parent = vec![None; nv];
        let mut depth = vec![0; nv];
        let mut order = Vec::with_capacity(nv);
        let mut child_of_edge = vec![None; strip.n_edges()];
        let mut seen = vec![false; nv];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(w, e) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some((e, u));
                    depth[w] = depth[u] + 1;
                    child_of_edge[e] = Some(w);
                    queue.push_back(w);
                }
            }
        }
        // Euler tour entry/exit times for ancestor queries.
        let mut tin = vec![0; nv];
        let mut tout = vec![0; nv];
        let mut clock = 0;
        let mut stack = vec![(root, false)];
        while let Some((u, done)) = stack.pop() {
            if done {
                tout[u] = clock;
                clock += 1;
                continue;
            }
            tin[u] = clock;
            clock += 1;
            stack.push((u, true));
            for &(w, _) in &adj[u] {
                if parent[w].map(|p| p.1) == Some(u) {
                    stack.push((w, false));
                }
            }
        }
        RootedTree { root, parent, depth, order, tin, tout, child_of_edge }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// `(edge, parent vertex)` or `None` at the root.
    pub fn parent(&self, v: usize) -> Option<(usize, usize)> {
        self.parent[v]
    }

    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    /// Vertices in breadth-first order from the root.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Whether `a` lies on the path from the root to `b` (inclusive).
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        self.tin[a] <= self.tin[b] && self.tout[b] <= self.tout[a]
    }

    /// The endpoint of tree edge `e` farther from the root.
    pub fn child(&self, e: usize) -> Option<usize> {
        self.child_of_edge[e]
    }

    /// Tree edge `e` oriented away from the root.
    pub fn oriented(&self, e: usize) -> Option<OrientedEdge> {
        let c = self.child_of_edge[e]?;
        let (_, p) = self.parent[c].expect("child has parent");
        Some(OrientedEdge { edge: e, tail: p, head: c })
    }

    /// Whether tree edge `e` lies on the path from the root to `v`.
    pub fn on_root_path(&self, e: usize, v: usize) -> bool {
        match self.child_of_edge[e] {
            Some(c) => self.is_ancestor(c, v),
            None => false,
        }
    }

    /// Unique path from `i` to `j`, each edge oriented in traversal direction.
    pub fn path(&self, i: usize, j: usize) -> Vec<OrientedEdge> {
        let mut up = Vec::new();
        let mut down = Vec::new();
        let (mut a, mut b) = (i, j);
        while self.depth[a] > self.depth[b] {
            let (e, p) = self.parent[a].expect("non-root");
            up.push(OrientedEdge { edge: e, tail: a, head: p });
            a = p;
        }
        while self.depth[b] > self.depth[a] {
            let (e, p) = self.parent[b].expect("non-root");
            down.push(OrientedEdge { edge: e, tail: p, head: b });
            b = p;
        }
        while a != b {
            let (ea, pa) = self.parent[a].expect("non-root");
            up.push(OrientedEdge { edge: ea, tail: a, head: pa });
            a = pa;
            let (eb, pb) = self.parent[b].expect("non-root");
            down.push(OrientedEdge { edge: eb, tail: pb, head: b });
            b = pb;
        }
        down.reverse();
        up.extend(down);
        up
    }
}

/// The finite strip `𝒢_L` with weights and its backbone tree.
#[derive(Debug, Clone)]
pub struct StripGraph {
    base: BaseGraph,
    lo: i32,
    hi: i32,
    weights: Weights,
    adjacency: Vec<Vec<(usize, usize)>>,
    backbone: SpanningTree,
    backbone_rooted: RootedTree,
    bb_index: Vec<Option<usize>>,
}

/// Build `{lo..=hi} × G₀` with the given weights.
pub fn build_strip(base: &BaseGraph, lo: i32, hi: i32, weights: &Weights) -> Result<StripGraph> {
    StripGraph::new(base.clone(), lo, hi, weights.clone())
}

impl StripGraph {
    pub fn new(base: BaseGraph, lo: i32, hi: i32, weights: Weights) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(Error::InvalidParameter {
                field: "levels".into(),
                reason: format!("need lo <= 0 <= hi, got [{lo}, {hi}]"),
            });
        }
        weights.validate(&base)?;
        let mut strip = StripGraph {
            base,
            lo,
            hi,
            weights,
            adjacency: Vec::new(),
            backbone: SpanningTree { edges: Vec::new() },
            backbone_rooted: RootedTree {
                root: 0,
                parent: vec![],
                depth: vec![],
                order: vec![],
                tin: vec![],
                tout: vec![],
                child_of_edge: vec![],
            },
            bb_index: Vec::new(),
        };
        let mut adjacency = vec![Vec::new(); strip.n_vertices()];
        for e in 0..strip.n_edges() {
            let ed = strip.edge(e);
            adjacency[ed.tail].push((ed.head, e));
            adjacency[ed.head].push((ed.tail, e));
        }
        strip.adjacency = adjacency;
        let mut bb = Vec::new();
        for n in lo..=hi {
            for &k in strip.base.tree_edges() {
                bb.push(strip.vertical_edge(n, k));
            }
            if n < hi {
                bb.push(strip.horizontal_edge(n, strip.base.pin()));
            }
        }
        bb.sort_unstable();
        let backbone = SpanningTree::new(&strip, bb)?;
        strip.backbone_rooted = RootedTree::new(&strip, &backbone, strip.root());
        let mut bb_index = vec![None; strip.n_edges()];
        for (i, &e) in backbone.edges().iter().enumerate() {
            bb_index[e] = Some(i);
        }
        strip.backbone = backbone;
        strip.bb_index = bb_index;
        Ok(strip)
    }

    pub fn base(&self) -> &BaseGraph {
        &self.base
    }
    pub fn weights(&self) -> &Weights {
        &self.weights
    }
    pub fn lo(&self) -> i32 {
        self.lo
    }
    pub fn hi(&self) -> i32 {
        self.hi
    }
    pub fn n_levels(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }
    pub fn n_vertices(&self) -> usize {
        self.n_levels() * self.base.n_vertices()
    }
    pub fn n_edges(&self) -> usize {
        self.n_levels() * self.base.n_edges() + (self.n_levels() - 1) * self.base.n_vertices()
    }

    fn block(&self) -> usize {
        self.base.n_edges() + self.base.n_vertices()
    }

    pub fn contains_level(&self, n: i32) -> bool {
        self.lo <= n && n <= self.hi
    }

    /// Vertex id of `(n, v)`.
    pub fn vertex(&self, n: i32, v: usize) -> Result<usize> {
        if !self.contains_level(n) {
            return Err(Error::LevelOutOfRange { level: n as i64, lo: self.lo, hi: self.hi });
        }
        if v >= self.base.n_vertices() {
            return Err(Error::VertexOutOfRange(v));
        }
        Ok(self.vid(n, v))
    }

    #[inline]
    pub(crate) fn vid(&self, n: i32, v: usize) -> usize {
        (n - self.lo) as usize * self.base.n_vertices() + v
    }

    /// `(level, base vertex)` of a vertex id.
    #[inline]
    pub fn coords(&self, id: usize) -> (i32, usize) {
        let nv = self.base.n_vertices();
        ((id / nv) as i32 + self.lo, id % nv)
    }

    /// Level of a vertex.
    pub fn level(&self, id: usize) -> i32 {
        self.coords(id).0
    }

    /// Copy of base edge `k` at level `n`.
    #[inline]
    pub fn vertical_edge(&self, n: i32, k: usize) -> usize {
        (n - self.lo) as usize * self.block() + k
    }

    /// Horizontal edge `v_{n+1/2}` between `(n, v)` and `(n + 1, v)`.
    #[inline]
    pub fn horizontal_edge(&self, n: i32, v: usize) -> usize {
        (n - self.lo) as usize * self.block() + self.base.n_edges() + v
    }

    /// Edge id from its doubled level and kind, if it lies in the strip.
    pub fn edge_at(&self, level2: i32, kind: EdgeKind) -> Option<usize> {
        match kind {
            EdgeKind::Vertical(k) if level2 % 2 == 0 => {
                let n = level2 / 2;
                self.contains_level(n).then(|| self.vertical_edge(n, k))
            }
            EdgeKind::Horizontal(v) if level2.rem_euclid(2) == 1 => {
                let n = (level2 - 1).div_euclid(2);
                (self.lo <= n && n < self.hi).then(|| self.horizontal_edge(n, v))
            }
            _ => None,
        }
    }

    pub fn edge(&self, id: usize) -> Edge {
        let block = self.block();
        let n = (id / block) as i32 + self.lo;
        let k = id % block;
        if k < self.base.n_edges() {
            let (a, b) = self.base.edge(k);
            Edge {
                kind: EdgeKind::Vertical(k),
                level2: 2 * n,
                tail: self.vid(n, a),
                head: self.vid(n, b),
            }
        } else {
            let v = k - self.base.n_edges();
            Edge {
                kind: EdgeKind::Horizontal(v),
                level2: 2 * n + 1,
                tail: self.vid(n, v),
                head: self.vid(n + 1, v),
            }
        }
    }

    /// Bookkeeping orientation of an edge.
    pub fn oriented(&self, id: usize) -> OrientedEdge {
        let e = self.edge(id);
        OrientedEdge { edge: id, tail: e.tail, head: e.head }
    }

    pub fn beta(&self, id: usize) -> f64 {
        match self.edge(id).kind {
            EdgeKind::Vertical(k) => self.weights.vertical[k],
            EdgeKind::Horizontal(v) => self.weights.horizontal[v],
        }
    }

    /// `(neighbor, edge)` pairs.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    /// The pinning vertex `0̄ = (0, p)`.
    pub fn pin_vertex(&self) -> usize {
        self.vid(0, self.base.pin())
    }

    /// The root `r = (lo, p)`.
    pub fn root(&self) -> usize {
        self.vid(self.lo, self.base.pin())
    }

    /// The rightmost pin copy `(hi, p)`.
    pub fn right_end(&self) -> usize {
        self.vid(self.hi, self.base.pin())
    }

    pub fn backbone(&self) -> &SpanningTree {
        &self.backbone
    }

    /// `T^bb` rooted at `r`.
    pub fn backbone_rooted(&self) -> &RootedTree {
        &self.backbone_rooted
    }

    /// Position of a backbone edge in gradient coordinate vectors.
    pub fn bb_index(&self, e: usize) -> Option<usize> {
        self.bb_index[e]
    }
}

/// The backbone tree `T^bb`: copies of `S` on every level joined along the pin line.
pub fn backbone_tree(strip: &StripGraph) -> SpanningTree {
    strip.backbone().clone()
}

/// Unique path from `i` to `j` in `tree`, oriented in traversal direction.
pub fn tree_path(strip: &StripGraph, tree: &SpanningTree, i: usize, j: usize) -> Result<Vec<OrientedEdge>> {
    for v in [i, j] {
        if v >= strip.n_vertices() {
            return Err(Error::VertexOutOfRange(v));
        }
    }
    Ok(RootedTree::new(strip, tree, i).path(i, j))
}

/// Mirror an edge through level 0: `e_n ↦ e_{-n}`, `v_{n+1/2} ↦ v_{-n-1/2}`.
pub fn reflect_edge(strip: &StripGraph, id: usize) -> Result<usize> {
    let e = strip.edge(id);
    strip.edge_at(-e.level2, e.kind).ok_or(Error::LevelOutOfRange {
        level: (-e.level2 as i64).div_euclid(2),
        lo: strip.lo(),
        hi: strip.hi(),
    })
}

/// Edgewise mirror image of a tree.
pub fn reflect_tree(strip: &StripGraph, tree: &SpanningTree) -> Result<SpanningTree> {
    let mut edges = tree.edges().iter().map(|&e| reflect_edge(strip, e)).collect::<Result<Vec<_>>>()?;
    edges.sort_unstable();
    Ok(SpanningTree { edges })
}

/// Mirror a vertex: `(n, v) ↦ (-n, v)`.
pub fn reflect_vertex(strip: &StripGraph, id: usize) -> Result<usize> {
    let (n, v) = strip.coords(id);
    strip.vertex(-n, v)
}
