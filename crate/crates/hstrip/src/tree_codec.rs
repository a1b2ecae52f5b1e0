//! Spanning trees of strips and their level-by-level encoding.
//!
//! A spanning tree `T` is summarized at level `n` by a local tree variable
//! `τ = (A_left, b_left, F, b_right, A_right)`:
//!
//! * `F` is the part of `T` on the three edge levels `n - 1/2`, `n`, `n + 1/2`,
//!   shifted to level 0 and written with [`LocalEdge`];
//! * `A_left` groups the base vertices `v` with `v_{n-1/2} ∈ T` by whether they
//!   are joined using only edges at levels `≤ n - 1/2` (`A_right` likewise);
//! * `b_left` and `b_right` are the first and last level-`n` vertices on the
//!   backbone of `T` (its path from `-∞` to `+∞`).
//!
//! Outside `[lo, hi]` a finite tree is padded with backbone-tree copies, so the
//! strip is embedded in the two-sided infinite strip. The word
//! `(τ_lo, …, τ_hi)` determines the tree, and adjacent letters satisfy a
//! matching relation `τ ⊢ τ'` that is learned by enumeration in [`Alphabet`].

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::graph::{BaseGraph, EdgeKind, RootedTree, SpanningTree, StripGraph, Weights};

/// Largest strip handed to [`enumerate_spanning_trees`].
pub const ENUMERATION_MAX_VERTICES: usize = 14;
/// Largest window strip used while building an [`Alphabet`].
pub const ALPHABET_MAX_VERTICES: usize = 24;
/// Largest number of spanning trees any enumeration will materialize.
pub const ENUMERATION_MAX_TREES: usize = 500_000;
/// Largest window half-width tried while building an [`Alphabet`].
pub const ALPHABET_MAX_HALF_WIDTH: usize = 8;

/// An edge of `E_{-1/2} ∪ E_0 ∪ E_{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocalEdge {
    /// `v_{-1/2}`, between `(-1, v)` and `(0, v)`.
    Left(usize),
    /// Copy of base edge `k` at level 0.
    Vertical(usize),
    /// `v_{1/2}`, between `(0, v)` and `(1, v)`.
    Right(usize),
}

impl LocalEdge {
    pub fn reflect(self) -> Self {
        match self {
            LocalEdge::Left(v) => LocalEdge::Right(v),
            LocalEdge::Right(v) => LocalEdge::Left(v),
            e => e,
        }
    }
}

/// Local tree variable at one level. Partitions are stored with sorted
/// blocks in sorted order, so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LocalTreeVar {
    a_left: Vec<Vec<usize>>,
    b_left: usize,
    forest: Vec<LocalEdge>,
    b_right: usize,
    a_right: Vec<Vec<usize>>,
}

fn canonical_partition(mut blocks: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort();
    blocks
}

impl LocalTreeVar {
    pub fn a_left(&self) -> &[Vec<usize>] {
        &self.a_left
    }
    pub fn b_left(&self) -> usize {
        self.b_left
    }
    pub fn forest(&self) -> &[LocalEdge] {
        &self.forest
    }
    pub fn b_right(&self) -> usize {
        self.b_right
    }
    pub fn a_right(&self) -> &[Vec<usize>] {
        &self.a_right
    }
    pub fn contains(&self, e: LocalEdge) -> bool {
        self.forest.binary_search(&e).is_ok()
    }
}

/// `τ_bb`, the local tree variable of the backbone tree at any level.
pub fn backbone_var(base: &BaseGraph) -> LocalTreeVar {
    let p = base.pin();
    let mut forest: Vec<LocalEdge> = base.tree_edges().iter().map(|&k| LocalEdge::Vertical(k)).collect();
    forest.push(LocalEdge::Left(p));
    forest.push(LocalEdge::Right(p));
    forest.sort_unstable();
    LocalTreeVar { a_left: vec![vec![p]], b_left: p, forest, b_right: p, a_right: vec![vec![p]] }
}

/// Mirror image: swap left and right data and reflect `F`.
pub fn reflect_var(tau: &LocalTreeVar) -> LocalTreeVar {
    let mut forest: Vec<LocalEdge> = tau.forest.iter().map(|e| e.reflect()).collect();
    forest.sort_unstable();
    LocalTreeVar {
        a_left: tau.a_right.clone(),
        b_left: tau.b_right,
        forest,
        b_right: tau.b_left,
        a_right: tau.a_left.clone(),
    }
}

/// Tree membership, orientation and backbone membership of one local edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeStatus {
    pub in_tree: bool,
    /// Whether the endpoint closer to `-∞` is the bookkeeping tail
    /// (lower level, or lower base id for vertical edges). `None` off the tree.
    pub tail_is_lower: Option<bool>,
    /// `None` off the tree.
    pub on_backbone: Option<bool>,
}

impl EdgeStatus {
    const ABSENT: EdgeStatus = EdgeStatus { in_tree: false, tail_is_lower: None, on_backbone: None };

    /// In the tree but off its backbone.
    pub fn is_branch(&self) -> bool {
        self.on_backbone == Some(false)
    }

    /// `+1` when the tree orientation matches the bookkeeping one, else `-1`.
    pub fn sign(&self) -> f64 {
        if self.tail_is_lower == Some(false) {
            -1.0
        } else {
            1.0
        }
    }
}

/// Statuses of every local edge of a `τ`, recovered from `τ` alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauInfo {
    pub left: Vec<EdgeStatus>,
    pub vertical: Vec<EdgeStatus>,
    pub right: Vec<EdgeStatus>,
}

impl TauInfo {
    pub fn get(&self, e: LocalEdge) -> EdgeStatus {
        match e {
            LocalEdge::Left(v) => self.left[v],
            LocalEdge::Vertical(k) => self.vertical[k],
            LocalEdge::Right(v) => self.right[v],
        }
    }
}

/// Recover membership, orientation and backbone membership of every local
/// edge from `τ` via the auxiliary tree.
///
/// The auxiliary tree has the level-0 vertices plus one node per block of
/// `A_left` and `A_right`; its edges are `F ∩ E_0` and a line from `v` to its
/// block for every horizontal edge of `F`. Rooted at the block of `b_left`
/// (standing for `-∞`), parent sides point toward `-∞`, and the path to the
/// block of `b_right` (standing for `+∞`) is the backbone.
pub fn tau_info(base: &BaseGraph, tau: &LocalTreeVar) -> Result<TauInfo> {
    let nv = base.n_vertices();
    let nl = tau.a_left.len();
    let n_nodes = nv + nl + tau.a_right.len();
    let block_of = |blocks: &[Vec<usize>], v: usize| blocks.iter().position(|b| b.contains(&v));
    let mut adj: Vec<Vec<(usize, LocalEdge)>> = vec![Vec::new(); n_nodes];
    for &e in &tau.forest {
        let (a, b) = match e {
            LocalEdge::Vertical(k) => base.edge(k),
            LocalEdge::Left(v) => (v, nv + block_of(&tau.a_left, v).ok_or(Error::NotInAlphabet)?),
            LocalEdge::Right(v) => (v, nv + nl + block_of(&tau.a_right, v).ok_or(Error::NotInAlphabet)?),
        };
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    let root = nv + block_of(&tau.a_left, tau.b_left).ok_or(Error::NotInAlphabet)?;
    let target = nv + nl + block_of(&tau.a_right, tau.b_right).ok_or(Error::NotInAlphabet)?;
    let mut parent: Vec<Option<(usize, LocalEdge)>> = vec![None; n_nodes];
    let mut seen = vec![false; n_nodes];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    let mut visited = 0;
    while let Some(u) = queue.pop_front() {
        visited += 1;
        for &(w, e) in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                parent[w] = Some((u, e));
                queue.push_back(w);
            }
        }
    }
    if visited != n_nodes || tau.forest.len() + 1 != n_nodes {
        return Err(Error::NotSpanningTree("auxiliary tree of local variable".into()));
    }
    let mut backbone = HashSet::new();
    let mut x = target;
    while let Some((p, e)) = parent[x] {
        backbone.insert(e);
        x = p;
    }
    let mut info = TauInfo {
        left: vec![EdgeStatus::ABSENT; nv],
        vertical: vec![EdgeStatus::ABSENT; base.n_edges()],
        right: vec![EdgeStatus::ABSENT; nv],
    };
    for par in &parent {
        let Some((p, e)) = *par else { continue };
        let on_backbone = Some(backbone.contains(&e));
        match e {
            LocalEdge::Vertical(k) => {
                info.vertical[k] = EdgeStatus {
                    in_tree: true,
                    tail_is_lower: Some(p == base.edge(k).0),
                    on_backbone,
                }
            }
            LocalEdge::Left(v) => {
                // The class node stands for the level -1 endpoint.
                info.left[v] = EdgeStatus { in_tree: true, tail_is_lower: Some(p != v), on_backbone }
            }
            LocalEdge::Right(v) => {
                info.right[v] = EdgeStatus { in_tree: true, tail_is_lower: Some(p == v), on_backbone }
            }
        }
    }
    Ok(info)
}

/// Status of a single local edge recovered from `τ`.
pub fn recover_edge(base: &BaseGraph, tau: &LocalTreeVar, e: LocalEdge) -> Result<EdgeStatus> {
    Ok(tau_info(base, tau)?.get(e))
}

/// All spanning trees of a strip with at most [`ENUMERATION_MAX_VERTICES`] vertices.
pub fn enumerate_spanning_trees(strip: &StripGraph) -> Result<Vec<SpanningTree>> {
    enumerate_limited(strip, ENUMERATION_MAX_VERTICES)
}

/// Number of spanning trees by the matrix-tree theorem, rounded.
fn spanning_tree_count(strip: &StripGraph) -> f64 {
    let n = strip.n_vertices();
    if n == 1 {
        return 1.0;
    }
    let mut lap = nalgebra::DMatrix::<f64>::zeros(n - 1, n - 1);
    for e in 0..strip.n_edges() {
        let ed = strip.edge(e);
        let (a, b) = (ed.tail, ed.head);
        if a > 0 {
            lap[(a - 1, a - 1)] += 1.0;
        }
        if b > 0 {
            lap[(b - 1, b - 1)] += 1.0;
        }
        if a > 0 && b > 0 {
            lap[(a - 1, b - 1)] -= 1.0;
            lap[(b - 1, a - 1)] -= 1.0;
        }
    }
    lap.determinant().round()
}

pub(crate) fn enumerate_limited(strip: &StripGraph, max_vertices: usize) -> Result<Vec<SpanningTree>> {
    let n = strip.n_vertices();
    if n > max_vertices {
        return Err(Error::GuardExceeded { what: "spanning tree enumeration", limit: max_vertices, actual: n });
    }
    let count = spanning_tree_count(strip);
    if count > ENUMERATION_MAX_TREES as f64 {
        return Err(Error::GuardExceeded { what: "spanning tree count", limit: ENUMERATION_MAX_TREES, actual: count.min(usize::MAX as f64) as usize });
    }
    let m = strip.n_edges();
    let ends: Vec<(usize, usize)> = (0..m).map(|e| (strip.edge(e).tail, strip.edge(e).head)).collect();
    let mut out = Vec::new();
    let mut chosen = Vec::with_capacity(n);
    fn still_connected(n: usize, ends: &[(usize, usize)], chosen: &[usize], from: usize) -> bool {
        let mut uf = UnionFind::<usize>::new(n);
        let mut comps = n;
        for e in chosen.iter().copied().chain(from..ends.len()) {
            if uf.union(ends[e].0, ends[e].1) {
                comps -= 1;
            }
        }
        comps == 1
    }
    fn rec(
        k: usize,
        n: usize,
        ends: &[(usize, usize)],
        chosen: &mut Vec<usize>,
        uf: &UnionFind<usize>,
        out: &mut Vec<SpanningTree>,
    ) {
        if chosen.len() + 1 == n {
            out.push(SpanningTree::from_sorted_unchecked(chosen.clone()));
            return;
        }
        if k == ends.len() || chosen.len() + (ends.len() - k) + 1 < n {
            return;
        }
        let (a, b) = ends[k];
        if !uf.equiv(a, b) {
            let mut uf2 = uf.clone();
            uf2.union(a, b);
            chosen.push(k);
            rec(k + 1, n, ends, chosen, &uf2, out);
            chosen.pop();
        }
        if still_connected(n, ends, chosen, k + 1) {
            rec(k + 1, n, ends, chosen, uf, out);
        }
    }
    if n == 1 {
        return Ok(vec![SpanningTree::from_sorted_unchecked(vec![])]);
    }
    rec(0, n, &ends, &mut chosen, &UnionFind::new(n), &mut out);
    Ok(out)
}

/// The strip widened by one padding level on each side, reused across trees.
pub struct Encoder {
    strip: StripGraph,
    ext: StripGraph,
}

impl Encoder {
    pub fn new(strip: &StripGraph) -> Result<Self> {
        let ext = StripGraph::new(strip.base().clone(), strip.lo() - 1, strip.hi() + 1, strip.weights().clone())?;
        Ok(Encoder { strip: strip.clone(), ext })
    }

    /// Embed a tree of the strip, padding it with backbone-tree copies.
    pub fn context(&self, tree: &SpanningTree) -> Result<TreeContext<'_>> {
        let base = self.strip.base();
        let (lo, hi) = (self.strip.lo(), self.strip.hi());
        let ext = &self.ext;
        let mut edges: Vec<usize> = tree
            .edges()
            .iter()
            .map(|&e| {
                let ed = self.strip.edge(e);
                ext.edge_at(ed.level2, ed.kind).expect("strip edge exists in padded strip")
            })
            .collect();
        for n in [lo - 1, hi + 1] {
            for &k in base.tree_edges() {
                edges.push(ext.vertical_edge(n, k));
            }
        }
        edges.push(ext.horizontal_edge(lo - 1, base.pin()));
        edges.push(ext.horizontal_edge(hi, base.pin()));
        let ext_tree = SpanningTree::new(ext, edges)?;
        let left_end = ext.vid(lo - 1, base.pin());
        let right_end = ext.vid(hi + 1, base.pin());
        let rooted = RootedTree::new(ext, &ext_tree, left_end);
        let path = rooted.path(left_end, right_end);
        let mut backbone_path = vec![left_end];
        backbone_path.extend(path.iter().map(|o| o.head));
        let backbone_edges = path.iter().map(|o| o.edge).collect();
        Ok(TreeContext { ext, ext_tree, rooted, lo, hi, backbone_path, backbone_edges })
    }

    pub fn encode(&self, tree: &SpanningTree) -> Result<Word> {
        Ok(self.context(tree)?.encode())
    }
}

/// A spanning tree embedded in the padded strip; the source of every local
/// tree variable of the tree.
pub struct TreeContext<'a> {
    ext: &'a StripGraph,
    ext_tree: SpanningTree,
    rooted: RootedTree,
    lo: i32,
    hi: i32,
    backbone_path: Vec<usize>,
    backbone_edges: HashSet<usize>,
}

impl TreeContext<'_> {
    fn local_edge_id(&self, n: i32, e: LocalEdge) -> usize {
        match e {
            LocalEdge::Left(v) => self.ext.horizontal_edge(n - 1, v),
            LocalEdge::Vertical(k) => self.ext.vertical_edge(n, k),
            LocalEdge::Right(v) => self.ext.horizontal_edge(n, v),
        }
    }

    fn forest(&self, n: i32) -> Vec<LocalEdge> {
        let base = self.ext.base();
        let mut forest = Vec::new();
        for v in 0..base.n_vertices() {
            if self.ext_tree.contains(self.ext.horizontal_edge(n - 1, v)) {
                forest.push(LocalEdge::Left(v));
            }
            if self.ext_tree.contains(self.ext.horizontal_edge(n, v)) {
                forest.push(LocalEdge::Right(v));
            }
        }
        for k in 0..base.n_edges() {
            if self.ext_tree.contains(self.ext.vertical_edge(n, k)) {
                forest.push(LocalEdge::Vertical(k));
            }
        }
        forest.sort_unstable();
        forest
    }

    /// Blocks of the level-`n` vertices listed in `members` under `uf`.
    fn classes(&self, uf: &mut UnionFind<usize>, n: i32, members: impl Iterator<Item = usize>) -> Vec<Vec<usize>> {
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for v in members {
            groups.entry(uf.find_mut(self.ext.vid(n, v))).or_default().push(v);
        }
        canonical_partition(groups.into_values().collect())
    }

    fn letter(&self, n: i32, forest: Vec<LocalEdge>, a_left: Vec<Vec<usize>>, a_right: Vec<Vec<usize>>) -> LocalTreeVar {
        let mut on_level = self.backbone_path.iter().filter(|&&x| self.ext.level(x) == n).map(|&x| self.ext.coords(x).1);
        let b_left = on_level.next().expect("backbone crosses every level");
        let b_right = on_level.next_back().unwrap_or(b_left);
        LocalTreeVar { a_left, b_left, forest, b_right, a_right }
    }

    /// Local tree variable at level `n`; `τ_bb` outside `[lo, hi]`.
    pub fn local_var(&self, n: i32) -> LocalTreeVar {
        if n < self.lo || n > self.hi {
            return backbone_var(self.ext.base());
        }
        let forest = self.forest(n);
        let side = |left: bool| {
            let mut uf = UnionFind::<usize>::new(self.ext.n_vertices());
            for &e in self.ext_tree.edges() {
                let ed = self.ext.edge(e);
                if (left && ed.level2 < 2 * n) || (!left && ed.level2 > 2 * n) {
                    uf.union(ed.tail, ed.head);
                }
            }
            let members = forest.iter().filter_map(|e| match (left, *e) {
                (true, LocalEdge::Left(v)) | (false, LocalEdge::Right(v)) => Some(v),
                _ => None,
            });
            self.classes(&mut uf, n, members)
        };
        let (a_left, a_right) = (side(true), side(false));
        self.letter(n, forest, a_left, a_right)
    }

    /// The whole word, with the left and right partitions computed by one
    /// sweep each instead of per level.
    pub fn encode(&self) -> Word {
        let len = (self.hi - self.lo + 1) as usize;
        let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); 2 * len + 3];
        let off = 2 * (self.lo - 1);
        for &e in self.ext_tree.edges() {
            by_level[(self.ext.edge(e).level2 - off) as usize].push(e);
        }
        let forests: Vec<Vec<LocalEdge>> = (self.lo..=self.hi).map(|n| self.forest(n)).collect();
        let members = |f: &Vec<LocalEdge>, left: bool| -> Vec<usize> {
            f.iter()
                .filter_map(|e| match (left, *e) {
                    (true, LocalEdge::Left(v)) | (false, LocalEdge::Right(v)) => Some(v),
                    _ => None,
                })
                .collect()
        };
        let mut uf = UnionFind::<usize>::new(self.ext.n_vertices());
        let mut lefts = Vec::with_capacity(len);
        let mut next = 0;
        for (i, n) in (self.lo..=self.hi).enumerate() {
            while next < by_level.len() && (next as i32 + off) < 2 * n {
                for &e in &by_level[next] {
                    let ed = self.ext.edge(e);
                    uf.union(ed.tail, ed.head);
                }
                next += 1;
            }
            lefts.push(self.classes(&mut uf, n, members(&forests[i], true).into_iter()));
        }
        let mut uf = UnionFind::<usize>::new(self.ext.n_vertices());
        let mut rights = vec![Vec::new(); len];
        let mut next = by_level.len() as i32 - 1;
        for i in (0..len).rev() {
            let n = self.lo + i as i32;
            while next >= 0 && next + off > 2 * n {
                for &e in &by_level[next as usize] {
                    let ed = self.ext.edge(e);
                    uf.union(ed.tail, ed.head);
                }
                next -= 1;
            }
            rights[i] = self.classes(&mut uf, n, members(&forests[i], false).into_iter());
        }
        let letters = forests
            .into_iter()
            .zip(lefts.into_iter().zip(rights))
            .enumerate()
            .map(|(i, (f, (l, r)))| self.letter(self.lo + i as i32, f, l, r))
            .collect();
        Word { lo: self.lo, letters }
    }

    /// Status of a local edge computed directly from the tree.
    pub fn edge_status(&self, n: i32, e: LocalEdge) -> EdgeStatus {
        let id = self.local_edge_id(n, e);
        if !self.ext_tree.contains(id) {
            return EdgeStatus::ABSENT;
        }
        let o = self.rooted.oriented(id).expect("tree edge");
        EdgeStatus {
            in_tree: true,
            tail_is_lower: Some(o.tail == self.ext.edge(id).tail),
            on_backbone: Some(self.backbone_edges.contains(&id)),
        }
    }
}

/// Local tree variable of `tree` at level `n`.
pub fn local_var(strip: &StripGraph, tree: &SpanningTree, n: i32) -> Result<LocalTreeVar> {
    Ok(Encoder::new(strip)?.context(tree)?.local_var(n))
}

/// The sequence `(τ_lo, …, τ_hi)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub lo: i32,
    pub letters: Vec<LocalTreeVar>,
}

impl Word {
    pub fn hi(&self) -> i32 {
        self.lo + self.letters.len() as i32 - 1
    }
}

pub fn encode(strip: &StripGraph, tree: &SpanningTree) -> Result<Word> {
    Encoder::new(strip)?.encode(tree)
}

/// Glue the letters of a matched word into a spanning tree.
pub fn decode(word: &Word, strip: &StripGraph, alphabet: &Alphabet) -> Result<SpanningTree> {
    if word.lo != strip.lo() || word.hi() != strip.hi() {
        return Err(Error::InvalidParameter {
            field: "word".into(),
            reason: format!("covers [{}, {}], strip is [{}, {}]", word.lo, word.hi(), strip.lo(), strip.hi()),
        });
    }
    let ids = word.letters.iter().map(|t| alphabet.id(t).ok_or(Error::NotInAlphabet)).collect::<Result<Vec<_>>>()?;
    let bb = alphabet.backbone_id();
    let mut prev = bb;
    for (i, &id) in ids.iter().chain(std::iter::once(&bb)).enumerate() {
        if !alphabet.follows(prev, id) {
            let at = word.lo as i64 + i as i64;
            return Err(Error::MatchingViolated(at - 1, at));
        }
        prev = id;
    }
    let mut edges = HashSet::new();
    for (i, tau) in word.letters.iter().enumerate() {
        let n = word.lo + i as i32;
        for &e in tau.forest() {
            let (level2, kind) = match e {
                LocalEdge::Left(v) => (2 * n - 1, EdgeKind::Horizontal(v)),
                LocalEdge::Vertical(k) => (2 * n, EdgeKind::Vertical(k)),
                LocalEdge::Right(v) => (2 * n + 1, EdgeKind::Horizontal(v)),
            };
            if let Some(id) = strip.edge_at(level2, kind) {
                edges.insert(id);
            }
        }
    }
    SpanningTree::new(strip, edges.into_iter().collect())
}

/// The finite set `Θ` of local tree variables with the matching relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetFile", into = "AlphabetFile")]
pub struct Alphabet {
    base: BaseGraph,
    letters: Vec<LocalTreeVar>,
    follows: Vec<Vec<bool>>,
    backbone: usize,
    diameter: usize,
    half_width: usize,
    info: Vec<TauInfo>,
    reflection: Vec<usize>,
    index: HashMap<LocalTreeVar, usize>,
}

/// Serialized form of an [`Alphabet`]: letters, `⊢` as a pair list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphabetFile {
    pub base: BaseGraph,
    pub letters: Vec<LocalTreeVar>,
    pub follows: Vec<[usize; 2]>,
    pub backbone: usize,
    pub diameter: usize,
    pub half_width: usize,
}

impl From<Alphabet> for AlphabetFile {
    fn from(a: Alphabet) -> Self {
        let mut follows = Vec::new();
        for (i, row) in a.follows.iter().enumerate() {
            for (j, &f) in row.iter().enumerate() {
                if f {
                    follows.push([i, j]);
                }
            }
        }
        AlphabetFile {
            base: a.base,
            letters: a.letters,
            follows,
            backbone: a.backbone,
            diameter: a.diameter,
            half_width: a.half_width,
        }
    }
}

impl TryFrom<AlphabetFile> for Alphabet {
    type Error = Error;
    fn try_from(f: AlphabetFile) -> Result<Self> {
        let n = f.letters.len();
        let mut follows = vec![vec![false; n]; n];
        for [i, j] in f.follows {
            if i >= n || j >= n {
                return Err(Error::NotInAlphabet);
            }
            follows[i][j] = true;
        }
        Alphabet::assemble(f.base, f.letters, follows, f.half_width)
    }
}

impl Alphabet {
    fn assemble(base: BaseGraph, letters: Vec<LocalTreeVar>, follows: Vec<Vec<bool>>, half_width: usize) -> Result<Self> {
        let index: HashMap<_, _> = letters.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let backbone = *index.get(&backbone_var(&base)).ok_or(Error::NotInAlphabet)?;
        let info = letters.iter().map(|t| tau_info(&base, t)).collect::<Result<Vec<_>>>()?;
        let reflection =
            letters.iter().map(|t| index.get(&reflect_var(t)).copied().ok_or(Error::NotInAlphabet)).collect::<Result<Vec<_>>>()?;
        let mut a = Alphabet { base, letters, follows, backbone, diameter: 0, half_width, info, reflection, index };
        a.diameter = a.distances().into_iter().flatten().map(|d| d.unwrap_or(usize::MAX)).max().unwrap_or(0);
        Ok(a)
    }

    /// Shortest `⊢`-path lengths between all pairs; `None` when unreachable.
    pub fn distances(&self) -> Vec<Vec<Option<usize>>> {
        let n = self.len();
        (0..n)
            .map(|s| {
                let mut d = vec![None; n];
                d[s] = Some(0);
                let mut q = VecDeque::from([s]);
                while let Some(u) = q.pop_front() {
                    for v in 0..n {
                        if self.follows[u][v] && d[v].is_none() {
                            d[v] = Some(d[u].unwrap() + 1);
                            q.push_back(v);
                        }
                    }
                }
                d
            })
            .collect()
    }

    pub fn base(&self) -> &BaseGraph {
        &self.base
    }
    pub fn len(&self) -> usize {
        self.letters.len()
    }
    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }
    pub fn letters(&self) -> &[LocalTreeVar] {
        &self.letters
    }
    pub fn letter(&self, id: usize) -> &LocalTreeVar {
        &self.letters[id]
    }
    pub fn id(&self, tau: &LocalTreeVar) -> Option<usize> {
        self.index.get(tau).copied()
    }
    pub fn backbone_id(&self) -> usize {
        self.backbone
    }
    /// `τ_i ⊢ τ_j`.
    pub fn follows(&self, i: usize, j: usize) -> bool {
        self.follows[i][j]
    }
    pub fn follows_count(&self) -> usize {
        self.follows.iter().flatten().filter(|&&f| f).count()
    }
    /// Largest breadth-first distance in `(Θ, ⊢)`; `usize::MAX` if not strongly connected.
    pub fn diameter(&self) -> usize {
        self.diameter
    }
    /// Window half-width at which the fixed point was detected.
    pub fn half_width(&self) -> usize {
        self.half_width
    }
    pub fn info(&self, id: usize) -> &TauInfo {
        &self.info[id]
    }
    /// Id of `τ^R`.
    pub fn reflect_id(&self, id: usize) -> usize {
        self.reflection[id]
    }

    /// Encode a tree as letter ids.
    pub fn encode_ids(&self, strip: &StripGraph, tree: &SpanningTree) -> Result<Vec<usize>> {
        encode(strip, tree)?.letters.iter().map(|t| self.id(t).ok_or(Error::NotInAlphabet)).collect()
    }

    /// Number of matched words of length `m`, including the `τ_bb` boundary conditions.
    pub fn count_words(&self, m: usize) -> u128 {
        let n = self.len();
        let mut v = vec![0u128; n];
        v[self.backbone] = 1;
        for _ in 0..=m {
            let mut w = vec![0u128; n];
            for i in 0..n {
                if v[i] == 0 {
                    continue;
                }
                for j in 0..n {
                    if self.follows[i][j] {
                        w[j] += v[i];
                    }
                }
            }
            v = w;
        }
        v[self.backbone]
    }

    /// All matched words of length `m` as id sequences.
    pub fn words(&self, m: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::with_capacity(m);
        fn rec(a: &Alphabet, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            let prev = *cur.last().unwrap_or(&a.backbone);
            if cur.len() == m {
                if a.follows[prev][a.backbone] {
                    out.push(cur.clone());
                }
                return;
            }
            for j in 0..a.len() {
                if a.follows[prev][j] {
                    cur.push(j);
                    rec(a, m, cur, out);
                    cur.pop();
                }
            }
        }
        rec(self, m, &mut cur, &mut out);
        out
    }

    /// Word for a strip from letter ids.
    pub fn word(&self, lo: i32, ids: &[usize]) -> Word {
        Word { lo, letters: ids.iter().map(|&i| self.letters[i].clone()).collect() }
    }
}

/// Learn `Θ` and `⊢` by enumerating all spanning trees of the windows
/// `[-w, w]` for growing `w`, until two consecutive widths give the same sets.
/// Everything observed is realizable, so the result is sound; completeness
/// is only checked empirically by the stabilization rule.
pub fn alphabet(base: &BaseGraph) -> Result<Alphabet> {
    let mut obs = Observations::new(base);
    let mut prev = obs.sizes();
    for w in 1..=ALPHABET_MAX_HALF_WIDTH {
        obs.add_window(w)?;
        if obs.sizes() == prev {
            return obs.finish(w - 1);
        }
        prev = obs.sizes();
    }
    Err(Error::GuardExceeded {
        what: "alphabet half-width",
        limit: ALPHABET_MAX_HALF_WIDTH,
        actual: ALPHABET_MAX_HALF_WIDTH + 1,
    })
}

/// Alphabet observed on the windows `[-1, 1], …, [-w, w]`, without the
/// stabilization rule.
pub fn alphabet_with_half_width(base: &BaseGraph, w: usize) -> Result<Alphabet> {
    if w > ALPHABET_MAX_HALF_WIDTH {
        return Err(Error::GuardExceeded { what: "alphabet half-width", limit: ALPHABET_MAX_HALF_WIDTH, actual: w });
    }
    let mut obs = Observations::new(base);
    for k in 1..=w {
        obs.add_window(k)?;
    }
    obs.finish(w)
}

struct Observations {
    base: BaseGraph,
    seen: HashSet<LocalTreeVar>,
    pairs: HashSet<(LocalTreeVar, LocalTreeVar)>,
}

impl Observations {
    fn new(base: &BaseGraph) -> Self {
        let bb = backbone_var(base);
        Observations {
            base: base.clone(),
            seen: HashSet::from([bb.clone()]),
            pairs: HashSet::from([(bb.clone(), bb)]),
        }
    }

    fn sizes(&self) -> (usize, usize) {
        (self.seen.len(), self.pairs.len())
    }

    fn add_window(&mut self, w: usize) -> Result<()> {
        let weights = Weights::uniform(&self.base, 1.0, 1.0);
        let strip = StripGraph::new(self.base.clone(), -(w as i32), w as i32, weights)?;
        let bb = backbone_var(&self.base);
        let trees = enumerate_limited(&strip, ALPHABET_MAX_VERTICES)?;
        let encoder = Encoder::new(&strip)?;
        let words = par::map_range(Execution::Parallel, trees.len(), |i| encoder.encode(&trees[i]));
        for word in words {
            let word = word?;
            let mut prev = bb.clone();
            for t in word.letters.iter().chain(std::iter::once(&bb)) {
                self.seen.insert(t.clone());
                self.pairs.insert((prev, t.clone()));
                prev = t.clone();
            }
        }
        Ok(())
    }

    fn finish(self, half_width: usize) -> Result<Alphabet> {
        let mut letters: Vec<_> = self.seen.into_iter().collect();
        letters.sort();
        let index: HashMap<_, _> = letters.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let mut follows = vec![vec![false; letters.len()]; letters.len()];
        for (a, b) in &self.pairs {
            follows[index[a]][index[b]] = true;
        }
        Alphabet::assemble(self.base, letters, follows, half_width)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_strip;

    fn ladder(lo: i32, hi: i32) -> StripGraph {
        let b = BaseGraph::k2();
        build_strip(&b, lo, hi, &Weights::uniform(&b, 1.0, 1.0)).unwrap()
    }

    #[test]
    fn tree_counts() {
        let b = BaseGraph::single_vertex();
        let s = build_strip(&b, 0, 2, &Weights::uniform(&b, 1.0, 1.0)).unwrap();
        assert_eq!(enumerate_spanning_trees(&s).unwrap().len(), 1);
        // Ladder spanning tree counts: 1, 4, 15, 56, 209.
        for (len, count) in [(1, 1), (2, 4), (3, 15), (4, 56), (5, 209)] {
            let s = ladder(0, len - 1);
            assert_eq!(enumerate_spanning_trees(&s).unwrap().len(), count);
        }
        assert!(enumerate_spanning_trees(&ladder(-4, 3)).is_err());
    }

    #[test]
    fn backbone_word_is_constant() {
        let s = ladder(-2, 2);
        let w = encode(&s, s.backbone()).unwrap();
        assert_eq!(w.letters.len(), 5);
        assert!(w.letters.iter().all(|t| *t == backbone_var(s.base())));
    }

    #[test]
    fn backbone_statuses() {
        let b = BaseGraph::k2();
        let info = tau_info(&b, &backbone_var(&b)).unwrap();
        assert_eq!(info.right[0], EdgeStatus { in_tree: true, tail_is_lower: Some(true), on_backbone: Some(true) });
        assert_eq!(info.left[0], EdgeStatus { in_tree: true, tail_is_lower: Some(true), on_backbone: Some(true) });
        assert_eq!(info.vertical[0], EdgeStatus { in_tree: true, tail_is_lower: Some(true), on_backbone: Some(false) });
        assert!(!info.right[1].in_tree);
    }

    #[test]
    fn single_vertex_alphabet() {
        let a = alphabet(&BaseGraph::single_vertex()).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.follows_count(), 1);
        assert_eq!(a.diameter(), 0);
    }

    #[test]
    fn reflection_is_involution() {
        let b = BaseGraph::k2();
        let t = backbone_var(&b);
        assert_eq!(reflect_var(&t), t);
        let s = ladder(0, 2);
        for tree in enumerate_spanning_trees(&s).unwrap() {
            let enc = Encoder::new(&s).unwrap();
            let ctx = enc.context(&tree).unwrap();
            for n in 0..=2 {
                let t = ctx.local_var(n);
                assert_eq!(reflect_var(&reflect_var(&t)), t);
            }
        }
    }
}
