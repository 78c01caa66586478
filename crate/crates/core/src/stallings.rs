//! Finite graphs immersing in the rose: folding, cores, fiber products,
//! loop lifting and malnormality of subgroup families.
//!
//! Every edge carries a single positive generator; traversing an edge against
//! its orientation reads the inverse letter. Vertices are addressed by index
//! (`0..vertex_count()`); the stable external ids used by the file format are
//! kept alongside.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::words::{cyclic_reduce, reduce, CyclicWord, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("generator word {0} is trivial")]
    TrivialGenerator(usize),
    #[error("malformed graph: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub id: u32,
    pub src: usize,
    pub dst: usize,
    /// Always a positive generator.
    pub label: Letter,
}

/// One end of an edge, seen from the vertex it is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfEdge {
    pub edge: usize,
    /// `true` at the source end: leaving along it reads the edge label.
    pub forward: bool,
}

impl HalfEdge {
    pub fn reversed(self) -> HalfEdge {
        HalfEdge {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreGraph {
    vertex_ids: Vec<u32>,
    edges: Vec<Edge>,
    basepoint: Option<usize>,
}

impl CoreGraph {
    /// A graph with dense ids `0..n`.
    pub fn new(n: usize, edges: Vec<(usize, usize, Letter)>, basepoint: Option<usize>) -> Self {
        let edges = edges
            .into_iter()
            .enumerate()
            .map(|(i, (src, dst, label))| {
                assert!(src < n && dst < n, "edge endpoint out of range");
                let (src, dst, label) = if label.is_inverse() {
                    (dst, src, label.inverse())
                } else {
                    (src, dst, label)
                };
                Edge {
                    id: i as u32,
                    src,
                    dst,
                    label,
                }
            })
            .collect();
        CoreGraph {
            vertex_ids: (0..n as u32).collect(),
            edges,
            basepoint,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_ids(&self) -> &[u32] {
        &self.vertex_ids
    }

    pub fn basepoint(&self) -> Option<usize> {
        self.basepoint
    }

    pub fn with_basepoint(mut self, basepoint: Option<usize>) -> Self {
        self.basepoint = basepoint;
        self
    }

    /// Letter read when leaving along `h`.
    pub fn letter(&self, h: HalfEdge) -> Letter {
        let x = self.edges[h.edge].label;
        if h.forward {
            x
        } else {
            x.inverse()
        }
    }

    /// Vertex `h` is attached to.
    pub fn origin(&self, h: HalfEdge) -> usize {
        let e = &self.edges[h.edge];
        if h.forward {
            e.src
        } else {
            e.dst
        }
    }

    /// Vertex reached by leaving along `h`.
    pub fn terminus(&self, h: HalfEdge) -> usize {
        self.origin(h.reversed())
    }

    /// Half-edges grouped by the vertex they are attached to, in edge order.
    pub fn half_edges_at(&self) -> Vec<Vec<HalfEdge>> {
        let mut out = vec![Vec::new(); self.vertex_count()];
        for (i, e) in self.edges.iter().enumerate() {
            out[e.src].push(HalfEdge {
                edge: i,
                forward: true,
            });
            out[e.dst].push(HalfEdge {
                edge: i,
                forward: false,
            });
        }
        out
    }

    pub fn valence(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertex_count()];
        for e in &self.edges {
            d[e.src] += 1;
            d[e.dst] += 1;
        }
        d
    }

    /// Connected components as sorted vertex lists, ordered by least vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.src), find(&mut parent, e.dst));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
        groups.into_values().collect()
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// First Betti number `E - V + c`.
    pub fn betti(&self) -> usize {
        self.edge_count() + self.components().len() - self.vertex_count()
    }

    /// The subgraph spanned by `vertices`, keeping external ids.
    pub fn induced(&self, vertices: &[usize]) -> CoreGraph {
        let mut index = vec![usize::MAX; self.vertex_count()];
        for (i, &v) in vertices.iter().enumerate() {
            index[v] = i;
        }
        let edges = self
            .edges
            .iter()
            .filter(|e| index[e.src] != usize::MAX && index[e.dst] != usize::MAX)
            .map(|e| Edge {
                id: e.id,
                src: index[e.src],
                dst: index[e.dst],
                label: e.label,
            })
            .collect();
        CoreGraph {
            vertex_ids: vertices.iter().map(|&v| self.vertex_ids[v]).collect(),
            edges,
            basepoint: self
                .basepoint
                .filter(|&b| index[b] != usize::MAX)
                .map(|b| index[b]),
        }
    }

    /// Splits a multi-component graph; each piece keeps its ids.
    pub fn component_graphs(&self) -> Vec<CoreGraph> {
        self.components().iter().map(|c| self.induced(c)).collect()
    }

    /// Disjoint union with dense ids; returns the vertex offset of each part.
    pub fn disjoint_union(parts: &[CoreGraph]) -> (CoreGraph, Vec<usize>) {
        let mut offsets = Vec::with_capacity(parts.len());
        let mut n = 0;
        let mut edges = Vec::new();
        for g in parts {
            offsets.push(n);
            edges.extend(g.edges.iter().map(|e| (e.src + n, e.dst + n, e.label)));
            n += g.vertex_count();
        }
        (CoreGraph::new(n, edges, None), offsets)
    }

    /// Transition table for a folded graph.
    pub fn transitions(&self) -> Transitions<'_> {
        let width = self
            .edges
            .iter()
            .map(|e| e.label.code() as usize + 2)
            .max()
            .unwrap_or(0);
        let mut table = vec![NONE; self.vertex_count() * width];
        for (i, e) in self.edges.iter().enumerate() {
            table[e.src * width + e.label.code() as usize] = pack(i, true);
            table[e.dst * width + e.label.inverse().code() as usize] = pack(i, false);
        }
        Transitions {
            width,
            table,
            graph: self,
        }
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            vertices: self.vertex_ids.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeFile {
                    id: e.id,
                    src: self.vertex_ids[e.src],
                    dst: self.vertex_ids[e.dst],
                    label: e.label.to_char().to_string(),
                })
                .collect(),
            basepoint: self.basepoint.map(|b| self.vertex_ids[b]),
        }
    }

    pub fn from_file(f: &GraphFile) -> Result<Self, GraphError> {
        let mut index = HashMap::new();
        for (i, &v) in f.vertices.iter().enumerate() {
            if index.insert(v, i).is_some() {
                return Err(GraphError::Malformed(format!("duplicate vertex id {v}")));
            }
        }
        let lookup = |v: u32| {
            index
                .get(&v)
                .copied()
                .ok_or_else(|| GraphError::Malformed(format!("unknown vertex id {v}")))
        };
        let mut seen = HashSet::new();
        let mut edges = Vec::with_capacity(f.edges.len());
        for e in &f.edges {
            if !seen.insert(e.id) {
                return Err(GraphError::Malformed(format!("duplicate edge id {}", e.id)));
            }
            let mut chars = e.label.chars();
            let label = match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_lowercase() => Letter::from_char(c).expect("lowercase letter"),
                _ => {
                    return Err(GraphError::Malformed(format!(
                        "edge {} label {:?} is not a single lowercase letter",
                        e.id, e.label
                    )))
                }
            };
            edges.push(Edge {
                id: e.id,
                src: lookup(e.src)?,
                dst: lookup(e.dst)?,
                label,
            });
        }
        let basepoint = f.basepoint.map(lookup).transpose()?;
        Ok(CoreGraph {
            vertex_ids: f.vertices.clone(),
            edges,
            basepoint,
        })
    }

    /// A circle reading `w` once around, starting at vertex 0.
    pub fn circle(w: &CyclicWord) -> CoreGraph {
        let n = w.len();
        let edges = (0..n).map(|i| (i, (i + 1) % n, w.at(i))).collect();
        CoreGraph::new(n, edges, None)
    }
}

/// The file representation of a [`CoreGraph`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFile {
    pub vertices: Vec<u32>,
    pub edges: Vec<EdgeFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeFile {
    pub id: u32,
    pub src: u32,
    pub dst: u32,
    pub label: String,
}

impl Serialize for CoreGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoreGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = GraphFile::deserialize(d)?;
        CoreGraph::from_file(&f).map_err(serde::de::Error::custom)
    }
}

const NONE: u32 = u32::MAX;

fn pack(edge: usize, forward: bool) -> u32 {
    (edge as u32) << 1 | forward as u32
}

/// Outgoing half-edge lookup by letter; meaningful for folded graphs.
pub struct Transitions<'g> {
    width: usize,
    table: Vec<u32>,
    graph: &'g CoreGraph,
}

impl Transitions<'_> {
    pub fn half_edge(&self, v: usize, x: Letter) -> Option<HalfEdge> {
        let c = x.code() as usize;
        if c >= self.width {
            return None;
        }
        match self.table[v * self.width + c] {
            NONE => None,
            p => Some(HalfEdge {
                edge: (p >> 1) as usize,
                forward: p & 1 == 1,
            }),
        }
    }

    pub fn step(&self, v: usize, x: Letter) -> Option<usize> {
        self.half_edge(v, x).map(|h| self.graph.terminus(h))
    }

    /// Endpoint of the path reading `w` from `v`, if it exists.
    pub fn read(&self, v: usize, w: &[Letter]) -> Option<usize> {
        w.iter().try_fold(v, |u, &x| self.step(u, x))
    }
}

/// Wedge of subdivided loops at a basepoint, one per word.
pub fn rose_of_words(words: &[Word]) -> Result<CoreGraph, GraphError> {
    let mut n = 1;
    let mut edges = Vec::new();
    for (i, w) in words.iter().enumerate() {
        if w.is_empty() {
            return Err(GraphError::TrivialGenerator(i));
        }
        let len = w.len();
        let mut prev = 0;
        for (j, &x) in w.letters().iter().enumerate() {
            let next = if j + 1 == len {
                0
            } else {
                n += 1;
                n - 1
            };
            edges.push((prev, next, x));
            prev = next;
        }
    }
    Ok(CoreGraph::new(n, edges, Some(0)))
}

pub fn is_folded(g: &CoreGraph) -> bool {
    g.half_edges_at().iter().all(|hs| {
        let mut seen = HashSet::new();
        hs.iter().all(|&h| seen.insert(g.letter(h)))
    })
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Stallings folding. The result has dense ids, vertices numbered by the
/// least original vertex of each class; an already folded graph is returned
/// unchanged.
pub fn fold(g: &CoreGraph) -> CoreGraph {
    if is_folded(g) {
        return g.clone();
    }
    let n = g.vertex_count();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut alive = vec![true; g.edge_count()];
    let mut adj = g.half_edges_at();
    let mut work: Vec<usize> = (0..n).rev().collect();
    let end = |parent: &mut [usize], h: HalfEdge| find(parent, g.terminus(h));

    while let Some(v) = work.pop() {
        if find(&mut parent, v) != v {
            continue;
        }
        let mut seen: HashMap<Letter, HalfEdge> = HashMap::new();
        let mut merge = None;
        adj[v].retain(|h| alive[h.edge]);
        for &h in &adj[v] {
            let x = g.letter(h);
            match seen.get(&x) {
                Some(&h0) if h0.edge != h.edge => {
                    merge = Some((h0, h));
                    break;
                }
                _ => {
                    seen.insert(x, h);
                }
            }
        }
        let Some((keep, drop)) = merge else { continue };
        alive[drop.edge] = false;
        let a = end(&mut parent, keep);
        let b = end(&mut parent, drop);
        if a != b {
            let (root, child) = if adj[a].len() >= adj[b].len() { (a, b) } else { (b, a) };
            parent[child] = root;
            let moved = std::mem::take(&mut adj[child]);
            adj[root].extend(moved);
            work.push(root);
        }
        work.push(find(&mut parent, v));
    }

    rebuild(g, &mut parent, &alive)
}

fn rebuild(g: &CoreGraph, parent: &mut [usize], alive: &[bool]) -> CoreGraph {
    let n = g.vertex_count();
    let mut index = vec![usize::MAX; n];
    let mut count = 0;
    for v in 0..n {
        let r = find(parent, v);
        if index[r] == usize::MAX {
            index[r] = count;
            count += 1;
        }
    }
    let edges = g
        .edges
        .iter()
        .zip(alive)
        .filter(|(_, &a)| a)
        .map(|(e, _)| {
            let s = find(parent, e.src);
            let d = find(parent, e.dst);
            (index[s], index[d], e.label)
        })
        .collect();
    let bp = g.basepoint.map(|b| index[find(parent, b)]);
    CoreGraph::new(count, edges, bp)
}

/// Folding where every step identifies a uniformly chosen foldable pair.
/// Slow; exists to exercise confluence of folding.
pub fn fold_in_random_order<R: Rng + ?Sized>(g: &CoreGraph, rng: &mut R) -> CoreGraph {
    let mut cur = g.clone();
    loop {
        let mut pairs = Vec::new();
        for hs in cur.half_edges_at() {
            for (i, &h1) in hs.iter().enumerate() {
                for &h2 in &hs[i + 1..] {
                    if h1.edge != h2.edge && cur.letter(h1) == cur.letter(h2) {
                        pairs.push((h1, h2));
                    }
                }
            }
        }
        let Some(&(h1, h2)) = pairs.choose(rng) else {
            return cur;
        };
        let n = cur.vertex_count();
        let mut parent: Vec<usize> = (0..n).collect();
        let (a, b) = (cur.terminus(h1), cur.terminus(h2));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
        let mut alive = vec![true; cur.edge_count()];
        alive[h2.edge] = false;
        cur = rebuild(&cur, &mut parent, &alive);
    }
}

/// Label-preserving isomorphism test for folded graphs. When both graphs have
/// basepoints, the isomorphism must match them.
pub fn folded_isomorphic(g: &CoreGraph, h: &CoreGraph) -> bool {
    if g.vertex_count() != h.vertex_count() || g.edge_count() != h.edge_count() {
        return false;
    }
    if g.basepoint.is_some() != h.basepoint.is_some() {
        return false;
    }
    let tg = g.transitions();
    let th = h.transitions();
    let adj_g = g.half_edges_at();
    let mut map = vec![usize::MAX; g.vertex_count()];
    let mut used = vec![false; h.vertex_count()];

    // Extends `map` from a seed by reading letters; folded graphs force the map.
    let try_seed = |map: &mut Vec<usize>, used: &mut Vec<bool>, s: usize, t: usize| -> bool {
        let mut assigned = Vec::new();
        let mut queue = VecDeque::from([(s, t)]);
        let mut ok = true;
        while let Some((u, v)) = queue.pop_front() {
            if map[u] != usize::MAX {
                if map[u] != v {
                    ok = false;
                    break;
                }
                continue;
            }
            if used[v] {
                ok = false;
                break;
            }
            map[u] = v;
            used[v] = true;
            assigned.push(u);
            for &he in &adj_g[u] {
                let x = g.letter(he);
                match th.step(v, x) {
                    Some(v2) => queue.push_back((g.terminus(he), v2)),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                break;
            }
        }
        if !ok {
            for u in assigned {
                used[map[u]] = false;
                map[u] = usize::MAX;
            }
        }
        ok
    };
    let _ = &tg;

    if let (Some(bg), Some(bh)) = (g.basepoint, h.basepoint) {
        if !try_seed(&mut map, &mut used, bg, bh) {
            return false;
        }
    }
    for comp in g.components() {
        let s = comp[0];
        if map[s] != usize::MAX {
            continue;
        }
        let mut found = false;
        for t in 0..h.vertex_count() {
            if !used[t] && try_seed(&mut map, &mut used, s, t) {
                found = true;
                break;
            }
        }
        if !found {
            return false;
        }
    }
    // Vertex bijection plus equal edge counts and forced letters give an edge bijection.
    map.iter().all(|&v| v != usize::MAX)
}

/// Iteratively deletes valence-1 vertices. With `keep_basepoint` the basepoint
/// survives (the core `Y_G`); without it all tree parts disappear (`Z_G`).
/// External ids of surviving vertices and edges are preserved.
pub fn core(g: &CoreGraph, keep_basepoint: bool) -> CoreGraph {
    let n = g.vertex_count();
    let mut deg = g.valence();
    let adj = g.half_edges_at();
    let mut removed_v = vec![false; n];
    let mut removed_e = vec![false; g.edge_count()];
    let protected = if keep_basepoint { g.basepoint } else { None };
    let mut queue: Vec<usize> = (0..n).filter(|&v| deg[v] <= 1 && Some(v) != protected).collect();
    while let Some(v) = queue.pop() {
        if removed_v[v] {
            continue;
        }
        removed_v[v] = true;
        for &h in &adj[v] {
            if removed_e[h.edge] {
                continue;
            }
            removed_e[h.edge] = true;
            let u = g.terminus(h);
            deg[u] -= 1;
            deg[v] -= 1;
            if !removed_v[u] && deg[u] <= 1 && Some(u) != protected {
                queue.push(u);
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&v| !removed_v[v]).collect();
    let mut out = g.induced(&keep);
    if !keep_basepoint {
        out.basepoint = None;
    }
    out
}

/// Pullback of two immersions over the rose, with both projections.
#[derive(Debug, Clone)]
pub struct FiberProduct {
    pub graph: CoreGraph,
    /// Projection of each product vertex to `(g1 vertex, g2 vertex)`.
    pub vertex_pairs: Vec<(usize, usize)>,
    /// Projection of each product edge to `(g1 edge, g2 edge)`.
    pub edge_pairs: Vec<(usize, usize)>,
}

impl FiberProduct {
    pub fn vertex_index(&self, v1: usize, v2: usize, n2: usize) -> usize {
        v1 * n2 + v2
    }
}

/// Vertex set `V1 x V2`, one edge per pair of equally labelled edges.
pub fn fiber_product(g1: &CoreGraph, g2: &CoreGraph) -> FiberProduct {
    let n2 = g2.vertex_count();
    let mut by_label: HashMap<Letter, Vec<usize>> = HashMap::new();
    for (j, e) in g2.edges.iter().enumerate() {
        by_label.entry(e.label).or_default().push(j);
    }
    let mut edges = Vec::new();
    let mut edge_pairs = Vec::new();
    for (i, e1) in g1.edges.iter().enumerate() {
        if let Some(js) = by_label.get(&e1.label) {
            for &j in js {
                let e2 = &g2.edges[j];
                edges.push((e1.src * n2 + e2.src, e1.dst * n2 + e2.dst, e1.label));
                edge_pairs.push((i, j));
            }
        }
    }
    let n = g1.vertex_count() * n2;
    let basepoint = match (g1.basepoint, g2.basepoint) {
        (Some(a), Some(b)) => Some(a * n2 + b),
        _ => None,
    };
    let vertex_pairs = (0..n).map(|v| (v / n2.max(1), v % n2.max(1))).collect();
    FiberProduct {
        graph: CoreGraph::new(n, edges, basepoint),
        vertex_pairs,
        edge_pairs,
    }
}

/// Lifts of a loop into a folded graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiftReport {
    #[serde(rename = "loop")]
    pub loop_word: CyclicWord,
    /// Starting vertices (indices) of the closed lifts.
    pub lifts: Vec<usize>,
    pub fully_rigid: bool,
}

impl LiftReport {
    pub fn is_rigid(&self) -> bool {
        self.lifts.len() == 1
    }
}

/// Partial map `v -> endpoint of the path reading w from v`.
pub fn transition_map(w: &CyclicWord, z: &CoreGraph) -> Vec<Option<usize>> {
    let t = z.transitions();
    (0..z.vertex_count()).map(|v| t.read(v, w.letters())).collect()
}

/// Points lying on cycles of a partial self-map.
fn periodic_points(map: &[Option<usize>]) -> Vec<usize> {
    let n = map.len();
    // 0 = unvisited, 1 = on current walk, 2 = done
    let mut state = vec![0u8; n];
    let mut periodic = vec![false; n];
    for s in 0..n {
        if state[s] != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut cur = Some(s);
        while let Some(v) = cur {
            match state[v] {
                0 => {
                    state[v] = 1;
                    walk.push(v);
                    cur = map[v];
                }
                1 => {
                    // Close a new cycle through v.
                    let pos = walk.iter().position(|&u| u == v).expect("on walk");
                    for &u in &walk[pos..] {
                        periodic[u] = true;
                    }
                    break;
                }
                _ => break,
            }
        }
        for u in walk {
            state[u] = 2;
        }
    }
    (0..n).filter(|&v| periodic[v]).collect()
}

/// Fixed points of `T_w` are the lifts of `w`; points of period `k` start the
/// lifts of `w^k`, so a single periodic point means every power lifts uniquely.
pub fn lifts_of_loop(w: &CyclicWord, z: &CoreGraph) -> LiftReport {
    let map = transition_map(w, z);
    let lifts = (0..map.len()).filter(|&v| map[v] == Some(v)).collect();
    let fully_rigid = periodic_points(&map).len() == 1;
    LiftReport {
        loop_word: w.clone(),
        lifts,
        fully_rigid,
    }
}

pub fn is_fully_rigid(w: &CyclicWord, z: &CoreGraph) -> bool {
    lifts_of_loop(w, z).fully_rigid
}

/// A closed reduced path inside a (core) graph component, as a cyclic word.
pub fn some_cycle(g: &CoreGraph, start: usize) -> Option<CyclicWord> {
    let adj = g.half_edges_at();
    let mut path: Vec<HalfEdge> = Vec::new();
    let mut first_visit: HashMap<usize, usize> = HashMap::new();
    let mut v = start;
    loop {
        if let Some(&i) = first_visit.get(&v) {
            let w = reduce(path[i..].iter().map(|&h| g.letter(h)));
            return cyclic_reduce(&w).ok().map(|(c, _)| c);
        }
        first_visit.insert(v, path.len());
        let back = path.last().map(|h| h.reversed());
        let h = *adj[v].iter().find(|&&h| Some(h) != back)?;
        path.push(h);
        v = g.terminus(h);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalnormalWitness {
    pub i: usize,
    pub j: usize,
    /// A loop with lifts to both members, away from the diagonal when `i == j`.
    pub loop_word: CyclicWord,
    pub component_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MalnormalReport {
    pub malnormal: bool,
    pub witness: Option<MalnormalWitness>,
}

/// Fiber-product criterion: the family is malnormal iff the core of every
/// `z_i x z_j` (i <= j) has no component other than the diagonal copy of `z_i`.
pub fn is_malnormal_family(zs: &[CoreGraph]) -> MalnormalReport {
    for i in 0..zs.len() {
        for j in i..zs.len() {
            let p = fiber_product(&zs[i], &zs[j]);
            let n2 = zs[j].vertex_count();
            let k = core(&p.graph, false);
            for comp in k.components() {
                let ids: Vec<usize> = comp.iter().map(|&v| k.vertex_ids()[v] as usize).collect();
                if i == j && ids.iter().any(|&v| v / n2 == v % n2) {
                    continue;
                }
                let sub = k.induced(&comp);
                let loop_word = some_cycle(&sub, 0).expect("core components carry a cycle");
                return MalnormalReport {
                    malnormal: false,
                    witness: Some(MalnormalWitness {
                        i,
                        j,
                        loop_word,
                        component_rank: sub.betti(),
                    }),
                };
            }
        }
    }
    MalnormalReport {
        malnormal: true,
        witness: None,
    }
}

/// All cyclic words read by closed reduced loops of length `<= max_len` in `g`.
pub fn closed_loops(g: &CoreGraph, max_len: usize) -> Vec<CyclicWord> {
    let adj = g.half_edges_at();
    let mut out = HashSet::new();
    let mut path: Vec<HalfEdge> = Vec::new();
    fn rec(
        g: &CoreGraph,
        adj: &[Vec<HalfEdge>],
        start: usize,
        v: usize,
        max_len: usize,
        path: &mut Vec<HalfEdge>,
        out: &mut HashSet<CyclicWord>,
    ) {
        if !path.is_empty() && v == start {
            let first = g.letter(path[0]);
            let last = g.letter(*path.last().unwrap());
            if path.len() == 1 || first != last.inverse() {
                let letters: Vec<Letter> = path.iter().map(|&h| g.letter(h)).collect();
                if let Ok(c) = CyclicWord::new(letters) {
                    out.insert(c);
                }
            }
        }
        if path.len() == max_len {
            return;
        }
        let back = path.last().map(|h| h.reversed());
        for &h in &adj[v] {
            if Some(h) == back {
                continue;
            }
            path.push(h);
            rec(g, adj, start, g.terminus(h), max_len, path, out);
            path.pop();
        }
    }
    for s in 0..g.vertex_count() {
        rec(g, &adj, s, s, max_len, &mut path, &mut out);
    }
    let mut v: Vec<_> = out.into_iter().collect();
    v.sort();
    v
}

/// Direct rigidity scan: every loop of length `<= max_len` read in some
/// member must be fully rigid in the disjoint union of the family.
pub fn rigidity_scan(zs: &[CoreGraph], max_len: usize) -> bool {
    let (union, _) = CoreGraph::disjoint_union(zs);
    zs.iter()
        .flat_map(|z| closed_loops(z, max_len))
        .all(|w| is_fully_rigid(&w, &union))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn cw(s: &str) -> CyclicWord {
        s.parse().unwrap()
    }

    fn rose(ws: &[&str]) -> CoreGraph {
        rose_of_words(&ws.iter().map(|s| w(s)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rose_counts() {
        let g = rose(&["ab", "ac"]);
        assert_eq!((g.vertex_count(), g.edge_count()), (3, 4));
        let g = rose(&["a"]);
        assert_eq!((g.vertex_count(), g.edge_count()), (1, 1));
        let g = rose(&["abAB"]);
        assert_eq!((g.vertex_count(), g.edge_count()), (4, 4));
        assert_eq!(
            rose_of_words(&[w("a"), Word::empty()]),
            Err(GraphError::TrivialGenerator(1))
        );
    }

    #[test]
    fn fold_examples() {
        let g = fold(&rose(&["ab", "ac"]));
        assert!(is_folded(&g));
        assert_eq!((g.vertex_count(), g.edge_count()), (2, 3));

        let aa = rose(&["a", "a"]);
        assert!(!is_folded(&aa));
        let g = fold(&aa);
        assert_eq!((g.vertex_count(), g.edge_count()), (1, 1));

        assert!(is_folded(&CoreGraph::circle(&cw("aa"))));
        let f = fold(&g);
        assert_eq!(f, g);
    }

    #[test]
    fn core_examples() {
        // <bAB>: a b-edge from the basepoint to a loop reading A.
        let g = fold(&rose(&["bAB"]));
        let y = core(&g, true);
        assert_eq!((y.vertex_count(), y.edge_count()), (2, 2));
        let z = core(&g, false);
        assert_eq!((z.vertex_count(), z.edge_count()), (1, 1));
        assert_eq!(z.basepoint(), None);

        let c = CoreGraph::circle(&cw("abAB"));
        assert_eq!(core(&c, false), c);
        assert_eq!(core(&c.clone().with_basepoint(Some(0)), true).edge_count(), 4);

        // A dangling path off a loop is pruned.
        let g = CoreGraph::new(3, vec![(0, 0, w("a").letters()[0]), (0, 1, w("b").letters()[0]), (1, 2, w("b").letters()[0])], None);
        let z = core(&g, false);
        assert_eq!((z.vertex_count(), z.edge_count()), (1, 1));
    }

    #[test]
    fn fiber_product_examples() {
        let a = CoreGraph::circle(&cw("a"));
        let aa = CoreGraph::circle(&cw("aa"));
        let b = CoreGraph::circle(&cw("b"));
        let p = fiber_product(&a, &a).graph;
        assert_eq!((p.vertex_count(), p.edge_count()), (1, 1));
        let p = fiber_product(&a, &aa).graph;
        assert_eq!((p.vertex_count(), p.edge_count()), (2, 2));
        assert!(p.is_connected());
        let p = fiber_product(&a, &b).graph;
        assert_eq!((p.vertex_count(), p.edge_count()), (1, 0));
        assert_eq!(core(&p, false).vertex_count(), 0);
    }

    #[test]
    fn lift_examples() {
        let c = CoreGraph::circle(&cw("abAB"));
        let r = lifts_of_loop(&cw("abAB"), &c);
        assert_eq!(r.lifts.len(), 1);
        assert!(r.fully_rigid);
        let r = lifts_of_loop(&cw("aa"), &CoreGraph::circle(&cw("aa")));
        assert_eq!(r.lifts.len(), 2);
        assert!(!r.fully_rigid);
        let r = lifts_of_loop(&cw("b"), &CoreGraph::circle(&cw("aa")));
        assert!(r.lifts.is_empty());
        // inverse loop reads the circle backwards
        assert_eq!(lifts_of_loop(&cw("baBA"), &c).lifts.len(), 1);
    }

    #[test]
    fn malnormal_examples() {
        let a = CoreGraph::circle(&cw("a"));
        assert!(is_malnormal_family(&[a.clone()]).malnormal);
        let aa = CoreGraph::circle(&cw("aa"));
        let r = is_malnormal_family(&[aa]);
        assert!(!r.malnormal);
        assert_eq!(r.witness.unwrap().loop_word, cw("aa"));
        let ab = CoreGraph::circle(&cw("ab"));
        let ba = CoreGraph::circle(&cw("ba"));
        assert!(!is_malnormal_family(&[ab, ba]).malnormal);
        assert!(!is_malnormal_family(&[a.clone(), a]).malnormal);
    }

    #[test]
    fn scan_examples() {
        assert!(rigidity_scan(&[CoreGraph::circle(&cw("a"))], 6));
        assert!(!rigidity_scan(&[CoreGraph::circle(&cw("aa"))], 6));
        assert!(!rigidity_scan(&[CoreGraph::circle(&cw("ab")), CoreGraph::circle(&cw("ba"))], 6));
    }

    #[test]
    fn file_round_trip_keeps_ids() {
        let f = GraphFile {
            vertices: vec![7, 3],
            edges: vec![
                EdgeFile { id: 10, src: 7, dst: 3, label: "a".into() },
                EdgeFile { id: 4, src: 3, dst: 7, label: "b".into() },
            ],
            basepoint: Some(3),
        };
        let g = CoreGraph::from_file(&f).unwrap();
        assert_eq!(g.to_file(), f);
        let json = serde_json::to_string(&g).unwrap();
        let back: CoreGraph = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);

        let mut bad = f.clone();
        bad.edges[0].label = "A".into();
        assert!(CoreGraph::from_file(&bad).is_err());
        let mut bad = f;
        bad.edges[0].dst = 99;
        assert!(CoreGraph::from_file(&bad).is_err());
    }

    #[test]
    fn isomorphism_respects_labels() {
        let ab = CoreGraph::circle(&cw("ab"));
        let mut shifted = CoreGraph::new(2, vec![(1, 0, w("a").letters()[0]), (0, 1, w("b").letters()[0])], None);
        assert!(folded_isomorphic(&ab, &shifted));
        shifted = CoreGraph::circle(&cw("aB"));
        assert!(!folded_isomorphic(&ab, &shifted));
    }
}
