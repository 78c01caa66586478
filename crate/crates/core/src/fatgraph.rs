//! Fatgraphs over the rose, their boundary, surface pieces carrying a lift of
//! the boundary into a target core, and gluing pieces into a closed surface.
//!
//! Convention: the boundary is traced by `h -> succ(rev(h))`, where `succ` is
//! the cyclic successor at the vertex `rev(h)` is attached to. The opposite
//! convention gives the mirror surface.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stallings::{core, fiber_product, is_folded, lifts_of_loop, CoreGraph, GraphError, GraphFile, HalfEdge};
use crate::words::{CyclicWord, Letter, Word};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FatgraphError {
    #[error("fatgraph is disconnected")]
    DisconnectedFatgraph,
    #[error("boundary component {component} ({word}) has no lift to the target core")]
    NoLift { component: usize, word: String },
    #[error("boundary component {component} ({word}) has {lifts} lifts to the target core")]
    AmbiguousLift {
        component: usize,
        word: String,
        lifts: usize,
    },
    #[error("f-vertices need a unique lift of every boundary component")]
    RigidityRequired,
    #[error("boundary component {0} is not cyclically reduced")]
    UnreducedBoundary(usize),
    #[error("boundary component {component} of piece {piece} is not matched exactly once")]
    UnmatchedBoundary { piece: usize, component: usize },
    #[error("matched boundaries {0} and {1} do not carry inverse words")]
    WordMismatch(String, String),
    #[error("check {0} failed")]
    FailedCheck(String),
    #[error("malformed fatgraph: {0}")]
    Malformed(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[inline]
fn slot(h: HalfEdge) -> usize {
    2 * h.edge + !h.forward as usize
}

#[inline]
fn from_slot(s: usize) -> HalfEdge {
    HalfEdge {
        edge: s / 2,
        forward: s % 2 == 0,
    }
}

/// A labelled graph with a cyclic order of the half-edges at each vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fatgraph {
    graph: CoreGraph,
    orders: Vec<Vec<HalfEdge>>,
    succ: Vec<usize>,
}

impl Fatgraph {
    pub fn new(graph: CoreGraph, orders: Vec<Vec<HalfEdge>>) -> Result<Self, FatgraphError> {
        let graph = graph.with_basepoint(None);
        if orders.len() != graph.vertex_count() {
            return Err(FatgraphError::Malformed(format!(
                "{} cyclic orders for {} vertices",
                orders.len(),
                graph.vertex_count()
            )));
        }
        let mut succ = vec![usize::MAX; 2 * graph.edge_count()];
        for (v, order) in orders.iter().enumerate() {
            if order.is_empty() {
                return Err(FatgraphError::Malformed(format!("vertex {} is isolated", graph.vertex_ids()[v])));
            }
            for (i, &h) in order.iter().enumerate() {
                if h.edge >= graph.edge_count() || graph.origin(h) != v {
                    return Err(FatgraphError::Malformed(format!(
                        "half-edge {} is not attached to vertex {}",
                        half_edge_name(&graph, h),
                        graph.vertex_ids()[v]
                    )));
                }
                if succ[slot(h)] != usize::MAX {
                    return Err(FatgraphError::Malformed(format!(
                        "half-edge {} listed twice",
                        half_edge_name(&graph, h)
                    )));
                }
                succ[slot(h)] = slot(order[(i + 1) % order.len()]);
            }
        }
        if let Some(s) = succ.iter().position(|&s| s == usize::MAX) {
            return Err(FatgraphError::Malformed(format!(
                "half-edge {} missing from the cyclic orders",
                half_edge_name(&graph, from_slot(s))
            )));
        }
        Ok(Fatgraph { graph, orders, succ })
    }

    pub fn graph(&self) -> &CoreGraph {
        &self.graph
    }

    pub fn orders(&self) -> &[Vec<HalfEdge>] {
        &self.orders
    }

    pub fn successor(&self, h: HalfEdge) -> HalfEdge {
        from_slot(self.succ[slot(h)])
    }

    /// The half-edge the boundary leaves along after leaving along `h`.
    pub fn boundary_step(&self, h: HalfEdge) -> HalfEdge {
        self.successor(h.reversed())
    }

    /// The boundary cycle through `h`, as the half-edges it leaves along.
    pub fn boundary_cycle(&self, h: HalfEdge) -> Vec<HalfEdge> {
        let mut out = vec![h];
        let mut cur = self.boundary_step(h);
        while cur != h {
            out.push(cur);
            cur = self.boundary_step(cur);
        }
        out
    }

    /// All boundary cycles, each starting at its least half-edge.
    pub fn boundary_cycles(&self) -> Vec<Vec<HalfEdge>> {
        let mut seen = vec![false; self.succ.len()];
        let mut out = Vec::new();
        for s in 0..self.succ.len() {
            if seen[s] {
                continue;
            }
            let cycle = self.boundary_cycle(from_slot(s));
            for &h in &cycle {
                seen[slot(h)] = true;
            }
            out.push(cycle);
        }
        out
    }

    /// Raw boundary words, one per boundary cycle.
    pub fn boundary_letters(&self) -> Vec<Vec<Letter>> {
        self.boundary_cycles()
            .iter()
            .map(|c| c.iter().map(|&h| self.graph.letter(h)).collect())
            .collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.graph.vertex_count() as i64 - self.graph.edge_count() as i64
    }

    pub fn to_file(&self) -> FatgraphFile {
        let cyclic_orders = self
            .orders
            .iter()
            .enumerate()
            .map(|(v, order)| {
                let names = order.iter().map(|&h| half_edge_name(&self.graph, h)).collect();
                (self.graph.vertex_ids()[v], names)
            })
            .collect();
        FatgraphFile {
            graph: self.graph.to_file(),
            cyclic_orders,
        }
    }

    pub fn from_file(f: &FatgraphFile) -> Result<Self, FatgraphError> {
        let graph = CoreGraph::from_file(&f.graph)?;
        let mut orders = vec![Vec::new(); graph.vertex_count()];
        let vindex: HashMap<u32, usize> = graph.vertex_ids().iter().enumerate().map(|(i, &v)| (v, i)).collect();
        for (vid, names) in &f.cyclic_orders {
            let v = *vindex
                .get(vid)
                .ok_or_else(|| FatgraphError::Malformed(format!("cyclic order for unknown vertex {vid}")))?;
            orders[v] = names
                .iter()
                .map(|s| parse_half_edge(&graph, s))
                .collect::<Result<_, _>>()?;
        }
        Fatgraph::new(graph, orders)
    }

    /// Half-edge by its file name, e.g. `"3+"`.
    pub fn half_edge(&self, name: &str) -> Result<HalfEdge, FatgraphError> {
        parse_half_edge(&self.graph, name)
    }

    pub fn half_edge_name(&self, h: HalfEdge) -> String {
        half_edge_name(&self.graph, h)
    }
}

fn half_edge_name(g: &CoreGraph, h: HalfEdge) -> String {
    let id = g.edges().get(h.edge).map_or(h.edge as u32, |e| e.id);
    format!("{}{}", id, if h.forward { '+' } else { '-' })
}

fn parse_half_edge(g: &CoreGraph, s: &str) -> Result<HalfEdge, FatgraphError> {
    let bad = || FatgraphError::Malformed(format!("bad half-edge {s:?}"));
    let (num, forward) = match (s.strip_suffix('+'), s.strip_suffix('-')) {
        (Some(num), _) => (num, true),
        (_, Some(num)) => (num, false),
        _ => return Err(bad()),
    };
    let id: u32 = num.parse().map_err(|_| bad())?;
    let edge = g.edges().iter().position(|e| e.id == id).ok_or_else(bad)?;
    Ok(HalfEdge { edge, forward })
}

/// File form: the graph format plus `cyclic_orders`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FatgraphFile {
    #[serde(flatten)]
    pub graph: GraphFile,
    pub cyclic_orders: BTreeMap<u32, Vec<String>>,
}

impl Serialize for Fatgraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Fatgraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = FatgraphFile::deserialize(d)?;
        Fatgraph::from_file(&f).map_err(serde::de::Error::custom)
    }
}

/// Boundary components of `S(y)` as cyclic words.
pub fn trace_boundary(y: &Fatgraph) -> Result<Vec<CyclicWord>, FatgraphError> {
    y.boundary_letters()
        .into_iter()
        .enumerate()
        .map(|(i, w)| CyclicWord::new(w).map_err(|_| FatgraphError::UnreducedBoundary(i)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurfaceInvariants {
    pub chi: i64,
    pub genus: i64,
    pub boundary: usize,
}

impl fmt::Display for SurfaceInvariants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "chi = {}, genus = {}, boundary components = {}", self.chi, self.genus, self.boundary)
    }
}

/// `chi = V - E = 2 - 2g - b` for the fattened surface.
pub fn euler_and_genus(y: &Fatgraph) -> Result<SurfaceInvariants, FatgraphError> {
    if !y.graph.is_connected() {
        return Err(FatgraphError::DisconnectedFatgraph);
    }
    let chi = y.euler_characteristic();
    let b = y.boundary_cycles().len();
    Ok(SurfaceInvariants {
        chi,
        genus: (2 - chi - b as i64) / 2,
        boundary: b,
    })
}

fn unique_lifts(words: &[CyclicWord], z: &CoreGraph) -> Result<Vec<usize>, FatgraphError> {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let r = lifts_of_loop(w, z);
            match r.lifts.len() {
                0 => Err(FatgraphError::NoLift {
                    component: i,
                    word: w.to_string(),
                }),
                1 => Ok(r.lifts[0]),
                k => Err(FatgraphError::AmbiguousLift {
                    component: i,
                    word: w.to_string(),
                    lifts: k,
                }),
            }
        })
        .collect()
}

/// Starting vertex in `z` of the unique lift of each traced boundary word.
pub fn check_boundary_in_z(y: &Fatgraph, z: &CoreGraph) -> Result<Vec<usize>, FatgraphError> {
    unique_lifts(&trace_boundary(y)?, z)
}

/// Boundary position: the corner before letter `index` of component `component`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BoundaryPosition {
    pub component: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceChecks {
    pub folded: bool,
    pub boundary_in_z: bool,
    pub f_folded: bool,
    pub incompressible: bool,
}

impl PieceChecks {
    pub fn all(&self) -> bool {
        self.folded && self.boundary_in_z && self.f_folded && self.incompressible
    }
}

/// A fatgraph together with the lift of its boundary into a target core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfacePiece {
    pub fatgraph: Fatgraph,
    /// Canonical boundary words, in the order fixed by `boundary_starts`.
    pub boundary: Vec<CyclicWord>,
    /// For each boundary component, the half-edge at canonical position 0.
    pub boundary_starts: Vec<HalfEdge>,
    pub target_core: CoreGraph,
    /// Start vertex (index into `target_core`) of each boundary lift.
    pub boundary_lifts: Vec<usize>,
    pub f_vertices: Vec<BoundaryPosition>,
    /// The edge-group element each boundary component represents, if known.
    pub edge_words: Option<Vec<Word>>,
    pub checks: PieceChecks,
}

impl SurfacePiece {
    /// Traces the boundary from the given starts, lifts it to `z` and runs
    /// every check. The starts must hit each boundary cycle exactly once.
    pub fn assemble(
        fatgraph: Fatgraph,
        starts: Vec<HalfEdge>,
        target_core: CoreGraph,
        edge_words: Option<Vec<Word>>,
    ) -> Result<SurfacePiece, FatgraphError> {
        let total = fatgraph.boundary_cycles().len();
        if starts.len() != total {
            return Err(FatgraphError::Malformed(format!(
                "{} boundary starts for {} boundary components",
                starts.len(),
                total
            )));
        }
        if let Some(ws) = &edge_words {
            if ws.len() != total {
                return Err(FatgraphError::Malformed("one edge word per boundary component expected".into()));
            }
        }
        let mut owner = HashMap::new();
        let mut boundary = Vec::with_capacity(total);
        let mut canonical_starts = Vec::with_capacity(total);
        for (c, &h) in starts.iter().enumerate() {
            if h.edge >= fatgraph.graph.edge_count() {
                return Err(FatgraphError::Malformed(format!("boundary start {c} out of range")));
            }
            let cycle = fatgraph.boundary_cycle(h);
            for &g in &cycle {
                if owner.insert(g, c).is_some() {
                    return Err(FatgraphError::Malformed(format!("boundary start {c} repeats a boundary cycle")));
                }
            }
            let letters: Vec<Letter> = cycle.iter().map(|&g| fatgraph.graph.letter(g)).collect();
            let (w, r) = CyclicWord::with_offset(letters).map_err(|_| FatgraphError::UnreducedBoundary(c))?;
            boundary.push(w);
            canonical_starts.push(cycle[r]);
        }
        let boundary_lifts = unique_lifts(&boundary, &target_core)?;
        let mut piece = SurfacePiece {
            fatgraph,
            boundary,
            boundary_starts: canonical_starts,
            target_core,
            boundary_lifts,
            f_vertices: Vec::new(),
            edge_words,
            checks: PieceChecks {
                folded: false,
                boundary_in_z: true,
                f_folded: false,
                incompressible: false,
            },
        };
        piece.checks.folded = is_folded(piece.fatgraph.graph());
        piece.f_vertices = locate_f_vertices(&piece)?;
        piece.checks.f_folded = is_f_folded(&piece)?;
        piece.checks.incompressible = verify_incompressible(&piece)?;
        Ok(piece)
    }

    pub fn boundary_cycle(&self, component: usize) -> Vec<HalfEdge> {
        self.fatgraph.boundary_cycle(self.boundary_starts[component])
    }

    /// Fatgraph vertex at a boundary position.
    pub fn vertex_at(&self, p: BoundaryPosition) -> usize {
        let cycle = self.boundary_cycle(p.component);
        self.fatgraph.graph.origin(cycle[p.index])
    }

    pub fn invariants(&self) -> Result<SurfaceInvariants, FatgraphError> {
        euler_and_genus(&self.fatgraph)
    }

    /// Recomputes the piece from its fatgraph, starts and target core.
    pub fn recheck(&self) -> Result<SurfacePiece, FatgraphError> {
        SurfacePiece::assemble(
            self.fatgraph.clone(),
            self.boundary_starts.clone(),
            self.target_core.clone(),
            self.edge_words.clone(),
        )
    }

    pub fn to_file(&self) -> PieceFile {
        PieceFile {
            fatgraph: self.fatgraph.to_file(),
            boundary: self.boundary.clone(),
            boundary_starts: self.boundary_starts.iter().map(|&h| self.fatgraph.half_edge_name(h)).collect(),
            target_core: self.target_core.to_file(),
            boundary_lifts: self
                .boundary_lifts
                .iter()
                .map(|&v| self.target_core.vertex_ids()[v])
                .collect(),
            f_vertices: self.f_vertices.clone(),
            edge_words: self.edge_words.clone(),
            checks: self.checks,
        }
    }

    /// Loads the stored fields as they are; use [`SurfacePiece::recheck`] to
    /// recompute them.
    pub fn from_file(f: &PieceFile) -> Result<SurfacePiece, FatgraphError> {
        let fatgraph = Fatgraph::from_file(&f.fatgraph)?;
        let target_core = CoreGraph::from_file(&f.target_core)?;
        let boundary_starts = f
            .boundary_starts
            .iter()
            .map(|s| fatgraph.half_edge(s))
            .collect::<Result<_, _>>()?;
        let index: HashMap<u32, usize> = target_core.vertex_ids().iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let boundary_lifts = f
            .boundary_lifts
            .iter()
            .map(|v| {
                index
                    .get(v)
                    .copied()
                    .ok_or_else(|| FatgraphError::Malformed(format!("lift vertex {v} not in target core")))
            })
            .collect::<Result<_, _>>()?;
        Ok(SurfacePiece {
            fatgraph,
            boundary: f.boundary.clone(),
            boundary_starts,
            target_core,
            boundary_lifts,
            f_vertices: f.f_vertices.clone(),
            edge_words: f.edge_words.clone(),
            checks: f.checks,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceFile {
    pub fatgraph: FatgraphFile,
    pub boundary: Vec<CyclicWord>,
    pub boundary_starts: Vec<String>,
    pub target_core: GraphFile,
    pub boundary_lifts: Vec<u32>,
    pub f_vertices: Vec<BoundaryPosition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_words: Option<Vec<Word>>,
    pub checks: PieceChecks,
}

impl Serialize for SurfacePiece {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SurfacePiece {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let f = PieceFile::deserialize(d)?;
        SurfacePiece::from_file(&f).map_err(serde::de::Error::custom)
    }
}

/// Target-core vertex visited at each boundary position.
fn lifted_vertices(piece: &SurfacePiece) -> Result<Vec<Vec<usize>>, FatgraphError> {
    if piece.boundary_lifts.len() != piece.boundary.len() {
        return Err(FatgraphError::RigidityRequired);
    }
    let t = piece.target_core.transitions();
    piece
        .boundary
        .iter()
        .zip(&piece.boundary_lifts)
        .map(|(w, &s)| {
            let mut out = Vec::with_capacity(w.len());
            let mut v = s;
            for &x in w.letters() {
                out.push(v);
                v = t.step(v, x).ok_or(FatgraphError::RigidityRequired)?;
            }
            if v != s {
                return Err(FatgraphError::RigidityRequired);
            }
            Ok(out)
        })
        .collect()
}

/// Boundary positions lying over vertices of valence at least 3 in the target.
pub fn locate_f_vertices(piece: &SurfacePiece) -> Result<Vec<BoundaryPosition>, FatgraphError> {
    let valence = piece.target_core.valence();
    let lifted = lifted_vertices(piece)?;
    let mut out = Vec::new();
    for (c, vs) in lifted.iter().enumerate() {
        for (i, &v) in vs.iter().enumerate() {
            if valence[v] >= 3 {
                out.push(BoundaryPosition { component: c, index: i });
            }
        }
    }
    Ok(out)
}

/// Every f-vertex sits at its own 2-valent fatgraph vertex.
pub fn is_f_folded(piece: &SurfacePiece) -> Result<bool, FatgraphError> {
    let fs = locate_f_vertices(piece)?;
    let valence = piece.fatgraph.graph.valence();
    let cycles: Vec<Vec<HalfEdge>> = (0..piece.boundary.len()).map(|c| piece.boundary_cycle(c)).collect();
    let mut used = HashSet::new();
    for p in fs {
        let v = piece.fatgraph.graph.origin(cycles[p.component][p.index]);
        if valence[v] != 2 || !used.insert(v) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Fiber-product check of boundary incompressibility: in the core of
/// `Y x Z`, each component meeting a boundary lift must have rank at most 1,
/// and a rank-1 component must be exactly that lift.
pub fn verify_incompressible(piece: &SurfacePiece) -> Result<bool, FatgraphError> {
    let y = piece.fatgraph.graph();
    let z = &piece.target_core;
    let lifted = lifted_vertices(piece)?;
    let p = fiber_product(y, z);
    let nz = z.vertex_count();
    let edge_index: HashMap<(usize, usize), usize> = p.edge_pairs.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let t = z.transitions();
    let k = core(&p.graph, false);
    let comps = k.components();
    let mut comp_of = HashMap::new();
    let mut comp_edges: Vec<HashSet<usize>> = vec![HashSet::new(); comps.len()];
    for (ci, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of.insert(k.vertex_ids()[v] as usize, ci);
        }
    }
    for e in k.edges() {
        comp_edges[comp_of[&(k.vertex_ids()[e.src] as usize)]].insert(e.id as usize);
    }
    let ranks: Vec<usize> = comps
        .iter()
        .zip(&comp_edges)
        .map(|(c, es)| es.len() + 1 - c.len())
        .collect();
    for (c, vs) in lifted.iter().enumerate() {
        let cycle = piece.boundary_cycle(c);
        let mut lift_edges = HashSet::new();
        for (i, &h) in cycle.iter().enumerate() {
            let zh = t.half_edge(vs[i], y.letter(h)).ok_or(FatgraphError::RigidityRequired)?;
            lift_edges.insert(edge_index[&(h.edge, zh.edge)]);
        }
        let start = y.origin(cycle[0]) * nz + vs[0];
        let Some(&ci) = comp_of.get(&start) else {
            return Ok(false);
        };
        match ranks[ci] {
            0 => {}
            1 => {
                if lift_edges.len() != cycle.len() || lift_edges != comp_edges[ci] {
                    return Ok(false);
                }
            }
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// A boundary component of one piece of a glued surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BoundaryRef {
    pub piece: usize,
    pub component: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckItem {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        CheckItem {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedSurfaceCertificate {
    pub pieces: Vec<SurfacePiece>,
    pub pairing: Vec<(BoundaryRef, BoundaryRef)>,
    pub chi: i64,
    pub genus: i64,
    pub checklist: Vec<CheckItem>,
}

impl ClosedSurfaceCertificate {
    pub fn is_valid(&self) -> bool {
        self.checklist.iter().all(|c| c.passed)
    }
}

fn pairing_problem(pieces: &[SurfacePiece], pairing: &[(BoundaryRef, BoundaryRef)]) -> Option<FatgraphError> {
    let mut hits: HashMap<BoundaryRef, usize> = HashMap::new();
    for &(a, b) in pairing {
        for r in [a, b] {
            if r.piece >= pieces.len() || r.component >= pieces[r.piece].boundary.len() {
                return Some(FatgraphError::UnmatchedBoundary {
                    piece: r.piece,
                    component: r.component,
                });
            }
            *hits.entry(r).or_insert(0) += 1;
        }
    }
    for (p, piece) in pieces.iter().enumerate() {
        for c in 0..piece.boundary.len() {
            let r = BoundaryRef { piece: p, component: c };
            if hits.get(&r) != Some(&1) {
                return Some(FatgraphError::UnmatchedBoundary { piece: p, component: c });
            }
        }
    }
    None
}

fn words_match(pieces: &[SurfacePiece], a: BoundaryRef, b: BoundaryRef) -> Result<(), FatgraphError> {
    let pa = &pieces[a.piece];
    let pb = &pieces[b.piece];
    let ok = match (&pa.edge_words, &pb.edge_words) {
        (Some(x), Some(y)) => x[a.component] == y[b.component].inverse(),
        _ => pa.boundary[a.component] == pb.boundary[b.component].inverse(),
    };
    if ok {
        Ok(())
    } else {
        let name = |p: &SurfacePiece, c: usize| match &p.edge_words {
            Some(ws) => ws[c].to_string(),
            None => p.boundary[c].to_string(),
        };
        Err(FatgraphError::WordMismatch(name(pa, a.component), name(pb, b.component)))
    }
}

/// Every verification outcome for a glued surface, without failing early.
/// Piece checks are taken from the pieces as given.
pub fn glue_checklist(pieces: &[SurfacePiece], pairing: &[(BoundaryRef, BoundaryRef)]) -> Vec<CheckItem> {
    let mut out = Vec::new();
    let mut chi = 0;
    for (i, p) in pieces.iter().enumerate() {
        let c = p.checks;
        out.push(CheckItem::new(format!("piece{i}.folded"), c.folded, ""));
        out.push(CheckItem::new(format!("piece{i}.boundary_in_z"), c.boundary_in_z, ""));
        out.push(CheckItem::new(
            format!("piece{i}.f_folded"),
            c.f_folded,
            format!("{} f-vertices", p.f_vertices.len()),
        ));
        out.push(CheckItem::new(format!("piece{i}.incompressible"), c.incompressible, ""));
        let connected = p.fatgraph.graph().is_connected();
        out.push(CheckItem::new(format!("piece{i}.connected"), connected, ""));
        let x = p.fatgraph.euler_characteristic();
        chi += x;
        out.push(CheckItem::new(format!("piece{i}.negative_euler"), x < 0, format!("chi = {x}")));
    }
    let unmatched = pairing_problem(pieces, pairing);
    out.push(CheckItem::new(
        "pairing.complete",
        unmatched.is_none(),
        unmatched.as_ref().map_or(String::new(), |e| e.to_string()),
    ));
    let mismatch = if unmatched.is_none() {
        pairing.iter().find_map(|&(a, b)| words_match(pieces, a, b).err())
    } else {
        None
    };
    out.push(CheckItem::new(
        "pairing.words",
        unmatched.is_none() && mismatch.is_none(),
        mismatch.map_or(String::new(), |e| e.to_string()),
    ));
    out.push(CheckItem::new("euler.even", chi % 2 == 0, format!("chi = {chi}")));
    out
}

/// Glues pieces along the pairing into a closed surface certificate.
pub fn glue(
    pieces: Vec<SurfacePiece>,
    pairing: Vec<(BoundaryRef, BoundaryRef)>,
) -> Result<ClosedSurfaceCertificate, FatgraphError> {
    if let Some(e) = pairing_problem(&pieces, &pairing) {
        return Err(e);
    }
    for &(a, b) in &pairing {
        words_match(&pieces, a, b)?;
    }
    let checklist = glue_checklist(&pieces, &pairing);
    if let Some(c) = checklist.iter().find(|c| !c.passed) {
        return Err(FatgraphError::FailedCheck(c.name.clone()));
    }
    let chi: i64 = pieces.iter().map(|p| p.fatgraph.euler_characteristic()).sum();
    Ok(ClosedSurfaceCertificate {
        pieces,
        pairing,
        chi,
        genus: (2 - chi) / 2,
        checklist,
    })
}
