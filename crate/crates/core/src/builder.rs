//! Fatgraphs with prescribed boundary: a chain of cyclic words is cut into
//! letters, letters are paired with inverse letters, and the quotient is a
//! fatgraph whose boundary re-traces the chain.
//!
//! Marked positions (f-vertices) are first tagged: the letters around each
//! mark are glued to a disjoint inverse arc, which isolates the mark at a
//! 2-valent vertex. The remaining letters are paired by a randomized search.
//! Every result is re-verified from scratch.

mod search;

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fatgraph::{BoundaryPosition, Fatgraph, FatgraphError, SurfacePiece};
use crate::stallings::{lifts_of_loop, CoreGraph, HalfEdge};
use crate::words::{is_homologically_trivial, is_pseudorandom, Alphabet, CyclicWord, PseudorandomParams, PseudorandomReport};

use search::{Effort, Layout, Requirements, FREE};

/// Largest total chain length accepted by [`enumerate_pairings`].
pub const ORACLE_LIMIT: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuilderError {
    #[error("chain is not homologically trivial")]
    NotHomologicallyTrivial,
    #[error("no disjoint inverse arc to tag the mark at component {component}, position {index}")]
    TagInfeasible { component: usize, index: usize },
    #[error("search budget exhausted after {restarts} restarts (inconclusive)")]
    SearchExhausted { restarts: usize },
    #[error("no pairing satisfies the requirements")]
    Infeasible,
    #[error("chain of total length {0} is too large for enumeration (limit {ORACLE_LIMIT})")]
    TooLarge(usize),
    #[error("invalid chain: {0}")]
    InvalidChain(String),
    #[error("invalid pairing: {0}")]
    InvalidPairing(String),
    #[error("built piece failed verification: {0}")]
    VerificationFailed(String),
    #[error(transparent)]
    Boundary(#[from] FatgraphError),
}

/// Boundary words with marked positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    components: Vec<CyclicWord>,
    f_positions: BTreeSet<BoundaryPosition>,
    min_spacing: usize,
}

impl Chain {
    /// Checks that positions exist and that distinct clusters of marks are at
    /// least `min_spacing` apart. Marks at distance 1 form one cluster and
    /// are tagged together.
    pub fn new(
        components: Vec<CyclicWord>,
        f_positions: BTreeSet<BoundaryPosition>,
        min_spacing: usize,
    ) -> Result<Chain, BuilderError> {
        if components.is_empty() {
            return Err(BuilderError::InvalidChain("no components".into()));
        }
        if min_spacing < 2 {
            return Err(BuilderError::InvalidChain("min_spacing must be at least 2".into()));
        }
        for p in &f_positions {
            if p.component >= components.len() || p.index >= components[p.component].len() {
                return Err(BuilderError::InvalidChain(format!(
                    "mark ({}, {}) out of range",
                    p.component, p.index
                )));
            }
        }
        let chain = Chain {
            components,
            f_positions,
            min_spacing,
        };
        if let Some(d) = chain.spacing() {
            if d < min_spacing {
                return Err(BuilderError::InvalidChain(format!(
                    "marks {d} apart, closer than min_spacing {min_spacing}"
                )));
            }
        }
        Ok(chain)
    }

    pub fn unmarked(components: Vec<CyclicWord>) -> Chain {
        Chain::new(components, BTreeSet::new(), 2).expect("unmarked chains are valid")
    }

    /// Marks the positions whose lift to `z` passes a vertex of valence at
    /// least 3. Every component must lift uniquely.
    pub fn marked_by(components: Vec<CyclicWord>, z: &CoreGraph) -> Result<Chain, BuilderError> {
        let valence = z.valence();
        let t = z.transitions();
        let mut marks = BTreeSet::new();
        for (c, w) in components.iter().enumerate() {
            let r = lifts_of_loop(w, z);
            let start = match r.lifts.len() {
                0 => {
                    return Err(FatgraphError::NoLift {
                        component: c,
                        word: w.to_string(),
                    }
                    .into())
                }
                1 => r.lifts[0],
                k => {
                    return Err(FatgraphError::AmbiguousLift {
                        component: c,
                        word: w.to_string(),
                        lifts: k,
                    }
                    .into())
                }
            };
            let mut v = start;
            for (i, &x) in w.letters().iter().enumerate() {
                if valence[v] >= 3 {
                    marks.insert(BoundaryPosition { component: c, index: i });
                }
                v = t.step(v, x).expect("lift exists");
            }
        }
        let mut chain = Chain {
            components,
            f_positions: marks,
            min_spacing: 2,
        };
        chain.min_spacing = chain.spacing().unwrap_or(chain.total_length()).max(2);
        Ok(chain)
    }

    pub fn components(&self) -> &[CyclicWord] {
        &self.components
    }

    pub fn f_positions(&self) -> &BTreeSet<BoundaryPosition> {
        &self.f_positions
    }

    pub fn min_spacing(&self) -> usize {
        self.min_spacing
    }

    pub fn total_length(&self) -> usize {
        self.components.iter().map(|w| w.len()).sum()
    }

    /// Least cyclic distance between two clusters of marks on one component.
    pub fn spacing(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (c, w) in self.components.iter().enumerate() {
            let m = w.len();
            let starts: Vec<usize> = clusters(m, |i| self.is_marked(c, i)).iter().map(|r| r.0).collect();
            let ends: Vec<usize> = clusters(m, |i| self.is_marked(c, i))
                .iter()
                .map(|r| (r.0 + r.1 - 1) % m)
                .collect();
            if starts.len() < 2 {
                continue;
            }
            for k in 0..starts.len() {
                let next = starts[(k + 1) % starts.len()];
                let d = (next + m - ends[k]) % m;
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    fn is_marked(&self, component: usize, index: usize) -> bool {
        self.f_positions.contains(&BoundaryPosition { component, index })
    }

    fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.components.len());
        let mut n = 0;
        for w in &self.components {
            out.push(n);
            n += w.len();
        }
        out
    }

    fn alphabet_size(&self) -> usize {
        let top = self
            .components
            .iter()
            .flat_map(|w| w.letters())
            .map(|x| x.generator())
            .max()
            .unwrap_or(0);
        2 * (top + 1)
    }

    fn layout(&self, alphabet_size: usize) -> Layout {
        let offsets = self.offsets();
        let mut marked = vec![false; self.total_length()];
        for p in &self.f_positions {
            let m = self.components[p.component].len();
            // Position i is the corner after letter i - 1.
            marked[offsets[p.component] + (p.index + m - 1) % m] = true;
        }
        let comps: Vec<Vec<u8>> = self
            .components
            .iter()
            .map(|w| w.letters().iter().map(|x| x.code()).collect())
            .collect();
        Layout::new(&comps, alphabet_size, marked)
    }
}

/// Maximal cyclic runs of marked positions as `(start, length)`. A fully
/// marked cycle is one run starting at 0.
fn clusters(m: usize, marked: impl Fn(usize) -> bool) -> Vec<(usize, usize)> {
    let all: Vec<bool> = (0..m).map(&marked).collect();
    if all.iter().all(|&b| b) {
        return vec![(0, m)];
    }
    let mut out = Vec::new();
    for i in 0..m {
        if all[i] && !all[(i + m - 1) % m] {
            let mut len = 0;
            while all[(i + len) % m] {
                len += 1;
            }
            out.push((i, len));
        }
    }
    out
}

/// An involution on the letters of a chain, indexed by global position
/// (components laid end to end). Partial pairings leave letters unpaired.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pairing {
    partner: Vec<Option<usize>>,
}

impl Pairing {
    pub fn empty(len: usize) -> Pairing {
        Pairing {
            partner: vec![None; len],
        }
    }

    pub fn len(&self) -> usize {
        self.partner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partner.is_empty()
    }

    pub fn partner(&self, p: usize) -> Option<usize> {
        self.partner[p]
    }

    pub fn is_total(&self) -> bool {
        self.partner.iter().all(|q| q.is_some())
    }

    pub fn set(&mut self, p: usize, q: usize) {
        self.partner[p] = Some(q);
        self.partner[q] = Some(p);
    }

    /// Pairs `(p, q)` with `p < q`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.partner
            .iter()
            .enumerate()
            .filter_map(|(p, &q)| q.filter(|&q| p < q).map(|q| (p, q)))
            .collect()
    }

    fn to_raw(&self) -> Vec<u32> {
        self.partner.iter().map(|q| q.map_or(FREE, |q| q as u32)).collect()
    }

    fn from_raw(raw: &[u32]) -> Pairing {
        Pairing {
            partner: raw.iter().map(|&q| (q != FREE).then_some(q as usize)).collect(),
        }
    }
}

/// Glues the letters around every cluster of marks to a disjoint inverse arc
/// whose interior carries no mark.
pub fn tag_f_vertices<R: Rng + ?Sized>(chain: &Chain, rng: &mut R) -> Result<Pairing, BuilderError> {
    let offsets = chain.offsets();
    let total = chain.total_length();
    let mut pairing = Pairing::empty(total);
    let mut reserved = vec![false; total];
    // (component, first letter, number of marked corners)
    let mut arcs = Vec::new();
    for (c, w) in chain.components.iter().enumerate() {
        let m = w.len();
        // Corner after letter j is position j + 1.
        for (start, len) in clusters(m, |i| chain.is_marked(c, (i + 1) % m)) {
            if len + 1 > m {
                return Err(BuilderError::TagInfeasible {
                    component: c,
                    index: (start + 1) % m,
                });
            }
            for t in 0..=len {
                reserved[offsets[c] + (start + t) % m] = true;
            }
            arcs.push((c, start, len));
        }
    }
    let mut used = reserved.clone();
    for &(c, start, len) in &arcs {
        let w = &chain.components[c];
        let m = w.len();
        let arc: Vec<usize> = (0..=len).map(|t| offsets[c] + (start + t) % m).collect();
        let label = |p: usize, comp: usize| chain.components[comp].letters()[p - offsets[comp]];
        let mut options = Vec::new();
        for (c2, w2) in chain.components.iter().enumerate() {
            let m2 = w2.len();
            if len + 1 > m2 {
                continue;
            }
            for s in 0..m2 {
                let occ: Vec<usize> = (0..=len).map(|t| offsets[c2] + (s + t) % m2).collect();
                let fits = occ.iter().all(|&p| !used[p])
                    && (0..=len).all(|t| label(occ[t], c2) == label(arc[len - t], c).inverse())
                    && (0..len).all(|t| !chain.is_marked(c2, (s + t + 1) % m2));
                if fits {
                    options.push(occ);
                }
            }
        }
        let occ = options.choose(rng).ok_or(BuilderError::TagInfeasible {
            component: c,
            index: (start + 1) % m,
        })?;
        for t in 0..=len {
            pairing.set(arc[t], occ[len - t]);
            used[occ[len - t]] = true;
        }
    }
    Ok(pairing)
}

/// The quotient fatgraph of a total pairing, with the half-edge at canonical
/// position 0 of each chain component. Vertices are the corner cycles, so
/// the boundary re-traces the chain.
pub fn pairing_to_fatgraph(chain: &Chain, pairing: &Pairing) -> Result<(Fatgraph, Vec<HalfEdge>), BuilderError> {
    let total = chain.total_length();
    if pairing.len() != total {
        return Err(BuilderError::InvalidPairing(format!(
            "pairing has {} letters, chain has {}",
            pairing.len(),
            total
        )));
    }
    let lay = chain.layout(chain.alphabet_size());
    for p in 0..total {
        let q = pairing
            .partner(p)
            .ok_or_else(|| BuilderError::InvalidPairing(format!("letter {p} unpaired")))?;
        if q >= total || pairing.partner(q) != Some(p) || lay.lab[p] != lay.lab[q] ^ 1 {
            return Err(BuilderError::InvalidPairing(format!("letters {p} and {q} do not pair")));
        }
    }
    let partner = |p: usize| pairing.partner(p).unwrap();
    let nxt = |c: usize| lay.nxt[c] as usize;
    let prv = |c: usize| lay.prv[c] as usize;

    let mut vertex = vec![usize::MAX; total];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for c in 0..total {
        if vertex[c] != usize::MAX {
            continue;
        }
        let mut orbit = Vec::new();
        let mut cur = c;
        while vertex[cur] == usize::MAX {
            vertex[cur] = orbits.len();
            orbit.push(cur);
            cur = partner(nxt(cur));
        }
        orbits.push(orbit);
    }
    // One edge per pair, oriented along its positive letter.
    let mut edge_of = vec![usize::MAX; total];
    let mut edges = Vec::new();
    for p in 0..total {
        if lay.lab[p] & 1 == 0 {
            edge_of[p] = edges.len();
            edge_of[partner(p)] = edges.len();
            let x = crate::words::Letter::from_code(lay.lab[p]);
            edges.push((vertex[prv(p)], vertex[p], x));
        }
    }
    let graph = CoreGraph::new(orbits.len(), edges, None);
    let leaving = |p: usize| HalfEdge {
        edge: edge_of[p],
        forward: lay.lab[p] & 1 == 0,
    };
    let orders = orbits
        .iter()
        .map(|orbit| orbit.iter().map(|&c| leaving(nxt(c))).collect())
        .collect();
    let fatgraph = Fatgraph::new(graph, orders)?;
    let starts = chain.offsets().into_iter().map(leaving).collect();
    Ok((fatgraph, starts))
}

/// Every fixed-point-free involution pairing each letter with an inverse
/// letter. Exponential; for small chains only.
pub fn enumerate_pairings(chain: &Chain) -> Result<Vec<Pairing>, BuilderError> {
    let total = chain.total_length();
    if total > ORACLE_LIMIT {
        return Err(BuilderError::TooLarge(total));
    }
    let letters: Vec<u8> = chain
        .components
        .iter()
        .flat_map(|w| w.letters().iter().map(|x| x.code()))
        .collect();
    let mut out = Vec::new();
    let mut cur = Pairing::empty(total);
    fn rec(letters: &[u8], cur: &mut Pairing, out: &mut Vec<Pairing>) {
        let Some(p) = (0..letters.len()).find(|&p| cur.partner[p].is_none()) else {
            out.push(cur.clone());
            return;
        };
        for q in p + 1..letters.len() {
            if cur.partner[q].is_none() && letters[q] == letters[p] ^ 1 {
                cur.set(p, q);
                rec(letters, cur, out);
                cur.partner[p] = None;
                cur.partner[q] = None;
            }
        }
    }
    rec(&letters, &mut cur, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuilderConfig {
    pub seed: u64,
    /// Number of independent randomized attempts.
    pub restarts: usize,
    /// Search nodes per depth-first pass.
    pub node_budget: u64,
    /// Repair rounds per attempt after the first pass runs out of budget.
    pub lns_rounds: usize,
    pub min_spacing: usize,
    pub pseudorandom: PseudorandomParams,
    /// Reject disconnected quotients.
    pub require_connected: bool,
    /// Reject quotients with Euler characteristic `>= 0` (discs, annuli).
    pub require_hyperbolic: bool,
    /// Complete search without budget; for small chains.
    pub exhaustive: bool,
}

impl BuilderConfig {
    pub fn with_t(t: usize, epsilon: f64) -> Self {
        BuilderConfig {
            min_spacing: (4 * t).max(64),
            pseudorandom: PseudorandomParams::new(t, epsilon),
            ..Self::default()
        }
    }
}

impl Default for BuilderConfig {
    fn default() -> Self {
        BuilderConfig {
            seed: 0,
            restarts: 32,
            node_budget: 4000,
            lns_rounds: 400,
            min_spacing: 64,
            pseudorandom: PseudorandomParams::new(3, 0.5),
            require_connected: false,
            require_hyperbolic: false,
            exhaustive: false,
        }
    }
}

/// A verified piece with what the search learned on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub piece: SurfacePiece,
    pub pairing: Pairing,
    /// Index of the winning restart.
    pub restart: usize,
    pub admission: PseudorandomReport,
    /// Whether the marks respect the configured minimum spacing.
    pub spacing_ok: bool,
}

impl fmt::Display for BuildReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "chi = {}, {} f-vertices, restart {}",
            self.piece.fatgraph.euler_characteristic(),
            self.piece.f_vertices.len(),
            self.restart
        )
    }
}

/// SplitMix64 finalizer; derives independent stream seeds.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn requirements(config: &BuilderConfig) -> Requirements {
    Requirements {
        connected: config.require_connected,
        hyperbolic: config.require_hyperbolic,
    }
}

fn check_admissible(chain: &Chain) -> Result<(), BuilderError> {
    let alphabet = Alphabet::new(chain.alphabet_size() / 2).map_err(|e| BuilderError::InvalidChain(e.to_string()))?;
    if !is_homologically_trivial(chain.components.iter().map(|w| w.letters()), alphabet) {
        return Err(BuilderError::NotHomologicallyTrivial);
    }
    Ok(())
}

fn search_pairing(chain: &Chain, alphabet_size: usize, config: &BuilderConfig) -> Result<(Pairing, usize), BuilderError> {
    let lay = chain.layout(alphabet_size);
    let req = requirements(config);
    if config.exhaustive {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, 0));
        return search::exhaustive(&lay, req, &mut rng)
            .map(|raw| (Pairing::from_raw(&raw), 0))
            .ok_or(BuilderError::Infeasible);
    }
    let effort = Effort {
        node_budget: config.node_budget,
        lns_rounds: config.lns_rounds,
        cap: 12,
        radius: 3,
    };
    // Lowest restart index known to have succeeded; higher ones give up.
    let winner = AtomicUsize::new(usize::MAX);
    let run = |r: usize| -> Result<Option<Vec<u32>>, BuilderError> {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.seed, r as u64));
        let tags = tag_f_vertices(chain, &mut rng)?;
        let raw = tags.to_raw();
        let locked: Vec<bool> = raw.iter().map(|&q| q != FREE).collect();
        let cancel = || winner.load(Ordering::Relaxed) < r;
        let found = search::attempt(&lay, &raw, &locked, req, effort, &mut rng, &cancel);
        if found.is_some() {
            winner.fetch_min(r, Ordering::Relaxed);
        }
        Ok(found)
    };
    let batch = rayon::current_num_threads().max(1);
    let mut first_err = None;
    let mut r0 = 0;
    while r0 < config.restarts {
        let r1 = (r0 + batch).min(config.restarts);
        let results: Vec<_> = (r0..r1).into_par_iter().map(run).collect();
        for (i, res) in results.into_iter().enumerate() {
            match res {
                Ok(Some(raw)) => return Ok((Pairing::from_raw(&raw), r0 + i)),
                Ok(None) => {}
                Err(e) => {
                    first_err.get_or_insert(e);
                }
            }
        }
        r0 = r1;
    }
    match first_err {
        Some(e @ BuilderError::TagInfeasible { .. }) => Err(e),
        _ => Err(BuilderError::SearchExhausted {
            restarts: config.restarts,
        }),
    }
}

fn verified_piece(chain: &Chain, pairing: &Pairing, z: &CoreGraph) -> Result<SurfacePiece, BuilderError> {
    let (fatgraph, starts) = pairing_to_fatgraph(chain, pairing)?;
    let piece = SurfacePiece::assemble(fatgraph, starts, z.clone(), None)?;
    if piece.boundary != chain.components {
        return Err(BuilderError::VerificationFailed("boundary differs from chain".into()));
    }
    let c = piece.checks;
    for (name, ok) in [
        ("folded", c.folded),
        ("boundary_in_z", c.boundary_in_z),
        ("f_folded", c.f_folded),
        ("incompressible", c.incompressible),
    ] {
        if !ok {
            return Err(BuilderError::VerificationFailed(name.into()));
        }
    }
    Ok(piece)
}

/// Builds a folded, f-folded piece with boundary exactly `chain`, lifting to
/// `z`. Failure to find one within budget is reported as
/// [`BuilderError::SearchExhausted`], which proves nothing.
pub fn build_f_folded(chain: &Chain, z: &CoreGraph, config: &BuilderConfig) -> Result<BuildReport, BuilderError> {
    check_admissible(chain)?;
    for (c, w) in chain.components.iter().enumerate() {
        let n = lifts_of_loop(w, z).lifts.len();
        if n == 0 {
            return Err(FatgraphError::NoLift {
                component: c,
                word: w.to_string(),
            }
            .into());
        }
        if n > 1 {
            return Err(FatgraphError::AmbiguousLift {
                component: c,
                word: w.to_string(),
                lifts: n,
            }
            .into());
        }
    }
    let alphabet_size = chain.alphabet_size().max(z_alphabet_size(z));
    let admission = is_pseudorandom(
        &chain.components,
        Alphabet::new(alphabet_size / 2).map_err(|e| BuilderError::InvalidChain(e.to_string()))?,
        config.pseudorandom,
    );
    let (pairing, restart) = search_pairing(chain, alphabet_size, config)?;
    let piece = verified_piece(chain, &pairing, z)?;
    Ok(BuildReport {
        piece,
        pairing,
        restart,
        admission,
        spacing_ok: chain.spacing().map_or(true, |d| d >= config.min_spacing),
    })
}

fn z_alphabet_size(z: &CoreGraph) -> usize {
    z.edges().iter().map(|e| 2 * (e.label.generator() + 1)).max().unwrap_or(2)
}

/// Oracle builder: the first enumerated pairing whose quotient is folded,
/// meets the requirements and verifies.
pub fn build_by_enumeration(chain: &Chain, z: &CoreGraph, config: &BuilderConfig) -> Result<BuildReport, BuilderError> {
    check_admissible(chain)?;
    let alphabet_size = chain.alphabet_size().max(z_alphabet_size(z));
    let admission = is_pseudorandom(
        &chain.components,
        Alphabet::new(alphabet_size / 2).map_err(|e| BuilderError::InvalidChain(e.to_string()))?,
        config.pseudorandom,
    );
    for pairing in enumerate_pairings(chain)? {
        let (fatgraph, _) = pairing_to_fatgraph(chain, &pairing)?;
        if !quotient_acceptable(&fatgraph, chain, &pairing, config) {
            continue;
        }
        let piece = verified_piece(chain, &pairing, z)?;
        return Ok(BuildReport {
            piece,
            pairing,
            restart: 0,
            admission,
            spacing_ok: chain.spacing().map_or(true, |d| d >= config.min_spacing),
        });
    }
    Err(BuilderError::Infeasible)
}

fn quotient_acceptable(y: &Fatgraph, chain: &Chain, pairing: &Pairing, config: &BuilderConfig) -> bool {
    if !crate::stallings::is_folded(y.graph()) {
        return false;
    }
    if config.require_connected && !y.graph().is_connected() {
        return false;
    }
    if config.require_hyperbolic && y.euler_characteristic() >= 0 {
        return false;
    }
    // Marks must sit alone at 2-valent vertices.
    let lay = chain.layout(chain.alphabet_size());
    let raw = pairing.to_raw();
    let mut state = search::State::new(&lay);
    state.pair = raw;
    let (vertex, nv) = state.corner_orbits();
    let mut size = vec![0; nv];
    let mut marks = vec![0; nv];
    for c in 0..lay.len() {
        size[vertex[c] as usize] += 1;
        if lay.marked[c] {
            marks[vertex[c] as usize] += 1;
        }
    }
    (0..nv).all(|v| marks[v] == 0 || (size[v] == 2 && marks[v] == 1))
}

/// Is there any pairing whose quotient is folded? Decided by enumeration.
pub fn has_folded_quotient(chain: &Chain) -> Result<bool, BuilderError> {
    for pairing in enumerate_pairings(chain)? {
        let (y, _) = pairing_to_fatgraph(chain, &pairing)?;
        if crate::stallings::is_folded(y.graph()) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// The generator used by restart `restart` of a search seeded with `seed`.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, restart as u64))
}
