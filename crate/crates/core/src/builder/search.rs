//! Pairing search over the letters of a chain.
//!
//! Corner `c` is the corner after letter `c`; pairing letters `P <-> Q` links
//! corner `prv(Q)` to corner `P` around a vertex. The corners of a vertex form
//! a path while the vertex is incomplete. A path is feasible only if the
//! letters leaving its corners are distinct; when the last corner already
//! leaves along the letter that would close the path, closing is forced.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub(crate) const FREE: u32 = u32::MAX;

/// Letters of a chain laid out as disjoint cycles.
#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub lab: Vec<u8>,
    pub nxt: Vec<u32>,
    pub prv: Vec<u32>,
    pub comp: Vec<u32>,
    pub ncomp: usize,
    pub by_label: Vec<Vec<u32>>,
    /// Vertex valence bound: the alphabet size.
    pub max_outs: usize,
    /// Corners that must end at their own 2-valent vertex.
    pub marked: Vec<bool>,
}

impl Layout {
    pub fn new(components: &[Vec<u8>], alphabet_size: usize, marked: Vec<bool>) -> Layout {
        let mut lab = Vec::new();
        let mut nxt = Vec::new();
        let mut prv = Vec::new();
        let mut comp = Vec::new();
        for (ci, c) in components.iter().enumerate() {
            let base = lab.len() as u32;
            let m = c.len() as u32;
            for (i, &x) in c.iter().enumerate() {
                let i = i as u32;
                lab.push(x);
                nxt.push(base + (i + 1) % m);
                prv.push(base + (i + m - 1) % m);
                comp.push(ci as u32);
            }
        }
        let mut by_label = vec![Vec::new(); 64];
        for (p, &x) in lab.iter().enumerate() {
            by_label[x as usize].push(p as u32);
        }
        Layout {
            lab,
            nxt,
            prv,
            comp,
            ncomp: components.len(),
            by_label,
            max_outs: alphabet_size,
            marked,
        }
    }

    pub fn len(&self) -> usize {
        self.lab.len()
    }
}

/// Global conditions checked on complete pairings.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Requirements {
    pub connected: bool,
    pub hyperbolic: bool,
}

enum Check {
    Ok,
    Fail,
    Forced(u32, u32),
}

#[derive(Clone)]
pub(crate) struct State<'a> {
    pub lay: &'a Layout,
    pub pair: Vec<u32>,
    trail: Vec<u32>,
    queue: Vec<u32>,
}

impl<'a> State<'a> {
    pub fn new(lay: &'a Layout) -> Self {
        State {
            lay,
            pair: vec![FREE; lay.len()],
            trail: Vec::new(),
            queue: Vec::new(),
        }
    }

    pub fn paired(&self) -> usize {
        self.trail.len()
    }

    #[inline]
    fn pred(&self, c: u32) -> Option<u32> {
        match self.pair[c as usize] {
            FREE => None,
            q => Some(self.lay.prv[q as usize]),
        }
    }

    #[inline]
    fn succ(&self, c: u32) -> Option<u32> {
        match self.pair[self.lay.nxt[c as usize] as usize] {
            FREE => None,
            q => Some(q),
        }
    }

    fn check(&self, c: u32) -> Check {
        let lay = self.lay;
        let mut start = c;
        let mut steps = 0;
        let mut closed = false;
        while let Some(p) = self.pred(start) {
            start = p;
            if start == c {
                closed = true;
                break;
            }
            steps += 1;
            if steps > lay.max_outs {
                return Check::Fail;
            }
        }
        let mut seen = 0u64;
        let mut outs = 0;
        let mut cur = start;
        let mut last_out;
        let need = lay.lab[start as usize] ^ 1;
        loop {
            last_out = lay.lab[lay.nxt[cur as usize] as usize];
            let bit = 1u64 << last_out;
            if seen & bit != 0 {
                return Check::Fail;
            }
            seen |= bit;
            outs += 1;
            if outs > lay.max_outs {
                return Check::Fail;
            }
            match self.succ(cur) {
                Some(n) if n != start => cur = n,
                _ => break,
            }
        }
        if closed {
            return Check::Ok;
        }
        if seen & (1u64 << need) != 0 {
            if last_out == need {
                return Check::Forced(lay.nxt[cur as usize], start);
            }
            return Check::Fail;
        }
        if outs == lay.max_outs {
            return Check::Fail;
        }
        Check::Ok
    }

    fn link(&mut self, p: u32, q: u32) {
        self.pair[p as usize] = q;
        self.pair[q as usize] = p;
        self.trail.push(p);
        self.queue.push(self.lay.prv[p as usize]);
        self.queue.push(self.lay.prv[q as usize]);
    }

    /// Pairs `p` with `q` and propagates forced links. On `false` the state
    /// is inconsistent and must be rolled back with [`State::undo`].
    pub fn assign(&mut self, p: u32, q: u32) -> bool {
        let lay = self.lay;
        if p == q || self.pair[p as usize] != FREE || self.pair[q as usize] != FREE {
            return false;
        }
        if lay.lab[p as usize] != lay.lab[q as usize] ^ 1 {
            return false;
        }
        self.queue.clear();
        self.link(p, q);
        self.propagate()
    }

    fn propagate(&mut self) -> bool {
        while let Some(c) = self.queue.pop() {
            match self.check(c) {
                Check::Ok => {}
                Check::Fail => return false,
                Check::Forced(a, b) => {
                    if self.pair[a as usize] == b {
                        continue;
                    }
                    if self.pair[a as usize] != FREE || self.pair[b as usize] != FREE || a == b {
                        return false;
                    }
                    if self.lay.lab[a as usize] != self.lay.lab[b as usize] ^ 1 {
                        return false;
                    }
                    self.link(a, b);
                }
            }
        }
        true
    }

    pub fn mark(&self) -> usize {
        self.trail.len()
    }

    pub fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let p = self.trail.pop().unwrap();
            let q = self.pair[p as usize];
            self.pair[p as usize] = FREE;
            self.pair[q as usize] = FREE;
        }
    }

    /// Would pairing `p <-> q` pass the local checks?
    fn quick(&mut self, p: u32, q: u32) -> bool {
        self.pair[p as usize] = q;
        self.pair[q as usize] = p;
        let ok = !matches!(self.check(self.lay.prv[p as usize]), Check::Fail)
            && !matches!(self.check(self.lay.prv[q as usize]), Check::Fail);
        self.pair[p as usize] = FREE;
        self.pair[q as usize] = FREE;
        ok
    }

    /// Replaces the pairing with `pairs` (already consistent) and re-applies
    /// every forced link.
    pub fn load(&mut self, pairs: &[u32]) -> bool {
        self.pair.clear();
        self.pair.extend_from_slice(pairs);
        self.trail.clear();
        for (p, &q) in pairs.iter().enumerate() {
            if q != FREE && (p as u32) < q {
                self.trail.push(p as u32);
            }
        }
        self.queue.clear();
        self.queue.extend(0..self.lay.len() as u32);
        self.propagate()
    }

    /// Vertex of each corner on a complete pairing.
    pub fn corner_orbits(&self) -> (Vec<u32>, usize) {
        let n = self.lay.len();
        let mut vertex = vec![FREE; n];
        let mut count = 0;
        for c in 0..n {
            if vertex[c] != FREE {
                continue;
            }
            let mut cur = c as u32;
            while vertex[cur as usize] == FREE {
                vertex[cur as usize] = count;
                cur = self.pair[self.lay.nxt[cur as usize] as usize];
            }
            count += 1;
        }
        (vertex, count as usize)
    }

    fn satisfies(&self, req: Requirements) -> bool {
        let lay = self.lay;
        let (vertex, nv) = self.corner_orbits();
        let mut size = vec![0u32; nv];
        let mut marks = vec![0u32; nv];
        for c in 0..lay.len() {
            size[vertex[c] as usize] += 1;
            if lay.marked[c] {
                marks[vertex[c] as usize] += 1;
            }
        }
        if (0..nv).any(|v| marks[v] > 0 && (size[v] != 2 || marks[v] > 1)) {
            return false;
        }
        if req.hyperbolic && 2 * nv >= lay.len() {
            return false;
        }
        if req.connected && lay.ncomp > 1 {
            let mut parent: Vec<u32> = (0..lay.ncomp as u32).collect();
            fn find(p: &mut [u32], mut x: u32) -> u32 {
                while p[x as usize] != x {
                    p[x as usize] = p[p[x as usize] as usize];
                    x = p[x as usize];
                }
                x
            }
            let mut groups = lay.ncomp;
            for p in 0..lay.len() {
                let a = find(&mut parent, lay.comp[p]);
                let b = find(&mut parent, lay.comp[self.pair[p] as usize]);
                if a != b {
                    parent[a as usize] = b;
                    groups -= 1;
                }
            }
            if groups > 1 {
                return false;
            }
        }
        true
    }

    /// Length of the rectangle `p <-> q` would start: how far the pairing
    /// extends along both letters while labels keep matching. Runs longer
    /// than `cap` score `0` so they are tried last.
    fn run_length(&self, p: u32, q: u32, cap: usize) -> usize {
        let lay = self.lay;
        let free = |x: u32| self.pair[x as usize] == FREE;
        let mut k = 1;
        for forward in [true, false] {
            let (mut a, mut b) = (p, q);
            loop {
                let (a2, b2) = if forward {
                    (lay.nxt[a as usize], lay.prv[b as usize])
                } else {
                    (lay.prv[a as usize], lay.nxt[b as usize])
                };
                if a2 == b || a2 == q || a2 == p || b2 == p || b2 == q || !free(a2) || !free(b2) {
                    break;
                }
                if lay.lab[a2 as usize] != lay.lab[b2 as usize] ^ 1 {
                    break;
                }
                k += 1;
                if k > cap {
                    return 0;
                }
                a = a2;
                b = b2;
            }
        }
        k
    }
}

pub(crate) enum Outcome {
    Found,
    Infeasible,
    OutOfBudget,
}

/// Depth-first search with propagation, most-constrained-letter first.
pub(crate) struct Dfs<'s, 'a> {
    pub state: &'s mut State<'a>,
    pub rng: &'s mut ChaCha8Rng,
    pub budget: u64,
    pub nodes: u64,
    pub cap: usize,
    pub frontier_only: bool,
    pub req: Requirements,
    /// Deepest partial pairing seen, by number of pairs.
    pub best: Option<(usize, Vec<u32>)>,
    pub track_best: bool,
    pub cancel: &'s dyn Fn() -> bool,
}

struct OutOfBudget;

impl Dfs<'_, '_> {
    pub fn run(&mut self) -> Outcome {
        match self.rec() {
            Ok(true) => Outcome::Found,
            Ok(false) => Outcome::Infeasible,
            Err(OutOfBudget) => Outcome::OutOfBudget,
        }
    }

    fn choose(&mut self) -> Option<(u32, Vec<u32>)> {
        let lay = self.state.lay;
        let pair = &self.state.pair;
        let mut free: Vec<u32> = (0..lay.len() as u32).filter(|&p| pair[p as usize] == FREE).collect();
        if free.is_empty() {
            return Some((FREE, Vec::new()));
        }
        if self.frontier_only {
            let frontier: Vec<u32> = free
                .iter()
                .copied()
                .filter(|&p| {
                    pair[lay.nxt[p as usize] as usize] != FREE || pair[lay.prv[p as usize] as usize] != FREE
                })
                .collect();
            if !frontier.is_empty() {
                free = frontier;
            }
        }
        free.shuffle(self.rng);
        let mut best: Option<(u32, Vec<u32>)> = None;
        for &p in &free {
            let limit = best.as_ref().map_or(usize::MAX, |b| b.1.len());
            let mut cands = Vec::new();
            for &q in &lay.by_label[(lay.lab[p as usize] ^ 1) as usize] {
                if self.state.pair[q as usize] == FREE && self.state.quick(p, q) {
                    cands.push(q);
                    if cands.len() >= limit {
                        break;
                    }
                }
            }
            if cands.is_empty() {
                return None;
            }
            if cands.len() < limit {
                let one = cands.len() == 1;
                best = Some((p, cands));
                if one {
                    break;
                }
            }
        }
        best
    }

    fn rec(&mut self) -> Result<bool, OutOfBudget> {
        self.nodes += 1;
        if self.track_best {
            let depth = self.state.paired();
            if self.best.as_ref().map_or(true, |b| depth > b.0) {
                self.best = Some((depth, self.state.pair.clone()));
            }
        }
        if self.nodes > self.budget || (self.nodes % 256 == 0 && (self.cancel)()) {
            return Err(OutOfBudget);
        }
        let Some((p, mut cands)) = self.choose() else {
            return Ok(false);
        };
        if p == FREE {
            return Ok(self.state.satisfies(self.req));
        }
        cands.shuffle(self.rng);
        let cap = self.cap;
        let state = &*self.state;
        let mut scored: Vec<(usize, u32)> = cands.iter().map(|&q| (state.run_length(p, q, cap), q)).collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0));
        for (_, q) in scored {
            let mark = self.state.mark();
            if self.state.assign(p, q) && self.rec()? {
                return Ok(true);
            }
            self.state.undo(mark);
        }
        Ok(false)
    }
}

/// Search parameters for one attempt.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Effort {
    pub node_budget: u64,
    pub lns_rounds: usize,
    pub cap: usize,
    pub radius: usize,
}

/// One randomized attempt: depth-first search, then repair of the deepest
/// partial pairing by releasing neighbourhoods of the unpaired letters.
/// `locked` letters keep their initial partners throughout.
pub(crate) fn attempt(
    lay: &Layout,
    initial: &[u32],
    locked: &[bool],
    req: Requirements,
    effort: Effort,
    rng: &mut ChaCha8Rng,
    cancel: &dyn Fn() -> bool,
) -> Option<Vec<u32>> {
    let mut state = State::new(lay);
    if !state.load(initial) {
        return None;
    }
    let frontier_only = lay.len() > 40;
    let mut dfs = Dfs {
        state: &mut state,
        rng,
        budget: effort.node_budget,
        nodes: 0,
        cap: effort.cap,
        frontier_only,
        req,
        best: None,
        track_best: true,
        cancel,
    };
    match dfs.run() {
        Outcome::Found => return Some(state.pair.clone()),
        Outcome::Infeasible => return None,
        Outcome::OutOfBudget => {}
    }
    let (mut best_depth, mut best) = dfs.best.take().expect("root visited");
    let mut radius = effort.radius;
    for _ in 0..effort.lns_rounds {
        if cancel() {
            return None;
        }
        state.load(&best);
        let free: Vec<u32> = (0..lay.len() as u32).filter(|&p| state.pair[p as usize] == FREE).collect();
        let mut release = Vec::new();
        for &p in &free {
            let (mut a, mut b) = (p, p);
            for _ in 0..radius {
                a = lay.nxt[a as usize];
                b = lay.prv[b as usize];
                release.push(a);
                release.push(b);
            }
        }
        // A few random releases keep the repair from cycling.
        for _ in 0..free.len().max(1) {
            release.push(rng.gen_range(0..lay.len() as u32));
        }
        let mut pairs = state.pair.clone();
        for p in release {
            let q = pairs[p as usize];
            if q != FREE && !locked[p as usize] {
                pairs[p as usize] = FREE;
                pairs[q as usize] = FREE;
            }
        }
        if !state.load(&pairs) {
            continue;
        }
        let mut dfs = Dfs {
            state: &mut state,
            rng,
            budget: effort.node_budget,
            nodes: 0,
            cap: effort.cap,
            frontier_only,
            req,
            best: None,
            track_best: true,
            cancel,
        };
        let outcome = dfs.run();
        let found = dfs.best.take();
        match outcome {
            Outcome::Found => return Some(state.pair.clone()),
            Outcome::Infeasible => radius = (radius + 2).min(40),
            Outcome::OutOfBudget => radius = effort.radius.max(radius.saturating_sub(1)),
        }
        if let Some((d, pairs)) = found {
            if d + 2 * radius >= best_depth {
                best_depth = best_depth.max(d);
                best = pairs;
            }
        }
    }
    None
}

/// Complete search; `None` proves no pairing meets the requirements.
pub(crate) fn exhaustive(lay: &Layout, req: Requirements, rng: &mut ChaCha8Rng) -> Option<Vec<u32>> {
    let mut state = State::new(lay);
    let mut dfs = Dfs {
        state: &mut state,
        rng,
        budget: u64::MAX,
        nodes: 0,
        cap: usize::MAX,
        frontier_only: false,
        req,
        best: None,
        track_best: false,
        cancel: &|| false,
    };
    match dfs.run() {
        Outcome::Found => Some(state.pair.clone()),
        _ => None,
    }
}
