//! Random one-edge graphs of free groups and the end-to-end pipeline:
//! image cores, malnormality and rigidity, a surface piece on each side of
//! the edge, and the glued closed surface.

use std::collections::HashSet;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::{build_f_folded, mix_seed, BuilderConfig, BuilderError, Chain};
use crate::fatgraph::{glue_checklist, BoundaryRef, CheckItem, ClosedSurfaceCertificate, FatgraphError, SurfacePiece};
use crate::stallings::{core, fold, is_malnormal_family, lifts_of_loop, rose_of_words, CoreGraph, MalnormalWitness};
use crate::words::{
    cyclic_reduce, is_homologically_trivial, is_pseudorandom, reduce, sample_reduced_word, Alphabet, CyclicWord,
    Letter, PseudorandomParams, PseudorandomReport, Word,
};

pub const SPEC_FORMAT: &str = "randsurf-spec/1";
pub const CERTIFICATE_FORMAT: &str = "randsurf-certificate/1";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("rank drop on side {side}: image core has rank {rank}, expected {expected}")]
    RankDrop { side: usize, rank: usize, expected: usize },
    #[error("malnormality failed ({family}): {witness:?}")]
    MalnormalityFailed {
        family: String,
        witness: Option<MalnormalWitness>,
    },
    #[error("rigidity failed on side {side}: {word} has {lifts} lifts")]
    RigidityFailed { side: usize, word: String, lifts: usize },
    #[error("image chain on side {side} is not homologically trivial")]
    NotHomologicallyTrivial { side: usize },
    #[error("search exhausted on side {side} after {restarts} restarts (inconclusive)")]
    SearchExhausted { side: usize, restarts: usize },
    #[error("builder failed on side {side}: {source}")]
    Builder { side: usize, source: BuilderError },
    #[error("gluing failed: {0}")]
    Glue(#[from] FatgraphError),
}

impl ModelError {
    /// Short name of the pipeline stage that failed.
    pub fn stage(&self) -> &'static str {
        match self {
            ModelError::InvalidSpec(_) => "spec",
            ModelError::RankDrop { .. } => "rank",
            ModelError::MalnormalityFailed { .. } => "malnormal",
            ModelError::RigidityFailed { .. } => "rigid",
            ModelError::NotHomologicallyTrivial { .. } => "homology",
            ModelError::SearchExhausted { .. } => "search",
            ModelError::Builder { .. } => "builder",
            ModelError::Glue(_) => "glue",
        }
    }
}

/// Parameters of a random homomorphism `F_k -> F_l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RandomHomSpec {
    pub k: usize,
    pub l: usize,
    pub n: usize,
    pub seed: u64,
}

impl RandomHomSpec {
    pub fn new(k: usize, l: usize, n: usize, seed: u64) -> Result<Self, ModelError> {
        if k < 1 || l < 2 || n < 1 || l > crate::words::MAX_RANK || k > crate::words::MAX_RANK {
            return Err(ModelError::InvalidSpec(format!(
                "need k >= 1, l >= 2, n >= 1 (got k = {k}, l = {l}, n = {n})"
            )));
        }
        Ok(RandomHomSpec { k, l, n, seed })
    }
}

/// `k` independent uniform reduced words of length `n`.
pub fn sample_homomorphism(spec: &RandomHomSpec) -> Vec<Word> {
    let alphabet = Alphabet::new(spec.l).expect("validated rank");
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.k).map(|_| sample_reduced_word(spec.n, alphabet, &mut rng)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Amalgam,
    Hnn,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Provenance {
    Explicit,
    Sampled { n: usize, seed: u64 },
}

/// `F_1 *_G F_2` or `F *_G` with `G = F_k` and vertex groups of rank `l`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphOfGroupsSpec {
    pub format: String,
    pub kind: Kind,
    pub rank_k: usize,
    pub rank_l: usize,
    pub phi1: Vec<Word>,
    pub phi2: Vec<Word>,
    pub provenance: Provenance,
}

impl GraphOfGroupsSpec {
    pub fn explicit(kind: Kind, rank_l: usize, phi1: Vec<Word>, phi2: Vec<Word>) -> Result<Self, ModelError> {
        let spec = GraphOfGroupsSpec {
            format: SPEC_FORMAT.into(),
            kind,
            rank_k: phi1.len(),
            rank_l,
            phi1,
            phi2,
            provenance: Provenance::Explicit,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Both maps sampled from streams derived from `seed`.
    pub fn sample(kind: Kind, k: usize, l: usize, n: usize, seed: u64) -> Result<Self, ModelError> {
        let side = |s| RandomHomSpec::new(k, l, n, mix_seed(seed, s));
        let phi1 = sample_homomorphism(&side(1)?);
        let phi2 = sample_homomorphism(&side(2)?);
        Ok(GraphOfGroupsSpec {
            format: SPEC_FORMAT.into(),
            kind,
            rank_k: k,
            rank_l: l,
            phi1,
            phi2,
            provenance: Provenance::Sampled { n, seed },
        })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.format != SPEC_FORMAT {
            return Err(ModelError::InvalidSpec(format!("unknown format {:?}", self.format)));
        }
        RandomHomSpec::new(self.rank_k, self.rank_l, 1, 0)?;
        let alphabet = self.vertex_alphabet();
        for (name, phi) in [("phi1", &self.phi1), ("phi2", &self.phi2)] {
            if phi.len() != self.rank_k {
                return Err(ModelError::InvalidSpec(format!(
                    "{name} has {} images, expected {}",
                    phi.len(),
                    self.rank_k
                )));
            }
            for w in phi {
                if w.is_empty() {
                    return Err(ModelError::InvalidSpec(format!("{name} has a trivial image")));
                }
                alphabet.check(w).map_err(|e| ModelError::InvalidSpec(format!("{name}: {e}")))?;
            }
        }
        Ok(())
    }

    pub fn vertex_alphabet(&self) -> Alphabet {
        Alphabet::new(self.rank_l).expect("validated rank")
    }

    pub fn edge_alphabet(&self) -> Alphabet {
        Alphabet::new(self.rank_k).expect("validated rank")
    }

    pub fn images(&self, side: usize) -> &[Word] {
        if side == 1 {
            &self.phi1
        } else {
            &self.phi2
        }
    }
}

/// Image of `g` under the map sending generator `i` to `images[i]`.
pub fn apply(images: &[Word], g: &Word) -> Word {
    reduce(g.letters().iter().flat_map(|x| {
        let w = &images[x.generator()];
        let v: Vec<Letter> = if x.is_inverse() {
            w.inverse().letters().to_vec()
        } else {
            w.letters().to_vec()
        };
        v
    }))
}

/// Folded image of the rose: `y` keeps the basepoint, `z` does not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageCore {
    pub y: CoreGraph,
    pub z: CoreGraph,
    pub rank: usize,
    /// Longest common prefix among the `2k` rays leaving the basepoint.
    pub overlap: usize,
}

fn common_prefix(a: &[Letter], b: &[Letter]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Depth of the folding at the basepoint: the longest common prefix among
/// the images and their inverses.
pub fn folding_overlap(images: &[Word]) -> usize {
    let rays: Vec<Word> = images.iter().flat_map(|w| [w.clone(), w.inverse()]).collect();
    let mut best = 0;
    for i in 0..rays.len() {
        for j in i + 1..rays.len() {
            best = best.max(common_prefix(rays[i].letters(), rays[j].letters()));
        }
    }
    best
}

/// Folds the rose on `images`. Fails with `RankDrop` when folding is not a
/// homotopy equivalence.
pub fn image_core(images: &[Word]) -> Result<ImageCore, ModelError> {
    let rose = rose_of_words(images).map_err(|e| ModelError::InvalidSpec(e.to_string()))?;
    let folded = fold(&rose);
    let y = core(&folded, true);
    let z = core(&folded, false);
    let rank = y.betti();
    if rank < images.len() {
        return Err(ModelError::RankDrop {
            side: 0,
            rank,
            expected: images.len(),
        });
    }
    Ok(ImageCore {
        y,
        z,
        rank,
        overlap: folding_overlap(images),
    })
}

/// Longest word occurring at two distinct places among `words` (overlapping
/// occurrences inside one word count).
pub fn longest_repeat(words: &[Word]) -> usize {
    let repeats = |m: usize| -> bool {
        if m == 0 {
            return true;
        }
        let mut seen = HashSet::new();
        words
            .iter()
            .flat_map(|w| w.letters().windows(m))
            .any(|s| !seen.insert(s))
    };
    let (mut lo, mut hi) = (0, words.iter().map(|w| w.len()).max().unwrap_or(0));
    while lo < hi {
        let mid = (lo + hi + 1) / 2;
        if repeats(mid) {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}

/// Longest piece among the images and their inverses, over the shortest
/// image length.
pub fn lambda_hat(images: &[Word]) -> f64 {
    let n = images.iter().map(|w| w.len()).min().unwrap_or(0);
    if n == 0 {
        return 1.0;
    }
    let all: Vec<Word> = images.iter().flat_map(|w| [w.clone(), w.inverse()]).collect();
    (longest_repeat(&all) as f64 / n as f64).min(1.0)
}

/// Small-cancellation proxy for a splitting: per vertex group for an
/// amalgam, pooled for an HNN extension.
pub fn small_cancellation_ratio(spec: &GraphOfGroupsSpec) -> f64 {
    match spec.kind {
        Kind::Amalgam => lambda_hat(&spec.phi1).max(lambda_hat(&spec.phi2)),
        Kind::Hnn => {
            let pooled: Vec<Word> = spec.phi1.iter().chain(&spec.phi2).cloned().collect();
            lambda_hat(&pooled)
        }
    }
}

/// The default chain `{x_1, x_1^-1}`.
pub fn default_chain() -> Vec<Word> {
    let x = Word::from(Letter::new(0, false));
    vec![x.clone(), x.inverse()]
}

/// Everything the pipeline derives from a spec before building surfaces.
struct Prepared {
    cores: [ImageCore; 2],
    /// Target core of each side's piece.
    targets: [CoreGraph; 2],
    /// Boundary chain of each side: images of `g_i` and of `g_i^-1`.
    chains: [Vec<CyclicWord>; 2],
    /// Edge-group word carried by each boundary component of each side.
    edge_words: [Vec<Word>; 2],
}

fn side_core(spec: &GraphOfGroupsSpec, side: usize) -> Result<ImageCore, ModelError> {
    image_core(spec.images(side)).map_err(|e| match e {
        ModelError::RankDrop { rank, expected, .. } => ModelError::RankDrop { side, rank, expected },
        e => e,
    })
}

fn prepare(spec: &GraphOfGroupsSpec, chain: &[Word]) -> Result<Prepared, ModelError> {
    spec.validate()?;
    if chain.is_empty() {
        return Err(ModelError::InvalidSpec("empty chain".into()));
    }
    for g in chain {
        spec.edge_alphabet()
            .check(g)
            .map_err(|e| ModelError::InvalidSpec(format!("chain element {g}: {e}")))?;
    }
    let c1 = side_core(spec, 1)?;
    let c2 = side_core(spec, 2)?;
    let targets = match spec.kind {
        Kind::Amalgam => [c1.z.clone(), c2.z.clone()],
        Kind::Hnn => {
            let (u, _) = CoreGraph::disjoint_union(&[c1.z.clone(), c2.z.clone()]);
            [u.clone(), u]
        }
    };
    let side_words = [chain.to_vec(), chain.iter().map(|g| g.inverse()).collect::<Vec<_>>()];
    let mut chains: [Vec<CyclicWord>; 2] = [Vec::new(), Vec::new()];
    for s in 0..2 {
        for g in &side_words[s] {
            let image = apply(spec.images(s + 1), g);
            let (c, _) = cyclic_reduce(&image)
                .map_err(|_| ModelError::InvalidSpec(format!("chain element {g} maps to the identity")))?;
            chains[s].push(c);
        }
    }
    Ok(Prepared {
        cores: [c1, c2],
        targets,
        chains,
        edge_words: side_words,
    })
}

fn malnormal_items(spec: &GraphOfGroupsSpec, p: &Prepared) -> Vec<(String, crate::stallings::MalnormalReport)> {
    match spec.kind {
        Kind::Amalgam => vec![
            ("malnormal.side1".into(), is_malnormal_family(std::slice::from_ref(&p.cores[0].z))),
            ("malnormal.side2".into(), is_malnormal_family(std::slice::from_ref(&p.cores[1].z))),
        ],
        Kind::Hnn => vec![(
            "malnormal.family".into(),
            is_malnormal_family(&[p.cores[0].z.clone(), p.cores[1].z.clone()]),
        )],
    }
}

/// The full checklist for a spec, chain and glued pieces. Used both when a
/// certificate is produced and when it is re-verified.
fn checklist(
    spec: &GraphOfGroupsSpec,
    chain: &[Word],
    pieces: &[SurfacePiece],
    pairing: &[(BoundaryRef, BoundaryRef)],
) -> Vec<CheckItem> {
    let mut out = Vec::new();
    let p = match prepare(spec, chain) {
        Ok(p) => p,
        Err(e) => {
            out.push(CheckItem::new("spec", false, e.to_string()));
            return out;
        }
    };
    out.push(CheckItem::new("spec", true, ""));
    for s in 0..2 {
        out.push(CheckItem::new(
            format!("rank.side{}", s + 1),
            p.cores[s].rank == spec.rank_k,
            format!("rank {}", p.cores[s].rank),
        ));
    }
    for (name, r) in malnormal_items(spec, &p) {
        let detail = r
            .witness
            .map_or(String::new(), |w| format!("loop {} in members {} and {}", w.loop_word, w.i, w.j));
        out.push(CheckItem::new(name, r.malnormal, detail));
    }
    let alphabet = spec.vertex_alphabet();
    for s in 0..2 {
        let trivial = is_homologically_trivial(p.chains[s].iter().map(|w| w.letters()), alphabet);
        out.push(CheckItem::new(format!("homology.side{}", s + 1), trivial, ""));
        for (i, w) in p.chains[s].iter().enumerate() {
            let r = lifts_of_loop(w, &p.targets[s]);
            out.push(CheckItem::new(
                format!("rigid.side{}.c{}", s + 1, i),
                r.lifts.len() == 1,
                format!("{} lifts, fully rigid: {}", r.lifts.len(), r.fully_rigid),
            ));
        }
    }
    if pieces.len() != 2 {
        out.push(CheckItem::new("pieces", false, format!("{} pieces, expected 2", pieces.len())));
        return out;
    }
    let mut rechecked = Vec::with_capacity(2);
    for (s, piece) in pieces.iter().enumerate() {
        let target_ok = piece.target_core == p.targets[s];
        out.push(CheckItem::new(format!("piece{s}.target"), target_ok, ""));
        let boundary_ok = piece.boundary == p.chains[s] && piece.edge_words.as_ref() == Some(&p.edge_words[s]);
        out.push(CheckItem::new(format!("piece{s}.boundary"), boundary_ok, ""));
        match piece.recheck() {
            Ok(r) => {
                let same = r == *piece;
                out.push(CheckItem::new(format!("piece{s}.recheck"), same, ""));
                rechecked.push(r);
            }
            Err(e) => {
                out.push(CheckItem::new(format!("piece{s}.recheck"), false, e.to_string()));
                let mut r = piece.clone();
                r.checks = crate::fatgraph::PieceChecks {
                    folded: false,
                    boundary_in_z: false,
                    f_folded: false,
                    incompressible: false,
                };
                rechecked.push(r);
            }
        }
    }
    out.extend(glue_checklist(&rechecked, pairing));
    out
}

/// Which streams seeded what.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub master: u64,
    pub side1: u64,
    pub side2: u64,
}

/// Statistics reported alongside a certificate; not part of its validity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub overlap: [usize; 2],
    pub lambda_hat: f64,
    pub pseudorandom: [PseudorandomReport; 2],
    pub f_vertices: [usize; 2],
    pub spacing_ok: [bool; 2],
    pub restarts: [usize; 2],
}

/// A certificate file: the surface, its checklist, and everything needed to
/// recompute the checklist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub format: String,
    pub spec: GraphOfGroupsSpec,
    pub chain: Vec<Word>,
    pub config: BuilderConfig,
    pub seeds: Seeds,
    pub report: PipelineReport,
    pub certificate: ClosedSurfaceCertificate,
}

/// Runs the whole pipeline: cores, malnormality, rigidity, one f-folded
/// piece per side, gluing. `config.seed` is the master seed.
pub fn build_certificate(
    spec: &GraphOfGroupsSpec,
    chain: &[Word],
    config: &BuilderConfig,
) -> Result<CertificateFile, ModelError> {
    let p = prepare(spec, chain)?;
    for (name, r) in malnormal_items(spec, &p) {
        if !r.malnormal {
            return Err(ModelError::MalnormalityFailed {
                family: name,
                witness: r.witness,
            });
        }
    }
    let alphabet = spec.vertex_alphabet();
    for s in 0..2 {
        if !is_homologically_trivial(p.chains[s].iter().map(|w| w.letters()), alphabet) {
            return Err(ModelError::NotHomologicallyTrivial { side: s + 1 });
        }
        for w in &p.chains[s] {
            let n = lifts_of_loop(w, &p.targets[s]).lifts.len();
            if n != 1 {
                return Err(ModelError::RigidityFailed {
                    side: s + 1,
                    word: w.to_string(),
                    lifts: n,
                });
            }
        }
    }
    let seeds = Seeds {
        master: config.seed,
        side1: mix_seed(config.seed, 1),
        side2: mix_seed(config.seed, 2),
    };
    let mut pieces = Vec::with_capacity(2);
    let mut reports = Vec::with_capacity(2);
    for s in 0..2 {
        let side_config = BuilderConfig {
            seed: if s == 0 { seeds.side1 } else { seeds.side2 },
            require_connected: true,
            require_hyperbolic: true,
            ..*config
        };
        let wrap = |e: BuilderError| match e {
            BuilderError::SearchExhausted { restarts } => ModelError::SearchExhausted { side: s + 1, restarts },
            e => ModelError::Builder { side: s + 1, source: e },
        };
        let chain_s = Chain::marked_by(p.chains[s].clone(), &p.targets[s]).map_err(wrap)?;
        let built = build_f_folded(&chain_s, &p.targets[s], &side_config).map_err(wrap)?;
        let mut piece = built.piece.clone();
        piece.edge_words = Some(p.edge_words[s].clone());
        pieces.push(piece);
        reports.push(built);
    }
    let pairing: Vec<(BoundaryRef, BoundaryRef)> = (0..chain.len())
        .map(|i| {
            (
                BoundaryRef { piece: 0, component: i },
                BoundaryRef { piece: 1, component: i },
            )
        })
        .collect();
    let glued = crate::fatgraph::glue(pieces, pairing)?;
    let list = checklist(spec, chain, &glued.pieces, &glued.pairing);
    if let Some(item) = list.iter().find(|c| !c.passed) {
        return Err(ModelError::Glue(FatgraphError::FailedCheck(item.name.clone())));
    }
    let report = PipelineReport {
        overlap: [p.cores[0].overlap, p.cores[1].overlap],
        lambda_hat: small_cancellation_ratio(spec),
        pseudorandom: [reports[0].admission.clone(), reports[1].admission.clone()],
        f_vertices: [glued.pieces[0].f_vertices.len(), glued.pieces[1].f_vertices.len()],
        spacing_ok: [reports[0].spacing_ok, reports[1].spacing_ok],
        restarts: [reports[0].restart, reports[1].restart],
    };
    Ok(CertificateFile {
        format: CERTIFICATE_FORMAT.into(),
        spec: spec.clone(),
        chain: chain.to_vec(),
        config: *config,
        seeds,
        report,
        certificate: ClosedSurfaceCertificate {
            checklist: list,
            ..glued
        },
    })
}

/// Outcome of re-checking a certificate file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verification {
    pub checklist: Vec<CheckItem>,
    /// The recomputed checklist serializes exactly like the stored one.
    pub reproduced: bool,
    pub valid: bool,
}

/// Recomputes every check from the spec and the stored pieces alone.
pub fn verify_certificate(file: &CertificateFile) -> Verification {
    let mut list = Vec::new();
    if file.format != CERTIFICATE_FORMAT {
        list.push(CheckItem::new("format", false, format!("unknown format {:?}", file.format)));
    }
    list.extend(checklist(&file.spec, &file.chain, &file.certificate.pieces, &file.certificate.pairing));
    let chi: i64 = file
        .certificate
        .pieces
        .iter()
        .map(|p| p.fatgraph.euler_characteristic())
        .sum();
    let invariants_ok = chi == file.certificate.chi && file.certificate.genus == (2 - chi) / 2;
    let stored = serde_json::to_string(&file.certificate.checklist).expect("checklist serializes");
    let fresh = serde_json::to_string(&list).expect("checklist serializes");
    let reproduced = stored == fresh && invariants_ok;
    let valid = reproduced && list.iter().all(|c| c.passed);
    Verification {
        checklist: list,
        reproduced,
        valid,
    }
}

/// A grid of Monte Carlo trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub ns: Vec<usize>,
    pub trials: usize,
    pub k: usize,
    pub l: usize,
    pub kind: Kind,
    pub seed: u64,
    pub pseudorandom: PseudorandomParams,
    /// Also run the full certificate pipeline in each trial.
    pub build: bool,
    pub builder: BuilderConfig,
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.trials == 0 {
            return Err(ModelError::InvalidSpec("trials must be at least 1".into()));
        }
        if self.ns.is_empty() {
            return Err(ModelError::InvalidSpec("no word lengths given".into()));
        }
        for &n in &self.ns {
            RandomHomSpec::new(self.k, self.l, n, 0)?;
        }
        Ok(())
    }

    pub fn trial_seed(&self, n: usize, trial: usize) -> u64 {
        mix_seed(mix_seed(self.seed, n as u64), trial as u64)
    }
}

/// One CSV row per trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub trial: usize,
    pub malnormal: bool,
    pub rigid: bool,
    pub overlap_max: usize,
    pub pseudorandom_pass: bool,
    pub lambda_hat: f64,
    pub builder_success: Option<bool>,
    pub chi: Option<i64>,
    pub genus: Option<i64>,
    pub millis: u64,
}

/// Aggregates per word length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub trials: usize,
    pub malnormal_rate: f64,
    pub rigid_rate: f64,
    pub overlap_mean: f64,
    pub overlap_max: usize,
    pub pseudorandom_rate: f64,
    pub lambda_hat_mean: f64,
    pub lambda_hat_max: f64,
    pub lambda_below_sixth_rate: f64,
    pub builder_success_rate: Option<f64>,
    pub millis_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
}

fn run_trial(grid: &ExperimentGrid, n: usize, trial: usize) -> TrialRecord {
    let start = Instant::now();
    let seed = grid.trial_seed(n, trial);
    let spec = GraphOfGroupsSpec::sample(grid.kind, grid.k, grid.l, n, seed).expect("grid validated");
    let chain = default_chain();
    let lambda = small_cancellation_ratio(&spec);
    let overlap_max = folding_overlap(&spec.phi1).max(folding_overlap(&spec.phi2));
    let mut rec = TrialRecord {
        n,
        trial,
        malnormal: false,
        rigid: false,
        overlap_max,
        pseudorandom_pass: false,
        lambda_hat: lambda,
        builder_success: None,
        chi: None,
        genus: None,
        millis: 0,
    };
    // A rank drop aborts the trial; it counts as a failure everywhere.
    if let Ok(p) = prepare(&spec, &chain) {
        rec.malnormal = malnormal_items(&spec, &p).iter().all(|(_, r)| r.malnormal);
        rec.rigid = (0..2).all(|s| p.chains[s].iter().all(|w| lifts_of_loop(w, &p.targets[s]).lifts.len() == 1));
        rec.pseudorandom_pass = (0..2).all(|s| is_pseudorandom(&p.chains[s], spec.vertex_alphabet(), grid.pseudorandom).pass);
    }
    if grid.build {
        let config = BuilderConfig {
            seed,
            ..grid.builder
        };
        match build_certificate(&spec, &chain, &config) {
            Ok(c) => {
                rec.builder_success = Some(true);
                rec.chi = Some(c.certificate.chi);
                rec.genus = Some(c.certificate.genus);
            }
            Err(_) => rec.builder_success = Some(false),
        }
    }
    rec.millis = start.elapsed().as_millis() as u64;
    rec
}

fn summarize(n: usize, rows: &[TrialRecord]) -> SummaryRow {
    let t = rows.len().max(1) as f64;
    let rate = |f: &dyn Fn(&TrialRecord) -> bool| rows.iter().filter(|r| f(r)).count() as f64 / t;
    let built: Vec<bool> = rows.iter().filter_map(|r| r.builder_success).collect();
    SummaryRow {
        n,
        trials: rows.len(),
        malnormal_rate: rate(&|r| r.malnormal),
        rigid_rate: rate(&|r| r.rigid),
        overlap_mean: rows.iter().map(|r| r.overlap_max as f64).sum::<f64>() / t,
        overlap_max: rows.iter().map(|r| r.overlap_max).max().unwrap_or(0),
        pseudorandom_rate: rate(&|r| r.pseudorandom_pass),
        lambda_hat_mean: rows.iter().map(|r| r.lambda_hat).sum::<f64>() / t,
        lambda_hat_max: rows.iter().map(|r| r.lambda_hat).fold(0.0, f64::max),
        lambda_below_sixth_rate: rate(&|r| r.lambda_hat < 1.0 / 6.0),
        builder_success_rate: (!built.is_empty())
            .then(|| built.iter().filter(|&&b| b).count() as f64 / built.len() as f64),
        millis_mean: rows.iter().map(|r| r.millis as f64).sum::<f64>() / t,
    }
}

/// Runs every trial of the grid on `jobs` threads. Apart from `millis`, the
/// result depends only on the grid.
pub fn run_experiment(grid: &ExperimentGrid, jobs: usize) -> Result<ExperimentTable, ModelError> {
    grid.validate()?;
    let cells: Vec<(usize, usize)> = grid
        .ns
        .iter()
        .flat_map(|&n| (0..grid.trials).map(move |t| (n, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| ModelError::InvalidSpec(e.to_string()))?;
    let trials: Vec<TrialRecord> = pool.install(|| cells.par_iter().map(|&(n, t)| run_trial(grid, n, t)).collect());
    let summary = grid
        .ns
        .iter()
        .enumerate()
        .map(|(i, &n)| summarize(n, &trials[i * grid.trials..(i + 1) * grid.trials]))
        .collect();
    Ok(ExperimentTable { trials, summary })
}

/// Writes rows as CSV with a header line.
pub fn write_csv<W: std::io::Write, T: Serialize>(out: W, rows: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
