//! `randsurf`: every stage of the surface-subgroup pipeline as a subcommand.
//!
//! Exit status: 0 when the verdict is positive, 1 when a named check fails,
//! 2 on malformed input or I/O errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use randsurf::builder::{build_by_enumeration, build_f_folded, BuilderConfig, BuilderError, Chain};
use randsurf::fatgraph::{glue, BoundaryRef, ClosedSurfaceCertificate, SurfacePiece};
use randsurf::model::{
    build_certificate, default_chain, run_experiment, verify_certificate, write_csv, CertificateFile,
    ExperimentGrid, GraphOfGroupsSpec, Kind, ModelError, CERTIFICATE_FORMAT,
};
use randsurf::stallings::{core, fiber_product, fold, is_malnormal_family, lifts_of_loop, rose_of_words, CoreGraph};
use randsurf::words::{
    cyclic_reduce, is_homologically_trivial, is_pseudorandom, Alphabet, CyclicWord, PseudorandomParams, Word,
};

#[derive(Parser)]
#[command(name = "randsurf", version, about = "Closed surface subgroups in random graphs of free groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Amalgam,
    Hnn,
}

impl From<KindArg> for Kind {
    fn from(k: KindArg) -> Kind {
        match k {
            KindArg::Amalgam => Kind::Amalgam,
            KindArg::Hnn => Kind::Hnn,
        }
    }
}

#[derive(Args, Clone)]
struct SearchArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Search nodes per depth-first pass.
    #[arg(long)]
    budget: Option<u64>,
    /// Minimum spacing between f-vertices checked at admission.
    #[arg(long)]
    spacing: Option<usize>,
    /// Subword length for the pseudorandomness report.
    #[arg(long = "T", default_value_t = 3)]
    t: usize,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
}

impl SearchArgs {
    fn config(&self, seed: u64) -> Result<BuilderConfig, String> {
        if self.t == 0 || self.epsilon <= 0.0 {
            return Err("--T must be positive and --epsilon > 0".into());
        }
        let mut c = BuilderConfig::with_t(self.t, self.epsilon);
        c.seed = seed;
        if let Some(b) = self.budget {
            c.node_budget = b;
        }
        if let Some(s) = self.spacing {
            c.min_spacing = s;
        }
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample a random amalgam or HNN spec.
    Sample {
        #[arg(long, value_enum, default_value = "amalgam")]
        kind: KindArg,
        #[arg(long = "rank-k", default_value_t = 1)]
        rank_k: usize,
        #[arg(long = "rank-l", default_value_t = 2)]
        rank_l: usize,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fold the rose on a list of words.
    Fold {
        words: Vec<String>,
        #[arg(long = "rank-l", default_value_t = 2)]
        rank_l: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Core of a graph file.
    Core {
        #[arg(long)]
        graph: PathBuf,
        /// Keep the basepoint (Y) instead of dropping it (Z).
        #[arg(long)]
        keep_basepoint: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fiber product of two graph files.
    FiberProduct {
        #[arg(long, num_args = 2)]
        graphs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide malnormality of a family of core graphs.
    Malnormal {
        #[arg(long, num_args = 1..)]
        cores: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Count lifts of a loop to a core graph.
    Rigid {
        #[arg(long = "loop")]
        loop_word: String,
        #[arg(long)]
        core: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Subword census test of a chain.
    Pseudorandom {
        chain: Vec<String>,
        #[arg(long = "rank-l", default_value_t = 2)]
        rank_l: usize,
        #[arg(long = "T", default_value_t = 3)]
        t: usize,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Homological triviality of a chain.
    ChainCheck {
        chain: Vec<String>,
        #[arg(long = "rank-l", default_value_t = 2)]
        rank_l: usize,
    },
    /// Build an f-folded surface piece with the given boundary chain.
    BuildSurface {
        chain: Vec<String>,
        /// Target core Z; the boundary must lift uniquely.
        #[arg(long)]
        core: PathBuf,
        /// Exhaustive enumeration instead of the randomized search.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-check a piece or certificate file.
    Verify { file: PathBuf },
    /// Glue pieces along boundary components with inverse words.
    Glue {
        pieces: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the whole pipeline on a spec.
    Certify {
        #[arg(long)]
        spec: PathBuf,
        /// Chain in the edge group; defaults to the first generator and its inverse.
        #[arg(long, num_args = 1..)]
        chain: Option<Vec<String>>,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo grid; one CSV row per trial.
    Experiment {
        #[arg(long, value_delimiter = ',', required = true)]
        length: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_enum, default_value = "amalgam")]
        kind: KindArg,
        #[arg(long = "rank-k", default_value_t = 2)]
        rank_k: usize,
        #[arg(long = "rank-l", default_value_t = 2)]
        rank_l: usize,
        /// Also build a certificate in every trial.
        #[arg(long)]
        build: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        search: SearchArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Positive verdict, negative verdict, or a usage/I/O problem.
type Verdict = Result<bool, String>;

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    text.push('\n');
    fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
}

fn maybe_write<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<(), String> {
    path.as_deref().map_or(Ok(()), |p| write_json(p, value))
}

fn parse_words(raw: &[String], alphabet: Alphabet) -> Result<Vec<Word>, String> {
    if raw.is_empty() {
        return Err("no words given".into());
    }
    raw.iter()
        .map(|s| alphabet.parse_word(s).map_err(|e| format!("{s:?}: {e}")))
        .collect()
}

fn parse_chain(raw: &[String], alphabet: Alphabet) -> Result<Vec<CyclicWord>, String> {
    parse_words(raw, alphabet)?
        .iter()
        .map(|w| cyclic_reduce(w).map(|(c, _)| c).map_err(|e| format!("{w}: {e}")))
        .collect()
}

fn alphabet(rank: usize) -> Result<Alphabet, String> {
    Alphabet::new(rank).map_err(|e| e.to_string())
}

fn graph_alphabet(graphs: &[&CoreGraph]) -> Result<Alphabet, String> {
    let rank = graphs
        .iter()
        .flat_map(|g| g.edges().iter().map(|e| e.label.generator() + 1))
        .max()
        .unwrap_or(1)
        .max(2);
    alphabet(rank)
}

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        println!("seed {s} (generated)");
        s
    })
}

fn model_failure(e: ModelError) -> Verdict {
    match e {
        ModelError::InvalidSpec(m) => Err(m),
        e => {
            println!("FAIL [{}] {e}", e.stage());
            Ok(false)
        }
    }
}

fn run(cli: Cli) -> Verdict {
    match cli.command {
        Command::Sample {
            kind,
            rank_k,
            rank_l,
            length,
            seed,
            out,
        } => {
            let seed = seed_or_fresh(seed);
            let spec = GraphOfGroupsSpec::sample(kind.into(), rank_k, rank_l, length, seed).map_err(|e| e.to_string())?;
            write_json(&out, &spec)?;
            println!(
                "sampled {:?} spec: k = {rank_k}, l = {rank_l}, n = {length}, seed {seed}",
                spec.kind
            );
            Ok(true)
        }
        Command::Fold { words, rank_l, out } => {
            let words = parse_words(&words, alphabet(rank_l)?)?;
            let g = fold(&rose_of_words(&words).map_err(|e| e.to_string())?);
            maybe_write(&out, &g)?;
            println!(
                "folded: {} vertices, {} edges, rank {}",
                g.vertex_count(),
                g.edge_count(),
                g.betti()
            );
            Ok(true)
        }
        Command::Core {
            graph,
            keep_basepoint,
            out,
        } => {
            let g: CoreGraph = read_json(&graph)?;
            let c = core(&g, keep_basepoint);
            maybe_write(&out, &c)?;
            println!("core: {} vertices, {} edges, rank {}", c.vertex_count(), c.edge_count(), c.betti());
            Ok(true)
        }
        Command::FiberProduct { graphs, out } => {
            let g1: CoreGraph = read_json(&graphs[0])?;
            let g2: CoreGraph = read_json(&graphs[1])?;
            let p = fiber_product(&g1, &g2);
            let c = core(&p.graph, false);
            maybe_write(&out, &p.graph)?;
            println!(
                "fiber product: {} vertices, {} edges; core has {} components, {} edges",
                p.graph.vertex_count(),
                p.graph.edge_count(),
                c.components().len(),
                c.edge_count()
            );
            Ok(true)
        }
        Command::Malnormal { cores, out } => {
            let zs: Vec<CoreGraph> = cores.iter().map(|p| read_json(p)).collect::<Result<_, _>>()?;
            let r = is_malnormal_family(&zs);
            maybe_write(&out, &r)?;
            match &r.witness {
                None => println!("malnormal"),
                Some(w) => println!(
                    "not malnormal: loop {} lifts to members {} and {} off the diagonal",
                    w.loop_word, w.i, w.j
                ),
            }
            Ok(r.malnormal)
        }
        Command::Rigid { loop_word, core, out } => {
            let z: CoreGraph = read_json(&core)?;
            let w = alphabet(graph_alphabet(&[&z])?.rank())?
                .parse_word(&loop_word)
                .map_err(|e| e.to_string())?;
            let (c, _) = cyclic_reduce(&w).map_err(|e| e.to_string())?;
            let r = lifts_of_loop(&c, &z);
            maybe_write(&out, &r)?;
            let n = r.lifts.len();
            println!(
                "{n} lift{}; {}",
                if n == 1 { "" } else { "s" },
                if r.fully_rigid { "fully rigid" } else { "not fully rigid" }
            );
            Ok(n == 1)
        }
        Command::Pseudorandom {
            chain,
            rank_l,
            t,
            epsilon,
            out,
        } => {
            if t == 0 || epsilon <= 0.0 {
                return Err("--T must be positive and --epsilon > 0".into());
            }
            let a = alphabet(rank_l)?;
            let chain = parse_chain(&chain, a)?;
            let r = is_pseudorandom(&chain, a, PseudorandomParams::new(t, epsilon));
            maybe_write(&out, &r)?;
            println!(
                "{}: worst subword {} at ratio {:.4} (T = {t}, eps = {epsilon})",
                if r.pass { "pseudorandom" } else { "not pseudorandom" },
                r.worst,
                r.worst_ratio
            );
            Ok(r.pass)
        }
        Command::ChainCheck { chain, rank_l } => {
            let a = alphabet(rank_l)?;
            let words = parse_words(&chain, a)?;
            let ok = is_homologically_trivial(words.iter().map(|w| w.letters()), a);
            println!("{}", if ok { "homologically trivial" } else { "not homologically trivial" });
            Ok(ok)
        }
        Command::BuildSurface {
            chain,
            core,
            oracle,
            search,
            out,
        } => {
            let z: CoreGraph = read_json(&core)?;
            let a = graph_alphabet(&[&z])?;
            let chain = parse_chain(&chain, a)?;
            let seed = seed_or_fresh(search.seed);
            let config = search.config(seed)?;
            let chain = match Chain::marked_by(chain, &z) {
                Ok(c) => c,
                Err(e) => {
                    println!("FAIL {e}");
                    return Ok(false);
                }
            };
            let built = if oracle {
                build_by_enumeration(&chain, &z, &config)
            } else {
                build_f_folded(&chain, &z, &config)
            };
            match built {
                Ok(r) => {
                    write_json(&out, &r.piece)?;
                    println!("built f-folded piece: {r}");
                    Ok(true)
                }
                Err(e @ (BuilderError::InvalidChain(_) | BuilderError::TooLarge(_))) => Err(e.to_string()),
                Err(e) => {
                    println!("FAIL {e}");
                    Ok(false)
                }
            }
        }
        Command::Verify { file } => verify(&file),
        Command::Glue { pieces, out } => {
            let pieces: Vec<SurfacePiece> = pieces.iter().map(|p| read_json(p)).collect::<Result<_, _>>()?;
            let pairing = match_boundaries(&pieces);
            match glue(pieces, pairing) {
                Ok(c) => {
                    write_json(&out, &c)?;
                    println!("glued closed surface: chi = {}, genus = {}", c.chi, c.genus);
                    Ok(true)
                }
                Err(e) => {
                    println!("FAIL {e}");
                    Ok(false)
                }
            }
        }
        Command::Certify {
            spec,
            chain,
            search,
            out,
        } => {
            let spec: GraphOfGroupsSpec = read_json(&spec)?;
            spec.validate().map_err(|e| e.to_string())?;
            let chain = match chain {
                Some(raw) => parse_words(&raw, spec.edge_alphabet())?,
                None => default_chain(),
            };
            let seed = seed_or_fresh(search.seed);
            let config = search.config(seed)?;
            match build_certificate(&spec, &chain, &config) {
                Ok(c) => {
                    write_json(&out, &c)?;
                    println!(
                        "certificate valid: chi = {}, genus = {}, {} checks passed",
                        c.certificate.chi,
                        c.certificate.genus,
                        c.certificate.checklist.len()
                    );
                    Ok(true)
                }
                Err(e) => model_failure(e),
            }
        }
        Command::Experiment {
            length,
            trials,
            kind,
            rank_k,
            rank_l,
            build,
            jobs,
            search,
            out,
        } => {
            let seed = seed_or_fresh(search.seed);
            let builder = search.config(seed)?;
            let grid = ExperimentGrid {
                ns: length,
                trials,
                k: rank_k,
                l: rank_l,
                kind: kind.into(),
                seed,
                pseudorandom: builder.pseudorandom,
                build,
                builder,
            };
            let table = run_experiment(&grid, jobs).map_err(|e| e.to_string())?;
            let file = fs::File::create(&out).map_err(|e| format!("{}: {e}", out.display()))?;
            write_csv(file, &table.trials).map_err(|e| e.to_string())?;
            let summary_path = out.with_extension("summary.csv");
            let file = fs::File::create(&summary_path).map_err(|e| format!("{}: {e}", summary_path.display()))?;
            write_csv(file, &table.summary).map_err(|e| e.to_string())?;
            println!(
                "experiment complete: {} trials over n = {:?}; summary in {} (lambda_hat is the longest repeated \
                 subword among generator images, an interpretation)",
                table.trials.len(),
                grid.ns,
                summary_path.display()
            );
            Ok(true)
        }
    }
}

/// Pairs each boundary component with the first unused component reading
/// the inverse word.
fn match_boundaries(pieces: &[SurfacePiece]) -> Vec<(BoundaryRef, BoundaryRef)> {
    let refs: Vec<BoundaryRef> = pieces
        .iter()
        .enumerate()
        .flat_map(|(piece, p)| (0..p.boundary.len()).map(move |component| BoundaryRef { piece, component }))
        .collect();
    let word = |r: BoundaryRef| &pieces[r.piece].boundary[r.component];
    let mut used = vec![false; refs.len()];
    let mut out = Vec::new();
    for i in 0..refs.len() {
        if used[i] {
            continue;
        }
        let target = word(refs[i]).inverse();
        if let Some(j) = (i + 1..refs.len()).find(|&j| !used[j] && *word(refs[j]) == target) {
            used[i] = true;
            used[j] = true;
            out.push((refs[i], refs[j]));
        }
    }
    out
}

fn verify(path: &Path) -> Verdict {
    let value: serde_json::Value = read_json(path)?;
    let is_certificate = value.get("format").and_then(|f| f.as_str()) == Some(CERTIFICATE_FORMAT);
    if is_certificate {
        let file: CertificateFile = serde_json::from_value(value).map_err(|e| e.to_string())?;
        let v = verify_certificate(&file);
        for c in v.checklist.iter().filter(|c| !c.passed) {
            println!("  failed: {} {}", c.name, c.detail);
        }
        println!(
            "certificate {}; checklist {}",
            if v.valid { "valid" } else { "INVALID" },
            if v.reproduced { "reproduced exactly" } else { "differs from the stored one" }
        );
        return Ok(v.valid);
    }
    if value.get("pairing").is_some() {
        let c: ClosedSurfaceCertificate = serde_json::from_value(value).map_err(|e| e.to_string())?;
        let rechecked = glue(
            c.pieces.iter().map(|p| p.recheck()).collect::<Result<_, _>>().map_err(|e| e.to_string())?,
            c.pairing.clone(),
        );
        let ok = rechecked.as_ref().is_ok_and(|r| r.checklist == c.checklist && r.chi == c.chi);
        println!("glued surface {}", if ok { "valid" } else { "INVALID" });
        return Ok(ok);
    }
    let piece: SurfacePiece = serde_json::from_value(value).map_err(|e| e.to_string())?;
    match piece.recheck() {
        Ok(r) => {
            let ok = r == piece && r.checks.all();
            println!(
                "piece {}: folded {}, boundary in Z {}, f-folded {}, incompressible {}",
                if ok { "valid" } else { "INVALID" },
                r.checks.folded,
                r.checks.boundary_in_z,
                r.checks.f_folded,
                r.checks.incompressible
            );
            Ok(ok)
        }
        Err(e) => {
            println!("piece INVALID: {e}");
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
