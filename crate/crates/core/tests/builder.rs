use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use randsurf::builder::*;
use randsurf::fatgraph::BoundaryPosition;
use randsurf::model::{build_certificate, default_chain, image_core, sample_homomorphism, GraphOfGroupsSpec, Kind, RandomHomSpec};
use randsurf::stallings::CoreGraph;
use randsurf::words::{cyclic_reduce, CyclicWord, Letter};

fn cw(s: &str) -> CyclicWord {
    s.parse().unwrap()
}

fn chain(words: &[&str]) -> Chain {
    Chain::unmarked(words.iter().map(|s| cw(s)).collect())
}

fn mark(component: usize, index: usize) -> BoundaryPosition {
    BoundaryPosition { component, index }
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(7)
}

#[test]
fn no_marks_no_tags() {
    let p = tag_f_vertices(&chain(&["abAB"]), &mut rng()).unwrap();
    assert_eq!(p.len(), 4);
    assert!(p.pairs().is_empty());
}

#[test]
fn single_mark_is_tagged_by_an_inverse_arc() {
    let words = ["aabb", "AABB", "aabb", "AABB"].map(cw).to_vec();
    let c = Chain::new(words, BTreeSet::from([mark(0, 1)]), 2).unwrap();
    let p = tag_f_vertices(&c, &mut rng()).unwrap();
    // Letters 0 and 1 of "aabb" meet "AA" in the second or fourth word, reversed.
    let pairs = p.pairs();
    assert!(pairs == vec![(0, 5), (1, 4)] || pairs == vec![(0, 13), (1, 12)], "{pairs:?}");
}

#[test]
fn blocked_mark_is_infeasible() {
    let words = ["aabb", "AABB"].map(cw).to_vec();
    let c = Chain::new(words, BTreeSet::from([mark(0, 1), mark(1, 1)]), 2).unwrap();
    assert!(matches!(tag_f_vertices(&c, &mut rng()), Err(BuilderError::TagInfeasible { .. })));
}

#[test]
fn marks_out_of_range_rejected() {
    assert!(Chain::new(vec![cw("ab")], BTreeSet::from([mark(0, 2)]), 2).is_err());
    assert!(Chain::new(vec![cw("ab")], BTreeSet::new(), 1).is_err());
}

fn paired(len: usize, pairs: &[(usize, usize)]) -> Pairing {
    let mut p = Pairing::empty(len);
    for &(x, y) in pairs {
        p.set(x, y);
    }
    p
}

#[test]
fn quotient_of_a_and_inverse_is_an_annulus() {
    let c = chain(&["a", "A"]);
    let (y, starts) = pairing_to_fatgraph(&c, &paired(2, &[(0, 1)])).unwrap();
    assert_eq!(y.euler_characteristic(), 0);
    assert_eq!(y.boundary_cycles().len(), 2);
    assert_eq!(starts.len(), 2);
}

#[test]
fn quotient_of_commutator_is_a_punctured_torus() {
    let c = chain(&["abAB"]);
    let (y, _) = pairing_to_fatgraph(&c, &paired(4, &[(0, 2), (1, 3)])).unwrap();
    assert_eq!(y.euler_characteristic(), -1);
    assert_eq!(y.graph().vertex_count(), 1);
    assert_eq!(randsurf::fatgraph::trace_boundary(&y).unwrap(), vec![cw("abAB")]);
}

#[test]
fn every_quotient_retraces_its_chain() {
    let c = chain(&["aa", "AA"]);
    let all = enumerate_pairings(&c).unwrap();
    assert_eq!(all.len(), 2);
    for p in all {
        let (y, starts) = pairing_to_fatgraph(&c, &p).unwrap();
        let words: Vec<CyclicWord> = starts
            .iter()
            .map(|&h| CyclicWord::new(y.boundary_cycle(h).iter().map(|&g| y.graph().letter(g)).collect()).unwrap())
            .collect();
        assert_eq!(words, c.components());
    }
}

#[test]
fn partial_or_mislabelled_pairings_rejected() {
    let c = chain(&["abAB"]);
    assert!(pairing_to_fatgraph(&c, &paired(4, &[(0, 2)])).is_err());
    assert!(pairing_to_fatgraph(&c, &paired(4, &[(0, 1), (2, 3)])).is_err());
}

#[test]
fn enumeration_counts() {
    assert_eq!(enumerate_pairings(&chain(&["a", "A"])).unwrap().len(), 1);
    assert_eq!(enumerate_pairings(&chain(&["aa", "AA"])).unwrap().len(), 2);
    assert_eq!(enumerate_pairings(&chain(&["ab"])).unwrap().len(), 0);
    // 3 a's against 3 A's and 2 b's against 2 B's.
    assert_eq!(enumerate_pairings(&chain(&["aaabb", "AAABB"])).unwrap().len(), 12);
    assert!(matches!(
        enumerate_pairings(&chain(&["aaaabbbb", "AAAABBBB"])),
        Err(BuilderError::TooLarge(16))
    ));
}

#[test]
fn commutator_builds_on_its_circle() {
    let c = chain(&["abAB"]);
    let z = CoreGraph::circle(&cw("abAB"));
    let r = build_f_folded(&c, &z, &BuilderConfig::default()).unwrap();
    assert_eq!(r.piece.fatgraph.euler_characteristic(), -1);
    assert!(r.piece.checks.all());
    assert_eq!(r.to_string(), "chi = -1, 0 f-vertices, restart 0");
    let o = build_by_enumeration(&c, &z, &BuilderConfig::default()).unwrap();
    assert_eq!(o.piece.fatgraph.euler_characteristic(), -1);
}

#[test]
fn unbalanced_chain_rejected() {
    let z = CoreGraph::circle(&cw("ab"));
    let e = build_f_folded(&chain(&["ab"]), &z, &BuilderConfig::default()).unwrap_err();
    assert_eq!(e, BuilderError::NotHomologicallyTrivial);
}

#[test]
fn chain_must_lift_uniquely() {
    let z = CoreGraph::circle(&cw("aa"));
    assert!(build_f_folded(&chain(&["aa", "AA"]), &z, &BuilderConfig::default()).is_err());
}

#[test]
fn single_letter_components_in_exhaustive_mode() {
    let config = BuilderConfig {
        exhaustive: true,
        ..BuilderConfig::default()
    };
    let z = CoreGraph::circle(&cw("a"));
    let r = build_f_folded(&chain(&["a", "a", "A", "A"]), &z, &config).unwrap();
    assert_eq!(r.piece.fatgraph.euler_characteristic(), 0);
}

/// Rank-2 target core and the chain {x, x^-1} for x the image of the first generator.
fn rank2_instance(n: usize, seed: u64) -> Option<(Chain, CoreGraph)> {
    let images = sample_homomorphism(&RandomHomSpec::new(2, 2, n, seed).unwrap());
    let core = image_core(&images).ok()?;
    let (x, _) = cyclic_reduce(&images[0]).ok()?;
    let c = Chain::marked_by(vec![x.clone(), x.inverse()], &core.z).ok()?;
    Some((c, core.z))
}

fn strict() -> BuilderConfig {
    BuilderConfig {
        require_connected: true,
        require_hyperbolic: true,
        ..BuilderConfig::default()
    }
}

#[test]
fn tagged_positions_sit_at_distinct_bivalent_vertices() {
    let mut built = 0;
    for seed in 0..6 {
        let Some((c, z)) = rank2_instance(40, seed) else { continue };
        let Ok(r) = build_f_folded(&c, &z, &BuilderConfig { seed, ..strict() }) else {
            continue;
        };
        built += 1;
        let p = &r.piece;
        assert!(!p.f_vertices.is_empty());
        assert_eq!(p.f_vertices.iter().copied().collect::<BTreeSet<_>>(), *c.f_positions());
        let valence = p.fatgraph.graph().valence();
        let mut seen = BTreeSet::new();
        for f in &p.f_vertices {
            let v = p.fatgraph.graph().origin(p.boundary_cycle(f.component)[f.index]);
            assert_eq!(valence[v], 2);
            assert!(seen.insert(v));
        }
        assert!(p.fatgraph.euler_characteristic() < 0);
    }
    assert!(built > 0);
}

#[test]
fn build_is_deterministic() {
    let (c, z) = (0..).find_map(|s| rank2_instance(40, s)).unwrap();
    let a = build_f_folded(&c, &z, &strict());
    let b = build_f_folded(&c, &z, &strict());
    assert_eq!(a, b);
}

#[test]
fn restart_streams_differ() {
    use rand::RngCore;
    assert_ne!(restart_rng(1, 0).next_u64(), restart_rng(1, 1).next_u64());
    assert_eq!(restart_rng(1, 3).next_u64(), restart_rng(1, 3).next_u64());
    assert_ne!(mix_seed(0, 1), mix_seed(1, 0));
}

/// Random reduced word over two generators, length 1..=5.
fn reduced_word() -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec(0u8..4, 1..=5).prop_map(|codes| {
        let mut out: Vec<Letter> = Vec::new();
        for c in codes {
            let x = Letter::from_code(c);
            if out.last() == Some(&x.inverse()) {
                out.pop();
            } else {
                out.push(x);
            }
        }
        out
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn search_agrees_with_enumeration(letters in reduced_word()) {
        let w = randsurf::words::reduce(letters);
        prop_assume!(!w.is_empty());
        let (x, _) = cyclic_reduce(&w).unwrap();
        let (root, _) = x.root();
        let c = Chain::unmarked(vec![x.clone(), x.inverse()]);
        let z = CoreGraph::circle(&root);
        let config = BuilderConfig { exhaustive: true, ..BuilderConfig::default() };
        let built = build_f_folded(&c, &z, &config);
        prop_assert_eq!(built.is_ok(), has_folded_quotient(&c).unwrap());
        prop_assert_eq!(built.is_ok(), build_by_enumeration(&c, &z, &BuilderConfig::default()).is_ok());
    }
}

#[test]
#[ignore = "about forty minutes on one core"]
fn amalgam_success_rate_at_200() {
    let mut ok = 0;
    for seed in 0..100 {
        let spec = GraphOfGroupsSpec::sample(Kind::Amalgam, 1, 2, 200, seed).unwrap();
        let config = BuilderConfig { seed, ..BuilderConfig::default() };
        if build_certificate(&spec, &default_chain(), &config).is_ok() {
            ok += 1;
        }
    }
    println!("{ok}/100 certificates at n = 200");
    assert!(ok >= 95, "{ok}/100");
}
