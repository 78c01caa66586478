use proptest::prelude::*;
use randsurf::builder::BuilderConfig;
use randsurf::model::*;
use randsurf::words::{is_homologically_trivial, Alphabet, CyclicWord, PseudorandomParams, Word};

fn w(s: &str) -> Word {
    s.parse().unwrap()
}

#[test]
fn sample_shape_and_determinism() {
    let spec = RandomHomSpec::new(3, 2, 17, 5).unwrap();
    let a = sample_homomorphism(&spec);
    assert_eq!(a.len(), 3);
    assert!(a.iter().all(|x| x.len() == 17));
    assert_eq!(a, sample_homomorphism(&spec));
    assert_ne!(a, sample_homomorphism(&RandomHomSpec::new(3, 2, 17, 6).unwrap()));
}

#[test]
fn spec_invariants() {
    assert!(RandomHomSpec::new(0, 2, 5, 0).is_err());
    assert!(RandomHomSpec::new(1, 1, 5, 0).is_err());
    assert!(RandomHomSpec::new(1, 2, 0, 0).is_err());
    assert!(GraphOfGroupsSpec::explicit(Kind::Amalgam, 2, vec![w("ab")], vec![]).is_err());
    assert!(GraphOfGroupsSpec::explicit(Kind::Amalgam, 2, vec![w("ab")], vec![w("c")]).is_err());
}

#[test]
fn single_letter_images_are_uniform() {
    // Chi-square on 4 cells, 3 degrees of freedom; 16.27 is the 0.1% tail.
    let mut counts = [0f64; 4];
    let trials = 4000;
    for seed in 0..trials {
        let x = &sample_homomorphism(&RandomHomSpec::new(1, 2, 1, seed).unwrap())[0];
        counts[x.letters()[0].code() as usize] += 1.0;
    }
    let expected = trials as f64 / 4.0;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    assert!(chi2 < 16.27, "chi2 = {chi2}, counts {counts:?}");
}

#[test]
fn overlap_counts_shared_prefix() {
    assert_eq!(folding_overlap(&[w("abab"), w("acac")]), 1);
    assert_eq!(folding_overlap(&[w("ab"), w("ba")]), 0);
    // Shared suffix shows up as a shared prefix of the inverses.
    assert_eq!(folding_overlap(&[w("abba"), w("baba")]), 2);
    let core = image_core(&[w("abab"), w("acac")]).unwrap();
    assert_eq!(core.overlap, 1);
    assert_eq!(core.rank, 2);
}

#[test]
fn identical_images_drop_rank() {
    assert!(matches!(
        image_core(&[w("abA"), w("abA")]),
        Err(ModelError::RankDrop { rank: 1, expected: 2, .. })
    ));
}

#[test]
fn lambda_hat_examples() {
    assert_eq!(lambda_hat(&[w("aaaa"), w("bbbb")]), 0.75);
    assert_eq!(lambda_hat(&[w("abAB"), w("abAB")]), 1.0);
    assert_eq!(longest_repeat(&[w("ab"), w("ba")]), 1);
    let s = GraphOfGroupsSpec::explicit(Kind::Hnn, 2, vec![w("aab")], vec![w("aab")]).unwrap();
    assert_eq!(small_cancellation_ratio(&s), 1.0);
    let s = GraphOfGroupsSpec::explicit(Kind::Amalgam, 2, vec![w("aab")], vec![w("aab")]).unwrap();
    assert_eq!(small_cancellation_ratio(&s), 1.0 / 3.0);
}

#[test]
fn square_is_not_malnormal() {
    let s = GraphOfGroupsSpec::explicit(Kind::Amalgam, 2, vec![w("aa")], vec![w("abAbb")]).unwrap();
    let e = build_certificate(&s, &default_chain(), &BuilderConfig::default()).unwrap_err();
    assert!(matches!(e, ModelError::MalnormalityFailed { .. }), "{e}");
    assert_eq!(e.stage(), "malnormal");
}

#[test]
fn hnn_with_equal_maps_is_not_malnormal() {
    let s = GraphOfGroupsSpec::explicit(Kind::Hnn, 2, vec![w("abAbb")], vec![w("abAbb")]).unwrap();
    let e = build_certificate(&s, &default_chain(), &BuilderConfig::default()).unwrap_err();
    assert!(matches!(e, ModelError::MalnormalityFailed { .. }), "{e}");
}

#[test]
fn unbalanced_chain_rejected() {
    let s = GraphOfGroupsSpec::sample(Kind::Amalgam, 1, 2, 30, 1).unwrap();
    let e = build_certificate(&s, &[w("a")], &BuilderConfig::default()).unwrap_err();
    assert!(matches!(e, ModelError::NotHomologicallyTrivial { side: 1 }), "{e}");
}

fn certify(kind: Kind, n: usize, seed: u64) -> CertificateFile {
    let spec = GraphOfGroupsSpec::sample(kind, 1, 2, n, seed).unwrap();
    let config = BuilderConfig {
        seed,
        ..BuilderConfig::default()
    };
    build_certificate(&spec, &default_chain(), &config).unwrap()
}

#[test]
fn amalgam_certificate_round_trips() {
    let c = certify(Kind::Amalgam, 60, 3);
    assert!(c.certificate.is_valid());
    let chis: i64 = c.certificate.pieces.iter().map(|p| p.fatgraph.euler_characteristic()).sum();
    assert_eq!(c.certificate.chi, chis);
    assert_eq!(c.certificate.genus, (2 - c.certificate.chi) / 2);
    assert!(c.certificate.chi < 0);
    let v = verify_certificate(&c);
    assert!(v.reproduced && v.valid);
    let text = serde_json::to_string_pretty(&c).unwrap();
    let back: CertificateFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back, c);
    let v = verify_certificate(&back);
    assert_eq!(
        serde_json::to_string(&v.checklist).unwrap(),
        serde_json::to_string(&c.certificate.checklist).unwrap()
    );
}

#[test]
fn hnn_certificate_verifies() {
    let c = certify(Kind::Hnn, 60, 4);
    assert!(verify_certificate(&c).valid);
    assert!(c.certificate.checklist.iter().any(|i| i.name == "malnormal.family"));
}

#[test]
fn certificate_is_deterministic() {
    let a = serde_json::to_string(&certify(Kind::Amalgam, 40, 9)).unwrap();
    let b = serde_json::to_string(&certify(Kind::Amalgam, 40, 9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn tampered_certificate_fails() {
    let mut c = certify(Kind::Amalgam, 40, 11);
    c.spec.phi2[0] = w("aa");
    let v = verify_certificate(&c);
    assert!(!v.valid);
    assert!(!v.reproduced);

    let mut c = certify(Kind::Amalgam, 40, 11);
    c.certificate.chi -= 2;
    assert!(!verify_certificate(&c).valid);
}

fn grid(trials: usize, build: bool) -> ExperimentGrid {
    ExperimentGrid {
        ns: vec![10, 20],
        trials,
        k: 2,
        l: 2,
        kind: Kind::Amalgam,
        seed: 1,
        pseudorandom: PseudorandomParams::new(2, 0.9),
        build,
        builder: BuilderConfig::default(),
    }
}

#[test]
fn experiment_rejects_zero_trials() {
    assert!(run_experiment(&grid(0, false), 1).is_err());
}

#[test]
fn experiment_shape_and_determinism() {
    let a = run_experiment(&grid(6, false), 1).unwrap();
    let b = run_experiment(&grid(6, false), 3).unwrap();
    assert_eq!(a.trials.len(), 12);
    assert_eq!(a.summary.len(), 2);
    for r in &a.summary {
        for x in [r.malnormal_rate, r.rigid_rate, r.pseudorandom_rate, r.lambda_below_sixth_rate] {
            assert!((0.0..=1.0).contains(&x));
        }
        assert_eq!(r.builder_success_rate, None);
    }
    let strip = |t: &ExperimentTable| {
        t.trials
            .iter()
            .map(|r| TrialRecord { millis: 0, ..r.clone() })
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
    let mut csv = Vec::new();
    write_csv(&mut csv, &a.trials).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(
        text.lines().next().unwrap(),
        "n,trial,malnormal,rigid,overlap_max,pseudorandom_pass,lambda_hat,builder_success,chi,genus,millis"
    );
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn experiment_with_builder() {
    let mut g = grid(2, true);
    g.k = 1;
    g.ns = vec![30];
    let t = run_experiment(&g, 1).unwrap();
    for r in &t.trials {
        assert!(r.builder_success.is_some());
        if r.builder_success == Some(true) {
            assert_eq!(r.genus, Some((2 - r.chi.unwrap()) / 2));
        }
    }
}

proptest! {
    #[test]
    fn default_chain_images_are_trivial_in_homology(n in 1usize..30, seed in any::<u64>()) {
        let spec = GraphOfGroupsSpec::sample(Kind::Amalgam, 2, 3, n, seed).unwrap();
        let alphabet = Alphabet::new(3).unwrap();
        for side in [1, 2] {
            let imgs: Vec<CyclicWord> = default_chain()
                .iter()
                .filter_map(|g| randsurf::words::cyclic_reduce(&apply(spec.images(side), g)).ok())
                .map(|(c, _)| c)
                .collect();
            prop_assert!(is_homologically_trivial(imgs.iter().map(|c| c.letters()), alphabet));
        }
    }

    #[test]
    fn lambda_hat_in_unit_interval(n in 1usize..40, seed in any::<u64>()) {
        let spec = GraphOfGroupsSpec::sample(Kind::Hnn, 2, 2, n, seed).unwrap();
        let x = small_cancellation_ratio(&spec);
        prop_assert!(x > 0.0 && x <= 1.0);
    }
}
