use std::path::Path;
use std::process::{Command, Output};

fn randsurf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_randsurf"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn rigid_commutator_loop() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&randsurf(d, &["fold", "abAB", "--out", "circle_abAB.graph"])), 0);
    let o = randsurf(d, &["rigid", "--loop", "abAB", "--core", "circle_abAB.graph"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "1 lift; fully rigid");
    let o = randsurf(d, &["rigid", "--loop", "ab", "--core", "circle_abAB.graph"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn duplicate_family_member_is_not_malnormal() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&randsurf(d, &["fold", "abAbb", "aBBAbAB", "--out", "y.graph"])), 0);
    assert_eq!(code(&randsurf(d, &["core", "--graph", "y.graph", "--out", "z1.graph"])), 0);
    assert_eq!(code(&randsurf(d, &["malnormal", "--cores", "z1.graph"])), 0);
    let o = randsurf(d, &["malnormal", "--cores", "z1.graph", "z1.graph"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("not malnormal"));
}

#[test]
fn fiber_product_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    randsurf(d, &["fold", "ab", "--out", "g1.json"]);
    randsurf(d, &["fold", "ba", "--out", "g2.json"]);
    let o = randsurf(d, &["fiber-product", "--graphs", "g1.json", "g2.json", "--out", "p.json"]);
    assert_eq!(code(&o), 0);
    assert!(d.join("p.json").exists());
}

#[test]
fn chain_and_pseudorandom_checks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&randsurf(d, &["chain-check", "abAB"])), 0);
    assert_eq!(code(&randsurf(d, &["chain-check", "ab", "AB"])), 0);
    assert_eq!(code(&randsurf(d, &["chain-check", "a"])), 1);
    let ab = "ab".repeat(200);
    assert_eq!(code(&randsurf(d, &["pseudorandom", &ab, "--T", "2", "--epsilon", "0.9"])), 1);
}

#[test]
fn malformed_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&randsurf(d, &["chain-check", "a?b"])), 2);
    assert_eq!(code(&randsurf(d, &["verify", "missing.json"])), 2);
    assert_eq!(code(&randsurf(d, &["fold", "abc", "--rank-l", "2"])), 2);
    assert_eq!(code(&randsurf(d, &["experiment", "--length", "10", "--trials", "0", "--seed", "1", "--out", "x.csv"])), 2);
    assert_eq!(code(&randsurf(d, &["no-such-command"])), 2);
}

#[test]
fn certify_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = randsurf(d, &["sample", "--length", "60", "--seed", "3", "--out", "amalgam.spec"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = randsurf(d, &["certify", "--spec", "amalgam.spec", "--seed", "7", "--out", "cert.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).starts_with("certificate valid"));
    let o = randsurf(d, &["verify", "cert.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("reproduced exactly"));

    // Same inputs, same bytes.
    randsurf(d, &["certify", "--spec", "amalgam.spec", "--seed", "7", "--out", "again.json"]);
    assert_eq!(std::fs::read(d.join("cert.json")).unwrap(), std::fs::read(d.join("again.json")).unwrap());

    let text = std::fs::read_to_string(d.join("cert.json")).unwrap();
    let tampered = text.replacen("\"chi\": -", "\"chi\": -1", 1);
    std::fs::write(d.join("bad.json"), tampered).unwrap();
    assert_eq!(code(&randsurf(d, &["verify", "bad.json"])), 1);
}

#[test]
fn square_image_fails_malnormality() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = r#"{"format":"randsurf-spec/1","kind":"amalgam","rank_k":1,"rank_l":2,
        "phi1":["aa"],"phi2":["abAbb"],"provenance":{"type":"explicit"}}"#;
    std::fs::write(d.join("sq.spec"), spec).unwrap();
    let o = randsurf(d, &["certify", "--spec", "sq.spec", "--seed", "1", "--out", "c.json"]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("[malnormal]"));
    assert!(!d.join("c.json").exists());
}

#[test]
fn build_pieces_and_glue() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    randsurf(d, &["fold", "abAB", "--out", "y.json"]);
    randsurf(d, &["core", "--graph", "y.json", "--out", "z.json"]);
    let o = randsurf(d, &["build-surface", "abAB", "--core", "z.json", "--oracle", "--seed", "1", "--out", "p1.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = randsurf(d, &["build-surface", "baBA", "--core", "z.json", "--seed", "2", "--out", "p2.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(code(&randsurf(d, &["verify", "p1.json"])), 0);
    let o = randsurf(d, &["glue", "p1.json", "p2.json", "--out", "closed.json"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).trim(), "glued closed surface: chi = -2, genus = 2");
    assert_eq!(code(&randsurf(d, &["verify", "closed.json"])), 0);
    // A chain with no lift.
    let o = randsurf(d, &["build-surface", "aabb", "--core", "z.json", "--seed", "1", "--out", "p3.json"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn experiment_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = |out: &'static str, jobs: &'static str| {
        vec!["experiment", "--length", "10,20", "--trials", "5", "--seed", "4", "--jobs", jobs, "--out", out]
    };
    assert_eq!(code(&randsurf(d, &args("a.csv", "1"))), 0);
    assert_eq!(code(&randsurf(d, &args("b.csv", "2"))), 0);
    let strip = |name: &str| -> Vec<String> {
        std::fs::read_to_string(d.join(name))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let a = strip("a.csv");
    assert_eq!(a, strip("b.csv"));
    assert_eq!(a.len(), 11);
    assert!(a[0].starts_with("n,trial,malnormal,rigid,overlap_max"));
    assert!(d.join("a.summary.csv").exists());
}

#[test]
fn generated_seed_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = randsurf(d, &["sample", "--length", "5", "--out", "s.spec"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("(generated)"));
    let spec = std::fs::read_to_string(d.join("s.spec")).unwrap();
    assert!(spec.contains("\"seed\""));
}
