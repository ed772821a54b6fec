mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{corpus, fixtures};
use tree_sentinel::format::{emit_domain, emit_model, load_model};
use tree_sentinel_core::model::{Aggregation, FeatureKind};
use tree_sentinel_core::parse_property;
use tree_sentinel_core::synthetic::{random_ensemble, random_property, SyntheticSpec};

const SYNTHETIC_CASES: usize = 36;

/// The first 24 cases are small; the rest have several features and deep
/// trees, which is where extraction leaves clean ranges behind for division.
fn synthetic_spec(i: usize) -> SyntheticSpec {
    if i >= 24 {
        return SyntheticSpec {
            n_trees: 4 + i % 2,
            max_depth: 3,
            features: 3 + i % 2,
            kind: FeatureKind::Integer,
            lo: 0,
            hi: if i.is_multiple_of(3) { 10 } else { 6 },
            leaf_lo: -4,
            leaf_hi: 4,
            aggregation: if i % 4 == 3 { Aggregation::Average } else { Aggregation::Sum },
            complete: i.is_multiple_of(2),
        };
    }
    SyntheticSpec {
        n_trees: 1 + i % 5,
        max_depth: 1 + i % 3,
        features: 1 + (i / 3) % 3,
        kind: FeatureKind::Integer,
        lo: 0,
        hi: 10,
        leaf_lo: -4,
        leaf_hi: 4,
        aggregation: if i % 4 == 3 { Aggregation::Average } else { Aggregation::Sum },
        complete: i.is_multiple_of(2),
    }
}

/// Regenerates the synthetic fixtures when BLESS is set; otherwise checks
/// that the checked-in files are what the generator produces.
#[test]
fn synthetic_fixtures_are_current() {
    let root = fixtures();
    let bless = std::env::var_os("BLESS").is_some();
    let mut manifest = String::from("# Generated by tests/corpus.rs; rerun with BLESS=1 to refresh.\n");
    for i in 0..SYNTHETIC_CASES {
        let spec = synthetic_spec(i);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + i as u64);
        let m = random_ensemble(&spec, &mut rng);
        let phi = random_property(&m, &spec, &mut rng);
        let name = format!("synth-{i:02}");
        let files = [
            (format!("models/{name}.json"), emit_model(&m)),
            (format!("domains/{name}.json"), emit_domain(&spec.domain())),
        ];
        for (rel, text) in &files {
            let path = root.join(rel);
            if bless {
                std::fs::write(&path, text).unwrap();
            }
            assert_eq!(&std::fs::read_to_string(&path).unwrap(), text, "{rel} is stale");
        }
        manifest.push_str(&format!(
            "\n[[case]]\nname = \"{name}\"\nmodel = \"{}\"\ndomain = \"{}\"\nproperty = \"{phi}\"\n",
            files[0].0, files[1].0
        ));
    }
    let path = root.join("synthetic.toml");
    if bless {
        std::fs::write(&path, &manifest).unwrap();
    }
    assert_eq!(std::fs::read_to_string(&path).unwrap(), manifest);
}

#[test]
fn corpus_loads_and_round_trips() {
    let cases = corpus();
    assert!(cases.len() >= SYNTHETIC_CASES + 4);
    for case in &cases {
        let reparsed = load_model(emit_model(&case.model).as_bytes()).unwrap();
        assert_eq!(reparsed, case.model, "{}", case.name);
        assert_eq!(parse_property(&case.property.to_string()).unwrap(), case.property, "{}", case.name);
    }
}
