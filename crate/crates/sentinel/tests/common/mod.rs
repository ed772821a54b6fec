#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use tree_sentinel::format::{load_domain, load_model};
use tree_sentinel::solver::ProcessRunner;
use tree_sentinel_core::model::FeatureKind;
use tree_sentinel_core::{parse_property, Ensemble, Hyperrect, Property};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

#[derive(Debug, Deserialize)]
pub struct CaseEntry {
    pub name: String,
    pub model: String,
    pub domain: String,
    pub property: String,
}

#[derive(Debug, Deserialize)]
struct Manifest {
    case: Vec<CaseEntry>,
}

pub struct Case {
    pub name: String,
    pub model_path: PathBuf,
    pub domain_path: PathBuf,
    pub model: Ensemble,
    pub domain: Hyperrect,
    pub property_text: String,
    pub property: Property,
}

impl Case {
    pub fn all_integer(&self) -> bool {
        self.model.kinds().iter().all(|k| *k == FeatureKind::Integer)
    }
}

pub fn manifest(file: &str) -> Vec<CaseEntry> {
    let path = fixtures().join(file);
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    toml::from_str::<Manifest>(&text).unwrap().case
}

fn load(entry: CaseEntry, root: &Path) -> Case {
    let model_path = root.join(&entry.model);
    let domain_path = root.join(&entry.domain);
    let model = load_model(&std::fs::read(&model_path).unwrap()).unwrap();
    let domain = load_domain(&std::fs::read(&domain_path).unwrap(), &model.kinds()).unwrap();
    let property = parse_property(&entry.property).unwrap();
    Case { name: entry.name, model_path, domain_path, model, domain, property_text: entry.property, property }
}

/// Hand-written cases followed by the synthetic ones.
pub fn corpus() -> Vec<Case> {
    let root = fixtures();
    manifest("corpus.toml").into_iter().chain(manifest("synthetic.toml")).map(|e| load(e, &root)).collect()
}

pub fn z3() -> ProcessRunner {
    ProcessRunner::new("z3 -in", Duration::from_secs(60), Duration::from_secs(3600)).unwrap()
}
