//! On-disk formats: the canonical model file, domain files, and the
//! violation-range file. Every number is carried as a decimal string so
//! nothing passes through binary floating point.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use tree_sentinel_core::geometry::{Bound, Interval};
use tree_sentinel_core::model::{Aggregation, Ensemble, FeatureKind, FeatureSpec, ModelError, Node, Tree};
use tree_sentinel_core::num::{format_rational, parse_rational, NumberError};
use tree_sentinel_core::{Hyperrect, Parameters, Rational};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error("{what}: {source}")]
    Number { what: String, source: NumberError },
    #[error("tree {tree}: node id {id} appears twice")]
    DuplicateNodeId { tree: usize, id: u64 },
    #[error("tree {tree}: reference to unknown node id {id}")]
    UnknownNodeId { tree: usize, id: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("domain has {found} bounds but the model has {expected} features")]
    DomainLength { expected: usize, found: usize },
    #[error("domain bound {feature}: min exceeds max")]
    DomainOrder { feature: usize },
    #[error("domain bound {feature}: integer feature needs integer bounds")]
    DomainNotIntegral { feature: usize },
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("CSV has no column named `{0}`")]
    MissingColumn(String),
    #[error("CSV has no data rows")]
    NoRows,
    #[error("range {range} has {found} dimensions, expected {expected}")]
    RangeDims { range: usize, expected: usize, found: usize },
}

fn number(text: &str, what: impl FnOnce() -> String) -> Result<Rational, FormatError> {
    parse_rational(text).map_err(|source| FormatError::Number { what: what(), source })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum KindEntry {
    Real,
    Integer,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeatureEntry {
    name: String,
    kind: KindEntry,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModeEntry {
    Sum,
    Average,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AggregationEntry {
    mode: ModeEntry,
    base_score: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum NodeEntry {
    Split { id: u64, feature: usize, threshold: String, yes: u64, no: u64 },
    Leaf { id: u64, value: String },
}

impl NodeEntry {
    fn id(&self) -> u64 {
        match self {
            NodeEntry::Split { id, .. } | NodeEntry::Leaf { id, .. } => *id,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeEntry {
    root: u64,
    nodes: Vec<NodeEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    features: Vec<FeatureEntry>,
    aggregation: AggregationEntry,
    trees: Vec<TreeEntry>,
}

fn tree_from_entry(t: usize, entry: &TreeEntry, s: usize) -> Result<Tree, FormatError> {
    let mut index = HashMap::with_capacity(entry.nodes.len());
    for (i, node) in entry.nodes.iter().enumerate() {
        if index.insert(node.id(), i).is_some() {
            return Err(FormatError::DuplicateNodeId { tree: t, id: node.id() });
        }
    }
    let lookup = |id: u64| index.get(&id).copied().ok_or(FormatError::UnknownNodeId { tree: t, id });
    let nodes = entry
        .nodes
        .iter()
        .map(|node| {
            Ok(match node {
                NodeEntry::Split { id, feature, threshold, yes, no } => Node::Split {
                    feature: *feature,
                    threshold: number(threshold, || format!("tree {t} node {id} threshold"))?,
                    yes: lookup(*yes)?,
                    no: lookup(*no)?,
                },
                NodeEntry::Leaf { id, value } => {
                    Node::Leaf { value: number(value, || format!("tree {t} node {id} value"))? }
                }
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    Ok(Tree::new(nodes, lookup(entry.root)?, s, t)?)
}

/// Parses and validates a canonical model file.
pub fn load_model(bytes: &[u8]) -> Result<Ensemble, FormatError> {
    let file: ModelFile = serde_json::from_slice(bytes)?;
    if file.format_version != FORMAT_VERSION {
        return Err(FormatError::Version(file.format_version));
    }
    let features: Vec<FeatureSpec> = file
        .features
        .iter()
        .map(|f| {
            let kind = match f.kind {
                KindEntry::Real => FeatureKind::Real,
                KindEntry::Integer => FeatureKind::Integer,
            };
            FeatureSpec::new(f.name.clone(), kind)
        })
        .collect();
    let s = features.len();
    let trees = file
        .trees
        .iter()
        .enumerate()
        .map(|(t, entry)| tree_from_entry(t, entry, s))
        .collect::<Result<Vec<_>, _>>()?;
    let aggregation = match file.aggregation.mode {
        ModeEntry::Sum => Aggregation::Sum,
        ModeEntry::Average => Aggregation::Average,
    };
    let base = number(&file.aggregation.base_score, || String::from("base_score"))?;
    Ok(Ensemble::new(features, trees, aggregation, base)?)
}

/// Canonical JSON for `m`; node ids are the node indices.
pub fn emit_model(m: &Ensemble) -> String {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        features: m
            .features()
            .iter()
            .map(|f| FeatureEntry {
                name: f.name.clone(),
                kind: match f.kind {
                    FeatureKind::Real => KindEntry::Real,
                    FeatureKind::Integer => KindEntry::Integer,
                },
            })
            .collect(),
        aggregation: AggregationEntry {
            mode: match m.aggregation() {
                Aggregation::Sum => ModeEntry::Sum,
                Aggregation::Average => ModeEntry::Average,
            },
            base_score: format_rational(m.base_score()),
        },
        trees: m
            .trees()
            .iter()
            .map(|tree| TreeEntry {
                root: tree.root() as u64,
                nodes: tree
                    .nodes()
                    .iter()
                    .enumerate()
                    .map(|(i, node)| match node {
                        Node::Split { feature, threshold, yes, no } => NodeEntry::Split {
                            id: i as u64,
                            feature: *feature,
                            threshold: format_rational(threshold),
                            yes: *yes as u64,
                            no: *no as u64,
                        },
                        Node::Leaf { value } => NodeEntry::Leaf { id: i as u64, value: format_rational(value) },
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("model file serializes");
    text.push('\n');
    text
}

/// `sha256:<hex>` of the raw model file bytes.
pub fn model_hash(bytes: &[u8]) -> String {
    format!("sha256:{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundEntry {
    min: String,
    max: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainFile {
    bounds: Vec<BoundEntry>,
}

fn check_domain(domain: Hyperrect, kinds: &[FeatureKind]) -> Result<Hyperrect, FormatError> {
    if domain.dim() != kinds.len() {
        return Err(FormatError::DomainLength { expected: kinds.len(), found: domain.dim() });
    }
    for (k, (iv, kind)) in domain.intervals().iter().zip(kinds).enumerate() {
        if iv.lower.value > iv.upper.value {
            return Err(FormatError::DomainOrder { feature: k });
        }
        if *kind == FeatureKind::Integer && !(iv.lower.value.is_integer() && iv.upper.value.is_integer()) {
            return Err(FormatError::DomainNotIntegral { feature: k });
        }
    }
    Ok(domain)
}

/// Closed box `[min_k, max_k]` per feature, checked against the model's
/// feature kinds.
pub fn load_domain(bytes: &[u8], kinds: &[FeatureKind]) -> Result<Hyperrect, FormatError> {
    let file: DomainFile = serde_json::from_slice(bytes)?;
    let bounds = file
        .bounds
        .iter()
        .enumerate()
        .map(|(k, b)| Ok((number(&b.min, || format!("bound {k} min"))?, number(&b.max, || format!("bound {k} max"))?)))
        .collect::<Result<Vec<_>, FormatError>>()?;
    check_domain(Hyperrect::closed(bounds), kinds)
}

pub fn emit_domain(domain: &Hyperrect) -> String {
    let file = DomainFile {
        bounds: domain
            .intervals()
            .iter()
            .map(|iv| BoundEntry { min: format_rational(&iv.lower.value), max: format_rational(&iv.upper.value) })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("domain file serializes");
    text.push('\n');
    text
}

/// Per-feature min and max over the rows of a CSV with a header row.
/// Columns are matched to features by name; other columns are ignored.
pub fn domain_from_csv(reader: impl std::io::Read, features: &[FeatureSpec]) -> Result<Hyperrect, FormatError> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers()?.clone();
    let columns = features
        .iter()
        .map(|f| headers.iter().position(|h| h.trim() == f.name).ok_or_else(|| FormatError::MissingColumn(f.name.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut bounds: Option<Vec<(Rational, Rational)>> = None;
    for (row, record) in csv.records().enumerate() {
        let record = record?;
        let values = columns
            .iter()
            .map(|&c| number(record.get(c).unwrap_or(""), || format!("CSV row {} column {}", row + 2, &headers[c])))
            .collect::<Result<Vec<_>, _>>()?;
        match &mut bounds {
            None => bounds = Some(values.into_iter().map(|v| (v.clone(), v)).collect()),
            Some(b) => {
                for ((lo, hi), v) in b.iter_mut().zip(values) {
                    if v < *lo {
                        *lo = v;
                    } else if v > *hi {
                        *hi = v;
                    }
                }
            }
        }
    }
    let bounds = bounds.ok_or(FormatError::NoRows)?;
    let kinds: Vec<FeatureKind> = features.iter().map(|f| f.kind).collect();
    check_domain(Hyperrect::closed(bounds), &kinds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimEntry {
    pub lower: String,
    pub lower_closed: bool,
    pub upper: String,
    pub upper_closed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeEntry {
    pub dims: Vec<DimEntry>,
}

impl RangeEntry {
    pub fn from_box(b: &Hyperrect) -> Self {
        RangeEntry {
            dims: b
                .intervals()
                .iter()
                .map(|iv| DimEntry {
                    lower: format_rational(&iv.lower.value),
                    lower_closed: iv.lower.closed,
                    upper: format_rational(&iv.upper.value),
                    upper_closed: iv.upper.closed,
                })
                .collect(),
        }
    }

    pub fn to_box(&self, range: usize) -> Result<Hyperrect, FormatError> {
        let intervals = self
            .dims
            .iter()
            .enumerate()
            .map(|(k, d)| {
                Ok(Interval {
                    lower: Bound { value: number(&d.lower, || format!("range {range} dim {k} lower"))?, closed: d.lower_closed },
                    upper: Bound { value: number(&d.upper, || format!("range {range} dim {k} upper"))?, closed: d.upper_closed },
                })
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        Ok(Hyperrect::new(intervals))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterEntry {
    pub r_a: f64,
    pub r_b: f64,
    pub r_c: usize,
    pub seed: u64,
    pub per_call_timeout_s: f64,
    pub total_budget_s: f64,
}

impl From<&Parameters> for ParameterEntry {
    fn from(p: &Parameters) -> Self {
        ParameterEntry {
            r_a: p.r_a,
            r_b: p.r_b,
            r_c: p.r_c,
            seed: p.seed,
            per_call_timeout_s: p.per_call_timeout.as_secs_f64(),
            total_budget_s: p.total_budget.as_secs_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeMeta {
    pub model_hash: String,
    pub property_text: String,
    pub parameters: ParameterEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeFile {
    pub ranges: Vec<RangeEntry>,
    pub meta: RangeMeta,
}

impl RangeFile {
    pub fn new(vranges: &[Hyperrect], meta: RangeMeta) -> Self {
        RangeFile { ranges: vranges.iter().map(RangeEntry::from_box).collect(), meta }
    }

    pub fn boxes(&self) -> Result<Vec<Hyperrect>, FormatError> {
        let boxes = self.ranges.iter().enumerate().map(|(i, r)| r.to_box(i)).collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = boxes.first() {
            if let Some((range, b)) = boxes.iter().enumerate().find(|(_, b)| b.dim() != first.dim()) {
                return Err(FormatError::RangeDims { range, expected: first.dim(), found: b.dim() });
            }
        }
        Ok(boxes)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("range file serializes");
        text.push('\n');
        text
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, FormatError> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const STUMP: &str = r#"{
        "format_version": 1,
        "features": [{"name": "a", "kind": "integer"}, {"name": "b", "kind": "real"}],
        "aggregation": {"mode": "sum", "base_score": "0.5"},
        "trees": [{"root": 10, "nodes": [
            {"id": 10, "kind": "split", "feature": 1, "threshold": "2.25", "yes": 11, "no": 12},
            {"id": 11, "kind": "leaf", "value": "-1"},
            {"id": 12, "kind": "leaf", "value": "0.1"}
        ]}]
    }"#;

    #[test]
    fn loads_and_round_trips() {
        let m = load_model(STUMP.as_bytes()).unwrap();
        assert_eq!(m.trees().len(), 1);
        assert_eq!(m.trees()[0].leaf_count(), 2);
        let x = [parse_rational("0").unwrap(), parse_rational("2.2").unwrap()];
        assert_eq!(m.predict(&x).unwrap(), parse_rational("-0.5").unwrap());
        let again = load_model(emit_model(&m).as_bytes()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn rejects_bad_models() {
        let dangling = STUMP.replace("\"no\": 12", "\"no\": 13");
        assert!(matches!(load_model(dangling.as_bytes()), Err(FormatError::UnknownNodeId { tree: 0, id: 13 })));
        let version = STUMP.replace("\"format_version\": 1", "\"format_version\": 2");
        assert!(matches!(load_model(version.as_bytes()), Err(FormatError::Version(2))));
        let float = STUMP.replace("\"2.25\"", "2.25");
        assert!(matches!(load_model(float.as_bytes()), Err(FormatError::Json(_))));
        let feature = STUMP.replace("\"feature\": 1", "\"feature\": 2");
        assert!(matches!(load_model(feature.as_bytes()), Err(FormatError::Model(ModelError::FeatureOutOfRange { .. }))));
        let cycle = STUMP.replace("\"yes\": 11", "\"yes\": 10");
        assert!(matches!(load_model(cycle.as_bytes()), Err(FormatError::Model(_))));
    }

    #[test]
    fn domain_files() {
        let kinds = [FeatureKind::Integer, FeatureKind::Real];
        let d = load_domain(br#"{"bounds": [{"min": "0", "max": "10"}, {"min": "-1.5", "max": "2"}]}"#, &kinds).unwrap();
        assert_eq!(load_domain(emit_domain(&d).as_bytes(), &kinds).unwrap(), d);
        let frac = br#"{"bounds": [{"min": "0.5", "max": "10"}, {"min": "0", "max": "2"}]}"#;
        assert!(matches!(load_domain(frac, &kinds), Err(FormatError::DomainNotIntegral { feature: 0 })));
        let short = br#"{"bounds": [{"min": "0", "max": "10"}]}"#;
        assert!(matches!(load_domain(short, &kinds), Err(FormatError::DomainLength { .. })));
        let flipped = br#"{"bounds": [{"min": "3", "max": "1"}, {"min": "0", "max": "2"}]}"#;
        assert!(matches!(load_domain(flipped, &kinds), Err(FormatError::DomainOrder { feature: 0 })));
    }

    #[test]
    fn csv_domain() {
        let features = [FeatureSpec::new("a", FeatureKind::Integer), FeatureSpec::new("b", FeatureKind::Real)];
        let csv = "b,price,a\n1.5,100,3\n-2,50,7\n0.25,75,5\n";
        let d = domain_from_csv(csv.as_bytes(), &features).unwrap();
        assert_eq!(d, Hyperrect::closed([(parse_rational("3").unwrap(), parse_rational("7").unwrap()), (parse_rational("-2").unwrap(), parse_rational("1.5").unwrap())]));
        assert!(matches!(domain_from_csv("x\n1\n".as_bytes(), &features), Err(FormatError::MissingColumn(_))));
    }

    #[test]
    fn range_file_round_trip() {
        let mut b = Hyperrect::closed([(parse_rational("1").unwrap(), parse_rational("1/3").unwrap())]);
        b.interval_mut(0).lower.closed = false;
        let meta = RangeMeta {
            model_hash: model_hash(b"abc"),
            property_text: String::from("y > 0"),
            parameters: ParameterEntry::from(&Parameters::default()),
        };
        let file = RangeFile::new(&[b.clone()], meta);
        let back = RangeFile::from_json(file.to_json().as_bytes()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.boxes().unwrap(), vec![b]);
        assert_eq!(file.meta.model_hash, "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
