//! Verification of decision-tree ensemble models against input/output
//! properties, and detection of the hyperrectangular input regions where a
//! property is violated.
//!
//! The crate is `no_std` (it needs `alloc`). Everything that touches the
//! outside world goes through [`smt::ScriptRunner`]: the caller supplies a
//! runner that feeds SMT-LIB v2 scripts to a solver and hands back its
//! textual answer. Encoding, response parsing, counterexample validation and
//! the region-growing algorithms all live here.

#![no_std]

extern crate alloc;

pub mod detector;
pub mod division;
pub mod extraction;
pub mod geometry;
pub mod model;
pub mod num;
pub mod oracle;
pub mod property;
pub mod smt;
pub mod synthetic;

pub use detector::{detect_violation_ranges, filter_check, DetectionReport, Parameters, Status};
pub use geometry::{Bound, Hyperrect, Interval, Plane, Side};
pub use model::{Aggregation, Ensemble, FeatureKind, FeatureSpec, Node, Path, Point, Tree};
pub use num::Rational;
pub use property::{parse_property, Property};
pub use smt::{ConstraintSet, SatResult, ScriptRunner};
