//! Brute-force ground truth on small all-integer domains.
//!
//! Every grid point is pushed through exact prediction and property
//! evaluation. Real-valued features are rejected: a finite sample cannot
//! certify anything about a continuum.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::geometry::Hyperrect;
use crate::model::{Ensemble, FeatureKind, Point};
use crate::num::Rational;
use crate::property::{Property, PropertyError};

pub const DEFAULT_GRID_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("feature {0} is real-valued; the oracle only enumerates integer domains")]
    NonIntegerFeature(usize),
    #[error("grid has {size} points, above the cap of {cap}")]
    TooLarge { size: u128, cap: u64 },
    #[error("domain has {found} dimensions but the model has {expected} features")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Property(#[from] PropertyError),
}

/// Inclusive integer range per dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    starts: Vec<BigInt>,
    counts: Vec<u64>,
}

fn first_integer(iv: &crate::geometry::Interval) -> BigInt {
    let c = iv.lower.value.ceil();
    if !iv.lower.closed && c == iv.lower.value {
        c.to_integer() + 1
    } else {
        c.to_integer()
    }
}

fn last_integer(iv: &crate::geometry::Interval) -> BigInt {
    let f = iv.upper.value.floor();
    if !iv.upper.closed && f == iv.upper.value {
        f.to_integer() - 1
    } else {
        f.to_integer()
    }
}

impl GridSpec {
    /// All integer points of `domain`, honoring open bounds.
    pub fn from_domain(domain: &Hyperrect, kinds: &[FeatureKind], cap: u64) -> Result<Self, OracleError> {
        if kinds.len() != domain.dim() {
            return Err(OracleError::Dimension { expected: kinds.len(), found: domain.dim() });
        }
        if let Some(k) = kinds.iter().position(|&kind| kind != FeatureKind::Integer) {
            return Err(OracleError::NonIntegerFeature(k));
        }
        let mut starts = Vec::with_capacity(kinds.len());
        let mut counts = Vec::with_capacity(kinds.len());
        let mut size: u128 = 1;
        for iv in domain.intervals() {
            let lo = first_integer(iv);
            let hi = last_integer(iv);
            let count = if hi < lo { 0 } else { (hi - &lo + 1u32).to_u64().unwrap_or(u64::MAX) };
            size = size.saturating_mul(count as u128);
            starts.push(lo);
            counts.push(count);
        }
        if size > cap as u128 {
            return Err(OracleError::TooLarge { size, cap });
        }
        Ok(GridSpec { starts, counts })
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn size(&self) -> u64 {
        self.counts.iter().product()
    }

    /// Points in lexicographic order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        let mut offsets = alloc::vec![0u64; self.dim()];
        let mut remaining = self.size();
        core::iter::from_fn(move || {
            if remaining == 0 {
                return None;
            }
            remaining -= 1;
            let p = Point::new(
                self.starts
                    .iter()
                    .zip(&offsets)
                    .map(|(s, &o)| Rational::from_integer(s + BigInt::from(o)))
                    .collect(),
            );
            for k in (0..offsets.len()).rev() {
                offsets[k] += 1;
                if offsets[k] < self.counts[k] {
                    break;
                }
                offsets[k] = 0;
            }
            Some(p)
        })
    }
}

/// `{p in grid : the property fails at (p, predict(p))}`.
pub fn brute_force_violations(m: &Ensemble, phi: &Property, grid: &GridSpec) -> Result<BTreeSet<Point>, OracleError> {
    if grid.dim() != m.feature_count() {
        return Err(OracleError::Dimension { expected: m.feature_count(), found: grid.dim() });
    }
    if let Some(k) = m.kinds().iter().position(|&kind| kind != FeatureKind::Integer) {
        return Err(OracleError::NonIntegerFeature(k));
    }
    phi.bind(m.feature_count())?;
    let mut out = BTreeSet::new();
    for p in grid.points() {
        // lengths match, so prediction cannot fail
        let y = m.predict(&p).unwrap_or_else(|_| Rational::zero());
        if !phi.evaluate(&p, &y)? {
            out.insert(p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageReport {
    pub uncovered: Vec<Point>,
}

impl CoverageReport {
    pub fn passed(&self) -> bool {
        self.uncovered.is_empty()
    }
}

/// Violating points that no range contains.
pub fn coverage_check<'a>(vranges: &[Hyperrect], violations: impl IntoIterator<Item = &'a Point>) -> CoverageReport {
    let uncovered = violations
        .into_iter()
        .filter(|p| !vranges.iter().any(|r| r.contains(p).unwrap_or(false)))
        .cloned()
        .collect();
    CoverageReport { uncovered }
}
