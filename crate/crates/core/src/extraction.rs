//! Growing a violation range around a counterexample.
//!
//! Starting from the point box `[ce, ce]`, each dimension's upper and then
//! lower bound is pushed outwards by one margin step whenever the adjacent
//! search range still contains a violating input. Probes that come back
//! clean are remembered per (direction, dimension) and become no-violation
//! ranges once the violation range grows past them in that direction.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Signed;
use thiserror::Error;

use crate::geometry::{Bound, Hyperrect, Side};
use crate::model::FeatureKind;
use crate::num::{from_f64, Rational};
use crate::smt::{ConstraintSet, SatResult, SmtError, UnknownReason, Verifier};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractionError {
    #[error("r_a must be a positive finite number, got {0}")]
    BadRatio(f64),
    #[error("domain is degenerate in dimension {0}; its margin would be zero")]
    DegenerateDimension(usize),
    #[error("domain has {found} dimensions but {expected} feature kinds were given")]
    Dimension { expected: usize, found: usize },
    #[error("counterexample lies outside the domain")]
    OutsideDomain,
    #[error(transparent)]
    Smt(#[from] SmtError),
}

/// Per-dimension probe width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Margin(Vec<Rational>);

impl Margin {
    pub fn new(steps: Vec<Rational>) -> Result<Self, ExtractionError> {
        if let Some(k) = steps.iter().position(|s| !s.is_positive()) {
            return Err(ExtractionError::DegenerateDimension(k));
        }
        Ok(Margin(steps))
    }

    pub fn steps(&self) -> &[Rational] {
        &self.0
    }
}

/// `(max_k - min_k) / r_a` for real dimensions, rounded up for integer ones.
pub fn mgn(r_a: f64, domain: &Hyperrect, kinds: &[FeatureKind]) -> Result<Margin, ExtractionError> {
    if !(r_a.is_finite() && r_a > 0.0) {
        return Err(ExtractionError::BadRatio(r_a));
    }
    if kinds.len() != domain.dim() {
        return Err(ExtractionError::Dimension { expected: domain.dim(), found: kinds.len() });
    }
    let ratio = from_f64(r_a).map_err(|_| ExtractionError::BadRatio(r_a))?;
    let steps = domain
        .intervals()
        .iter()
        .zip(kinds)
        .enumerate()
        .map(|(k, (iv, kind))| {
            let width = iv.width();
            if !width.is_positive() {
                return Err(ExtractionError::DegenerateDimension(k));
            }
            let step = width / &ratio;
            Ok(match kind {
                FeatureKind::Real => step,
                FeatureKind::Integer => step.ceil(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Margin::new(steps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expansion {
    /// The search range held a violation; the range grew.
    Grew,
    /// The search range was empty or clean.
    Stalled,
    Aborted(UnknownReason),
}

/// Mutable state of one extraction: the growing range, the tentative clean
/// probes and the finalized no-violation stack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionState {
    pub vio: Hyperrect,
    /// `tmp_nv[0]` holds lower-direction probes, `tmp_nv[1]` upper ones.
    pub tmp_nv: [Vec<Option<Hyperrect>>; 2],
    pub novios: Vec<Hyperrect>,
}

fn side_index(side: Side) -> usize {
    match side {
        Side::Lower => 0,
        Side::Upper => 1,
    }
}

impl ExtractionState {
    pub fn new(ce: &[Rational]) -> Self {
        ExtractionState {
            vio: Hyperrect::point(ce),
            tmp_nv: [vec![None; ce.len()], vec![None; ce.len()]],
            novios: Vec::new(),
        }
    }

    pub fn tentative(&self, dir: Side, k: usize) -> Option<&Hyperrect> {
        self.tmp_nv[side_index(dir)][k].as_ref()
    }

    /// The search range next to `vio` along dimension `k` in direction
    /// `dir`, clipped to `domain`. The face shared with `vio` is open.
    pub fn search_range(&self, dir: Side, k: usize, margin: &Margin, domain: &Hyperrect) -> Hyperrect {
        let edge = self.vio.bound(dir, k).value.clone();
        let step = &margin.steps()[k];
        let outer = match dir {
            Side::Upper => &edge + step,
            Side::Lower => &edge - step,
        };
        let mut sr = self.vio.clone();
        *sr.bound_mut(dir, k) = Bound::closed(outer);
        *sr.bound_mut(dir.opposite(), k) = Bound::open(edge);
        domain.intersection(&sr).unwrap_or(sr)
    }

    /// One probe. An empty search range returns `Stalled` without a solver
    /// call.
    pub fn expand(
        &mut self,
        dir: Side,
        k: usize,
        verifier: &mut Verifier<'_>,
        rho: &ConstraintSet,
        margin: &Margin,
        domain: &Hyperrect,
    ) -> Result<Expansion, SmtError> {
        let sr = self.search_range(dir, k, margin, domain);
        if sr.is_empty_for(&verifier.kinds()) {
            return Ok(Expansion::Stalled);
        }
        match verifier.check(&rho.confined_to(&sr))? {
            SatResult::Sat { .. } => {
                *self.vio.bound_mut(dir, k) = sr.bound(dir, k).clone();
                if let Some(clean) = self.tmp_nv[side_index(dir)][k].take() {
                    self.novios.push(clean);
                }
                Ok(Expansion::Grew)
            }
            SatResult::Unsat => {
                self.tmp_nv[side_index(dir)][k] = Some(sr);
                Ok(Expansion::Stalled)
            }
            SatResult::Unknown(reason) => Ok(Expansion::Aborted(reason)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionResult {
    pub vio: Hyperrect,
    /// Last pushed is last in the vector.
    pub novios: Vec<Hyperrect>,
    /// Set when a probe could not be decided; `vio` is then the range as far
    /// as it had grown.
    pub aborted: Option<UnknownReason>,
}

/// Grows the violation range around `ce` until a full sweep over all
/// dimensions (upper before lower, ascending `k`) makes no progress.
pub fn range_extraction(
    ce: &[Rational],
    verifier: &mut Verifier<'_>,
    rho: &ConstraintSet,
    margin: &Margin,
    domain: &Hyperrect,
) -> Result<ExtractionResult, ExtractionError> {
    if !domain.contains(ce).unwrap_or(false) {
        return Err(ExtractionError::OutsideDomain);
    }
    let mut state = ExtractionState::new(ce);
    let mut progressed = true;
    while progressed {
        progressed = false;
        for k in 0..ce.len() {
            for dir in [Side::Upper, Side::Lower] {
                match state.expand(dir, k, verifier, rho, margin, domain)? {
                    Expansion::Grew => progressed = true,
                    Expansion::Stalled => {}
                    Expansion::Aborted(reason) => {
                        return Ok(ExtractionResult { vio: state.vio, novios: state.novios, aborted: Some(reason) });
                    }
                }
            }
        }
    }
    Ok(ExtractionResult { vio: state.vio, novios: state.novios, aborted: None })
}
