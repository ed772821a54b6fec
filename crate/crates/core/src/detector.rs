//! The outer detection loop.
//!
//! Repeatedly asks the solver for a violating input outside everything found
//! so far, grows a violation range around it, optionally narrows that range
//! along the clean probes recorded during growth, and excludes it before the
//! next query. Stops when the solver proves no violation remains, or early
//! (with the ranges gathered so far) when the budget runs out or a query
//! cannot be decided.

use alloc::vec::Vec;
use core::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::division::{continue_division, range_division, Division, DivisionError};
use crate::extraction::{mgn, range_extraction, ExtractionError};
use crate::geometry::{GeometryError, Hyperrect};
use crate::model::{Ensemble, Point};
use crate::num::Rational;
use crate::property::Property;
use crate::smt::{ConstraintSet, SatResult, ScriptRunner, SmtError, UnknownReason, Verifier};

#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    /// Search-range ratio: each probe is `1/r_a` of the domain width.
    pub r_a: f64,
    /// Division keeps going while the core is at least `r_b` percent of the
    /// domain's hypervolume.
    pub r_b: f64,
    /// Number of dividing orders tried per division.
    pub r_c: usize,
    pub per_call_timeout: Duration,
    pub total_budget: Duration,
    pub seed: u64,
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters {
            r_a: 100.0,
            r_b: 10.0,
            r_c: 10,
            per_call_timeout: Duration::from_secs(60),
            total_budget: Duration::from_secs(24 * 60 * 60),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParameterError {
    #[error("r_a must be a positive finite number, got {0}")]
    RatioA(f64),
    #[error("r_b must be within [0, 100], got {0}")]
    RatioB(f64),
    #[error("r_c must be at least 1")]
    RatioC,
}

impl Parameters {
    pub fn validate(&self) -> Result<(), ParameterError> {
        if !(self.r_a.is_finite() && self.r_a > 0.0) {
            return Err(ParameterError::RatioA(self.r_a));
        }
        if !(0.0..=100.0).contains(&self.r_b) {
            return Err(ParameterError::RatioB(self.r_b));
        }
        if self.r_c == 0 {
            return Err(ParameterError::RatioC);
        }
        Ok(())
    }
}

/// Decides whether a core is still worth dividing.
pub trait DivisionCriterion {
    fn should_divide(&self, core: &Hyperrect, domain: &Hyperrect) -> Result<bool, DivisionError>;
}

/// Divide while the core is at least `r_b` percent of the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeRatio {
    pub r_b: f64,
}

impl DivisionCriterion for VolumeRatio {
    fn should_divide(&self, core: &Hyperrect, domain: &Hyperrect) -> Result<bool, DivisionError> {
        continue_division(core, domain, self.r_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// The last query was unsat: no violation lies outside the ranges.
    Complete,
    AbortedBudget,
    AbortedUnknown,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Complete => "complete",
            Status::AbortedBudget => "aborted_budget",
            Status::AbortedUnknown => "aborted_unknown",
        }
    }

    fn from_reason(reason: UnknownReason) -> Status {
        match reason {
            UnknownReason::BudgetExhausted => Status::AbortedBudget,
            _ => Status::AbortedUnknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Totals {
    /// Left at zero by the core; set by callers that own a clock.
    pub wall_time: Duration,
    pub solver_time: Duration,
    pub solver_calls: u64,
    pub avg_solver_call_time: Duration,
}

impl Totals {
    fn new(solver_time: Duration, solver_calls: u64) -> Self {
        let avg = if solver_calls == 0 { Duration::ZERO } else { solver_time / solver_calls as u32 };
        Totals { wall_time: Duration::ZERO, solver_time, solver_calls, avg_solver_call_time: avg }
    }
}

/// One pass of the outer loop: the counterexample, the range grown around
/// it, and where its output pieces landed in `vranges`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractionRecord {
    pub ce: Point,
    pub vio: Hyperrect,
    /// `vranges[first_range..first_range + range_count]`.
    pub first_range: usize,
    pub range_count: usize,
    pub divisions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub vranges: Vec<Hyperrect>,
    pub per_range_volume: Vec<f64>,
    pub totals: Totals,
    pub status: Status,
    pub excluded_vios: Vec<Hyperrect>,
    pub records: Vec<ExtractionRecord>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error(transparent)]
    Parameters(#[from] ParameterError),
    #[error("domain is empty")]
    EmptyDomain,
    #[error("domain has {found} dimensions but the model has {expected} features")]
    Dimension { expected: usize, found: usize },
    #[error(transparent)]
    Smt(#[from] SmtError),
    #[error(transparent)]
    Extraction(#[from] ExtractionError),
    #[error(transparent)]
    Division(#[from] DivisionError),
}

/// Runs detection with the volume-ratio division criterion.
pub fn detect_violation_ranges(
    m: &Ensemble,
    phi: &Property,
    domain: &Hyperrect,
    params: &Parameters,
    runner: &mut dyn ScriptRunner,
) -> Result<DetectionReport, DetectError> {
    detect_with(m, phi, domain, params, runner, &VolumeRatio { r_b: params.r_b })
}

pub fn detect_with(
    m: &Ensemble,
    phi: &Property,
    domain: &Hyperrect,
    params: &Parameters,
    runner: &mut dyn ScriptRunner,
    criterion: &dyn DivisionCriterion,
) -> Result<DetectionReport, DetectError> {
    params.validate()?;
    let s = m.feature_count();
    if domain.dim() != s {
        return Err(DetectError::Dimension { expected: s, found: domain.dim() });
    }
    if domain.is_empty_for(&m.kinds()) {
        return Err(DetectError::EmptyDomain);
    }
    let margin = mgn(params.r_a, domain, &m.kinds())?;
    let mut verifier = Verifier::new(m, phi, runner)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut rho = ConstraintSet::within(domain.clone());
    let mut vranges = Vec::new();
    let mut records = Vec::new();

    let status = loop {
        let ce = match verifier.check(&rho)? {
            SatResult::Unsat => break Status::Complete,
            SatResult::Unknown(reason) => break Status::from_reason(reason),
            SatResult::Sat { x, .. } => x,
        };
        let first_range = vranges.len();
        let extracted = range_extraction(&ce, &mut verifier, &rho, &margin, domain)?;
        let vio = extracted.vio;
        let mut novios = extracted.novios;
        let mut core = vio.clone();
        let mut divisions = 0;
        let mut aborted = extracted.aborted;
        while aborted.is_none() && !novios.is_empty() && criterion.should_divide(&core, domain)? {
            let Some(iv) = novios.pop() else { break };
            match range_division(&core, &iv, &rho, params.r_c, &mut verifier, &ce, &mut rng)? {
                Division::Done(outcome) => {
                    vranges.extend(outcome.surrds);
                    core = outcome.core;
                    divisions += 1;
                }
                Division::Aborted(reason) => aborted = Some(reason),
            }
        }
        vranges.push(core);
        records.push(ExtractionRecord {
            ce,
            vio: vio.clone(),
            first_range,
            range_count: vranges.len() - first_range,
            divisions,
        });
        rho.exclude(vio);
        if let Some(reason) = aborted {
            break Status::from_reason(reason);
        }
    };

    let per_range_volume = vranges.iter().map(Hyperrect::hypervolume).collect();
    Ok(DetectionReport {
        vranges,
        per_range_volume,
        totals: Totals::new(verifier.solver_time(), verifier.calls()),
        status,
        excluded_vios: rho.exclusions,
        records,
    })
}

/// `true` iff `x` lies in some range, i.e. the input must be routed away
/// from the model.
pub fn filter_check(vranges: &[Hyperrect], x: &[Rational]) -> Result<bool, GeometryError> {
    for range in vranges {
        if range.contains(x)? {
            return Ok(true);
        }
    }
    Ok(false)
}
