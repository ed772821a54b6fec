//! Solver queries for `F = F_M ∧ ¬φ ∧ ρ`.
//!
//! The crate never starts processes itself. A [`ScriptRunner`] receives one
//! complete SMT-LIB v2 script per query (one fresh solver instance per call)
//! and returns the solver's standard output. Every `sat` answer is replayed
//! through exact-rational prediction before it is believed.

pub mod encode;
pub mod response;

use alloc::string::String;
use alloc::vec::Vec;
use core::time::Duration;

use thiserror::Error;

use crate::geometry::Hyperrect;
use crate::model::{Ensemble, FeatureKind, Point};
use crate::num::{format_rational, Rational};
use crate::property::{Property, PropertyError};

pub use encode::{build_query, constraint_to_assertions, encode_model, Query, SymbolTable};
use response::Verdict;

/// The running constraint ρ: the input domain, an optional confinement box
/// (a search range or a piece under test), and boxes already excluded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    pub domain: Hyperrect,
    pub confinement: Option<Hyperrect>,
    pub exclusions: Vec<Hyperrect>,
}

impl ConstraintSet {
    pub fn within(domain: Hyperrect) -> Self {
        ConstraintSet { domain, confinement: None, exclusions: Vec::new() }
    }

    /// ρ ∧ within(b); nested confinements intersect.
    pub fn confined_to(&self, b: &Hyperrect) -> Self {
        let confinement = match &self.confinement {
            Some(c) => c.intersection(b).unwrap_or_else(|_| b.clone()),
            None => b.clone(),
        };
        ConstraintSet { domain: self.domain.clone(), confinement: Some(confinement), exclusions: self.exclusions.clone() }
    }

    /// ρ ∧ outside(b).
    pub fn exclude(&mut self, b: Hyperrect) {
        self.exclusions.push(b);
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Exact membership test mirroring the emitted assertions.
    pub fn admits(&self, x: &[Rational]) -> bool {
        let inside = |b: &Hyperrect| b.contains(x).unwrap_or(false);
        inside(&self.domain)
            && self.confinement.as_ref().is_none_or(inside)
            && !self.exclusions.iter().filter(|b| !b.is_empty()).any(inside)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnknownReason {
    Timeout,
    SolverUnknown,
    IoFailure,
    /// The session's total time budget ran out before the call was made.
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    /// A violating input and the model's output on it.
    Sat { x: Point, y: Rational },
    Unsat,
    Unknown(UnknownReason),
}

impl SatResult {
    pub fn verdict(&self) -> &'static str {
        match self {
            SatResult::Sat { .. } => "sat",
            SatResult::Unsat => "unsat",
            SatResult::Unknown(_) => "unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("solver command not found: {0}")]
    NotFound(String),
    #[error("solver timed out")]
    Timeout,
    #[error("solver i/o failure: {0}")]
    Io(String),
}

/// Executes SMT-LIB scripts on some solver.
pub trait ScriptRunner {
    /// Runs `script` in a fresh solver instance and returns its stdout.
    fn run(&mut self, script: &str) -> Result<String, RunError>;

    /// Whether the caller's overall time budget is spent.
    fn budget_exhausted(&self) -> bool {
        false
    }

    /// Wall time spent inside the solver so far.
    fn solver_time(&self) -> Duration {
        Duration::ZERO
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SmtError {
    #[error("solver command not found: {0}")]
    SolverNotFound(String),
    #[error("could not parse solver output: {0}")]
    Protocol(String),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error("constraint has {found} dimensions but the model has {expected} features")]
    Dimension { expected: usize, found: usize },
    /// The solver's model does not violate the property under exact
    /// prediction, or escapes ρ. This means the encoding is wrong.
    #[error("solver counterexample failed validation ({reason}) at x = {x}")]
    InvalidCounterexample { x: String, reason: &'static str },
}

/// A bound (model, property) pair plus a runner; counts every solver
/// invocation.
pub struct Verifier<'a> {
    model: &'a Ensemble,
    property: &'a Property,
    symbols: SymbolTable,
    prelude: String,
    runner: &'a mut dyn ScriptRunner,
    calls: u64,
}

impl<'a> Verifier<'a> {
    pub fn new(model: &'a Ensemble, property: &'a Property, runner: &'a mut dyn ScriptRunner) -> Result<Self, SmtError> {
        property.bind(model.feature_count())?;
        Ok(Verifier {
            model,
            property,
            symbols: SymbolTable::for_model(model),
            prelude: encode::prelude(model, property),
            runner,
            calls: 0,
        })
    }

    pub fn model(&self) -> &'a Ensemble {
        self.model
    }

    pub fn property(&self) -> &'a Property {
        self.property
    }

    pub fn kinds(&self) -> Vec<FeatureKind> {
        self.model.kinds()
    }

    /// Number of solver invocations so far.
    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn solver_time(&self) -> Duration {
        self.runner.solver_time()
    }

    pub fn script(&self, rho: &ConstraintSet) -> String {
        encode::finish_query(&self.prelude, rho, &self.symbols)
    }

    /// Looks for an input that satisfies ρ and violates the property.
    ///
    /// The first call of a session always runs; later calls report
    /// `Unknown(BudgetExhausted)` without touching the solver once the
    /// runner says the budget is spent.
    pub fn check(&mut self, rho: &ConstraintSet) -> Result<SatResult, SmtError> {
        let s = self.model.feature_count();
        if rho.dim() != s {
            return Err(SmtError::Dimension { expected: s, found: rho.dim() });
        }
        if self.calls > 0 && self.runner.budget_exhausted() {
            return Ok(SatResult::Unknown(UnknownReason::BudgetExhausted));
        }
        let script = self.script(rho);
        self.calls += 1;
        let output = match self.runner.run(&script) {
            Ok(out) => out,
            Err(RunError::NotFound(cmd)) => return Err(SmtError::SolverNotFound(cmd)),
            Err(RunError::Timeout) => return Ok(SatResult::Unknown(UnknownReason::Timeout)),
            Err(RunError::Io(_)) => return Ok(SatResult::Unknown(UnknownReason::IoFailure)),
        };
        match response::parse_response(&output).map_err(SmtError::Protocol)? {
            Verdict::Unsat => Ok(SatResult::Unsat),
            Verdict::Unknown => Ok(SatResult::Unknown(UnknownReason::SolverUnknown)),
            Verdict::Sat(values) => {
                let mut x = Vec::with_capacity(s);
                for name in &self.symbols.inputs {
                    let v = values
                        .get(name)
                        .ok_or_else(|| SmtError::Protocol(alloc::format!("no value for `{name}`")))?;
                    x.push(v.clone());
                }
                let solver_y = values
                    .get(&self.symbols.output)
                    .ok_or_else(|| SmtError::Protocol(String::from("no value for `y`")))?;
                self.validate(Point::new(x), solver_y, rho)
            }
        }
    }

    fn validate(&self, x: Point, solver_y: &Rational, rho: &ConstraintSet) -> Result<SatResult, SmtError> {
        let invalid = |reason| SmtError::InvalidCounterexample { x: point_text(&x), reason };
        if !rho.admits(&x) {
            return Err(invalid("outside the constraint set"));
        }
        let kinds = self.model.kinds();
        if x.iter().zip(&kinds).any(|(v, k)| *k == FeatureKind::Integer && !v.is_integer()) {
            return Err(invalid("non-integer value for an integer feature"));
        }
        let y = self.model.predict(&x).map_err(|_| invalid("prediction failed"))?;
        if &y != solver_y {
            return Err(invalid("solver output differs from prediction"));
        }
        if self.property.evaluate(&x, &y)? {
            return Err(invalid("property holds at the counterexample"));
        }
        Ok(SatResult::Sat { x, y })
    }
}

fn point_text(x: &[Rational]) -> String {
    let parts: Vec<String> = x.iter().map(format_rational).collect();
    alloc::format!("[{}]", parts.join(", "))
}

/// One-shot query with a fresh call counter.
pub fn check_sat(
    m: &Ensemble,
    phi: &Property,
    rho: &ConstraintSet,
    runner: &mut dyn ScriptRunner,
) -> Result<SatResult, SmtError> {
    Verifier::new(m, phi, runner)?.check(rho)
}
