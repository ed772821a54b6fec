//! Narrowing a violation range along the faces of a no-violation range.
//!
//! The core is sliced by each of the 2s faces of the clean box in some
//! order, keeping the piece that holds the counterexample. Outer pieces are
//! kept only if the solver still finds a violation in them. Several random
//! orders are tried and the one with the smallest total volume wins.

use alloc::collections::BTreeMap;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::geometry::{GeometryError, Hyperrect};
use crate::num::{from_f64, to_f64, Rational};
use crate::smt::{ConstraintSet, SatResult, SmtError, UnknownReason, Verifier};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DivisionError {
    #[error("r_c must be at least 1")]
    NoOrders,
    #[error("r_b must be a percentage in [0, 100], got {0}")]
    BadPercent(f64),
    #[error("domain has zero hypervolume")]
    ZeroDomainVolume,
    #[error("counterexample is not inside the core")]
    AnchorOutsideCore,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Smt(#[from] SmtError),
}

/// `true` iff the core's hypervolume is at least `r_b` percent of the
/// domain's. Compared exactly.
pub fn continue_division(core: &Hyperrect, domain: &Hyperrect, r_b: f64) -> Result<bool, DivisionError> {
    if !(0.0..=100.0).contains(&r_b) {
        return Err(DivisionError::BadPercent(r_b));
    }
    let total = domain.hypervolume_exact();
    if total.is_zero() {
        return Err(DivisionError::ZeroDomainVolume);
    }
    let percent = from_f64(r_b).map_err(|_| DivisionError::BadPercent(r_b))?;
    Ok(core.hypervolume_exact() * Rational::from_integer(100.into()) >= percent * total)
}

fn volume_sum_exact(core: &Hyperrect, surrds: &[Hyperrect]) -> Rational {
    surrds.iter().fold(core.hypervolume_exact(), |acc, b| acc + b.hypervolume_exact())
}

pub fn calc_volume_sum(core: &Hyperrect, surrds: &[Hyperrect]) -> f64 {
    to_f64(&volume_sum_exact(core, surrds))
}

fn factorial_at_most(n: usize, cap: usize) -> Option<usize> {
    (1..=n).try_fold(1usize, |acc, i| acc.checked_mul(i).filter(|&v| v <= cap))
}

fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).unwrap_or(i);
        current.swap(i - 1, j);
        current[i..].reverse();
    }
}

/// Up to `r_c` distinct orderings of `n` planes. When `n!` does not exceed
/// `r_c`, all of them (lexicographic order).
pub fn dividing_orders<R: Rng + ?Sized>(n: usize, r_c: usize, rng: &mut R) -> Vec<Vec<usize>> {
    if factorial_at_most(n, r_c).is_some() {
        return all_permutations(n);
    }
    let mut seen = BTreeSet::new();
    let mut orders = Vec::with_capacity(r_c);
    while orders.len() < r_c {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        if seen.insert(order.clone()) {
            orders.push(order);
        }
    }
    orders
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisionOutcome {
    pub core: Hyperrect,
    pub surrds: Vec<Hyperrect>,
    pub total_volume: f64,
    /// Index of the winning order among those tried.
    pub order_index: usize,
}

impl DivisionOutcome {
    pub fn piece_count(&self) -> usize {
        1 + self.surrds.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Division {
    Done(DivisionOutcome),
    /// A piece could not be decided; the input core must be kept whole.
    Aborted(UnknownReason),
}

/// Divides `core` along the faces of the clean box `iv`.
///
/// Pieces are checked under `ρ ∧ within(piece)`. Within one call the same
/// piece is only sent to the solver once; later orders reuse the verdict.
pub fn range_division<R: Rng + ?Sized>(
    core: &Hyperrect,
    iv: &Hyperrect,
    rho: &ConstraintSet,
    r_c: usize,
    verifier: &mut Verifier<'_>,
    ce: &[Rational],
    rng: &mut R,
) -> Result<Division, DivisionError> {
    if r_c == 0 {
        return Err(DivisionError::NoOrders);
    }
    if !core.contains_closure(ce)? {
        return Err(DivisionError::AnchorOutsideCore);
    }
    let planes = iv.calc_planes()?;
    let kinds = verifier.kinds();
    let orders = dividing_orders(planes.len(), r_c, rng);
    let mut verdicts: BTreeMap<Hyperrect, bool> = BTreeMap::new();
    let mut best: Option<(Rational, DivisionOutcome)> = None;

    for (order_index, order) in orders.iter().enumerate() {
        let mut working = core.clone();
        let mut surrds = Vec::new();
        for &p in order {
            let (inner, outer) = working.slice(&planes[p], ce)?;
            working = inner;
            if outer.is_empty_for(&kinds) {
                continue;
            }
            let violating = match verdicts.get(&outer) {
                Some(&v) => v,
                None => {
                    let v = match verifier.check(&rho.confined_to(&outer))? {
                        SatResult::Sat { .. } => true,
                        SatResult::Unsat => false,
                        SatResult::Unknown(reason) => return Ok(Division::Aborted(reason)),
                    };
                    verdicts.insert(outer.clone(), v);
                    v
                }
            };
            if violating {
                surrds.push(outer);
            }
        }
        let volume = volume_sum_exact(&working, &surrds);
        if best.as_ref().is_none_or(|(v, _)| volume < *v) {
            let total_volume = to_f64(&volume);
            best = Some((volume, DivisionOutcome { core: working, surrds, total_volume, order_index }));
        }
    }
    // orders is never empty: r_c >= 1 and n! >= 1
    let (_, outcome) = best.ok_or(DivisionError::NoOrders)?;
    Ok(Division::Done(outcome))
}
