//! Axis-aligned hyperrectangles whose bounds may be open or closed.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::model::FeatureKind;
use crate::num::{format_rational, to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operation needs a non-empty box")]
    EmptyBox,
    #[error("anchor point lies outside the box")]
    AnchorOutside,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bound {
    pub value: Rational,
    pub closed: bool,
}

impl Bound {
    pub fn closed(value: Rational) -> Self {
        Bound { value, closed: true }
    }

    pub fn open(value: Rational) -> Self {
        Bound { value, closed: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Interval {
    pub lower: Bound,
    pub upper: Bound,
}

impl Interval {
    pub fn closed(lower: Rational, upper: Rational) -> Self {
        Interval { lower: Bound::closed(lower), upper: Bound::closed(upper) }
    }

    pub fn is_empty(&self) -> bool {
        match self.lower.value.cmp(&self.upper.value) {
            Ordering::Less => false,
            Ordering::Equal => !(self.lower.closed && self.upper.closed),
            Ordering::Greater => true,
        }
    }

    /// Empty, or (for integer dimensions) containing no integer.
    pub fn is_empty_for(&self, kind: FeatureKind) -> bool {
        if self.is_empty() {
            return true;
        }
        match kind {
            FeatureKind::Real => false,
            FeatureKind::Integer => {
                let mut first = self.lower.value.ceil();
                if !self.lower.closed && first == self.lower.value {
                    first += Rational::one();
                }
                if self.upper.closed {
                    first > self.upper.value
                } else {
                    first >= self.upper.value
                }
            }
        }
    }

    pub fn contains(&self, v: &Rational) -> bool {
        let above = if self.lower.closed { *v >= self.lower.value } else { *v > self.lower.value };
        let below = if self.upper.closed { *v <= self.upper.value } else { *v < self.upper.value };
        above && below
    }

    pub fn contains_closure(&self, v: &Rational) -> bool {
        *v >= self.lower.value && *v <= self.upper.value
    }

    pub fn width(&self) -> Rational {
        &self.upper.value - &self.lower.value
    }

    fn intersect(&self, other: &Interval) -> Interval {
        let lower = match self.lower.value.cmp(&other.lower.value) {
            Ordering::Greater => self.lower.clone(),
            Ordering::Less => other.lower.clone(),
            Ordering::Equal => Bound { value: self.lower.value.clone(), closed: self.lower.closed && other.lower.closed },
        };
        let upper = match self.upper.value.cmp(&other.upper.value) {
            Ordering::Less => self.upper.clone(),
            Ordering::Greater => other.upper.clone(),
            Ordering::Equal => Bound { value: self.upper.value.clone(), closed: self.upper.closed && other.upper.closed },
        };
        Interval { lower, upper }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lower.closed { '[' } else { '(' },
            format_rational(&self.lower.value),
            format_rational(&self.upper.value),
            if self.upper.closed { ']' } else { ')' },
        )
    }
}

/// Which bound of a box a dividing plane (or an expansion) refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Lower,
    Upper,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Lower => Side::Upper,
            Side::Upper => Side::Lower,
        }
    }
}

/// The hyperplane `x[dim] = value`, remembered together with the face of the
/// box it came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plane {
    pub dim: usize,
    pub value: Rational,
    pub originating_side: Side,
}

/// An s-dimensional box, one interval per input feature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hyperrect {
    intervals: Vec<Interval>,
}

impl Hyperrect {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Hyperrect { intervals }
    }

    /// Closed box `[lower_k, upper_k]` in every dimension.
    pub fn closed(bounds: impl IntoIterator<Item = (Rational, Rational)>) -> Self {
        Hyperrect { intervals: bounds.into_iter().map(|(lo, hi)| Interval::closed(lo, hi)).collect() }
    }

    /// Degenerate closed box `[x, x]`.
    pub fn point(x: &[Rational]) -> Self {
        Hyperrect::closed(x.iter().map(|v| (v.clone(), v.clone())))
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval(&self, k: usize) -> &Interval {
        &self.intervals[k]
    }

    pub fn interval_mut(&mut self, k: usize) -> &mut Interval {
        &mut self.intervals[k]
    }

    pub fn bound(&self, side: Side, k: usize) -> &Bound {
        match side {
            Side::Lower => &self.intervals[k].lower,
            Side::Upper => &self.intervals[k].upper,
        }
    }

    pub fn bound_mut(&mut self, side: Side, k: usize) -> &mut Bound {
        match side {
            Side::Lower => &mut self.intervals[k].lower,
            Side::Upper => &mut self.intervals[k].upper,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.iter().any(Interval::is_empty)
    }

    /// Emptiness taking integer-valued dimensions into account.
    pub fn is_empty_for(&self, kinds: &[FeatureKind]) -> bool {
        self.intervals.iter().zip(kinds).any(|(iv, &kind)| iv.is_empty_for(kind))
    }

    fn check_dim(&self, found: usize) -> Result<(), GeometryError> {
        if found == self.dim() {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch { expected: self.dim(), found })
        }
    }

    /// Per-dimension max of lowers and min of uppers. On equal bound values
    /// the result is closed only if both inputs are. May be empty.
    pub fn intersection(&self, other: &Hyperrect) -> Result<Hyperrect, GeometryError> {
        self.check_dim(other.dim())?;
        Ok(Hyperrect { intervals: self.intervals.iter().zip(&other.intervals).map(|(a, b)| a.intersect(b)).collect() })
    }

    pub fn contains(&self, x: &[Rational]) -> Result<bool, GeometryError> {
        self.check_dim(x.len())?;
        Ok(self.intervals.iter().zip(x).all(|(iv, v)| iv.contains(v)))
    }

    /// Membership in the closure of the box (strictness ignored).
    pub fn contains_closure(&self, x: &[Rational]) -> Result<bool, GeometryError> {
        self.check_dim(x.len())?;
        Ok(self.intervals.iter().zip(x).all(|(iv, v)| iv.contains_closure(v)))
    }

    /// Product of the side lengths, computed exactly; 0 for an empty box.
    /// Integer dimensions contribute their length, not their point count.
    pub fn hypervolume_exact(&self) -> Rational {
        if self.is_empty() {
            return Rational::zero();
        }
        self.intervals.iter().fold(Rational::one(), |acc, iv| acc * iv.width())
    }

    pub fn hypervolume(&self) -> f64 {
        to_f64(&self.hypervolume_exact())
    }

    /// The 2s faces of the box: for each dimension, its lower then its upper
    /// plane.
    pub fn calc_planes(&self) -> Result<Vec<Plane>, GeometryError> {
        if self.is_empty() {
            return Err(GeometryError::EmptyBox);
        }
        Ok(self
            .intervals
            .iter()
            .enumerate()
            .flat_map(|(dim, iv)| {
                [
                    Plane { dim, value: iv.lower.value.clone(), originating_side: Side::Lower },
                    Plane { dim, value: iv.upper.value.clone(), originating_side: Side::Upper },
                ]
            })
            .collect())
    }

    /// Cuts the box at `x[dim] = value` into a low piece (`x[dim] <= value`)
    /// and a high piece (`x[dim] > value`) and returns `(containing, other)`
    /// where `containing` holds `anchor`. An anchor on the plane belongs to
    /// the low piece. Either piece may be empty.
    pub fn slice(&self, plane: &Plane, anchor: &[Rational]) -> Result<(Hyperrect, Hyperrect), GeometryError> {
        if !self.contains_closure(anchor)? {
            return Err(GeometryError::AnchorOutside);
        }
        if plane.dim >= self.dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.dim(), found: plane.dim + 1 });
        }
        let source = &self.intervals[plane.dim];
        let low_half = Interval { lower: source.lower.clone(), upper: Bound::closed(plane.value.clone()) };
        let high_half = Interval { lower: Bound::open(plane.value.clone()), upper: source.upper.clone() };
        let mut low = self.clone();
        low.intervals[plane.dim] = source.intersect(&low_half);
        let mut high = self.clone();
        high.intervals[plane.dim] = source.intersect(&high_half);
        if anchor[plane.dim] <= plane.value {
            Ok((low, high))
        } else {
            Ok((high, low))
        }
    }
}

pub fn intersection(a: &Hyperrect, b: &Hyperrect) -> Result<Hyperrect, GeometryError> {
    a.intersection(b)
}

pub fn hypervolume(b: &Hyperrect) -> f64 {
    b.hypervolume()
}

pub fn calc_planes(b: &Hyperrect) -> Result<Vec<Plane>, GeometryError> {
    b.calc_planes()
}

pub fn slice_box(b: &Hyperrect, plane: &Plane, anchor: &[Rational]) -> Result<(Hyperrect, Hyperrect), GeometryError> {
    b.slice(plane, anchor)
}

pub fn contains(b: &Hyperrect, x: &[Rational]) -> Result<bool, GeometryError> {
    b.contains(x)
}

impl fmt::Display for Hyperrect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, iv) in self.intervals.iter().enumerate() {
            if k > 0 {
                f.write_str(" x ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}
