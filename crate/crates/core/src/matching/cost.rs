use std::fmt::Debug;
use std::ops::{Add, Neg, Sub};

/// Arc costs and edge weights: a totally ordered abelian group.
///
/// The flow kernel never multiplies costs by each other, so any exact ordered
/// group works, including the rank-count vectors used by the leximin solver.
pub trait Cost:
    Clone + Ord + Debug + Add<Output = Self> + Sub<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;

    /// `self` added to itself `k` times (`k` may be negative).
    fn times(&self, k: i64) -> Self;

    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }
}

impl Cost for i64 {
    fn zero() -> Self {
        0
    }

    fn times(&self, k: i64) -> Self {
        self * k
    }
}

impl Cost for i128 {
    fn zero() -> Self {
        0
    }

    fn times(&self, k: i64) -> Self {
        self * i128::from(k)
    }
}
