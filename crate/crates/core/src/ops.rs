use std::fmt;

use crate::element::{Element, IntElement};
use crate::error::{Error, Result};

/// An associative elementwise reduction.
///
/// `apply(a, b)` combines a lower-ranked operand `a` with a higher-ranked
/// operand `b`; order only matters for operations that are not commutative.
#[derive(Clone, Copy)]
pub struct ReduceOp<T> {
    name: &'static str,
    f: fn(T, T) -> T,
    commutative: bool,
    identity: Option<T>,
}

impl<T: Element> ReduceOp<T> {
    pub fn custom(name: &'static str, f: fn(T, T) -> T, commutative: bool, identity: Option<T>) -> Self {
        Self { name, f, commutative, identity }
    }

    pub fn sum() -> Self {
        Self::custom("sum", T::reduce_sum, true, Some(T::zero()))
    }

    pub fn prod() -> Self {
        Self::custom("prod", T::reduce_prod, true, Some(T::one()))
    }

    pub fn max() -> Self {
        Self::custom("max", |a, b| if b > a { b } else { a }, true, Some(T::min_value()))
    }

    pub fn min() -> Self {
        Self::custom("min", |a, b| if b < a { b } else { a }, true, Some(T::max_value()))
    }

    /// Keeps the lower-ranked operand. Associative but not commutative; used to
    /// check that rank order is honored.
    pub fn first() -> Self {
        Self::custom("first", |a, _| a, false, None)
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn is_commutative(&self) -> bool {
        self.commutative
    }

    pub fn identity(&self) -> Option<T> {
        self.identity
    }

    #[inline]
    pub fn apply(&self, lower: T, higher: T) -> T {
        (self.f)(lower, higher)
    }

    /// `inout[i] = lower[i] (op) inout[i]`.
    pub fn fold_lower(&self, lower: &[T], inout: &mut [T]) {
        for (acc, &l) in inout.iter_mut().zip(lower) {
            *acc = self.apply(l, *acc);
        }
    }

    /// `inout[i] = inout[i] (op) higher[i]`.
    pub fn fold_higher(&self, inout: &mut [T], higher: &[T]) {
        for (acc, &h) in inout.iter_mut().zip(higher) {
            *acc = self.apply(*acc, h);
        }
    }

    pub(crate) fn require_commutative(&self) -> Result<()> {
        if self.commutative {
            Ok(())
        } else {
            Err(Error::NonCommutative(self.name))
        }
    }
}

impl<T: IntElement> ReduceOp<T> {
    pub fn band() -> Self {
        Self::custom("band", |a, b| a & b, true, Some(!T::zero()))
    }

    pub fn bor() -> Self {
        Self::custom("bor", |a, b| a | b, true, Some(T::zero()))
    }

    pub fn bxor() -> Self {
        Self::custom("bxor", |a, b| a ^ b, true, Some(T::zero()))
    }
}

impl<T> fmt::Debug for ReduceOp<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReduceOp")
            .field("name", &self.name)
            .field("commutative", &self.commutative)
            .finish()
    }
}

/// `MPI_Reduce_local` semantics: `inout[i] = input[i] (op) inout[i]`.
pub fn reduce_local<T: Element>(input: &[T], inout: &mut [T], op: &ReduceOp<T>) -> Result<()> {
    crate::error::ensure!(
        input.len() >= inout.len(),
        "reduce_local input holds {} elements, need {}",
        input.len(),
        inout.len()
    );
    op.fold_lower(input, inout);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn commutes(op: &ReduceOp<i32>, rng: &mut ChaCha8Rng) -> bool {
        (0..200).all(|_| {
            let (a, b) = (rng.random_range(-50..50), rng.random_range(-50..50));
            op.apply(a, b) == op.apply(b, a)
        })
    }

    #[test]
    fn commutative_flags_are_truthful() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for op in [
            ReduceOp::<i32>::sum(),
            ReduceOp::prod(),
            ReduceOp::max(),
            ReduceOp::min(),
            ReduceOp::band(),
            ReduceOp::bor(),
            ReduceOp::bxor(),
            ReduceOp::first(),
        ] {
            assert_eq!(op.is_commutative(), commutes(&op, &mut rng), "{}", op.name());
        }
    }

    #[test]
    fn identities_are_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for op in [ReduceOp::<i32>::sum(), ReduceOp::prod(), ReduceOp::max(), ReduceOp::min(), ReduceOp::band(), ReduceOp::bor(), ReduceOp::bxor()] {
            let e = op.identity().unwrap();
            for _ in 0..100 {
                let x = rng.random::<i32>();
                assert_eq!(op.apply(e, x), x);
                assert_eq!(op.apply(x, e), x);
            }
        }
    }

    #[test]
    fn associativity_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for op in [ReduceOp::<i32>::sum(), ReduceOp::prod(), ReduceOp::max(), ReduceOp::bxor(), ReduceOp::first()] {
            for _ in 0..200 {
                let (a, b, c) = (rng.random::<i32>(), rng.random::<i32>(), rng.random::<i32>());
                assert_eq!(op.apply(op.apply(a, b), c), op.apply(a, op.apply(b, c)));
            }
        }
    }

    #[test]
    fn reduce_local_sums() {
        let mut inout = [3, 4];
        reduce_local(&[1, 2], &mut inout, &ReduceOp::sum()).unwrap();
        assert_eq!(inout, [4, 6]);
    }

    #[test]
    fn reduce_local_keeps_operand_order() {
        let mut inout = [9, 9];
        reduce_local(&[1, 2], &mut inout, &ReduceOp::first()).unwrap();
        assert_eq!(inout, [1, 2]);
    }

    #[test]
    fn reduce_local_matches_elementwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a: Vec<i32> = (0..97).map(|_| rng.random()).collect();
        let b: Vec<i32> = (0..97).map(|_| rng.random()).collect();
        let mut inout = b.clone();
        reduce_local(&a, &mut inout, &ReduceOp::sum()).unwrap();
        for i in 0..97 {
            assert_eq!(inout[i], a[i].wrapping_add(b[i]));
        }
    }

    #[test]
    fn short_input_is_rejected() {
        let mut inout = [0; 3];
        assert!(reduce_local(&[1], &mut inout, &ReduceOp::sum()).is_err());
    }
}
