//! Element types that can travel through a communicator.

use std::fmt::Debug;

use num_traits::{Bounded, Num, NumCast, PrimInt};

/// A fixed-width numeric element with a little-endian wire encoding.
///
/// Integer implementations use wrapping arithmetic for the `sum`/`prod`
/// reductions so that randomized sums stay exact and associative.
pub trait Element:
    Num + Bounded + NumCast + Copy + Default + PartialOrd + Debug + Send + Sync + 'static
{
    /// Encoded width in bytes.
    const WIDTH: usize;

    fn put_le(self, out: &mut Vec<u8>);

    /// Decodes one element from exactly `WIDTH` bytes.
    fn get_le(bytes: &[u8]) -> Self;

    fn reduce_sum(self, rhs: Self) -> Self;

    fn reduce_prod(self, rhs: Self) -> Self;
}

/// Integer elements, which additionally support the bitwise reductions.
pub trait IntElement: Element + PrimInt {}

impl<T: Element + PrimInt> IntElement for T {}

macro_rules! int_element {
    ($($t:ty),*) => {$(
        impl Element for $t {
            const WIDTH: usize = std::mem::size_of::<$t>();

            fn put_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            fn get_le(bytes: &[u8]) -> Self {
                let mut raw = [0u8; std::mem::size_of::<$t>()];
                raw.copy_from_slice(bytes);
                <$t>::from_le_bytes(raw)
            }

            fn reduce_sum(self, rhs: Self) -> Self {
                self.wrapping_add(rhs)
            }

            fn reduce_prod(self, rhs: Self) -> Self {
                self.wrapping_mul(rhs)
            }
        }
    )*};
}

macro_rules! float_element {
    ($($t:ty),*) => {$(
        impl Element for $t {
            const WIDTH: usize = std::mem::size_of::<$t>();

            fn put_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            fn get_le(bytes: &[u8]) -> Self {
                let mut raw = [0u8; std::mem::size_of::<$t>()];
                raw.copy_from_slice(bytes);
                <$t>::from_le_bytes(raw)
            }

            fn reduce_sum(self, rhs: Self) -> Self {
                self + rhs
            }

            fn reduce_prod(self, rhs: Self) -> Self {
                self * rhs
            }
        }
    )*};
}

int_element!(i32, i64, u32, u64);
float_element!(f32, f64);

/// Encodes a slice into its little-endian wire form.
pub fn encode<T: Element>(data: &[T]) -> Vec<u8> {
    let mut out = Vec::with_capacity(data.len() * T::WIDTH);
    for &x in data {
        x.put_le(&mut out);
    }
    out
}

/// Decodes a little-endian payload. Trailing bytes that do not form a whole
/// element are reported as `None`.
pub fn decode<T: Element>(bytes: &[u8]) -> Option<Vec<T>> {
    if bytes.len() % T::WIDTH != 0 {
        return None;
    }
    Some(bytes.chunks_exact(T::WIDTH).map(T::get_le).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn i32_is_little_endian() {
        assert_eq!(encode(&[1i32, -2]), vec![1, 0, 0, 0, 0xfe, 0xff, 0xff, 0xff]);
    }

    #[test]
    fn ragged_payload_is_rejected() {
        assert!(decode::<i32>(&[1, 2, 3]).is_none());
        assert_eq!(decode::<i32>(&[]), Some(vec![]));
    }

    #[test]
    fn integer_sum_wraps() {
        assert_eq!(i32::MAX.reduce_sum(1), i32::MIN);
    }

    proptest! {
        #[test]
        fn wire_round_trip_i32(v in proptest::collection::vec(any::<i32>(), 0..64)) {
            prop_assert_eq!(decode::<i32>(&encode(&v)).unwrap(), v);
        }

        #[test]
        fn wire_round_trip_f64(v in proptest::collection::vec(any::<f64>().prop_filter("nan", |x| !x.is_nan()), 0..64)) {
            prop_assert_eq!(decode::<f64>(&encode(&v)).unwrap(), v);
        }
    }
}
