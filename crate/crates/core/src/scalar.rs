use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used by the numeric stages: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal, panicking only if the value cannot be represented at all.
    fn lit(value: f64) -> Self {
        Self::from_f64(value).expect("literal representable in scalar type")
    }

    fn from_usize_lossy(value: usize) -> Self {
        Self::from_usize(value).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub(crate) fn l2_norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Normalizes `row` in place. Returns `false` (and leaves an exact zero row)
/// when the row has no length to normalize.
pub(crate) fn normalize_in_place<T: Scalar>(row: &mut [T]) -> bool {
    let norm = l2_norm(row);
    if norm <= T::min_positive_value() || !norm.is_finite() {
        row.iter_mut().for_each(|x| *x = T::zero());
        return false;
    }
    row.iter_mut().for_each(|x| *x = *x / norm);
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_unit_and_zero() {
        let mut v = [3.0f64, 4.0];
        assert!(normalize_in_place(&mut v));
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);

        let mut z = [0.0f32; 3];
        assert!(!normalize_in_place(&mut z));
        assert_eq!(z, [0.0; 3]);
    }

    #[test]
    fn literal_conversion() {
        assert_eq!(<f32 as Scalar>::lit(0.5), 0.5f32);
        assert_eq!(<f64 as Scalar>::from_usize_lossy(7), 7.0);
    }
}
