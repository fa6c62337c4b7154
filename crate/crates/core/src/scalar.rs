//! Scalar abstraction shared by the numerical modules.
//!
//! Every formula in this crate needs `ln`, `sqrt` and `exp`, so the bound is
//! `num_traits::Float`. Both `f32` and `f64` implement [`Scalar`]; the
//! simulation harness runs in `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast, ToPrimitive};

/// Floating point scalar usable by the estimator, theory and policy code.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + NumCast + Debug + Display + Default + Send + Sync + 'static
{
}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("f64 literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn count<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// Lossy conversion to `f64`, used at reporting boundaries.
#[inline]
pub fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Index of the largest value, ties broken towards the lowest index.
///
/// NaN entries never win.
pub fn argmax_lowest<T: Scalar>(values: impl IntoIterator<Item = T>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            None if !v.is_nan() => best = Some((i, v)),
            Some((_, b)) if v > b => best = Some((i, v)),
            _ => {}
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax_lowest([0.3, 0.3]), Some(0));
        assert_eq!(argmax_lowest([0.1f32, 0.5, 0.5]), Some(1));
        assert_eq!(argmax_lowest(Vec::<f64>::new()), None);
        assert_eq!(argmax_lowest([f64::NAN, 0.2]), Some(1));
    }
}
