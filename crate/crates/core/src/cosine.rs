//! Cosine similarity with the zero-norm convention `cos(a, b) = 0` when
//! `‖a‖‖b‖ = 0`, and the distance `D = ½(1 − cos) ∈ [0, 1]`.

use crate::error::{Error, Result};

#[inline]
pub(crate) fn dot_f32(a: &[f64], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, &y)| x * y as f64).sum()
}

#[inline]
pub(crate) fn dot_f32_f32(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub(crate) fn norm_sq_f32(a: &[f32]) -> f64 {
    dot_f32_f32(a, a)
}

/// Cosine from an inner product and the two squared norms. The product of
/// squared norms goes through a single square root so that `cos(a, a)` is
/// exactly 1.
#[inline]
pub fn cos_from_parts(dot: f64, norm_sq_a: f64, norm_sq_b: f64) -> f64 {
    let denom = norm_sq_a * norm_sq_b;
    if denom == 0.0 {
        0.0
    } else {
        (dot / denom.sqrt()).clamp(-1.0, 1.0)
    }
}

#[inline]
pub fn distance_from_cos(cos: f64) -> f64 {
    0.5 * (1.0 - cos)
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    crate::error::ensure_finite(a)?;
    crate::error::ensure_finite(b)?;
    Ok(cos_from_parts(dot(a, b), norm_sq(a), norm_sq(b)))
}

pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    cosine(a, b).map(distance_from_cos)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert_eq!(cosine_distance(&[1., 2., 3.], &[1., 2., 3.]).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[1., 0.], &[0., 1.]).unwrap(), 0.5);
        assert_eq!(cosine_distance(&[1., -2.], &[-1., 2.]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[0., 0.], &[3., 1.]).unwrap(), 0.5);
        assert_eq!(cosine_distance(&[0., 0.], &[0., 0.]).unwrap(), 0.5);
    }

    #[test]
    fn errors() {
        assert!(cosine_distance(&[1.0], &[1.0, 2.0]).is_err());
        assert!(cosine_distance(&[f64::NAN], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn in_unit_interval_and_scale_free(
            a in proptest::collection::vec(-10.0f64..10.0, 1..16),
            alpha in 0.01f64..100.0,
        ) {
            let b: Vec<f64> = a.iter().rev().cloned().collect();
            let d = cosine_distance(&a, &b).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            let scaled: Vec<f64> = a.iter().map(|x| x * alpha).collect();
            let d2 = cosine_distance(&scaled, &b).unwrap();
            prop_assert!((d - d2).abs() < 1e-12);
            prop_assert_eq!(cosine_distance(&a, &a).unwrap(), if norm_sq(&a) == 0.0 { 0.5 } else { 0.0 });
        }
    }
}
