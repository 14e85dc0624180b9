use serde::{Deserialize, Serialize};

use super::LinalgError;

/// Dense column vector with finite entries.
///
/// Invariants: length ≥ 1, every entry finite. Public constructors validate;
/// arithmetic helpers preserve finiteness for finite inputs of sane scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    /// Builds a vector, rejecting empty input and NaN/Inf entries.
    pub fn new(entries: Vec<f64>) -> Result<Self, LinalgError> {
        if entries.is_empty() {
            return Err(LinalgError::EmptyVector);
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { index });
        }
        Ok(Self(entries))
    }

    /// All-zero vector of length `n` (`n` ≥ 1).
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "vector length must be at least 1");
        Self(vec![0.0; n])
    }

    /// Constant vector of length `n` (`n` ≥ 1, `value` finite).
    pub fn constant(n: usize, value: f64) -> Self {
        assert!(n >= 1, "vector length must be at least 1");
        assert!(value.is_finite(), "constant entry must be finite");
        Self(vec![value; n])
    }

    /// `i`-th standard basis vector scaled by `scale`.
    pub fn scaled_basis(n: usize, i: usize, scale: f64) -> Self {
        assert!(i < n, "basis index out of range");
        let mut v = Self::zeros(n);
        v.0[i] = scale;
        v
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        assert!(n >= 1, "vector length must be at least 1");
        Self((0..n).map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length ≥ 1 by construction
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.clone()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.len(), other.len(), "dot product length mismatch");
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm2(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, scale: f64, other: &Self) -> Self {
        assert_eq!(self.len(), other.len(), "add_scaled length mismatch");
        Self(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + scale * b)
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(-1.0, other)
    }

    pub fn scaled(&self, scale: f64) -> Self {
        Self(self.0.iter().map(|v| v * scale).collect())
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// In-place `self += scale * other`.
    pub(crate) fn axpy(&mut self, scale: f64, other: &Self) {
        assert_eq!(self.len(), other.len(), "axpy length mismatch");
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += scale * b;
        }
    }

    pub(crate) fn scale_in_place(&mut self, scale: f64) {
        for a in &mut self.0 {
            *a *= scale;
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm2()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<'a> IntoIterator for &'a DenseVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn norm2_examples() {
        assert_eq!(DenseVector::zeros(3).norm2(), 0.0);
        assert_eq!(DenseVector::new(vec![3.0, 4.0]).unwrap().norm2(), 5.0);
        assert_eq!(DenseVector::constant(4, 1.0).norm2(), 2.0);
    }

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(matches!(
            DenseVector::new(vec![]),
            Err(LinalgError::EmptyVector)
        ));
        assert!(matches!(
            DenseVector::new(vec![1.0, f64::NAN]),
            Err(LinalgError::NonFinite { index: 1 })
        ));
        assert!(matches!(
            DenseVector::new(vec![f64::INFINITY]),
            Err(LinalgError::NonFinite { index: 0 })
        ));
    }

    proptest! {
        // Absolute homogeneity within a few ulps of relative error.
        #[test]
        fn norm2_homogeneous(
            entries in proptest::collection::vec(-1e6f64..1e6, 1..20),
            c in -1e3f64..1e3,
        ) {
            let x = DenseVector::new(entries).unwrap();
            let lhs = x.scaled(c).norm2();
            let rhs = c.abs() * x.norm2();
            let scale = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
            prop_assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * scale);
        }
    }
}
