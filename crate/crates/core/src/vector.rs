//! Dense vector helpers, sphere geometry and sparse unit vectors.

use rand::seq::index;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, SeedSpec};

/// Tolerance on `|‖x‖₂ − 1|` for a vector to count as unit norm.
pub const UNIT_TOL: f64 = 1e-9;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Indices of nonzero entries, ascending.
pub fn support(a: &[f64]) -> Vec<usize> {
    a.iter()
        .enumerate()
        .filter(|(_, &x)| x != 0.0)
        .map(|(i, _)| i)
        .collect()
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}

/// Unit vector in `R^n` along coordinate `i`.
pub fn basis(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Distance between the projections of `u` and `v` onto the unit sphere.
///
/// Zero when both vectors vanish and one when exactly one does, which makes
/// the function total.
pub fn sphere_distance(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let nu = norm(u);
    let nv = norm(v);
    match (nu == 0.0, nv == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        (false, false) => u
            .iter()
            .zip(v)
            .map(|(a, b)| (a / nu - b / nv).powi(2))
            .sum::<f64>()
            .sqrt(),
    }
}

/// Angle between `u` and `v` in `[0, π]`.
///
/// Evaluated as `2·atan2(‖û − v̂‖₂, ‖û + v̂‖₂)` on the normalized vectors,
/// which equals `arccos⟨û, v̂⟩` but stays accurate near `0` and `π` where the
/// cosine form loses half its digits.
pub fn angular_distance(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(u.len(), v.len())?;
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (p, q) = (a / nu, b / nv);
        diff += (p - q) * (p - q);
        sum += (p + q) * (p + q);
    }
    Ok(2.0 * diff.sqrt().atan2(sum.sqrt()))
}

/// `arccos` of the cosine clamped to `[−1, 1]`; reference form of
/// [`angular_distance`].
pub fn angular_distance_acos(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(u.len(), v.len())?;
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    // rounding can push the cosine just outside [-1, 1]
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0).acos())
}

/// A k-sparse real vector of unit Euclidean norm, stored densely.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparseUnitVector {
    values: Vec<f64>,
    k: usize,
}

impl SparseUnitVector {
    /// Validates sparsity and unit norm.
    pub fn new(values: Vec<f64>, k: usize) -> Result<Self> {
        let n = values.len();
        if k == 0 || k > n {
            return Err(Error::InvalidSparsity { k, n });
        }
        if let Some(&bad) = values.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        let nnz = values.iter().filter(|&&x| x != 0.0).count();
        if nnz > k {
            return Err(Error::Invalid(format!(
                "{nnz} nonzero entries exceed sparsity budget {k}"
            )));
        }
        let r = norm(&values);
        if (r - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { norm: r });
        }
        Ok(Self { values, k })
    }

    /// Normalizes `values` first; fails on the zero vector.
    pub fn from_unnormalized(values: Vec<f64>, k: usize) -> Result<Self> {
        let r = norm(&values);
        if r == 0.0 {
            return Err(Error::ZeroVector);
        }
        Self::new(values.into_iter().map(|x| x / r).collect(), k)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn support(&self) -> Vec<usize> {
        support(&self.values)
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|&&x| x != 0.0).count()
    }
}

impl AsRef<[f64]> for SparseUnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Draws a k-sparse unit vector: uniform k-subset support, standard normal
/// values on it, then normalization.
pub fn random_sparse_unit(n: usize, k: usize, seed: SeedSpec) -> Result<SparseUnitVector> {
    if k == 0 || k > n {
        return Err(Error::InvalidSparsity { k, n });
    }
    let mut rng = seed.generator();
    let mut buf = vec![0.0; k];
    loop {
        let idx = index::sample(&mut rng, n, k);
        fill_standard_normal(&mut rng, &mut buf);
        let mut values = vec![0.0; n];
        for (i, &x) in idx.iter().zip(&buf) {
            values[i] = x;
        }
        // an all-zero draw has probability zero; retry rather than fail
        if norm(&values) > 0.0 {
            return SparseUnitVector::from_unnormalized(values, k);
        }
    }
}
