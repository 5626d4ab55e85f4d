//! Gaussian measurement matrices and 1-bit (sign) measurements.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, SeedSpec};
use crate::vector::check_len;

/// Sign with the convention `sgn(0) = +1`.
pub fn sgn(x: f64) -> Result<i8> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    Ok(sign_of(x))
}

#[inline]
pub(crate) fn sign_of(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Dense row-major `m × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    seed: Option<SeedSpec>,
}

impl MeasurementMatrix {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Invalid(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        check_len(rows * cols, data.len())?;
        if let Some(&bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self {
            rows,
            cols,
            data,
            seed: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(m * n);
        for r in rows {
            check_len(n, r.len())?;
            data.extend_from_slice(r);
        }
        Self::from_vec(m, n, data)
    }

    /// I.i.d. standard normal entries, filled row by row from `seed`.
    pub fn gaussian(rows: usize, cols: usize, seed: SeedSpec) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Invalid(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let mut data = vec![0.0; rows * cols];
        fill_standard_normal(&mut seed.generator(), &mut data);
        Ok(Self {
            rows,
            cols,
            data,
            seed: Some(seed),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self::from_vec(n, n, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn seed(&self) -> Option<SeedSpec> {
        self.seed
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `A x`. Only the support of `x` is touched.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        let nz: Vec<(usize, f64)> = x
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, v)| v != 0.0)
            .collect();
        Ok((0..self.rows)
            .map(|i| {
                let row = self.row(i);
                nz.iter().map(|&(j, v)| row[j] * v).sum()
            })
            .collect())
    }

    /// `scale · Aᵀ r` for a ternary (or sign) vector `r`.
    pub fn apply_transpose_ternary(&self, r: &[i8], scale: f64) -> Result<Vec<f64>> {
        check_len(self.rows, r.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, &ri) in r.iter().enumerate() {
            match ri {
                0 => {}
                1 => out.iter_mut().zip(self.row(i)).for_each(|(o, a)| *o += a),
                -1 => out.iter_mut().zip(self.row(i)).for_each(|(o, a)| *o -= a),
                other => {
                    return Err(Error::Invalid(format!(
                        "ternary entry {other} not in {{-1, 0, 1}}"
                    )))
                }
            }
        }
        out.iter_mut().for_each(|o| *o *= scale);
        Ok(out)
    }
}

/// `sgn(Ax)` as a vector over `{-1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignPattern(Vec<i8>);

impl SignPattern {
    pub fn new(bits: Vec<i8>) -> Result<Self> {
        if let Some(&bad) = bits.iter().find(|&&b| b != 1 && b != -1) {
            return Err(Error::Invalid(format!(
                "sign entry {bad} not in {{-1, +1}}"
            )));
        }
        Ok(Self(bits))
    }

    pub fn bits(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `½(bx − by)` over `{-1, 0, +1}` together with its support size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TernaryDiff {
    entries: Vec<i8>,
    support_count: usize,
}

impl TernaryDiff {
    pub fn entries(&self) -> &[i8] {
        &self.entries
    }

    /// Number of rows on which the two patterns disagree.
    pub fn support_count(&self) -> usize {
        self.support_count
    }
}

/// Row-wise `sgn(⟨A⁽ⁱ⁾, x⟩)`.
pub fn sign_measure(a: &MeasurementMatrix, x: &[f64]) -> Result<SignPattern> {
    let ax = a.apply(x)?;
    let bits = ax.into_iter().map(sgn).collect::<Result<Vec<_>>>()?;
    Ok(SignPattern(bits))
}

pub fn ternary_diff(bx: &SignPattern, by: &SignPattern) -> Result<TernaryDiff> {
    check_len(bx.len(), by.len())?;
    let entries: Vec<i8> = bx.0.iter().zip(&by.0).map(|(p, q)| (p - q) / 2).collect();
    let support_count = entries.iter().filter(|&&e| e != 0).count();
    Ok(TernaryDiff {
        entries,
        support_count,
    })
}
