//! The sign-difference correction map, its orthogonal decomposition, and a
//! sampling-based check of the restricted approximate invertibility condition.
//!
//! For a measurement matrix `A` with `m` rows the correction map is
//!
//! ```text
//! h_A(x, y) = (η / m) · Aᵀ · ½(sgn(Ax) − sgn(Ay))
//! ```
//!
//! and `h_{A,J}` restricts it to `supp(x) ∪ supp(y) ∪ J`. The condition asks
//! that `‖(x − y) − h_{A,J}(x, y)‖₂ ≤ a₁·√(δ·d_S(x, y)) + a₂·δ` for every pair
//! of k-sparse unit vectors and every `|J| ≤ k`. It cannot be verified over
//! the whole sparse sphere, so [`raic_certify`] samples pairs instead,
//! including pairs closer than `τ = δ / b` that uniform sampling never hits.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_domain, Error, Result};
use crate::measure::{sign_measure, ternary_diff, MeasurementMatrix, TernaryDiff};
use crate::rng::{fill_standard_normal, streams, SeedSpec};
use crate::theory::constants;
use crate::thresholding::threshold_set;
use crate::vector::{
    check_len, dot, norm, random_sparse_unit, sphere_distance, support, SparseUnitVector, UNIT_TOL,
};

/// Default step size `η = √(2π)`.
pub fn default_eta() -> f64 {
    (2.0 * PI).sqrt()
}

/// `(η / m) · Aᵀ r` for a precomputed sign difference `r`.
pub fn h_a_from_diff(a: &MeasurementMatrix, diff: &TernaryDiff, eta: f64) -> Result<Vec<f64>> {
    a.apply_transpose_ternary(diff.entries(), eta / a.rows() as f64)
}

pub fn h_a(a: &MeasurementMatrix, x: &[f64], y: &[f64], eta: f64) -> Result<Vec<f64>> {
    let diff = ternary_diff(&sign_measure(a, x)?, &sign_measure(a, y)?)?;
    h_a_from_diff(a, &diff, eta)
}

/// `supp(x) ∪ supp(y) ∪ J`, ascending.
pub fn union_support(x: &[f64], y: &[f64], set: &[usize]) -> Vec<usize> {
    let mut all: BTreeSet<usize> = support(x).into_iter().collect();
    all.extend(support(y));
    all.extend(set.iter().copied());
    all.into_iter().collect()
}

pub fn h_aj(
    a: &MeasurementMatrix,
    x: &[f64],
    y: &[f64],
    set: &[usize],
    eta: f64,
) -> Result<Vec<f64>> {
    let h = h_a(a, x, y, eta)?;
    threshold_set(&h, &union_support(x, y, set))
}

/// Split of a vector along `e₋ = (u − v)/‖u − v‖₂`, `e₊ = (u + v)/‖u + v‖₂`
/// and the orthogonal remainder `g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub c_minus: f64,
    pub c_plus: f64,
    pub g: Vec<f64>,
    pub e_minus: Vec<f64>,
    pub e_plus: Vec<f64>,
}

impl Decomposition {
    /// `c₋·e₋ + c₊·e₊ + g`.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.g
            .iter()
            .zip(self.e_minus.iter().zip(&self.e_plus))
            .map(|(g, (em, ep))| g + self.c_minus * em + self.c_plus * ep)
            .collect()
    }
}

fn require_unit(v: &[f64]) -> Result<()> {
    let r = norm(v);
    if (r - 1.0).abs() > UNIT_TOL {
        Err(Error::NotUnit { norm: r })
    } else {
        Ok(())
    }
}

/// Decomposes `h` for unit vectors `u ≠ ±v`.
pub fn orthogonal_decompose(h: &[f64], u: &[f64], v: &[f64]) -> Result<Decomposition> {
    check_len(u.len(), h.len())?;
    check_len(u.len(), v.len())?;
    require_unit(u)?;
    require_unit(v)?;
    let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let sum: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
    let (nd, ns) = (norm(&diff), norm(&sum));
    if nd <= 1e-12 || ns <= 1e-12 {
        return Err(Error::DegenerateDirections);
    }
    let e_minus: Vec<f64> = diff.iter().map(|x| x / nd).collect();
    let e_plus: Vec<f64> = sum.iter().map(|x| x / ns).collect();
    let c_minus = dot(&e_minus, h);
    let c_plus = dot(&e_plus, h);
    let g = h
        .iter()
        .zip(e_minus.iter().zip(&e_plus))
        .map(|(hv, (em, ep))| hv - c_minus * em - c_plus * ep)
        .collect();
    Ok(Decomposition {
        c_minus,
        c_plus,
        g,
        e_minus,
        e_plus,
    })
}

/// `‖(x − y) − h_{A,J}(x, y)‖₂`.
pub fn raic_residual(
    a: &MeasurementMatrix,
    x: &[f64],
    y: &[f64],
    set: &[usize],
    eta: f64,
) -> Result<f64> {
    check_len(a.cols(), x.len())?;
    check_len(a.cols(), y.len())?;
    let h = h_aj(a, x, y, set, eta)?;
    Ok(x.iter()
        .zip(y)
        .zip(&h)
        .map(|((xi, yi), hi)| (xi - yi - hi).powi(2))
        .sum::<f64>()
        .sqrt())
}

/// `a₁·√(δ·d_S) + a₂·δ`.
pub fn raic_bound(delta: f64, a1: f64, a2: f64, d_s: f64) -> Result<f64> {
    for (name, value) in [("delta", delta), ("a1", a1), ("a2", a2), ("d_s", d_s)] {
        check_domain(name, value, ">= 0", value >= 0.0 && value.is_finite())?;
    }
    Ok(a1 * (delta * d_s).sqrt() + a2 * delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Large,
    Small,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Large => "large",
            Regime::Small => "small",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaicRecord {
    pub pair_id: usize,
    pub d_s: f64,
    pub regime: Regime,
    pub residual: f64,
    pub bound: f64,
    pub ratio: f64,
    /// Set when the bound is zero but the residual is not.
    pub unbounded: bool,
}

/// Parameters of a sampled certification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaicCertifyConfig {
    pub k: usize,
    pub delta: f64,
    pub num_pairs: usize,
    /// How many of `num_pairs` are forced into the `d_S < τ` regime.
    pub small_pairs: usize,
    /// Upper bound on `|J|`; `k` matches the condition itself, `2k` the
    /// intermediate concentration statements.
    pub max_j: usize,
    pub eta: f64,
    pub a1: f64,
    pub a2: f64,
    /// Net-scale constant `b`, giving `τ = δ / b`.
    pub b: f64,
    pub seed: SeedSpec,
}

impl RaicCertifyConfig {
    /// Constants `a₁ = c₁`, `a₂ = c₂`, `b` from [`constants`], `η = √(2π)`,
    /// `|J| ≤ k` and one fifth of the pairs in the small regime.
    pub fn new(k: usize, delta: f64, num_pairs: usize, seed: SeedSpec) -> Self {
        let c = constants();
        Self {
            k,
            delta,
            num_pairs,
            small_pairs: num_pairs / 5,
            max_j: k,
            eta: default_eta(),
            a1: c.c1,
            a2: c.c2,
            b: c.b,
            seed,
        }
    }

    pub fn tau(&self) -> f64 {
        self.delta / self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaicReport {
    pub delta: f64,
    pub tau: f64,
    pub a1: f64,
    pub a2: f64,
    pub samples: usize,
    pub records: Vec<RaicRecord>,
    pub worst_ratio: f64,
    pub n_violations: usize,
}

impl RaicReport {
    pub fn from_records(delta: f64, tau: f64, a1: f64, a2: f64, records: Vec<RaicRecord>) -> Self {
        let worst_ratio = records.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let n_violations = records.iter().filter(|r| r.ratio > 1.0).count();
        Self {
            delta,
            tau,
            a1,
            a2,
            samples: records.len(),
            records,
            worst_ratio,
            n_violations,
        }
    }

    pub fn count(&self, regime: Regime) -> usize {
        self.records.iter().filter(|r| r.regime == regime).count()
    }
}

/// Residual, bound and ratio for one `(x, y, J)`.
pub fn evaluate_pair(
    a: &MeasurementMatrix,
    pair_id: usize,
    x: &SparseUnitVector,
    y: &SparseUnitVector,
    set: &[usize],
    config: &RaicCertifyConfig,
) -> Result<RaicRecord> {
    let d_s = sphere_distance(x.values(), y.values());
    let residual = raic_residual(a, x.values(), y.values(), set, config.eta)?;
    let bound = raic_bound(config.delta, config.a1, config.a2, d_s)?;
    let (ratio, unbounded) = if bound > 0.0 {
        (residual / bound, false)
    } else if residual == 0.0 {
        (0.0, false)
    } else {
        (f64::INFINITY, true)
    };
    let regime = if d_s < config.tau() {
        Regime::Small
    } else {
        Regime::Large
    };
    Ok(RaicRecord {
        pair_id,
        d_s,
        regime,
        residual,
        bound,
        ratio,
        unbounded,
    })
}

/// `y` near `x`: Gaussian noise of norm `τ/2` on `supp(x)`, then renormalized.
fn perturbed_pair(x: &SparseUnitVector, tau: f64, seed: SeedSpec) -> Result<SparseUnitVector> {
    let supp = x.support();
    let mut noise = vec![0.0; supp.len()];
    let mut rng = seed.generator();
    fill_standard_normal(&mut rng, &mut noise);
    let nn = norm(&noise);
    if nn == 0.0 {
        return Ok(x.clone());
    }
    let mut y = x.values().to_vec();
    for (&j, e) in supp.iter().zip(&noise) {
        y[j] += e * (0.5 * tau / nn);
    }
    SparseUnitVector::from_unnormalized(y, x.k())
}

fn random_subset(n: usize, max_size: usize, seed: SeedSpec) -> Vec<usize> {
    let mut rng = seed.generator();
    let size = rng.random_range(0..=max_size.min(n));
    let mut set = index::sample(&mut rng, n, size).into_vec();
    set.sort_unstable();
    set
}

/// Samples pairs of k-sparse unit vectors and random sets `J` and evaluates
/// the condition on each. Pair `i` uses the `i`-th child of `config.seed`;
/// the last `small_pairs` pairs are forced below distance `τ`.
pub fn raic_certify(a: &MeasurementMatrix, config: &RaicCertifyConfig) -> Result<RaicReport> {
    let n = a.cols();
    if config.num_pairs == 0 {
        return Err(Error::Invalid("num_pairs must be at least 1".into()));
    }
    if config.small_pairs > config.num_pairs {
        return Err(Error::Invalid(format!(
            "small_pairs ({}) exceeds num_pairs ({})",
            config.small_pairs, config.num_pairs
        )));
    }
    if config.k == 0 || config.k > n {
        return Err(Error::InvalidSparsity { k: config.k, n });
    }
    check_domain(
        "delta",
        config.delta,
        "(0, 1)",
        config.delta > 0.0 && config.delta < 1.0,
    )?;
    check_domain("eta", config.eta, "> 0", config.eta > 0.0)?;
    check_domain("b", config.b, "> 0", config.b > 0.0)?;
    raic_bound(config.delta, config.a1, config.a2, 0.0)?;

    let first_small = config.num_pairs - config.small_pairs;
    let records = (0..config.num_pairs)
        .into_par_iter()
        .map(|i| {
            let s = config.seed.child(i as u64);
            let x = random_sparse_unit(n, config.k, s.with_stream(streams::SIGNAL))?;
            let y = if i >= first_small {
                perturbed_pair(&x, config.tau(), s.with_stream(streams::PAIRS))?
            } else {
                random_sparse_unit(n, config.k, s.with_stream(streams::PAIRS))?
            };
            let set = random_subset(n, config.max_j, s.with_stream(streams::SUBSET));
            evaluate_pair(a, i, &x, &y, &set, config)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(RaicReport::from_records(
        config.delta,
        config.tau(),
        config.a1,
        config.a2,
        records,
    ))
}
