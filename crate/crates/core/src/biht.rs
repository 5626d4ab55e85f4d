//! Normalized binary iterative hard thresholding.
//!
//! Each iteration takes a subgradient step on the sign mismatch,
//!
//! ```text
//! x̃ = x̂ + (η / 2m) · Aᵀ (b − sgn(A x̂))
//! ```
//!
//! keeps the `k` largest entries of `x̃` and projects back onto the unit
//! sphere. The step size defaults to `η = √(2π)`; the convergence guarantee
//! is stated for that value only.

use serde::Serialize;

use crate::error::{check_domain, Error, Result};
use crate::measure::{sign_measure, ternary_diff, MeasurementMatrix, SignPattern};
use crate::raic::{default_eta, raic_residual};
use crate::rng::SeedSpec;
use crate::thresholding::{normalize, top_k};
use crate::vector::{
    check_len, norm, random_sparse_unit, sphere_distance, SparseUnitVector, UNIT_TOL,
};

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    RandomSparseUnit(SeedSpec),
    Provided(SparseUnitVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BihtConfig {
    pub k: usize,
    pub eta: f64,
    pub max_iters: usize,
    pub init: Init,
    /// Stop once `d_S(x̂⁽ᵗ⁾, x̂⁽ᵗ⁻¹⁾) ≤ stop_tol`. Off by default.
    pub stop_tol: Option<f64>,
}

impl BihtConfig {
    pub fn new(k: usize, max_iters: usize, init: Init) -> Self {
        Self {
            k,
            eta: default_eta(),
            max_iters,
            init,
            stop_tol: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_domain(
            "eta",
            self.eta,
            "> 0",
            self.eta > 0.0 && self.eta.is_finite(),
        )?;
        if self.max_iters == 0 {
            return Err(Error::Invalid("max_iters must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidSparsity { k: 0, n: 0 });
        }
        if let Some(tol) = self.stop_tol {
            check_domain("stop_tol", tol, ">= 0", tol >= 0.0)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub iterate: SparseUnitVector,
    /// `d_S(x, x̂⁽ᵗ⁾)`, when the true signal is known.
    pub error_ds: Option<f64>,
    /// Rows on which `sgn(A x̂⁽ᵗ⁾)` disagrees with the observed signs.
    pub mismatch: usize,
    /// `4‖(x − x̂⁽ᵗ⁻¹⁾) − h_{A,supp(x̂⁽ᵗ⁾)}(x, x̂⁽ᵗ⁻¹⁾)‖₂`, for `t ≥ 1` with a
    /// known signal.
    pub lemma1_rhs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub records: Vec<IterationRecord>,
    pub stopped_early: bool,
}

impl Trajectory {
    pub fn last(&self) -> &IterationRecord {
        self.records
            .last()
            .expect("trajectory always holds the initial iterate")
    }

    /// First iteration where `error_ds > lemma1_rhs + slack`, if any.
    pub fn lemma1_violation(&self, slack: f64) -> Option<&IterationRecord> {
        self.records
            .iter()
            .find(|r| match (r.error_ds, r.lemma1_rhs) {
                (Some(d), Some(rhs)) => d > rhs + slack,
                _ => false,
            })
    }

    /// Smallest `lemma1_rhs − error_ds` over the trajectory.
    pub fn lemma1_min_slack(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| Some(r.lemma1_rhs? - r.error_ds?))
            .reduce(f64::min)
    }
}

fn require_unit(x: &SparseUnitVector) -> Result<()> {
    let r = norm(x.values());
    if (r - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnit { norm: r });
    }
    Ok(())
}

fn step_with_signs(
    a: &MeasurementMatrix,
    b: &SignPattern,
    x_prev: &SparseUnitVector,
    signs_prev: &SignPattern,
    k: usize,
    eta: f64,
) -> Result<SparseUnitVector> {
    let diff = ternary_diff(b, signs_prev)?;
    let mut x = x_prev.values().to_vec();
    if diff.support_count() > 0 {
        // (η/2m)·Aᵀ(b − s) = (η/m)·Aᵀ·½(b − s)
        let step = a.apply_transpose_ternary(diff.entries(), eta / a.rows() as f64)?;
        x.iter_mut().zip(&step).for_each(|(xi, si)| *xi += si);
    }
    let kept = top_k(&x, k)?;
    match normalize(&kept) {
        Ok(v) => SparseUnitVector::new(v, k),
        // normalization undefined at zero; keep the previous iterate
        Err(Error::ZeroVector) => Ok(x_prev.clone()),
        Err(e) => Err(e),
    }
}

/// One normalized BIHT update.
pub fn biht_step(
    a: &MeasurementMatrix,
    b: &SignPattern,
    x_prev: &SparseUnitVector,
    k: usize,
    eta: f64,
) -> Result<SparseUnitVector> {
    check_len(a.rows(), b.len())?;
    check_len(a.cols(), x_prev.dim())?;
    if k == 0 || k > a.cols() {
        return Err(Error::InvalidSparsity { k, n: a.cols() });
    }
    require_unit(x_prev)?;
    let signs = sign_measure(a, x_prev.values())?;
    step_with_signs(a, b, x_prev, &signs, k, eta)
}

/// Runs `config.max_iters` BIHT iterations from the configured start.
///
/// With `truth` given, every record carries `d_S(x, x̂⁽ᵗ⁾)` and, for `t ≥ 1`,
/// the deterministic upper bound on it (see [`IterationRecord::lemma1_rhs`]).
pub fn run_biht(
    a: &MeasurementMatrix,
    b: &SignPattern,
    config: &BihtConfig,
    truth: Option<&SparseUnitVector>,
) -> Result<Trajectory> {
    config.validate()?;
    let n = a.cols();
    check_len(a.rows(), b.len())?;
    if config.k > n {
        return Err(Error::InvalidSparsity { k: config.k, n });
    }
    if let Some(x) = truth {
        check_len(n, x.dim())?;
    }
    let start = match &config.init {
        Init::RandomSparseUnit(seed) => random_sparse_unit(n, config.k, *seed)?,
        Init::Provided(v) => {
            check_len(n, v.dim())?;
            v.clone()
        }
    };
    require_unit(&start)?;

    let mismatch_of =
        |signs: &SignPattern| -> Result<usize> { Ok(ternary_diff(b, signs)?.support_count()) };
    let error_of = |x: &SparseUnitVector| truth.map(|t| sphere_distance(t.values(), x.values()));

    let mut signs = sign_measure(a, start.values())?;
    let mut records = Vec::with_capacity(config.max_iters + 1);
    records.push(IterationRecord {
        iter: 0,
        error_ds: error_of(&start),
        mismatch: mismatch_of(&signs)?,
        lemma1_rhs: None,
        iterate: start,
    });

    let mut stopped_early = false;
    for t in 1..=config.max_iters {
        let prev = &records[t - 1].iterate;
        let next = step_with_signs(a, b, prev, &signs, config.k, config.eta)?;
        let lemma1_rhs = match truth {
            Some(x) => Some(
                4.0 * raic_residual(a, x.values(), prev.values(), &next.support(), config.eta)?,
            ),
            None => None,
        };
        let moved = sphere_distance(prev.values(), next.values());
        signs = sign_measure(a, next.values())?;
        records.push(IterationRecord {
            iter: t,
            error_ds: error_of(&next),
            mismatch: mismatch_of(&signs)?,
            lemma1_rhs,
            iterate: next,
        });
        if config.stop_tol.is_some_and(|tol| moved <= tol) {
            stopped_early = t < config.max_iters;
            break;
        }
    }
    Ok(Trajectory {
        records,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::streams;

    #[test]
    fn fixed_point_when_signs_agree() {
        let a = MeasurementMatrix::gaussian(50, 10, SeedSpec::new(1, streams::MATRIX)).unwrap();
        let x = random_sparse_unit(10, 3, SeedSpec::new(1, streams::SIGNAL)).unwrap();
        let b = sign_measure(&a, x.values()).unwrap();
        let next = biht_step(&a, &b, &x, 3, default_eta()).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn hand_computed_two_dimensional_step() {
        // A = I₂, x = e₁ ⇒ b = (+1, +1). From x̂ = (0, −1):
        // sgn(A x̂) = (+1, −1), ½(b − s) = (0, 1),
        // x̃ = (0, −1) + (η/2)·(0, 1) = (0, η/2 − 1) ≈ (0, 0.2533),
        // T₁ keeps index 1 (index 0 is exactly zero) ⇒ x̂' = (0, 1).
        let a = MeasurementMatrix::identity(2).unwrap();
        let b = SignPattern::new(vec![1, 1]).unwrap();
        let prev = SparseUnitVector::new(vec![0.0, -1.0], 1).unwrap();
        let next = biht_step(&a, &b, &prev, 1, default_eta()).unwrap();
        assert_eq!(next.values(), &[0.0, 1.0]);

        // From x̂ = (−0.6, 0.8) with k = 2: s = (−1, +1), ½(b − s) = (1, 0),
        // x̃ = (−0.6 + η/2, 0.8) = (0.653314…, 0.8), then normalized.
        let prev = SparseUnitVector::new(vec![-0.6, 0.8], 2).unwrap();
        let next = biht_step(&a, &b, &prev, 2, default_eta()).unwrap();
        let x0 = -0.6 + (2.0 * std::f64::consts::PI).sqrt() / 2.0;
        let r = (x0 * x0 + 0.64f64).sqrt();
        assert!((next.values()[0] - x0 / r).abs() < 1e-15);
        assert!((next.values()[1] - 0.8 / r).abs() < 1e-15);
    }

    #[test]
    fn step_output_is_sparse_unit() {
        let a = MeasurementMatrix::gaussian(80, 30, SeedSpec::new(2, streams::MATRIX)).unwrap();
        let x = random_sparse_unit(30, 4, SeedSpec::new(2, streams::SIGNAL)).unwrap();
        let b = sign_measure(&a, x.values()).unwrap();
        let mut cur = random_sparse_unit(30, 4, SeedSpec::new(2, streams::INIT)).unwrap();
        for _ in 0..10 {
            cur = biht_step(&a, &b, &cur, 4, default_eta()).unwrap();
            assert!(cur.nnz() <= 4);
            assert!((norm(cur.values()) - 1.0).abs() <= UNIT_TOL);
        }
    }

    #[test]
    fn step_rejects_bad_input() {
        let a = MeasurementMatrix::identity(2).unwrap();
        let b = SignPattern::new(vec![1, 1, 1]).unwrap();
        let prev = SparseUnitVector::new(vec![1.0, 0.0], 1).unwrap();
        assert!(biht_step(&a, &b, &prev, 1, 1.0).is_err());
        let b = SignPattern::new(vec![1, 1]).unwrap();
        assert!(biht_step(&a, &b, &prev, 3, 1.0).is_err());
    }

    #[test]
    fn stationary_from_truth() {
        let a = MeasurementMatrix::gaussian(60, 20, SeedSpec::new(3, streams::MATRIX)).unwrap();
        let x = random_sparse_unit(20, 3, SeedSpec::new(3, streams::SIGNAL)).unwrap();
        let b = sign_measure(&a, x.values()).unwrap();
        let cfg = BihtConfig::new(3, 5, Init::Provided(x.clone()));
        let traj = run_biht(&a, &b, &cfg, Some(&x)).unwrap();
        assert_eq!(traj.records.len(), 6);
        assert_eq!(traj.records[0].error_ds, Some(0.0));
        for r in &traj.records {
            assert_eq!(r.iterate, x);
            assert_eq!(r.mismatch, 0);
        }
    }

    #[test]
    fn run_is_deterministic_and_bounded() {
        let a = MeasurementMatrix::gaussian(400, 40, SeedSpec::new(4, streams::MATRIX)).unwrap();
        let x = random_sparse_unit(40, 4, SeedSpec::new(4, streams::SIGNAL)).unwrap();
        let b = sign_measure(&a, x.values()).unwrap();
        let cfg = BihtConfig::new(
            4,
            12,
            Init::RandomSparseUnit(SeedSpec::new(4, streams::INIT)),
        );
        let t1 = run_biht(&a, &b, &cfg, Some(&x)).unwrap();
        let t2 = run_biht(&a, &b, &cfg, Some(&x)).unwrap();
        assert_eq!(t1, t2);
        assert!(t1.lemma1_violation(1e-9).is_none());
        assert!(t1.records[0].lemma1_rhs.is_none());
        assert!(t1.records[1..].iter().all(|r| r.lemma1_rhs.is_some()));
    }

    #[test]
    fn early_stop() {
        let a = MeasurementMatrix::gaussian(60, 20, SeedSpec::new(5, streams::MATRIX)).unwrap();
        let x = random_sparse_unit(20, 3, SeedSpec::new(5, streams::SIGNAL)).unwrap();
        let b = sign_measure(&a, x.values()).unwrap();
        let mut cfg = BihtConfig::new(3, 50, Init::Provided(x.clone()));
        cfg.stop_tol = Some(0.0);
        let traj = run_biht(&a, &b, &cfg, None).unwrap();
        assert!(traj.stopped_early);
        assert_eq!(traj.records.len(), 2);
        assert!(traj.records.iter().all(|r| r.error_ds.is_none()));
    }

    #[test]
    fn config_validation() {
        let init = Init::RandomSparseUnit(SeedSpec::from(0));
        let mut cfg = BihtConfig::new(2, 0, init.clone());
        assert!(cfg.validate().is_err());
        cfg.max_iters = 1;
        cfg.eta = 0.0;
        assert!(cfg.validate().is_err());
        cfg.eta = 1.0;
        assert!(cfg.validate().is_ok());
    }
}
