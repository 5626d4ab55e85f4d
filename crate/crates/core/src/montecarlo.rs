//! Monte Carlo validators for the probabilistic statements behind BIHT, and
//! the end-to-end convergence experiment.
//!
//! Every validator is a pure function of its seed. Trial `i` always draws from
//! `seed.child(i)` and results are reduced in trial order, so aggregates are
//! bit-identical regardless of the rayon thread count.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::biht::{run_biht, BihtConfig, Init, Trajectory};
use crate::error::{check_domain, Error, Result};
use crate::measure::{sign_measure, sign_of, ternary_diff, MeasurementMatrix};
use crate::raic::{default_eta, h_a_from_diff, orthogonal_decompose, union_support};
use crate::rng::{fill_standard_normal, sample_standard_normal, streams, SeedSpec};
use crate::theory::closed_form_bound;
use crate::thresholding::threshold_set;
use crate::vector::{
    angular_distance, basis, check_len, dot, norm, random_sparse_unit, sphere_distance,
};

/// Slack allowed on the deterministic per-iteration error bound.
pub const LEMMA1_SLACK: f64 = 1e-9;

/// One validator outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub name: String,
    pub estimate: f64,
    pub theory: f64,
    pub se: f64,
    pub z: f64,
    pub pass: bool,
}

impl Validation {
    /// Two-sided check `|estimate − theory| ≤ k_sigma · se`.
    pub fn mean_check(name: &str, estimate: f64, theory: f64, se: f64, k_sigma: f64) -> Self {
        let z = z_score(estimate, theory, se);
        Self {
            name: name.to_string(),
            estimate,
            theory,
            se,
            z,
            pass: z.abs() <= k_sigma,
        }
    }

    /// One-sided check `estimate ≤ bound + k_sigma · se`.
    pub fn upper_check(name: &str, estimate: f64, bound: f64, se: f64, k_sigma: f64) -> Self {
        Self {
            name: name.to_string(),
            estimate,
            theory: bound,
            se,
            z: z_score(estimate, bound, se),
            pass: estimate <= bound + k_sigma * se,
        }
    }
}

fn z_score(estimate: f64, theory: f64, se: f64) -> f64 {
    let d = estimate - theory;
    if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        d.signum() * f64::INFINITY
    }
}

/// Mean, sample standard deviation and count of a batch of observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub mean: f64,
    pub sd: f64,
    pub count: usize,
}

impl SampleStats {
    pub fn from_slice(xs: &[f64]) -> Self {
        let count = xs.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                sd: f64::NAN,
                count,
            };
        }
        let mean = xs.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, sd, count }
    }

    /// Standard error of the mean.
    pub fn se(&self) -> f64 {
        self.sd / (self.count as f64).sqrt()
    }
}

/// How the sign of an exact zero is resolved. Only [`SignConvention::Standard`]
/// is correct; the other exists to check that the validators notice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SignConvention {
    /// `sgn(0) = +1`.
    #[default]
    Standard,
    /// `sgn(0) = −1`.
    ZeroNegative,
}

impl SignConvention {
    #[inline]
    pub fn apply(self, x: f64) -> i8 {
        match self {
            SignConvention::Standard => sign_of(x),
            SignConvention::ZeroNegative => {
                if x > 0.0 {
                    1
                } else {
                    -1
                }
            }
        }
    }
}

fn nonzero(v: &[f64]) -> Result<()> {
    if norm(v) == 0.0 {
        Err(Error::ZeroVector)
    } else {
        Ok(())
    }
}

/// Fraction of standard normal rows `Z` with `sgn⟨u, Z⟩ ≠ sgn⟨v, Z⟩`.
pub fn mismatch_probability(u: &[f64], v: &[f64], draws: usize, seed: SeedSpec) -> Result<f64> {
    mismatch_probability_with(u, v, draws, seed, SignConvention::Standard)
}

pub fn mismatch_probability_with(
    u: &[f64],
    v: &[f64],
    draws: usize,
    seed: SeedSpec,
    convention: SignConvention,
) -> Result<f64> {
    check_len(u.len(), v.len())?;
    nonzero(u)?;
    nonzero(v)?;
    if draws == 0 {
        return Err(Error::Invalid("draws must be at least 1".into()));
    }
    let mut rng = seed.generator();
    let mut row = vec![0.0; u.len()];
    let mut hits = 0usize;
    for _ in 0..draws {
        fill_standard_normal(&mut rng, &mut row);
        if convention.apply(dot(u, &row)) != convention.apply(dot(v, &row)) {
            hits += 1;
        }
    }
    Ok(hits as f64 / draws as f64)
}

/// Fraction of rows on which the sign of the zero signal disagrees with the
/// reference pattern `sgn(A·0) = (+1, …, +1)`.
pub fn zero_signal_mismatch(
    n: usize,
    draws: usize,
    seed: SeedSpec,
    convention: SignConvention,
) -> f64 {
    let zero = vec![0.0; n];
    let mut rng = seed.generator();
    let mut row = vec![0.0; n];
    let mut hits = 0usize;
    for _ in 0..draws {
        fill_standard_normal(&mut rng, &mut row);
        if convention.apply(dot(&zero, &row)) != 1 {
            hits += 1;
        }
    }
    hits as f64 / draws.max(1) as f64
}

/// Per-trial counts of rows `A⁽ⁱ⁾` whose angle to `u` lies in
/// `[π/2 − β, π/2 + β]`, over `trials` independent `m`-row matrices.
///
/// The expectation `2βm/π` assumes a uniformly distributed angle, which
/// holds for `u ∈ R²`. In higher dimension the angle concentrates around
/// `π/2` and the count exceeds it.
pub fn band_count(
    u: &[f64],
    beta: f64,
    m: usize,
    trials: usize,
    seed: SeedSpec,
) -> Result<SampleStats> {
    check_domain("beta", beta, "[0, pi/2]", (0.0..=FRAC_PI_2).contains(&beta))?;
    nonzero(u)?;
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let (lo, hi) = (FRAC_PI_2 - beta, FRAC_PI_2 + beta);
    let counts = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.child(i as u64).generator();
            let mut row = vec![0.0; u.len()];
            let mut count = 0usize;
            for _ in 0..m {
                fill_standard_normal(&mut rng, &mut row);
                let theta = angular_distance(u, &row)?;
                if (lo..=hi).contains(&theta) {
                    count += 1;
                }
            }
            Ok(count as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SampleStats::from_slice(&counts))
}

/// Mean of the band count; `2βm/π` in expectation when `u ∈ R²`.
pub fn band_count_mean(
    u: &[f64],
    beta: f64,
    m: usize,
    trials: usize,
    seed: SeedSpec,
) -> Result<f64> {
    Ok(band_count(u, beta, m, trials, seed)?.mean)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProjectionMeans {
    /// `⟨e₋, h_A(u, v)⟩`; expectation `‖u − v‖₂`.
    pub minus: SampleStats,
    /// `⟨e₊, h_A(u, v)⟩`; expectation `0`.
    pub plus: SampleStats,
}

/// Projections of `h_A(u, v)` onto `e₋` and `e₊` over independent matrices.
pub fn projection_expectation(
    u: &[f64],
    v: &[f64],
    m: usize,
    trials: usize,
    seed: SeedSpec,
) -> Result<ProjectionMeans> {
    check_len(u.len(), v.len())?;
    if m == 0 || trials == 0 {
        return Err(Error::Invalid("m and trials must be at least 1".into()));
    }
    let n = u.len();
    let probe = orthogonal_decompose(&vec![0.0; n], u, v)?;
    let eta = default_eta();
    let pairs = (0..trials)
        .into_par_iter()
        .map(|i| {
            let a = MeasurementMatrix::gaussian(
                m,
                n,
                seed.child(i as u64).with_stream(streams::MATRIX),
            )?;
            let diff = ternary_diff(&sign_measure(&a, u)?, &sign_measure(&a, v)?)?;
            let h = h_a_from_diff(&a, &diff, eta)?;
            Ok((dot(&probe.e_minus, &h), dot(&probe.e_plus, &h)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (minus, plus): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(ProjectionMeans {
        minus: SampleStats::from_slice(&minus),
        plus: SampleStats::from_slice(&plus),
    })
}

/// Parameters for [`tail_frequency_check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailConfig {
    pub m: usize,
    pub trials: usize,
    /// Deviation parameter `t > 0`.
    pub t_param: f64,
    /// Sparsity level entering the `2√(2kℓ)/m` term.
    pub k: usize,
    /// Extra coordinates `J`, `|J| ≤ 2k`.
    pub set: Vec<usize>,
    pub seed: SeedSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRow {
    pub name: String,
    pub exceedances: usize,
    /// Draws with at least one sign mismatch; draws with `ℓ = 0` are skipped.
    pub draws: usize,
    pub frequency: f64,
    /// Average over draws of the conditional tail bound at the realized `ℓ`.
    pub bound: f64,
    /// Binomial standard error `√(bound(1 − bound)/draws)`.
    pub se: f64,
    pub pass: bool,
}

impl TailRow {
    pub fn to_validation(&self) -> Validation {
        Validation::upper_check(&self.name, self.frequency, self.bound, self.se, 3.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub rows: Vec<TailRow>,
    pub skipped_zero_mismatch: usize,
}

impl TailReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

struct TailDraw {
    ell: usize,
    exceed: [bool; 3],
}

/// Empirical exceedance frequencies of the three conditional concentration
/// statements for `h_{A,J}(u, v)`:
///
/// * `|⟨e₋, h_{A,J}/η⟩ − √(π/2)·(ℓ/m)·d_S/θ| ≥ ℓt/m`, bound `2e^{−ℓt²/2}`
/// * `|⟨e₊, h_{A,J}/η⟩| ≥ ℓt/m`, bound `2e^{−ℓt²/2}`
/// * `‖g_{A,J}/η‖₂ ≥ 2√(2kℓ)/m + ℓt/m`, bound `2e^{−ℓt²/8}`
///
/// Each draw is judged at its own realized `ℓ`; a row passes when the
/// frequency is at most the averaged bound plus three binomial standard
/// errors.
pub fn tail_frequency_check(u: &[f64], v: &[f64], config: &TailConfig) -> Result<TailReport> {
    check_len(u.len(), v.len())?;
    check_domain("t_param", config.t_param, "> 0", config.t_param > 0.0)?;
    if config.m == 0 || config.trials == 0 {
        return Err(Error::Invalid("m and trials must be at least 1".into()));
    }
    let n = u.len();
    if let Some(&j) = config.set.iter().find(|&&j| j >= n) {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    let probe = orthogonal_decompose(&vec![0.0; n], u, v)?;
    let theta = angular_distance(u, v)?;
    let d_s = sphere_distance(u, v);
    let eta = default_eta();
    let keep = union_support(u, v, &config.set);
    let (m, t, k) = (config.m as f64, config.t_param, config.k as f64);

    let draws = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let a = MeasurementMatrix::gaussian(
                config.m,
                n,
                config.seed.child(i as u64).with_stream(streams::MATRIX),
            )?;
            let diff = ternary_diff(&sign_measure(&a, u)?, &sign_measure(&a, v)?)?;
            let ell = diff.support_count();
            if ell == 0 {
                return Ok(TailDraw {
                    ell,
                    exceed: [false; 3],
                });
            }
            let h = h_a_from_diff(&a, &diff, eta)?;
            let hj = threshold_set(&h, &keep)?;
            let l = ell as f64;
            let minus = dot(&probe.e_minus, &hj) / eta;
            let plus = dot(&probe.e_plus, &hj) / eta;
            let g = orthogonal_decompose(&h, u, v)?.g;
            let gj = norm(&threshold_set(&g, &keep)?) / eta;
            let center = (PI / 2.0).sqrt() * (l / m) * d_s / theta;
            let dev = l * t / m;
            Ok(TailDraw {
                ell,
                exceed: [
                    (minus - center).abs() >= dev,
                    plus.abs() >= dev,
                    gj >= 2.0 * (2.0 * k * l).sqrt() / m + dev,
                ],
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let valid: Vec<&TailDraw> = draws.iter().filter(|d| d.ell > 0).collect();
    let skipped = draws.len() - valid.len();
    let names = ["tail_u_minus_v", "tail_u_plus_v", "tail_g"];
    let rates = [0.5, 0.5, 0.125];
    let rows = (0..3)
        .map(|s| {
            let count = valid.len();
            let exceedances = valid.iter().filter(|d| d.exceed[s]).count();
            let bound = if count == 0 {
                1.0
            } else {
                valid
                    .iter()
                    .map(|d| (2.0 * (-rates[s] * d.ell as f64 * t * t).exp()).min(1.0))
                    .sum::<f64>()
                    / count as f64
            };
            let frequency = if count == 0 {
                0.0
            } else {
                exceedances as f64 / count as f64
            };
            let se = (bound * (1.0 - bound) / count.max(1) as f64).sqrt();
            TailRow {
                name: names[s].to_string(),
                exceedances,
                draws: count,
                frequency,
                bound,
                se,
                pass: frequency <= bound + 3.0 * se,
            }
        })
        .collect();
    Ok(TailReport {
        rows,
        skipped_zero_mismatch: skipped,
    })
}

/// Parameters for [`convergence_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceConfig {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub trials: usize,
    pub iters: usize,
    /// Reference `ε` for the closed-form rate column.
    pub epsilon_ref: f64,
    pub eta: f64,
    pub seed: SeedSpec,
}

impl ConvergenceConfig {
    pub fn new(n: usize, k: usize, m: usize, trials: usize, iters: usize, seed: SeedSpec) -> Self {
        Self {
            n,
            k,
            m,
            trials,
            iters,
            epsilon_ref: 0.1,
            eta: default_eta(),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub t: usize,
    pub mean_ds: f64,
    pub median_ds: f64,
    pub max_ds: f64,
    pub closed_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceExperiment {
    pub trajectories: Vec<Trajectory>,
    pub table: Vec<ConvergenceRow>,
}

impl ConvergenceExperiment {
    pub fn mean_curve(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.mean_ds).collect()
    }
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Runs BIHT on `trials` fresh (signal, matrix, start) triples and
/// aggregates `d_S(x, x̂⁽ᵗ⁾)` per iteration.
///
/// Trial `i` draws its signal, matrix and start from the `SIGNAL`, `MATRIX`
/// and `INIT` streams of `seed.child(i)`. The deterministic per-iteration
/// error bound is checked on every iterate and a violation aborts the run.
pub fn convergence_experiment(config: &ConvergenceConfig) -> Result<ConvergenceExperiment> {
    let ConvergenceConfig {
        n,
        k,
        m,
        trials,
        iters,
        ..
    } = *config;
    if n == 0 || m == 0 || trials == 0 || iters == 0 {
        return Err(Error::Invalid(
            "n, m, trials and iters must be positive".into(),
        ));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidSparsity { k, n });
    }
    check_domain(
        "epsilon_ref",
        config.epsilon_ref,
        "(0, 1)",
        config.epsilon_ref > 0.0 && config.epsilon_ref < 1.0,
    )?;

    let trajectories = (0..trials)
        .into_par_iter()
        .map(|i| {
            let s = config.seed.child(i as u64);
            let x = random_sparse_unit(n, k, s.with_stream(streams::SIGNAL))?;
            let a = MeasurementMatrix::gaussian(m, n, s.with_stream(streams::MATRIX))?;
            let b = sign_measure(&a, x.values())?;
            let mut cfg = BihtConfig::new(
                k,
                iters,
                Init::RandomSparseUnit(s.with_stream(streams::INIT)),
            );
            cfg.eta = config.eta;
            let traj = run_biht(&a, &b, &cfg, Some(&x))?;
            if let Some(bad) = traj.lemma1_violation(LEMMA1_SLACK) {
                return Err(Error::Lemma1Violation {
                    trial: i,
                    iter: bad.iter,
                    d_s: bad.error_ds.unwrap_or(f64::NAN),
                    bound: bad.lemma1_rhs.unwrap_or(f64::NAN),
                });
            }
            Ok(traj)
        })
        .collect::<Result<Vec<_>>>()?;

    let table = (0..=iters)
        .map(|t| {
            let mut ds: Vec<f64> = trajectories
                .iter()
                .map(|tr| tr.records[t].error_ds.expect("truth supplied"))
                .collect();
            let mean_ds = ds.iter().sum::<f64>() / ds.len() as f64;
            let max_ds = ds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(ConvergenceRow {
                t,
                mean_ds,
                median_ds: median(&mut ds),
                max_ds,
                closed_form: closed_form_bound(config.epsilon_ref, t as u32)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ConvergenceExperiment {
        trajectories,
        table,
    })
}

/// Unit vectors `(e₁, cos θ·e₁ + sin θ·e₂)` in `R^n`.
pub fn pair_at_angle(n: usize, theta: f64) -> (Vec<f64>, Vec<f64>) {
    let u = basis(n, 0);
    let mut v = vec![0.0; n];
    v[0] = theta.cos();
    v[1] = theta.sin();
    (u, v)
}

/// Options for [`run_validation_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteConfig {
    pub seed: SeedSpec,
    pub convention: SignConvention,
    /// Divides every sample size; 1 gives the full-size suite.
    pub scale_down: usize,
}

impl SuiteConfig {
    pub fn new(seed: SeedSpec) -> Self {
        Self {
            seed,
            convention: SignConvention::Standard,
            scale_down: 1,
        }
    }
}

/// Runs every validator once and returns one row per statistic.
pub fn run_validation_suite(config: &SuiteConfig) -> Result<Vec<Validation>> {
    let div = config.scale_down.max(1);
    let root = config.seed;
    let seed = |i: u64| root.child(i);
    let mut out = Vec::new();

    let normal_draws = 1_000_000 / div;
    let xs = sample_standard_normal(seed(0), normal_draws);
    let st = SampleStats::from_slice(&xs);
    out.push(Validation::mean_check(
        "normal_mean",
        st.mean,
        0.0,
        st.se(),
        4.0,
    ));
    let folded: Vec<f64> = xs.iter().map(|x| x.abs()).collect();
    let sf = SampleStats::from_slice(&folded);
    out.push(Validation::mean_check(
        "folded_normal_mean",
        sf.mean,
        (2.0 / PI).sqrt(),
        sf.se(),
        4.0,
    ));

    let draws = 100_000 / div;
    for (i, (label, theta)) in [("pi_6", PI / 6.0), ("pi_3", PI / 3.0), ("pi_2", PI / 2.0)]
        .into_iter()
        .enumerate()
    {
        let (u, v) = pair_at_angle(3, theta);
        let p = theta / PI;
        let est = mismatch_probability_with(&u, &v, draws, seed(10 + i as u64), config.convention)?;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        out.push(Validation::mean_check(
            &format!("mismatch_{label}"),
            est,
            p,
            se,
            3.0,
        ));
    }
    let zero = zero_signal_mismatch(3, draws, seed(13), config.convention);
    out.push(Validation::mean_check(
        "mismatch_zero_signal",
        zero,
        0.0,
        0.0,
        3.0,
    ));

    let beta = PI / 6.0;
    let band = band_count(&basis(2, 0), beta, 1000, 100, seed(20))?;
    out.push(Validation::mean_check(
        "band_count",
        band.mean,
        2.0 * beta * 1000.0 / PI,
        band.se(),
        3.0,
    ));

    let (u, v) = pair_at_angle(8, FRAC_PI_2);
    let proj = projection_expectation(&u, &v, 200, 10_000 / div, seed(30))?;
    out.push(Validation::mean_check(
        "projection_minus",
        proj.minus.mean,
        sphere_distance(&u, &v),
        proj.minus.se(),
        4.0,
    ));
    out.push(Validation::mean_check(
        "projection_plus",
        proj.plus.mean,
        0.0,
        proj.plus.se(),
        4.0,
    ));

    // t chosen so the g bound is 1/2 at the expected mismatch count
    let (u, v) = pair_at_angle(16, PI / 3.0);
    let m = 500;
    let ell = m as f64 / 3.0;
    let tail = TailConfig {
        m,
        trials: 2000 / div,
        t_param: (8.0 * 4f64.ln() / ell).sqrt(),
        k: 2,
        set: vec![5, 9, 12, 15],
        seed: seed(40),
    };
    let report = tail_frequency_check(&u, &v, &tail)?;
    out.extend(report.rows.iter().map(TailRow::to_validation));
    Ok(out)
}
