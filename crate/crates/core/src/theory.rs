//! Closed-form calculators for the convergence analysis of normalized BIHT.
//!
//! The error recurrence is `ε(0) = 2`,
//! `ε(t) = 4c₁·√((ε/c)·ε(t−1)) + 4c₂·ε/c`. Writing `v = 16c₁²ε/c` and
//! `w = c₂/(4c₁²)` turns it into `ε(t) = v·w + √(v·ε(t−1))`, whose limit is
//! `u²v` with `u = (1 + √(1 + 4w))/2`. It is dominated term by term by
//! `2^{2^{−t}}·ε^{1−2^{−t}}` whenever `u·√v < √2`.

use std::f64::consts::{E, PI};

use serde::Serialize;

use crate::error::{check_domain, Result};

/// Smallest value of `b` for which the contraction condition is certified.
pub const B_MIN: f64 = 379.1038;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniversalConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
}

impl UniversalConstants {
    /// Constants for an arbitrary `b`; `c₁` and `c₂` are derived from it.
    pub fn with_b(b: f64) -> Self {
        let c1 = (3.0 * PI / b).sqrt() * (1.0 + 16.0 * 2f64.sqrt() / 3.0);
        let c2 = (3.0 / b)
            * (1.0 + 4.0 * PI / 3.0 + 8.0 * (3.0 * PI).sqrt() / 3.0 + 8.0 * (6.0 * PI).sqrt());
        Self {
            a: 16.0,
            b,
            c: 32.0,
            c1,
            c2,
        }
    }

    /// `v = 16c₁²ε/c`.
    pub fn v(&self, epsilon: f64) -> f64 {
        16.0 * self.c1 * self.c1 * epsilon / self.c
    }

    /// `w = c₂/(4c₁²)`.
    pub fn w(&self) -> f64 {
        self.c2 / (4.0 * self.c1 * self.c1)
    }

    /// Limit of the nested square root with offset `w`.
    pub fn u(&self) -> f64 {
        nested_sqrt_limit(self.w())
    }

    /// `u·√v`; the recurrence is dominated by the closed form when this is
    /// below `√2`.
    pub fn contraction_margin(&self, epsilon: f64) -> f64 {
        self.u() * self.v(epsilon).sqrt()
    }

    pub fn contracts(&self, epsilon: f64) -> bool {
        self.contraction_margin(epsilon) < 2f64.sqrt()
    }
}

/// `a = 16`, `b = 379.1038`, `c = 32` and the derived `c₁`, `c₂`.
pub fn constants() -> UniversalConstants {
    UniversalConstants::with_b(B_MIN)
}

fn check_unit_interval(name: &'static str, x: f64) -> Result<()> {
    check_domain(name, x, "(0, 1)", x > 0.0 && x < 1.0)
}

/// Number of measurements sufficient for the uniform convergence guarantee:
/// `⌈(4bck/ε)·log(en/k) + (2bck/ε)·log(12bc/ε) + (bc/ε)·log(a/ρ)⌉`.
pub fn sample_complexity(epsilon: f64, rho: f64, k: usize, n: usize) -> Result<u64> {
    check_unit_interval("epsilon", epsilon)?;
    check_unit_interval("rho", rho)?;
    check_domain("k", k as f64, "0 < k < n", k > 0 && k < n)?;
    let UniversalConstants { a, b, c, .. } = constants();
    let (k, n) = (k as f64, n as f64);
    let bc = b * c;
    let m = 4.0 * bc * k / epsilon * (E * n / k).ln()
        + 2.0 * bc * k / epsilon * (12.0 * bc / epsilon).ln()
        + bc / epsilon * (a / rho).ln();
    Ok(m.ceil() as u64)
}

/// `ε(t)` of the error recurrence under the given constants.
pub fn epsilon_recurrence_with(consts: &UniversalConstants, epsilon: f64, t: u32) -> Result<f64> {
    check_unit_interval("epsilon", epsilon)?;
    let scaled = epsilon / consts.c;
    let mut e = 2.0;
    for _ in 0..t {
        e = 4.0 * consts.c1 * (scaled * e).sqrt() + 4.0 * consts.c2 * scaled;
    }
    Ok(e)
}

pub fn epsilon_recurrence(epsilon: f64, t: u32) -> Result<f64> {
    epsilon_recurrence_with(&constants(), epsilon, t)
}

/// `2^{2^{−t}}·ε^{1−2^{−t}}`.
pub fn closed_form_bound(epsilon: f64, t: u32) -> Result<f64> {
    check_unit_interval("epsilon", epsilon)?;
    let decay = 0.5f64.powi(t.min(i32::MAX as u32) as i32);
    Ok(2f64.powf(decay) * epsilon.powf(1.0 - decay))
}

/// Limit `u²v` of the error recurrence.
pub fn recurrence_fixed_point_with(consts: &UniversalConstants, epsilon: f64) -> Result<f64> {
    check_unit_interval("epsilon", epsilon)?;
    let u = consts.u();
    Ok(u * u * consts.v(epsilon))
}

pub fn recurrence_fixed_point(epsilon: f64) -> Result<f64> {
    recurrence_fixed_point_with(&constants(), epsilon)
}

/// `ε(t) − ε*` where `ε*` is the fixed point of the recurrence.
///
/// Computed through `g(t+1) = α·g(t)/(√ε(t) + √ε*)` with `α = 4c₁√(ε/c)`,
/// which keeps full relative precision after `ε(t)` itself has become
/// indistinguishable from `ε*` in floating point.
pub fn epsilon_recurrence_gap_with(
    consts: &UniversalConstants,
    epsilon: f64,
    t: u32,
) -> Result<f64> {
    check_unit_interval("epsilon", epsilon)?;
    let scaled = epsilon / consts.c;
    let alpha = 4.0 * consts.c1 * scaled.sqrt();
    let beta = 4.0 * consts.c2 * scaled;
    let root = 0.5 * (alpha + (alpha * alpha + 4.0 * beta).sqrt());
    let fixed = root * root;
    let (mut e, mut gap) = (2.0f64, 2.0 - fixed);
    for _ in 0..t {
        gap *= alpha / (e.sqrt() + root);
        e = fixed + gap;
    }
    Ok(gap)
}

pub fn epsilon_recurrence_gap(epsilon: f64, t: u32) -> Result<f64> {
    epsilon_recurrence_gap_with(&constants(), epsilon, t)
}

/// Iteration cap and step tolerance used by [`iterate_to_fixed_point`].
pub const FIXED_POINT_MAX_ITERS: u32 = 10_000;
pub const FIXED_POINT_TOL: f64 = 1e-12;

/// Runs the recurrence until successive values differ by at most
/// [`FIXED_POINT_TOL`] or [`FIXED_POINT_MAX_ITERS`] steps have been taken.
/// Returns the last value and the number of steps.
pub fn iterate_to_fixed_point(consts: &UniversalConstants, epsilon: f64) -> Result<(f64, u32)> {
    check_unit_interval("epsilon", epsilon)?;
    let scaled = epsilon / consts.c;
    let mut e = 2.0f64;
    for t in 1..=FIXED_POINT_MAX_ITERS {
        let next = 4.0 * consts.c1 * (scaled * e).sqrt() + 4.0 * consts.c2 * scaled;
        if (next - e).abs() <= FIXED_POINT_TOL {
            return Ok((next, t));
        }
        e = next;
    }
    Ok((e, FIXED_POINT_MAX_ITERS))
}

/// `u = (1 + √(1 + 4w))/2`, the positive root of `u² = w + u`.
pub fn nested_sqrt_limit(w: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * w).sqrt())
}

/// `f(0) = w₀`, `f(t) = √(w + f(t−1))`.
///
/// The sequence decreases strictly toward [`nested_sqrt_limit`] when
/// `w₀ > u`, increases strictly when `w₀ < u`, and is constant at `w₀ = u`.
pub fn nested_sqrt(w: f64, w0: f64, t: u32) -> Result<f64> {
    check_domain("w", w, "> 0", w > 0.0 && w.is_finite())?;
    check_domain("w0", w0, "> 0", w0 > 0.0 && w0.is_finite())?;
    let mut f = w0;
    for _ in 0..t {
        f = (w + f).sqrt();
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub t: u32,
    pub recurrence: f64,
    pub closed_form: f64,
}

/// `{t, ε(t), closed form}` for `t = 0..=t_max`.
pub fn bound_table(epsilon: f64, t_max: u32) -> Result<Vec<BoundRow>> {
    (0..=t_max)
        .map(|t| {
            Ok(BoundRow {
                t,
                recurrence: epsilon_recurrence(epsilon, t)?,
                closed_form: closed_form_bound(epsilon, t)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_tracks_the_recurrence() {
        for eps in [0.01, 0.3, 0.99] {
            let fixed = recurrence_fixed_point(eps).unwrap();
            for t in 0..20 {
                let direct = epsilon_recurrence(eps, t).unwrap() - fixed;
                let gap = epsilon_recurrence_gap(eps, t).unwrap();
                assert!(
                    (direct - gap).abs() <= 1e-14,
                    "eps {eps} t {t}: {direct} vs {gap}"
                );
            }
            assert!(epsilon_recurrence_gap(eps, 60).unwrap() > 0.0);
        }
    }

    #[test]
    fn constant_values() {
        let c = constants();
        assert_eq!(c.a, 16.0);
        assert_eq!(c.c, 32.0);
        assert_eq!(c.b, 379.1038);
        // reference values evaluated independently at 50 digits (mpmath)
        assert!((c.c1 - 1.346_914_647_272_732).abs() < 1e-12);
        assert!((c.c2 - 0.380_699_935_641_545_75).abs() < 1e-12);
    }

    #[test]
    fn recurrence_starts_at_two() {
        assert_eq!(epsilon_recurrence(0.3, 0).unwrap(), 2.0);
        assert_eq!(closed_form_bound(0.3, 0).unwrap(), 2.0);
        assert!(epsilon_recurrence(0.0, 1).is_err());
        assert!(epsilon_recurrence(1.0, 1).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let eps = 0.04;
        assert!((closed_form_bound(eps, 1).unwrap() - (2.0 * eps).sqrt()).abs() < 1e-15);
        assert!((closed_form_bound(eps, 200).unwrap() - eps).abs() < 1e-15);
        // relative gap at t = 20 is 3·ln 2·2⁻²⁰ ≈ 1.98e-6
        let gap = closed_form_bound(0.25, 20).unwrap() - 0.25;
        assert!(gap > 0.0 && gap < 1e-6);
        assert!((gap / 0.25 - 3.0 * 2f64.ln() / 2f64.powi(20)).abs() < 1e-11);
    }

    #[test]
    fn sample_complexity_spot_value() {
        let (eps, rho, k, n) = (0.1f64, 0.1f64, 5.0f64, 1000.0f64);
        let (a, b, c) = (16.0f64, 379.1038f64, 32.0f64);
        let want = (4.0 * b * c * k / eps) * (std::f64::consts::E * n / k).ln()
            + (2.0 * b * c * k / eps) * (12.0 * b * c / eps).ln()
            + (b * c / eps) * (a / rho).ln();
        assert_eq!(
            sample_complexity(eps, rho, 5, 1000).unwrap(),
            want.ceil() as u64
        );
    }

    #[test]
    fn sample_complexity_monotone() {
        let base = sample_complexity(0.1, 0.1, 5, 1000).unwrap();
        assert!(sample_complexity(0.05, 0.1, 5, 1000).unwrap() > base);
        assert!(sample_complexity(0.1, 0.1, 6, 1000).unwrap() > base);
        assert!(sample_complexity(0.1, 0.01, 5, 1000).unwrap() > base);
        assert!(sample_complexity(0.1, 0.1, 5, 5).is_err());
        assert!(sample_complexity(0.1, 1.5, 5, 100).is_err());
        assert!(sample_complexity(0.1, 0.1, 0, 100).is_err());
    }

    #[test]
    fn fixed_point_matches_iteration() {
        let c = constants();
        for i in 1..100 {
            let eps = i as f64 / 100.0;
            let fp = recurrence_fixed_point(eps).unwrap();
            assert!(fp < eps);
            assert!((epsilon_recurrence(eps, 200).unwrap() - fp).abs() <= 1e-9);
            let (it, steps) = iterate_to_fixed_point(&c, eps).unwrap();
            assert!(steps < FIXED_POINT_MAX_ITERS);
            assert!((it - fp).abs() <= 1e-10);
        }
    }

    #[test]
    fn fixed_point_is_linear_in_epsilon() {
        let a = recurrence_fixed_point(0.1).unwrap();
        let b = recurrence_fixed_point(0.4).unwrap();
        assert!((b - 4.0 * a).abs() < 1e-14);
    }

    #[test]
    fn nested_sqrt_examples() {
        assert_eq!(nested_sqrt_limit(2.0), 2.0);
        assert!((nested_sqrt(2.0, 3.0, 500).unwrap() - 2.0).abs() <= 1e-10);
        let u = nested_sqrt_limit(0.7);
        for t in 0..20 {
            assert!((nested_sqrt(0.7, u, t).unwrap() - u).abs() < 1e-15);
        }
        assert!(nested_sqrt(0.0, 1.0, 1).is_err());
        assert!(nested_sqrt(1.0, -1.0, 1).is_err());
    }

    #[test]
    fn bound_table_rows() {
        let rows = bound_table(0.25, 20).unwrap();
        assert_eq!(rows.len(), 21);
        assert_eq!(rows[0].recurrence, 2.0);
        assert!(rows.iter().all(|r| r.recurrence <= r.closed_form + 1e-12));
    }
}
