use std::f64::consts::{E, PI};

use bitsense_core::montecarlo::{
    mismatch_probability, pair_at_angle, projection_expectation, tail_frequency_check, TailConfig,
};
use bitsense_core::raic::{default_eta, h_a, h_aj, orthogonal_decompose, raic_residual};
use bitsense_core::theory::{
    closed_form_bound, epsilon_recurrence, epsilon_recurrence_gap, nested_sqrt, nested_sqrt_limit,
    recurrence_fixed_point, sample_complexity,
};
use bitsense_core::thresholding::{threshold_set, top_k_indices};
use bitsense_core::vector::norm;
use bitsense_core::{random_sparse_unit, sphere_distance, MeasurementMatrix, SeedSpec};

fn grid() -> impl Iterator<Item = f64> {
    (1..100).map(|i| i as f64 / 100.0)
}

#[test]
fn full_support_j_keeps_everything() {
    let n = 30;
    let a = MeasurementMatrix::gaussian(400, n, SeedSpec::new(1, 1)).unwrap();
    let all: Vec<usize> = (0..n).collect();
    for i in 0..20 {
        let s = SeedSpec::new(2, 0).child(i);
        let x = random_sparse_unit(n, 4, s.with_stream(2)).unwrap();
        let y = random_sparse_unit(n, 4, s.with_stream(3)).unwrap();
        let h = h_a(&a, x.values(), y.values(), default_eta()).unwrap();
        let hj = h_aj(&a, x.values(), y.values(), &all, default_eta()).unwrap();
        assert_eq!(h, hj);
        let d = orthogonal_decompose(&hj, x.values(), y.values()).unwrap();
        let back = d.reconstruct();
        let err = hj
            .iter()
            .zip(&back)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(err <= 1e-10);
        let energy = d.c_minus.powi(2) + d.c_plus.powi(2) + norm(&d.g).powi(2);
        assert!((energy - norm(&hj).powi(2)).abs() <= 1e-10);
    }
}

#[test]
fn residual_is_symmetric() {
    let n = 40;
    let a = MeasurementMatrix::gaussian(300, n, SeedSpec::new(4, 1)).unwrap();
    for i in 0..20 {
        let s = SeedSpec::new(5, 0).child(i);
        let x = random_sparse_unit(n, 3, s.with_stream(2)).unwrap();
        let y = random_sparse_unit(n, 3, s.with_stream(3)).unwrap();
        let j = [1usize, 7, 22];
        let r1 = raic_residual(&a, x.values(), y.values(), &j, default_eta()).unwrap();
        let r2 = raic_residual(&a, y.values(), x.values(), &j, default_eta()).unwrap();
        assert!((r1 - r2).abs() <= 1e-12 * r1.max(1.0));
    }
}

#[test]
fn enlarging_the_kept_set_moves_away_from_the_signal() {
    let n = 50;
    for i in 0..50 {
        let s = SeedSpec::new(6, 0).child(i);
        let x = random_sparse_unit(n, 4, s.with_stream(2)).unwrap();
        let noise = random_sparse_unit(n, n, s.with_stream(3)).unwrap();
        let xt: Vec<f64> = x
            .values()
            .iter()
            .zip(noise.values())
            .map(|(p, q)| p + 0.3 * q)
            .collect();
        let mut small = x.support();
        small.extend(top_k_indices(&xt, 3).unwrap());
        small.sort_unstable();
        small.dedup();
        let mut large = small.clone();
        large.extend(top_k_indices(&xt, 12).unwrap());
        large.sort_unstable();
        large.dedup();
        let dist = |set: &[usize]| {
            let t = threshold_set(&xt, set).unwrap();
            x.values()
                .iter()
                .zip(&t)
                .map(|(p, q)| (p - q).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        assert!(dist(&small) <= dist(&large) + 1e-15);
    }
}

#[test]
fn mismatch_at_sixty_degrees() {
    let (u, v) = pair_at_angle(5, PI / 3.0);
    let p = 1.0 / 3.0;
    let est = mismatch_probability(&u, &v, 100_000, SeedSpec::from(8)).unwrap();
    assert!(
        (est - p).abs() <= 3.0 * (p * (1.0 - p) / 1e5).sqrt(),
        "{est}"
    );
}

#[test]
fn projection_means_at_sixty_degrees() {
    // E[Z·sgn⟨u, Z⟩] = √(2/π)·u, so the e₋ projection averages ‖u − v‖₂ = 1.
    let (u, v) = pair_at_angle(6, PI / 3.0);
    let p = projection_expectation(&u, &v, 150, 4000, SeedSpec::from(9)).unwrap();
    assert!((sphere_distance(&u, &v) - 1.0).abs() < 1e-12);
    assert!(
        (p.minus.mean - 1.0).abs() <= 4.0 * p.minus.se(),
        "{:?}",
        p.minus
    );
    assert!(p.plus.mean.abs() <= 4.0 * p.plus.se(), "{:?}", p.plus);
}

#[test]
fn tail_frequencies_stay_under_their_bounds() {
    let (u, v) = pair_at_angle(12, PI / 4.0);
    let cfg = TailConfig {
        m: 400,
        trials: 600,
        t_param: 0.3,
        k: 2,
        set: vec![3, 8],
        seed: SeedSpec::from(10),
    };
    let report = tail_frequency_check(&u, &v, &cfg).unwrap();
    assert!(report.pass(), "{:?}", report.rows);
}

#[test]
fn recurrence_dominated_and_decreasing_on_grid() {
    for eps in grid() {
        let (mut prev, mut prev_gap) = (f64::INFINITY, f64::INFINITY);
        for t in 0..=60 {
            let e = epsilon_recurrence(eps, t).unwrap();
            assert!(e <= closed_form_bound(eps, t).unwrap() + 1e-12);
            assert!(e <= prev);
            // strictness is checked on the precise gap to the fixed point
            let gap = epsilon_recurrence_gap(eps, t).unwrap();
            assert!(gap > 0.0 && gap < prev_gap, "eps {eps} t {t}");
            prev = e;
            prev_gap = gap;
        }
        assert!(recurrence_fixed_point(eps).unwrap() < eps);
    }
}

#[test]
fn nested_sqrt_direction() {
    for w in [0.1, 0.5, 2.0, 7.0] {
        let u = nested_sqrt_limit(w);
        for (w0, decreasing) in [(u + 1.0, true), (u * 0.25, false)] {
            let mut prev = w0;
            for t in 1..30 {
                let f = nested_sqrt(w, w0, t).unwrap();
                if (prev - u).abs() < 1e-12 {
                    break;
                }
                if decreasing {
                    assert!(f < prev && f > u);
                } else {
                    assert!(f > prev && f < u);
                }
                prev = f;
            }
            assert!((nested_sqrt(w, w0, 500).unwrap() - u).abs() <= 1e-10);
        }
    }
}

#[test]
fn sample_complexity_spot_value() {
    let (a, b, c) = (16.0f64, 379.1038f64, 32.0f64);
    let (eps, rho, k, n) = (0.1f64, 0.1f64, 5.0f64, 1000.0f64);
    let bc = b * c;
    let want = (4.0 * bc * k / eps * (E * n / k).ln()
        + 2.0 * bc * k / eps * (12.0 * bc / eps).ln()
        + bc / eps * (a / rho).ln())
    .ceil() as u64;
    assert_eq!(sample_complexity(eps, rho, 5, 1000).unwrap(), want);
    assert!(sample_complexity(0.05, rho, 5, 1000).unwrap() > want);
    assert!(sample_complexity(eps, 0.01, 5, 1000).unwrap() > want);
    assert!(sample_complexity(eps, rho, 6, 1000).unwrap() > want);
}
