//! Hard thresholding operators and normalization.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::vector::norm;

/// Keep the `k` largest-magnitude entries of `v` and zero the rest.
///
/// Equal magnitudes are resolved in favour of the lower index, so the kept
/// set is a deterministic function of `v`.
pub fn top_k(v: &[f64], k: usize) -> Result<Vec<f64>> {
    let mut out = vec![0.0; v.len()];
    for i in top_k_indices(v, k)? {
        out[i] = v[i];
    }
    Ok(out)
}

/// Indices kept by [`top_k`], ascending.
pub fn top_k_indices(v: &[f64], k: usize) -> Result<Vec<usize>> {
    let n = v.len();
    if k > n {
        return Err(Error::InvalidSparsity { k, n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    if k == 0 || k == n {
        idx.truncate(k);
        return Ok(idx);
    }
    let by_rank =
        |&i: &usize, &j: &usize| -> Ordering { v[j].abs().total_cmp(&v[i].abs()).then(i.cmp(&j)) };
    idx.select_nth_unstable_by(k - 1, by_rank);
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}

/// Keep entries whose index is in `set`, zero the rest.
pub fn threshold_set(v: &[f64], set: &[usize]) -> Result<Vec<f64>> {
    let n = v.len();
    let mut out = vec![0.0; n];
    for &j in set {
        if j >= n {
            return Err(Error::IndexOutOfRange { index: j, n });
        }
        out[j] = v[j];
    }
    Ok(out)
}

/// `v / ‖v‖₂`; the zero vector is an error and left to the caller.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let r = norm(v);
    if r == 0.0 {
        return Err(Error::ZeroVector);
    }
    if !r.is_finite() {
        return Err(Error::NonFinite(r));
    }
    Ok(v.iter().map(|x| x / r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive reference: index `i` is kept iff fewer than `k` entries
    /// outrank it under (|value| desc, index asc).
    fn top_k_reference(v: &[f64], k: usize) -> Vec<f64> {
        (0..v.len())
            .map(|i| {
                let outranked = (0..v.len())
                    .filter(|&j| v[j].abs() > v[i].abs() || (v[j].abs() == v[i].abs() && j < i))
                    .count();
                if outranked < k {
                    v[i]
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(
            top_k(&[3.0, -5.0, 1.0, 0.0], 2).unwrap(),
            vec![3.0, -5.0, 0.0, 0.0]
        );
        assert_eq!(top_k(&[1.0, 1.0, 1.0], 2).unwrap(), vec![1.0, 1.0, 0.0]);
        assert_eq!(top_k(&[1.0, -2.0], 2).unwrap(), vec![1.0, -2.0]);
        assert_eq!(top_k(&[1.0, -2.0], 0).unwrap(), vec![0.0, 0.0]);
        assert!(top_k(&[1.0], 2).is_err());
        assert_eq!(top_k_reference(&[1.0, 1.0, 1.0], 2), vec![1.0, 1.0, 0.0]);
    }

    #[test]
    fn set_threshold_examples() {
        let v = [1.0, 2.0, 3.0];
        assert_eq!(threshold_set(&v, &[]).unwrap(), vec![0.0; 3]);
        assert_eq!(threshold_set(&v, &[0, 1, 2]).unwrap(), v.to_vec());
        assert_eq!(threshold_set(&v, &[2, 2]).unwrap(), vec![0.0, 0.0, 3.0]);
        assert_eq!(
            threshold_set(&v, &[3]),
            Err(Error::IndexOutOfRange { index: 3, n: 3 })
        );
    }

    #[test]
    fn normalize_examples() {
        let u = normalize(&[3.0, 4.0]).unwrap();
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        let w = normalize(&u).unwrap();
        assert!((w[0] - u[0]).abs() < 1e-12 && (w[1] - u[1]).abs() < 1e-12);
        assert_eq!(normalize(&[0.0, 0.0]), Err(Error::ZeroVector));
    }

    fn small_vec() -> impl Strategy<Value = Vec<f64>> {
        // a few repeated magnitudes so ties actually occur
        proptest::collection::vec(
            prop_oneof![(-3i32..=3).prop_map(|x| x as f64), -10.0f64..10.0],
            1..24,
        )
    }

    proptest! {
        #[test]
        fn top_k_matches_reference(v in small_vec(), frac in 0.0f64..=1.0) {
            let k = ((v.len() as f64) * frac).floor() as usize;
            let got = top_k(&v, k).unwrap();
            prop_assert_eq!(&got, &top_k_reference(&v, k));
            prop_assert_eq!(top_k(&got, k).unwrap(), got);
        }

        #[test]
        fn top_k_keeps_dominating_entries(v in small_vec(), frac in 0.0f64..=1.0) {
            let k = ((v.len() as f64) * frac).floor() as usize;
            let got = top_k(&v, k).unwrap();
            let kept = top_k_indices(&v, k).unwrap();
            prop_assert_eq!(kept.len(), k);
            prop_assert!(kept.iter().all(|&i| got[i] == v[i]));
            for i in 0..v.len() {
                for j in 0..v.len() {
                    if kept.contains(&i) && !kept.contains(&j) {
                        prop_assert!(v[i].abs() > v[j].abs() || (v[i].abs() == v[j].abs() && i < j));
                    }
                }
            }
        }

        #[test]
        fn threshold_set_is_linear(
            u in proptest::collection::vec(-5.0f64..5.0, 10),
            w in proptest::collection::vec(-5.0f64..5.0, 10),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            set in proptest::collection::vec(0usize..10, 0..10),
        ) {
            let mix: Vec<f64> = u.iter().zip(&w).map(|(x, y)| a * x + b * y).collect();
            let lhs = threshold_set(&mix, &set).unwrap();
            let tu = threshold_set(&u, &set).unwrap();
            let tw = threshold_set(&w, &set).unwrap();
            for i in 0..10 {
                prop_assert!((lhs[i] - (a * tu[i] + b * tw[i])).abs() <= 1e-12);
            }
        }

        #[test]
        fn pythagorean_split(
            v in proptest::collection::vec(-5.0f64..5.0, 12),
            outer in proptest::collection::btree_set(0usize..12, 0..12),
            keep in proptest::collection::vec(any::<bool>(), 12),
        ) {
            let s1: Vec<usize> = outer.iter().copied().collect();
            let s2: Vec<usize> = s1.iter().copied().filter(|&i| keep[i]).collect();
            let diff: Vec<usize> = s1.iter().copied().filter(|&i| !keep[i]).collect();
            let sq = |s: &[usize]| norm(&threshold_set(&v, s).unwrap()).powi(2);
            prop_assert!((sq(&s1) - sq(&s2) - sq(&diff)).abs() <= 1e-10);
        }
    }
}
