//! Channel counts of the disk well `α·χ_{r<1}` against Bessel zeros.
//!
//! At zero energy the regular solution inside the disk is `J_m(√α r)` and
//! outside it is `r^{-|m|}`. Matching logarithmic derivatives at `r = 1`
//! turns `N_m` into a count of zeros of `J_{|m|-1}` below `√α` (`J_1` plus
//! one for `m = 0`). With `w(r=1) = 0` imposed instead, the radial count
//! is the number of zeros of `J_0` below `√α`.

use weylcount::channels::Channels;
use weylcount::config::Tolerances;
use weylcount::potential::square_well;
use weylcount::spectral1d::Method;

/// `J_0(x), ..., J_n(x)` by backward recurrence normalised with
/// `J_0 + 2 Σ J_{2k} = 1`.
fn bessel_j(n: usize, x: f64) -> Vec<f64> {
    let start = 2 * ((n + x as usize + 60) / 2);
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-300;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(k - 1) {
                *v *= 1e-250;
            }
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.truncate(n + 1);
    j.iter().map(|v| v / norm).collect()
}

/// Zeros of `J_0..=J_n` in `(0, a)`, by sign changes on a fine grid.
fn zero_counts(n: usize, a: f64) -> Vec<usize> {
    let h = 2e-3;
    let steps = ((a - 0.5) / h).floor() as usize;
    let mut counts = vec![0; n + 1];
    let mut prev = bessel_j(n, 0.5);
    for i in 1..=steps + 1 {
        let x = if i > steps { a } else { 0.5 + i as f64 * h };
        let cur = bessel_j(n, x);
        for (c, (p, q)) in counts.iter_mut().zip(prev.iter().zip(&cur)) {
            if p * q < 0.0 {
                *c += 1;
            }
        }
        prev = cur;
    }
    counts
}

fn disk_channels(alpha: f64) -> (Vec<usize>, usize) {
    let a = alpha.sqrt();
    let z = zero_counts(a as usize + 2, a);
    let mut per = vec![1 + z[1]];
    per.extend(z.iter().take_while(|&&c| c > 0).copied());
    (per, z[0])
}

#[test]
fn bessel_recurrence_matches_known_values() {
    let j = bessel_j(2, 1.0);
    assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-14);
    assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-14);
    assert!((j[2] - 0.114_903_484_931_900_5).abs() < 1e-14);
    let z = zero_counts(1, 10.0);
    assert_eq!(z, vec![3, 2]);
}

#[test]
fn disk_channels_match_bessel_zeros() {
    let tol = Tolerances::default();
    let ch = Channels::new(&square_well(1.0, 1.0), &tol).unwrap();
    for alpha in [10.0, 100.0, 200.0, 400.0, 800.0, 1600.0, 3200.0] {
        let (per, radial) = disk_channels(alpha);
        let b = ch.total_count(alpha, Method::Pruefer, false).unwrap();
        let nonzero = b.per_channel.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
        assert_eq!(b.per_channel[..nonzero], per[..], "alpha = {alpha}");
        assert_eq!(b.radial_dirichlet_count, radial, "alpha = {alpha}");
        let total = per[0] + 2 * per[1..].iter().sum::<usize>();
        assert_eq!(b.total, total, "alpha = {alpha}");
        assert_eq!(b.uncertainty, 0);
    }
}

#[test]
fn fd_engine_matches_bessel_zeros_at_moderate_coupling() {
    let tol = Tolerances::default();
    let ch = Channels::new(&square_well(1.0, 1.0), &tol).unwrap();
    for alpha in [50.0, 100.0, 400.0] {
        let (per, _) = disk_channels(alpha);
        let b = ch.total_count(alpha, Method::FdInertia, false).unwrap();
        let total = per[0] + 2 * per[1..].iter().sum::<usize>();
        assert!(b.total.abs_diff(total) <= b.uncertainty, "alpha = {alpha}: {} vs {total}", b.total);
    }
}

#[test]
fn pinned_totals() {
    let tol = Tolerances::default();
    let ch = Channels::new(&square_well(1.0, 1.0), &tol).unwrap();
    let pinned = [(200.0, 51, 4), (400.0, 105, 6), (800.0, 205, 9), (1600.0, 405, 12), (3200.0, 806, 18)];
    for (alpha, total, radial) in pinned {
        let b = ch.total_count(alpha, Method::Pruefer, false).unwrap();
        assert_eq!((b.total, b.radial_dirichlet_count), (total, radial), "alpha = {alpha}");
    }
}
