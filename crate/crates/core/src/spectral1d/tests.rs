use proptest::prelude::*;

use super::*;
use crate::potential::{square_well, to_log, LogPotential};
use crate::quad::QuadTol;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn both(g: &LogPotential, alpha: f64, e: f64, mode: BoundaryMode) -> (CountResult, CountResult) {
    let p = count_below_pruefer(g, alpha, e, mode, &tol()).unwrap();
    let f = count_below_fd(g, alpha, e, mode, &Grid::default(), &tol()).unwrap();
    (p, f)
}

fn at_threshold(g: &LogPotential, alpha: f64, mode: BoundaryMode) -> usize {
    let e = threshold_energy(g, alpha, &tol());
    let (p, f) = both(g, alpha, e, mode);
    assert!(!p.flagged() && !f.flagged(), "{p:?} {f:?}");
    assert_eq!(p.count, f.count);
    p.count
}

#[test]
fn free_operator_has_no_spectrum() {
    let g = LogPotential::zero();
    for mode in [
        BoundaryMode::WholeLine,
        BoundaryMode::HalfLineDirichlet,
        BoundaryMode::WholeLineDirichletAt0,
    ] {
        let (p, f) = both(&g, 3.0, -1.0, mode);
        assert_eq!((p.count, f.count), (0, 0));
    }
    assert!(eigenvalues_below(&g, 1.0, -1e-9, BoundaryMode::WholeLine, 10, &tol())
        .unwrap()
        .mu
        .is_empty());
}

#[test]
fn finite_wells_match_matching_equations() {
    let half10 = LogPotential::step(10.0, 0.0, 1.0).unwrap();
    assert_eq!(at_threshold(&half10, 1.0, BoundaryMode::HalfLineDirichlet), 1);
    let whole4 = LogPotential::step(4.0, 0.0, 1.0).unwrap();
    assert_eq!(at_threshold(&whole4, 1.0, BoundaryMode::WholeLine), 1);
    let whole10 = LogPotential::step(10.0, 0.0, 1.0).unwrap();
    assert_eq!(at_threshold(&whole10, 1.0, BoundaryMode::WholeLine), 2);
    // the same potential as coupling times a unit well
    let unit = LogPotential::step(1.0, 0.0, 1.0).unwrap();
    assert_eq!(at_threshold(&unit, 10.0, BoundaryMode::HalfLineDirichlet), 1);
}

#[test]
fn eigenvalues_locate_matching_roots() {
    let cases: [(f64, BoundaryMode, &[f64]); 5] = [
        (4.0, BoundaryMode::HalfLineDirichlet, &[0.407_101_483_641_311_4]),
        (10.0, BoundaryMode::HalfLineDirichlet, &[4.624_194_086_329_783_5]),
        (4.0, BoundaryMode::WholeLine, &[1.815_012_663_441_312_8]),
        (25.0, BoundaryMode::HalfLineDirichlet, &[18.262_138_630_378_814, 0.928_267_893_183_216_2]),
        (25.0, BoundaryMode::WholeLine, &[20.067_065_685_744_1, 6.931_631_269_784_646]),
    ];
    for (depth, mode, roots) in cases {
        let g = LogPotential::step(depth, 0.0, 1.0).unwrap();
        let e = threshold_energy(&g, 1.0, &tol());
        let ev = eigenvalues_below(&g, 1.0, e, mode, 10, &tol()).unwrap();
        assert_eq!(ev.mu.len(), roots.len(), "depth {depth} {mode}");
        for (mu, root) in ev.mu.iter().zip(roots) {
            assert!((mu - root).abs() < 1e-8, "depth {depth} {mode}: {mu} vs {root}");
        }
        let n = count_below_pruefer(&g, 1.0, e, mode, &tol()).unwrap().count;
        assert_eq!(n, ev.mu.len());
    }
    let g = LogPotential::step(10.0, 0.0, 1.0).unwrap();
    let whole = eigenvalues_below(&g, 1.0, -1e-9, BoundaryMode::WholeLine, 10, &tol()).unwrap();
    assert!((whole.mu[0] - 6.490_223_127_623_788).abs() < 1e-8);
    assert!((whole.mu[1] - 0.001_052_494_232_522_960_3).abs() < 1e-8);
    let capped = eigenvalues_below(&g, 1.0, -1e-9, BoundaryMode::WholeLine, 1, &tol()).unwrap();
    assert!(capped.truncated && capped.mu.len() == 1);
}

#[test]
fn dirichlet_at_zero_splits_into_half_lines() {
    for (depth, lo, hi) in [(20.0, -0.7, 1.3), (55.0, -2.0, 0.4), (8.0, -1.0, 1.0)] {
        let g = LogPotential::step(depth, lo, hi).unwrap();
        let right = LogPotential::step(depth, 0.0, hi).unwrap();
        let left = LogPotential::step(depth, 0.0, -lo).unwrap();
        for e in [-1e-6, -0.5, -3.0] {
            let split = count_below_pruefer(&g, 1.0, e, BoundaryMode::WholeLineDirichletAt0, &tol()).unwrap();
            let r = count_below_pruefer(&right, 1.0, e, BoundaryMode::HalfLineDirichlet, &tol()).unwrap();
            let l = count_below_pruefer(&left, 1.0, e, BoundaryMode::HalfLineDirichlet, &tol()).unwrap();
            assert_eq!(split.count, r.count + l.count, "depth {depth} E {e}");
            let whole = count_below_pruefer(&g, 1.0, e, BoundaryMode::WholeLine, &tol()).unwrap();
            assert!(whole.count >= split.count && split.count + 1 >= whole.count);
        }
    }
}

#[test]
fn square_well_channels_match_oracle() {
    let g = to_log(&square_well(1.0, 1.0), 1e-7, &QuadTol::default()).unwrap();
    let tol = tol();
    let eps = threshold_energy(&g, 100.0, &tol);
    let expected = [3, 3, 2, 2, 2, 1, 1, 1, 0];
    for (m, want) in expected.iter().enumerate() {
        let e = -((m * m) as f64) + eps;
        let (p, f) = both(&g, 100.0, e, BoundaryMode::WholeLine);
        assert_eq!(p.count, *want, "m = {m}");
        if !f.flagged() {
            assert_eq!(f.count, *want, "fd m = {m}");
        }
    }
    let d = count_below_pruefer(&g, 100.0, eps, BoundaryMode::WholeLineDirichletAt0, &tol).unwrap();
    assert_eq!(d.count, 3);
}

#[test]
fn fd_refinement_is_stable() {
    let g = to_log(&square_well(1.0, 1.0), 1e-7, &QuadTol::default()).unwrap();
    for (alpha, e) in [(100.0, -4.5), (250.0, -20.0), (40.0, -1e-3)] {
        let coarse = count_below_fd(&g, alpha, e, BoundaryMode::WholeLine, &Grid::uniform(2e-3), &tol()).unwrap();
        let fine = count_below_fd(&g, alpha, e, BoundaryMode::WholeLine, &Grid::uniform(1e-3), &tol()).unwrap();
        assert_eq!(coarse.count, fine.count);
    }
}

#[test]
fn bs_spectrum_basics() {
    let zero = LogPotential::zero();
    let s = bs_spectrum(&zero, BoundaryMode::HalfLineDirichlet, &Grid::default(), 4, &tol()).unwrap();
    assert_eq!(s.values, vec![0.0; 4]);
    let g = LogPotential::step(1.0, 0.0, 1.0).unwrap();
    assert!(matches!(
        bs_spectrum(&g, BoundaryMode::WholeLine, &Grid::default(), 4, &tol()),
        Err(Error::SingularForm(_))
    ));
    let grid = Grid::uniform(1e-3);
    let base = bs_spectrum(&g, BoundaryMode::HalfLineDirichlet, &grid, 5, &tol()).unwrap();
    let g3 = LogPotential::step(3.0, 0.0, 1.0).unwrap();
    let tripled = bs_spectrum(&g3, BoundaryMode::HalfLineDirichlet, &grid, 5, &tol()).unwrap();
    for (a, b) in base.values.iter().zip(&tripled.values) {
        assert!((3.0 * a - b).abs() <= 1e-10 * b.max(1e-300), "{a} {b}");
    }
    assert!(base.values.windows(2).all(|w| w[0] >= w[1]));
    // λ_1 is the inverse of the critical coupling: √α = tan-matching root of
    // the half-line well, √α₁ with cot√α₁ = -1/√α₁... checked against counting.
    let l1 = base.values[0];
    let below = count_below_pruefer(&g, 0.999 / l1, -1e-10, BoundaryMode::HalfLineDirichlet, &tol()).unwrap();
    let above = count_below_pruefer(&g, 1.001 / l1, -1e-10, BoundaryMode::HalfLineDirichlet, &tol()).unwrap();
    assert_eq!((below.count, above.count), (0, 1));
}

#[test]
fn bs_duality_on_wells() {
    for (depth, lo, hi) in [(1.0, 0.0, 1.0), (1.0, -0.5, 2.0)] {
        let g = LogPotential::step(depth, lo, hi).unwrap();
        for alpha in [1.0, 2.5, 10.0, 40.0, 100.0] {
            for mode in [BoundaryMode::HalfLineDirichlet, BoundaryMode::WholeLineDirichletAt0] {
                let bs = bs_count_above(&g, alpha, mode, &Grid::default(), &tol()).unwrap();
                let e = threshold_energy(&g, alpha, &tol());
                let p = count_below_pruefer(&g, alpha, e, mode, &tol()).unwrap();
                assert!(
                    bs.count.abs_diff(p.count) <= bs.uncertainty + p.uncertainty,
                    "α={alpha} {mode}: {bs:?} vs {p:?}"
                );
            }
        }
    }
}

#[test]
fn lieb_thirring_and_bargmann_on_wells() {
    for depth in [1.0, 4.0, 10.0, 60.0, 300.0] {
        let g = LogPotential::step(depth, 0.0, 1.0).unwrap();
        let e = threshold_energy(&g, 1.0, &tol());
        let ev = eigenvalues_below(&g, 1.0, e, BoundaryMode::WholeLine, 1000, &tol()).unwrap();
        let lt: f64 = ev.mu.iter().map(|m| m.sqrt()).sum();
        assert!(lt <= 0.5 * depth, "depth {depth}: {lt}");
        let half = count_below_pruefer(&g, 1.0, e, BoundaryMode::HalfLineDirichlet, &tol()).unwrap();
        // ∫_0^1 t·depth dt
        assert!(half.count as f64 <= 0.5 * depth);
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let g = LogPotential::step(1.0, 0.0, 1.0).unwrap();
    assert!(count_below_pruefer(&g, 1.0, 0.0, BoundaryMode::WholeLine, &tol()).is_err());
    assert!(count_below_fd(&g, -1.0, -1.0, BoundaryMode::WholeLine, &Grid::default(), &tol()).is_err());
    assert!("sideways".parse::<BoundaryMode>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counts_monotone_in_alpha_and_energy(
        depth in 0.5f64..40.0,
        lo in -2.0f64..0.5,
        width in 0.2f64..2.0,
        a1 in 0.2f64..5.0,
        factor in 1.0f64..3.0,
        e1 in -20.0f64..-0.01,
        de in 0.0f64..10.0,
    ) {
        let g = LogPotential::step(depth, lo, lo + width).unwrap();
        let mode = BoundaryMode::WholeLine;
        let c = |a: f64, e: f64| count_below_pruefer(&g, a, e, mode, &tol()).unwrap().count;
        prop_assert!(c(a1, e1) <= c(a1 * factor, e1));
        prop_assert!(c(a1, e1 - de) <= c(a1, e1));
    }

    #[test]
    fn engines_agree_on_random_wells(
        depth in 0.5f64..60.0,
        lo in -2.0f64..1.0,
        width in 0.2f64..2.0,
        e in -30.0f64..-0.001,
        mode_ix in 0usize..3,
    ) {
        let mode = [
            BoundaryMode::WholeLine,
            BoundaryMode::HalfLineDirichlet,
            BoundaryMode::WholeLineDirichletAt0,
        ][mode_ix];
        let g = LogPotential::step(depth, lo, lo + width).unwrap();
        let (p, f) = both(&g, 1.0, e, mode);
        let slack = p.uncertainty + f.uncertainty;
        prop_assert!(p.count.abs_diff(f.count) <= slack, "{:?} {:?}", p, f);
    }
}
