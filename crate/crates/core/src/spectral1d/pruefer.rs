//! Scaled Prüfer shooting.
//!
//! With `w = ρ sin θ`, `w' = S ρ cos θ` the equation `w'' = -q w`,
//! `q = αG + E`, becomes `θ' = S cos²θ + (q/S) sin²θ`. `θ` crosses multiples
//! of `π` only upwards, and the number of eigenvalues below `E` is the number
//! of times `θ` passes the angle of the boundary condition at the right end.
//! `S` is constant on each segment and chosen near `√|q|`; at a change of
//! scale the angle is remapped so that `tan θ` scales by `S_new / S_old`.

use std::f64::consts::PI;

use super::{
    check_inputs, finish, probe_energies, probe_width, BoundaryMode, CountResult, Discretization,
    End, Method, Problem,
};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::potential::LogPotential;

/// Absolute tolerance on the angle per unit of integration.
const ANGLE_TOL: f64 = 1e-11;
/// Looser tolerance for forbidden segments, where only the basin of the
/// final angle matters.
const STIFF_TOL: f64 = 1e-8;
const MAX_STEPS: usize = 50_000_000;

pub fn count_below_pruefer(
    g: &LogPotential,
    alpha: f64,
    energy: f64,
    mode: BoundaryMode,
    tol: &Tolerances,
) -> Result<CountResult> {
    check_inputs(alpha, energy)?;
    let Some(problem) = Problem::new(g, mode) else {
        return Ok(finish(
            [0; 3],
            Method::Pruefer,
            mode,
            alpha,
            energy,
            Discretization::default(),
            vec![],
        ));
    };
    let w = probe_width(g, alpha, energy, tol, 0.0);
    let mut counts = [0; 3];
    let mut steps = 0;
    for (slot, e) in probe_energies(energy, w).into_iter().enumerate() {
        let (c, s) = count_at(g, &problem, alpha, e)?;
        counts[slot] = c;
        steps += s;
    }
    let disc = Discretization {
        domain: Some((problem.a, problem.b)),
        steps,
        h: None,
        probe: w,
    };
    Ok(finish(counts, Method::Pruefer, mode, alpha, energy, disc, vec![]))
}

/// Segment endpoints: breakpoints, `0` when it carries a condition, and a
/// subdivision whose lengths grow with `|t|`.
fn segments(p: &Problem) -> Vec<f64> {
    let mut fixed = vec![p.a, p.b];
    fixed.extend(&p.breaks);
    if p.dirichlet_at_zero {
        fixed.push(0.0);
    }
    fixed.sort_by(f64::total_cmp);
    fixed.dedup();
    let mut out = vec![p.a];
    for w in fixed.windows(2) {
        let (mut t, end) = (w[0], w[1]);
        while t < end {
            let len = 0.5f64.max(0.2 * t.abs().min((t + 0.5).abs()));
            let next = if end - t <= 1.25 * len { end } else { t + len };
            out.push(next);
            t = next;
        }
    }
    out
}

fn crossings(theta: f64, beta: f64) -> usize {
    if theta > beta {
        ((theta - beta) / PI).ceil() as usize
    } else {
        0
    }
}

fn remap(theta: f64, c: f64) -> f64 {
    let base = (theta / PI).floor() * PI;
    let r = theta - base;
    base + (c * r.sin()).atan2(r.cos())
}

/// Count of eigenvalues below `energy` and the number of integration steps.
pub(crate) fn count_at(g: &LogPotential, p: &Problem, alpha: f64, energy: f64) -> Result<(usize, usize)> {
    let kappa = (-energy).sqrt();
    let q = |t: f64| alpha * g.eval_truncated(t) + energy;
    let scale_for = |t0: f64, t1: f64| {
        let mid = 0.5 * (t0 + t1);
        q(mid).abs().sqrt().max(1.0 / (1.0 + mid.abs()))
    };
    let nodes = segments(p);
    let mut steps = 0;
    let mut count = 0;
    let mut s_prev = scale_for(nodes[0], nodes[1]);
    let mut theta = match p.left {
        End::Dirichlet => 0.0,
        End::Free => s_prev.atan2(kappa),
    };
    for w in nodes.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let s = scale_for(t0, t1);
        if p.dirichlet_at_zero && t0 == 0.0 {
            count += crossings(theta, PI);
            theta = 0.0;
        } else {
            theta = remap(theta, s / s_prev);
        }
        s_prev = s;
        let rhs = |t: f64, th: f64| {
            let (sn, cs) = th.sin_cos();
            s * cs * cs + q(t) / s * sn * sn
        };
        let (th, n) = if forbidden(&q, t0, t1) {
            let jac = |t: f64, th: f64| (2.0 * th).sin() * (q(t) / s - s);
            let dt = |t: f64, th: f64| {
                let d = 1e-6 * (1.0 + t.abs());
                let (lo, hi) = ((t - d).max(t0), (t + d).min(t1));
                (q(hi) - q(lo)) / (hi - lo) / s * th.sin().powi(2)
            };
            rosenbrock(&rhs, &jac, &dt, t0, t1, theta)?
        } else {
            let cap = |t: f64| 0.5 / s.max(q(t).abs() / s);
            dopri5(&rhs, t0, t1, theta, &cap)?
        };
        theta = th;
        steps += n;
        if steps > MAX_STEPS {
            return Err(Error::StepControl {
                t: t1,
                reason: format!("more than {MAX_STEPS} steps"),
            });
        }
    }
    let beta = match p.right {
        End::Dirichlet => PI,
        End::Free => s_prev.atan2(-kappa),
    };
    count += crossings(theta, beta);
    Ok((count, steps))
}

/// `q < 0` on a sample of the segment. There `w` cannot oscillate and the
/// angle relaxes stiffly towards `atan(S/√|q|)` modulo `π`.
fn forbidden(q: &dyn Fn(f64) -> f64, t0: f64, t1: f64) -> bool {
    (0..=8).all(|i| q(t0 + (t1 - t0) * i as f64 / 8.0) < 0.0)
}

/// Linearly implicit Rosenbrock 2(3) pair (the ode23s formulas) for a
/// scalar ODE, given `∂f/∂y` and `∂f/∂t`. L-stable, so step sizes follow the
/// slow manifold rather than the relaxation rate.
fn rosenbrock(
    f: &dyn Fn(f64, f64) -> f64,
    fy: &dyn Fn(f64, f64) -> f64,
    ft: &dyn Fn(f64, f64) -> f64,
    t0: f64,
    t1: f64,
    y0: f64,
) -> Result<(f64, usize)> {
    let d = 1.0 / (2.0 + std::f64::consts::SQRT_2);
    let e32 = 6.0 + std::f64::consts::SQRT_2;
    let (mut t, mut y) = (t0, y0);
    let mut h = (t1 - t0).min(1e-2 * (1.0 + t0.abs()));
    let mut accepted = 0;
    let min_step = 1e-13 * (1.0 + t0.abs().max(t1.abs()));
    while t < t1 {
        if t1 - t <= 1.01 * h {
            h = t1 - t;
        }
        let f0 = f(t, y);
        let w = 1.0 - h * d * fy(t, y);
        let tt = h * d * ft(t, y);
        let k1 = (f0 + tt) / w;
        let f1 = f(t + 0.5 * h, y + 0.5 * h * k1);
        let k2 = (f1 - k1) / w + k1;
        let y_new = y + h * k2;
        let f2 = f(t + h, y_new);
        let k3 = (f2 - e32 * (k2 - f1) - 2.0 * (k1 - f0) + tt) / w;
        let err = (h / 6.0 * (k1 - 2.0 * k2 + k3)).abs();
        let allowed = STIFF_TOL * (1.0 + y.abs() * 1e-3) * h.max(1e-3) + 64.0 * f64::EPSILON * y.abs();
        if err <= allowed || h <= min_step {
            if !y_new.is_finite() {
                return Err(Error::StepControl {
                    t,
                    reason: "non-finite angle".into(),
                });
            }
            t = if t1 - t <= h { t1 } else { t + h };
            y = y_new;
            accepted += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (allowed / err).powf(1.0 / 3.0)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok((y, accepted))
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates the scalar ODE `y' = f(t, y)` from `t0` to `t1` with steps
/// bounded by `cap(t)`; returns `y(t1)` and the number of accepted steps.
fn dopri5(
    f: &dyn Fn(f64, f64) -> f64,
    t0: f64,
    t1: f64,
    y0: f64,
    cap: &dyn Fn(f64) -> f64,
) -> Result<(f64, usize)> {
    let mut t = t0;
    let mut y = y0;
    let mut h = cap(t0).min(t1 - t0);
    let mut k = [0.0; 7];
    k[0] = f(t, y);
    let mut accepted = 0;
    let min_step = 1e-13 * (1.0 + t0.abs().max(t1.abs()));
    while t < t1 {
        h = h.min(cap(t));
        if t1 - t <= 1.01 * h {
            h = t1 - t;
        }
        for i in 1..7 {
            let yi = y + h * (0..i).map(|j| A[i][j] * k[j]).sum::<f64>();
            k[i] = f(t + C[i] * h, yi);
        }
        let y_new = y + h * (0..6).map(|j| A[6][j] * k[j]).sum::<f64>();
        let err = (h * (0..7).map(|j| E[j] * k[j]).sum::<f64>()).abs();
        let allowed = ANGLE_TOL * (1.0 + y.abs() * 1e-3) * h.max(1e-3) + 64.0 * f64::EPSILON * y.abs();
        if err <= allowed || h <= min_step {
            if !y_new.is_finite() {
                return Err(Error::StepControl {
                    t,
                    reason: "non-finite angle".into(),
                });
            }
            t = if t1 - t <= h { t1 } else { t + h };
            y = y_new;
            k[0] = k[6];
            accepted += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * (allowed / err).powf(0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }
    Ok((y, accepted))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dopri_solves_exponential() {
        let (y, _) = dopri5(&|_, y| y, 0.0, 1.0, 1.0, &|_| 0.1).unwrap();
        assert!((y - 1f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn rosenbrock_follows_stiff_relaxation() {
        // y' = -1000 (y - cos t) - sin t has the slow solution cos t
        let f = |t: f64, y: f64| -1000.0 * (y - t.cos()) - t.sin();
        let fy = |_: f64, _: f64| -1000.0;
        let ft = |t: f64, _: f64| -1000.0 * t.sin() - t.cos();
        let (y, n) = rosenbrock(&f, &fy, &ft, 0.0, 10.0, 1.0).unwrap();
        assert!((y - 10f64.cos()).abs() < 1e-6, "{y}");
        assert!(n < 200_000, "{n}");
    }

    #[test]
    fn remap_keeps_branch_and_scales_tangent() {
        let th = 7.0 * PI + 0.4;
        let r = remap(th, 2.0);
        assert!(r > 7.0 * PI && r < 8.0 * PI);
        assert!(((r - 7.0 * PI).tan() - 2.0 * 0.4f64.tan()).abs() < 1e-12);
        assert_eq!(remap(3.0 * PI, 5.0), 3.0 * PI);
    }

    #[test]
    fn segments_cover_interval_with_breaks() {
        let p = Problem {
            a: -10.0,
            b: 1000.0,
            left: End::Free,
            right: End::Free,
            dirichlet_at_zero: true,
            breaks: vec![-3.3, 7.0],
        };
        let s = segments(&p);
        assert_eq!(s[0], -10.0);
        assert_eq!(*s.last().unwrap(), 1000.0);
        for x in [-3.3, 0.0, 7.0] {
            assert!(s.contains(&x));
        }
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        assert!(s.len() < 60, "{}", s.len());
    }
}
