//! Finite-difference counting by inertia.
//!
//! The form `∫|w'|² - ∫(αG + E)w² + κ(w(a)² + w(b)²)` is discretized with
//! linear elements and lumped potential cells. Its negative pivots in an
//! LDLᵀ sweep count the discrete eigenvalues below `E`. The Robin terms are
//! the exact exterior contribution, so no padding is needed.

use super::mesh::{nodes, sweep, LumpedMass, Shift};
use super::{
    check_inputs, finish, probe_energies, probe_width, BoundaryMode, CountResult, Discretization,
    Grid, Method, Problem,
};
use crate::config::Tolerances;
use crate::error::Result;
use crate::potential::LogPotential;

/// Default spacing: `min(10⁻³ L, r / √(α max G + |E|))` with `r = fd_resolution`.
pub(crate) fn default_step(len: f64, scale: f64, tol: &Tolerances) -> f64 {
    let resolved = if scale > 0.0 {
        tol.fd_resolution / scale.sqrt()
    } else {
        f64::INFINITY
    };
    (1e-3 * len).min(resolved)
}

pub fn count_below_fd(
    g: &LogPotential,
    alpha: f64,
    energy: f64,
    mode: BoundaryMode,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<CountResult> {
    check_inputs(alpha, energy)?;
    let Some(mut problem) = Problem::new(g, mode) else {
        return Ok(finish(
            [0; 3],
            Method::FdInertia,
            mode,
            alpha,
            energy,
            Discretization::default(),
            vec![],
        ));
    };
    if let Some((lo, hi)) = grid.extent {
        problem = problem.with_extent(lo, hi, g);
    }
    let depth = alpha * g.g_max();
    let h = grid
        .step
        .unwrap_or_else(|| default_step(problem.b - problem.a, depth + energy.abs(), tol));
    let mesh = nodes(problem.a, problem.b, problem.dirichlet_at_zero, h, grid.graded_from);
    // Eigenvalue error of the three-point scheme is about h²k⁴/12 for the
    // local wavenumber k² ≤ αG + E; the window doubles that and adds the
    // lumping error.
    let err = h * h * ((depth + energy).max(0.0).powi(2) + depth) / 6.0;
    let w = probe_width(g, alpha, energy, tol, err);
    let energies = probe_energies(energy, w);
    let shifts: Vec<Shift> = energies
        .iter()
        .map(|&e| Shift {
            stiff: 1.0,
            energy: e,
            robin: (-e).sqrt(),
        })
        .collect();
    let (neg, perturbed) = sweep(
        &problem,
        &mesh,
        LumpedMass::new(g, &problem.breaks, &mesh),
        alpha,
        &shifts,
    );
    let mut warnings = vec![];
    let mut counts = [neg[0], neg[1], neg[2]];
    if perturbed {
        warnings.push("zero pivot perturbed during factorization".into());
        counts[2] = counts[2].max(counts[0] + 1);
    }
    let disc = Discretization {
        domain: Some((problem.a, problem.b)),
        steps: mesh.len(),
        h: Some(h),
        probe: w,
    };
    Ok(finish(counts, Method::FdInertia, mode, alpha, energy, disc, warnings))
}
