//! Birman–Schwinger spectrum of the quotient `∫G|ω|² / ∫|ω'|²`, `ω(0) = 0`.
//!
//! On a mesh the quotient becomes the pencil `N x = λ D x` with `D` the
//! stiffness matrix (Neumann at the outer ends, which is exact because `G`
//! vanishes beyond them) and `N` the lumped potential. The number of
//! eigenvalues above `s > 0` is the number of negative pivots of `sD - N`.

use serde::{Deserialize, Serialize};

use super::fd::default_step;
use super::mesh::{nodes, sweep, LumpedMass, Shift};
use super::{bisect_jumps, BoundaryMode, Grid, Problem};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::potential::LogPotential;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsSpectrum {
    /// `λ_1 ≥ λ_2 ≥ …`, zero-padded to the requested length.
    pub values: Vec<f64>,
    pub nodes: usize,
    pub step: f64,
}

/// `#{n : λ_n > s}` on a mesh, with the count at `s(1 ± window)` for flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BsCount {
    pub count: usize,
    pub uncertainty: usize,
    pub s: f64,
    pub nodes: usize,
    pub step: f64,
    pub warnings: Vec<String>,
}

struct Pencil {
    problem: Problem,
    mesh: Vec<f64>,
    masses: Vec<f64>,
    step: f64,
}

impl Pencil {
    fn new(g: &LogPotential, mode: BoundaryMode, grid: &Grid, resolve: f64, tol: &Tolerances) -> Result<Option<Self>> {
        if mode == BoundaryMode::WholeLine {
            return Err(Error::SingularForm(
                "the Dirichlet energy has constants in its kernel on the whole line; use a Dirichlet mode".into(),
            ));
        }
        let Some(mut problem) = Problem::new(g, mode) else {
            return Ok(None);
        };
        if let Some((lo, hi)) = grid.extent {
            problem = problem.with_extent(lo, hi, g);
        }
        if !(problem.b > problem.a) {
            return Err(Error::SingularForm("empty domain".into()));
        }
        let step = grid
            .step
            .unwrap_or_else(|| default_step(problem.b - problem.a, resolve * g.g_max(), tol));
        let mesh = nodes(problem.a, problem.b, problem.dirichlet_at_zero, step, grid.graded_from);
        let masses = LumpedMass::new(g, &problem.breaks, &mesh).collect();
        Ok(Some(Self {
            problem,
            mesh,
            masses,
            step,
        }))
    }

    fn count_above(&self, s: &[f64]) -> (Vec<usize>, bool) {
        let shifts: Vec<Shift> = s
            .iter()
            .map(|&s| Shift {
                stiff: s,
                energy: 0.0,
                robin: 0.0,
            })
            .collect();
        sweep(&self.problem, &self.mesh, self.masses.iter().copied(), 1.0, &shifts)
    }
}

/// Counts `λ_n > 1/α`, the discrete dual of the bound-state count at
/// coupling `α`. The default mesh resolves oscillations at that coupling.
pub fn bs_count_above(
    g: &LogPotential,
    alpha: f64,
    mode: BoundaryMode,
    grid: &Grid,
    tol: &Tolerances,
) -> Result<BsCount> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("coupling α = {alpha} must be positive")));
    }
    let s = 1.0 / alpha;
    let Some(pencil) = Pencil::new(g, mode, grid, alpha, tol)? else {
        return Ok(BsCount {
            count: 0,
            uncertainty: 0,
            s,
            nodes: 0,
            step: 0.0,
            warnings: vec![],
        });
    };
    // Relative eigenvalue error of the scheme is about h² α max G / 12.
    let h = pencil.step;
    let window = (h * h * alpha * g.g_max() / 6.0).max(tol.near_threshold_rel);
    let (neg, perturbed) = pencil.count_above(&[s * (1.0 - window), s, s * (1.0 + window)]);
    let mut warnings = vec![];
    let mut uncertainty = neg[0] - neg[2];
    if perturbed {
        warnings.push("zero pivot perturbed during factorization".into());
        uncertainty = uncertainty.max(1);
    }
    if uncertainty > 0 {
        warnings.push(format!(
            "{uncertainty} eigenvalue(s) within relative {window:.3e} of 1/α"
        ));
    }
    Ok(BsCount {
        count: neg[1],
        uncertainty,
        s,
        nodes: pencil.mesh.len(),
        step: h,
        warnings,
    })
}

/// The `n_max` largest eigenvalues of the discretized quotient.
pub fn bs_spectrum(
    g: &LogPotential,
    mode: BoundaryMode,
    grid: &Grid,
    n_max: usize,
    tol: &Tolerances,
) -> Result<BsSpectrum> {
    let Some(pencil) = Pencil::new(g, mode, grid, 1.0, tol)? else {
        return Ok(BsSpectrum {
            values: vec![0.0; n_max],
            nodes: 0,
            step: 0.0,
        });
    };
    let count = |s: f64| pencil.count_above(&[s]).0[0];
    let mut hi = 1.0;
    while count(hi) > 0 {
        hi *= 2.0;
    }
    let floor = hi * 1e-13;
    let total = count(floor);
    let mut found = Vec::new();
    // In x = -s the count #{λ > -x} is non-decreasing.
    let c = |x: f64| Ok(count(-x));
    bisect_jumps(-hi, -floor, 0, total, &c, hi * 1e-13, n_max, &mut found)?;
    let mut values: Vec<f64> = found.into_iter().map(|x| -x).collect();
    values.resize(n_max, 0.0);
    Ok(BsSpectrum {
        values,
        nodes: pencil.mesh.len(),
        step: pencil.step,
    })
}
