//! Eigenvalue counting for `-w'' - αG(t) w` on the line or half-line.
//!
//! Beyond the effective domain of `G` the equation is free, so the decaying
//! exterior solution `e^{-κ|t|}`, `κ = √(-E)`, is imposed exactly at the
//! domain ends instead of padding the interval. Two independent engines
//! count eigenvalues below `E`: a scaled Prüfer-angle shooting method and
//! the inertia of a finite-difference form.

mod bs;
mod fd;
mod mesh;
mod pruefer;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::potential::LogPotential;

pub use bs::{bs_count_above, bs_spectrum, BsCount, BsSpectrum};
pub use fd::count_below_fd;
pub use mesh::Grid;
pub use pruefer::count_below_pruefer;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryMode {
    WholeLine,
    /// `t > 0` with `w(0) = 0`.
    HalfLineDirichlet,
    /// The whole line with `w(0) = 0`, i.e. two decoupled half-lines.
    WholeLineDirichletAt0,
}

impl BoundaryMode {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryMode::WholeLine => "whole-line",
            BoundaryMode::HalfLineDirichlet => "half-line-dirichlet",
            BoundaryMode::WholeLineDirichletAt0 => "whole-line-dirichlet-at-0",
        }
    }
}

impl fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            BoundaryMode::WholeLine,
            BoundaryMode::HalfLineDirichlet,
            BoundaryMode::WholeLineDirichletAt0,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown boundary mode `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pruefer,
    FdInertia,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pruefer" => Ok(Method::Pruefer),
            "fd" | "fd-inertia" => Ok(Method::FdInertia),
            _ => Err(Error::InvalidArgument(format!("unknown method `{s}`"))),
        }
    }
}

/// How a count was discretized.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    /// Interval actually integrated or meshed, `None` when `G ≡ 0`.
    pub domain: Option<(f64, f64)>,
    /// Integration steps (Prüfer) or mesh nodes (finite differences).
    pub steps: usize,
    /// Mesh step for finite differences.
    pub h: Option<f64>,
    /// Half-width of the energy window probed for near-threshold eigenvalues.
    pub probe: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub count: usize,
    /// The true count lies in `count - uncertainty ..= count + uncertainty`
    /// when eigenvalues sit within the probe window of `energy`.
    pub uncertainty: usize,
    pub method: Method,
    pub mode: BoundaryMode,
    pub alpha: f64,
    pub energy: f64,
    pub discretization: Discretization,
    pub warnings: Vec<String>,
}

impl CountResult {
    pub fn flagged(&self) -> bool {
        self.uncertainty > 0 || !self.warnings.is_empty()
    }
}

/// `E = -ε` standing in for `0⁻`, with `ε = threshold_rel · α · max G`.
pub fn threshold_energy(g: &LogPotential, alpha: f64, tol: &Tolerances) -> f64 {
    let scale = alpha * g.g_max();
    -tol.threshold_rel * if scale > 0.0 { scale } else { 1.0 }
}

pub fn count_below(
    g: &LogPotential,
    alpha: f64,
    energy: f64,
    mode: BoundaryMode,
    method: Method,
    tol: &Tolerances,
) -> Result<CountResult> {
    match method {
        Method::Pruefer => count_below_pruefer(g, alpha, energy, mode, tol),
        Method::FdInertia => count_below_fd(g, alpha, energy, mode, &Grid::default(), tol),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum End {
    Dirichlet,
    /// Matched to the decaying free solution outside the interval.
    Free,
}

/// The interval problem a mode reduces to.
#[derive(Clone, Debug)]
pub(crate) struct Problem {
    pub a: f64,
    pub b: f64,
    pub left: End,
    pub right: End,
    /// Dirichlet condition at `t = 0`, which then lies inside `(a, b)`.
    pub dirichlet_at_zero: bool,
    /// Breakpoints of `G` strictly inside `(a, b)`.
    pub breaks: Vec<f64>,
}

impl Problem {
    /// `None` when no eigenvalue can exist (no potential in the region).
    pub fn new(g: &LogPotential, mode: BoundaryMode) -> Option<Self> {
        let (t_min, t_max) = g.domain_hint()?;
        let (a, b, left, right, dirichlet_at_zero) = match mode {
            BoundaryMode::WholeLine => (t_min, t_max, End::Free, End::Free, false),
            BoundaryMode::HalfLineDirichlet => {
                if t_max <= 0.0 {
                    return None;
                }
                (0.0, t_max, End::Dirichlet, End::Free, false)
            }
            BoundaryMode::WholeLineDirichletAt0 => {
                if t_min >= 0.0 {
                    (0.0, t_max, End::Dirichlet, End::Free, false)
                } else if t_max <= 0.0 {
                    (t_min, 0.0, End::Free, End::Dirichlet, false)
                } else {
                    (t_min, t_max, End::Free, End::Free, true)
                }
            }
        };
        let mut breaks: Vec<f64> = g
            .breaks()
            .iter()
            .copied()
            .chain([t_min, t_max])
            .filter(|&x| x > a && x < b)
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        Some(Self {
            a,
            b,
            left,
            right,
            dirichlet_at_zero,
            breaks,
        })
    }
}

impl Problem {
    /// Same conditions on a different interval, keeping `0` where the mode needs it.
    pub fn with_extent(mut self, lo: f64, hi: f64, g: &LogPotential) -> Self {
        let (a, b) = if self.left == End::Dirichlet && self.a == 0.0 {
            (0.0, hi.max(1e-12))
        } else if self.right == End::Dirichlet && self.b == 0.0 {
            (lo.min(-1e-12), 0.0)
        } else {
            (lo, hi)
        };
        let (t_min, t_max) = g.domain_hint().unwrap_or((a, b));
        self.a = a;
        self.b = b;
        self.breaks = g
            .breaks()
            .iter()
            .copied()
            .chain([t_min, t_max])
            .filter(|&x| x > a && x < b)
            .collect();
        self.breaks.sort_by(f64::total_cmp);
        self.breaks.dedup();
        self
    }
}

/// Near-threshold probe half-width for an engine with discretization error `err`.
pub(crate) fn probe_width(g: &LogPotential, alpha: f64, energy: f64, tol: &Tolerances, err: f64) -> f64 {
    let scale = energy.abs().max(alpha * g.g_max());
    (tol.near_threshold_rel * scale).max(err)
}

/// Energies `(E - w, E, E + w)` with the upper probe kept strictly negative.
pub(crate) fn probe_energies(energy: f64, w: f64) -> [f64; 3] {
    [energy - w, energy, (energy + w).min(0.5 * energy)]
}

pub(crate) fn finish(
    counts: [usize; 3],
    method: Method,
    mode: BoundaryMode,
    alpha: f64,
    energy: f64,
    discretization: Discretization,
    mut warnings: Vec<String>,
) -> CountResult {
    let uncertainty = counts[2].saturating_sub(counts[0]);
    if uncertainty > 0 {
        warnings.push(format!(
            "{uncertainty} eigenvalue(s) within {:.3e} of E = {energy:.6e}",
            discretization.probe
        ));
    }
    CountResult {
        count: counts[1],
        uncertainty,
        method,
        mode,
        alpha,
        energy,
        discretization,
        warnings,
    }
}

pub(crate) fn check_inputs(alpha: f64, energy: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("coupling α = {alpha} must be positive")));
    }
    if !(energy < 0.0 && energy.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "energy E = {energy} must be negative (use -ε for the threshold)"
        )));
    }
    Ok(())
}

/// Eigenvalues `-μ_k < E` located by bisection on the counting function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalues {
    /// `μ_1 ≥ μ_2 ≥ …`
    pub mu: Vec<f64>,
    /// More than `n_max` eigenvalues lie below `E`.
    pub truncated: bool,
}

pub fn eigenvalues_below(
    g: &LogPotential,
    alpha: f64,
    energy: f64,
    mode: BoundaryMode,
    n_max: usize,
    tol: &Tolerances,
) -> Result<Eigenvalues> {
    check_inputs(alpha, energy)?;
    let Some(problem) = Problem::new(g, mode) else {
        return Ok(Eigenvalues {
            mu: vec![],
            truncated: false,
        });
    };
    let count = |e: f64| pruefer::count_at(g, &problem, alpha, e).map(|(c, _)| c);
    let total = count(energy)?;
    // Every eigenvalue lies above -α max G.
    let lo = -(alpha * g.g_max()) * (1.0 + 1e-9) - 1e-9;
    let mut found = Vec::with_capacity(total.min(n_max));
    if total > 0 && lo < energy {
        bisect_jumps(lo, energy, 0, total, &count, tol.eig_tol, n_max, &mut found)?;
    }
    Ok(Eigenvalues {
        mu: found.into_iter().map(|e: f64| -e).collect(),
        truncated: total > n_max,
    })
}

/// Locates the jumps of a non-decreasing integer function `c` on `(lo, hi]`
/// given `c(lo) = c_lo`, `c(hi) = c_hi`; pushes at most `budget` jump points
/// in ascending order.
#[allow(clippy::too_many_arguments)]
pub(crate) fn bisect_jumps(
    lo: f64,
    hi: f64,
    c_lo: usize,
    c_hi: usize,
    c: &dyn Fn(f64) -> Result<usize>,
    tol: f64,
    budget: usize,
    out: &mut Vec<f64>,
) -> Result<()> {
    if c_hi <= c_lo || out.len() >= budget {
        return Ok(());
    }
    let mid = 0.5 * (lo + hi);
    if hi - lo <= tol || mid <= lo || mid >= hi {
        for _ in c_lo..c_hi {
            if out.len() < budget {
                out.push(mid);
            }
        }
        return Ok(());
    }
    let c_mid = c(mid)?.clamp(c_lo, c_hi);
    bisect_jumps(lo, mid, c_lo, c_mid, c, tol, budget, out)?;
    bisect_jumps(mid, hi, c_mid, c_hi, c, tol, budget, out)
}

#[cfg(test)]
mod tests;
