//! The planar count assembled from angular-momentum channels.
//!
//! For radial `V`, the channel `m` of `-Δ - αV` becomes, after `r = e^t`,
//! the line problem `-w'' + m² w - αG w` with respect to the weight `e^{2t}`.
//! Negativity counts do not depend on the weight, so
//! `N_m = #{k : μ_k > m²}` where `-μ_k` are the eigenvalues of
//! `-d²/dt² - αG` on the line, and `N₋ = N_0 + 2 Σ_{m ≥ 1} N_m`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::potential::{LogPotential, RadialPotential};
use crate::spectral1d::{
    bs_count_above, count_below, eigenvalues_below, threshold_energy, BoundaryMode, CountResult,
    Grid, Method,
};

const SHALLOW_FACTOR: f64 = 1e-6;

/// A radial potential prepared for channel counting.
#[derive(Clone, Debug)]
pub struct Channels {
    g: LogPotential,
    tol: Tolerances,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelBreakdown {
    pub alpha: f64,
    /// `N_m` for `m = 0..=m_max`; `N_{-m} = N_m`.
    pub per_channel: Vec<usize>,
    pub m_max: usize,
    pub total: usize,
    /// Count for the `m = 0` problem with `w(0) = 0`, i.e. `r = 1`.
    pub radial_dirichlet_count: usize,
    /// `Σ_{m ≠ 0} N_m`.
    pub nonradial: usize,
    pub method: Method,
    /// The total may be off by this much because of near-threshold channels.
    pub uncertainty: usize,
    pub flagged_channels: Vec<usize>,
    /// Channels where the other engine disagreed beyond its flags.
    pub cross_check_failures: Vec<usize>,
    pub threshold: f64,
}

impl Channels {
    pub fn new(p: &RadialPotential, tol: &Tolerances) -> Result<Self> {
        tol.validate()?;
        let g = LogPotential::from_radial(p, tol.tail_tol_rel, &tol.quad)?;
        Ok(Self { g, tol: *tol })
    }

    pub fn from_log(g: LogPotential, tol: &Tolerances) -> Self {
        Self { g, tol: *tol }
    }

    pub fn log_potential(&self) -> &LogPotential {
        &self.g
    }

    pub fn threshold(&self, alpha: f64) -> f64 {
        threshold_energy(&self.g, alpha, &self.tol)
    }

    /// `N_m = #{k : μ_k(α) > m²}`.
    pub fn channel_count(&self, alpha: f64, m: i64, method: Method) -> Result<CountResult> {
        let m2 = (m * m) as f64;
        let e = self.threshold(alpha) - m2;
        count_below(&self.g, alpha, e, BoundaryMode::WholeLine, method, &self.tol)
    }

    /// `⌈√μ₁(α)⌉`, beyond which every channel is empty.
    pub fn channel_cutoff(&self, alpha: f64, mode: BoundaryMode) -> Result<usize> {
        let e = self.threshold(alpha);
        let ev = eigenvalues_below(&self.g, alpha, e, mode, 1, &self.tol)?;
        Ok(ev
            .mu
            .first()
            .map_or(0, |mu| (mu + self.tol.eig_tol).sqrt().ceil() as usize))
    }

    pub fn radial_dirichlet(&self, alpha: f64, method: Method) -> Result<CountResult> {
        let e = self.threshold(alpha);
        count_below(&self.g, alpha, e, BoundaryMode::WholeLineDirichletAt0, method, &self.tol)
    }

    /// All channels, in parallel. With `cross_check` every channel is also
    /// counted by the other engine and disagreements are recorded.
    pub fn total_count(&self, alpha: f64, method: Method, cross_check: bool) -> Result<ChannelBreakdown> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("coupling α = {alpha} must be positive")));
        }
        let m_max = self.channel_cutoff(alpha, BoundaryMode::WholeLine)?;
        let other = match method {
            Method::Pruefer => Method::FdInertia,
            Method::FdInertia => Method::Pruefer,
        };
        let run = |m: usize| -> Result<(CountResult, Option<CountResult>)> {
            let main = self.channel_count(alpha, m as i64, method)?;
            let check = if cross_check {
                Some(self.channel_count(alpha, m as i64, other)?)
            } else {
                None
            };
            Ok((main, check))
        };
        let mut results: Vec<(CountResult, Option<CountResult>)> =
            (0..=m_max).into_par_iter().map(run).collect::<Result<_>>()?;
        // The cutoff guarantees an empty last channel; extend if rounding
        // in μ₁ says otherwise.
        while results.last().is_some_and(|(r, _)| r.count > 0) {
            let m = results.len();
            results.push(run(m)?);
        }
        let radial = self.radial_dirichlet(alpha, method)?;
        let mut breakdown = ChannelBreakdown {
            alpha,
            per_channel: results.iter().map(|(r, _)| r.count).collect(),
            m_max: results.len() - 1,
            total: 0,
            radial_dirichlet_count: radial.count,
            nonradial: 0,
            method,
            uncertainty: 0,
            flagged_channels: vec![],
            cross_check_failures: vec![],
            threshold: self.threshold(alpha),
        };
        for (m, (r, check)) in results.iter().enumerate() {
            let mult = if m == 0 { 1 } else { 2 };
            if r.uncertainty > 0 {
                breakdown.flagged_channels.push(m);
                breakdown.uncertainty += mult * r.uncertainty;
            }
            if let Some(c) = check {
                if r.count.abs_diff(c.count) > r.uncertainty + c.uncertainty {
                    breakdown.cross_check_failures.push(m);
                }
            }
        }
        breakdown.nonradial = 2 * breakdown.per_channel.iter().skip(1).sum::<usize>();
        breakdown.total = breakdown.per_channel[0] + breakdown.nonradial;
        Ok(breakdown)
    }

    pub fn sandwich_check(&self, alpha: f64, method: Method) -> Result<SandwichReport> {
        let b = self.total_count(alpha, method, false)?;
        Ok(SandwichReport::from_breakdown(&b))
    }

    pub fn bs_duality_check(&self, alpha: f64, grid: &Grid, method: Method) -> Result<DualityReport> {
        let radial = self.radial_dirichlet(alpha, method)?;
        // The quotient counts eigenvalues below 0 itself, the radial count
        // those below -ε; eigenvalues in between are flagged.
        let near_zero = SHALLOW_FACTOR * self.threshold(alpha);
        let mode = BoundaryMode::WholeLineDirichletAt0;
        let shallow = count_below(&self.g, alpha, near_zero, mode, method, &self.tol)?
            .count
            .saturating_sub(radial.count);
        let bs = bs_count_above(&self.g, alpha, mode, grid, &self.tol)?;
        let slack = radial.uncertainty + bs.uncertainty + shallow;
        Ok(DualityReport {
            alpha,
            bs_count: bs.count,
            radial_dirichlet_count: radial.count,
            shallow,
            uncertainty: slack,
            holds: bs.count.abs_diff(radial.count) <= slack,
            exact: bs.count == radial.count,
            mesh_nodes: bs.nodes,
        })
    }
}

/// `n_+ ≤ N₋ ≤ n_+ + 1` with `n_+ = radial_dirichlet + nonradial`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub alpha: f64,
    pub lower: usize,
    pub total: usize,
    pub uncertainty: usize,
    pub holds: bool,
}

impl SandwichReport {
    pub fn from_breakdown(b: &ChannelBreakdown) -> Self {
        let lower = b.radial_dirichlet_count + b.nonradial;
        Self {
            alpha: b.alpha,
            lower,
            total: b.total,
            uncertainty: b.uncertainty,
            holds: b.total >= lower && b.total <= lower + 1,
        }
    }

    pub fn require(&self) -> Result<()> {
        if self.holds {
            Ok(())
        } else {
            Err(Error::Verification(format!(
                "sandwich violated at α = {}: total {} outside [{}, {}]",
                self.alpha,
                self.total,
                self.lower,
                self.lower + 1
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    pub alpha: f64,
    /// `#{n : λ_n > 1/α}` of the discretized quotient.
    pub bs_count: usize,
    pub radial_dirichlet_count: usize,
    /// Radial eigenvalues in `[-ε, -ε·1e-6)`, invisible at the threshold.
    pub shallow: usize,
    pub uncertainty: usize,
    pub holds: bool,
    pub exact: bool,
    pub mesh_nodes: usize,
}

pub fn channel_count(p: &RadialPotential, alpha: f64, m: i64, tol: &Tolerances) -> Result<usize> {
    Ok(Channels::new(p, tol)?.channel_count(alpha, m, Method::Pruefer)?.count)
}

pub fn channel_cutoff(p: &RadialPotential, alpha: f64, tol: &Tolerances) -> Result<usize> {
    Channels::new(p, tol)?.channel_cutoff(alpha, BoundaryMode::WholeLine)
}

pub fn total_count(p: &RadialPotential, alpha: f64, tol: &Tolerances) -> Result<ChannelBreakdown> {
    Channels::new(p, tol)?.total_count(alpha, Method::Pruefer, false)
}

pub fn sandwich_check(p: &RadialPotential, alpha: f64, tol: &Tolerances) -> Result<SandwichReport> {
    Channels::new(p, tol)?.sandwich_check(alpha, Method::Pruefer)
}

pub fn bs_duality_check(p: &RadialPotential, alpha: f64, grid: &Grid, tol: &Tolerances) -> Result<DualityReport> {
    Channels::new(p, tol)?.bs_duality_check(alpha, grid, Method::Pruefer)
}

/// Ratio `∫|f|²/(|x|² ln²|x|) / ∫|∇f|²` for radial `f(x) = u(ln|x|)` with
/// `u(0) = 0`, by the trapezoidal rule on samples `u(t_i)` at uniform `t`.
/// The one-dimensional Hardy inequality bounds it by 4.
pub fn hardy_log_ratio(t: &[f64], u: &[f64]) -> Result<f64> {
    if t.len() != u.len() || t.len() < 3 {
        return Err(Error::InvalidArgument("need matching samples, at least three".into()));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..t.len() - 1 {
        let h = t[i + 1] - t[i];
        let du = (u[i + 1] - u[i]) / h;
        den += du * du * h;
        let f = |j: usize| if t[j] == 0.0 { 0.0 } else { (u[j] / t[j]).powi(2) };
        num += 0.5 * h * (f(i) + f(i + 1));
    }
    if den <= 0.0 {
        return Err(Error::InvalidArgument("u is constant".into()));
    }
    // both integrals carry the same 2π from the angle
    Ok(num / den)
}

/// Ratio `∫|f|²/|x|² / ∫|∇f|²` for `f = u(ln r) e^{imθ}`, `m ≠ 0`, which is at most 1.
pub fn hardy_nonradial_ratio(t: &[f64], u: &[f64], m: i64) -> Result<f64> {
    if m == 0 || t.len() != u.len() || t.len() < 2 {
        return Err(Error::InvalidArgument("need m ≠ 0 and matching samples".into()));
    }
    let m2 = (m * m) as f64;
    let (mut num, mut grad) = (0.0, 0.0);
    for i in 0..t.len() - 1 {
        let h = t[i + 1] - t[i];
        let du = (u[i + 1] - u[i]) / h;
        let u2 = 0.5 * (u[i] * u[i] + u[i + 1] * u[i + 1]);
        num += u2 * h;
        grad += (du * du + m2 * u2) * h;
    }
    Ok(num / grad)
}
