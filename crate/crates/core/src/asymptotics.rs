//! Coupling sweeps, finite-α surrogates for the limits of `N₋/α`, and the
//! comparison of the sweep with the weak-ℓ1 verdict of the block sequence.

use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundValue, Bounds};
use crate::channels::{Channels, SandwichReport};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::potential::{integral_j, LogPotential, RadialPotential};
use crate::spectral1d::{bs_spectrum, BoundaryMode, Grid, Method};
use crate::weakseq::{delta_estimates, zeta_sequence, TriState, Verdict, WeakVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaGrid {
    pub min: f64,
    pub max: f64,
    pub per_decade: usize,
}

impl AlphaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.max >= self.min && self.max.is_finite() && self.per_decade >= 1) {
            return Err(Error::InvalidArgument(format!(
                "bad α grid {}..{} with {} per decade",
                self.min, self.max, self.per_decade
            )));
        }
        let n = (self.per_decade as f64 * (self.max / self.min).log10() + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| self.min * 10f64.powf(i as f64 / self.per_decade as f64))
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub total: usize,
    pub ratio: f64,
    pub radial_dirichlet: usize,
    pub nonradial: usize,
    pub uncertainty: usize,
    pub per_channel: Vec<usize>,
    pub chad: BoundValue,
    pub chad_sharp: BoundValue,
    pub lt_nonradial: BoundValue,
    pub weak_bound: BoundValue,
    pub sandwich_holds: bool,
    /// `N₋ ≤ chad_sharp ≤ chad` and `nonradial ≤ lt_nonradial`.
    pub bounds_hold: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub description: String,
    pub alphas: Vec<f64>,
    pub rows: Vec<SweepRow>,
    /// `|N₋/α - c|` for successive rows, `c` the Weyl coefficient.
    pub weyl_gaps: Vec<f64>,
    /// Successive differences of `N₋/α`.
    pub ratio_deltas: Vec<f64>,
    pub weyl_coefficient: f64,
    /// Rows left out because the time budget ran out.
    pub skipped: usize,
    pub c: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub method: Method,
    /// Constant of the weak-space bound.
    pub c: f64,
    /// Wall-clock cap; rows are then computed in increasing `α` until it is spent.
    pub budget: Option<Duration>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            method: Method::Pruefer,
            c: 1.0,
            budget: None,
        }
    }
}

/// `lim N₋/α = (1/2)∫ r F dr` when the Weyl law holds.
pub fn weyl_coefficient(p: &RadialPotential, tol: &Tolerances) -> Result<f64> {
    let j = integral_j(p, &tol.quad)?.value;
    if !j.is_finite() {
        return Err(Error::NonIntegrable);
    }
    Ok(0.5 * j)
}

pub fn sweep(p: &RadialPotential, alphas: &[f64], opts: &SweepOptions, tol: &Tolerances) -> Result<SweepTable> {
    let channels = Channels::new(p, tol)?;
    let bounds = Bounds::new(p, tol)?;
    let weyl = 0.5 * bounds.integrals.j.0;
    let mut alphas = alphas.to_vec();
    alphas.sort_by(f64::total_cmp);
    let row = |alpha: f64| -> Result<SweepRow> {
        let b = channels.total_count(alpha, opts.method, false)?;
        let report = bounds.report(alpha, 1.0, opts.c)?;
        let sandwich = SandwichReport::from_breakdown(&b);
        Ok(SweepRow {
            alpha,
            total: b.total,
            ratio: b.total as f64 / alpha,
            radial_dirichlet: b.radial_dirichlet_count,
            nonradial: b.nonradial,
            uncertainty: b.uncertainty,
            per_channel: b.per_channel.clone(),
            chad: report.chad,
            chad_sharp: report.chad_sharp,
            lt_nonradial: report.lt_nonradial,
            weak_bound: report.weak,
            sandwich_holds: sandwich.holds,
            bounds_hold: report.chad_sharp.admits(b.total)
                && report.chad_sharp <= report.chad
                && report.lt_nonradial.admits(b.nonradial),
        })
    };
    let rows: Vec<SweepRow> = match opts.budget {
        None => alphas.par_iter().map(|&a| row(a)).collect::<Result<_>>()?,
        Some(budget) => {
            let start = Instant::now();
            let mut rows = vec![];
            for &a in &alphas {
                if start.elapsed() >= budget {
                    break;
                }
                rows.push(row(a)?);
            }
            rows
        }
    };
    let weyl_gaps = rows.iter().map(|r| (r.ratio - weyl).abs()).collect();
    let ratio_deltas = rows.windows(2).map(|w| w[1].ratio - w[0].ratio).collect();
    Ok(SweepTable {
        description: p.description().to_string(),
        skipped: alphas.len() - rows.len(),
        alphas,
        rows,
        weyl_gaps,
        ratio_deltas,
        weyl_coefficient: weyl,
        c: opts.c,
    })
}

/// Rows whose coupling lies within `decades` of the largest one.
pub fn tail_rows(t: &SweepTable, decades: f64) -> &[SweepRow] {
    let Some(last) = t.rows.last() else {
        return &[];
    };
    let cut = last.alpha * 10f64.powf(-decades) * (1.0 - 1e-12);
    let first = t.rows.iter().position(|r| r.alpha >= cut).unwrap_or(t.rows.len());
    &t.rows[first..]
}

/// `(max, min)` of `N₋/α` over the top half-decade of the sweep.
pub fn limit_estimates(t: &SweepTable) -> Result<(f64, f64)> {
    limit_estimates_over(t, 0.5)
}

pub fn limit_estimates_over(t: &SweepTable, decades: f64) -> Result<(f64, f64)> {
    let tail = tail_rows(t, decades);
    if tail.is_empty() {
        return Err(Error::InvalidArgument("the sweep has no rows".into()));
    }
    Ok(tail.iter().fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), r| {
        (hi.max(r.ratio), lo.min(r.ratio))
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Agreement {
    Consistent,
    /// Finite-α data and the block sequence point different ways.
    Tension,
    Undetermined,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeylVerdict {
    /// Always the block-sequence verdict; sweep data never overrides it.
    pub verdict: Verdict,
    pub agreement: Agreement,
    pub weyl_coefficient: f64,
    pub tail_upper: f64,
    pub tail_lower: f64,
    pub sweep_converged: TriState,
    pub note: String,
}

/// Combines the sequence verdict with the sweep tail. The sweep counts as
/// converged when both tail extremes are within `tol` of the Weyl coefficient.
pub fn weyl_verdict(seq: &WeakVerdict, t: &SweepTable, tol: f64) -> Result<WeylVerdict> {
    let (hi, lo) = limit_estimates(t)?;
    let c = t.weyl_coefficient;
    let converged = (hi - c).abs() <= tol && (lo - c).abs() <= tol;
    let (agreement, note) = match (seq.verdict, converged) {
        (Verdict::WeylHolds, true) => (Agreement::Consistent, "sweep tail approaches the Weyl coefficient"),
        (Verdict::WeylHolds, false) => (
            Agreement::Tension,
            "sequence criterion says Weyl holds but the sweep tail has not reached the coefficient",
        ),
        (Verdict::LinearOnly | Verdict::SuperLinear, false) => {
            (Agreement::Consistent, "sweep tail stays away from the Weyl coefficient")
        }
        (Verdict::LinearOnly | Verdict::SuperLinear, true) => (
            Agreement::Tension,
            "sweep tail sits at the Weyl coefficient; the excess may only appear at larger α",
        ),
        (Verdict::Inconclusive, _) => (Agreement::Undetermined, "sequence criterion is inconclusive"),
    };
    Ok(WeylVerdict {
        verdict: seq.verdict,
        agreement,
        weyl_coefficient: c,
        tail_upper: hi,
        tail_lower: lo,
        sweep_converged: if converged { TriState::Yes } else { TriState::No },
        note: note.into(),
    })
}

/// Window comparison of `n ζ̂*_n` with `n λ_n` of the Birman–Schwinger quotient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaLink {
    pub window: (usize, usize),
    /// `(max, min)` of `n ζ̂*_n` over the window.
    pub sequence: (f64, f64),
    /// `n λ_n` for `n = 1..=window.1`.
    pub weighted_eigenvalues: Vec<f64>,
    pub sequence_vanishes: bool,
    /// `n λ_n` at the window end over its value at the window start.
    pub decay: f64,
    /// `min / max` of `n λ_n` over the window.
    pub flatness: f64,
    pub holds: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaLinkTol {
    /// `n ζ̂*_n` below this counts as zero.
    pub zero: f64,
    /// A vanishing sequence requires `decay` at most this.
    pub decay: f64,
    /// A non-vanishing sequence requires `flatness` at least this.
    pub flatness: f64,
    /// Relative tail tolerance for the far-reaching profile.
    pub tail_rel: f64,
    pub grid: Grid,
}

impl Default for DeltaLinkTol {
    fn default() -> Self {
        Self {
            zero: 1e-12,
            decay: 0.5,
            flatness: 0.25,
            tail_rel: 1e-14,
            grid: Grid {
                step: Some(2e-3),
                graded_from: Some(1.0),
                extent: None,
            },
        }
    }
}

pub fn delta_link(p: &RadialPotential, window: (usize, usize), dl: &DeltaLinkTol, tol: &Tolerances) -> Result<DeltaLink> {
    let (lo, hi) = window;
    if lo < 1 || lo >= hi {
        return Err(Error::InvalidArgument(format!("window {lo}..={hi} must have 1 ≤ lo < hi")));
    }
    let z = zeta_sequence(p, 2 * hi, &tol.quad, p.description())?;
    let sequence = delta_estimates(&z.values, lo..=hi)?;
    let weighted: Vec<f64> = if p.is_zero() {
        vec![0.0; hi]
    } else {
        let g = LogPotential::from_radial(p, dl.tail_rel, &tol.quad)?;
        bs_spectrum(&g, BoundaryMode::WholeLineDirichletAt0, &dl.grid, hi, tol)?
            .values
            .iter()
            .enumerate()
            .map(|(i, l)| (i + 1) as f64 * l)
            .collect()
    };
    let win = &weighted[lo - 1..hi];
    let max = win.iter().copied().fold(0.0, f64::max);
    let min = win.iter().copied().fold(f64::INFINITY, f64::min);
    let decay = if win[0] > 0.0 { win[win.len() - 1] / win[0] } else { 0.0 };
    let flatness = if max > 0.0 { min / max } else { 0.0 };
    let vanishes = sequence.0 <= dl.zero;
    let holds = if vanishes { decay <= dl.decay } else { flatness >= dl.flatness };
    Ok(DeltaLink {
        window,
        sequence,
        weighted_eigenvalues: weighted,
        sequence_vanishes: vanishes,
        decay,
        flatness,
        holds,
    })
}

pub const CSV_HEADER: &str =
    "alpha,N,N_over_alpha,N_radial_dirichlet,N_nonradial,chad,chad_sharp,lt_nonradial,weak_bound";

pub fn write_csv(t: &SweepTable, mut out: impl Write) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in &t.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.alpha,
            r.total,
            r.ratio,
            r.radial_dirichlet,
            r.nonradial,
            r.chad,
            r.chad_sharp,
            r.lt_nonradial,
            r.weak_bound
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{gaussian, log_tail_counterexample, square_well};
    use crate::weakseq::{classify, ClassifyTol};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn grid_has_requested_density() {
        let g = AlphaGrid {
            min: 1.0,
            max: 100.0,
            per_decade: 6,
        };
        let v = g.values().unwrap();
        assert_eq!(v.len(), 13);
        assert!((v[12] - 100.0).abs() < 1e-9 && (v[6] - 10.0).abs() < 1e-12);
        assert!(AlphaGrid { min: 0.0, ..g }.values().is_err());
    }

    #[test]
    fn zero_potential_sweep() {
        let p = RadialPotential::zero();
        let t = sweep(&p, &[1.0, 10.0, 100.0], &SweepOptions::default(), &tol()).unwrap();
        assert!(t.rows.iter().all(|r| r.total == 0 && r.sandwich_holds && r.bounds_hold));
        assert_eq!(limit_estimates(&t).unwrap(), (0.0, 0.0));
        assert_eq!(t.weyl_coefficient, 0.0);
        let z = zeta_sequence(&p, 16, &tol().quad, "zero").unwrap();
        let v = weyl_verdict(&classify(&z, &ClassifyTol::default()), &t, 0.01).unwrap();
        assert_eq!((v.verdict, v.agreement), (Verdict::WeylHolds, Agreement::Consistent));
    }

    #[test]
    fn weyl_coefficients() {
        assert!((weyl_coefficient(&square_well(1.0, 1.0), &tol()).unwrap() - 0.25).abs() < 1e-9);
        assert!((weyl_coefficient(&gaussian(1.0, 1.0), &tol()).unwrap() - 0.25).abs() < 1e-8);
        assert_eq!(weyl_coefficient(&RadialPotential::zero(), &tol()).unwrap(), 0.0);
    }

    #[test]
    fn square_well_sweep_is_pinned() {
        let p = square_well(1.0, 1.0);
        let t = sweep(&p, &[100.0, 200.0, 400.0], &SweepOptions::default(), &tol()).unwrap();
        let got: Vec<(usize, usize)> = t.rows.iter().map(|r| (r.total, r.radial_dirichlet)).collect();
        assert_eq!(got, vec![(27, 3), (51, 4), (105, 6)]);
        assert!(t.rows.iter().all(|r| r.sandwich_holds && r.bounds_hold));
        assert!(t.rows.windows(2).all(|w| w[1].total >= w[0].total));
        let (hi, lo) = limit_estimates_over(&t, 0.4).unwrap();
        assert!(hi >= lo && (hi - 0.25).abs() < 0.02);
        let mut csv = vec![];
        write_csv(&t, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("100,27,0.27,3,24,"));
    }

    #[test]
    fn budget_truncates_in_alpha_order() {
        let opts = SweepOptions {
            budget: Some(Duration::ZERO),
            ..SweepOptions::default()
        };
        let t = sweep(&square_well(1.0, 1.0), &[20.0, 10.0], &opts, &tol()).unwrap();
        assert_eq!((t.rows.len(), t.skipped), (0, 2));
        assert!(limit_estimates(&t).is_err());
    }

    #[test]
    fn counterexample_verdict_keeps_sequence_criterion() {
        let p = log_tail_counterexample();
        let t = sweep(&p, &[20.0, 40.0], &SweepOptions::default(), &tol()).unwrap();
        assert!(t.rows.iter().all(|r| r.sandwich_holds && r.lt_nonradial.admits(r.nonradial)));
        assert!(!t.rows[0].chad.is_finite());
        let z = zeta_sequence(&p, 200, &tol().quad, "counterexample").unwrap();
        let v = weyl_verdict(&classify(&z, &ClassifyTol::default()), &t, 0.01).unwrap();
        assert_eq!(v.verdict, Verdict::LinearOnly);
    }

    #[test]
    fn delta_link_window_implications() {
        let dl = DeltaLinkTol::default();
        let well = delta_link(&square_well(1.0, 1.0), (6, 16), &dl, &tol()).unwrap();
        assert!(well.sequence_vanishes && well.holds, "{well:?}");
        let ce = delta_link(&log_tail_counterexample(), (6, 16), &dl, &tol()).unwrap();
        assert!(!ce.sequence_vanishes && ce.holds, "{ce:?}");
        let zero = delta_link(&RadialPotential::zero(), (2, 5), &dl, &tol()).unwrap();
        assert!(zero.sequence_vanishes && zero.holds);
    }
}
