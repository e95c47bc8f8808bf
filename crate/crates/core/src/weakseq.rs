//! Block sequences of the log profile and weak-ℓ1 analytics.
//!
//! For `G ≥ 0` on the line, `ζ̂₀ = ∫_{-1}^{1} G` and, for `k ≥ 1`,
//! `ζ̂_k = ∫_{e^{k-1} < |t| < e^k} |t| G(t) dt`. Membership of `ζ̂` in weak-ℓ1
//! (and in its separable part) decides whether the bound-state count grows
//! like `O(α)` (and obeys the Weyl law). Only finitely many blocks can be
//! computed, so membership is judged from window statistics of `n·x*_n`.

use std::fmt;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{block_integral, LogProfile, Weight};
use crate::quad::QuadTol;

/// `ζ̂_0..=ζ̂_K` plus the blocks `K+1..=2K` used to certify the prefix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZetaSequence {
    pub values: Vec<f64>,
    pub k: usize,
    pub tail_note: TailNote,
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailNote {
    /// Largest block beyond `K`.
    pub tail_max: f64,
    /// Sum of blocks `K+1..=2K`.
    pub tail_sum: f64,
    /// `tail_max / ζ̂_K` when `ζ̂_K > 0`.
    pub decay_ratio: Option<f64>,
}

/// Computes `ζ̂_0..=ζ̂_K` (and the certification tail) block by block.
pub fn zeta_sequence<P: LogProfile + Sync + ?Sized>(
    g: &P,
    k: usize,
    tol: &QuadTol,
    source: &str,
) -> Result<ZetaSequence> {
    if k < 1 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    let all: Vec<f64> = (0..=2 * k)
        .into_par_iter()
        .map(|j| {
            let weight = if j == 0 { Weight::One } else { Weight::AbsT };
            block_integral(g, j, weight, tol)
                .map_err(|e| Error::Block {
                    block: j,
                    reason: e.to_string(),
                })
                .and_then(|est| {
                    if est.value.is_finite() {
                        Ok(est.value.max(0.0))
                    } else {
                        Err(Error::Block {
                            block: j,
                            reason: "integral is not finite".into(),
                        })
                    }
                })
        })
        .collect::<Result<_>>()?;
    let tail = &all[k + 1..];
    let tail_max = tail.iter().copied().fold(0.0, f64::max);
    let last = all[k];
    Ok(ZetaSequence {
        values: all[..=k].to_vec(),
        k,
        tail_note: TailNote {
            tail_max,
            tail_sum: tail.iter().sum(),
            decay_ratio: (last > 0.0).then(|| tail_max / last),
        },
        source: source.to_string(),
    })
}

/// Absolute values sorted non-increasing.
pub fn rearrange(x: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// `n · x*_n` for `n = 1..=len`.
pub fn weighted_rearrangement(x: &[f64]) -> Vec<f64> {
    rearrange(x)
        .into_iter()
        .enumerate()
        .map(|(i, v)| (i + 1) as f64 * v)
        .collect()
}

/// `sup_n n·x*_n`.
pub fn quasinorm_weak(x: &[f64]) -> f64 {
    weighted_rearrangement(x).into_iter().fold(0.0, f64::max)
}

pub fn ell1_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).sum()
}

/// `(max, min)` of `n·x*_n` over a 1-based window of ranks.
pub fn delta_estimates(x: &[f64], window: RangeInclusive<usize>) -> Result<(f64, f64)> {
    let (lo, hi) = (*window.start(), *window.end());
    if lo < 1 || lo > hi || hi > x.len() {
        return Err(Error::InvalidArgument(format!(
            "window {lo}..={hi} is empty or outside 1..={}",
            x.len()
        )));
    }
    let w = weighted_rearrangement(x);
    let slice = &w[lo - 1..hi];
    Ok((
        slice.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        slice.iter().copied().fold(f64::INFINITY, f64::min),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    Yes,
    No,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "Weyl law holds")]
    WeylHolds,
    #[serde(rename = "O(α) holds, Weyl fails")]
    LinearOnly,
    #[serde(rename = "O(α) fails")]
    SuperLinear,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::WeylHolds => "Weyl law holds",
            Verdict::LinearOnly => "O(α) holds, Weyl fails",
            Verdict::SuperLinear => "O(α) fails",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Thresholds of the window classifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTol {
    /// Fewer certified ranks than this make a nonzero tail inconclusive.
    pub min_certified: usize,
    /// Window-to-window growth of `sup n·x*_n` at or above which `x ∉ ℓ_{1,∞}`.
    pub growth_fail: f64,
    /// Growth at or below which the last doubling is considered stable.
    pub growth_stable: f64,
    /// Log-log slope of the window sups against `ln n` at or below which
    /// they are decaying to zero.
    pub slope_decay: f64,
    /// Slope at or above which they are bounded away from zero.
    pub slope_flat: f64,
    /// Window sups below `zero_floor · quasinorm` count as zero.
    pub zero_floor: f64,
}

impl Default for ClassifyTol {
    fn default() -> Self {
        Self {
            min_certified: 8,
            growth_fail: 1.25,
            growth_stable: 1.05,
            slope_decay: -0.3,
            slope_flat: -0.1,
            zero_floor: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowStat {
    /// 1-based rank range `(lo, hi]`.
    pub lo: usize,
    pub hi: usize,
    /// `max n·x*_n` over the window and the rank attaining it.
    pub sup: f64,
    pub argmax: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// Ranks `n` whose `x*_n` dominates every computed tail block.
    pub certified: usize,
    pub windows: Vec<WindowStat>,
    pub growth: Vec<f64>,
    pub slopes: Vec<f64>,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakVerdict {
    pub in_weak: TriState,
    pub in_weak_circle: TriState,
    pub quasinorm_window: f64,
    pub delta_upper_window: f64,
    pub delta_lower_window: f64,
    pub verdict: Verdict,
    pub evidence: Evidence,
}

fn combine(in_weak: TriState, circle: TriState) -> Verdict {
    match (in_weak, circle) {
        (_, TriState::Yes) => Verdict::WeylHolds,
        (TriState::Yes, TriState::No) => Verdict::LinearOnly,
        (TriState::No, _) => Verdict::SuperLinear,
        _ => Verdict::Inconclusive,
    }
}

/// Tri-state membership of `ζ̂` in `ℓ_{1,∞}` and `ℓ°_{1,∞}` from window
/// statistics over the certified prefix of the rearrangement.
pub fn classify(z: &ZetaSequence, tol: &ClassifyTol) -> WeakVerdict {
    let xs = rearrange(&z.values);
    let tail_max = z.tail_note.tail_max;
    let certified = xs.iter().take_while(|&&v| v > 0.0 && v >= tail_max).count();
    let weighted: Vec<f64> = xs[..certified]
        .iter()
        .enumerate()
        .map(|(i, v)| (i + 1) as f64 * v)
        .collect();
    let quasinorm = weighted.iter().copied().fold(0.0, f64::max);
    let mut evidence = Evidence {
        certified,
        ..Evidence::default()
    };
    let finished = |in_weak, circle, upper, lower, evidence| WeakVerdict {
        in_weak,
        in_weak_circle: circle,
        quasinorm_window: quasinorm,
        delta_upper_window: upper,
        delta_lower_window: lower,
        verdict: combine(in_weak, circle),
        evidence,
    };

    if tail_max == 0.0 {
        // Every block past K vanishes: the sequence is finitely supported
        // as far as computed, hence in ℓ1 ⊂ ℓ°_{1,∞}.
        evidence.note = "all blocks beyond K vanish".into();
        let lower = weighted.last().copied().unwrap_or(0.0);
        return finished(TriState::Yes, TriState::Yes, lower, lower, evidence);
    }
    if certified < tol.min_certified {
        evidence.note = format!("only {certified} ranks dominate the tail blocks");
        let (upper, lower) = match weighted.last() {
            Some(&v) => (v, v),
            None => (0.0, 0.0),
        };
        return finished(TriState::Inconclusive, TriState::Inconclusive, upper, lower, evidence);
    }

    let edges = [certified / 8, certified / 4, certified / 2, certified];
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let (argmax, sup) = (lo..hi)
            .map(|i| (i + 1, weighted[i]))
            .fold((lo + 1, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        evidence.windows.push(WindowStat { lo, hi, sup, argmax });
    }
    let last = &weighted[edges[2]..edges[3]];
    let upper = last.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower = last.iter().copied().fold(f64::INFINITY, f64::min);
    let s: Vec<f64> = evidence.windows.iter().map(|w| w.sup).collect();

    if s[2] <= tol.zero_floor * quasinorm {
        evidence.note = "window sups vanish".into();
        return finished(TriState::Yes, TriState::Yes, upper, lower, evidence);
    }

    evidence.growth = vec![s[1] / s[0], s[2] / s[1]];
    let in_weak = if evidence.growth.iter().all(|&g| g >= tol.growth_fail) {
        TriState::No
    } else if evidence.growth[1] <= tol.growth_stable {
        TriState::Yes
    } else {
        TriState::Inconclusive
    };

    let ln_n: Vec<f64> = evidence
        .windows
        .iter()
        .map(|w| (w.argmax.max(3) as f64).ln())
        .collect();
    evidence.slopes = (0..2)
        .map(|j| (s[j + 1] / s[j]).ln() / (ln_n[j + 1] / ln_n[j]).ln())
        .collect();
    let circle = if in_weak == TriState::No {
        TriState::No
    } else if evidence.slopes.iter().all(|&v| v <= tol.slope_decay) {
        TriState::Yes
    } else if evidence.slopes.iter().all(|&v| v >= tol.slope_flat) {
        TriState::No
    } else {
        TriState::Inconclusive
    };
    finished(in_weak, circle, upper, lower, evidence)
}
