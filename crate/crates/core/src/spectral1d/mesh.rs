//! Meshes and the streaming LDLᵀ inertia sweep shared by the
//! finite-difference counter and the Birman–Schwinger pencil.

use serde::{Deserialize, Serialize};

use super::{End, Problem};
use crate::potential::LogPotential;

/// Mesh request. Missing fields take engine-specific defaults.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Base spacing.
    pub step: Option<f64>,
    /// Beyond `|t| > graded_from` the spacing grows like `step · |t| / graded_from`.
    pub graded_from: Option<f64>,
    /// Replaces the effective domain of `G` (clipped to the mode's half-line).
    pub extent: Option<(f64, f64)>,
}

impl Grid {
    pub fn uniform(step: f64) -> Self {
        Self {
            step: Some(step),
            ..Self::default()
        }
    }
}

/// Node positions of a mesh on `[a, b]`, with `0` a node when requested.
pub(crate) fn nodes(a: f64, b: f64, with_zero: bool, step: f64, graded_from: Option<f64>) -> Vec<f64> {
    let mut cuts = vec![a, b];
    if with_zero && a < 0.0 && b > 0.0 {
        cuts.insert(1, 0.0);
    }
    let mut out = vec![a];
    for w in cuts.windows(2) {
        let (c, d) = (w[0], w[1]);
        match graded_from {
            None => {
                let n = ((d - c) / step).ceil().max(1.0) as usize;
                let h = (d - c) / n as f64;
                out.extend((1..n).map(|i| c + i as f64 * h));
                out.push(d);
            }
            Some(tg) => {
                let spacing = |t: f64| step * (t.abs() / tg).max(1.0);
                let mut t = c;
                while t < d {
                    let h = spacing(t).min(spacing(t + spacing(t)));
                    let next = if d - t <= 1.5 * h { d } else { t + h };
                    out.push(next);
                    t = next;
                }
            }
        }
    }
    out
}

/// One member of a family of forms evaluated in a single sweep:
/// `stiff ∫|w'|² - coupling ∫G w² - energy ∫w² + robin·(free end values)²`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Shift {
    pub stiff: f64,
    pub energy: f64,
    pub robin: f64,
}

/// Lumped `∫G` over the dual cells of `nodes`, produced in order with O(1) state.
pub(crate) struct LumpedMass<'a> {
    g: &'a LogPotential,
    breaks: &'a [f64],
    nodes: &'a [f64],
    cursor: usize,
    left_half: f64,
    i: usize,
}

impl<'a> LumpedMass<'a> {
    pub fn new(g: &'a LogPotential, breaks: &'a [f64], nodes: &'a [f64]) -> Self {
        Self {
            g,
            breaks,
            nodes,
            cursor: 0,
            left_half: 0.0,
            i: 0,
        }
    }
}

impl Iterator for LumpedMass<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let i = self.i;
        let t = *self.nodes.get(i)?;
        self.i += 1;
        let (right_half, next_left) = match self.nodes.get(i + 1) {
            Some(&u) => {
                let mid = 0.5 * (t + u);
                (
                    cell_integral(self.g, t, mid, self.breaks, &mut self.cursor),
                    cell_integral(self.g, mid, u, self.breaks, &mut self.cursor),
                )
            }
            None => (0.0, 0.0),
        };
        let m = self.left_half + right_half;
        self.left_half = next_left;
        Some(m)
    }
}

/// Negative-pivot counts of the lumped form on `nodes`, one per shift, and
/// whether any pivot had to be perturbed off zero. `masses` yields the
/// lumped `∫G` of each node in order.
pub(crate) fn sweep(
    p: &Problem,
    nodes: &[f64],
    masses: impl Iterator<Item = f64>,
    coupling: f64,
    shifts: &[Shift],
) -> (Vec<usize>, bool) {
    let n = nodes.len();
    let mut negatives = vec![0usize; shifts.len()];
    let mut pivots = vec![f64::INFINITY; shifts.len()];
    let mut perturbed = false;
    for (i, mass_g) in masses.enumerate().take(n) {
        let t = nodes[i];
        let removed = (i == 0 && p.left == End::Dirichlet)
            || (i + 1 == n && p.right == End::Dirichlet)
            || (p.dirichlet_at_zero && t == 0.0);
        if removed {
            pivots.iter_mut().for_each(|x| *x = f64::INFINITY);
            continue;
        }
        let h_left = (i > 0).then(|| t - nodes[i - 1]);
        let h_right = (i + 1 < n).then(|| nodes[i + 1] - t);
        let inv_l = h_left.map_or(0.0, |h| 1.0 / h);
        let inv_r = h_right.map_or(0.0, |h| 1.0 / h);
        let cell = 0.5 * (h_left.unwrap_or(0.0) + h_right.unwrap_or(0.0));
        let free_ends =
            (i == 0 && p.left == End::Free) as u8 + (i + 1 == n && p.right == End::Free) as u8;
        for (j, s) in shifts.iter().enumerate() {
            let diag = s.stiff * (inv_l + inv_r) - coupling * mass_g - s.energy * cell
                + s.robin * free_ends as f64;
            let off = s.stiff * inv_l;
            let mut piv = diag - off * off / pivots[j];
            let scale = diag.abs() + 2.0 * s.stiff * (inv_l + inv_r);
            if piv.abs() <= 1e-14 * scale {
                piv = 1e-14 * scale;
                perturbed = true;
            }
            if piv < 0.0 {
                negatives[j] += 1;
            }
            pivots[j] = piv;
        }
    }
    (negatives, perturbed)
}

/// `∫_a^b G` by two-point Gauss on each piece between breakpoints; `brk`
/// is a cursor into the sorted breakpoints, advanced monotonically.
fn cell_integral(g: &LogPotential, a: f64, b: f64, breaks: &[f64], brk: &mut usize) -> f64 {
    while *brk < breaks.len() && breaks[*brk] <= a {
        *brk += 1;
    }
    let mut sum = 0.0;
    let mut lo = a;
    let mut k = *brk;
    loop {
        let hi = if k < breaks.len() && breaks[k] < b { breaks[k] } else { b };
        sum += gauss2(g, lo, hi);
        if hi >= b {
            break;
        }
        lo = hi;
        k += 1;
    }
    sum
}

fn gauss2(g: &LogPotential, a: f64, b: f64) -> f64 {
    const X: f64 = 0.577_350_269_189_625_8;
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    r * (g.eval_truncated(c - r * X) + g.eval_truncated(c + r * X))
}
