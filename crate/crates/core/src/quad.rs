//! Adaptive Gauss–Kronrod quadrature on finite intervals.
//!
//! A 21-point Kronrod rule with its embedded 10-point Gauss rule drives a
//! global adaptive subdivision: the interval with the largest error estimate
//! is bisected until the summed error meets the absolute/relative tolerance.
//! Known discontinuities should be passed as breakpoints so that no panel
//! straddles them.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Abscissae of the 21-point Kronrod rule (positive half, descending).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_958_109_831,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for the odd-indexed Kronrod nodes XGK[1], XGK[3], ...
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

/// Tolerances for adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-8,
            max_subdivisions: 4000,
        }
    }
}

/// Integral value with an absolute error estimate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;

    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
        }
    }
}

impl std::iter::Sum for Estimate {
    fn sum<I: Iterator<Item = Estimate>>(iter: I) -> Estimate {
        iter.fold(Estimate::default(), |a, b| a + b)
    }
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

/// One application of the 21-point rule on `[a, b]`.
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Estimate {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_abs = (fc * WGK[10]).abs();
    let mut res_g = 0.0;
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let err = (res_k - res_g) * half;
    Estimate {
        value: res_k * half,
        error: rescale_error(err, res_abs * half.abs(), res_asc * half.abs()),
    }
}

/// Adaptive integral of `f` over the finite interval `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &QuadTol) -> Result<Estimate> {
    if a == b {
        return Ok(Estimate::default());
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs a finite interval, got [{a}, {b}]"
        )));
    }
    let first = gk21(&f, a, b);
    let mut heap = BinaryHeap::new();
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(Panel {
        a,
        b,
        value: first.value,
        error: first.error,
    });
    let mut panels = 1;
    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if !total.is_finite() {
            break;
        }
        if panels >= tol.max_subdivisions {
            return Err(Error::Quadrature {
                a,
                b,
                value: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel can no longer be split in floating point.
            heap.push(worst);
            return Err(Error::Quadrature {
                a,
                b,
                value: total,
                error: total_err,
            });
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: left.value,
            error: left.error,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: right.value,
            error: right.error,
        });
        panels += 1;
    }
    // Recompute from panels to shed accumulated cancellation error.
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(Estimate { value, error })
}

/// Integral over `[a, b]` split at every breakpoint strictly inside it.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: &QuadTol,
) -> Result<Estimate> {
    let mut nodes = vec![a];
    nodes.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    nodes.push(b);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let mut sum = Estimate::default();
    for w in nodes.windows(2) {
        sum = sum + integrate(&f, w[0], w[1], tol)?;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_exact_for_degree_31() {
        let f = |x: f64| x.powi(30) + 3.0 * x.powi(7) - 1.0;
        let est = gk21(&f, -1.0, 1.0);
        let exact = 2.0 / 31.0 - 2.0;
        assert!((est.value - exact).abs() < 1e-14, "{}", est.value);
    }

    #[test]
    fn gauss_weights_sum_to_one_half_interval() {
        let g: f64 = WG.iter().sum();
        let k: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((g - 1.0).abs() < 1e-14);
        assert!((k - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_log_singularity() {
        // ∫₀¹ r(-ln r) dr = 1/4
        let est = integrate(|r| if r > 0.0 { -r * r.ln() } else { 0.0 }, 0.0, 1.0, &QuadTol::default())
            .unwrap();
        assert!((est.value - 0.25).abs() < 1e-10);
        let est = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, &QuadTol::default()).unwrap();
        assert!((est.value - 2.0).abs() < 1e-7, "{est:?}");
    }

    #[test]
    fn breakpoints_resolve_jumps() {
        let step = |x: f64| if x < 0.3 { 1.0 } else { 5.0 };
        let est = integrate_with_breaks(step, 0.0, 1.0, &[0.3], &QuadTol::default()).unwrap();
        assert!((est.value - (0.3 + 3.5)).abs() < 1e-13);
    }

    #[test]
    fn non_convergence_is_reported() {
        let tol = QuadTol {
            abs: 1e-14,
            rel: 0.0,
            max_subdivisions: 3,
        };
        let r = integrate(|x: f64| (1.0 / x).sin(), 1e-6, 1.0, &tol);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
