//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature.
//!
//! Integrands are split at caller-supplied knots (discontinuities, kinks,
//! integrable endpoint singularities) and the interval with the largest error
//! estimate is bisected until the total error meets the tolerance.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::Real;

#[rustfmt::skip]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003, 0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508, 0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042, 0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694, 0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866, 0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[rustfmt::skip]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192, 0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580, 0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366, 0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_258_185, 0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717, 0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
#[rustfmt::skip]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332, 0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163, 0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Tolerances and subdivision budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    pub max_intervals: usize,
}

impl<T: Real> Default for QuadConfig<T> {
    fn default() -> Self {
        Self {
            rel_tol: T::lit(1e-8).max(T::tolerance_floor()),
            abs_tol: T::lit(1e-12).max(T::min_positive_value()),
            max_intervals: 2000,
        }
    }
}

impl<T: Real> QuadConfig<T> {
    pub fn with_tolerances(rel_tol: T, abs_tol: T) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }
}

/// Integral estimate with its error bound and cost.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: T,
    pub evaluations: usize,
}

struct Segment<T> {
    lower: T,
    upper: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Segment<T> {}
impl<T: Real> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

fn kronrod21<T: Real, F: FnMut(T) -> T>(f: &mut F, a: T, b: T) -> Segment<T> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let half_len = half * (b - a);
    // nodes that round onto an endpoint are dropped so endpoint singularities stay finite
    let mut f = |x: T| if x > a && x < b { f(x) } else { T::zero() };
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[10]);
    let mut gauss = T::zero();
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [T::zero(); 10];
    let mut fv2 = [T::zero(); 10];
    for j in 0..10 {
        let dx = half_len * T::lit(XGK[j]);
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        let w = T::lit(WGK[j]);
        kronrod = kronrod + w * (f1 + f2);
        abs_sum = abs_sum + w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * (f1 + f2);
        }
    }
    let mean = kronrod * half;
    let mut asc = T::lit(WGK[10]) * (fc - mean).abs();
    for j in 0..10 {
        asc = asc + T::lit(WGK[j]) * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half_len;
    let asc = asc * half_len.abs();
    let abs_sum = abs_sum * half_len.abs();
    let mut error = ((kronrod - gauss) * half_len).abs();
    if asc != T::zero() && error != T::zero() {
        let ratio = (T::lit(200.0) * error / asc).powf(T::lit(1.5));
        error = asc * ratio.min(T::one());
    }
    let roundoff = T::lit(50.0) * T::epsilon() * abs_sum;
    if abs_sum > T::min_positive_value() / (T::lit(50.0) * T::epsilon()) {
        error = error.max(roundoff);
    }
    Segment {
        lower: a,
        upper: b,
        value,
        error,
    }
}

/// Integrate `f` over `[lower, upper]`, splitting first at every knot that lies
/// strictly inside the interval.
pub fn integrate<T, F>(
    mut f: F,
    lower: T,
    upper: T,
    knots: &[T],
    cfg: &QuadConfig<T>,
) -> Result<QuadResult<T>>
where
    T: Real,
    F: FnMut(T) -> T,
{
    if !(lower.is_finite() && upper.is_finite()) {
        return Err(Error::Domain(format!(
            "integration limits must be finite, got [{lower}, {upper}]"
        )));
    }
    if upper <= lower {
        return Ok(QuadResult {
            value: T::zero(),
            error: T::zero(),
            evaluations: 0,
        });
    }
    let mut cuts: Vec<T> = knots
        .iter()
        .copied()
        .filter(|&x| x > lower && x < upper)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut left = lower;
    let mut evaluations = 0;
    for &cut in cuts.iter().chain(std::iter::once(&upper)) {
        heap.push(kronrod21(&mut f, left, cut));
        evaluations += 21;
        left = cut;
    }

    // segments too narrow to bisect in floating point
    let mut frozen: Vec<Segment<T>> = Vec::new();
    loop {
        let total: T = heap.iter().chain(&frozen).map(|s| s.value).sum();
        let active: T = heap.iter().map(|s| s.error).sum();
        let stuck: T = frozen.iter().map(|s| s.error).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        let err = active + stuck;
        if err <= target || (active <= target && stuck <= target * T::lit(100.0)) {
            return Ok(QuadResult {
                value: total,
                error: err,
                evaluations,
            });
        }
        let Some(worst) = heap.pop() else {
            return Err(quad_error(lower, upper, err, target));
        };
        let mid = T::lit(0.5) * (worst.lower + worst.upper);
        let too_narrow = mid <= worst.lower
            || mid >= worst.upper
            || (worst.upper - worst.lower)
                <= T::epsilon() * T::lit(100.0) * worst.upper.abs().max(T::one());
        if too_narrow {
            frozen.push(worst);
            continue;
        }
        if heap.len() + frozen.len() + 2 > cfg.max_intervals {
            // accept a result that only misses because of rounding in the last digits
            if err <= target * T::lit(10.0) {
                return Ok(QuadResult {
                    value: total,
                    error: err,
                    evaluations,
                });
            }
            return Err(quad_error(lower, upper, err, target));
        }
        heap.push(kronrod21(&mut f, worst.lower, mid));
        heap.push(kronrod21(&mut f, mid, worst.upper));
        evaluations += 42;
    }
}

fn quad_error<T: Real>(lower: T, upper: T, achieved: T, requested: T) -> Error {
    Error::Quadrature {
        lower: lower.to_f64_lossy(),
        upper: upper.to_f64_lossy(),
        achieved: achieved.to_f64_lossy(),
        requested: requested.to_f64_lossy(),
    }
}

/// Convenience wrapper returning only the value.
pub fn integral<T, F>(f: F, lower: T, upper: T, knots: &[T], cfg: &QuadConfig<T>) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> T,
{
    integrate(f, lower, upper, knots, cfg).map(|r| r.value)
}
