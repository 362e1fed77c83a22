//! Normal and Beta distribution functions.
//!
//! The normal quantile is Wichura's AS 241 (PPND16), accurate to about 1e-16
//! relative over the whole open unit interval. The normal CDF goes through a
//! double precision `erfc`, and the Beta functions through the regularized
//! incomplete beta from `statrs`.

#![allow(clippy::excessive_precision)]

use libm::erfc;
use statrs::function::{beta::beta_reg, gamma::ln_gamma};

use crate::Real;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn norm_pdf<T: Real>(x: T) -> T {
    let x = x.to_f64_lossy();
    T::lit(FRAC_1_SQRT_2PI * (-0.5 * x * x).exp())
}

/// Standard normal CDF, `Phi(x)`.
pub fn norm_cdf<T: Real>(x: T) -> T {
    T::lit(norm_cdf_f64(x.to_f64_lossy()))
}

/// Upper tail `1 - Phi(x)` without cancellation.
pub fn norm_sf<T: Real>(x: T) -> T {
    T::lit(norm_cdf_f64(-x.to_f64_lossy()))
}

pub(crate) fn norm_cdf_f64(x: f64) -> f64 {
    if x == f64::INFINITY {
        1.0
    } else if x == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
    }
}

/// Standard normal quantile, `Phi^{-1}(p)`. Returns `-inf`/`+inf` at 0 and 1.
pub fn norm_quantile<T: Real>(p: T) -> T {
    T::lit(norm_quantile_f64(p.to_f64_lossy()))
}

#[rustfmt::skip]
const A: [f64; 8] = [
    3.387_132_872_796_366_608, 133.141_667_891_784_377_45, 1_971.590_950_306_551_442_7,
    13_731.693_765_509_461_125, 45_921.953_931_549_871_457, 67_265.770_927_008_700_853,
    33_430.575_583_588_128_105, 2_509.080_928_730_122_672_7,
];
#[rustfmt::skip]
const B: [f64; 8] = [
    1.0, 42.313_330_701_600_911_252, 687.187_007_492_057_908_3, 5_394.196_021_424_751_107_7,
    21_213.794_301_586_595_867, 39_307.895_800_092_710_61, 28_729.085_735_721_942_674,
    5_226.495_278_852_545_925,
];
#[rustfmt::skip]
const C: [f64; 8] = [
    1.423_437_110_749_683_577_34, 4.630_337_846_156_545_295_9, 5.769_497_221_460_691_405_5,
    3.647_848_324_763_204_605_04, 1.270_458_252_452_368_382_58, 0.241_780_725_177_450_611_77,
    0.022_723_844_989_269_184_583_3, 7.745_450_142_783_414_076_4e-4,
];
#[rustfmt::skip]
const D: [f64; 8] = [
    1.0, 2.053_191_626_637_758_821_87, 1.676_384_830_183_803_849_4, 0.689_767_334_985_100_004_55,
    0.148_103_976_427_480_074_59, 0.015_198_666_563_616_457_196_6, 5.475_938_084_995_344_946e-4,
    1.050_750_071_644_416_843_24e-9,
];
#[rustfmt::skip]
const E: [f64; 8] = [
    6.657_904_643_501_103_777_2, 5.463_784_911_164_114_369_9, 1.784_826_539_917_291_335_8,
    0.296_560_571_828_504_891_23, 0.026_532_189_526_576_123_093, 0.001_242_660_947_388_078_438_6,
    2.711_555_568_743_487_578_15e-5, 2.010_334_399_292_288_132_65e-7,
];
#[rustfmt::skip]
const F: [f64; 8] = [
    1.0, 0.599_832_206_555_887_937_69, 0.136_929_880_922_735_805_31, 0.014_875_361_290_850_614_852_5,
    7.868_691_311_456_132_591e-4, 1.846_318_317_510_054_681_8e-5, 1.421_511_758_316_445_888_7e-7,
    2.044_263_103_389_939_785_64e-15,
];

fn horner(coeffs: &[f64; 8], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub(crate) fn norm_quantile_f64(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * horner(&A, r) / horner(&B, r);
    }
    let r = (-(p.min(1.0 - p)).ln()).sqrt();
    let v = if r <= 5.0 {
        let r = r - 1.6;
        horner(&C, r) / horner(&D, r)
    } else {
        let r = r - 5.0;
        horner(&E, r) / horner(&F, r)
    };
    if q < 0.0 {
        -v
    } else {
        v
    }
}

/// CDF of Beta(a, b) on [0, 1].
pub fn beta_cdf<T: Real>(x: T, a: T, b: T) -> T {
    let (x, a, b) = (x.to_f64_lossy(), a.to_f64_lossy(), b.to_f64_lossy());
    if x <= 0.0 {
        return T::zero();
    }
    if x >= 1.0 {
        return T::one();
    }
    if a == 1.0 && b == 1.0 {
        return T::lit(x);
    }
    T::lit(beta_reg(a, b, x))
}

/// Density of Beta(a, b). Returns `+inf` at a boundary where the density diverges.
pub fn beta_pdf<T: Real>(x: T, a: T, b: T) -> T {
    let x = x.to_f64_lossy();
    T::lit(beta_pdf_split(
        x,
        1.0 - x,
        a.to_f64_lossy(),
        b.to_f64_lossy(),
    ))
}

/// Beta density at `x` with the complement `y = 1 - x` supplied separately,
/// so a divergence at either end is resolved at full precision.
pub(crate) fn beta_pdf_split(x: f64, y: f64, a: f64, b: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return 0.0;
    }
    if a == 1.0 && b == 1.0 {
        return 1.0;
    }
    if (x == 0.0 && a < 1.0) || (y == 0.0 && b < 1.0) {
        return f64::INFINITY;
    }
    if (x == 0.0 && a > 1.0) || (y == 0.0 && b > 1.0) {
        return 0.0;
    }
    let ln_norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    let ln_x = if x == 0.0 { 0.0 } else { (a - 1.0) * x.ln() };
    let ln_y = if y == 0.0 { 0.0 } else { (b - 1.0) * y.ln() };
    (ln_norm + ln_x + ln_y).exp()
}

#[rustfmt::skip]
const GL6: [(f64, f64); 3] = [
    (0.171_324_492_379_170_5, -0.932_469_514_203_152_2),
    (0.360_761_573_048_138_4, -0.661_209_386_466_264_7),
    (0.467_913_934_572_691_0, -0.238_619_186_083_197_0),
];
#[rustfmt::skip]
const GL12: [(f64, f64); 6] = [
    (0.047_175_336_386_511_77, -0.981_560_634_246_719_1),
    (0.106_939_325_995_318_3, -0.904_117_256_370_475_0),
    (0.160_078_328_543_346_4, -0.769_902_674_194_305_0),
    (0.203_167_426_723_065_9, -0.587_317_954_286_617_1),
    (0.233_492_536_538_354_7, -0.367_831_498_998_180_2),
    (0.249_147_045_813_402_9, -0.125_233_408_511_469_2),
];
#[rustfmt::skip]
const GL20: [(f64, f64); 10] = [
    (0.017_614_007_139_152_12, -0.993_128_599_185_094_9),
    (0.040_601_429_800_386_94, -0.963_971_927_277_913_8),
    (0.062_672_048_334_109_06, -0.912_234_428_251_325_9),
    (0.083_276_741_576_704_75, -0.839_116_971_822_218_8),
    (0.101_930_119_817_240_4, -0.746_331_906_460_150_8),
    (0.118_194_531_961_518_4, -0.636_053_680_726_515_0),
    (0.131_688_638_449_176_6, -0.510_867_001_950_827_1),
    (0.142_096_109_318_382_1, -0.373_706_088_715_419_6),
    (0.149_172_986_472_603_7, -0.227_785_851_141_645_1),
    (0.152_753_387_130_725_9, -0.076_526_521_133_497_33),
];

/// Upper bivariate normal orthant `P(X > h, Y > k)` for unit-variance normals
/// with correlation `r` (Drezner–Wesolowsky with Genz's refinements).
pub(crate) fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    use std::f64::consts::PI;
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return norm_cdf_f64(-k);
    }
    if k == f64::NEG_INFINITY {
        return norm_cdf_f64(-h);
    }
    let quad: &[(f64, f64)] = if r.abs() < 0.3 {
        &GL6
    } else if r.abs() < 0.75 {
        &GL12
    } else {
        &GL20
    };
    let two_pi = 2.0 * PI;
    let mut k = k;
    let hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        if r.abs() > 0.0 {
            let hs = (h * h + k * k) / 2.0;
            let asr = r.asin();
            for &(w, x) in quad {
                for sign in [-1.0, 1.0] {
                    let sn = (asr * (sign * x + 1.0) / 2.0).sin();
                    bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
                }
            }
            bvn *= asr / (2.0 * two_pi);
        }
        return bvn + norm_cdf_f64(-h) * norm_cdf_f64(-k);
    }
    if r < 0.0 {
        k = -k;
    }
    let hk = if r < 0.0 { -hk } else { hk };
    if r.abs() < 1.0 {
        let a_s = (1.0 - r) * (1.0 + r);
        let mut a = a_s.sqrt();
        let b_s = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -(b_s / a_s + hk) / 2.0;
        if asr > -100.0 {
            bvn = a
                * asr.exp()
                * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
        }
        if -hk < 100.0 {
            let b = b_s.sqrt();
            bvn -= (-hk / 2.0).exp()
                * two_pi.sqrt()
                * norm_cdf_f64(-b / a)
                * b
                * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
        }
        a /= 2.0;
        for &(w, x) in quad {
            for sign in [-1.0, 1.0] {
                let xs = (a * (sign * x + 1.0)).powi(2);
                let rs = (1.0 - xs).sqrt();
                let asr = -(b_s / xs + hk) / 2.0;
                if asr > -100.0 {
                    bvn += a
                        * w
                        * asr.exp()
                        * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                            - (1.0 + c * xs * (1.0 + d * xs)));
                }
            }
        }
        bvn = -bvn / two_pi;
    }
    if r > 0.0 {
        bvn + norm_cdf_f64(-h.max(k))
    } else {
        let mut out = -bvn;
        if k > h {
            out += norm_cdf_f64(k) - norm_cdf_f64(h);
        }
        out.max(0.0)
    }
}

/// Bivariate normal CDF `P(X <= x, Y <= y)` with correlation `r`.
pub fn bvn_cdf<T: Real>(x: T, y: T, r: T) -> T {
    T::lit(bvn_upper(
        -x.to_f64_lossy(),
        -y.to_f64_lossy(),
        r.to_f64_lossy(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference quantiles from 40-digit arbitrary precision evaluation.
    const QUANTILES: [(f64, f64); 10] = [
        (1e-20, -9.262_340_089_798_407_579_6),
        (1e-10, -6.361_340_902_404_056_199_1),
        (1e-5, -4.264_890_793_922_824_610_2),
        (0.001, -3.090_232_306_167_813_535_4),
        (0.025, -1.959_963_984_540_054_211_8),
        (0.2, -0.841_621_233_572_914_165_52),
        (0.4, -0.253_347_103_135_799_741_32),
        (0.8, 0.841_621_233_572_914_363_8),
        (0.975, 1.959_963_984_540_053_855_6),
        (0.999_999_999_9, 6.361_340_889_697_421_864_2),
    ];

    #[test]
    fn quantile_matches_high_precision_reference() {
        for (p, z) in QUANTILES {
            let got: f64 = norm_quantile(p);
            assert!(
                (got - z).abs() <= 1e-10 * z.abs().max(1.0),
                "p={p}: {got} vs {z}"
            );
        }
        assert_eq!(norm_quantile(0.5_f64), 0.0);
        assert_eq!(norm_quantile(0.0_f64), f64::NEG_INFINITY);
        assert_eq!(norm_quantile(1.0_f64), f64::INFINITY);
        assert!(norm_quantile(1.5_f64).is_nan());
    }

    #[test]
    fn quantile_agrees_with_inverse_erf_route() {
        // independent route: Phi^{-1}(p) = -sqrt(2) erfc^{-1}(2p)
        for i in 1..200 {
            let p = i as f64 / 200.0;
            let other = -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p);
            assert!((norm_quantile(p) - other).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn cdf_inverts_quantile() {
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            assert_relative_eq!(norm_cdf(norm_quantile(p)), p, max_relative = 1e-13);
        }
        assert_relative_eq!(norm_cdf(1.959_963_984_540_054_f64), 0.975, epsilon = 1e-15);
        assert_eq!(norm_cdf(f64::INFINITY), 1.0);
        assert_eq!(norm_cdf(f64::NEG_INFINITY), 0.0);
    }

    #[test]
    fn f32_quantile_is_close() {
        let z: f32 = norm_quantile(0.975_f32);
        assert!((z - 1.959_964).abs() < 1e-5);
    }

    #[test]
    fn beta_uniform_and_symmetric() {
        assert_eq!(beta_cdf(0.3, 1.0, 1.0), 0.3);
        assert_eq!(beta_pdf(0.3, 1.0, 1.0), 1.0);
        assert_relative_eq!(beta_cdf(0.5, 2.5, 2.5), 0.5, epsilon = 1e-14);
        // Beta(2,1): F(x)=x^2, f(x)=2x
        assert_relative_eq!(beta_cdf(0.3, 2.0, 1.0), 0.09, epsilon = 1e-14);
        assert_relative_eq!(beta_pdf(0.3, 2.0, 1.0), 0.6, epsilon = 1e-13);
        assert!(beta_pdf(0.0, 0.5, 0.5_f64).is_infinite());
        assert_eq!(beta_pdf(1.0, 2.0, 2.0), 0.0);
    }

    fn bvn_by_quadrature(x: f64, y: f64, r: f64) -> f64 {
        // P(X<=x, Y<=y) = int_{-inf}^{x} phi(t) Phi((y - r t)/sqrt(1-r^2)) dt
        let lo = -12.0;
        let n = 200_000;
        let h = (x - lo) / n as f64;
        let f = |t: f64| norm_pdf(t) * norm_cdf_f64((y - r * t) / (1.0 - r * r).sqrt());
        let mut acc = f(lo) + f(x);
        for i in 1..n {
            let t = lo + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
        }
        acc * h / 3.0
    }

    #[test]
    fn bvn_matches_simpson_oracle() {
        for &(x, y, r) in &[
            (0.0, 0.0, 0.5),
            (0.3, -0.7, 0.2),
            (1.2, 0.4, -0.6),
            (-1.0, 2.0, 0.95),
            (0.5, 0.6, -0.97),
            (2.0, 1.5, 0.8),
            (-0.2, -0.4, 0.0),
        ] {
            let got = bvn_cdf(x, y, r);
            let want = bvn_by_quadrature(x, y, r);
            assert!((got - want).abs() < 1e-10, "({x},{y},{r}): {got} vs {want}");
        }
        // P(X<=0,Y<=0) = 1/4 + asin(r)/(2 pi)
        let r: f64 = 0.3;
        assert_relative_eq!(
            bvn_cdf(0.0, 0.0, r),
            0.25 + r.asin() / (2.0 * std::f64::consts::PI),
            epsilon = 1e-15
        );
    }
}
