//! Multivariate normal orthant probabilities.
//!
//! Up to three dimensions these reduce to the bivariate normal and a single
//! quadrature. Higher dimensions use Genz's separation-of-variables transform over a randomly shifted Weyl
//! (Richtmyer) lattice with the baker's transform. Shifts come from a fixed
//! seed, so the estimate is a deterministic and smooth function of the limits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::quadrature::{integral, QuadConfig};
use crate::special::{bvn_upper, norm_cdf_f64, norm_quantile_f64};

const SHIFTS: usize = 12;
const LOWER_CUT: f64 = 38.5;
const MIN_POINTS: usize = 256;
const MAX_POINTS: usize = 1 << 17;
const SEED: u64 = 0x5eed_0f9e_11a7;
const PRIMES: [f64; 24] = [
    2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0, 29.0, 31.0, 37.0, 41.0, 43.0, 47.0, 53.0,
    59.0, 61.0, 67.0, 71.0, 73.0, 79.0, 83.0, 89.0,
];

/// Lower Cholesky factor of a row-major `m x m` matrix, or `None` if it is not
/// positive definite.
pub(crate) fn cholesky(a: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = a[i * m + j];
            for p in 0..j {
                s -= l[i * m + p] * l[j * m + p];
            }
            if i == j {
                if s <= 1e-14 {
                    return None;
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Some(l)
}

/// Trivariate normal CDF by conditioning on the first coordinate:
/// `int phi(x) P(X_2 <= b_2, X_3 <= b_3 | X_1 = x) dx` over `x <= b_1`.
fn trivariate(b1: f64, b2: f64, b3: f64, r12: f64, r13: f64, r23: f64) -> f64 {
    let s2 = (1.0 - r12 * r12).sqrt();
    let s3 = (1.0 - r13 * r13).sqrt();
    let rho = ((r23 - r12 * r13) / (s2 * s3)).clamp(-1.0, 1.0);
    let cfg = QuadConfig::with_tolerances(1e-12, 1e-15);
    let lower = -LOWER_CUT;
    let upper = b1.min(LOWER_CUT);
    if upper <= lower {
        return 0.0;
    }
    let f = |x: f64| {
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        pdf * bvn_upper(-(b2 - r12 * x) / s2, -(b3 - r13 * x) / s3, rho)
    };
    integral(f, lower, upper, &[0.0], &cfg).map_or(f64::NAN, |v| v.clamp(0.0, 1.0))
}

/// `P(X_1 <= b_1, ..., X_m <= b_m)` for a standard normal vector with
/// correlation matrix `corr` (row-major). Entries of `b` may be infinite.
///
/// Up to three dimensions the result is accurate to near machine precision;
/// beyond that the target absolute error is `abs_tol` (three standard errors
/// across shifts).
pub fn mvn_cdf(b: &[f64], corr: &[f64], abs_tol: f64) -> f64 {
    let m_all = b.len();
    if b.contains(&f64::NEG_INFINITY) {
        return 0.0;
    }
    // +inf limits marginalize out
    let keep: Vec<usize> = (0..m_all).filter(|&i| b[i] != f64::INFINITY).collect();
    let m = keep.len();
    match m {
        0 => return 1.0,
        1 => return norm_cdf_f64(b[keep[0]]),
        2 => {
            let r = corr[keep[0] * m_all + keep[1]];
            return bvn_upper(-b[keep[0]], -b[keep[1]], r);
        }
        3 => {
            let (i, j, k) = (keep[0], keep[1], keep[2]);
            let r = |p: usize, q: usize| corr[p * m_all + q];
            let sub = [
                1.0,
                r(i, j),
                r(i, k),
                r(j, i),
                1.0,
                r(j, k),
                r(k, i),
                r(k, j),
                1.0,
            ];
            if cholesky(&sub, 3).is_none() {
                return f64::NAN;
            }
            return trivariate(b[i], b[j], b[k], r(i, j), r(i, k), r(j, k));
        }
        _ => {}
    }
    // most restrictive limits first
    let mut order = keep;
    order.sort_by(|&i, &j| b[i].partial_cmp(&b[j]).unwrap_or(std::cmp::Ordering::Equal));
    let limits: Vec<f64> = order.iter().map(|&i| b[i]).collect();
    let mut sub = vec![0.0; m * m];
    for (r, &i) in order.iter().enumerate() {
        for (c, &j) in order.iter().enumerate() {
            sub[r * m + c] = corr[i * m_all + j];
        }
    }
    let Some(l) = cholesky(&sub, m) else {
        return f64::NAN;
    };

    let dims = m - 1;
    let generator: Vec<f64> = PRIMES[..dims].iter().map(|p| p.sqrt().fract()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let shifts: Vec<Vec<f64>> = (0..SHIFTS)
        .map(|_| (0..dims).map(|_| rng.random::<f64>()).collect())
        .collect();

    let first = norm_cdf_f64(limits[0] / l[0]);
    let mut sums = [0.0; SHIFTS];
    let mut y = vec![0.0; m];
    let mut done = 0usize;
    let mut target = MIN_POINTS;
    loop {
        for (s, shift) in shifts.iter().enumerate() {
            for i in done..target {
                let mut e = first;
                let mut prod = first;
                for k in 1..m {
                    let t = ((i + 1) as f64 * generator[k - 1] + shift[k - 1]).fract();
                    let w = (2.0 * t - 1.0).abs();
                    let u = (w * e).clamp(1e-300, 1.0 - 1e-16);
                    y[k - 1] = norm_quantile_f64(u);
                    let mut acc = 0.0;
                    for (p, yp) in y.iter().take(k).enumerate() {
                        acc += l[k * m + p] * yp;
                    }
                    e = norm_cdf_f64((limits[k] - acc) / l[k * m + k]);
                    prod *= e;
                    if prod == 0.0 {
                        break;
                    }
                }
                sums[s] += prod;
            }
        }
        done = target;
        let means: Vec<f64> = sums.iter().map(|s| s / done as f64).collect();
        let mean = means.iter().sum::<f64>() / SHIFTS as f64;
        let var =
            means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / ((SHIFTS - 1) * SHIFTS) as f64;
        if 3.0 * var.sqrt() <= abs_tol || done >= MAX_POINTS {
            return mean.clamp(0.0, 1.0);
        }
        target = done * 2;
    }
}
