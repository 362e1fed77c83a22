//! Joint survival of K prioritized endpoints within one arm.
//!
//! Marginals are coupled through a survival copula: Gumbel–Hougaard
//! (exchangeable, positive dependence, Kendall tau = 1 - 1/kappa) or Gaussian
//! (arbitrary pairwise correlation matrix).

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::mvn::{cholesky, mvn_cdf};
use crate::special::{bvn_upper, norm_cdf_f64, norm_quantile_f64};
use crate::survival::Marginal;
use crate::Real;

/// Absolute error target for Gaussian orthant probabilities in three or more dimensions.
pub const MVN_ABS_TOL: f64 = 1e-7;

// Normal quantiles of probabilities in (0, 1) in double precision never exceed this.
const Z_CAP: f64 = 38.5;

/// Gumbel–Hougaard parameter from Kendall's tau: `kappa = 1 / (1 - tau)`.
pub fn tau_to_kappa<T: Real>(tau: T) -> Result<T> {
    if !(tau >= T::zero() && tau < T::one()) {
        return Err(Error::Domain(format!(
            "Gumbel-Hougaard Kendall tau must lie in [0, 1), got {tau}"
        )));
    }
    Ok(T::one() / (T::one() - tau))
}

/// Gaussian-copula correlation reproducing Kendall's tau: `sin(pi tau / 2)`.
pub fn tau_to_gaussian_corr<T: Real>(tau: T) -> Result<T> {
    if !(tau > -T::one() && tau < T::one()) {
        return Err(Error::Domain(format!(
            "Kendall tau must lie in (-1, 1), got {tau}"
        )));
    }
    Ok((T::PI() * tau / T::lit(2.0)).sin())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianCopula<T> {
    dim: usize,
    corr: Vec<T>,
    corr64: Vec<f64>,
    chol: Vec<f64>,
}

impl<T: Real> GaussianCopula<T> {
    /// From a symmetric, unit-diagonal, positive definite correlation matrix.
    pub fn new(corr: Vec<Vec<T>>) -> Result<Self> {
        let dim = corr.len();
        if dim == 0 || corr.iter().any(|row| row.len() != dim) {
            return Err(Error::InvalidModel(
                "correlation matrix must be square and nonempty".into(),
            ));
        }
        let tol = T::lit(1e-12);
        for i in 0..dim {
            if (corr[i][i] - T::one()).abs() > tol {
                return Err(Error::InvalidModel(format!(
                    "correlation matrix diagonal must be 1, got {} at ({i},{i})",
                    corr[i][i]
                )));
            }
            for j in 0..i {
                if (corr[i][j] - corr[j][i]).abs() > tol || corr[i][j].abs() >= T::one() {
                    return Err(Error::InvalidModel(format!(
                        "correlation matrix must be symmetric with off-diagonal entries in (-1, 1) at ({i},{j})"
                    )));
                }
            }
        }
        let flat: Vec<T> = corr.into_iter().flatten().collect();
        let corr64: Vec<f64> = flat.iter().map(|x| x.to_f64_lossy()).collect();
        let chol = cholesky(&corr64, dim).ok_or_else(|| {
            Error::InvalidModel("correlation matrix is not positive definite".into())
        })?;
        Ok(Self {
            dim,
            corr: flat,
            corr64,
            chol,
        })
    }

    /// From a matrix of pairwise Kendall taus (diagonal ignored).
    pub fn from_kendall(tau: Vec<Vec<T>>) -> Result<Self> {
        let dim = tau.len();
        let mut corr = vec![vec![T::one(); dim]; dim];
        for i in 0..dim {
            if tau[i].len() != dim {
                return Err(Error::InvalidModel(
                    "Kendall tau matrix must be square".into(),
                ));
            }
            for j in 0..dim {
                if i != j {
                    corr[i][j] = tau_to_gaussian_corr(tau[i][j])?;
                }
            }
        }
        Self::new(corr)
    }

    /// Exchangeable correlation with common Kendall tau.
    pub fn exchangeable(dim: usize, tau: T) -> Result<Self> {
        let tau_matrix = (0..dim)
            .map(|i| {
                (0..dim)
                    .map(|j| if i == j { T::one() } else { tau })
                    .collect()
            })
            .collect();
        Self::from_kendall(tau_matrix)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn corr(&self, i: usize, j: usize) -> T {
        self.corr[i * self.dim + j]
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.corr64[i * self.dim + j]
    }

    /// `P(Z_i <= z_i for all i)`.
    fn orthant(&self, z: &[f64]) -> f64 {
        mvn_cdf(z, &self.corr64, MVN_ABS_TOL)
    }

    /// `P(Z_j <= z_j, j != k | Z_k = z_k)`.
    fn conditional_orthant(&self, z: &[f64], k: usize) -> f64 {
        let zk = z[k].clamp(-Z_CAP, Z_CAP);
        let others: Vec<usize> = (0..self.dim)
            .filter(|&j| j != k && z[j] != f64::INFINITY)
            .collect();
        if others.iter().any(|&j| z[j] == f64::NEG_INFINITY) {
            return 0.0;
        }
        let scale: Vec<f64> = others
            .iter()
            .map(|&j| (1.0 - self.r(j, k).powi(2)).sqrt())
            .collect();
        let limits: Vec<f64> = others
            .iter()
            .zip(&scale)
            .map(|(&j, &sd)| (z[j] - self.r(j, k) * zk) / sd)
            .collect();
        match others.len() {
            0 => 1.0,
            1 => norm_cdf_f64(limits[0]),
            2 => {
                let (a, b) = (others[0], others[1]);
                let rho = (self.r(a, b) - self.r(a, k) * self.r(b, k)) / (scale[0] * scale[1]);
                bvn_upper(-limits[0], -limits[1], rho)
            }
            m => {
                let mut sub = vec![0.0; m * m];
                for (p, &a) in others.iter().enumerate() {
                    for (q, &b) in others.iter().enumerate() {
                        sub[p * m + q] = if p == q {
                            1.0
                        } else {
                            (self.r(a, b) - self.r(a, k) * self.r(b, k)) / (scale[p] * scale[q])
                        };
                    }
                }
                mvn_cdf(&limits, &sub, MVN_ABS_TOL)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Copula<T> {
    /// Archimedean with generator `(-ln u)^kappa`, `kappa >= 1`; `kappa == 1` is independence.
    GumbelHougaard {
        kappa: T,
    },
    Gaussian(GaussianCopula<T>),
}

impl<T: Real> Copula<T> {
    pub fn independence() -> Self {
        Copula::GumbelHougaard { kappa: T::one() }
    }

    pub fn gumbel(kappa: T) -> Result<Self> {
        if !(kappa.is_finite() && kappa >= T::one()) {
            return Err(Error::InvalidModel(format!(
                "Gumbel-Hougaard kappa must be finite and >= 1, got {kappa}"
            )));
        }
        Ok(Copula::GumbelHougaard { kappa })
    }

    pub fn gumbel_from_tau(tau: T) -> Result<Self> {
        Self::gumbel(tau_to_kappa(tau)?)
    }

    /// Kendall tau between endpoints `i` and `j`.
    pub fn kendall_tau(&self, i: usize, j: usize) -> T {
        match self {
            Copula::GumbelHougaard { kappa } => T::one() - T::one() / *kappa,
            Copula::Gaussian(g) => {
                if i == j {
                    T::one()
                } else {
                    T::lit(2.0) / T::PI() * g.corr(i, j).asin()
                }
            }
        }
    }
}

/// K marginals coupled by a copula: one arm's joint event-time law.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmModel<T> {
    marginals: Vec<Marginal<T>>,
    copula: Copula<T>,
}

impl<T: Real> ArmModel<T> {
    pub fn new(marginals: Vec<Marginal<T>>, copula: Copula<T>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidModel(
                "an arm needs at least one endpoint".into(),
            ));
        }
        if let Copula::Gaussian(g) = &copula {
            if g.dim() != marginals.len() {
                return Err(Error::Dimension {
                    expected: marginals.len(),
                    got: g.dim(),
                });
            }
        }
        if let Copula::GumbelHougaard { kappa } = &copula {
            if !(kappa.is_finite() && *kappa >= T::one()) {
                return Err(Error::InvalidModel(format!(
                    "Gumbel-Hougaard kappa must be finite and >= 1, got {kappa}"
                )));
            }
        }
        Ok(Self { marginals, copula })
    }

    /// Independent exponential endpoints with a Gumbel–Hougaard copula.
    pub fn exponential_gumbel(rates: &[T], kappa: T) -> Result<Self> {
        let marginals = rates
            .iter()
            .map(|&r| Marginal::exponential(r))
            .collect::<Result<Vec<_>>>()?;
        Self::new(marginals, Copula::gumbel(kappa)?)
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal<T>] {
        &self.marginals
    }

    pub fn copula(&self) -> &Copula<T> {
        &self.copula
    }

    /// Same copula, marginals replaced.
    pub fn with_marginals(&self, marginals: Vec<Marginal<T>>) -> Result<Self> {
        Self::new(marginals, self.copula.clone())
    }

    fn check_point(&self, y: &[T]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: y.len(),
            });
        }
        if let Some(v) = y.iter().find(|v| v.is_nan() || **v < T::zero()) {
            return Err(Error::Domain(format!("event times must be >= 0, got {v}")));
        }
        Ok(())
    }

    /// `S(y_1, ..., y_K) = P(Y_1 > y_1, ..., Y_K > y_K)`.
    pub fn joint_survival(&self, y: &[T]) -> Result<T> {
        self.check_point(y)?;
        Ok(self.surv(y))
    }

    /// `-dS/dy_k` at `y` (zero-based endpoint index `k`); nonnegative.
    pub fn joint_survival_partial(&self, y: &[T], k: usize) -> Result<T> {
        self.check_point(y)?;
        if k >= self.dim() {
            return Err(Error::Domain(format!(
                "endpoint index {k} out of range for {} endpoints",
                self.dim()
            )));
        }
        Ok(self.partial(y, k))
    }

    /// Central finite difference of the joint survival with step
    /// `max(1e-6, 1e-6 y_k)`, one-sided at `y_k = 0`.
    pub fn joint_survival_partial_fd(&self, y: &[T], k: usize) -> Result<T> {
        self.check_point(y)?;
        if k >= self.dim() {
            return Err(Error::Domain(format!("endpoint index {k} out of range")));
        }
        let h = T::lit(1e-6).max(T::lit(1e-6) * y[k]);
        let mut up = y.to_vec();
        let mut down = y.to_vec();
        up[k] = y[k] + h;
        down[k] = (y[k] - h).max(T::zero());
        Ok((self.surv(&down) - self.surv(&up)) / (up[k] - down[k]))
    }

    pub(crate) fn surv(&self, y: &[T]) -> T {
        match &self.copula {
            Copula::GumbelHougaard { kappa } => {
                let (a, _) = self.gumbel_norm(y, *kappa);
                (-a).exp()
            }
            Copula::Gaussian(g) => {
                let z = self.normal_scores(y);
                T::lit(g.orthant(&z))
            }
        }
    }

    pub(crate) fn partial(&self, y: &[T], k: usize) -> T {
        let m = &self.marginals[k];
        match &self.copula {
            Copula::GumbelHougaard { kappa } => {
                let (a, uk) = self.gumbel_norm_with(y, *kappa, k);
                let ratio = if *kappa == T::one() {
                    T::one()
                } else if a == T::zero() {
                    // only reachable at the origin, approached along coordinate k
                    T::one()
                } else {
                    (uk / a).powf(*kappa - T::one())
                };
                (-a).exp() * ratio * m.haz(y[k])
            }
            Copula::Gaussian(g) => {
                let z = self.normal_scores(y);
                let dens = m.haz(y[k]) * m.surv(y[k]);
                dens * T::lit(g.conditional_orthant(&z, k))
            }
        }
    }

    // Gumbel-Hougaard norm (sum u_j^kappa)^(1/kappa) of the cumulative hazards.
    fn gumbel_norm(&self, y: &[T], kappa: T) -> (T, T) {
        self.gumbel_norm_with(y, kappa, 0)
    }

    fn gumbel_norm_with(&self, y: &[T], kappa: T, k: usize) -> (T, T) {
        let uk = self.marginals[k].chaz(y[k]);
        let chaz = self.marginals.iter().zip(y).map(|(m, &v)| m.chaz(v));
        if kappa == T::one() {
            return (chaz.sum(), uk);
        }
        // scale by the largest term to keep u^kappa finite
        let big = chaz.clone().fold(T::zero(), T::max);
        if big == T::zero() || big == T::infinity() {
            return (big, uk);
        }
        let sum: T = chaz.map(|u| (u / big).powf(kappa)).sum();
        (big * sum.powf(T::one() / kappa), uk)
    }

    fn normal_scores(&self, y: &[T]) -> Vec<f64> {
        self.marginals
            .iter()
            .zip(y)
            .map(|(m, &v)| {
                let u = m.chaz(v).to_f64_lossy();
                // z = Phi^{-1}(exp(-u)) computed from the upper tail 1 - exp(-u)
                -norm_quantile_f64(-(-u).exp_m1())
            })
            .collect()
    }

    /// Draw `n` event-time vectors.
    pub fn sample_event_times<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<Vec<T>> {
        (0..n)
            .map(|_| {
                let mut v = vec![T::zero(); self.dim()];
                self.sample_into(rng, &mut v);
                v
            })
            .collect()
    }

    /// Draw one event-time vector into `out` (length K).
    ///
    /// Uniform survival levels come from the copula (positive-stable frailty for
    /// Gumbel–Hougaard, correlated normals for Gaussian) and are pushed through
    /// each marginal's inverse survival function.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) {
        let k = self.dim();
        match &self.copula {
            Copula::GumbelHougaard { kappa } => {
                let kappa = kappa.to_f64_lossy();
                let alpha = 1.0 / kappa;
                let frailty = if kappa == 1.0 {
                    1.0
                } else {
                    positive_stable(rng, alpha)
                };
                for (j, m) in self.marginals.iter().enumerate() {
                    let e: f64 = Exp1.sample(rng);
                    // -ln U_j = (E_j / V)^(1/kappa)
                    let chaz = (e / frailty).powf(alpha);
                    out[j] = m.time_at_chaz(T::lit(chaz));
                }
            }
            Copula::Gaussian(g) => {
                let eps: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
                for (j, m) in self.marginals.iter().enumerate() {
                    let z: f64 = (0..=j).map(|p| g.chol[j * k + p] * eps[p]).sum();
                    // U = Phi(z) is the survival level; its cumulative hazard is -ln Phi(z)
                    let chaz = -ln_norm_cdf(z);
                    out[j] = m.time_at_chaz(T::lit(chaz));
                }
            }
        }
    }
}

fn ln_norm_cdf(z: f64) -> f64 {
    if z > -30.0 {
        norm_cdf_f64(z).ln()
    } else {
        // Mills ratio asymptote
        -0.5 * z * z - (-z).ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Positive stable variate with Laplace transform `exp(-s^alpha)`, `0 < alpha < 1`
/// (Kanter's representation of the Chambers–Mallows–Stuck sampler).
pub fn positive_stable<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    use std::f64::consts::PI;
    let theta = loop {
        let u: f64 = rng.random::<f64>() * PI;
        if u > 0.0 {
            break u;
        }
    };
    let e: f64 = Exp1.sample(rng);
    let a = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * theta).sin() / e).powf((1.0 - alpha) / alpha);
    a * b
}
