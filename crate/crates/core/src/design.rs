//! Variance, power and sample size for the log win ratio under the tie-group
//! approximation, stratified designs and correlation sweeps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_quantile};
use crate::winprob::{compute_table, Scenario, WinLossTie, WinProbOptions};
use crate::Real;

/// What the design is solved for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target<T> {
    /// Target power `1 - beta`; solve for total N.
    Power(T),
    /// Fixed total N; solve for power.
    SampleSize(u64),
}

/// How a raw sample size is turned into whole participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    /// Even N under 1:1 allocation; otherwise the smallest N whose rounded
    /// arm sizes still reach the target power.
    #[default]
    WholeArms,
    /// Plain ceiling.
    Ceil,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignSpec<T> {
    /// Fraction of participants allocated to treatment.
    pub allocation: T,
    /// Two-sided significance level.
    pub alpha: T,
    pub target: Target<T>,
    pub rounding: Rounding,
}

impl<T: Real> DesignSpec<T> {
    pub fn for_power(power: T) -> Self {
        Self {
            allocation: T::lit(0.5),
            alpha: T::lit(0.05),
            target: Target::Power(power),
            rounding: Rounding::WholeArms,
        }
    }

    pub fn for_sample_size(n: u64) -> Self {
        Self {
            target: Target::SampleSize(n),
            ..Self::for_power(T::lit(0.8))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.allocation > T::zero() && self.allocation < T::one()) {
            return Err(Error::Domain(format!(
                "allocation must lie in (0, 1), got {}",
                self.allocation
            )));
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        match self.target {
            Target::Power(p) if !(p > self.alpha / T::lit(2.0) && p < T::one()) => Err(
                Error::Domain(format!("target power must lie in (alpha/2, 1), got {p}")),
            ),
            Target::SampleSize(n) if n < 2 => {
                Err(Error::Domain(format!("sample size must be >= 2, got {n}")))
            }
            _ => Ok(()),
        }
    }

    fn z_alpha(&self) -> T {
        norm_quantile(T::one() - self.alpha / T::lit(2.0))
    }
}

/// `sigma^2 = 4 (1 + p_tie) / (3 rho (1 - rho) (1 - p_tie))`, so that
/// `Var[ln WR] ~ sigma^2 / N`.
pub fn log_wr_variance_factor<T: Real>(p_tie: T, rho: T) -> Result<T> {
    if !(rho > T::zero() && rho < T::one()) {
        return Err(Error::Domain(format!(
            "allocation must lie in (0, 1), got {rho}"
        )));
    }
    if !(p_tie >= T::zero() && p_tie <= T::one()) {
        return Err(Error::Domain(format!(
            "tie probability must lie in [0, 1], got {p_tie}"
        )));
    }
    if p_tie == T::one() {
        return Err(Error::Degenerate("all comparisons tie".into()));
    }
    Ok(T::lit(4.0) * (T::one() + p_tie)
        / (T::lit(3.0) * rho * (T::one() - rho) * (T::one() - p_tie)))
}

/// Sample size before rounding.
pub fn raw_sample_size<T: Real>(wr: T, p_tie: T, spec: &DesignSpec<T>) -> Result<T> {
    spec.validate()?;
    let Target::Power(power) = spec.target else {
        return Err(Error::Domain(
            "design target is a sample size, not a power".into(),
        ));
    };
    check_wr(wr)?;
    let sigma2 = log_wr_variance_factor(p_tie, spec.allocation)?;
    let z = spec.z_alpha() + norm_quantile(power);
    Ok(sigma2 * z * z / wr.ln().powi(2))
}

fn check_wr<T: Real>(wr: T) -> Result<()> {
    if !(wr > T::zero() && wr.is_finite()) {
        return Err(Error::Domain(format!(
            "win ratio must be positive and finite, got {wr}"
        )));
    }
    if wr == T::one() {
        return Err(Error::Infeasible(
            "win ratio is 1: no sample size reaches the target power".into(),
        ));
    }
    Ok(())
}

/// Raw and rounded total sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleSize<T> {
    pub raw: T,
    pub total: u64,
    pub treatment: u64,
    pub control: u64,
}

/// Total N reaching the target power, rounded per `spec.rounding`.
pub fn required_sample_size<T: Real>(
    wr: T,
    p_tie: T,
    spec: &DesignSpec<T>,
) -> Result<SampleSize<T>> {
    let raw = raw_sample_size(wr, p_tie, spec)?;
    let Target::Power(target) = spec.target else {
        unreachable!()
    };
    round_sample_size(raw, spec, |n, rho| {
        power_with(wr, p_tie, n, rho, spec.alpha).map(|p| p >= target)
    })
}

fn round_sample_size<T: Real>(
    raw: T,
    spec: &DesignSpec<T>,
    mut reaches: impl FnMut(T, T) -> Result<bool>,
) -> Result<SampleSize<T>> {
    let Some(start) = raw.ceil().to_u64() else {
        return Err(Error::Infeasible(format!(
            "sample size {raw} is not representable"
        )));
    };
    let start = start.max(2);
    let rho = spec.allocation;
    let split = |n: u64| {
        let t = (rho * T::lit(n as f64)).round().to_u64().unwrap_or(0);
        (t, n - t.min(n))
    };
    match spec.rounding {
        Rounding::Ceil => {
            let (t, c) = split(start);
            Ok(SampleSize {
                raw,
                total: start,
                treatment: t,
                control: c,
            })
        }
        Rounding::WholeArms if rho == T::lit(0.5) => {
            let n = start + start % 2;
            Ok(SampleSize {
                raw,
                total: n,
                treatment: n / 2,
                control: n / 2,
            })
        }
        Rounding::WholeArms => {
            let mut n = start;
            loop {
                let (t, c) = split(n);
                if t > 0 && c > 0 {
                    let actual = T::lit(t as f64) / T::lit(n as f64);
                    if reaches(T::lit(n as f64), actual)? {
                        return Ok(SampleSize {
                            raw,
                            total: n,
                            treatment: t,
                            control: c,
                        });
                    }
                }
                n += 1;
                if n > start.saturating_mul(2) + 16 {
                    return Err(Error::Infeasible(
                        "no whole-participant split reaches the target power".into(),
                    ));
                }
            }
        }
    }
}

fn power_with<T: Real>(wr: T, p_tie: T, n: T, rho: T, alpha: T) -> Result<T> {
    let sigma = log_wr_variance_factor(p_tie, rho)?.sqrt();
    let z = norm_quantile(T::one() - alpha / T::lit(2.0));
    Ok(T::one() - norm_cdf(z - wr.ln() * n.sqrt() / sigma))
}

/// `1 - Phi(z_{1-alpha/2} - ln(WR) sqrt(N) / sigma)`.
pub fn power_at_n<T: Real>(wr: T, p_tie: T, n: u64, spec: &DesignSpec<T>) -> Result<T> {
    if n < 2 {
        return Err(Error::Domain(format!("sample size must be >= 2, got {n}")));
    }
    if !(wr > T::zero() && wr.is_finite()) {
        return Err(Error::Domain(format!(
            "win ratio must be positive and finite, got {wr}"
        )));
    }
    if !(spec.alpha > T::zero() && spec.alpha < T::one()) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {}",
            spec.alpha
        )));
    }
    power_with(wr, p_tie, T::lit(n as f64), spec.allocation, spec.alpha)
}

/// One stratum: weight, size and its win/loss/tie table.
#[derive(Debug, Clone, PartialEq)]
pub struct Stratum<T> {
    pub weight: T,
    pub size: T,
    pub table: WinLossTie<T>,
}

fn check_strata<T: Real>(strata: &[Stratum<T>]) -> Result<()> {
    if strata.is_empty() {
        return Err(Error::Domain("at least one stratum is required".into()));
    }
    if strata
        .iter()
        .any(|s| !(s.weight >= T::zero() && s.size > T::zero()))
    {
        return Err(Error::Domain(
            "stratum weights must be >= 0 and sizes > 0".into(),
        ));
    }
    if !strata.iter().any(|s| s.weight > T::zero()) {
        return Err(Error::Degenerate("all stratum weights are zero".into()));
    }
    Ok(())
}

/// Size-squared weighted win ratio and tie probability across strata.
pub fn stratified_combine<T: Real>(strata: &[Stratum<T>]) -> Result<(T, T)> {
    check_strata(strata)?;
    let mut wins = T::zero();
    let mut losses = T::zero();
    let mut ties = T::zero();
    let mut norm = T::zero();
    for s in strata {
        let w = s.weight * s.size * s.size;
        wins = wins + w * s.table.total_win();
        losses = losses + w * s.table.total_loss();
        ties = ties + w * s.table.tie;
        norm = norm + w;
    }
    if losses == T::zero() {
        return Err(Error::Degenerate("no stratum has any losses".into()));
    }
    Ok((wins / losses, ties / norm))
}

/// `sum w^2 N^3 / (sum w N^2)^2`: the factor multiplying the core variance.
/// Equals `1 / N` for a single stratum of size N.
pub fn stratification_factor<T: Real>(weights_sizes: impl Iterator<Item = (T, T)>) -> T {
    let (num, den) = weights_sizes.fold((T::zero(), T::zero()), |(a, b), (w, n)| {
        (a + w * w * n * n * n, b + w * n * n)
    });
    num / (den * den)
}

/// Approximate `Var[ln WR_strata]`.
pub fn stratified_variance<T: Real>(strata: &[Stratum<T>], rho: T) -> Result<T> {
    let (_, p_tie) = stratified_combine(strata)?;
    let core = log_wr_variance_factor(p_tie, rho)?;
    Ok(core * stratification_factor(strata.iter().map(|s| (s.weight, s.size))))
}

/// Power of the stratified design at the stratum sizes given.
pub fn stratified_power<T: Real>(strata: &[Stratum<T>], spec: &DesignSpec<T>) -> Result<T> {
    let (wr, _) = stratified_combine(strata)?;
    let var = stratified_variance(strata, spec.allocation)?;
    let z = spec.z_alpha();
    Ok(T::one() - norm_cdf(z - wr.ln() / var.sqrt()))
}

/// Stratified sample size with stratum sizes treated as relative proportions.
#[derive(Debug, Clone, PartialEq)]
pub struct StratifiedSampleSize<T> {
    pub win_ratio: T,
    pub tie: T,
    pub total: SampleSize<T>,
    /// Participants per stratum, proportional to the given sizes.
    pub per_stratum: Vec<u64>,
}

pub fn stratified_sample_size<T: Real>(
    strata: &[Stratum<T>],
    spec: &DesignSpec<T>,
) -> Result<StratifiedSampleSize<T>> {
    let (wr, p_tie) = stratified_combine(strata)?;
    let total_size: T = strata.iter().map(|s| s.size).sum();
    let fractions: Vec<T> = strata.iter().map(|s| s.size / total_size).collect();
    let factor = stratification_factor(strata.iter().zip(&fractions).map(|(s, &f)| (s.weight, f)));
    let raw = raw_sample_size(wr, p_tie, spec)? * factor;
    let Target::Power(target) = spec.target else {
        unreachable!()
    };
    let total = round_sample_size(raw, spec, |n, rho| {
        let var = log_wr_variance_factor(p_tie, rho)? * factor / n;
        Ok(T::one() - norm_cdf(spec.z_alpha() - wr.ln() / var.sqrt()) >= target)
    })?;
    let per_stratum = fractions
        .iter()
        .map(|&f| {
            (f * T::lit(total.total as f64))
                .round()
                .to_u64()
                .unwrap_or(0)
        })
        .collect();
    Ok(StratifiedSampleSize {
        win_ratio: wr,
        tie: p_tie,
        total,
        per_stratum,
    })
}

/// Relative change of `y` between two grid points, scaled to a change of
/// `delta` in `x`.
pub fn relative_change_rate<T: Real>(x_start: T, x_end: T, y_start: T, y_end: T, delta: T) -> T {
    (y_end - y_start) / y_start / (x_end - x_start) * delta
}

/// Design quantity reported in a grid row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridValue<T> {
    SampleSize { target_power: T, n: u64 },
    Power { n: u64, power: T },
}

impl<T: Real> GridValue<T> {
    pub fn as_real(&self) -> T {
        match *self {
            GridValue::SampleSize { n, .. } => T::lit(n as f64),
            GridValue::Power { power, .. } => power,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow<T> {
    pub tau: T,
    pub study_length: T,
    pub table: WinLossTie<T>,
    pub value: GridValue<T>,
    /// Relative change per 0.1 of tau against the previous tau at the same
    /// study length and target; `None` on the first tau.
    pub rcr: Option<T>,
}

/// Sweep Kendall tau and study length. `build(tau, s)` produces the scenario;
/// one row per (s, target, tau), ordered that way. `targets` lists the
/// design targets evaluated on each cell (one per row group).
pub fn correlation_grid<T, F>(
    taus: &[T],
    study_lengths: &[T],
    targets: &[DesignSpec<T>],
    build: F,
    opts: &WinProbOptions<T>,
) -> Result<Vec<GridRow<T>>>
where
    T: Real,
    F: Fn(T, T) -> Result<Scenario<T>> + Sync,
{
    if taus.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "tau values must be strictly ascending".into(),
        ));
    }
    let cells: Vec<(T, T)> = study_lengths
        .iter()
        .flat_map(|&s| taus.iter().map(move |&t| (s, t)))
        .collect();
    let tables: Vec<WinLossTie<T>> = cells
        .par_iter()
        .map(|&(s, tau)| compute_table(&build(tau, s)?, opts))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(cells.len() * targets.len());
    for (si, &s) in study_lengths.iter().enumerate() {
        for spec in targets {
            let mut prev: Option<(T, T)> = None;
            for (ti, &tau) in taus.iter().enumerate() {
                let table = &tables[si * taus.len() + ti];
                let value = grid_value(table, spec)?;
                let y = value.as_real();
                let rcr = prev.map(|(x0, y0)| relative_change_rate(x0, tau, y0, y, T::lit(0.1)));
                prev = Some((tau, y));
                rows.push(GridRow {
                    tau,
                    study_length: s,
                    table: table.clone(),
                    value,
                    rcr,
                });
            }
        }
    }
    Ok(rows)
}

fn grid_value<T: Real>(table: &WinLossTie<T>, spec: &DesignSpec<T>) -> Result<GridValue<T>> {
    let wr = table.win_ratio();
    Ok(match spec.target {
        Target::Power(p) => GridValue::SampleSize {
            target_power: p,
            n: required_sample_size(wr, table.tie, spec)?.total,
        },
        Target::SampleSize(n) => GridValue::Power {
            n,
            power: power_at_n(wr, table.tie, n, spec)?,
        },
    })
}
