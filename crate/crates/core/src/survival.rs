//! Marginal event-time laws and the combined dropout/accrual censoring law.
//!
//! Every marginal is stored as a piecewise-constant hazard: exponential is one
//! segment, piecewise exponential is its own representation, and a tabulated
//! survival curve with log-linear interpolation is a piecewise exponential
//! whose rates are implied by consecutive grid points.

use crate::error::{Error, Result};
use crate::special::{beta_cdf, beta_pdf_split};
use crate::Real;

/// Which parameterization a [`Marginal`] was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalKind {
    Exponential,
    PiecewiseExponential,
    Tabulated,
}

/// One-endpoint survival law with piecewise-constant hazard.
///
/// `breakpoints[j]` is the right end of segment `j`; the last segment extends to
/// infinity, so `rates.len() == breakpoints.len() + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal<T> {
    kind: MarginalKind,
    breakpoints: Vec<T>,
    rates: Vec<T>,
    // cumulative hazard at each breakpoint
    cum_hazard: Vec<T>,
}

fn check_time<T: Real>(t: T, what: &str) -> Result<()> {
    if t.is_nan() || t < T::zero() {
        return Err(Error::Domain(format!("{what} must be >= 0, got {t}")));
    }
    Ok(())
}

impl<T: Real> Marginal<T> {
    pub fn exponential(rate: T) -> Result<Self> {
        if !(rate.is_finite() && rate > T::zero()) {
            return Err(Error::InvalidModel(format!(
                "exponential hazard must be positive and finite, got {rate}"
            )));
        }
        Ok(Self {
            kind: MarginalKind::Exponential,
            breakpoints: Vec::new(),
            rates: vec![rate],
            cum_hazard: Vec::new(),
        })
    }

    /// Piecewise exponential with `rates.len() == breakpoints.len() + 1`.
    pub fn piecewise(breakpoints: Vec<T>, rates: Vec<T>) -> Result<Self> {
        if rates.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidModel(format!(
                "piecewise exponential needs one more rate than breakpoints ({} rates, {} breakpoints)",
                rates.len(),
                breakpoints.len()
            )));
        }
        if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > T::zero())) {
            return Err(Error::InvalidModel(format!(
                "piecewise hazard rates must be positive and finite, got {r}"
            )));
        }
        Self::from_segments(MarginalKind::PiecewiseExponential, breakpoints, rates)
    }

    /// Survival curve tabulated on an ascending grid, interpolated log-linearly
    /// and extended beyond the last point with the last implied hazard.
    ///
    /// A leading `(0, 1)` point is implied when the grid does not start at zero.
    pub fn tabulated(times: Vec<T>, survival: Vec<T>) -> Result<Self> {
        if times.len() != survival.len() || times.is_empty() {
            return Err(Error::InvalidModel(
                "tabulated survival needs equally many (>= 1) times and values".into(),
            ));
        }
        let mut grid: Vec<(T, T)> = times.into_iter().zip(survival).collect();
        if grid[0].0 != T::zero() {
            grid.insert(0, (T::zero(), T::one()));
        }
        if grid[0].1 != T::one() {
            return Err(Error::InvalidModel(
                "tabulated survival must equal 1 at time 0".into(),
            ));
        }
        if grid.len() < 2 {
            return Err(Error::InvalidModel(
                "tabulated survival needs at least one point after time 0".into(),
            ));
        }
        let mut breakpoints = Vec::with_capacity(grid.len() - 1);
        let mut rates = Vec::with_capacity(grid.len());
        for w in grid.windows(2) {
            let ((t0, s0), (t1, s1)) = (w[0], w[1]);
            if !(t1.is_finite() && t1 > t0) {
                return Err(Error::InvalidModel(
                    "tabulated grid must be finite and strictly ascending".into(),
                ));
            }
            if !(s1 > T::zero() && s1 <= s0) {
                return Err(Error::InvalidModel(format!(
                    "tabulated survival must be positive and nonincreasing, got {s1} after {s0}"
                )));
            }
            rates.push((s0.ln() - s1.ln()) / (t1 - t0));
            breakpoints.push(t1);
        }
        let tail = *rates.last().expect("nonempty");
        if tail <= T::zero() {
            return Err(Error::InvalidModel(
                "tabulated survival must decrease over its last interval to define a tail hazard"
                    .into(),
            ));
        }
        rates.push(tail);
        Self::from_segments(MarginalKind::Tabulated, breakpoints, rates)
    }

    fn from_segments(kind: MarginalKind, breakpoints: Vec<T>, rates: Vec<T>) -> Result<Self> {
        let mut prev = T::zero();
        let mut cum = T::zero();
        let mut cum_hazard = Vec::with_capacity(breakpoints.len());
        for (j, &b) in breakpoints.iter().enumerate() {
            if !(b.is_finite() && b > prev) {
                return Err(Error::InvalidModel(format!(
                    "breakpoints must be positive, finite and strictly ascending, got {b} after {prev}"
                )));
            }
            cum = cum + rates[j] * (b - prev);
            cum_hazard.push(cum);
            prev = b;
        }
        Ok(Self {
            kind,
            breakpoints,
            rates,
            cum_hazard,
        })
    }

    pub fn kind(&self) -> MarginalKind {
        self.kind
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn rates(&self) -> &[T] {
        &self.rates
    }

    /// Proportional-hazards transform: every segment rate multiplied by `ratio`.
    pub fn with_hazard_ratio(&self, ratio: T) -> Result<Self> {
        if !(ratio.is_finite() && ratio > T::zero()) {
            return Err(Error::InvalidModel(format!(
                "hazard ratio must be positive and finite, got {ratio}"
            )));
        }
        let rates = self.rates.iter().map(|&r| r * ratio).collect();
        Self::from_segments(self.kind, self.breakpoints.clone(), rates)
    }

    #[inline]
    fn segment(&self, t: T) -> usize {
        // right-continuous: a breakpoint belongs to the segment it starts
        self.breakpoints.partition_point(|&b| b <= t)
    }

    #[inline]
    pub(crate) fn chaz(&self, t: T) -> T {
        if self.breakpoints.is_empty() {
            return self.rates[0] * t;
        }
        let j = self.segment(t);
        let (start, base) = if j == 0 {
            (T::zero(), T::zero())
        } else {
            (self.breakpoints[j - 1], self.cum_hazard[j - 1])
        };
        base + self.rates[j] * (t - start)
    }

    #[inline]
    pub(crate) fn haz(&self, t: T) -> T {
        if self.breakpoints.is_empty() {
            self.rates[0]
        } else {
            self.rates[self.segment(t)]
        }
    }

    #[inline]
    pub(crate) fn surv(&self, t: T) -> T {
        if t == T::infinity() {
            return T::zero();
        }
        (-self.chaz(t)).exp()
    }

    /// `S(t) = P(Y > t)`.
    pub fn survival(&self, t: T) -> Result<T> {
        check_time(t, "time")?;
        Ok(self.surv(t))
    }

    /// `-dS/dt`; right limit at a breakpoint.
    pub fn density(&self, t: T) -> Result<T> {
        check_time(t, "time")?;
        Ok(self.haz(t) * self.surv(t))
    }

    pub fn cumulative_hazard(&self, t: T) -> Result<T> {
        check_time(t, "time")?;
        Ok(self.chaz(t))
    }

    pub fn hazard(&self, t: T) -> Result<T> {
        check_time(t, "time")?;
        Ok(self.haz(t))
    }

    /// Smallest `t` with `S(t) <= u`; `+inf` for `u == 0`.
    pub fn inverse_survival(&self, u: T) -> Result<T> {
        if !(u >= T::zero() && u <= T::one()) {
            return Err(Error::Domain(format!(
                "survival level must be in [0, 1], got {u}"
            )));
        }
        if u == T::zero() {
            return Ok(T::infinity());
        }
        Ok(self.time_at_chaz(-u.ln()))
    }

    pub(crate) fn time_at_chaz(&self, h: T) -> T {
        // first segment whose end cumulative hazard reaches h
        let j = self.cum_hazard.partition_point(|&c| c < h);
        let (start, base) = if j == 0 {
            (T::zero(), T::zero())
        } else {
            (self.breakpoints[j - 1], self.cum_hazard[j - 1])
        };
        let rate = self.rates[j];
        if rate == T::zero() {
            return start;
        }
        start + (h - base) / rate
    }
}

/// Dropout plus accrual-driven administrative censoring.
///
/// Follow-up without dropout is `L = s - b * U` with `U ~ Beta(early, late)`
/// the enrollment time as a fraction of the accrual window.
#[derive(Debug, Clone, PartialEq)]
pub struct Censoring<T> {
    study_length: T,
    accrual_length: T,
    accrual_shape: (T, T),
    dropout: Option<Marginal<T>>,
}

impl<T: Real> Censoring<T> {
    pub fn new(
        study_length: T,
        accrual_length: T,
        accrual_shape: (T, T),
        dropout: Option<Marginal<T>>,
    ) -> Result<Self> {
        if !(study_length.is_finite() && study_length > T::zero()) {
            return Err(Error::InvalidModel(format!(
                "study length must be positive and finite, got {study_length}"
            )));
        }
        if !(accrual_length >= T::zero() && accrual_length <= study_length) {
            return Err(Error::InvalidModel(format!(
                "accrual length must lie in [0, study length], got {accrual_length}"
            )));
        }
        let (a, b) = accrual_shape;
        if !(a.is_finite() && b.is_finite() && a > T::zero() && b > T::zero()) {
            return Err(Error::InvalidModel(format!(
                "accrual Beta shapes must be positive, got ({a}, {b})"
            )));
        }
        Ok(Self {
            study_length,
            accrual_length,
            accrual_shape,
            dropout,
        })
    }

    /// Uniform accrual over `accrual_length` with exponential dropout at `dropout_rate`
    /// (no dropout when the rate is zero).
    pub fn uniform(study_length: T, accrual_length: T, dropout_rate: T) -> Result<Self> {
        let dropout = if dropout_rate == T::zero() {
            None
        } else {
            Some(Marginal::exponential(dropout_rate)?)
        };
        Self::new(study_length, accrual_length, (T::one(), T::one()), dropout)
    }

    /// Administrative censoring exactly at `study_length`.
    pub fn administrative(study_length: T) -> Result<Self> {
        Self::new(study_length, T::zero(), (T::one(), T::one()), None)
    }

    pub fn study_length(&self) -> T {
        self.study_length
    }

    pub fn accrual_length(&self) -> T {
        self.accrual_length
    }

    pub fn accrual_shape(&self) -> (T, T) {
        self.accrual_shape
    }

    pub fn dropout(&self) -> Option<&Marginal<T>> {
        self.dropout.as_ref()
    }

    /// Censoring is a fixed cutoff at `study_length` with nothing else.
    pub fn is_administrative_only(&self) -> bool {
        self.accrual_length == T::zero() && self.dropout.is_none()
    }

    /// Probability mass of the follow-up law sitting exactly at `study_length`.
    pub fn follow_up_atom(&self) -> T {
        if self.accrual_length == T::zero() {
            T::one()
        } else {
            T::zero()
        }
    }

    /// `S_L(x)`.
    pub(crate) fn follow_up_surv(&self, x: T) -> T {
        let s = self.study_length;
        let b = self.accrual_length;
        if x > s {
            T::zero()
        } else if x <= s - b {
            T::one()
        } else {
            // P(s - b U > x) = P(U < (s - x) / b)
            let (pe, pl) = self.accrual_shape;
            beta_cdf((s - x) / b, pe, pl)
        }
    }

    /// `f_L(x)`, the continuous part of the follow-up law.
    pub(crate) fn follow_up_dens(&self, x: T) -> T {
        let s = self.study_length;
        let b = self.accrual_length;
        if b == T::zero() || x > s || x < s - b {
            return T::zero();
        }
        let (pe, pl) = self.accrual_shape;
        let u = ((s - x) / b).to_f64_lossy();
        let v = ((x - (s - b)) / b).to_f64_lossy();
        T::lit(beta_pdf_split(u, v, pe.to_f64_lossy(), pl.to_f64_lossy())) / b
    }

    #[inline]
    pub(crate) fn dropout_surv(&self, x: T) -> T {
        self.dropout.as_ref().map_or(T::one(), |d| d.surv(x))
    }

    #[inline]
    pub(crate) fn surv(&self, x: T) -> T {
        self.dropout_surv(x) * self.follow_up_surv(x)
    }

    #[inline]
    pub(crate) fn dens(&self, x: T) -> T {
        let sl = self.follow_up_surv(x);
        let drop = self
            .dropout
            .as_ref()
            .map_or(T::zero(), |d| d.haz(x) * d.surv(x) * sl);
        let fl = self.follow_up_dens(x);
        if fl == T::zero() {
            drop
        } else {
            drop + fl * self.dropout_surv(x)
        }
    }

    /// `S_G~(x) = S_G(x) * S_L(x)`.
    pub fn survival(&self, x: T) -> Result<T> {
        check_time(x, "censoring time")?;
        Ok(self.surv(x))
    }

    /// `g~(x) = g(x) S_L(x) + f_L(x) S_G(x)`, excluding any atom at `study_length`.
    pub fn density(&self, x: T) -> Result<T> {
        check_time(x, "censoring time")?;
        Ok(self.dens(x))
    }

    /// Points where the censoring law is not smooth, for splitting quadrature.
    pub fn knots(&self) -> Vec<T> {
        let mut k = vec![self.study_length - self.accrual_length, self.study_length];
        if let Some(d) = &self.dropout {
            k.extend(
                d.breakpoints()
                    .iter()
                    .copied()
                    .filter(|&b| b < self.study_length),
            );
        }
        k
    }
}
