//! Win, loss and tie probabilities for hierarchically compared endpoints.
//!
//! A treated and a control patient are compared on endpoint 1 over the window
//! `[0, min(C_t, C_c))`; if neither event is observed first inside the window the
//! pair ties and moves on to endpoint 2, and so on. Censoring times of both
//! patients are i.i.d. from the shared [`Censoring`] law.
//!
//! With general censoring the per-endpoint probabilities are one- and
//! two-dimensional integrals against the law of `min(C_t, C_c)`, whose survival
//! is `S_G~^2` and whose continuous density is `2 g~ S_G~`. Pure administrative
//! censoring (no accrual window, no dropout) uses the simpler closed forms with
//! the comparison window fixed at the study length.

use crate::copula::ArmModel;
use crate::error::{Error, Result};
use crate::quadrature::{integral, QuadConfig};
use crate::survival::Censoring;
use crate::Real;

/// Two-arm design: joint event-time laws per arm and the shared censoring law.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T> {
    pub control: ArmModel<T>,
    pub treatment: ArmModel<T>,
    pub censoring: Censoring<T>,
    /// Endpoint 1 is terminal and truncates observation of the others.
    /// Honored by the simulation oracle; the formulas are unaffected unless
    /// [`WinProbOptions::semi_competing_adjust`] is set.
    pub semi_competing: bool,
}

impl<T: Real> Scenario<T> {
    pub fn new(
        control: ArmModel<T>,
        treatment: ArmModel<T>,
        censoring: Censoring<T>,
    ) -> Result<Self> {
        if control.dim() != treatment.dim() {
            return Err(Error::Dimension {
                expected: control.dim(),
                got: treatment.dim(),
            });
        }
        Ok(Self {
            control,
            treatment,
            censoring,
            semi_competing: false,
        })
    }

    pub fn with_semi_competing(mut self, on: bool) -> Self {
        self.semi_competing = on;
        self
    }

    pub fn endpoints(&self) -> usize {
        self.control.dim()
    }

    /// Treatment and control exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            control: self.treatment.clone(),
            treatment: self.control.clone(),
            censoring: self.censoring.clone(),
            semi_competing: self.semi_competing,
        }
    }

    fn arm(&self, which: Arm) -> &ArmModel<T> {
        match which {
            Arm::Treatment => &self.treatment,
            Arm::Control => &self.control,
        }
    }
}

/// Whose win is being computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Arm {
    Treatment,
    Control,
}

impl Arm {
    pub fn other(self) -> Self {
        match self {
            Arm::Treatment => Arm::Control,
            Arm::Control => Arm::Treatment,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WinProbOptions<T> {
    /// Outer (censoring) integrals.
    pub quad: QuadConfig<T>,
    /// Inner integrals of the nested endpoint-k formula; tighter than `quad`
    /// so inner error does not show up as outer-integrand noise.
    pub inner_quad: QuadConfig<T>,
    /// Use the general censoring pipeline (with a point mass at the study
    /// length) even when censoring is purely administrative.
    pub force_general: bool,
    /// Treat the endpoint-1 event time as additional censoring for later endpoints.
    pub semi_competing_adjust: bool,
}

impl<T: Real> Default for WinProbOptions<T> {
    fn default() -> Self {
        Self {
            quad: QuadConfig::default(),
            inner_quad: QuadConfig::with_tolerances(
                T::lit(1e-10).max(T::tolerance_floor()),
                T::lit(1e-14).max(T::min_positive_value()),
            ),
            force_general: false,
            semi_competing_adjust: false,
        }
    }
}

/// Per-endpoint win and loss probabilities (treatment perspective) and the
/// probability that a pair ties on every endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct WinLossTie<T> {
    pub win: Vec<T>,
    pub loss: Vec<T>,
    pub tie: T,
}

impl<T: Real> WinLossTie<T> {
    pub fn total_win(&self) -> T {
        self.win.iter().copied().sum()
    }

    pub fn total_loss(&self) -> T {
        self.loss.iter().copied().sum()
    }

    /// Sum of wins over sum of losses.
    pub fn win_ratio(&self) -> T {
        self.total_win() / self.total_loss()
    }

    /// Wins minus losses.
    pub fn net_benefit(&self) -> T {
        self.total_win() - self.total_loss()
    }

    /// Wins plus half the ties over losses plus half the ties.
    pub fn win_odds(&self) -> T {
        let half = self.tie / T::lit(2.0);
        (self.total_win() + half) / (self.total_loss() + half)
    }

    /// Should be one up to integration error.
    pub fn partition_sum(&self) -> T {
        self.total_win() + self.total_loss() + self.tie
    }

    /// Win ratio restricted to endpoint `k`.
    pub fn endpoint_win_ratio(&self, k: usize) -> T {
        self.win[k] / self.loss[k]
    }

    /// Arms exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            win: self.loss.clone(),
            loss: self.win.clone(),
            tie: self.tie,
        }
    }
}

fn point_with<T: Real>(dim: usize, lead: usize, lead_value: T, k: usize, y: T) -> Vec<T> {
    let mut v = vec![T::zero(); dim];
    for x in v.iter_mut().take(lead) {
        *x = lead_value;
    }
    v[k] = y;
    v
}

fn general<T: Real>(scn: &Scenario<T>, opts: &WinProbOptions<T>) -> bool {
    opts.force_general || !scn.censoring.is_administrative_only()
}

fn outer_knots<T: Real>(scn: &Scenario<T>) -> Vec<T> {
    let s = scn.censoring.study_length();
    let mut knots = scn.censoring.knots();
    for arm in [&scn.control, &scn.treatment] {
        for m in arm.marginals() {
            knots.extend(m.breakpoints().iter().copied().filter(|&b| b < s));
        }
    }
    knots
}

fn endpoint_knots<T: Real>(scn: &Scenario<T>, k: usize, upper: T) -> Vec<T> {
    let mut knots = Vec::new();
    for arm in [&scn.control, &scn.treatment] {
        knots.extend(
            arm.marginals()[k]
                .breakpoints()
                .iter()
                .copied()
                .filter(|&b| b < upper),
        );
    }
    knots
}

/// Probability that `perspective` wins on endpoint 1.
pub fn win_prob_first<T: Real>(
    scn: &Scenario<T>,
    perspective: Arm,
    opts: &WinProbOptions<T>,
) -> Result<T> {
    // the opponent's event has to come first
    let own = scn.arm(perspective.other());
    let opp = scn.arm(perspective);
    let dim = scn.endpoints();
    let cens = &scn.censoring;
    let s = cens.study_length();
    let weight_by_censoring = general(scn, opts);
    let mut knots = outer_knots(scn);
    knots.extend(endpoint_knots(scn, 0, s));
    let f = |y: T| {
        let p = point_with(dim, 0, T::zero(), 0, y);
        let w = if weight_by_censoring {
            let g = cens.surv(y);
            g * g
        } else {
            T::one()
        };
        if w == T::zero() {
            return T::zero();
        }
        opp.surv(&p) * w * own.partial(&p, 0)
    };
    integral(f, T::zero(), s, &knots, &opts.quad)
}

/// Inner integral of the endpoint-k formula: all earlier endpoints of both
/// patients survive past `c` and the opponent's endpoint-k event comes first
/// inside `[0, c]`.
fn inner<T: Real>(
    own: &ArmModel<T>,
    opp: &ArmModel<T>,
    k: usize,
    c: T,
    knots: &[T],
    opts: &WinProbOptions<T>,
) -> Result<T> {
    let dim = own.dim();
    let f = |y: T| {
        let mut p = point_with(dim, k, c, k, y);
        if opts.semi_competing_adjust {
            // the terminal endpoint also has to outlast the endpoint-k event
            p[0] = p[0].max(y);
        }
        opp.surv(&p) * own.partial(&p, k)
    };
    let inner_knots: Vec<T> = knots.iter().copied().filter(|&b| b < c).collect();
    integral(f, T::zero(), c, &inner_knots, &opts.inner_quad)
}

/// Probability that `perspective` wins on endpoint `k` (zero-based, `k >= 1`)
/// after ties on every earlier endpoint.
pub fn win_prob_k<T: Real>(
    scn: &Scenario<T>,
    k: usize,
    perspective: Arm,
    opts: &WinProbOptions<T>,
) -> Result<T> {
    if k == 0 {
        return win_prob_first(scn, perspective, opts);
    }
    if k >= scn.endpoints() {
        return Err(Error::Domain(format!(
            "endpoint index {k} out of range for {} endpoints",
            scn.endpoints()
        )));
    }
    let own = scn.arm(perspective.other());
    let opp = scn.arm(perspective);
    let cens = &scn.censoring;
    let s = cens.study_length();
    let kn = endpoint_knots(scn, k, s);
    if !general(scn, opts) {
        return inner(own, opp, k, s, &kn, opts);
    }
    let mut failure = None;
    let continuous = integral(
        |c: T| {
            let dens = cens.dens(c);
            if dens == T::zero() {
                return T::zero();
            }
            match inner(own, opp, k, c, &kn, opts) {
                Ok(v) => T::lit(2.0) * dens * cens.surv(c) * v,
                Err(e) => {
                    failure.get_or_insert(e);
                    T::zero()
                }
            }
        },
        T::zero(),
        s,
        &outer_knots(scn),
        &opts.quad,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    let atom = atom_weight(cens);
    let at_end = if atom > T::zero() {
        atom * inner(own, opp, k, s, &kn, opts)?
    } else {
        T::zero()
    };
    Ok(continuous + at_end)
}

// P(min(C_t, C_c) = s): both follow-up laws sit on the administrative atom and
// neither patient dropped out before it.
fn atom_weight<T: Real>(cens: &Censoring<T>) -> T {
    let a = cens.follow_up_atom() * cens.dropout_surv(cens.study_length());
    a * a
}

/// Probability that a pair ties on every endpoint.
pub fn tie_prob<T: Real>(scn: &Scenario<T>, opts: &WinProbOptions<T>) -> Result<T> {
    let dim = scn.endpoints();
    let cens = &scn.censoring;
    let s = cens.study_length();
    let both = |c: T| {
        let p = vec![c; dim];
        scn.treatment.surv(&p) * scn.control.surv(&p)
    };
    if !general(scn, opts) {
        return Ok(both(s));
    }
    let continuous = integral(
        |c: T| {
            let dens = cens.dens(c);
            if dens == T::zero() {
                return T::zero();
            }
            T::lit(2.0) * both(c) * dens * cens.surv(c)
        },
        T::zero(),
        s,
        &outer_knots(scn),
        &opts.quad,
    )?;
    Ok(continuous + atom_weight(cens) * both(s))
}

/// Full win/loss/tie table from the treatment perspective.
pub fn compute_table<T: Real>(
    scn: &Scenario<T>,
    opts: &WinProbOptions<T>,
) -> Result<WinLossTie<T>> {
    let k = scn.endpoints();
    let mut win = Vec::with_capacity(k);
    let mut loss = Vec::with_capacity(k);
    for j in 0..k {
        win.push(win_prob_k(scn, j, Arm::Treatment, opts)?);
        loss.push(win_prob_k(scn, j, Arm::Control, opts)?);
    }
    let tie = tie_prob(scn, opts)?;
    Ok(WinLossTie { win, loss, tie })
}
