//! Monte Carlo oracle: simulated trials, hierarchical pairwise win ratio and
//! empirical power.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Exp1};
use rayon::prelude::*;

use crate::design::log_wr_variance_factor;
use crate::error::{Error, Result};
use crate::special::norm_cdf_f64;
use crate::winprob::{Arm, Scenario};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig<T> {
    pub replicates: usize,
    /// Total participants per trial across both arms.
    pub n_per_trial: usize,
    pub master_seed: u64,
    /// Endpoint 1 truncates observation of the later endpoints.
    pub semi_competing: bool,
    /// Two-sided level of the replicate test.
    pub alpha: T,
    /// Fraction allocated to treatment.
    pub allocation: T,
}

impl<T: Real> SimConfig<T> {
    pub fn new(replicates: usize, n_per_trial: usize, master_seed: u64) -> Self {
        Self {
            replicates,
            n_per_trial,
            master_seed,
            semi_competing: false,
            alpha: T::lit(0.05),
            allocation: T::lit(0.5),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Domain("replicates must be >= 1".into()));
        }
        if self.n_per_trial < 4 {
            return Err(Error::Domain(format!(
                "participants per trial must be >= 4, got {}",
                self.n_per_trial
            )));
        }
        if !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::Domain(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.allocation > T::zero() && self.allocation < T::one()) {
            return Err(Error::Domain(format!(
                "allocation must lie in (0, 1), got {}",
                self.allocation
            )));
        }
        let (t, c) = self.arm_sizes();
        if t == 0 || c == 0 {
            return Err(Error::Domain("allocation leaves an arm empty".into()));
        }
        Ok(())
    }

    /// `(n_treatment, n_control)`.
    pub fn arm_sizes(&self) -> (usize, usize) {
        let t = (self.allocation.to_f64_lossy() * self.n_per_trial as f64).round() as usize;
        let t = t.min(self.n_per_trial);
        (t, self.n_per_trial - t)
    }
}

/// One participant's observed record.
#[derive(Debug, Clone, PartialEq)]
pub struct Participant<T> {
    pub arm: Arm,
    /// Observed time per endpoint.
    pub time: Vec<T>,
    /// Event observed per endpoint.
    pub event: Vec<bool>,
    pub censoring: T,
}

impl<T: Real> Participant<T> {
    /// Build the observed record from latent event times and a censoring time.
    pub fn observe(arm: Arm, latent: &[T], censoring: T, semi_competing: bool) -> Self {
        let terminal = latent.first().copied().unwrap_or(T::infinity());
        let mut time = Vec::with_capacity(latent.len());
        let mut event = Vec::with_capacity(latent.len());
        for (k, &y) in latent.iter().enumerate() {
            let limit = if semi_competing && k > 0 {
                censoring.min(terminal)
            } else {
                censoring
            };
            time.push(y.min(limit));
            event.push(y <= limit);
        }
        Self {
            arm,
            time,
            event,
            censoring,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialData<T> {
    pub endpoints: usize,
    pub participants: Vec<Participant<T>>,
}

impl<T: Real> TrialData<T> {
    pub fn arm(&self, arm: Arm) -> impl Iterator<Item = &Participant<T>> {
        self.participants.iter().filter(move |p| p.arm == arm)
    }

    /// Arm labels exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            endpoints: self.endpoints,
            participants: self
                .participants
                .iter()
                .map(|p| Participant {
                    arm: p.arm.other(),
                    ..p.clone()
                })
                .collect(),
        }
    }
}

fn replicate_rng(master_seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replicate);
    rng
}

/// Draw a censoring time `min(dropout, s - b * Beta(early, late))`.
fn draw_censoring<T: Real, R: Rng + ?Sized>(
    scn: &Scenario<T>,
    beta: Option<&Beta<f64>>,
    rng: &mut R,
) -> T {
    let cens = &scn.censoring;
    let s = cens.study_length();
    let follow_up = match beta {
        Some(b) => s - cens.accrual_length() * T::lit(b.sample(rng)),
        None => s,
    };
    match cens.dropout() {
        Some(d) => {
            let e: f64 = Exp1.sample(rng);
            follow_up.min(d.time_at_chaz(T::lit(e)))
        }
        None => follow_up,
    }
}

fn accrual_beta<T: Real>(scn: &Scenario<T>) -> Result<Option<Beta<f64>>> {
    if scn.censoring.accrual_length() == T::zero() {
        return Ok(None);
    }
    let (a, b) = scn.censoring.accrual_shape();
    Beta::new(a.to_f64_lossy(), b.to_f64_lossy())
        .map(Some)
        .map_err(|e| Error::InvalidModel(format!("accrual shape: {e}")))
}

/// Simulate one trial; replicate `index` selects an independent random stream.
pub fn generate_trial<T: Real>(
    scn: &Scenario<T>,
    cfg: &SimConfig<T>,
    index: u64,
) -> Result<TrialData<T>> {
    cfg.validate()?;
    let beta = accrual_beta(scn)?;
    let mut rng = replicate_rng(cfg.master_seed, index);
    let (nt, nc) = cfg.arm_sizes();
    let k = scn.endpoints();
    let mut latent = vec![T::zero(); k];
    let mut participants = Vec::with_capacity(nt + nc);
    for (arm, n) in [(Arm::Treatment, nt), (Arm::Control, nc)] {
        let model = match arm {
            Arm::Treatment => &scn.treatment,
            Arm::Control => &scn.control,
        };
        for _ in 0..n {
            model.sample_into(&mut rng, &mut latent);
            let c = draw_censoring(scn, beta.as_ref(), &mut rng);
            participants.push(Participant::observe(arm, &latent, c, cfg.semi_competing));
        }
    }
    Ok(TrialData {
        endpoints: k,
        participants,
    })
}

/// Pairwise outcome counts over all treated x control pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairCounts {
    /// Treated wins decided at each endpoint.
    pub wins: Vec<u64>,
    /// Control wins decided at each endpoint.
    pub losses: Vec<u64>,
    pub ties: u64,
    pub pairs: u64,
}

impl PairCounts {
    pub fn total_wins(&self) -> u64 {
        self.wins.iter().sum()
    }

    pub fn total_losses(&self) -> u64 {
        self.losses.iter().sum()
    }
}

/// Compare one treated and one control record; `Some((k, true))` is a treated
/// win at endpoint `k`, `Some((k, false))` a loss, `None` a tie.
pub fn compare_pair<T: Real>(
    treated: &Participant<T>,
    control: &Participant<T>,
) -> Option<(usize, bool)> {
    for k in 0..treated.time.len() {
        let (tt, te) = (treated.time[k], treated.event[k]);
        let (ct, ce) = (control.time[k], control.event[k]);
        if ce && ct < tt {
            return Some((k, true));
        }
        if te && tt < ct {
            return Some((k, false));
        }
    }
    None
}

/// Hierarchical pairwise comparison of every treated x control pair.
pub fn pairwise_counts<T: Real>(data: &TrialData<T>) -> Result<PairCounts> {
    let treated: Vec<_> = data.arm(Arm::Treatment).collect();
    let control: Vec<_> = data.arm(Arm::Control).collect();
    if treated.is_empty() || control.is_empty() {
        return Err(Error::Domain("both arms must be nonempty".into()));
    }
    let k = data.endpoints;
    let mut counts = PairCounts {
        wins: vec![0; k],
        losses: vec![0; k],
        ties: 0,
        pairs: (treated.len() * control.len()) as u64,
    };
    for t in &treated {
        for c in &control {
            match compare_pair(t, c) {
                Some((j, true)) => counts.wins[j] += 1,
                Some((j, false)) => counts.losses[j] += 1,
                None => counts.ties += 1,
            }
        }
    }
    Ok(counts)
}

/// Replicate-level estimate and normal test on `ln WR`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseResult<T> {
    pub counts: PairCounts,
    /// `None` when there are no wins or no losses.
    pub win_ratio: Option<T>,
    pub tie: T,
    /// Plug-in variance of `ln WR`.
    pub log_variance: Option<T>,
    pub p_value: Option<T>,
}

impl<T: Real> PairwiseResult<T> {
    pub fn rejects(&self, alpha: T) -> bool {
        self.p_value.is_some_and(|p| p < alpha)
    }
}

pub fn pairwise_win_ratio<T: Real>(data: &TrialData<T>) -> Result<PairwiseResult<T>> {
    let counts = pairwise_counts(data)?;
    let nt = data.arm(Arm::Treatment).count();
    let n = data.participants.len();
    let tie = T::lit(counts.ties as f64 / counts.pairs as f64);
    let (w, l) = (counts.total_wins(), counts.total_losses());
    if w == 0 || l == 0 {
        return Ok(PairwiseResult {
            counts,
            win_ratio: None,
            tie,
            log_variance: None,
            p_value: None,
        });
    }
    let wr = w as f64 / l as f64;
    let rho = nt as f64 / n as f64;
    let var = log_wr_variance_factor(tie.to_f64_lossy(), rho)
        .ok()
        .map(|s2| s2 / n as f64);
    let p = var.map(|v| 2.0 * norm_cdf_f64(-(wr.ln().abs() / v.sqrt())));
    Ok(PairwiseResult {
        counts,
        win_ratio: Some(T::lit(wr)),
        tie,
        log_variance: var.map(T::lit),
        p_value: p.map(T::lit),
    })
}

/// Mean and Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub mean: T,
    pub se: T,
}

impl<T: Real> Estimate<T> {
    fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: T::nan(),
                se: T::nan(),
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        Self {
            mean: T::lit(mean),
            se: T::lit(se),
        }
    }

    /// `|mean - value|` in standard errors.
    pub fn z_distance(&self, value: T) -> T {
        (self.mean - value).abs() / self.se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSummary<T> {
    pub replicates: usize,
    /// Replicates without wins or without losses; excluded from the WR mean.
    pub excluded: usize,
    /// Mean of the replicate win ratios.
    pub win_ratio: Estimate<T>,
    /// Total win proportion over total loss proportion, each averaged across
    /// replicates first (delta-method standard error).
    pub pooled_win_ratio: Estimate<T>,
    pub tie: Estimate<T>,
    /// Per-endpoint treated-win proportions.
    pub win: Vec<Estimate<T>>,
    /// Per-endpoint control-win proportions.
    pub loss: Vec<Estimate<T>>,
    /// Rejection rate of the replicate test.
    pub power: Estimate<T>,
    pub master_seed: u64,
}

fn ratio_estimate<T: Real>(num: &[f64], den: &[f64]) -> Estimate<T> {
    let n = num.len() as f64;
    let mx = num.iter().sum::<f64>() / n;
    let my = den.iter().sum::<f64>() / n;
    let r = mx / my;
    let se = if num.len() > 1 {
        // residuals x - r y carry the first-order variability of the ratio
        let ss: f64 = num.iter().zip(den).map(|(x, y)| (x - r * y).powi(2)).sum();
        (ss / (n - 1.0) / n).sqrt() / my
    } else {
        f64::INFINITY
    };
    Estimate {
        mean: T::lit(r),
        se: T::lit(se),
    }
}

struct ReplicateSlot {
    wr: Option<f64>,
    tie: f64,
    win: Vec<f64>,
    loss: Vec<f64>,
    reject: bool,
}

/// Run all replicates in parallel and average; bit-identical for a given seed
/// regardless of thread count.
pub fn empirical_summary<T: Real>(scn: &Scenario<T>, cfg: &SimConfig<T>) -> Result<SimSummary<T>> {
    cfg.validate()?;
    let slots: Vec<ReplicateSlot> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|i| {
            let data = generate_trial(scn, cfg, i)?;
            let r = pairwise_win_ratio(&data)?;
            let pairs = r.counts.pairs as f64;
            Ok(ReplicateSlot {
                wr: r.win_ratio.map(|w| w.to_f64_lossy()),
                tie: r.tie.to_f64_lossy(),
                win: r.counts.wins.iter().map(|&w| w as f64 / pairs).collect(),
                loss: r.counts.losses.iter().map(|&l| l as f64 / pairs).collect(),
                reject: r.rejects(cfg.alpha),
            })
        })
        .collect::<Result<_>>()?;

    let wrs: Vec<f64> = slots.iter().filter_map(|s| s.wr).collect();
    let ties: Vec<f64> = slots.iter().map(|s| s.tie).collect();
    let rejects: Vec<f64> = slots
        .iter()
        .map(|s| if s.reject { 1.0 } else { 0.0 })
        .collect();
    let per_endpoint = |get: fn(&ReplicateSlot) -> &Vec<f64>| -> Vec<Estimate<T>> {
        (0..scn.endpoints())
            .map(|k| {
                let xs: Vec<f64> = slots.iter().map(|s| get(s)[k]).collect();
                Estimate::from_samples(&xs)
            })
            .collect()
    };
    let total_win: Vec<f64> = slots.iter().map(|s| s.win.iter().sum()).collect();
    let total_loss: Vec<f64> = slots.iter().map(|s| s.loss.iter().sum()).collect();
    Ok(SimSummary {
        replicates: cfg.replicates,
        excluded: cfg.replicates - wrs.len(),
        win_ratio: Estimate::from_samples(&wrs),
        pooled_win_ratio: ratio_estimate(&total_win, &total_loss),
        tie: Estimate::from_samples(&ties),
        win: per_endpoint(|s| &s.win),
        loss: per_endpoint(|s| &s.loss),
        power: Estimate::from_samples(&rejects),
        master_seed: cfg.master_seed,
    })
}
