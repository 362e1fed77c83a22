//! Run configuration: TOML schema, validation and conversion to core models.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use winsize_core::{
    ArmModel, Censoring, Copula, DesignSpec, GaussianCopula, Marginal, Rounding, Scenario,
    SimConfig, Target,
};

/// A configuration problem, tagged with the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl fmt::Display) -> Self {
        Self {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

type Checked<T> = Result<T, ConfigError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioBlock {
    #[serde(default)]
    pub semi_competing: bool,
    pub endpoints: Vec<EndpointSpec>,
    pub dependence: DependenceSpec,
    pub censoring: CensoringSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndpointSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hazard_ratio: Option<f64>,
    pub control: MarginalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub treatment: Option<MarginalSpec>,
}

/// Event-time margin. Times in days, hazards per day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MarginalSpec {
    Exponential {
        rate: f64,
    },
    Piecewise {
        breakpoints: Vec<f64>,
        rates: Vec<f64>,
    },
    Tabulated {
        times: Vec<f64>,
        survival: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CopulaKind {
    #[default]
    Gumbel,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependenceSpec {
    #[serde(default)]
    pub copula: CopulaKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CensoringSpec {
    pub study_length: f64,
    #[serde(default)]
    pub accrual_length: f64,
    /// Beta shapes (early, late) of the enrollment time within the accrual window.
    #[serde(default = "uniform_shape")]
    pub accrual_shape: [f64; 2],
    #[serde(default)]
    pub dropout_rate: f64,
}

fn uniform_shape() -> [f64; 2] {
    [1.0, 1.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundingSpec {
    #[default]
    WholeArms,
    Ceil,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignBlock {
    #[serde(default = "half")]
    pub allocation: f64,
    #[serde(default = "five_percent")]
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_size: Option<u64>,
    #[serde(default)]
    pub rounding: RoundingSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strata: Vec<StratumSpec>,
}

fn half() -> f64 {
    0.5
}

fn five_percent() -> f64 {
    0.05
}

/// One stratum: the scenario with optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratumSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "one")]
    pub weight: f64,
    pub size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accrual_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropout_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub tau: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub study_length: Vec<f64>,
    /// Power targets; falls back to the design block.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimBlock {
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub n: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_replicates() -> usize {
    2000
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Md,
    Txt,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Checked<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Checked<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            ConfigError::new("", format!("invalid configuration: {msg}"))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Checked<()> {
        self.scenario.validate()?;
        if let Some(d) = &self.design {
            d.validate()?;
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if let Some(s) = &self.sim {
            if s.replicates == 0 {
                return Err(ConfigError::new("sim.replicates", "must be >= 1"));
            }
            if s.n < 4 {
                return Err(ConfigError::new("sim.n", "must be >= 4"));
            }
        }
        Ok(())
    }

    pub fn design(&self) -> Checked<&DesignBlock> {
        self.design
            .as_ref()
            .ok_or_else(|| ConfigError::new("design", "this command needs a design block"))
    }
}

fn positive(path: &str, v: f64) -> Checked<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(
            path,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

impl ScenarioBlock {
    fn validate(&self) -> Checked<()> {
        if self.endpoints.is_empty() {
            return Err(ConfigError::new(
                "scenario.endpoints",
                "at least one endpoint is required",
            ));
        }
        for (i, e) in self.endpoints.iter().enumerate() {
            let path = format!("scenario.endpoints[{i}]");
            match (&e.hazard_ratio, &e.treatment) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(ConfigError::new(
                        path,
                        "give exactly one of hazard_ratio and treatment",
                    ))
                }
                (Some(hr), None) => positive(&format!("{path}.hazard_ratio"), *hr)?,
                (None, Some(_)) => {}
            }
        }
        self.dependence.validate(self.endpoints.len())?;
        positive(
            "scenario.censoring.study_length",
            self.censoring.study_length,
        )?;
        let c = &self.censoring;
        if !(c.accrual_length >= 0.0 && c.accrual_length <= c.study_length) {
            return Err(ConfigError::new(
                "scenario.censoring.accrual_length",
                format!("must lie in [0, study_length], got {}", c.accrual_length),
            ));
        }
        positive("scenario.censoring.accrual_shape[0]", c.accrual_shape[0])?;
        positive("scenario.censoring.accrual_shape[1]", c.accrual_shape[1])?;
        if !(c.dropout_rate >= 0.0 && c.dropout_rate.is_finite()) {
            return Err(ConfigError::new(
                "scenario.censoring.dropout_rate",
                format!("must be >= 0, got {}", c.dropout_rate),
            ));
        }
        // build once so model-level problems surface with their field path
        self.build(&Overrides::default())?;
        Ok(())
    }

    /// Core scenario with optional overrides applied.
    pub fn build(&self, o: &Overrides) -> Checked<Scenario<f64>> {
        let copula = match o.tau {
            Some(tau) => self
                .dependence
                .with_tau(tau)
                .copula(self.endpoints.len(), o.tau_path)?,
            None => self
                .dependence
                .copula(self.endpoints.len(), "scenario.dependence")?,
        };
        let mut control = Vec::with_capacity(self.endpoints.len());
        let mut treatment = Vec::with_capacity(self.endpoints.len());
        for (i, e) in self.endpoints.iter().enumerate() {
            let path = format!("scenario.endpoints[{i}]");
            let c = e.control.build(&format!("{path}.control"))?;
            let t = match (&e.treatment, e.hazard_ratio) {
                (Some(t), _) => t.build(&format!("{path}.treatment"))?,
                (None, Some(hr)) => c
                    .with_hazard_ratio(hr)
                    .map_err(|err| ConfigError::new(format!("{path}.hazard_ratio"), err))?,
                (None, None) => unreachable!("validated"),
            };
            control.push(c);
            treatment.push(t);
        }
        let cs = &self.censoring;
        let study_length = o.study_length.unwrap_or(cs.study_length);
        let accrual = o.accrual_length.unwrap_or(cs.accrual_length);
        let dropout_rate = o.dropout_rate.unwrap_or(cs.dropout_rate);
        let dropout = if dropout_rate > 0.0 {
            Some(
                Marginal::exponential(dropout_rate)
                    .map_err(|e| ConfigError::new(o.censoring_path, e))?,
            )
        } else {
            None
        };
        let censoring = Censoring::new(
            study_length,
            accrual,
            (cs.accrual_shape[0], cs.accrual_shape[1]),
            dropout,
        )
        .map_err(|e| ConfigError::new(o.censoring_path, e))?;
        let arm = |m| ArmModel::new(m, copula.clone()).map_err(|e| ConfigError::new("scenario", e));
        Scenario::new(arm(control)?, arm(treatment)?, censoring)
            .map(|s| s.with_semi_competing(self.semi_competing))
            .map_err(|e| ConfigError::new("scenario", e))
    }
}

/// Per-call changes to the scenario (sweep cells and strata).
#[derive(Debug, Clone, Copy)]
pub struct Overrides {
    pub tau: Option<f64>,
    pub study_length: Option<f64>,
    pub accrual_length: Option<f64>,
    pub dropout_rate: Option<f64>,
    pub tau_path: &'static str,
    pub censoring_path: &'static str,
}

impl Default for Overrides {
    fn default() -> Self {
        Self {
            tau: None,
            study_length: None,
            accrual_length: None,
            dropout_rate: None,
            tau_path: "scenario.dependence.tau",
            censoring_path: "scenario.censoring",
        }
    }
}

impl MarginalSpec {
    fn build(&self, path: &str) -> Checked<Marginal<f64>> {
        let r = match self {
            MarginalSpec::Exponential { rate } => Marginal::exponential(*rate),
            MarginalSpec::Piecewise { breakpoints, rates } => {
                Marginal::piecewise(breakpoints.clone(), rates.clone())
            }
            MarginalSpec::Tabulated { times, survival } => {
                Marginal::tabulated(times.clone(), survival.clone())
            }
        };
        r.map_err(|e| ConfigError::new(path, e))
    }
}

impl DependenceSpec {
    fn validate(&self, k: usize) -> Checked<()> {
        let given = [
            self.tau.is_some(),
            self.kappa.is_some(),
            self.sigma.is_some(),
            self.tau_matrix.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if given != 1 {
            return Err(ConfigError::new(
                "scenario.dependence",
                "give exactly one of tau, kappa, sigma and tau_matrix",
            ));
        }
        self.copula(k, "scenario.dependence").map(|_| ())
    }

    fn with_tau(&self, tau: f64) -> Self {
        Self {
            copula: self.copula,
            tau: Some(tau),
            ..Self::default()
        }
    }

    fn copula(&self, k: usize, tau_path: &str) -> Checked<Copula<f64>> {
        let base = "scenario.dependence";
        match self.copula {
            CopulaKind::Gumbel => {
                if let Some(tau) = self.tau {
                    let path = if tau_path == base {
                        format!("{base}.tau")
                    } else {
                        tau_path.to_string()
                    };
                    Copula::gumbel_from_tau(tau).map_err(|e| ConfigError::new(path, e))
                } else if let Some(kappa) = self.kappa {
                    Copula::gumbel(kappa).map_err(|e| ConfigError::new(format!("{base}.kappa"), e))
                } else {
                    Err(ConfigError::new(
                        base,
                        "the gumbel copula takes tau or kappa; use copula = \"gaussian\" for matrices",
                    ))
                }
            }
            CopulaKind::Gaussian => {
                let g = if let Some(tau) = self.tau {
                    let path = if tau_path == base {
                        format!("{base}.tau")
                    } else {
                        tau_path.to_string()
                    };
                    if !(-1.0..1.0).contains(&tau) || (k > 1 && tau <= -1.0 / (k as f64 - 1.0)) {
                        return Err(ConfigError::new(
                            path,
                            format!("tau {tau} is not a valid exchangeable value"),
                        ));
                    }
                    GaussianCopula::exchangeable(k, tau).map_err(|e| ConfigError::new(path, e))
                } else if let Some(m) = &self.sigma {
                    GaussianCopula::new(m.clone())
                        .map_err(|e| ConfigError::new(format!("{base}.sigma"), e))
                } else if let Some(m) = &self.tau_matrix {
                    GaussianCopula::from_kendall(m.clone())
                        .map_err(|e| ConfigError::new(format!("{base}.tau_matrix"), e))
                } else {
                    return Err(ConfigError::new(
                        format!("{base}.kappa"),
                        "kappa applies to the gumbel copula only",
                    ));
                }?;
                if g.dim() != k {
                    return Err(ConfigError::new(
                        base,
                        format!("matrix is {0}x{0} but there are {k} endpoints", g.dim()),
                    ));
                }
                Ok(Copula::Gaussian(g))
            }
        }
    }
}

impl DesignBlock {
    fn validate(&self) -> Checked<()> {
        if !(self.allocation > 0.0 && self.allocation < 1.0) {
            return Err(ConfigError::new(
                "design.allocation",
                format!("must lie in (0, 1), got {}", self.allocation),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ConfigError::new(
                "design.alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        if let Some(p) = self.power {
            if !(p > self.alpha / 2.0 && p < 1.0) {
                return Err(ConfigError::new(
                    "design.power",
                    format!("must lie in (alpha/2, 1), got {p}"),
                ));
            }
        }
        if let Some(n) = self.sample_size {
            if n < 2 {
                return Err(ConfigError::new(
                    "design.sample_size",
                    format!("must be >= 2, got {n}"),
                ));
            }
        }
        for (i, s) in self.strata.iter().enumerate() {
            if !(s.weight >= 0.0 && s.weight.is_finite()) {
                return Err(ConfigError::new(
                    format!("design.strata[{i}].weight"),
                    "must be >= 0",
                ));
            }
            if !(s.size >= 1.0 && s.size.is_finite()) {
                return Err(ConfigError::new(
                    format!("design.strata[{i}].size"),
                    "must be >= 1",
                ));
            }
        }
        if !self.strata.is_empty() && self.strata.iter().all(|s| s.weight == 0.0) {
            return Err(ConfigError::new(
                "design.strata",
                "at least one weight must be positive",
            ));
        }
        Ok(())
    }

    pub fn spec(&self, target: Target<f64>) -> DesignSpec<f64> {
        DesignSpec {
            allocation: self.allocation,
            alpha: self.alpha,
            target,
            rounding: match self.rounding {
                RoundingSpec::WholeArms => Rounding::WholeArms,
                RoundingSpec::Ceil => Rounding::Ceil,
            },
        }
    }

    pub fn power_target(&self) -> Checked<f64> {
        self.power
            .ok_or_else(|| ConfigError::new("design.power", "this command needs a target power"))
    }

    pub fn sample_size(&self) -> Checked<u64> {
        self.sample_size.ok_or_else(|| {
            ConfigError::new(
                "design.sample_size",
                "this command needs a total sample size",
            )
        })
    }
}

impl SweepBlock {
    fn validate(&self) -> Checked<()> {
        if self.tau.is_empty() {
            return Err(ConfigError::new(
                "sweep.tau",
                "at least one value is required",
            ));
        }
        if self.tau.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::new(
                "sweep.tau",
                "values must be strictly ascending",
            ));
        }
        for (i, &s) in self.study_length.iter().enumerate() {
            positive(&format!("sweep.study_length[{i}]"), s)?;
        }
        for (i, &p) in self.power.iter().enumerate() {
            if !(p > 0.0 && p < 1.0) {
                return Err(ConfigError::new(
                    format!("sweep.power[{i}]"),
                    format!("must lie in (0, 1), got {p}"),
                ));
            }
        }
        Ok(())
    }
}

impl SimBlock {
    pub fn config(&self, semi_competing: bool, design: Option<&DesignBlock>) -> SimConfig<f64> {
        SimConfig {
            replicates: self.replicates,
            n_per_trial: self.n,
            master_seed: self.seed,
            semi_competing,
            alpha: design.map_or(0.05, |d| d.alpha),
            allocation: design.map_or(0.5, |d| d.allocation),
        }
    }
}
