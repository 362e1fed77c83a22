//! Subcommand implementations. Each returns a table ready to render.

use winsize_core::design::{
    correlation_grid, log_wr_variance_factor, power_at_n, required_sample_size, stratified_combine,
    stratified_power, stratified_sample_size, GridValue, Stratum,
};
use winsize_core::sim::empirical_summary;
use winsize_core::{compute_table, Error, Scenario, Target, WinLossTie, WinProbOptions};

use crate::config::{ConfigError, DesignBlock, Overrides, RunConfig};
use crate::output::{fixed, opt_fixed, Table};

/// Failure of a command, mapped to a process exit code by the caller.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Core(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<Table, Failure>;

fn options() -> WinProbOptions<f64> {
    WinProbOptions::default()
}

fn tolerance_note(opts: &WinProbOptions<f64>) -> String {
    format!(
        "quadrature rel_tol={:e} abs_tol={:e}; inner rel_tol={:e} abs_tol={:e}",
        opts.quad.rel_tol, opts.quad.abs_tol, opts.inner_quad.rel_tol, opts.inner_quad.abs_tol
    )
}

const STRATA_NOTE: &str =
    "stratified variance = core variance * sum(w^2 N^3) / (sum w N^2)^2; strata weighted by w N^2";

fn table_for(cfg: &RunConfig, o: &Overrides) -> Result<(Scenario<f64>, WinLossTie<f64>), Failure> {
    let scn = cfg.scenario.build(o)?;
    let table = compute_table(&scn, &options())?;
    Ok((scn, table))
}

fn endpoint_label(cfg: &RunConfig, k: usize) -> String {
    cfg.scenario.endpoints[k]
        .name
        .clone()
        .unwrap_or_else(|| format!("endpoint {}", k + 1))
}

/// Strata as configured, each with its own win/loss/tie table.
fn strata(cfg: &RunConfig, design: &DesignBlock) -> Result<Vec<(String, Stratum<f64>)>, Failure> {
    design
        .strata
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let o = Overrides {
                tau: s.tau,
                study_length: s.study_length,
                accrual_length: s.accrual_length,
                dropout_rate: s.dropout_rate,
                tau_path: "design.strata.tau",
                censoring_path: "design.strata",
            };
            let (_, table) = table_for(cfg, &o).map_err(|f| match f {
                Failure::Config(e) => {
                    Failure::Config(ConfigError::new(format!("design.strata[{i}]"), e.message))
                }
                other => other,
            })?;
            let name = s
                .name
                .clone()
                .unwrap_or_else(|| format!("stratum {}", i + 1));
            Ok((
                name,
                Stratum {
                    weight: s.weight,
                    size: s.size,
                    table,
                },
            ))
        })
        .collect()
}

pub fn winprob(cfg: &RunConfig) -> Outcome {
    let opts = options();
    let (_, t) = table_for(cfg, &Overrides::default())?;
    let mut out = Table::new(&[
        "scope",
        "win",
        "loss",
        "win_ratio",
        "tie",
        "net_benefit",
        "win_odds",
    ]);
    out.meta(tolerance_note(&opts));
    for k in 0..t.win.len() {
        out.push(vec![
            endpoint_label(cfg, k),
            fixed(t.win[k]),
            fixed(t.loss[k]),
            fixed(t.endpoint_win_ratio(k)),
            String::new(),
            fixed(t.win[k] - t.loss[k]),
            String::new(),
        ]);
    }
    out.push(vec![
        "overall".into(),
        fixed(t.total_win()),
        fixed(t.total_loss()),
        fixed(t.win_ratio()),
        fixed(t.tie),
        fixed(t.net_benefit()),
        fixed(t.win_odds()),
    ]);
    Ok(out)
}

pub fn power(cfg: &RunConfig) -> Outcome {
    let design = cfg.design()?;
    let mut out = Table::new(&[
        "scope",
        "win_ratio",
        "tie",
        "variance_factor",
        "n",
        "alpha",
        "allocation",
        "power",
    ]);
    if design.strata.is_empty() {
        let n = design.sample_size()?;
        let spec = design.spec(Target::SampleSize(n));
        let (_, t) = table_for(cfg, &Overrides::default())?;
        let p = power_at_n(t.win_ratio(), t.tie, n, &spec)?;
        out.push(vec![
            "overall".into(),
            fixed(t.win_ratio()),
            fixed(t.tie),
            fixed(log_wr_variance_factor(t.tie, design.allocation)?),
            n.to_string(),
            fixed(design.alpha),
            fixed(design.allocation),
            fixed(p),
        ]);
        return Ok(out);
    }
    out.meta(STRATA_NOTE);
    out.meta("stratum sizes are participant counts");
    let strata = strata(cfg, design)?;
    let plain: Vec<Stratum<f64>> = strata.iter().map(|(_, s)| s.clone()).collect();
    let spec = design.spec(Target::SampleSize(0));
    let (wr, tie) = stratified_combine(&plain)?;
    let p = stratified_power(&plain, &spec)?;
    let total: f64 = plain.iter().map(|s| s.size).sum();
    for (name, s) in &strata {
        out.push(vec![
            name.clone(),
            fixed(s.table.win_ratio()),
            fixed(s.table.tie),
            String::new(),
            format!("{}", s.size.round()),
            String::new(),
            String::new(),
            String::new(),
        ]);
    }
    out.push(vec![
        "overall".into(),
        fixed(wr),
        fixed(tie),
        fixed(log_wr_variance_factor(tie, design.allocation)?),
        format!("{}", total.round()),
        fixed(design.alpha),
        fixed(design.allocation),
        fixed(p),
    ]);
    Ok(out)
}

pub fn samplesize(cfg: &RunConfig) -> Outcome {
    let design = cfg.design()?;
    let target = design.power_target()?;
    let spec = design.spec(Target::Power(target));
    let mut out = Table::new(&[
        "scope",
        "win_ratio",
        "tie",
        "variance_factor",
        "target_power",
        "raw_n",
        "n",
        "n_treatment",
        "n_control",
    ]);
    if design.strata.is_empty() {
        let (_, t) = table_for(cfg, &Overrides::default())?;
        let n = required_sample_size(t.win_ratio(), t.tie, &spec)?;
        out.push(vec![
            "overall".into(),
            fixed(t.win_ratio()),
            fixed(t.tie),
            fixed(log_wr_variance_factor(t.tie, design.allocation)?),
            fixed(target),
            format!("{:.2}", n.raw),
            n.total.to_string(),
            n.treatment.to_string(),
            n.control.to_string(),
        ]);
        return Ok(out);
    }
    out.meta(STRATA_NOTE);
    out.meta("stratum sizes are relative proportions");
    let strata = strata(cfg, design)?;
    let plain: Vec<Stratum<f64>> = strata.iter().map(|(_, s)| s.clone()).collect();
    let r = stratified_sample_size(&plain, &spec)?;
    for ((name, s), n) in strata.iter().zip(&r.per_stratum) {
        out.push(vec![
            name.clone(),
            fixed(s.table.win_ratio()),
            fixed(s.table.tie),
            String::new(),
            String::new(),
            String::new(),
            n.to_string(),
            String::new(),
            String::new(),
        ]);
    }
    out.push(vec![
        "overall".into(),
        fixed(r.win_ratio),
        fixed(r.tie),
        fixed(log_wr_variance_factor(r.tie, design.allocation)?),
        fixed(target),
        format!("{:.2}", r.total.raw),
        r.total.total.to_string(),
        r.total.treatment.to_string(),
        r.total.control.to_string(),
    ]);
    Ok(out)
}

pub fn grid(cfg: &RunConfig) -> Outcome {
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| ConfigError::new("sweep", "the grid command needs a sweep block"))?;
    let design = cfg.design()?;
    if !design.strata.is_empty() {
        return Err(
            ConfigError::new("design.strata", "the grid sweeps an unstratified scenario").into(),
        );
    }
    let study_lengths = if sweep.study_length.is_empty() {
        vec![cfg.scenario.censoring.study_length]
    } else {
        sweep.study_length.clone()
    };
    let targets: Vec<_> = if !sweep.power.is_empty() {
        sweep
            .power
            .iter()
            .map(|&p| design.spec(Target::Power(p)))
            .collect()
    } else if let Some(p) = design.power {
        vec![design.spec(Target::Power(p))]
    } else {
        vec![design.spec(Target::SampleSize(design.sample_size()?))]
    };
    // surface model problems with their field path before the parallel sweep
    for (i, &s) in study_lengths.iter().enumerate() {
        for (j, &tau) in sweep.tau.iter().enumerate() {
            let o = cell(tau, s);
            cfg.scenario.build(&o).map_err(|e| {
                let path = if e.path == o.tau_path {
                    format!("sweep.tau[{j}]")
                } else if e.path == o.censoring_path {
                    format!("sweep.study_length[{i}]")
                } else {
                    e.path.clone()
                };
                ConfigError::new(path, e.message)
            })?;
        }
    }
    let opts = options();
    let rows = correlation_grid(
        &sweep.tau,
        &study_lengths,
        &targets,
        |tau, s| {
            cfg.scenario
                .build(&cell(tau, s))
                .map_err(|e| Error::InvalidModel(e.to_string()))
        },
        &opts,
    )?;
    let mut out = Table::new(&[
        "study_length",
        "target",
        "tau",
        "win_ratio",
        "tie",
        "value",
        "rcr",
    ]);
    out.meta(tolerance_note(&opts));
    out.meta(STRATA_NOTE);
    out.meta(
        "target is a power (value = total N) or a total N (value = power); rcr is per 0.1 of tau",
    );
    for r in rows {
        let (target, value) = match r.value {
            GridValue::SampleSize { target_power, n } => (fixed(target_power), n.to_string()),
            GridValue::Power { n, power } => (n.to_string(), fixed(power)),
        };
        out.push(vec![
            format!("{}", r.study_length),
            target,
            fixed(r.tau),
            fixed(r.table.win_ratio()),
            fixed(r.table.tie),
            value,
            opt_fixed(r.rcr),
        ]);
    }
    Ok(out)
}

fn cell(tau: f64, s: f64) -> Overrides {
    Overrides {
        tau: Some(tau),
        study_length: Some(s),
        tau_path: "sweep.tau",
        censoring_path: "sweep.study_length",
        ..Overrides::default()
    }
}

pub fn simulate(cfg: &RunConfig, seed: Option<u64>) -> Outcome {
    let block = cfg
        .sim
        .as_ref()
        .ok_or_else(|| ConfigError::new("sim", "the simulate command needs a sim block"))?;
    let mut sim = block.config(cfg.scenario.semi_competing, cfg.design.as_ref());
    if let Some(seed) = seed {
        sim.master_seed = seed;
    }
    let (scn, t) = table_for(cfg, &Overrides::default())?;
    let summary = empirical_summary(&scn, &sim)?;
    let spec = cfg.design.as_ref().map_or_else(
        || winsize_core::DesignSpec::for_sample_size(sim.n_per_trial as u64),
        |d| d.spec(Target::SampleSize(sim.n_per_trial as u64)),
    );
    let formula_power = power_at_n(t.win_ratio(), t.tie, sim.n_per_trial as u64, &spec).ok();

    let mut out = Table::new(&["quantity", "simulated", "se", "formula"]);
    out.meta(format!(
        "replicates={} n={} seed={} excluded={} semi_competing={}",
        summary.replicates,
        sim.n_per_trial,
        summary.master_seed,
        summary.excluded,
        sim.semi_competing
    ));
    out.meta(format!(
        "test: two-sided normal test of ln WR at alpha={} with plug-in variance 4(1+p_tie)/(3 rho (1-rho)(1-p_tie)) / n",
        sim.alpha
    ));
    out.meta("win_ratio pools win and loss proportions across replicates; win_ratio_mean averages replicate ratios");
    let row = |name: String, e: &winsize_core::sim::Estimate<f64>, formula: Option<f64>| {
        vec![name, fixed(e.mean), fixed(e.se), opt_fixed(formula)]
    };
    out.push(row(
        "win_ratio".into(),
        &summary.pooled_win_ratio,
        Some(t.win_ratio()),
    ));
    out.push(row(
        "win_ratio_mean".into(),
        &summary.win_ratio,
        Some(t.win_ratio()),
    ));
    out.push(row("tie".into(), &summary.tie, Some(t.tie)));
    for k in 0..t.win.len() {
        let label = endpoint_label(cfg, k);
        out.push(row(format!("win {label}"), &summary.win[k], Some(t.win[k])));
        out.push(row(
            format!("loss {label}"),
            &summary.loss[k],
            Some(t.loss[k]),
        ));
    }
    out.push(row("power".into(), &summary.power, formula_power));
    Ok(out)
}
