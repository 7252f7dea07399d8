//! Monte Carlo experiments: replicate, estimate, map to counterfactuals and
//! summarize; plus direct simulation checks of the partial-equilibrium and
//! local-interaction identification results.
//!
//! The unit characteristics and the network `W*` are drawn once from the
//! master seed and held fixed; each replication redraws shocks and treatment
//! from `rep_seed(seed, r)`. Replications run on the ambient rayon pool and
//! are collected in replication order, so results do not depend on the
//! number of workers.

use std::fmt::Write as _;

use nalgebra::DVector;
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counterfact::{li_outcomes, report};
use crate::csvfmt::fmt_f64;
use crate::dgp::{draw_shocks, solve_equilibrium, AssignmentSpec, Population, StructuralParams};
use crate::error::{Error, Result};
use crate::linalg::LogDetMethod;
use crate::netgen::{build_weights, InteractionMatrix, NetworkParams, UnitCharacteristics};
use crate::rng::{rep_seed, stream_rng, PAIR_STREAM};
use crate::sarfit::{fit_ols, fit_sar_ml_with, implied_effects};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    SarMl,
    Ols,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::SarMl => "sar_ml",
            Estimator::Ols => "ols",
        }
    }
}

/// One Monte Carlo design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_units: usize,
    pub n_reps: usize,
    pub seed: u64,
    pub coord_dim: usize,
    pub econ_dim: usize,
    pub network: NetworkParams,
    pub params: StructuralParams,
    pub assignment: AssignmentSpec,
    pub estimators: Vec<Estimator>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_units: 200,
            n_reps: 500,
            seed: 42,
            coord_dim: 2,
            econ_dim: 1,
            network: NetworkParams::default(),
            params: StructuralParams::default(),
            assignment: AssignmentSpec::exogenous(0.5),
            estimators: vec![Estimator::SarMl, Estimator::Ols],
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_reps < 1 {
            return Err(Error::Parameter("n_reps must be at least 1".into()));
        }
        if self.n_units < 2 {
            return Err(Error::Parameter("n_units must be at least 2".into()));
        }
        if self.coord_dim < 1 {
            return Err(Error::Parameter("coord_dim must be at least 1".into()));
        }
        if self.params.gamma.len() != self.econ_dim {
            return Err(Error::Parameter(format!(
                "gamma has {} entries but econ_dim is {}",
                self.params.gamma.len(),
                self.econ_dim
            )));
        }
        if self.estimators.is_empty() {
            return Err(Error::Parameter("at least one estimator is required".into()));
        }
        self.network.validate(self.n_units)?;
        self.params.validate()?;
        self.assignment.validate()
    }
}

/// The fixed economy shared by all replications of an experiment.
#[derive(Debug, Clone)]
pub struct Design {
    pub chars: UnitCharacteristics,
    pub w: InteractionMatrix,
}

impl Design {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let chars = UnitCharacteristics::sample(cfg.n_units, cfg.coord_dim, cfg.econ_dim, cfg.seed)?;
        let w = build_weights(&chars, &cfg.network)?;
        Ok(Self { chars, w })
    }
}

/// Estimates from one replication and one estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepDraw {
    pub rep: usize,
    pub estimator: Estimator,
    pub beta_hat: f64,
    pub rho_hat: f64,
    pub nc_hat_mean: f64,
    /// Non-converged, boundary or failed fits; excluded from summaries.
    pub flagged: bool,
}

/// One estimand across replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimand: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    /// Sample SD (`n - 1` divisor; 0 for a single draw).
    pub sd: f64,
    pub rmse: f64,
    pub n_effective: usize,
}

impl SummaryRow {
    /// `rmse^2 - (bias^2 + sd^2 (n-1)/n)`; zero up to rounding.
    pub fn identity_residual(&self) -> f64 {
        let n = self.n_effective as f64;
        self.rmse.powi(2) - (self.bias.powi(2) + self.sd.powi(2) * (n - 1.0) / n)
    }
}

/// Mean, bias, SD and RMSE of `draws` around `truth`.
pub fn summarize(draws: &[f64], truth: f64) -> Result<SummaryRow> {
    if draws.is_empty() {
        return Err(Error::Input("cannot summarize an empty set of draws".into()));
    }
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let ss = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let sd = if draws.len() > 1 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
    let rmse = (draws.iter().map(|v| (v - truth).powi(2)).sum::<f64>() / n).sqrt();
    Ok(SummaryRow { estimand: String::new(), truth, mean, bias: mean - truth, sd, rmse, n_effective: draws.len() })
}

/// Bias of the implied equilibrium effect relative to the bias of the direct
/// effect estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasAmplification {
    /// Signed ratio; absent when the direct-effect bias is zero.
    pub ratio: Option<f64>,
    pub bias_nc: f64,
    pub bias_beta: f64,
}

pub fn bias_amplification_ratio(bias_nc: f64, bias_beta: f64) -> BiasAmplification {
    BiasAmplification { ratio: (bias_beta != 0.0).then(|| bias_nc / bias_beta), bias_nc, bias_beta }
}

/// Summary of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub rows: Vec<SummaryRow>,
    /// Non-flagged replications of the first estimator.
    pub n_effective: usize,
    pub n_flagged: usize,
    /// Ratio for the first estimator that yields an equilibrium mapping.
    pub bias_amp: Option<BiasAmplification>,
    pub truth_pe: f64,
    pub truth_nc_mean: f64,
}

impl MonteCarloSummary {
    pub fn row(&self, estimand: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.estimand == estimand)
    }

    /// `estimand,truth,mean,bias,sd,rmse,n_effective` rows, optionally with
    /// the estimand prefixed by `label/`.
    pub fn csv_rows(&self, label: Option<&str>) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let name = match label {
                Some(l) => format!("{l}/{}", r.estimand),
                None => r.estimand.clone(),
            };
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{},{}",
                fmt_f64(r.truth),
                fmt_f64(r.mean),
                fmt_f64(r.bias),
                fmt_f64(r.sd),
                fmt_f64(r.rmse),
                r.n_effective
            );
        }
        out
    }
}

pub const SUMMARY_HEADER: &str = "estimand,truth,mean,bias,sd,rmse,n_effective";
pub const DRAWS_HEADER: &str = "rep,estimator,beta_hat,rho_hat,nc_hat_mean,flagged";

/// `rep,estimator,beta_hat,rho_hat,nc_hat_mean,flagged` rows.
pub fn draws_csv_rows(draws: &[RepDraw], label: Option<&str>) -> String {
    let mut out = String::new();
    for d in draws {
        let est = match label {
            Some(l) => format!("{l}/{}", d.estimator.name()),
            None => d.estimator.name().to_string(),
        };
        let _ = writeln!(
            out,
            "{},{est},{},{},{},{}",
            d.rep,
            fmt_f64(d.beta_hat),
            fmt_f64(d.rho_hat),
            fmt_f64(d.nc_hat_mean),
            d.flagged as u8
        );
    }
    out
}

/// Summary plus per-replication draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub summary: MonteCarloSummary,
    pub draws: Vec<RepDraw>,
    pub design: DesignInfo,
}

/// Descriptive facts about the fixed network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignInfo {
    pub n_units: usize,
    pub spectral_radius: f64,
    pub zero_rows: usize,
}

fn failed(rep: usize, estimator: Estimator) -> RepDraw {
    RepDraw { rep, estimator, beta_hat: f64::NAN, rho_hat: f64::NAN, nc_hat_mean: f64::NAN, flagged: true }
}

fn run_rep(
    cfg: &ExperimentConfig,
    design: &Design,
    log_det: &LogDetMethod,
    rep: usize,
) -> Result<Vec<RepDraw>> {
    let seed = rep_seed(cfg.seed, rep as u64);
    let pop = Population::simulate(&design.chars, &design.w, &cfg.params, &cfg.assignment, seed)?;
    let y = pop.y_vec();
    let d = pop.d_vec();
    let x = &design.chars.econ;
    Ok(cfg
        .estimators
        .iter()
        .map(|&estimator| {
            let fit = match estimator {
                Estimator::SarMl => fit_sar_ml_with(&y, &d, x, &design.w, log_det),
                Estimator::Ols => fit_ols(&y, &d, x),
            };
            let Ok(est) = fit else { return failed(rep, estimator) };
            match implied_effects(&est, &design.w) {
                Ok(eff) => RepDraw {
                    rep,
                    estimator,
                    beta_hat: est.beta_hat,
                    rho_hat: est.rho_hat,
                    nc_hat_mean: eff.nc_hat_mean,
                    flagged: false,
                },
                Err(_) => RepDraw { beta_hat: est.beta_hat, rho_hat: est.rho_hat, ..failed(rep, estimator) },
            }
        })
        .collect())
}

/// Runs all replications of `cfg` on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let design = Design::build(cfg)?;
    cfg.params.check_stable(&design.w)?;
    let truth = report(&design.w, &cfg.params)?;
    let log_det = LogDetMethod::spectrum(&design.w)?;

    let per_rep: Vec<Result<Vec<RepDraw>>> =
        (0..cfg.n_reps).into_par_iter().map(|r| run_rep(cfg, &design, &log_det, r)).collect();
    let mut draws = Vec::with_capacity(cfg.n_reps * cfg.estimators.len());
    for r in per_rep {
        draws.extend(r?);
    }

    let mut rows = Vec::new();
    let mut bias_amp = None;
    let mut n_effective = None;
    for &estimator in &cfg.estimators {
        let ok: Vec<&RepDraw> = draws.iter().filter(|d| d.estimator == estimator && !d.flagged).collect();
        n_effective.get_or_insert(ok.len());
        if ok.is_empty() {
            continue;
        }
        let col = |f: fn(&RepDraw) -> f64| ok.iter().map(|d| f(d)).collect::<Vec<f64>>();
        let mut push = |name: &str, values: Vec<f64>, truth: f64| -> Result<SummaryRow> {
            let mut row = summarize(&values, truth)?;
            row.estimand = format!("{}/{name}", estimator.name());
            rows.push(row.clone());
            Ok(row)
        };
        let beta = push("beta_hat", col(|d| d.beta_hat), cfg.params.beta)?;
        if estimator == Estimator::SarMl {
            push("rho_hat", col(|d| d.rho_hat), cfg.params.rho)?;
        }
        let nc = push("nc_hat_mean", col(|d| d.nc_hat_mean), truth.nc_mean)?;
        if bias_amp.is_none() && estimator == Estimator::SarMl {
            bias_amp = Some(bias_amplification_ratio(nc.bias, beta.bias));
        }
    }
    let n_effective = n_effective.unwrap_or(0);
    if rows.is_empty() {
        return Err(Error::Experiment(format!("all {} replications were flagged", cfg.n_reps)));
    }
    Ok(ExperimentOutput {
        summary: MonteCarloSummary {
            rows,
            n_effective,
            n_flagged: cfg.n_reps - n_effective,
            bias_amp,
            truth_pe: truth.pe,
            truth_nc_mean: truth.nc_mean,
        },
        draws,
        design: DesignInfo {
            n_units: design.w.n_units(),
            spectral_radius: design.w.spectral_radius(),
            zero_rows: design.w.zero_rows(),
        },
    })
}

/// Outcome of one simulated contrast in an identification check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastResult {
    /// Treated unit.
    pub from: Option<usize>,
    /// Unit whose outcome is compared.
    pub to: Option<usize>,
    pub target: f64,
    pub estimate: f64,
    pub se: f64,
    pub passed: bool,
}

/// Report of an identification check at the `3 * SE` level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub regime: String,
    pub assignment: AssignmentSpec,
    pub n_reps: usize,
    pub passed: bool,
    pub contrasts: Vec<ContrastResult>,
}

pub const CHECK_Z: f64 = 3.0;

fn contrast(from: Option<usize>, to: Option<usize>, target: f64, estimate: f64, se: f64) -> ContrastResult {
    let passed = (estimate - target).abs() < CHECK_Z * se || (se == 0.0 && estimate == target);
    ContrastResult { from, to, target, estimate, se, passed }
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

/// Partial-equilibrium regime simulated directly: each replication fixes
/// `m = W Y0` at the untreated equilibrium, sets
/// `Y_i = rho m_i + beta D_i + X_i gamma + eps_i`, and takes the
/// treated-minus-control difference in means. The mean of those
/// differences is tested against `beta`.
pub fn prop1_check(cfg: &ExperimentConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let design = Design::build(cfg)?;
    cfg.params.check_stable(&design.w)?;
    let n = cfg.n_units;
    let x = &design.chars.econ;
    let diffs: Vec<Option<f64>> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|r| -> Result<Option<f64>> {
            let seed = rep_seed(cfg.seed, r as u64);
            let eps = draw_shocks(n, cfg.params.sigma, seed)?;
            let d = cfg.assignment.assign(&eps, seed)?;
            let y0 = solve_equilibrium(&design.w, &cfg.params, &vec![0.0; n], x, &eps)?;
            let m = design.w.matrix() * y0;
            let base = crate::dgp::linear_index(&cfg.params, &d, x, &eps)?;
            let y = base + m * cfg.params.rho;
            let (mut s1, mut n1, mut s0, mut n0) = (0.0, 0usize, 0.0, 0usize);
            for i in 0..n {
                if d[i] == 1.0 {
                    s1 += y[i];
                    n1 += 1;
                } else {
                    s0 += y[i];
                    n0 += 1;
                }
            }
            Ok((n1 > 0 && n0 > 0).then(|| s1 / n1 as f64 - s0 / n0 as f64))
        })
        .collect::<Result<_>>()?;
    let diffs: Vec<f64> = diffs.into_iter().flatten().collect();
    if diffs.is_empty() {
        return Err(Error::Experiment("no replication had both treated and control units".into()));
    }
    let (est, sd) = mean_sd(&diffs);
    let c = contrast(None, None, cfg.params.beta, est, sd / (diffs.len() as f64).sqrt());
    Ok(CheckReport {
        name: "prop1".into(),
        regime: "partial_equilibrium".into(),
        assignment: cfg.assignment,
        n_reps: diffs.len(),
        passed: c.passed,
        contrasts: vec![c],
    })
}

/// Unit pairs `(from, to)` for the spillover check: up to `n_connected`
/// linked pairs (`W[to, from] > 0`) and `n_unlinked` unlinked ones, drawn
/// from the pair stream of `seed`.
pub fn sample_pairs(w: &InteractionMatrix, n_connected: usize, n_unlinked: usize, seed: u64) -> Vec<(usize, usize)> {
    let n = w.n_units();
    let m = w.matrix();
    let mut linked = Vec::new();
    let mut unlinked = Vec::new();
    for to in 0..n {
        for from in (0..n).filter(|&f| f != to) {
            if m[(to, from)] > 0.0 {
                linked.push((from, to));
            } else {
                unlinked.push((from, to));
            }
        }
    }
    let mut rng = stream_rng(seed, PAIR_STREAM);
    let mut pick = |pool: &[(usize, usize)], k: usize| -> Vec<(usize, usize)> {
        let k = k.min(pool.len());
        let mut idx = sample(&mut rng, pool.len(), k).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| pool[i]).collect()
    };
    let mut out = pick(&linked, n_connected);
    out.extend(pick(&unlinked, n_unlinked));
    out
}

/// Local-interaction regime: outcomes from `(I + rho W)(beta D + X gamma + eps)`;
/// for each sampled pair the difference in mean `Y_to` between replications
/// with `D_from = 1` and `D_from = 0` is tested against `beta rho W[to, from]`.
pub fn prop2_check(cfg: &ExperimentConfig, pairs: &[(usize, usize)]) -> Result<CheckReport> {
    cfg.validate()?;
    let design = Design::build(cfg)?;
    let n = cfg.n_units;
    if pairs.iter().any(|&(f, t)| f >= n || t >= n || f == t) {
        return Err(Error::Parameter("spillover pairs must be distinct in-range units".into()));
    }
    let x = &design.chars.econ;
    let outcomes: Vec<(Vec<f64>, DVector<f64>)> = (0..cfg.n_reps)
        .into_par_iter()
        .map(|r| -> Result<(Vec<f64>, DVector<f64>)> {
            let seed = rep_seed(cfg.seed, r as u64);
            let eps = draw_shocks(n, cfg.params.sigma, seed)?;
            let d = cfg.assignment.assign(&eps, seed)?;
            let y = li_outcomes(&design.w, &cfg.params, &d, x, &eps)?;
            Ok((d, y))
        })
        .collect::<Result<_>>()?;

    let contrasts: Vec<ContrastResult> = pairs
        .iter()
        .map(|&(from, to)| {
            let target = cfg.params.beta * cfg.params.rho * design.w.matrix()[(to, from)];
            let (mut y1, mut y0) = (Vec::new(), Vec::new());
            for (d, y) in &outcomes {
                if d[from] == 1.0 {
                    y1.push(y[to]);
                } else {
                    y0.push(y[to]);
                }
            }
            if y1.len() < 2 || y0.len() < 2 {
                return ContrastResult { from: Some(from), to: Some(to), target, estimate: f64::NAN, se: f64::NAN, passed: false };
            }
            let (m1, s1) = mean_sd(&y1);
            let (m0, s0) = mean_sd(&y0);
            let se = (s1 * s1 / y1.len() as f64 + s0 * s0 / y0.len() as f64).sqrt();
            contrast(Some(from), Some(to), target, m1 - m0, se)
        })
        .collect();
    Ok(CheckReport {
        name: "prop2".into(),
        regime: "local_interaction".into(),
        assignment: cfg.assignment,
        n_reps: cfg.n_reps,
        passed: !contrasts.is_empty() && contrasts.iter().all(|c| c.passed),
        contrasts,
    })
}
