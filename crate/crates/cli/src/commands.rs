use std::fmt::Write as _;

use interdep::counterfact::report;
use interdep::csvfmt::{finite_range, fmt_f64, histogram};
use interdep::mcharness::{
    draws_csv_rows, prop1_check, prop2_check, run_experiment, sample_pairs, CheckReport, Design, DesignInfo,
    Estimator, ExperimentOutput, DRAWS_HEADER, SUMMARY_HEADER,
};
use interdep::netgen::{build_weights, stability_margin, UnitCharacteristics};
use interdep::regimes::regime_table;
use interdep::rng::rep_seed;
use interdep::sarfit::{fit_ols, fit_sar_ml, implied_effects};
use interdep::{AssignmentMode, AssignmentSpec, EstimationResult, Population, Result, StructuralParams};
use serde::Serialize;

use crate::config::RunConfig;
use crate::output::Artifact;

/// Amplification the reference network is reported to produce.
const REFERENCE_AMPLIFICATION: f64 = 1.037;
/// Reference bias-amplification ratio under confounding.
const REFERENCE_BIAS_AMPLIFICATION: f64 = -3.9;
/// Reference mean `rho_hat` under exogenous assignment (truth 0.4).
const REFERENCE_RHO_HAT_MEAN: f64 = 0.703;

fn hist_csv(header: &str, series: &[(&str, &[f64])], bins: usize, common_range: bool) -> String {
    let mut out = String::from(header);
    out.push('\n');
    let all: Vec<f64> = series.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let shared = finite_range(&all);
    for (name, values) in series {
        let (lo, hi) = if common_range { shared } else { finite_range(values) }.unwrap_or((0.0, 0.0));
        for (l, r, c) in histogram(values, bins, lo, hi) {
            if name.is_empty() {
                let _ = writeln!(out, "{},{},{c}", fmt_f64(l), fmt_f64(r));
            } else {
                let _ = writeln!(out, "{name},{},{},{c}", fmt_f64(l), fmt_f64(r));
            }
        }
    }
    out
}

#[derive(Serialize)]
struct NetworkMeta {
    n_units: usize,
    seed: u64,
    k: usize,
    decay: f64,
    econ_weight: f64,
    row_normalize: bool,
    n_links: usize,
    zero_rows: usize,
    spectral_radius: f64,
    rho: f64,
    stability_margin: f64,
}

pub fn network(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let design = Design::build(&cfg.experiment(0))?;
    let w = &design.w;
    let meta = NetworkMeta {
        n_units: w.n_units(),
        seed: cfg.seed,
        k: cfg.network.k,
        decay: cfg.network.decay,
        econ_weight: cfg.network.econ_weight,
        row_normalize: cfg.network.row_normalize,
        n_links: w.matrix().iter().filter(|&&v| v != 0.0).count(),
        zero_rows: w.zero_rows(),
        spectral_radius: w.spectral_radius(),
        rho: cfg.params.rho,
        stability_margin: stability_margin(w, cfg.params.rho),
    };
    Ok(vec![
        Artifact::text("w_dense.csv", w.to_dense_csv()),
        Artifact::text("w_sparse.csv", w.to_sparse_csv()),
        Artifact::json("network_meta.json", &meta),
    ])
}

pub fn effects(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let design = Design::build(&cfg.experiment(0))?;
    let r = report(&design.w, &cfg.params)?;
    // Amplification depends on the network alone, so it stays defined at beta = 0.
    let unit = StructuralParams { beta: 1.0, ..cfg.params.clone() };
    let amplification = report(&design.w, &unit)?.nc;
    Ok(vec![
        Artifact::text("effects.csv", r.to_csv()),
        Artifact::json("effects.json", &r.scalars()),
        Artifact::text(
            "fig1_hist.csv",
            hist_csv("bin_left,bin_right,count", &[("", &amplification)], cfg.mc.bins, false),
        ),
    ])
}

#[derive(Serialize)]
struct FitReport {
    estimator: &'static str,
    estimate: EstimationResult,
    pe_hat: Option<f64>,
    nc_hat_mean: Option<f64>,
    implied_error: Option<String>,
    truth: Option<Truth>,
}

#[derive(Serialize)]
struct Truth {
    pe: f64,
    nc_mean: f64,
    assignment_label: String,
    assignment: AssignmentSpec,
}

pub fn fit(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let net = cfg.network.params();
    let (pop, w, truth) = match cfg.population_path() {
        Some(path) => {
            let pop = Population::from_csv(&std::fs::read_to_string(&path)?)?;
            net.validate(pop.n_units())?;
            let w = build_weights(&pop.chars, &net)?;
            (pop, w, None)
        }
        None => {
            let block = cfg.fit_block();
            let chars = UnitCharacteristics::sample(cfg.n_units, cfg.network.coord_dim, cfg.network.econ_dim, cfg.seed)?;
            let w = build_weights(&chars, &net)?;
            let pop = Population::simulate(&chars, &w, &cfg.params, &block.spec, rep_seed(cfg.seed, 0))?;
            let r = report(&w, &cfg.params)?;
            let truth =
                Truth { pe: r.pe, nc_mean: r.nc_mean, assignment_label: block.label.clone(), assignment: block.spec };
            (pop, w, Some(truth))
        }
    };
    let (y, d, x) = (pop.y_vec(), pop.d_vec(), &pop.chars.econ);
    let mut out = vec![Artifact::text("population.csv", pop.to_csv())];
    let mut fits = Vec::new();
    for estimator in [Estimator::SarMl, Estimator::Ols] {
        let est = match estimator {
            Estimator::SarMl => fit_sar_ml(&y, &d, x, &w)?,
            Estimator::Ols => fit_ols(&y, &d, x)?,
        };
        let implied = implied_effects(&est, &w);
        if estimator == Estimator::SarMl {
            if let Ok(eff) = &implied {
                out.push(Artifact::text("implied_effects.csv", eff.to_csv()));
            }
        }
        let (pe_hat, nc_hat_mean, implied_error) = match implied {
            Ok(e) => (Some(e.pe_hat), Some(e.nc_hat_mean), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
        fits.push(FitReport { estimator: estimator.name(), estimate: est, pe_hat, nc_hat_mean, implied_error, truth: None });
    }
    if let Some(t) = truth {
        let Truth { pe, nc_mean, assignment_label, assignment } = t;
        for f in &mut fits {
            f.truth = Some(Truth { pe, nc_mean, assignment_label: assignment_label.clone(), assignment });
        }
    }
    let mut fits = fits.into_iter();
    out.push(Artifact::json("fit_sar_ml.json", &fits.next().expect("sar_ml fit")));
    out.push(Artifact::json("fit_ols.json", &fits.next().expect("ols fit")));
    Ok(out)
}

#[derive(Serialize)]
struct CheckEntry {
    label: String,
    expected_pass: bool,
    as_expected: bool,
    report: CheckReport,
}

#[derive(Serialize)]
struct BlockReport {
    label: String,
    assignment: AssignmentSpec,
    design: DesignInfo,
    truth_pe: f64,
    truth_nc_mean: f64,
    n_effective: usize,
    n_flagged: usize,
    bias_amplification: Option<f64>,
    bias_nc: Option<f64>,
    bias_beta: Option<f64>,
    nc_bias_exceeds_beta_bias: Option<bool>,
}

#[derive(Serialize)]
struct Reference {
    amplification: f64,
    bias_amplification: f64,
    exogenous_rho_hat_mean: f64,
    notes: Vec<&'static str>,
}

#[derive(Serialize)]
struct McReport {
    seed: u64,
    n_units: usize,
    n_reps: usize,
    blocks: Vec<BlockReport>,
    reference: Reference,
}

fn sar_or_first(cfg: &RunConfig) -> Estimator {
    if cfg.mc.estimators.contains(&Estimator::SarMl) {
        Estimator::SarMl
    } else {
        cfg.mc.estimators[0]
    }
}

fn series(out: &ExperimentOutput, estimator: Estimator, f: fn(&interdep::mcharness::RepDraw) -> f64) -> Vec<f64> {
    out.draws.iter().filter(|d| d.estimator == estimator && !d.flagged).map(f).collect()
}

pub fn mc(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let mut summary = format!("{SUMMARY_HEADER}\n");
    let mut draws = format!("{DRAWS_HEADER}\n");
    let mut checks = Vec::new();
    let mut blocks = Vec::new();
    let mut outputs = Vec::new();
    for (i, block) in cfg.blocks.iter().enumerate() {
        let exp = cfg.experiment(i);
        let out = run_experiment(&exp)?;
        summary.push_str(&out.summary.csv_rows(Some(&block.label)));
        draws.push_str(&draws_csv_rows(&out.draws, Some(&block.label)));

        let exogenous = block.spec.mode == AssignmentMode::Exogenous;
        let p1 = prop1_check(&exp)?;
        checks.push(CheckEntry { label: block.label.clone(), expected_pass: exogenous, as_expected: p1.passed == exogenous, report: p1 });
        if exogenous {
            let design = Design::build(&exp)?;
            let pairs = sample_pairs(&design.w, cfg.mc.spillover_linked, cfg.mc.spillover_unlinked, cfg.seed);
            let p2 = prop2_check(&exp, &pairs)?;
            checks.push(CheckEntry { label: block.label.clone(), expected_pass: true, as_expected: p2.passed, report: p2 });
        }

        let amp = out.summary.bias_amp;
        blocks.push(BlockReport {
            label: block.label.clone(),
            assignment: block.spec,
            design: out.design,
            truth_pe: out.summary.truth_pe,
            truth_nc_mean: out.summary.truth_nc_mean,
            n_effective: out.summary.n_effective,
            n_flagged: out.summary.n_flagged,
            bias_amplification: amp.and_then(|a| a.ratio),
            bias_nc: amp.map(|a| a.bias_nc),
            bias_beta: amp.map(|a| a.bias_beta),
            nc_bias_exceeds_beta_bias: amp.map(|a| a.bias_nc.abs() > a.bias_beta.abs()),
        });
        outputs.push((block, out));
    }

    let est = sar_or_first(cfg);
    let first = &outputs[0].1;
    let beta = series(first, est, |d| d.beta_hat);
    let nc = series(first, est, |d| d.nc_hat_mean);
    let mut artifacts = vec![
        Artifact::text("mc_summary.csv", summary),
        Artifact::text("mc_draws.csv", draws),
        Artifact::json("checks.json", &checks),
        Artifact::text(
            "fig2_hist.csv",
            hist_csv("series,bin_left,bin_right,count", &[("beta_hat", &beta), ("nc_hat", &nc)], cfg.mc.bins, false),
        ),
    ];
    let by_mode = |m: AssignmentMode| outputs.iter().find(|(b, _)| b.spec.mode == m).map(|(_, o)| o);
    if let (Some(exo), Some(conf)) = (by_mode(AssignmentMode::Exogenous), by_mode(AssignmentMode::Confounded)) {
        let a = series(exo, est, |d| d.nc_hat_mean);
        let b = series(conf, est, |d| d.nc_hat_mean);
        artifacts.push(Artifact::text(
            "fig3_hist.csv",
            hist_csv("series,bin_left,bin_right,count", &[("exogenous", &a), ("confounded", &b)], cfg.mc.bins, true),
        ));
    }
    artifacts.push(Artifact::json(
        "mc_report.json",
        &McReport {
            seed: cfg.seed,
            n_units: cfg.n_units,
            n_reps: cfg.mc.n_reps,
            blocks,
            reference: Reference {
                amplification: REFERENCE_AMPLIFICATION,
                bias_amplification: REFERENCE_BIAS_AMPLIFICATION,
                exogenous_rho_hat_mean: REFERENCE_RHO_HAT_MEAN,
                notes: vec![
                    "reference values are recorded for comparison only and are not targeted",
                    "the reference exogenous mean rho_hat of 0.703 (truth 0.4) is not reproducible: \
                     quasi-maximum likelihood on the true W is consistent and centres on the true rho",
                    "the reference bias amplification comes from an unreported confounding mechanism; \
                     under logistic-in-shock assignment the ratio stays close to 1",
                ],
            },
        },
    ));
    Ok(artifacts)
}

pub fn regimes() -> Vec<Artifact> {
    vec![Artifact::json("regimes.json", &regime_table())]
}
