//! Data generation: shocks, treatment assignment and the SAR equilibrium
//! `Y = (I - rho W)^{-1} (beta D + X gamma + eps)`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::csvfmt::{fmt_f64, parse_f64};
use crate::error::{Error, Result};
use crate::linalg::FilterLu;
use crate::netgen::{stability_margin, InteractionMatrix, UnitCharacteristics};
use crate::rng::{stream_rng, ASSIGN_STREAM, SHOCK_STREAM};

/// Minimum stability margin accepted by the equilibrium solver.
pub const MIN_STABILITY_MARGIN: f64 = 0.01;

const BISECTION_TOL: f64 = 1e-10;
const BISECTION_MAX_ITER: usize = 400;

/// Coefficients of `Y = rho W Y + beta D + X gamma + eps`, `eps ~ N(0, sigma^2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralParams {
    pub beta: f64,
    pub rho: f64,
    pub gamma: Vec<f64>,
    pub sigma: f64,
}

impl Default for StructuralParams {
    fn default() -> Self {
        Self { beta: 1.0, rho: 0.4, gamma: vec![0.5], sigma: 1.0 }
    }
}

impl StructuralParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta.is_finite() && self.rho.is_finite() && self.gamma.iter().all(|g| g.is_finite())) {
            return Err(Error::Parameter("structural coefficients must be finite".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::Parameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }

    /// Fails unless the margin `1 - |rho| radius(W)` exceeds [`MIN_STABILITY_MARGIN`].
    pub fn check_stable(&self, w: &InteractionMatrix) -> Result<()> {
        check_margin(w, self.rho)
    }
}

pub(crate) fn check_margin(w: &InteractionMatrix, rho: f64) -> Result<()> {
    let margin = stability_margin(w, rho);
    if margin > MIN_STABILITY_MARGIN {
        Ok(())
    } else {
        Err(Error::Model(format!(
            "stability margin 1 - |rho| * radius = {margin:.6} at rho = {rho} (radius {}) is not above {MIN_STABILITY_MARGIN}",
            w.spectral_radius()
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentMode {
    Exogenous,
    Confounded,
}

/// Treatment assignment mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssignmentSpec {
    pub mode: AssignmentMode,
    /// Marginal treatment probability.
    pub p: f64,
    /// Confounding strength (ignored when exogenous).
    pub kappa: f64,
}

impl AssignmentSpec {
    pub fn exogenous(p: f64) -> Self {
        Self { mode: AssignmentMode::Exogenous, p, kappa: 0.0 }
    }

    pub fn confounded(p: f64, kappa: f64) -> Self {
        Self { mode: AssignmentMode::Confounded, p, kappa }
    }

    pub fn validate(&self) -> Result<()> {
        check_probability(self.p)?;
        if !self.kappa.is_finite() {
            return Err(Error::Parameter("kappa must be finite".into()));
        }
        Ok(())
    }

    pub fn assign(&self, eps: &[f64], seed: u64) -> Result<Vec<f64>> {
        match self.mode {
            AssignmentMode::Exogenous => assign_exogenous(eps.len(), self.p, seed),
            AssignmentMode::Confounded => assign_confounded(eps, self.p, self.kappa, seed),
        }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("treatment probability must lie in (0, 1), got {p}")))
    }
}

/// `n` i.i.d. `N(0, sigma^2)` shocks; `sigma == 0` gives exact zeros.
pub fn draw_shocks(n: usize, sigma: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::Parameter(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut rng = stream_rng(seed, SHOCK_STREAM);
    Ok((0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect())
}

/// Draws `D_i = 1{u_i < propensity_i}` from the assignment stream.
fn draw_bernoulli(propensity: impl Iterator<Item = f64>, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, ASSIGN_STREAM);
    propensity
        .map(|pi| if rng.random::<f64>() < pi { 1.0 } else { 0.0 })
        .collect()
}

/// i.i.d. Bernoulli(`p`) treatment, drawn on its own stream.
pub fn assign_exogenous(n: usize, p: f64, seed: u64) -> Result<Vec<f64>> {
    check_probability(p)?;
    Ok(draw_bernoulli(std::iter::repeat_n(p, n), seed))
}

fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Propensities `logistic(a + kappa * eps_i / sd(eps))` with the intercept
/// `a` calibrated by bisection so their mean equals `p`.
pub fn confounded_propensities(eps: &[f64], p: f64, kappa: f64) -> Result<Vec<f64>> {
    check_probability(p)?;
    if eps.iter().any(|e| !e.is_finite()) {
        return Err(Error::Input("shocks contain non-finite values".into()));
    }
    if !kappa.is_finite() {
        return Err(Error::Parameter("kappa must be finite".into()));
    }
    let n = eps.len();
    if kappa == 0.0 || n < 2 {
        return Ok(vec![p; n]);
    }
    let mean = eps.iter().sum::<f64>() / n as f64;
    let sd = (eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt();
    if sd == 0.0 {
        return Ok(vec![p; n]);
    }
    let index: Vec<f64> = eps.iter().map(|e| kappa * e / sd).collect();
    let mean_prop = |a: f64| index.iter().map(|t| logistic(a + t)).sum::<f64>() / n as f64;

    let spread = index.iter().fold(0.0_f64, |m, t| m.max(t.abs()));
    let centre = (p / (1.0 - p)).ln();
    let (mut lo, mut hi) = (centre - spread - 1.0, centre + spread + 1.0);
    let mut a = 0.5 * (lo + hi);
    let mut converged = false;
    for _ in 0..BISECTION_MAX_ITER {
        a = 0.5 * (lo + hi);
        let m = mean_prop(a);
        if (m - p).abs() <= 1e-14 || hi - lo <= BISECTION_TOL {
            converged = true;
            break;
        }
        if m < p {
            lo = a;
        } else {
            hi = a;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "propensity intercept bisection did not reach width {BISECTION_TOL} (bracket [{lo}, {hi}])"
        )));
    }
    Ok(index.iter().map(|t| logistic(a + t)).collect())
}

/// Treatment correlated with the shocks through a logistic propensity.
/// With `kappa == 0` this draws exactly what [`assign_exogenous`] draws.
pub fn assign_confounded(eps: &[f64], p: f64, kappa: f64, seed: u64) -> Result<Vec<f64>> {
    let prop = confounded_propensities(eps, p, kappa)?;
    Ok(draw_bernoulli(prop.into_iter(), seed))
}

/// `beta d + X gamma + eps`.
pub fn linear_index(params: &StructuralParams, d: &[f64], x: &DMatrix<f64>, eps: &[f64]) -> Result<DVector<f64>> {
    let n = d.len();
    if eps.len() != n || x.nrows() != n {
        return Err(Error::Input(format!(
            "dimension mismatch: d has {n}, eps {}, X {} rows",
            eps.len(),
            x.nrows()
        )));
    }
    if x.ncols() != params.gamma.len() {
        return Err(Error::Input(format!(
            "X has {} columns but gamma has {} entries",
            x.ncols(),
            params.gamma.len()
        )));
    }
    let gamma = DVector::from_column_slice(&params.gamma);
    let xg = x * gamma;
    Ok(DVector::from_fn(n, |i, _| params.beta * d[i] + xg[i] + eps[i]))
}

/// Solves `(I - rho W) Y = beta d + X gamma + eps` by LU factorization.
pub fn solve_equilibrium(
    w: &InteractionMatrix,
    params: &StructuralParams,
    d: &[f64],
    x: &DMatrix<f64>,
    eps: &[f64],
) -> Result<DVector<f64>> {
    if w.n_units() != d.len() {
        return Err(Error::Input(format!("W has {} units, d has {}", w.n_units(), d.len())));
    }
    params.check_stable(w)?;
    let rhs = linear_index(params, d, x, eps)?;
    let lu = FilterLu::new(w.matrix(), params.rho)?;
    let y = lu.solve(&rhs)?;
    let resid = (&y - w.matrix() * &y * params.rho - &rhs).amax();
    let scale = rhs.amax();
    if resid > 1e-10 * scale.max(f64::MIN_POSITIVE) && resid > 0.0 {
        return Err(Error::Numeric(format!("equilibrium residual {resid:e} exceeds 1e-10 * {scale:e}")));
    }
    Ok(y)
}

/// One simulated economy.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub chars: UnitCharacteristics,
    pub eps: Vec<f64>,
    pub d: Vec<f64>,
    pub y: Vec<f64>,
}

impl Population {
    /// Draws shocks and treatment from `seed` and solves for outcomes. The
    /// economic attributes double as the outcome covariates `X`.
    pub fn simulate(
        chars: &UnitCharacteristics,
        w: &InteractionMatrix,
        params: &StructuralParams,
        assignment: &AssignmentSpec,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        assignment.validate()?;
        let n = chars.n_units();
        let eps = draw_shocks(n, params.sigma, seed)?;
        let d = assignment.assign(&eps, seed)?;
        let y = solve_equilibrium(w, params, &d, &chars.econ, &eps)?;
        Ok(Self { chars: chars.clone(), eps, d, y: y.iter().copied().collect() })
    }

    pub fn n_units(&self) -> usize {
        self.d.len()
    }

    pub fn y_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.y)
    }

    pub fn d_vec(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.d)
    }

    /// `unit,coord1..coordd,econ1..econq,eps,d,y`.
    pub fn to_csv(&self) -> String {
        let dc = self.chars.coords.ncols();
        let qc = self.chars.econ.ncols();
        let mut out = String::from("unit");
        for c in 1..=dc {
            let _ = write!(out, ",coord{c}");
        }
        for c in 1..=qc {
            let _ = write!(out, ",econ{c}");
        }
        out.push_str(",eps,d,y\n");
        for i in 0..self.n_units() {
            let _ = write!(out, "{i}");
            for c in 0..dc {
                let _ = write!(out, ",{}", fmt_f64(self.chars.coords[(i, c)]));
            }
            for c in 0..qc {
                let _ = write!(out, ",{}", fmt_f64(self.chars.econ[(i, c)]));
            }
            let _ = writeln!(out, ",{},{},{}", fmt_f64(self.eps[i]), self.d[i] as u8, fmt_f64(self.y[i]));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| Error::Input("empty population file".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        let dc = cols.iter().filter(|c| c.starts_with("coord")).count();
        let qc = cols.iter().filter(|c| c.starts_with("econ")).count();
        let mut expected = vec!["unit".to_string()];
        expected.extend((1..=dc).map(|c| format!("coord{c}")));
        expected.extend((1..=qc).map(|c| format!("econ{c}")));
        expected.extend(["eps", "d", "y"].map(String::from));
        if cols != expected {
            return Err(Error::Input(format!("unexpected population header '{header}'")));
        }
        let (mut coords, mut econ, mut eps, mut d, mut y) = (vec![], vec![], vec![], vec![], vec![]);
        for (k, (ln, line)) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(Error::Input(format!("line {}: expected {} fields", ln + 1, cols.len())));
            }
            if f[0].trim().parse::<usize>().ok() != Some(k) {
                return Err(Error::Input(format!("line {}: unit index must be {k}", ln + 1)));
            }
            for c in 0..dc {
                coords.push(parse_f64(f[1 + c], ln + 1)?);
            }
            for c in 0..qc {
                econ.push(parse_f64(f[1 + dc + c], ln + 1)?);
            }
            eps.push(parse_f64(f[1 + dc + qc], ln + 1)?);
            let di = parse_f64(f[2 + dc + qc], ln + 1)?;
            if di != 0.0 && di != 1.0 {
                return Err(Error::Input(format!("line {}: treatment must be 0 or 1", ln + 1)));
            }
            d.push(di);
            y.push(parse_f64(f[3 + dc + qc], ln + 1)?);
        }
        let n = d.len();
        let chars = UnitCharacteristics::new(
            DMatrix::from_row_slice(n, dc, &coords),
            DMatrix::from_row_slice(n, qc, &econ),
        )?;
        if eps.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::Input("population contains non-finite values".into()));
        }
        Ok(Self { chars, eps, d, y })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netgen::{build_weights, NetworkParams};
    use nalgebra::dmatrix;
    use rand::SeedableRng;

    fn exchange() -> InteractionMatrix {
        InteractionMatrix::new(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap()
    }

    /// `sum_{m <= M} (rho W)^m rhs` with `(|rho| r)^M < 1e-12`.
    fn neumann(w: &InteractionMatrix, rho: f64, rhs: &DVector<f64>) -> DVector<f64> {
        let q = rho.abs() * w.spectral_radius();
        let m = if q == 0.0 { 1 } else { ((1e-12_f64).ln() / q.ln()).ceil() as usize + 1 };
        let mut term = rhs.clone();
        let mut acc = rhs.clone();
        for _ in 0..m {
            term = w.matrix() * term * rho;
            acc += &term;
        }
        acc
    }

    #[test]
    fn shocks_zero_sigma_and_determinism() {
        assert_eq!(draw_shocks(5, 0.0, 1).unwrap(), vec![0.0; 5]);
        assert_eq!(draw_shocks(50, 1.0, 3).unwrap(), draw_shocks(50, 1.0, 3).unwrap());
        assert_ne!(draw_shocks(50, 1.0, 3).unwrap(), draw_shocks(50, 1.0, 4).unwrap());
    }

    #[test]
    fn shocks_moments() {
        let e = draw_shocks(100_000, 1.0, 7).unwrap();
        let n = e.len() as f64;
        let mean = e.iter().sum::<f64>() / n;
        let sd = (e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((sd - 1.0).abs() < 0.02, "sd {sd}");
    }

    #[test]
    fn exogenous_assignment() {
        let d = assign_exogenous(100_000, 0.5, 1).unwrap();
        let share = d.iter().sum::<f64>() / d.len() as f64;
        assert!((share - 0.5).abs() < 0.01);
        assert_eq!(d, assign_exogenous(100_000, 0.5, 1).unwrap());
        assert!(assign_exogenous(10, 0.0, 1).is_err());
        assert!(assign_exogenous(10, 1.0, 1).is_err());
    }

    #[test]
    fn zero_kappa_matches_exogenous_draws() {
        let eps = draw_shocks(1000, 1.0, 5).unwrap();
        assert!(confounded_propensities(&eps, 0.3, 0.0).unwrap().iter().all(|&p| p == 0.3));
        assert_eq!(assign_confounded(&eps, 0.3, 0.0, 5).unwrap(), assign_exogenous(1000, 0.3, 5).unwrap());
    }

    #[test]
    fn calibrated_mean_propensity() {
        let eps = draw_shocks(5000, 2.0, 9).unwrap();
        for &(p, kappa) in &[(0.5, 1.0), (0.2, 2.0), (0.8, -1.5)] {
            let prop = confounded_propensities(&eps, p, kappa).unwrap();
            let mean = prop.iter().sum::<f64>() / prop.len() as f64;
            assert!((mean - p).abs() < 1e-9, "{p} {kappa}: {mean}");
        }
    }

    #[test]
    fn confounding_correlation_matches_quadrature() {
        // corr(D, eps) for D ~ Bern(logistic(z)), z ~ N(0,1), by quadrature:
        // cov = E[z logistic(z)], sd(D) = 1/2.
        let h = 1e-3;
        let mut cov = 0.0;
        let mut z = -12.0;
        while z < 12.0 {
            let f = |z: f64| z * logistic(z) * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
            cov += h / 6.0 * (f(z) + 4.0 * f(z + h / 2.0) + f(z + h));
            z += h;
        }
        let oracle = cov / 0.5;
        assert!((oracle - 0.4132).abs() < 1e-3);

        let eps = draw_shocks(100_000, 1.0, 21).unwrap();
        let d = assign_confounded(&eps, 0.5, 1.0, 21).unwrap();
        let n = eps.len() as f64;
        let (me, md) = (eps.iter().sum::<f64>() / n, d.iter().sum::<f64>() / n);
        let cov: f64 = eps.iter().zip(&d).map(|(e, t)| (e - me) * (t - md)).sum::<f64>() / n;
        let ve = eps.iter().map(|e| (e - me).powi(2)).sum::<f64>() / n;
        let corr = cov / (ve.sqrt() * (md * (1.0 - md)).sqrt());
        assert!((corr - oracle).abs() < 0.02, "corr {corr} vs {oracle}");
    }

    #[test]
    fn strong_confounding_thresholds_at_median() {
        let eps = draw_shocks(100, 1.0, 13).unwrap();
        let mut sorted = eps.clone();
        sorted.sort_by(f64::total_cmp);
        let median = 0.5 * (sorted[49] + sorted[50]);
        let d = assign_confounded(&eps, 0.5, 1e4, 13).unwrap();
        for (e, t) in eps.iter().zip(&d) {
            assert_eq!(*t, if *e > median { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn confounded_rejects_non_finite() {
        assert!(matches!(assign_confounded(&[0.0, f64::NAN], 0.5, 1.0, 1), Err(Error::Input(_))));
    }

    #[test]
    fn zero_kappa_first_moment() {
        let (n, p) = (20_000, 0.3);
        let eps = draw_shocks(n, 1.0, 2).unwrap();
        let d = assign_confounded(&eps, p, 0.0, 2).unwrap();
        let mean = d.iter().sum::<f64>() / n as f64;
        assert!((mean - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn equilibrium_without_interdependence_is_identity() {
        let w = exchange();
        let params = StructuralParams { beta: 1.0, rho: 0.0, gamma: vec![], sigma: 1.0 };
        let y = solve_equilibrium(&w, &params, &[1.0, 0.0], &DMatrix::zeros(2, 0), &[0.0, 0.0]).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn equilibrium_two_unit_closed_form() {
        let w = exchange();
        let params = StructuralParams { beta: 1.0, rho: 0.4, gamma: vec![], sigma: 1.0 };
        let y = solve_equilibrium(&w, &params, &[1.0, 0.0], &DMatrix::zeros(2, 0), &[0.0, 0.0]).unwrap();
        // (I - rho W)^{-1} = [[1, rho], [rho, 1]] / (1 - rho^2)
        assert!((y[0] - 1.0 / 0.84).abs() < 1e-12);
        assert!((y[1] - 0.4 / 0.84).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_rejects_unstable_rho() {
        let w = exchange();
        let params = StructuralParams { beta: 1.0, rho: 0.995, gamma: vec![], sigma: 1.0 };
        let r = solve_equilibrium(&w, &params, &[1.0, 0.0], &DMatrix::zeros(2, 0), &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::Model(_))));
    }

    #[test]
    fn equilibrium_matches_neumann_series_and_residual_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for trial in 0..100 {
            let n = 5 + (trial * 37) % 196;
            let chars = UnitCharacteristics::sample(n, 2, 1, trial as u64).unwrap();
            let np = NetworkParams {
                k: (1 + trial % 6).min(n - 1),
                decay: if trial % 3 == 0 { 1.0 } else { 0.0 },
                econ_weight: 0.2 * (trial % 4) as f64,
                row_normalize: trial % 5 != 0,
            };
            let w = build_weights(&chars, &np).unwrap();
            let rho = (rng.random::<f64>() * 1.9 - 0.95) / w.spectral_radius();
            let params = StructuralParams { beta: rng.random::<f64>() * 4.0 - 2.0, rho, gamma: vec![0.7], sigma: 1.0 };
            let eps = draw_shocks(n, 1.0, trial as u64).unwrap();
            let d = assign_exogenous(n, 0.4, trial as u64).unwrap();
            let y = solve_equilibrium(&w, &params, &d, &chars.econ, &eps).unwrap();
            let rhs = linear_index(&params, &d, &chars.econ, &eps).unwrap();
            let resid = (&y - w.matrix() * &y * rho - &rhs).amax();
            assert!(resid < 1e-10 * rhs.amax());
            let oracle = neumann(&w, rho, &rhs);
            assert!((&y - oracle).amax() < 1e-10 * rhs.amax().max(1.0), "trial {trial}");
        }
    }

    #[test]
    fn equilibrium_is_linear_in_the_right_hand_side() {
        let chars = UnitCharacteristics::sample(60, 2, 1, 4).unwrap();
        let w = build_weights(&chars, &NetworkParams::default()).unwrap();
        let params = StructuralParams { beta: 1.3, rho: 0.6, gamma: vec![0.5], sigma: 1.0 };
        let no_cov = StructuralParams { gamma: vec![0.0], ..params.clone() };
        let d1 = assign_exogenous(60, 0.3, 1).unwrap();
        let d2 = assign_exogenous(60, 0.3, 2).unwrap();
        let sum: Vec<f64> = d1.iter().zip(&d2).map(|(a, b)| a + b).collect();
        let eps = draw_shocks(60, 1.0, 3).unwrap();
        let zeros = vec![0.0; 60];
        let full = solve_equilibrium(&w, &params, &sum, &chars.econ, &eps).unwrap();
        let a = solve_equilibrium(&w, &params, &d1, &chars.econ, &eps).unwrap();
        let b = solve_equilibrium(&w, &no_cov, &d2, &chars.econ, &zeros).unwrap();
        assert!((full - a - b).amax() < 1e-10);
    }

    #[test]
    fn population_is_deterministic_and_csv_round_trips() {
        let chars = UnitCharacteristics::sample(40, 2, 1, 8).unwrap();
        let w = build_weights(&chars, &NetworkParams::default()).unwrap();
        let params = StructuralParams::default();
        let spec = AssignmentSpec::confounded(0.5, 1.0);
        let a = Population::simulate(&chars, &w, &params, &spec, 99).unwrap();
        let b = Population::simulate(&chars, &w, &params, &spec, 99).unwrap();
        assert_eq!(a, b);
        let text = a.to_csv();
        assert!(text.starts_with("unit,coord1,coord2,econ1,eps,d,y\n"));
        assert_eq!(Population::from_csv(&text).unwrap(), a);
        assert_eq!(Population::from_csv(&text).unwrap().to_csv(), text);
    }
}
