//! The three causal objects implied by one structural model.
//!
//! * partial equilibrium: own treatment changes, other outcomes held fixed;
//!   the effect is `beta`.
//! * local interaction: one round of neighbour response through `I + rho W`;
//!   the own effect is still `beta` (zero diagonal) and the spillover from
//!   `i` to `j` is `beta rho W_ji`.
//! * network consistent: full propagation through `(I - rho W)^{-1}`; the
//!   own effect is `beta [(I - rho W)^{-1}]_ii`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::csvfmt::fmt_f64;
use crate::dgp::{check_margin, linear_index, StructuralParams};
use crate::error::{Error, Result};
use crate::linalg::FilterLu;
use crate::netgen::InteractionMatrix;

/// Partial-equilibrium effect.
pub fn effect_pe(params: &StructuralParams) -> f64 {
    params.beta
}

/// Local-interaction own effect; equal to `beta` for every unit because
/// `W_ii = 0`.
pub fn effect_li_own(params: &StructuralParams) -> f64 {
    params.beta
}

/// Outcomes under one round of neighbour response:
/// `(I + rho W)(beta d + X gamma + eps)`.
pub fn li_outcomes(
    w: &InteractionMatrix,
    params: &StructuralParams,
    d: &[f64],
    x: &DMatrix<f64>,
    eps: &[f64],
) -> Result<DVector<f64>> {
    if w.n_units() != d.len() {
        return Err(Error::Input(format!("W has {} units, d has {}", w.n_units(), d.len())));
    }
    let base = linear_index(params, d, x, eps)?;
    let response = w.matrix() * &base;
    Ok(base + response * params.rho)
}

/// First-order spillover from treating `from` onto `to`: `beta rho W[to, from]`.
pub fn effect_li_spillover(params: &StructuralParams, w: &InteractionMatrix, from: usize, to: usize) -> Result<f64> {
    let n = w.n_units();
    if from >= n || to >= n {
        return Err(Error::Parameter(format!("unit index out of range for N = {n}")));
    }
    if from == to {
        return Err(Error::Parameter("own effect is effect_li_own, not a spillover".into()));
    }
    Ok(params.beta * params.rho * w.matrix()[(to, from)])
}

/// Network-consistent own effect of `unit`, from one solve against `e_unit`.
pub fn effect_nc(w: &InteractionMatrix, params: &StructuralParams, unit: usize) -> Result<f64> {
    if unit >= w.n_units() {
        return Err(Error::Parameter(format!("unit {unit} out of range for N = {}", w.n_units())));
    }
    check_margin(w, params.rho)?;
    let col = FilterLu::new(w.matrix(), params.rho)?.inverse_column(unit)?;
    Ok(params.beta * col[unit])
}

/// Spillover from treating `from` onto `to`, under both propagating regimes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpilloverEntry {
    pub from: usize,
    pub to: usize,
    /// `beta rho W_ji`.
    pub li: f64,
    /// `beta [(I - rho W)^{-1}]_ji`.
    pub nc: f64,
}

/// Spillovers from `from` to every other unit.
pub fn spillovers(w: &InteractionMatrix, params: &StructuralParams, from: usize) -> Result<Vec<SpilloverEntry>> {
    if from >= w.n_units() {
        return Err(Error::Parameter(format!("unit {from} out of range for N = {}", w.n_units())));
    }
    check_margin(w, params.rho)?;
    let col = FilterLu::new(w.matrix(), params.rho)?.inverse_column(from)?;
    (0..w.n_units())
        .filter(|&to| to != from)
        .map(|to| {
            Ok(SpilloverEntry { from, to, li: effect_li_spillover(params, w, from, to)?, nc: params.beta * col[to] })
        })
        .collect()
}

/// True counterfactual effects for every unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterfactualReport {
    pub pe: f64,
    pub li_own: f64,
    /// Per-unit network-consistent effects.
    pub nc: Vec<f64>,
    /// `nc_i / pe`; absent when `pe == 0`.
    pub amplification: Option<Vec<f64>>,
    pub nc_mean: f64,
}

/// Scalar part of a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportScalars {
    pub pe: f64,
    pub li_own: f64,
    pub nc_mean: f64,
    /// `nc_mean / pe`; absent when `pe == 0`.
    pub ratio: Option<f64>,
}

impl CounterfactualReport {
    pub fn scalars(&self) -> ReportScalars {
        ReportScalars {
            pe: self.pe,
            li_own: self.li_own,
            nc_mean: self.nc_mean,
            ratio: (self.pe != 0.0).then(|| self.nc_mean / self.pe),
        }
    }

    /// `unit,nc,amplification`; the last field is empty when absent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("unit,nc,amplification\n");
        for (i, nc) in self.nc.iter().enumerate() {
            let amp = self.amplification.as_ref().map(|a| fmt_f64(a[i])).unwrap_or_default();
            let _ = writeln!(out, "{i},{},{amp}", fmt_f64(*nc));
        }
        out
    }
}

/// Counterfactual report from one factorization of `I - rho W` reused for
/// all `N` unit solves.
pub fn report(w: &InteractionMatrix, params: &StructuralParams) -> Result<CounterfactualReport> {
    check_margin(w, params.rho)?;
    let inv = FilterLu::new(w.matrix(), params.rho)?.inverse()?;
    let nc: Vec<f64> = inv.diagonal().iter().map(|m| params.beta * m).collect();
    Ok(assemble(params.beta, nc))
}

pub(crate) fn assemble(beta: f64, nc: Vec<f64>) -> CounterfactualReport {
    let pe = beta;
    let nc_mean = nc.iter().sum::<f64>() / nc.len() as f64;
    let amplification = (pe != 0.0).then(|| nc.iter().map(|v| v / pe).collect());
    CounterfactualReport { pe, li_own: beta, nc, amplification, nc_mean }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{assign_exogenous, draw_shocks, solve_equilibrium};
    use crate::netgen::{build_weights, NetworkParams, UnitCharacteristics};
    use nalgebra::dmatrix;

    fn exchange() -> InteractionMatrix {
        InteractionMatrix::new(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap()
    }

    fn params(beta: f64, rho: f64) -> StructuralParams {
        StructuralParams { beta, rho, gamma: vec![], sigma: 1.0 }
    }

    fn network(n: usize, seed: u64) -> (UnitCharacteristics, InteractionMatrix) {
        let chars = UnitCharacteristics::sample(n, 2, 1, seed).unwrap();
        let w = build_weights(&chars, &NetworkParams::default()).unwrap();
        (chars, w)
    }

    #[test]
    fn pe_and_li_own_pass_beta_through() {
        for b in [1.0, 0.0, -2.0] {
            assert_eq!(effect_pe(&params(b, 0.4)), b);
            assert_eq!(effect_li_own(&params(b, 0.4)), b);
        }
    }

    #[test]
    fn li_outcomes_examples() {
        let w = exchange();
        let none = DMatrix::zeros(2, 0);
        let y = li_outcomes(&w, &params(1.0, 0.4), &[1.0, 0.0], &none, &[0.0, 0.0]).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12 && (y[1] - 0.4).abs() < 1e-12);
        let p = StructuralParams { beta: 2.0, rho: 0.0, gamma: vec![0.5], sigma: 1.0 };
        let x = dmatrix![1.0; -1.0];
        let y = li_outcomes(&w, &p, &[1.0, 0.0], &x, &[0.1, 0.2]).unwrap();
        assert_eq!(y.as_slice(), &[2.0 + 0.5 + 0.1, -0.5 + 0.2]);
    }

    #[test]
    fn li_outcomes_match_equilibrium_to_first_order() {
        let (chars, w) = network(40, 3);
        let d = assign_exogenous(40, 0.5, 1).unwrap();
        let eps = draw_shocks(40, 1.0, 1).unwrap();
        let gap = |rho: f64| {
            let p = StructuralParams { beta: 1.0, rho, gamma: vec![0.5], sigma: 1.0 };
            let li = li_outcomes(&w, &p, &d, &chars.econ, &eps).unwrap();
            let eq = solve_equilibrium(&w, &p, &d, &chars.econ, &eps).unwrap();
            (li - eq).amax()
        };
        // Remainder sum_{m>=2} (rho W)^m r is O(rho^2): halving rho quarters it.
        for rho in [0.02, 0.01, 0.005] {
            let ratio = gap(rho) / gap(rho / 2.0);
            assert!((ratio - 4.0).abs() < 0.1, "rho {rho}: ratio {ratio}");
        }
    }

    #[test]
    fn li_finite_differences() {
        let (chars, w) = network(30, 5);
        let p = StructuralParams { beta: 1.7, rho: 0.6, gamma: vec![0.5], sigma: 1.0 };
        let mut d = assign_exogenous(30, 0.5, 2).unwrap();
        let eps = draw_shocks(30, 1.0, 2).unwrap();
        for i in 0..30 {
            d[i] = 1.0;
            let y1 = li_outcomes(&w, &p, &d, &chars.econ, &eps).unwrap();
            d[i] = 0.0;
            let y0 = li_outcomes(&w, &p, &d, &chars.econ, &eps).unwrap();
            assert!((y1[i] - y0[i] - effect_li_own(&p)).abs() < 1e-12);
            for j in (0..30).filter(|&j| j != i) {
                let s = effect_li_spillover(&p, &w, i, j).unwrap();
                assert!((y1[j] - y0[j] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn li_spillover_examples() {
        let w = InteractionMatrix::new(dmatrix![0.0, 1.0, 0.0; 1.0, 0.0, 0.0; 0.0, 0.0, 0.0]).unwrap();
        let p = params(1.0, 0.4);
        assert_eq!(effect_li_spillover(&p, &w, 2, 0).unwrap(), 0.0);
        assert!((effect_li_spillover(&p, &w, 1, 0).unwrap() - 0.4).abs() < 1e-15);
        assert!(matches!(effect_li_spillover(&p, &w, 1, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn nc_examples() {
        let w = exchange();
        assert_eq!(effect_nc(&w, &params(1.5, 0.0), 0).unwrap(), 1.5);
        assert!((effect_nc(&w, &params(1.0, 0.4), 1).unwrap() - 1.0 / 0.84).abs() < 1e-12);
        assert!(matches!(effect_nc(&w, &params(1.0, 0.999), 0), Err(Error::Model(_))));
    }

    #[test]
    fn report_matches_two_solve_contrast() {
        let (chars, w) = network(50, 7);
        let p = StructuralParams { beta: 1.0, rho: 0.4, gamma: vec![0.5], sigma: 1.0 };
        let r = report(&w, &p).unwrap();
        let eps = draw_shocks(50, 1.0, 4).unwrap();
        for i in 0..50 {
            let mut d = vec![0.0; 50];
            d[i] = 1.0;
            let y1 = solve_equilibrium(&w, &p, &d, &chars.econ, &eps).unwrap();
            d[i] = 0.0;
            let y0 = solve_equilibrium(&w, &p, &d, &chars.econ, &eps).unwrap();
            assert!((y1[i] - y0[i] - r.nc[i]).abs() < 1e-10);
            assert!((effect_nc(&w, &p, i).unwrap() - r.nc[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn report_rho_zero_collapses() {
        let (_, w) = network(30, 1);
        let r = report(&w, &params(2.0, 0.0)).unwrap();
        assert!(r.nc.iter().all(|&v| v == 2.0));
        assert!(r.amplification.unwrap().iter().all(|&a| a == 1.0));
        assert_eq!(r.li_own, r.pe);
    }

    #[test]
    fn report_zero_beta_has_no_amplification() {
        let r = report(&exchange(), &params(0.0, 0.4)).unwrap();
        assert!(r.amplification.is_none());
        assert_eq!(r.scalars().ratio, None);
        assert!(r.to_csv().lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn regime_ordering_and_neumann_residual() {
        let (_, w) = network(50, 9);
        let p = params(1.3, 0.55);
        let r = report(&w, &p).unwrap();
        let m = w.matrix();
        let inv = FilterLu::new(m, p.rho).unwrap().inverse().unwrap();
        let resid = m * m * &inv;
        for i in 0..50 {
            assert!(effect_pe(&p) <= r.nc[i]);
            let want = p.beta * p.rho * p.rho * resid[(i, i)];
            assert!((r.nc[i] - effect_li_own(&p) - want).abs() < 1e-10);
            assert!(want >= 0.0);
        }
    }

    #[test]
    fn scale_equivariance() {
        let (_, w) = network(40, 2);
        let a = report(&w, &params(1.1, 0.4)).unwrap();
        let b = report(&w, &params(2.2, 0.4)).unwrap();
        assert_eq!(b.pe, 2.0 * a.pe);
        for i in 0..40 {
            assert!((b.nc[i] - 2.0 * a.nc[i]).abs() < 1e-14);
            assert!((b.amplification.as_ref().unwrap()[i] - a.amplification.as_ref().unwrap()[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn nc_is_permutation_equivariant() {
        let (chars, w) = network(25, 4);
        let perm: Vec<usize> = (0..25).map(|r| (r * 7 + 3) % 25).collect();
        let wp = build_weights(&chars.permuted(&perm), &NetworkParams::default()).unwrap();
        let a = report(&w, &params(1.0, 0.4)).unwrap();
        let b = report(&wp, &params(1.0, 0.4)).unwrap();
        for (r, &p) in perm.iter().enumerate() {
            assert!((b.nc[r] - a.nc[p]).abs() < 1e-12);
        }
    }

    #[test]
    fn spillover_entries() {
        let s = spillovers(&exchange(), &params(1.0, 0.4), 0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].from, s[0].to), (0, 1));
        assert!((s[0].li - 0.4).abs() < 1e-15);
        assert!((s[0].nc - 0.4 / 0.84).abs() < 1e-12);
    }
}
