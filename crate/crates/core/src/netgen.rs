//! Interaction matrices built from predetermined unit characteristics.
//!
//! A network is a k-nearest-neighbour graph under a mixed distance
//!
//! ```text
//! dist_ij = (1 - a) * |coords_i - coords_j| + a * |econ_i - econ_j|
//! ```
//!
//! with weights `dist_ij^(-decay)` on the selected links (binary when
//! `decay == 0`) and optional row normalization. The spectral radius of the
//! resulting matrix bounds the admissible spatial dependence `rho`.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::csvfmt::{fmt_f64, parse_f64, row};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, CHARS_STREAM};

/// Tolerance on row sums of a row-normalized matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;

const POWER_MAX_ITER: usize = 1_000_000;
/// Relative width of the certified bracket on an irreducible block.
const RADIUS_REL_TOL: f64 = 1e-11;

/// Predetermined characteristics of `N` units.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitCharacteristics {
    /// `N x d` spatial positions.
    pub coords: DMatrix<f64>,
    /// `N x q` economic attributes (standardized).
    pub econ: DMatrix<f64>,
}

impl UnitCharacteristics {
    pub fn new(coords: DMatrix<f64>, econ: DMatrix<f64>) -> Result<Self> {
        let n = coords.nrows();
        if n < 2 {
            return Err(Error::Input(format!("need at least 2 units, got {n}")));
        }
        if coords.ncols() < 1 {
            return Err(Error::Input("coordinates need at least one dimension".into()));
        }
        if econ.nrows() != n {
            return Err(Error::Input(format!(
                "economic attributes have {} rows, coordinates have {n}",
                econ.nrows()
            )));
        }
        if coords.iter().chain(econ.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("unit characteristics contain non-finite values".into()));
        }
        Ok(Self { coords, econ })
    }

    /// Uniform coordinates on the unit hypercube `[0,1]^d` and `q` standard
    /// normal attributes standardized to sample mean 0 and SD 1.
    pub fn sample(n: usize, coord_dim: usize, econ_dim: usize, seed: u64) -> Result<Self> {
        let mut rng = stream_rng(seed, CHARS_STREAM);
        let coords = DMatrix::from_fn(n, coord_dim, |_, _| rng.random::<f64>());
        let mut econ = DMatrix::from_fn(n, econ_dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        for mut col in econ.column_iter_mut() {
            let mean = col.mean();
            col.add_scalar_mut(-mean);
            let sd = (col.norm_squared() / (n as f64 - 1.0)).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
        Self::new(coords, econ)
    }

    pub fn n_units(&self) -> usize {
        self.coords.nrows()
    }

    /// Mixed geographic/economic distance between units `i` and `j`.
    pub fn distance(&self, i: usize, j: usize, econ_weight: f64) -> f64 {
        let geo = (self.coords.row(i) - self.coords.row(j)).norm();
        let econ = if self.econ.ncols() > 0 {
            (self.econ.row(i) - self.econ.row(j)).norm()
        } else {
            0.0
        };
        (1.0 - econ_weight) * geo + econ_weight * econ
    }

    /// Relabels units: row `r` of the result is unit `perm[r]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let coords = DMatrix::from_fn(self.coords.nrows(), self.coords.ncols(), |r, c| self.coords[(perm[r], c)]);
        let econ = DMatrix::from_fn(self.econ.nrows(), self.econ.ncols(), |r, c| self.econ[(perm[r], c)]);
        Self { coords, econ }
    }
}

/// Parameters of the network-construction map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParams {
    /// Neighbours per unit.
    pub k: usize,
    /// Distance-decay exponent; 0 gives binary links.
    pub decay: f64,
    /// Weight on economic distance, in `[0, 1]`.
    pub econ_weight: f64,
    pub row_normalize: bool,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self { k: 4, decay: 0.0, econ_weight: 0.0, row_normalize: true }
    }
}

impl NetworkParams {
    pub fn validate(&self, n_units: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Parameter("k must be positive".into()));
        }
        if self.k >= n_units {
            return Err(Error::Parameter(format!("k = {} must be smaller than N = {n_units}", self.k)));
        }
        if !(self.decay.is_finite() && self.decay >= 0.0) {
            return Err(Error::Parameter(format!("decay must be finite and >= 0, got {}", self.decay)));
        }
        if !(0.0..=1.0).contains(&self.econ_weight) {
            return Err(Error::Parameter(format!("econ_weight must lie in [0, 1], got {}", self.econ_weight)));
        }
        Ok(())
    }
}

/// Nonnegative `N x N` interaction matrix with zero diagonal and its cached
/// spectral radius.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    w: DMatrix<f64>,
    spectral_radius: f64,
}

impl InteractionMatrix {
    /// Validates `w` and caches its spectral radius.
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        check_weights(&w)?;
        let spectral_radius = spectral_radius(&w)?;
        Ok(Self { w, spectral_radius })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn n_units(&self) -> usize {
        self.w.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.w
    }

    /// Number of units with no outgoing links.
    pub fn zero_rows(&self) -> usize {
        self.w.row_iter().filter(|r| r.iter().all(|&v| v == 0.0)).count()
    }

    /// Writes the dense form: `N` header-less rows.
    pub fn to_dense_csv(&self) -> String {
        let mut out = String::new();
        for r in self.w.row_iter() {
            out.push_str(&row(r.iter().copied()));
            out.push('\n');
        }
        out
    }

    /// Writes the nonzero entries as `i,j,w` triples (row-major order).
    pub fn to_sparse_csv(&self) -> String {
        let mut out = String::from("i,j,w\n");
        let n = self.n_units();
        for i in 0..n {
            for j in 0..n {
                let v = self.w[(i, j)];
                if v != 0.0 {
                    let _ = writeln!(out, "{i},{j},{}", fmt_f64(v));
                }
            }
        }
        out
    }

    pub fn from_dense_csv(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(ln, l)| l.split(',').map(|f| parse_f64(f, ln + 1)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input(format!("dense matrix is not square ({n} rows)")));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Reads `i,j,w` triples into an `n x n` matrix.
    pub fn from_sparse_csv(text: &str, n: usize) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "i,j,w" => {}
            _ => return Err(Error::Input("sparse matrix must start with header 'i,j,w'".into())),
        }
        let mut w = DMatrix::zeros(n, n);
        for (ln, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::Input(format!("line {}: expected 3 fields", ln + 1)));
            }
            let idx = |f: &str| -> Result<usize> {
                let v: usize = f
                    .trim()
                    .parse()
                    .map_err(|_| Error::Input(format!("line {}: bad index '{f}'", ln + 1)))?;
                if v >= n {
                    return Err(Error::Input(format!("line {}: index {v} out of range for N = {n}", ln + 1)));
                }
                Ok(v)
            };
            w[(idx(fields[0])?, idx(fields[1])?)] = parse_f64(fields[2], ln + 1)?;
        }
        Self::new(w)
    }

    pub fn write_dense(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_dense_csv())?)
    }

    pub fn write_sparse(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_sparse_csv())?)
    }
}

fn check_weights(w: &DMatrix<f64>) -> Result<()> {
    if !w.is_square() {
        return Err(Error::Input(format!("weight matrix is {}x{}, not square", w.nrows(), w.ncols())));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("weight matrix contains non-finite entries".into()));
    }
    if w.iter().any(|&v| v < 0.0) {
        return Err(Error::Input("weight matrix has negative entries".into()));
    }
    if let Some(i) = (0..w.nrows()).find(|&i| w[(i, i)] != 0.0) {
        return Err(Error::Input(format!("weight matrix has nonzero diagonal at unit {i}")));
    }
    Ok(())
}

/// Builds `W(theta; X)`: k-NN links under the mixed distance, ties broken by
/// lower unit index.
pub fn build_weights(chars: &UnitCharacteristics, params: &NetworkParams) -> Result<InteractionMatrix> {
    let n = chars.n_units();
    params.validate(n)?;
    let mut w = DMatrix::zeros(n, n);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        cand.clear();
        cand.extend((0..n).filter(|&j| j != i).map(|j| (chars.distance(i, j, params.econ_weight), j)));
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(dist, j) in &cand[..params.k] {
            let weight = if params.decay == 0.0 {
                1.0
            } else if dist > 0.0 {
                dist.powf(-params.decay)
            } else {
                return Err(Error::Input(format!(
                    "units {i} and {j} coincide; inverse-distance weight undefined"
                )));
            };
            w[(i, j)] = weight;
        }
    }
    if params.row_normalize {
        w = row_normalize(&w)?;
    }
    InteractionMatrix::new(w)
}

/// Divides each row with positive sum by that sum; zero rows pass through.
pub fn row_normalize(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_weights(w)?;
    let mut out = w.clone();
    for mut r in out.row_iter_mut() {
        let s = r.sum();
        if s > 0.0 {
            r /= s;
        }
    }
    Ok(out)
}

/// Largest eigenvalue modulus of `w`, by power iteration.
///
/// For nonnegative matrices the radius is the largest radius over the
/// strongly connected components of the support graph. Each irreducible
/// block is iterated as `B + I`, which is primitive, and stops once the
/// Collatz-Wielandt bounds `min_i (Bx)_i / x_i <= rho(B) <= max_i (Bx)_i / x_i`
/// meet. Matrices with negative entries use the plain iteration and fail
/// when no single dominant eigenvalue modulus emerges.
pub fn spectral_radius(w: &DMatrix<f64>) -> Result<f64> {
    if !w.is_square() {
        return Err(Error::Input("spectral radius needs a square matrix".into()));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("matrix contains non-finite entries".into()));
    }
    let n = w.nrows();
    if n == 0 || w.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    if w.iter().all(|&v| v >= 0.0) {
        nonnegative_radius(w)
    } else {
        signed_radius(w)
    }
}

fn sparse_rows(w: &DMatrix<f64>, units: &[usize]) -> Vec<Vec<(usize, f64)>> {
    units
        .iter()
        .map(|&i| {
            units
                .iter()
                .enumerate()
                .filter(|&(_, &j)| w[(i, j)] != 0.0)
                .map(|(b, &j)| (b, w[(i, j)]))
                .collect()
        })
        .collect()
}

fn nonnegative_radius(w: &DMatrix<f64>) -> Result<f64> {
    let n = w.nrows();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<NodeIndex> = (0..n).map(|_| graph.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if i != j && w[(i, j)] != 0.0 {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut radius = 0.0_f64;
    for component in tarjan_scc(&graph) {
        let mut units: Vec<usize> = component.iter().map(|v| v.index()).collect();
        units.sort_unstable();
        let r = if units.len() == 1 {
            w[(units[0], units[0])]
        } else {
            irreducible_radius(&sparse_rows(w, &units))?
        };
        radius = radius.max(r);
    }
    Ok(radius)
}

fn irreducible_radius(rows: &[Vec<(usize, f64)>]) -> Result<f64> {
    let n = rows.len();
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    for _ in 0..POWER_MAX_ITER {
        for (i, r) in rows.iter().enumerate() {
            y[i] = x[i] + r.iter().map(|&(j, v)| v * x[j]).sum::<f64>();
        }
        (lo, hi) = x
            .iter()
            .zip(&y)
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), (a, b)| (lo.min(b / a), hi.max(b / a)));
        if hi - lo <= RADIUS_REL_TOL * hi {
            return Ok((0.5 * (lo + hi) - 1.0).max(0.0));
        }
        let scale = y.iter().fold(0.0_f64, |m, v| m.max(*v));
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / scale;
        }
    }
    Err(Error::Numeric(format!(
        "power iteration on an irreducible block of size {n} did not converge in {POWER_MAX_ITER} \
         iterations (bracket [{}, {}])",
        lo - 1.0,
        hi - 1.0
    )))
}

fn signed_radius(w: &DMatrix<f64>) -> Result<f64> {
    let n = w.nrows();
    let units: Vec<usize> = (0..n).collect();
    let rows = sparse_rows(w, &units);
    let mut x = vec![1.0; n];
    let mut y = vec![0.0; n];
    let mut lambda_prev = f64::NAN;
    for _ in 0..POWER_MAX_ITER {
        for (i, r) in rows.iter().enumerate() {
            y[i] = r.iter().map(|&(j, v)| v * x[j]).sum::<f64>();
        }
        let lambda = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if lambda == 0.0 {
            return Ok(0.0);
        }
        let (mut same, mut flipped) = (0.0_f64, 0.0_f64);
        for (xi, yi) in x.iter_mut().zip(&y) {
            let next = yi / lambda;
            same = same.max((next - *xi).abs());
            flipped = flipped.max((next + *xi).abs());
            *xi = next;
        }
        if (lambda - lambda_prev).abs() <= 1e-14 * lambda && same.min(flipped) <= 1e-12 {
            return Ok(lambda);
        }
        lambda_prev = lambda;
    }
    Err(Error::Numeric(format!(
        "power iteration did not converge in {POWER_MAX_ITER} iterations (last estimate {lambda_prev}); \
         the matrix may lack a single dominant eigenvalue modulus"
    )))
}

/// `1 - |rho| * spectral_radius(W)`.
pub fn stability_margin(w: &InteractionMatrix, rho: f64) -> f64 {
    1.0 - rho.abs() * w.spectral_radius()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn dense_radius(w: &DMatrix<f64>) -> f64 {
        crate::linalg::eigenvalues(w).unwrap().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn line(points: &[f64]) -> UnitCharacteristics {
        let n = points.len();
        UnitCharacteristics::new(DMatrix::from_column_slice(n, 1, points), DMatrix::zeros(n, 0)).unwrap()
    }

    #[test]
    fn line_nearest_neighbour_breaks_ties_low() {
        let chars = line(&[0.0, 1.0, 2.0]);
        let p = NetworkParams { k: 1, decay: 0.0, econ_weight: 0.0, row_normalize: true };
        let w = build_weights(&chars, &p).unwrap();
        assert_eq!(w.matrix(), &dmatrix![0.0, 1.0, 0.0; 1.0, 0.0, 0.0; 0.0, 1.0, 0.0]);
    }

    #[test]
    fn k_must_be_below_n() {
        let chars = line(&[0.0, 1.0, 2.0]);
        let p = NetworkParams { k: 3, ..Default::default() };
        assert!(matches!(build_weights(&chars, &p), Err(Error::Parameter(_))));
    }

    #[test]
    fn non_finite_characteristics_rejected() {
        let c = DMatrix::from_column_slice(3, 1, &[0.0, f64::NAN, 1.0]);
        assert!(matches!(UnitCharacteristics::new(c, DMatrix::zeros(3, 0)), Err(Error::Input(_))));
    }

    #[test]
    fn inverse_distance_weights() {
        let chars = line(&[0.0, 1.0, 3.0]);
        let p = NetworkParams { k: 2, decay: 1.0, econ_weight: 0.0, row_normalize: false };
        let w = build_weights(&chars, &p).unwrap();
        assert_eq!(w.matrix()[(0, 1)], 1.0);
        assert_eq!(w.matrix()[(0, 2)], 1.0 / 3.0);
        assert_eq!(w.matrix()[(2, 1)], 0.5);
    }

    #[test]
    fn coincident_units_with_decay_rejected() {
        let chars = line(&[0.0, 0.0, 1.0]);
        let p = NetworkParams { k: 1, decay: 2.0, econ_weight: 0.0, row_normalize: false };
        assert!(matches!(build_weights(&chars, &p), Err(Error::Input(_))));
    }

    #[test]
    fn economic_distance_enters_the_mix() {
        // Geographically 1 is closest to 0, economically 2 is.
        let coords = DMatrix::from_column_slice(3, 1, &[0.0, 0.1, 1.0]);
        let econ = DMatrix::from_column_slice(3, 1, &[0.0, 5.0, 0.0]);
        let chars = UnitCharacteristics::new(coords, econ).unwrap();
        let geo = build_weights(&chars, &NetworkParams { k: 1, econ_weight: 0.0, ..Default::default() }).unwrap();
        let eco = build_weights(&chars, &NetworkParams { k: 1, econ_weight: 1.0, ..Default::default() }).unwrap();
        assert_eq!(geo.matrix()[(0, 1)], 1.0);
        assert_eq!(eco.matrix()[(0, 2)], 1.0);
    }

    #[test]
    fn row_normalize_examples() {
        assert_eq!(row_normalize(&dmatrix![0.0, 2.0; 3.0, 0.0]).unwrap(), dmatrix![0.0, 1.0; 1.0, 0.0]);
        assert_eq!(row_normalize(&DMatrix::zeros(3, 3)).unwrap(), DMatrix::<f64>::zeros(3, 3));
        assert!(matches!(row_normalize(&dmatrix![0.0, -1.0; 1.0, 0.0]), Err(Error::Input(_))));
    }

    #[test]
    fn row_normalize_random_rows_sum_to_zero_or_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let w = DMatrix::from_fn(5, 5, |i, j| {
                if i == j || rng.random::<f64>() < 0.4 {
                    0.0
                } else {
                    rng.random::<f64>() * 10.0
                }
            });
            let out = row_normalize(&w).unwrap();
            for i in 0..5 {
                let mut s = 0.0;
                for j in 0..5 {
                    s += out[(i, j)];
                }
                assert!(s == 0.0 || (s - 1.0).abs() < ROW_SUM_TOL, "row {i} sums to {s}");
                assert_eq!(out[(i, i)], 0.0);
            }
        }
    }

    #[test]
    fn spectral_radius_examples() {
        assert_eq!(spectral_radius(&DMatrix::zeros(4, 4)).unwrap(), 0.0);
        assert!((spectral_radius(&dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap() - 1.0).abs() < 1e-12);
        let stochastic = dmatrix![0.0, 0.5, 0.5; 0.2, 0.0, 0.8; 1.0, 0.0, 0.0];
        assert!((spectral_radius(&stochastic).unwrap() - 1.0).abs() < 1e-12);
        // Directed 3-cycle: eigenvalues are the cube roots of unity.
        let cycle = dmatrix![0.0, 1.0, 0.0; 0.0, 0.0, 1.0; 1.0, 0.0, 0.0];
        assert!((spectral_radius(&cycle).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn spectral_radius_signed_matrix() {
        let m = dmatrix![2.0, 0.0; 0.0, -3.0];
        assert!((spectral_radius(&m).unwrap() - 3.0).abs() < 1e-10);
        // Rotation: complex dominant pair, plain power iteration cannot settle.
        let rot = dmatrix![0.0, -1.0; 1.0, 0.0];
        assert!(matches!(spectral_radius(&rot), Err(Error::Numeric(_))));
    }

    #[test]
    fn spectral_radius_matches_dense_eigensolver() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for trial in 0..40 {
            let n = 2 + trial % 49;
            let density = 0.1 + 0.8 * rng.random::<f64>();
            let w = DMatrix::from_fn(n, n, |i, j| {
                if i != j && rng.random::<f64>() < density {
                    rng.random::<f64>()
                } else {
                    0.0
                }
            });
            let got = spectral_radius(&w).unwrap();
            let want = dense_radius(&w);
            assert!((got - want).abs() <= 1e-8 * want.max(1.0), "n={n}: {got} vs {want}");
        }
    }

    #[test]
    fn default_network_has_unit_radius() {
        let chars = UnitCharacteristics::sample(200, 2, 1, 42).unwrap();
        let w = build_weights(&chars, &NetworkParams::default()).unwrap();
        assert_eq!(w.zero_rows(), 0);
        let oracle = dense_radius(w.matrix());
        assert!((w.spectral_radius() - 1.0).abs() < 1e-8);
        assert!((oracle - 1.0).abs() < 1e-8);
    }

    #[test]
    fn stability_margin_examples() {
        let w = InteractionMatrix::new(dmatrix![0.0, 1.0; 1.0, 0.0]).unwrap();
        assert_eq!(stability_margin(&w, 0.0), 1.0);
        assert!((stability_margin(&w, 0.4) - 0.6).abs() < 1e-12);
        assert!(stability_margin(&w, 1.0).abs() < 1e-12);
        assert!((stability_margin(&w, -0.4) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(InteractionMatrix::new(dmatrix![1.0, 0.0; 0.0, 0.0]).is_err());
        assert!(InteractionMatrix::new(dmatrix![0.0, -1.0; 0.0, 0.0]).is_err());
        assert!(InteractionMatrix::new(DMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn csv_round_trips_bit_exactly() {
        let chars = UnitCharacteristics::sample(30, 2, 2, 9).unwrap();
        let p = NetworkParams { k: 3, decay: 1.5, econ_weight: 0.3, row_normalize: true };
        let w = build_weights(&chars, &p).unwrap();
        let dense = InteractionMatrix::from_dense_csv(&w.to_dense_csv()).unwrap();
        let sparse = InteractionMatrix::from_sparse_csv(&w.to_sparse_csv(), 30).unwrap();
        assert_eq!(dense.matrix(), w.matrix());
        assert_eq!(sparse.matrix(), w.matrix());
        assert!(InteractionMatrix::from_sparse_csv("a,b,c\n", 3).is_err());
        assert!(InteractionMatrix::from_sparse_csv("i,j,w\n0,5,1.0\n", 3).is_err());
    }

    fn arb_chars(max_n: usize) -> impl Strategy<Value = UnitCharacteristics> {
        (3..=max_n).prop_flat_map(|n| {
            (proptest::collection::vec(0.0..1.0f64, n * 2), proptest::collection::vec(-2.0..2.0f64, n)).prop_map(
                move |(c, e)| {
                    UnitCharacteristics::new(DMatrix::from_vec(n, 2, c), DMatrix::from_vec(n, 1, e)).unwrap()
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn constructed_weights_are_valid(
            chars in arb_chars(20),
            k in 1usize..4,
            decay in prop_oneof![Just(0.0), 0.5..2.0f64],
            econ_weight in 0.0..1.0f64,
            norm in any::<bool>(),
        ) {
            let n = chars.n_units();
            let p = NetworkParams { k: k.min(n - 1), decay, econ_weight, row_normalize: norm };
            let w = build_weights(&chars, &p).unwrap();
            let m = w.matrix();
            for i in 0..n {
                prop_assert_eq!(m[(i, i)], 0.0);
                prop_assert_eq!(m.row(i).iter().filter(|&&v| v > 0.0).count(), p.k);
                if norm {
                    prop_assert!((m.row(i).sum() - 1.0).abs() < ROW_SUM_TOL);
                }
            }
            prop_assert!(m.iter().all(|&v| v >= 0.0));
        }

        #[test]
        fn weights_are_permutation_equivariant(
            chars in arb_chars(20),
            keys in proptest::collection::vec(any::<u32>(), 20),
        ) {
            let n = chars.n_units();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.sort_by_key(|&i| (keys[i], i));
            let p = NetworkParams { k: 2, decay: 1.0, econ_weight: 0.25, row_normalize: true };
            let w = build_weights(&chars, &p).unwrap();
            let wp = build_weights(&chars.permuted(&perm), &p).unwrap();
            for r in 0..n {
                for c in 0..n {
                    prop_assert_eq!(wp.matrix()[(r, c)], w.matrix()[(perm[r], perm[c])]);
                }
            }
        }

        #[test]
        fn support_is_the_k_smallest_distances(chars in arb_chars(20), k in 1usize..4) {
            let n = chars.n_units();
            let p = NetworkParams { k: k.min(n - 1), decay: 0.0, econ_weight: 0.0, row_normalize: false };
            let w = build_weights(&chars, &p).unwrap();
            for i in 0..n {
                let linked_max = (0..n).filter(|&j| w.matrix()[(i, j)] > 0.0)
                    .map(|j| chars.distance(i, j, 0.0)).fold(0.0, f64::max);
                for j in (0..n).filter(|&j| j != i && w.matrix()[(i, j)] == 0.0) {
                    prop_assert!(chars.distance(i, j, 0.0) >= linked_max);
                }
            }
        }
    }
}
