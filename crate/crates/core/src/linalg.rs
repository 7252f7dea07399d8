//! Dense factorizations shared by the solver, counterfactual and estimation
//! modules.

use nalgebra::{DMatrix, DVector, LU, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netgen::InteractionMatrix;

/// `I - rho * W`.
pub fn spatial_filter(w: &DMatrix<f64>, rho: f64) -> DMatrix<f64> {
    let n = w.nrows();
    DMatrix::identity(n, n) - w * rho
}

/// LU factorization of `I - rho W`, built once and reused for many solves.
pub struct FilterLu {
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

impl FilterLu {
    pub fn new(w: &DMatrix<f64>, rho: f64) -> Result<Self> {
        let n = w.nrows();
        let lu = spatial_filter(w, rho).lu();
        let u = lu.u();
        let max = u.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if (0..n).any(|i| u[(i, i)].abs() <= f64::EPSILON * n as f64 * max) {
            return Err(Error::Numeric(format!("I - rho W is numerically singular at rho = {rho}")));
        }
        Ok(Self { lu, n })
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.lu
            .solve(rhs)
            .ok_or_else(|| Error::Numeric("singular factorization in solve".into()))
    }

    /// Column `i` of `(I - rho W)^{-1}`.
    pub fn inverse_column(&self, i: usize) -> Result<DVector<f64>> {
        let mut e = DVector::zeros(self.n);
        e[i] = 1.0;
        self.solve(&e)
    }

    /// Full inverse, one column per solve against the shared factors.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let mut id = DMatrix::identity(self.n, self.n);
        if self.lu.solve_mut(&mut id) {
            Ok(id)
        } else {
            Err(Error::Numeric("singular factorization in inverse".into()))
        }
    }

    /// `(sign, ln|det|)` from the pivoted factors.
    pub fn log_det(&self) -> (f64, f64) {
        let u = self.lu.u();
        let mut sign = self.lu.p().determinant::<f64>();
        let mut acc = 0.0;
        for i in 0..self.n {
            let d = u[(i, i)];
            if d < 0.0 {
                sign = -sign;
            }
            acc += d.abs().ln();
        }
        (sign, acc)
    }
}

/// How `ln|I - rho W|` is evaluated.
#[derive(Debug, Clone)]
pub enum LogDetMethod {
    /// Fresh LU factorization at every `rho`.
    Lu(DMatrix<f64>),
    /// `sum_k ln|1 - rho lambda_k|` from the precomputed spectrum of `W`.
    Spectrum(Vec<Complex64>),
}

impl LogDetMethod {
    pub fn lu(w: &InteractionMatrix) -> Self {
        LogDetMethod::Lu(w.matrix().clone())
    }

    pub fn spectrum(w: &InteractionMatrix) -> Result<Self> {
        Ok(LogDetMethod::Spectrum(eigenvalues(w.matrix())?))
    }

    /// `ln|I - rho W|`, failing when the determinant is not positive.
    pub fn log_det(&self, rho: f64) -> Result<f64> {
        match self {
            LogDetMethod::Lu(w) => {
                let (sign, v) = FilterLu::new(w, rho)?.log_det();
                if sign <= 0.0 {
                    return Err(Error::Domain(format!("det(I - rho W) is not positive at rho = {rho}")));
                }
                Ok(v)
            }
            LogDetMethod::Spectrum(eig) => {
                let mut acc = 0.0;
                for z in eig {
                    let re = 1.0 - rho * z.re;
                    let im = rho * z.im;
                    // Complex eigenvalues come in conjugate pairs; a lone real
                    // factor below zero flips the determinant's sign.
                    if im == 0.0 && re <= 0.0 {
                        return Err(Error::Domain(format!("det(I - rho W) is not positive at rho = {rho}")));
                    }
                    acc += 0.5 * (re * re + im * im).ln();
                }
                Ok(acc)
            }
        }
    }
}

/// Least-squares projection onto the columns of a design matrix.
pub struct LeastSquares {
    svd: SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    tol: f64,
    rank: usize,
    ncols: usize,
}

impl LeastSquares {
    pub fn new(z: DMatrix<f64>) -> Self {
        let (n, p) = z.shape();
        let svd = SVD::new(z, true, true);
        let max_sv = svd.singular_values.iter().fold(0.0_f64, |m, v| m.max(*v));
        let tol = max_sv * n.max(p) as f64 * f64::EPSILON * 16.0;
        let rank = svd.rank(tol);
        Self { svd, tol, rank, ncols: p }
    }

    pub fn full_rank(&self) -> bool {
        self.rank == self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Minimum-norm least-squares coefficients.
    pub fn coefficients(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.svd
            .solve(b, self.tol)
            .map_err(|e| Error::Numeric(format!("least squares failed: {e}")))
    }

    /// `b - P b`; unaffected by redundant columns.
    pub fn residuals(&self, b: &DVector<f64>) -> DVector<f64> {
        let u = self.svd.u.as_ref().expect("left singular vectors computed");
        let mut fitted = DVector::zeros(b.len());
        for (k, &s) in self.svd.singular_values.iter().enumerate() {
            if s > self.tol {
                let col = u.column(k);
                fitted.axpy(col.dot(b), &col, 1.0);
            }
        }
        b - fitted
    }
}

/// All eigenvalues of a general real square matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    let fm = faer::Mat::<f64>::from_fn(n, m.ncols(), |i, j| m[(i, j)]);
    let ev = fm
        .eigenvalues()
        .map_err(|e| Error::Numeric(format!("eigenvalue decomposition failed: {e:?}")))?;
    Ok(ev.iter().map(|z| Complex64::new(z.re, z.im)).collect())
}

/// `[d, x]` design matrix.
pub fn design(d: &DVector<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.len();
    DMatrix::from_fn(n, 1 + x.ncols(), |i, c| if c == 0 { d[i] } else { x[(i, c - 1)] })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn log_det_routes_agree() {
        let w = InteractionMatrix::new(dmatrix![0.0, 0.5, 0.5; 1.0, 0.0, 0.0; 0.0, 1.0, 0.0]).unwrap();
        for &rho in &[-0.9, -0.3, 0.0, 0.4, 0.95] {
            let a = LogDetMethod::lu(&w).log_det(rho).unwrap();
            let b = LogDetMethod::spectrum(&w).unwrap().log_det(rho).unwrap();
            let direct = spatial_filter(w.matrix(), rho).determinant().ln();
            assert!((a - direct).abs() < 1e-12);
            assert!((b - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn log_det_routes_agree_on_default_network() {
        use crate::netgen::{build_weights, NetworkParams, UnitCharacteristics};
        let chars = UnitCharacteristics::sample(200, 2, 1, 42).unwrap();
        let w = build_weights(&chars, &NetworkParams::default()).unwrap();
        let spec = LogDetMethod::spectrum(&w).unwrap();
        for &rho in &[-0.95, -0.4, 0.4, 0.95] {
            let a = LogDetMethod::lu(&w).log_det(rho).unwrap();
            let b = spec.log_det(rho).unwrap();
            assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{rho}: {a} vs {b}");
        }
    }

    #[test]
    fn residuals_ignore_redundant_columns() {
        let z = dmatrix![1.0, 0.0; 1.0, 1.0; 1.0, 2.0; 1.0, 5.0];
        let zz = dmatrix![1.0, 0.0, 2.0; 1.0, 1.0, 2.0; 1.0, 2.0, 2.0; 1.0, 5.0, 2.0];
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        let a = LeastSquares::new(z);
        let c = LeastSquares::new(zz);
        assert!(a.full_rank());
        assert!(!c.full_rank());
        assert!((a.residuals(&b) - c.residuals(&b)).amax() < 1e-12);
    }
}
