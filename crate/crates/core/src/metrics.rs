//! Control-energy metrics over output Gramians, and their eigenvalue bounds.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::nn1d::{diagonal_recursion, NN1DParams};
use crate::spectral::TargetSet;

/// Matrices with a larger condition number trigger a warning.
pub const ILL_CONDITIONED: f64 = 1e14;

const SYMMETRY_TOLERANCE: f64 = 1e-12;
const PSD_TOLERANCE: f64 = 1e-10;

/// Output Gramian over a target set: symmetric, positive semidefinite, rows
/// and columns labelled by the targets.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputGramian {
    matrix: DMatrix<f64>,
    targets: TargetSet,
}

impl OutputGramian {
    /// Validates symmetry and semidefiniteness, then stores the exactly
    /// symmetrized matrix.
    pub fn new(matrix: DMatrix<f64>, targets: TargetSet) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        if matrix.nrows() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: targets.len(),
                got: matrix.nrows(),
            });
        }
        check_symmetric(&matrix)?;
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        let eig = eigen_symmetric(&matrix)?;
        let trace: f64 = matrix.diagonal().iter().sum();
        if eig[0] < -PSD_TOLERANCE * trace.abs() {
            return Err(Error::InvalidArgument(format!(
                "output Gramian is indefinite (smallest eigenvalue {:e}, trace {:e})",
                eig[0], trace
            )));
        }
        Ok(OutputGramian { matrix, targets })
    }

    /// Labels rows `0..n` as scalar targets.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let targets = TargetSet::scalars(0..matrix.nrows() as i64)?;
        Self::new(matrix, targets)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn targets(&self) -> &TargetSet {
        &self.targets
    }

    pub fn n_t(&self) -> usize {
        self.matrix.nrows()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        eigen_symmetric(&self.matrix).expect("stored matrix is symmetric")
    }

    /// `lambda_max / lambda_min`; infinite when singular.
    pub fn condition_number(&self) -> f64 {
        let eig = self.eigenvalues();
        let (lo, hi) = (eig[0], eig[eig.len() - 1]);
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// Principal submatrix on the given rows.
    pub fn submatrix(&self, indices: &[usize]) -> Result<OutputGramian> {
        check_indices(indices, self.n_t())?;
        let m = DMatrix::from_fn(indices.len(), indices.len(), |r, c| self.matrix[(indices[r], indices[c])]);
        let targets = TargetSet::new(indices.iter().map(|&i| self.targets.nodes()[i].clone()).collect())?;
        OutputGramian::new(m, targets)
    }

    fn cholesky(&self) -> Result<Cholesky<f64, Dyn>> {
        let cond = self.condition_number();
        if cond > ILL_CONDITIONED {
            log::warn!("output Gramian condition number {cond:e}; inverse-based metrics may not be numerically reliable");
        }
        self.matrix.clone().cholesky().ok_or_else(|| Error::OutputUncontrollable {
            min_eigenvalue: self.eigenvalues()[0],
        })
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let mut asymmetry = 0.0f64;
    for r in 0..m.nrows() {
        for c in 0..r {
            asymmetry = asymmetry.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    if asymmetry > SYMMETRY_TOLERANCE * scale || m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

fn check_indices(indices: &[usize], n: usize) -> Result<()> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("empty index set".into()));
    }
    let mut seen = vec![false; n];
    for &i in indices {
        if i >= n || seen[i] {
            return Err(Error::InvalidArgument(format!("bad index {i} for a {n}x{n} matrix")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of a
/// symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigen(matrix: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch {
            expected: matrix.nrows(),
            got: matrix.ncols(),
        });
    }
    check_symmetric(matrix)?;
    let n = matrix.nrows();
    let mut a = (matrix + matrix.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                if apq.abs() <= f64::EPSILON * 0.5 * (a[(p, p)] * a[(q, q)]).abs().sqrt() {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                rotated = true;
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].total_cmp(&a[(y, y)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn eigen_symmetric(matrix: &DMatrix<f64>) -> Result<Vec<f64>> {
    symmetric_eigen(matrix).map(|(values, _)| values)
}

/// `J* = bᵀ W⁻¹ b / 2`.
pub fn min_energy(gram: &OutputGramian, b: &[f64]) -> Result<f64> {
    if b.len() != gram.n_t() {
        return Err(Error::DimensionMismatch {
            expected: gram.n_t(),
            got: b.len(),
        });
    }
    let chol = gram.cholesky()?;
    let b = DVector::from_column_slice(b);
    Ok((0.5 * b.dot(&chol.solve(&b))).max(0.0))
}

pub fn trace_inverse(gram: &OutputGramian) -> Result<f64> {
    Ok(gram.cholesky()?.inverse().trace())
}

/// `-log det(c W)` with `c = 1 / (n_t g00)`.
pub fn neg_log_det_scaled(gram: &OutputGramian, g00: f64) -> Result<f64> {
    if !(g00 > 0.0 && g00.is_finite()) {
        return Err(Error::Domain {
            name: "g00",
            value: g00,
            domain: "(0, inf)",
        });
    }
    let chol = gram.cholesky()?;
    let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let n = gram.n_t() as f64;
    Ok(-(log_det - n * (n * g00).ln()))
}

/// Exponent applied to `det W` in the ellipsoid volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VolumeExponent {
    /// `(det W)^(1/n_t)`.
    #[default]
    InverseDimension,
    /// `(det W)^(1/2)`, the volume of `{y : yᵀ W⁻¹ y <= 1}`.
    Half,
}

/// `pi^(n/2) / Gamma(n/2 + 1) * (det W)^e`.
pub fn ellipsoid_volume(gram: &OutputGramian, exponent: VolumeExponent) -> f64 {
    let n = gram.n_t();
    let eig = gram.eigenvalues();
    let det = if eig[0] <= 0.0 { 0.0 } else { eig.iter().product() };
    let e = match exponent {
        VolumeExponent::InverseDimension => 1.0 / n as f64,
        VolumeExponent::Half => 0.5,
    };
    unit_ball_volume(n) * det.powf(e)
}

/// `pi^(n/2) / Gamma(n/2 + 1)`.
pub fn unit_ball_volume(n: usize) -> f64 {
    PI.powf(n as f64 / 2.0) / gamma_half_plus_one(n)
}

/// `Gamma(n/2 + 1)`.
fn gamma_half_plus_one(n: usize) -> f64 {
    let mut g = if n.is_multiple_of(2) { 1.0 } else { PI.sqrt() / 2.0 };
    let mut k = n % 2;
    while k < n {
        k += 2;
        g *= k as f64 / 2.0;
    }
    g
}

/// Largest absolute row sum, an upper bound on every eigenvalue.
pub fn gerschgorin_upper(gram: &OutputGramian) -> f64 {
    gram.matrix()
        .row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Largest signed row sum. Bounds `lambda_max` only for nonnegative entries.
pub fn gerschgorin_signed(gram: &OutputGramian) -> f64 {
    gram.matrix().row_iter().map(|row| row.sum()).fold(f64::NEG_INFINITY, f64::max)
}

/// `n_t * g00`, the row-sum bound when every entry is at most `g00`.
pub fn corollary_upper(gram: &OutputGramian, g00: f64) -> f64 {
    gram.n_t() as f64 * g00
}

/// Checks `lambda_i(X) <= mu_i(Y) <= lambda_(i+n-m)(X)` for the principal
/// submatrix `Y` of `X` on `sub_indices`.
pub fn interlacing_check(full: &OutputGramian, sub_indices: &[usize]) -> Result<bool> {
    check_indices(sub_indices, full.n_t())?;
    let x = full.eigenvalues();
    let y_mat = DMatrix::from_fn(sub_indices.len(), sub_indices.len(), |r, c| {
        full.matrix()[(sub_indices[r], sub_indices[c])]
    });
    let y = eigen_symmetric(&y_mat)?;
    let (n, m) = (x.len(), y.len());
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let slack = PSD_TOLERANCE * scale;
    Ok((0..m).all(|i| x[i] <= y[i] + slack && y[i] <= x[i + n - m] + slack))
}

/// Lower bound `1/G(l, l)` on the trace of the inverse, with its asymptotic
/// form `z^(-l)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceInverseBound {
    pub exact: f64,
    pub asymptotic: f64,
}

/// Lower bound `-log(G(l, l) / (n_t G(0, 0)))` on the scaled log-determinant,
/// with asymptotic slope `-log z` per unit `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NegLogDetBound {
    pub exact: f64,
    pub asymptotic: f64,
    pub slope: f64,
}

fn diagonal_through(params: &NN1DParams, ell: usize) -> Result<Vec<f64>> {
    let series = diagonal_recursion(params, ell.max(1))?;
    if series.trusted_through < ell {
        return Err(Error::InvalidArgument(format!(
            "diagonal entry {ell} is not resolvable (trusted through {})",
            series.trusted_through
        )));
    }
    Ok(series.values)
}

pub fn bound_trace_inverse(ell: usize, params: &NN1DParams) -> Result<TraceInverseBound> {
    let g = diagonal_through(params, ell)?;
    Ok(TraceInverseBound {
        exact: 1.0 / g[ell],
        asymptotic: params.decay_rate().powi(-(ell as i32)),
    })
}

pub fn bound_neg_log_det(ell: usize, params: &NN1DParams, n_t: usize) -> Result<NegLogDetBound> {
    if n_t == 0 {
        return Err(Error::InvalidArgument("n_t must be positive".into()));
    }
    let g = diagonal_through(params, ell)?;
    let slope = -params.decay_rate().ln();
    Ok(NegLogDetBound {
        exact: -(g[ell] / (n_t as f64 * g[0])).ln(),
        asymptotic: slope * ell as f64,
        slope,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub j_star: f64,
    pub trace_inverse: f64,
    pub neg_log_det_scaled: f64,
    pub ellipsoid_volume: f64,
    pub gerschgorin_upper: f64,
    pub corollary_upper: f64,
    /// `1 / W(i, i)` per target; each is a lower bound on the trace of the
    /// inverse.
    pub interlacing_lower_bounds: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub condition_number: f64,
}

pub fn energy_report(gram: &OutputGramian, b: &[f64], g00: f64, exponent: VolumeExponent) -> Result<EnergyReport> {
    Ok(EnergyReport {
        j_star: min_energy(gram, b)?,
        trace_inverse: trace_inverse(gram)?,
        neg_log_det_scaled: neg_log_det_scaled(gram, g00)?,
        ellipsoid_volume: ellipsoid_volume(gram, exponent),
        gerschgorin_upper: gerschgorin_upper(gram),
        corollary_upper: corollary_upper(gram, g00),
        interlacing_lower_bounds: gram.matrix().diagonal().iter().map(|x| 1.0 / x).collect(),
        eigenvalues: gram.eigenvalues(),
        condition_number: gram.condition_number(),
    })
}
