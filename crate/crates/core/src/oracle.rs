//! Brute-force ground truth on a truncated lattice.
//!
//! The infinite lattice is cut to the window `{-radius..radius}^d` with open
//! boundaries: edges that leave the window are dropped. Steady-state and
//! finite-time Gramians come from dense Lyapunov solves and RK4 integration of
//! the matrix ODE; minimum-energy transfers are simulated with the standard
//! Gramian-based feedforward input.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::{advance, LatticeSpec, NodeIndex};
use crate::spectral::DriverSet;

/// Largest system the Kronecker-form solver accepts (`n² × n²` dense solve).
pub const KRONECKER_MAX_NODES: usize = 64;

/// Step-halving gate for the RK4 Gramian.
pub const ODE_GATE: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct FiniteSystem {
    coords: Vec<NodeIndex>,
    drivers: Vec<NodeIndex>,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    rows: Vec<Vec<(usize, f64)>>,
    position: HashMap<NodeIndex, usize>,
}

impl FiniteSystem {
    /// Builds a system directly from matrices; nodes are labelled `0..n`.
    /// Columns of `b` must be unit vectors.
    pub fn from_matrices(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n {
            return Err(Error::InvalidArgument(format!(
                "A is {}x{}, B is {}x{}",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols()
            )));
        }
        let coords: Vec<NodeIndex> = (0..n as i64).map(NodeIndex::scalar).collect();
        let mut drivers = Vec::with_capacity(b.ncols());
        for col in b.column_iter() {
            let ones: Vec<usize> = (0..n).filter(|&r| col[r] == 1.0).collect();
            let zeros = col.iter().filter(|&&v| v == 0.0).count();
            if ones.len() != 1 || zeros != n - 1 {
                return Err(Error::InvalidArgument("every input column must be a unit vector".into()));
            }
            drivers.push(coords[ones[0]].clone());
        }
        let rows = sparse_rows(&a);
        let position = coords.iter().cloned().enumerate().map(|(k, c)| (c, k)).collect();
        Ok(FiniteSystem {
            coords,
            drivers,
            a,
            b,
            rows,
            position,
        })
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[NodeIndex] {
        &self.coords
    }

    pub fn drivers(&self) -> &[NodeIndex] {
        &self.drivers
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Row of a lattice site in the state vector.
    pub fn position(&self, node: &NodeIndex) -> Option<usize> {
        self.position.get(node).copied()
    }

    fn positions(&self, nodes: &[NodeIndex]) -> Result<Vec<usize>> {
        nodes
            .iter()
            .map(|t| self.position(t).ok_or_else(|| Error::OutsideWindow(t.to_string())))
            .collect()
    }

    /// `A x` using the sparsity pattern.
    fn apply_a(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n(),
            self.rows.iter().map(|row| row.iter().map(|&(c, v)| v * x[c]).sum::<f64>()),
        )
    }

    fn apply_a_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.n());
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                y[c] += v * x[r];
            }
        }
        y
    }

    /// Submatrix of `w` on the given sites.
    pub fn restrict(&self, w: &DMatrix<f64>, nodes: &[NodeIndex]) -> Result<DMatrix<f64>> {
        let idx = self.positions(nodes)?;
        Ok(DMatrix::from_fn(idx.len(), idx.len(), |r, c| w[(idx[r], idx[c])]))
    }
}

fn sparse_rows(a: &DMatrix<f64>) -> Vec<Vec<(usize, f64)>> {
    (0..a.nrows())
        .map(|r| (0..a.ncols()).filter(|&c| a[(r, c)] != 0.0).map(|c| (c, a[(r, c)])).collect())
        .collect()
}

/// Cuts the lattice to `{-radius..radius}^d`, sites in lexicographic order.
pub fn truncate(spec: &LatticeSpec, radius: usize, drivers: &DriverSet) -> Result<FiniteSystem> {
    if radius == 0 {
        return Err(Error::InvalidArgument("truncation radius must be positive".into()));
    }
    let d = spec.dim();
    let side = 2 * radius + 1;
    let r = radius as i64;
    let mut coords = Vec::with_capacity(side.pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        coords.push(NodeIndex(idx.iter().map(|&c| c as i64 - r).collect()));
        if !advance(&mut idx, side) {
            break;
        }
    }
    let position: HashMap<NodeIndex, usize> = coords.iter().cloned().enumerate().map(|(k, c)| (c, k)).collect();
    let n = coords.len();

    let mut a = DMatrix::zeros(n, n);
    for (row, site) in coords.iter().enumerate() {
        for (offset, w) in spec.terms() {
            if let Some(&col) = position.get(&(site + offset)) {
                a[(row, col)] += w;
            }
        }
    }
    let mut b = DMatrix::zeros(n, drivers.len());
    for (k, drv) in drivers.iter().enumerate() {
        spec.check_node(drv)?;
        let row = *position.get(drv).ok_or_else(|| Error::OutsideWindow(drv.to_string()))?;
        b[(row, k)] = 1.0;
    }
    let rows = sparse_rows(&a);
    Ok(FiniteSystem {
        coords,
        drivers: drivers.nodes().to_vec(),
        a,
        b,
        rows,
        position,
    })
}

/// Steady-state Gramian: `A W + W Aᵀ + B Bᵀ = 0`.
pub fn lyapunov_steady(sys: &FiniteSystem) -> Result<DMatrix<f64>> {
    let q = &sys.b * sys.b.transpose();
    let w = solve_lyapunov(&sys.a, &q)?;
    let residual = lyapunov_residual(&sys.a, &w, &q);
    let tolerance = 1e-10 * q.norm();
    if residual > tolerance {
        return Err(Error::LyapunovResidual { residual, tolerance });
    }
    Ok(w)
}

/// Frobenius norm of `A X + X Aᵀ + Q`.
pub fn lyapunov_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let ax = a * x;
    (&ax + ax.transpose() + q).norm()
}

/// Solves `A X + X Aᵀ + Q = 0` for Hurwitz `A` by the Newton iteration for
/// the matrix sign function:
///
/// ```text
/// A_{k+1} = (c A_k + (c A_k)⁻¹) / 2
/// Q_{k+1} = (c Q_k + (c A_k)⁻¹ Q_k (c A_k)⁻ᵀ / c²) / 2
/// ```
///
/// `A_k → -I` exactly when `A` is Hurwitz, and then `X = Q_∞ / 2`. The
/// scaling `c = |det A_k|^(-1/n)` shortens the initial phase.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.shape() != (n, n) {
        return Err(Error::InvalidArgument("Lyapunov operands must be square and conformant".into()));
    }
    let mut ak = a.clone();
    let mut qk = q.clone();
    for iter in 0..100 {
        let lu = ak.clone().lu();
        let inv = lu.try_inverse().ok_or_else(|| Error::NotHurwitz {
            detail: "drift matrix is singular".into(),
        })?;
        let c = if iter < 8 {
            let log_det: f64 = ak.clone().lu().u().diagonal().iter().map(|u| u.abs().ln()).sum();
            (-log_det / n as f64).exp()
        } else {
            1.0
        };
        let next_a = (&ak * c + &inv / c) * 0.5;
        let next_q = (&qk * c + &inv * &qk * inv.transpose() / c) * 0.5;
        let change = (&next_a - &ak).norm();
        let size = next_a.norm();
        ak = next_a;
        qk = next_q;
        if change <= 1e-14 * size {
            break;
        }
    }
    let sign_error = (&ak + DMatrix::<f64>::identity(n, n)).norm();
    if sign_error.is_nan() || sign_error >= 1e-8 * (n as f64).sqrt() {
        let unstable = ((n as f64 - (-ak.trace())) / 2.0).round();
        return Err(Error::NotHurwitz {
            detail: format!("about {unstable} eigenvalue(s) with Re(lambda) >= 0"),
        });
    }
    let x = qk * 0.5;
    Ok((&x + x.transpose()) * 0.5)
}

/// Kronecker form `(I ⊗ A + A ⊗ I) vec X = -vec Q`, for small systems only.
pub fn solve_lyapunov_kronecker(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if n > KRONECKER_MAX_NODES {
        return Err(Error::InvalidArgument(format!(
            "Kronecker solve limited to {KRONECKER_MAX_NODES} nodes, got {n}"
        )));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    let op = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_column_slice((-q).as_slice());
    let sol = op.lu().solve(&rhs).ok_or_else(|| Error::NotHurwitz {
        detail: "Lyapunov operator is singular".into(),
    })?;
    Ok(DMatrix::from_column_slice(n, n, sol.as_slice()))
}

#[derive(Debug, Clone)]
pub struct OdeGramian {
    pub w: DMatrix<f64>,
    pub steps: usize,
    /// Max entrywise change between the last two step counts.
    pub halving_change: f64,
}

/// `W(t)` by fixed-step RK4 from `W(0) = 0`, doubling the step count from
/// `steps` until halving the step changes no entry by more than [`ODE_GATE`].
pub fn gramian_ode(sys: &FiniteSystem, t: f64, steps: usize) -> Result<OdeGramian> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain {
            name: "t",
            value: t,
            domain: "[0, inf)",
        });
    }
    let n = sys.n();
    if t == 0.0 {
        return Ok(OdeGramian {
            w: DMatrix::zeros(n, n),
            steps: 0,
            halving_change: 0.0,
        });
    }
    let q = &sys.b * sys.b.transpose();
    let mut steps = steps.max(1);
    let mut coarse = rk4_gramian(sys, &q, t, steps);
    loop {
        let fine = rk4_gramian(sys, &q, t, 2 * steps);
        let change = (&fine - &coarse).amax();
        steps *= 2;
        if change < ODE_GATE {
            return Ok(OdeGramian {
                w: fine,
                steps,
                halving_change: change,
            });
        }
        if steps > 1 << 22 {
            return Err(Error::InvalidArgument(format!(
                "RK4 Gramian failed to converge (change {change:e} at {steps} steps)"
            )));
        }
        coarse = fine;
    }
}

fn rk4_gramian(sys: &FiniteSystem, q: &DMatrix<f64>, t: f64, steps: usize) -> DMatrix<f64> {
    let n = sys.n();
    let h = t / steps as f64;
    let rhs = |w: &DMatrix<f64>| -> DMatrix<f64> {
        // A W via sparse rows, then A W + (A W)ᵀ + Q.
        let mut aw = DMatrix::zeros(n, n);
        for (r, row) in sys.rows.iter().enumerate() {
            for &(c, v) in row {
                for col in 0..n {
                    aw[(r, col)] += v * w[(c, col)];
                }
            }
        }
        let awt = aw.transpose();
        aw + awt + q
    };
    let mut w = DMatrix::zeros(n, n);
    for _ in 0..steps {
        let k1 = rhs(&w);
        let k2 = rhs(&(&w + &k1 * (h / 2.0)));
        let k3 = rhs(&(&w + &k2 * (h / 2.0)));
        let k4 = rhs(&(&w + &k3 * h));
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    w
}

/// Driver inputs sampled every half step on `[0, t_f]` (`2 * steps + 1`
/// samples), which is what RK4 with step `t_f / steps` consumes.
#[derive(Debug, Clone)]
pub struct InputTrajectory {
    pub t_f: f64,
    pub steps: usize,
    pub samples: Vec<DVector<f64>>,
}

impl InputTrajectory {
    pub fn zeros(n_inputs: usize, t_f: f64, steps: usize) -> Self {
        InputTrajectory {
            t_f,
            steps,
            samples: vec![DVector::zeros(n_inputs); 2 * steps + 1],
        }
    }

    pub fn half_step(&self) -> f64 {
        self.t_f / (2 * self.steps) as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.half_step()
    }

    /// `½ ∫ |u|²` by composite Simpson on the half-step grid.
    pub fn energy(&self) -> f64 {
        let h = self.half_step();
        let m = self.samples.len() - 1;
        let mut acc = 0.0;
        for (k, u) in self.samples.iter().enumerate() {
            let w = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * u.norm_squared();
        }
        0.5 * acc * h / 3.0
    }

    pub fn axpy(&self, scale: f64, other: &InputTrajectory) -> InputTrajectory {
        InputTrajectory {
            t_f: self.t_f,
            steps: self.steps,
            samples: self.samples.iter().zip(&other.samples).map(|(u, v)| u + v * scale).collect(),
        }
    }
}

/// Integrates `x' = A x + B u` with RK4 and returns `x(t_f)`.
pub fn simulate(sys: &FiniteSystem, x0: &DVector<f64>, input: &InputTrajectory) -> DVector<f64> {
    let h = input.t_f / input.steps as f64;
    let f = |x: &DVector<f64>, u: &DVector<f64>| sys.apply_a(x) + &sys.b * u;
    let mut x = x0.clone();
    for k in 0..input.steps {
        let (u0, um, u1) = (&input.samples[2 * k], &input.samples[2 * k + 1], &input.samples[2 * k + 2]);
        let k1 = f(&x, u0);
        let k2 = f(&(&x + &k1 * (h / 2.0)), um);
        let k3 = f(&(&x + &k2 * (h / 2.0)), um);
        let k4 = f(&(&x + &k3 * h), u1);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    x
}

/// `u(t) = Bᵀ exp(Aᵀ (t_f - t)) Cᵀ nu`, where `C` selects `targets`.
pub fn adjoint_input(
    sys: &FiniteSystem,
    targets: &[NodeIndex],
    nu: &DVector<f64>,
    t_f: f64,
    steps: usize,
) -> Result<InputTrajectory> {
    let idx = sys.positions(targets)?;
    let mut mu = DVector::zeros(sys.n());
    for (k, &r) in idx.iter().enumerate() {
        mu[r] = nu[k];
    }
    // mu(s) = lambda(t_f - s) solves mu' = Aᵀ mu; integrate it on the
    // half-step grid, then read it backwards.
    let h = t_f / (2 * steps) as f64;
    let f = |m: &DVector<f64>| sys.apply_a_transpose(m);
    let mut costate = Vec::with_capacity(2 * steps + 1);
    costate.push(mu.clone());
    for _ in 0..2 * steps {
        let k1 = f(&mu);
        let k2 = f(&(&mu + &k1 * (h / 2.0)));
        let k3 = f(&(&mu + &k2 * (h / 2.0)));
        let k4 = f(&(&mu + &k3 * h));
        mu += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        costate.push(mu.clone());
    }
    costate.reverse();
    let bt = sys.b.transpose();
    Ok(InputTrajectory {
        t_f,
        steps,
        samples: costate.iter().map(|l| &bt * l).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct ControlRun {
    pub t_f: f64,
    pub x0: DVector<f64>,
    pub targets: Vec<NodeIndex>,
    pub x_f: DVector<f64>,
    /// Measured `½ ∫ Σ u_a²`.
    pub energy: f64,
    /// `½ bᵀ W̄⁻¹ b` from the RK4 Gramian.
    pub predicted_energy: f64,
    /// `‖x_targets(t_f) - x_f‖`.
    pub final_error: f64,
    /// Output Gramian over the targets at `t_f`.
    pub output_gramian: DMatrix<f64>,
    pub input: InputTrajectory,
}

/// Simulates the minimum-energy transfer of the target states to `x_f` at
/// time `t_f`, starting from `x0`.
pub fn min_energy_control(
    sys: &FiniteSystem,
    x0: &[f64],
    targets: &[NodeIndex],
    x_f: &[f64],
    t_f: f64,
    steps: usize,
) -> Result<ControlRun> {
    if x0.len() != sys.n() {
        return Err(Error::DimensionMismatch {
            expected: sys.n(),
            got: x0.len(),
        });
    }
    if x_f.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: targets.len(),
            got: x_f.len(),
        });
    }
    if !(t_f > 0.0 && t_f.is_finite()) {
        return Err(Error::Domain {
            name: "t_f",
            value: t_f,
            domain: "(0, inf)",
        });
    }
    let idx = sys.positions(targets)?;
    let gram = gramian_ode(sys, t_f, steps)?;
    let steps = gram.steps;
    let w_bar = sys.restrict(&gram.w, targets)?;

    let x0 = DVector::from_column_slice(x0);
    let x_f = DVector::from_column_slice(x_f);
    let free = simulate(sys, &x0, &InputTrajectory::zeros(sys.b.ncols(), t_f, steps));
    let b = DVector::from_iterator(idx.len(), idx.iter().zip(x_f.iter()).map(|(&r, &xf)| xf - free[r]));

    let chol = w_bar.clone().cholesky().ok_or_else(|| Error::OutputUncontrollable {
        min_eigenvalue: crate::metrics::eigen_symmetric(&w_bar)
            .map(|e| e[0])
            .unwrap_or(f64::NAN),
    })?;
    let nu = chol.solve(&b);
    let predicted_energy = 0.5 * b.dot(&nu);

    let input = adjoint_input(sys, targets, &nu, t_f, steps)?;
    let x_final = simulate(sys, &x0, &input);
    let final_error = idx
        .iter()
        .zip(x_f.iter())
        .map(|(&r, &xf)| (x_final[r] - xf).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(ControlRun {
        t_f,
        x0,
        targets: targets.to_vec(),
        x_f,
        energy: input.energy(),
        predicted_energy,
        final_error,
        output_gramian: w_bar,
        input,
    })
}
