//! One-dimensional rules on `[-pi, pi]` and their tensor products.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    GaussLegendre,
    /// Periodic trapezoid on `[-pi, pi)`: equal weights, one endpoint.
    TensorTrapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub points_per_dim: usize,
    pub scheme: Scheme,
}

impl QuadratureConfig {
    pub fn new(points_per_dim: usize, scheme: Scheme) -> Result<Self> {
        let q = QuadratureConfig {
            points_per_dim,
            scheme,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn gauss(points_per_dim: usize) -> Self {
        QuadratureConfig {
            points_per_dim,
            scheme: Scheme::GaussLegendre,
        }
    }

    /// 64 points per dimension for `d = 1`, 24 for `d = 2`, 12 beyond.
    pub fn default_for_dim(d: usize) -> Self {
        let n = match d {
            1 => 64,
            2 => 24,
            _ => 12,
        };
        Self::gauss(n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_per_dim < 4 {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs at least 4 points per dimension, got {}",
                self.points_per_dim
            )));
        }
        Ok(())
    }

    /// Nodes and weights of the 1-D rule on `[-pi, pi]`.
    pub fn rule(&self) -> Rule {
        match self.scheme {
            Scheme::GaussLegendre => gauss_legendre(self.points_per_dim).scaled(-PI, PI),
            Scheme::TensorTrapezoid => periodic_trapezoid(self.points_per_dim),
        }
    }
}

/// One-dimensional quadrature rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Maps a rule on `[-1, 1]` onto `[a, b]`.
    pub fn scaled(&self, a: f64, b: f64) -> Rule {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        Rule {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| half * w).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Tensor product of `dim` copies: returns `(point, weight)` pairs.
    pub fn tensor(&self, dim: usize) -> Vec<(Vec<f64>, f64)> {
        let n = self.len();
        let total = n.pow(dim as u32);
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        loop {
            let point = idx.iter().map(|&i| self.nodes[i]).collect();
            let weight = idx.iter().map(|&i| self.weights[i]).product();
            out.push((point, weight));
            if !crate::lattice::advance(&mut idx, n) {
                break;
            }
        }
        out
    }
}

/// Gauss–Legendre rule with `n` points on `[-1, 1]`, by Newton iteration on
/// the three-term recurrence.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Equal-weight rule on `[-pi, pi)`; exact for trigonometric polynomials of
/// degree below `n`.
pub fn periodic_trapezoid(n: usize) -> Rule {
    let h = 2.0 * PI / n as f64;
    Rule {
        nodes: (0..n).map(|j| -PI + h * j as f64).collect(),
        weights: vec![h; n],
    }
}
