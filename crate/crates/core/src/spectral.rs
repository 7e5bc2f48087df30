//! Controllability Gramian entries of an infinite lattice from their
//! Fourier-space integral representation.
//!
//! With `sigma + i omega` built from the lattice function at the two
//! integration variables `ihat`, `jhat` and `alpha + i beta` the phase of the
//! driver-relative node pair, the single-driver entry is
//!
//! ```text
//! W(t) = (2 pi)^(-2d) ∫∫ [ (alpha sigma + beta omega)(r(t) - 1)
//!                          - (beta sigma - alpha omega) s(t) ] / (sigma² + omega²)
//! W    = -(2 pi)^(-2d) ∫∫ (alpha sigma + beta omega) / (sigma² + omega²)
//! ```
//!
//! over `[-pi, pi]^(2d)`, with `r(t) = e^(sigma t) cos(omega t)` and
//! `s(t) = e^(sigma t) sin(omega t)`. Entries for several drivers are sums of
//! single-driver entries evaluated with the driver moved to the origin.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{is_stable, LatticeSpec, NodeIndex, SpectralPoint, DEFAULT_STABILITY_GRID};
use crate::metrics::OutputGramian;
use crate::quadrature::QuadratureConfig;

/// Integrands whose `|sigma| + |omega|` drops below this abort evaluation.
pub const SINGULARITY_GUARD: f64 = 1e-13;

/// The four trigonometric kernels at one quadrature node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandParts {
    pub sigma: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl IntegrandParts {
    pub fn steady(&self) -> f64 {
        -(self.alpha * self.sigma + self.beta * self.omega) / (self.sigma * self.sigma + self.omega * self.omega)
    }

    pub fn at_time(&self, t: f64) -> f64 {
        let k = TimeKernel::new(self.sigma, self.omega, t);
        let denom = self.sigma * self.sigma + self.omega * self.omega;
        ((self.alpha * self.sigma + self.beta * self.omega) * (k.r - 1.0)
            - (self.beta * self.sigma - self.alpha * self.omega) * k.s)
            / denom
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeKernel {
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

impl TimeKernel {
    pub fn new(sigma: f64, omega: f64, t: f64) -> Self {
        let growth = (sigma * t).exp();
        let (sin, cos) = (omega * t).sin_cos();
        TimeKernel {
            r: growth * cos,
            s: growth * sin,
            t,
        }
    }
}

/// Evaluates the kernels for driver `a`, node pair `(i, j)` at `(ihat, jhat)`.
pub fn kernel_parts(
    spec: &LatticeSpec,
    i: &NodeIndex,
    j: &NodeIndex,
    a: &NodeIndex,
    ihat: &SpectralPoint,
    jhat: &SpectralPoint,
) -> Result<IntegrandParts> {
    for n in [i, j, a] {
        spec.check_node(n)?;
    }
    for k in [ihat, jhat] {
        if k.dim() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                got: k.dim(),
            });
        }
    }
    let (ik, jk) = (ihat.components(), jhat.components());
    let mut sigma = 0.0;
    let mut omega = 0.0;
    for (n, w) in spec.terms() {
        let (pi_, pj) = (n.dot(ik), n.dot(jk));
        sigma += w * (pi_.cos() + pj.cos());
        omega += w * (pi_.sin() + pj.sin());
    }
    let phase = (i - a).dot(ik) + (j - a).dot(jk);
    Ok(IntegrandParts {
        sigma,
        omega,
        alpha: phase.cos(),
        beta: phase.sin(),
    })
}

/// Ordered set of distinct lattice sites (drivers or targets).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSet(Vec<NodeIndex>);

pub type DriverSet = NodeSet;
pub type TargetSet = NodeSet;

impl NodeSet {
    pub fn new(nodes: Vec<NodeIndex>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("node set is empty".into()));
        }
        let d = nodes[0].dim();
        for (k, n) in nodes.iter().enumerate() {
            if n.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: n.dim(),
                });
            }
            if nodes[..k].contains(n) {
                return Err(Error::InvalidArgument(format!("duplicate node {n}")));
            }
        }
        Ok(NodeSet(nodes))
    }

    /// Convenience constructor for one-dimensional sites.
    pub fn scalars(indices: impl IntoIterator<Item = i64>) -> Result<Self> {
        Self::new(indices.into_iter().map(NodeIndex::scalar).collect())
    }

    pub fn nodes(&self) -> &[NodeIndex] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0[0].dim()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, NodeIndex> {
        self.0.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GramianMode {
    Steady,
    AtTime(f64),
}

#[derive(Debug, Clone)]
struct SpectralNode {
    k: Vec<f64>,
    weight: f64,
    /// `sum psi(n) cos(n.k)`
    re_phi: f64,
    /// `sum psi(n) sin(n.k)`, i.e. `-Im phi(k)`
    sin_phi: f64,
}

/// Quadrature tables for one lattice and rule, shared by every entry.
#[derive(Debug, Clone)]
pub struct SpectralGramian {
    spec: LatticeSpec,
    quadrature: QuadratureConfig,
    nodes: Vec<SpectralNode>,
    stable: Option<bool>,
}

impl SpectralGramian {
    pub fn new(spec: &LatticeSpec, quadrature: QuadratureConfig) -> Result<Self> {
        quadrature.validate()?;
        if spec.dim() >= 3 {
            log::warn!(
                "d = {} needs a {}-dimensional quadrature ({} points per entry)",
                spec.dim(),
                2 * spec.dim(),
                (quadrature.points_per_dim as f64).powi(2 * spec.dim() as i32)
            );
        }
        let nodes = quadrature
            .rule()
            .tensor(spec.dim())
            .into_iter()
            .map(|(k, weight)| {
                let (mut re_phi, mut sin_phi) = (0.0, 0.0);
                for (n, w) in spec.terms() {
                    let (s, c) = n.dot(&k).sin_cos();
                    re_phi += w * c;
                    sin_phi += w * s;
                }
                SpectralNode {
                    k,
                    weight,
                    re_phi,
                    sin_phi,
                }
            })
            .collect();
        Ok(SpectralGramian {
            spec: spec.clone(),
            quadrature,
            nodes,
            stable: None,
        })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        self.quadrature
    }

    fn ensure_stable(&mut self) -> Result<()> {
        match self.stable {
            Some(true) => Ok(()),
            _ => {
                let report = is_stable(&self.spec, DEFAULT_STABILITY_GRID)?;
                self.stable = Some(report.stable);
                if report.stable {
                    Ok(())
                } else {
                    Err(Error::Unstable {
                        max_re_phi: report.max_re_phi,
                    })
                }
            }
        }
    }

    fn check_mode(&mut self, mode: GramianMode) -> Result<()> {
        match mode {
            GramianMode::Steady => self.ensure_stable(),
            GramianMode::AtTime(t) if t >= 0.0 && t.is_finite() => Ok(()),
            GramianMode::AtTime(t) => Err(Error::Domain {
                name: "t",
                value: t,
                domain: "[0, inf)",
            }),
        }
    }

    /// Single-driver entry with the driver at the origin and the node pair
    /// given relative to it.
    pub fn shifted_entry(&mut self, i_shift: &NodeIndex, j_shift: &NodeIndex, mode: GramianMode) -> Result<f64> {
        self.spec.check_node(i_shift)?;
        self.spec.check_node(j_shift)?;
        self.check_mode(mode)?;
        self.integrate(i_shift, j_shift, mode)
    }

    fn integrate(&self, i_shift: &NodeIndex, j_shift: &NodeIndex, mode: GramianMode) -> Result<f64> {
        if mode == GramianMode::AtTime(0.0) {
            return Ok(0.0);
        }
        let phase_i: Vec<(f64, f64)> = self.nodes.iter().map(|n| i_shift.dot(&n.k).sin_cos()).collect();
        let phase_j: Vec<(f64, f64)> = self.nodes.iter().map(|n| j_shift.dot(&n.k).sin_cos()).collect();

        // Partial sums per outer node, reduced in node order.
        let partial: Vec<f64> = self
            .nodes
            .par_iter()
            .zip(phase_i.par_iter())
            .map(|(ni, &(si, ci))| {
                let mut acc = 0.0;
                for (nj, &(sj, cj)) in self.nodes.iter().zip(&phase_j) {
                    let parts = IntegrandParts {
                        sigma: ni.re_phi + nj.re_phi,
                        omega: ni.sin_phi + nj.sin_phi,
                        alpha: ci * cj - si * sj,
                        beta: si * cj + ci * sj,
                    };
                    if parts.sigma.abs() + parts.omega.abs() < SINGULARITY_GUARD {
                        return Err(Error::SingularIntegrand {
                            ihat: ni.k.clone(),
                            jhat: nj.k.clone(),
                            magnitude: parts.sigma.abs() + parts.omega.abs(),
                        });
                    }
                    let value = match mode {
                        GramianMode::Steady => parts.steady(),
                        GramianMode::AtTime(t) => parts.at_time(t),
                    };
                    if !value.is_finite() {
                        return Err(Error::NonFiniteIntegrand {
                            ihat: ni.k.clone(),
                            jhat: nj.k.clone(),
                        });
                    }
                    acc += nj.weight * value;
                }
                Ok(ni.weight * acc)
            })
            .collect::<Result<_>>()?;
        let scale = (2.0 * PI).powi(-2 * self.spec.dim() as i32);
        Ok(scale * partial.iter().sum::<f64>())
    }

    /// Entry `W_ij` for a driver set: sum of single-driver entries.
    pub fn entry(&mut self, drivers: &DriverSet, i: &NodeIndex, j: &NodeIndex, mode: GramianMode) -> Result<f64> {
        self.spec.check_node(i)?;
        self.spec.check_node(j)?;
        self.check_drivers(drivers)?;
        self.check_mode(mode)?;
        drivers.iter().map(|a| self.integrate(&(i - a), &(j - a), mode)).sum()
    }

    fn check_drivers(&self, drivers: &DriverSet) -> Result<()> {
        drivers.iter().try_for_each(|a| self.spec.check_node(a))
    }

    /// Principal submatrix of the Gramian on the target set. Each distinct
    /// driver-relative pair is integrated once.
    pub fn output_gramian(&mut self, drivers: &DriverSet, targets: &TargetSet, mode: GramianMode) -> Result<OutputGramian> {
        self.check_drivers(drivers)?;
        targets.iter().try_for_each(|t| self.spec.check_node(t))?;
        self.check_mode(mode)?;

        let nt = targets.len();
        let mut keys: Vec<(NodeIndex, NodeIndex)> = Vec::new();
        let mut slot: HashMap<(NodeIndex, NodeIndex), usize> = HashMap::new();
        let mut layout: Vec<(usize, usize, Vec<usize>)> = Vec::new();
        for r in 0..nt {
            for c in r..nt {
                let mut ids = Vec::with_capacity(drivers.len());
                for a in drivers.iter() {
                    let key = canonical_pair(&targets.nodes()[r] - a, &targets.nodes()[c] - a);
                    let id = *slot.entry(key.clone()).or_insert_with(|| {
                        keys.push(key);
                        keys.len() - 1
                    });
                    ids.push(id);
                }
                layout.push((r, c, ids));
            }
        }
        let values: Vec<f64> = keys
            .par_iter()
            .map(|(i, j)| self.integrate(i, j, mode))
            .collect::<Result<_>>()?;

        let mut m = DMatrix::zeros(nt, nt);
        for (r, c, ids) in layout {
            let v: f64 = ids.iter().map(|&id| values[id]).sum();
            m[(r, c)] = v;
            m[(c, r)] = v;
        }
        OutputGramian::new(m, targets.clone())
    }
}

/// The entry is symmetric in the pair, so `(i, j)` and `(j, i)` share a key.
fn canonical_pair(i: NodeIndex, j: NodeIndex) -> (NodeIndex, NodeIndex) {
    if i <= j {
        (i, j)
    } else {
        (j, i)
    }
}

/// `W_ij(t)` for an infinite lattice.
pub fn gramian_entry_t(
    spec: &LatticeSpec,
    drivers: &DriverSet,
    i: &NodeIndex,
    j: &NodeIndex,
    t: f64,
    q: QuadratureConfig,
) -> Result<f64> {
    SpectralGramian::new(spec, q)?.entry(drivers, i, j, GramianMode::AtTime(t))
}

/// Steady-state `W_ij`; unstable lattices are rejected before integrating.
pub fn gramian_entry_ss(
    spec: &LatticeSpec,
    drivers: &DriverSet,
    i: &NodeIndex,
    j: &NodeIndex,
    q: QuadratureConfig,
) -> Result<f64> {
    SpectralGramian::new(spec, q)?.entry(drivers, i, j, GramianMode::Steady)
}

pub fn output_gramian(
    spec: &LatticeSpec,
    drivers: &DriverSet,
    targets: &TargetSet,
    mode: GramianMode,
    q: QuadratureConfig,
) -> Result<OutputGramian> {
    SpectralGramian::new(spec, q)?.output_gramian(drivers, targets, mode)
}
