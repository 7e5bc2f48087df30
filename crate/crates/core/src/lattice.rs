//! Lattice graphs: an offset set with one weight per offset, repeated at
//! every integer site of `Z^d`.
//!
//! Node `i` receives an edge from `i + n` with weight `psi(n)` for every
//! offset `n`, so the drift acting on `x_i` is `sum_n psi(n) x_{i+n}`.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of grid points per dimension for [`is_stable`].
pub const DEFAULT_STABILITY_GRID: usize = 256;

/// Integer lattice site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeIndex(pub Vec<i64>);

impl NodeIndex {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        NodeIndex(coords.into())
    }

    pub fn scalar(i: i64) -> Self {
        NodeIndex(vec![i])
    }

    pub fn origin(d: usize) -> Self {
        NodeIndex(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Dot product with a wavenumber.
    pub fn dot(&self, k: &[f64]) -> f64 {
        self.0.iter().zip(k).map(|(&n, &x)| n as f64 * x).sum()
    }

    pub fn l1_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn is_origin(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }
}

impl fmt::Display for NodeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl Sub for &NodeIndex {
    type Output = NodeIndex;
    fn sub(self, rhs: &NodeIndex) -> NodeIndex {
        debug_assert_eq!(self.dim(), rhs.dim());
        NodeIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Add for &NodeIndex {
    type Output = NodeIndex;
    fn add(self, rhs: &NodeIndex) -> NodeIndex {
        debug_assert_eq!(self.dim(), rhs.dim());
        NodeIndex(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Neg for &NodeIndex {
    type Output = NodeIndex;
    fn neg(self) -> NodeIndex {
        NodeIndex(self.0.iter().map(|c| -c).collect())
    }
}

/// A wavenumber in `[-pi, pi]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint(Vec<f64>);

impl SpectralPoint {
    pub fn new(k: impl Into<Vec<f64>>) -> Result<Self> {
        let k = k.into();
        if let Some(&bad) = k.iter().find(|x| x.is_nan() || x.abs() > PI) {
            return Err(Error::Domain {
                name: "k",
                value: bad,
                domain: "[-pi, pi]",
            });
        }
        Ok(SpectralPoint(k))
    }

    pub fn zero(d: usize) -> Self {
        SpectralPoint(vec![0.0; d])
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Validated description of a lattice graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    d: usize,
    offsets: Vec<NodeIndex>,
    weights: Vec<f64>,
}

/// On-disk form of a lattice spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpecFile {
    pub d: usize,
    pub offsets: Vec<Vec<i64>>,
    pub weights: Vec<f64>,
}

impl LatticeSpec {
    pub fn new(d: usize, offsets: Vec<Vec<i64>>, weights: Vec<f64>) -> Result<Self> {
        build_lattice_spec(d, offsets, weights)
    }

    /// One-dimensional nearest-neighbor lattice: self-loop `p`, coupling `s`
    /// to both neighbors.
    pub fn nearest_neighbor_1d(p: f64, s: f64) -> Self {
        LatticeSpec {
            d: 1,
            offsets: vec![
                NodeIndex::scalar(0),
                NodeIndex::scalar(-1),
                NodeIndex::scalar(1),
            ],
            weights: vec![p, s, s],
        }
    }

    /// Nearest-neighbor lattice on `Z^d`: self-loop `p`, coupling `s` along
    /// every axis in both directions.
    pub fn nearest_neighbor(d: usize, p: f64, s: f64) -> Self {
        let mut offsets = vec![NodeIndex::origin(d)];
        let mut weights = vec![p];
        for axis in 0..d {
            for sign in [1, -1] {
                let mut n = vec![0; d];
                n[axis] = sign;
                offsets.push(NodeIndex(n));
                weights.push(s);
            }
        }
        LatticeSpec { d, offsets, weights }
    }

    /// Decoupled nodes with self-loop `p` only.
    pub fn isolated(d: usize, p: f64) -> Self {
        LatticeSpec {
            d,
            offsets: vec![NodeIndex::origin(d)],
            weights: vec![p],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn offsets(&self) -> &[NodeIndex] {
        &self.offsets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn terms(&self) -> impl Iterator<Item = (&NodeIndex, f64)> {
        self.offsets.iter().zip(self.weights.iter().copied())
    }

    pub fn weight(&self, offset: &NodeIndex) -> Option<f64> {
        self.terms().find(|(n, _)| *n == offset).map(|(_, w)| w)
    }

    /// `sum |psi(n)|`.
    pub fn weight_l1(&self) -> f64 {
        self.weights.iter().map(|w| w.abs()).sum()
    }

    /// Lipschitz constant of `Re phi` with respect to the Euclidean norm of `k`.
    pub fn lipschitz_bound(&self) -> f64 {
        self.terms()
            .map(|(n, w)| {
                let norm = n.0.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
                norm * w.abs()
            })
            .sum()
    }

    /// True when `psi(n) = psi(-n)` for every offset.
    pub fn is_symmetric(&self) -> bool {
        self.terms().all(|(n, w)| self.weight(&-n) == Some(w))
    }

    /// Returns a copy with the self-loop weight replaced (added if absent).
    pub fn with_self_loop(&self, p: f64) -> Self {
        let origin = NodeIndex::origin(self.d);
        let mut spec = self.clone();
        match spec.offsets.iter().position(|n| *n == origin) {
            Some(k) => spec.weights[k] = p,
            None => {
                spec.offsets.push(origin);
                spec.weights.push(p);
            }
        }
        spec
    }

    pub fn to_file(&self) -> LatticeSpecFile {
        LatticeSpecFile {
            d: self.d,
            offsets: self.offsets.iter().map(|n| n.0.clone()).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn from_file(file: LatticeSpecFile) -> Result<Self> {
        build_lattice_spec(file.d, file.offsets, file.weights)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: LatticeSpecFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidLattice(format!("malformed spec file: {e}")))?;
        Self::from_file(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("lattice spec serializes")
    }

    pub(crate) fn check_node(&self, i: &NodeIndex) -> Result<()> {
        if i.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: i.dim(),
            });
        }
        Ok(())
    }
}

/// Validated constructor for a lattice from raw offsets and weights.
pub fn build_lattice_spec(d: usize, offsets: Vec<Vec<i64>>, weights: Vec<f64>) -> Result<LatticeSpec> {
    if d == 0 {
        return Err(Error::InvalidLattice("dimension must be positive".into()));
    }
    if offsets.is_empty() {
        return Err(Error::InvalidLattice("neighbor set is empty".into()));
    }
    if offsets.len() != weights.len() {
        return Err(Error::InvalidLattice(format!(
            "{} offsets but {} weights",
            offsets.len(),
            weights.len()
        )));
    }
    let mut seen = HashSet::new();
    for n in &offsets {
        if n.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: n.len(),
            });
        }
        if !seen.insert(n.clone()) {
            return Err(Error::InvalidLattice(format!("duplicate offset {n:?}")));
        }
    }
    if let Some(w) = weights.iter().find(|w| !w.is_finite()) {
        return Err(Error::InvalidLattice(format!("non-finite weight {w}")));
    }
    Ok(LatticeSpec {
        d,
        offsets: offsets.into_iter().map(NodeIndex).collect(),
        weights,
    })
}

/// `phi(k) = sum_n psi(n) exp(-i n.k)`.
pub fn lattice_function(spec: &LatticeSpec, k: &SpectralPoint) -> Complex64 {
    debug_assert_eq!(spec.dim(), k.dim());
    spec.terms()
        .map(|(n, w)| {
            let phase = n.dot(k.components());
            Complex64::new(w * phase.cos(), -w * phase.sin())
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub stable: bool,
    /// Maximum of `Re phi` over the grid.
    pub max_re_phi: f64,
    /// Largest amount `Re phi` can exceed the grid maximum between grid points.
    pub grid_margin: f64,
}

impl StabilityReport {
    /// Stability holds everywhere, not just on the grid.
    pub fn certified(&self) -> bool {
        self.max_re_phi + self.grid_margin < 0.0
    }
}

/// Checks `max Re phi(k) < 0` on a uniform grid of `grid_per_dim^d` points
/// (the grid includes `k = 0` and `k = -pi`).
pub fn is_stable(spec: &LatticeSpec, grid_per_dim: usize) -> Result<StabilityReport> {
    if grid_per_dim < 8 {
        return Err(Error::InvalidArgument(format!(
            "stability grid needs at least 8 points per dimension, got {grid_per_dim}"
        )));
    }
    let d = spec.dim();
    let h = 2.0 * PI / grid_per_dim as f64;
    let axis: Vec<f64> = (0..grid_per_dim).map(|j| -PI + h * j as f64).collect();

    let mut max_re = f64::NEG_INFINITY;
    let mut idx = vec![0usize; d];
    let mut k = vec![0.0; d];
    loop {
        for (kc, &ic) in k.iter_mut().zip(&idx) {
            *kc = axis[ic];
        }
        let re: f64 = spec.terms().map(|(n, w)| w * n.dot(&k).cos()).sum();
        max_re = max_re.max(re);
        if !advance(&mut idx, grid_per_dim) {
            break;
        }
    }
    let grid_margin = spec.lipschitz_bound() * h * (d as f64).sqrt() / 2.0;
    Ok(StabilityReport {
        stable: max_re < 0.0,
        max_re_phi: max_re,
        grid_margin,
    })
}

/// Odometer increment over `[0, n)^d`; returns false after the last index.
pub(crate) fn advance(idx: &mut [usize], n: usize) -> bool {
    for c in idx.iter_mut().rev() {
        *c += 1;
        if *c < n {
            return true;
        }
        *c = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1b(p: f64) -> LatticeSpec {
        LatticeSpec::new(
            2,
            vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![-1, -1]],
            vec![p, 0.5, 0.7, 0.3],
        )
        .unwrap()
    }

    #[test]
    fn builds_nn1d_and_fig1b() {
        let nn = LatticeSpec::new(1, vec![vec![0], vec![-1], vec![1]], vec![-3.0, 1.0, 1.0]).unwrap();
        assert_eq!(nn, LatticeSpec::nearest_neighbor_1d(-3.0, 1.0));
        assert!(nn.is_symmetric());
        let b = fig1b(-4.0);
        assert_eq!(b.offsets().len(), 4);
        assert!(!b.is_symmetric());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            LatticeSpec::new(1, vec![vec![0], vec![0]], vec![1.0, 2.0]),
            Err(Error::InvalidLattice(_))
        ));
        assert!(matches!(
            LatticeSpec::new(2, vec![vec![0]], vec![1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        assert!(LatticeSpec::new(1, vec![], vec![]).is_err());
        assert!(LatticeSpec::new(1, vec![vec![0]], vec![1.0, 2.0]).is_err());
        assert!(LatticeSpec::new(0, vec![vec![]], vec![1.0]).is_err());
    }

    #[test]
    fn lattice_function_values() {
        let nn = LatticeSpec::nearest_neighbor_1d(-3.0, 1.0);
        let at0 = lattice_function(&nn, &SpectralPoint::zero(1));
        assert!((at0.re - (-1.0)).abs() < 1e-15 && at0.im.abs() < 1e-15);
        let atpi = lattice_function(&nn, &SpectralPoint::new(vec![PI]).unwrap());
        assert!((atpi.re - (-5.0)).abs() < 1e-14 && atpi.im.abs() < 1e-14);
        let iso = LatticeSpec::isolated(1, -2.5);
        let v = lattice_function(&iso, &SpectralPoint::new(vec![1.3]).unwrap());
        assert_eq!(v, Complex64::new(-2.5, 0.0));
    }

    #[test]
    fn spectral_point_range() {
        assert!(SpectralPoint::new(vec![4.0]).is_err());
        assert!(SpectralPoint::new(vec![f64::NAN]).is_err());
        assert!(SpectralPoint::new(vec![-PI, PI]).is_ok());
    }

    #[test]
    fn stability_examples() {
        let r = is_stable(&LatticeSpec::nearest_neighbor_1d(-3.0, 1.0), 256).unwrap();
        assert!(r.stable);
        assert!((r.max_re_phi + 1.0).abs() < 1e-14);
        assert!(r.certified());

        let r = is_stable(&LatticeSpec::nearest_neighbor_1d(-2.0, 1.0), 256).unwrap();
        assert!(!r.stable);
        assert!(r.max_re_phi.abs() < 1e-14);

        let r = is_stable(&LatticeSpec::isolated(1, -1.0), 256).unwrap();
        assert!(r.stable && r.max_re_phi == -1.0);

        assert!(is_stable(&LatticeSpec::isolated(1, -1.0), 4).is_err());
    }

    #[test]
    fn directed_lattice_stability_uses_real_part() {
        // Re phi = p + 0.5 cos k2 + 0.7 cos k1 + 0.3 cos(k1 + k2), maximized
        // at k = 0 with value p + 1.5.
        let r = is_stable(&fig1b(-1.6), 64).unwrap();
        assert!(r.stable);
        assert!((r.max_re_phi - (-0.1)).abs() < 1e-12, "{}", r.max_re_phi);
        assert!(!is_stable(&fig1b(-1.4), 64).unwrap().stable);
    }

    #[test]
    fn json_round_trip() {
        let spec = fig1b(-4.0);
        let back = LatticeSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(spec, back);
        assert!(LatticeSpec::from_json("{\"d\": 1}").is_err());
    }
}
