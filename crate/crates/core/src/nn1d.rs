//! The one-dimensional nearest-neighbor lattice: self-loop `p < -2s`,
//! coupling `s > 0` to both neighbors.
//!
//! With the driver at the origin the steady-state Gramian entries are
//!
//! ```text
//! G(i, j) = -(1/pi²) ∫∫_[0,pi]² cos(i x) cos(j y) / (2p + 2s cos x + 2s cos y) dx dy
//! ```
//!
//! and the diagonal obeys a three-term recursion in `alpha = p²/(2s²) - 1`
//! seeded by complete elliptic integrals of parameter `4s²/p²`. The diagonal
//! decays like `z^i` with `z = alpha - sqrt(alpha² - 1)`.
//!
//! The decaying diagonal is the subdominant solution of its recursion, so the
//! forward recursion amplifies relative error by about `z^(-2i)`. It is run
//! in binary floating point wide enough to absorb that loss, and checked
//! against a second run 64 bits wider.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::metrics::OutputGramian;
use crate::quadrature::{gauss_legendre, QuadratureConfig, Rule, Scheme};
use crate::spectral::{DriverSet, TargetSet};
use crate::special::{big, elliptic_e, elliptic_k, elliptic_ke_over_pi, to_f64, BigFloat};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NN1DParams {
    p: f64,
    s: f64,
}

impl NN1DParams {
    pub fn new(p: f64, s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::Domain {
                name: "s",
                value: s,
                domain: "(0, inf)",
            });
        }
        if !(p.is_finite() && p + 2.0 * s < 0.0) {
            return Err(Error::Unstable { max_re_phi: p + 2.0 * s });
        }
        Ok(NN1DParams { p, s })
    }

    /// Takes the self-loop magnitude; the weight itself is `-p_abs`.
    pub fn from_magnitude(p_abs: f64, s: f64) -> Result<Self> {
        Self::new(-p_abs, s)
    }

    /// Parameters with the given `alpha` and coupling `s`.
    pub fn from_alpha(alpha: f64, s: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::Domain {
                name: "alpha",
                value: alpha,
                domain: "(1, inf)",
            });
        }
        Self::new(-s * (2.0 * (alpha + 1.0)).sqrt(), s)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn alpha(&self) -> f64 {
        alpha(self)
    }

    pub fn decay_rate(&self) -> f64 {
        decay_rate(self.alpha()).expect("valid parameters have alpha > 1")
    }

    /// `4s²/p²`, the elliptic-integral parameter of the seeds.
    pub fn elliptic_parameter(&self) -> f64 {
        4.0 * self.s * self.s / (self.p * self.p)
    }

    pub fn lattice(&self) -> LatticeSpec {
        LatticeSpec::nearest_neighbor_1d(self.p, self.s)
    }
}

pub fn alpha(params: &NN1DParams) -> f64 {
    params.p * params.p / (2.0 * params.s * params.s) - 1.0
}

/// Asymptotic per-step ratio `alpha - sqrt(alpha² - 1)`, the root of
/// `z² - 2 alpha z + 1 = 0` inside the unit interval.
pub fn decay_rate(alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= 1.0 {
        return Err(Error::Domain {
            name: "alpha",
            value: alpha,
            domain: "(1, inf)",
        });
    }
    if alpha.is_infinite() {
        return Ok(0.0);
    }
    // Same root without the cancellation of alpha - sqrt(alpha² - 1).
    Ok(1.0 / (alpha + ((alpha - 1.0) * (alpha + 1.0)).sqrt()))
}

/// `G(i, j)` from the folded double integral over `[0, pi]²`.
pub fn entry_quadrature(params: &NN1DParams, i_shift: i64, j_shift: i64, q: QuadratureConfig) -> Result<f64> {
    q.validate()?;
    let rule = folded_rule(q);
    let (p, s) = (params.p, params.s);
    let ci: Vec<f64> = rule.nodes.iter().map(|&x| (i_shift as f64 * x).cos()).collect();
    let cj: Vec<f64> = rule.nodes.iter().map(|&x| (j_shift as f64 * x).cos()).collect();
    let cos: Vec<f64> = rule.nodes.iter().map(|x| x.cos()).collect();
    let mut acc = 0.0;
    for a in 0..rule.len() {
        let mut inner = 0.0;
        for b in 0..rule.len() {
            inner += rule.weights[b] * cj[b] / (2.0 * p + 2.0 * s * cos[a] + 2.0 * s * cos[b]);
        }
        acc += rule.weights[a] * ci[a] * inner;
    }
    Ok(-acc / (PI * PI))
}

fn folded_rule(q: QuadratureConfig) -> Rule {
    let n = q.points_per_dim;
    match q.scheme {
        Scheme::GaussLegendre => gauss_legendre(n).scaled(0.0, PI),
        Scheme::TensorTrapezoid => {
            // Closed trapezoid on [0, pi]; spectrally accurate for the even,
            // 2pi-periodic integrand.
            let h = PI / (n - 1) as f64;
            let mut weights = vec![h; n];
            weights[0] *= 0.5;
            weights[n - 1] *= 0.5;
            Rule {
                nodes: (0..n).map(|k| h * k as f64).collect(),
                weights,
            }
        }
    }
}

/// Shifted-contour quadrature settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourConfig {
    pub points: usize,
    /// Fraction of the distance to the nearest pole the contour moves.
    pub shift_fraction: f64,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig {
            points: 256,
            shift_fraction: 0.8,
        }
    }
}

/// `G(i, j)` by the periodic trapezoid rule with both integration contours
/// moved into the complex plane, `x -> x - i y`.
///
/// The integrand is `2pi`-periodic and analytic in the strip the contour
/// crosses, so the integral is unchanged; along the shifted contour the
/// oscillating factor `exp(-i m x)` carries the exponentially small magnitude
/// `exp(-m y)` explicitly. This resolves entries far below the rounding
/// floor of the real-axis rule, which only sees them as cancellation.
pub fn entry_contour(params: &NN1DParams, i_shift: i64, j_shift: i64, cfg: ContourConfig) -> Result<f64> {
    if cfg.points < 4 || !(0.0..1.0).contains(&cfg.shift_fraction) {
        return Err(Error::InvalidArgument(format!("bad contour settings {cfg:?}")));
    }
    let (m, n) = (i_shift.unsigned_abs() as f64, j_shift.unsigned_abs() as f64);
    let (y1, y2) = contour_shifts(params, m, n, cfg.shift_fraction);
    let (p, s) = (params.p, params.s);
    let h = 2.0 * PI / cfg.points as f64;
    let xs: Vec<f64> = (0..cfg.points).map(|k| -PI + h * k as f64).collect();
    let axis = |y: f64, order: f64| -> Vec<(Complex64, Complex64)> {
        xs.iter()
            .map(|&x| {
                let cos_z = Complex64::new(x.cos() * y.cosh(), x.sin() * y.sinh());
                let (sn, cs) = (order * x).sin_cos();
                (cos_z, Complex64::new(cs, -sn))
            })
            .collect()
    };
    let (ax1, ax2) = (axis(y1, m), axis(y2, n));
    let mut acc = Complex64::new(0.0, 0.0);
    for &(c1, e1) in &ax1 {
        let mut inner = Complex64::new(0.0, 0.0);
        for &(c2, e2) in &ax2 {
            inner += e2 / (2.0 * p + 2.0 * s * (c1 + c2));
        }
        acc += e1 * inner;
    }
    let mean = acc / (cfg.points * cfg.points) as f64;
    Ok(-mean.re * (-(m * y1 + n * y2)).exp())
}

/// Contour offsets `(y1, y2)`: the point on `cosh y1 + cosh y2 = |p|/s`
/// (where the denominator first vanishes) maximizing `m y1 + n y2`, scaled by
/// `fraction`.
fn contour_shifts(params: &NN1DParams, m: f64, n: f64, fraction: f64) -> (f64, f64) {
    if m == 0.0 && n == 0.0 {
        return (0.0, 0.0);
    }
    let target = -params.p / params.s;
    // On the optimum sinh y1 : sinh y2 = m : n; cosh(asinh(x)) = sqrt(1 + x²).
    let g = |u: f64| (1.0 + (m * u).powi(2)).sqrt() + (1.0 + (n * u).powi(2)).sqrt() - target;
    let (mut lo, mut hi) = (0.0, target / m.max(n));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (fraction * (m * lo).asinh(), fraction * (n * lo).asinh())
}

/// Output Gramian of the chain over `targets`, each entry a sum over drivers
/// of contour-quadrature values `G(i - a, j - a)`.
pub fn nn1d_output_gramian(
    params: &NN1DParams,
    drivers: &DriverSet,
    targets: &TargetSet,
    cfg: ContourConfig,
) -> Result<OutputGramian> {
    for set in [drivers, targets] {
        if set.dim() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: set.dim() });
        }
    }
    let scalar = |n: &crate::lattice::NodeIndex| n.coords()[0];
    let nt = targets.len();
    let mut pairs: Vec<(i64, i64)> = Vec::new();
    for r in 0..nt {
        for c in r..nt {
            for a in drivers.iter() {
                let (i, j) = (scalar(&targets.nodes()[r]) - scalar(a), scalar(&targets.nodes()[c]) - scalar(a));
                let (i, j) = (i.abs().min(j.abs()), i.abs().max(j.abs()));
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| entry_contour(params, i, j, cfg))
        .collect::<Result<_>>()?;
    let lookup = |i: i64, j: i64| {
        let key = (i.abs().min(j.abs()), i.abs().max(j.abs()));
        values[pairs.binary_search(&key).expect("pair was evaluated")]
    };
    let m = DMatrix::from_fn(nt, nt, |r, c| {
        drivers
            .iter()
            .map(|a| lookup(scalar(&targets.nodes()[r]) - scalar(a), scalar(&targets.nodes()[c]) - scalar(a)))
            .sum()
    });
    OutputGramian::new(m, targets.clone())
}

/// Convention for the argument of `K` and `E` in the seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EllipticConvention {
    /// Argument is the parameter `m = 4s²/p²`.
    Parameter,
    /// Argument is the modulus `k = 4s²/p²`, i.e. `m = k²`.
    Modulus,
}

/// `(G(0,0), G(1,1))` from the elliptic-integral closed forms.
pub fn diagonal_seeds(params: &NN1DParams) -> (f64, f64) {
    seeds_with_convention(params, EllipticConvention::Parameter).expect("parameter is inside (0, 1)")
}

pub fn seeds_with_convention(params: &NN1DParams, convention: EllipticConvention) -> Result<(f64, f64)> {
    let arg = params.elliptic_parameter();
    let m = match convention {
        EllipticConvention::Parameter => arg,
        EllipticConvention::Modulus => arg * arg,
    };
    let (k, e) = (elliptic_k(m)?, elliptic_e(m)?);
    let (pa, s2) = (params.p.abs(), params.s * params.s);
    let g00 = k / (PI * pa);
    let g11 = (pa / (2.0 * PI * s2) - 1.0 / (PI * pa)) * k - pa / (2.0 * PI * s2) * e;
    Ok((g00, g11))
}

/// Decides which elliptic convention reproduces the quadrature values of
/// `G(0,0)` and `G(1,1)` to `tolerance` (relative).
pub fn certify_convention(params: &NN1DParams, q: QuadratureConfig, tolerance: f64) -> Result<EllipticConvention> {
    let g00 = entry_quadrature(params, 0, 0, q)?;
    let g11 = entry_quadrature(params, 1, 1, q)?;
    for convention in [EllipticConvention::Parameter, EllipticConvention::Modulus] {
        let (a, b) = seeds_with_convention(params, convention)?;
        if ((a - g00) / g00).abs() <= tolerance && ((b - g11) / g11).abs() <= tolerance {
            return Ok(convention);
        }
    }
    Err(Error::InvalidArgument(
        "neither elliptic convention matches the quadrature seeds".into(),
    ))
}

/// Diagonal entries `G(0,0) ..= G(trusted_through, trusted_through)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSeries {
    pub values: Vec<f64>,
    pub requested: usize,
    /// Last index whose value passed the trust checks; equals `requested`
    /// unless the series was truncated.
    pub trusted_through: usize,
    pub precision_bits: usize,
}

impl DiagonalSeries {
    pub fn get(&self, index: usize) -> Option<f64> {
        self.values.get(index).copied()
    }

    pub fn is_complete(&self) -> bool {
        self.trusted_through == self.requested
    }
}

/// Working precision for `max_index` steps: the expected `z^(-2i)` loss plus
/// 128 guard bits.
pub fn recursion_precision(params: &NN1DParams, max_index: usize) -> usize {
    let loss = 2.0 * max_index as f64 * (-params.decay_rate().log2());
    128 + loss.ceil() as usize
}

fn recursion_big(params: &NN1DParams, max_index: usize, precision: usize) -> Vec<BigFloat> {
    let p = big(params.p, precision);
    let s = big(params.s, precision);
    let pa = big(params.p.abs(), precision);
    let s2 = &s * &s;
    let two = big(2.0, precision);
    let one = big(1.0, precision);
    let m = big(4.0, precision) * &s2 / (&p * &p);
    let alpha = &p * &p / (&two * &s2) - &one;

    let (k, e) = elliptic_ke_over_pi(&m, precision);
    let coef = &pa / (&two * &s2);
    let mut g = Vec::with_capacity(max_index + 1);
    g.push(&k / &pa);
    g.push((&coef - &one / &pa) * &k - &coef * &e);
    for i in 1..max_index {
        let denom = big((2 * i + 1) as f64, precision);
        let a = big((4 * i) as f64, precision) / &denom * &alpha;
        let b = big((2 * i - 1) as f64, precision) / &denom;
        let next = a * &g[i] - b * &g[i - 1];
        g.push(next);
    }
    g.truncate(max_index + 1);
    g
}

/// Forward recursion for the diagonal, in extended precision.
pub fn diagonal_recursion(params: &NN1DParams, max_index: usize) -> Result<DiagonalSeries> {
    if max_index < 1 {
        return Err(Error::InvalidArgument("max_index must be at least 1".into()));
    }
    let precision = recursion_precision(params, max_index);
    let base = recursion_big(params, max_index, precision);
    let wide = recursion_big(params, max_index, precision + 64);
    let values: Vec<f64> = base.iter().map(to_f64).collect();
    let agree: Vec<bool> = base
        .iter()
        .zip(&wide)
        .map(|(a, b)| {
            let rel = to_f64(&((a - b) / b));
            rel.abs() <= 1e-15
        })
        .collect();
    Ok(trusted_prefix(values, max_index, precision, Some(&agree)))
}

/// Forward recursion in `f64`, trusted only while values stay positive and
/// decreasing. Kept to measure how far plain double precision gets.
pub fn diagonal_recursion_f64(params: &NN1DParams, max_index: usize) -> Result<DiagonalSeries> {
    if max_index < 1 {
        return Err(Error::InvalidArgument("max_index must be at least 1".into()));
    }
    let alpha = params.alpha();
    let (g00, g11) = diagonal_seeds(params);
    let mut g = vec![g00, g11];
    for i in 1..max_index {
        let fi = i as f64;
        g.push(4.0 * fi / (2.0 * fi + 1.0) * alpha * g[i] - (2.0 * fi - 1.0) / (2.0 * fi + 1.0) * g[i - 1]);
    }
    g.truncate(max_index + 1);
    Ok(trusted_prefix(g, max_index, 53, None))
}

fn trusted_prefix(mut values: Vec<f64>, requested: usize, precision_bits: usize, agree: Option<&[bool]>) -> DiagonalSeries {
    let mut last = 0;
    for k in 0..values.len() {
        let positive = values[k] > 0.0 && values[k].is_finite();
        let decreasing = k == 0 || values[k] < values[k - 1];
        let stable = agree.is_none_or(|a| a[k]);
        if !(positive && decreasing && stable) {
            break;
        }
        last = k;
    }
    if last < requested {
        log::warn!(
            "diagonal recursion lost accuracy after index {last} of {requested} ({precision_bits}-bit arithmetic); truncating"
        );
    }
    values.truncate(last + 1);
    DiagonalSeries {
        values,
        requested,
        trusted_through: last,
        precision_bits,
    }
}

/// Estimate `value * z^(index - calibration_index)`, anchored at a computed
/// diagonal value. An asymptotic estimate, not an exact entry.
pub fn asymptotic_diagonal(params: &NN1DParams, calibration_index: usize, calibration_value: f64, index: usize) -> f64 {
    let z = params.decay_rate();
    calibration_value * z.powi(index as i32 - calibration_index as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3() -> NN1DParams {
        NN1DParams::new(-3.0, 1.0).unwrap()
    }

    #[test]
    fn alpha_values() {
        assert_eq!(p3().alpha(), 3.5);
        assert_eq!(NN1DParams::new(-10.0, 1.0).unwrap().alpha(), 49.0);
        assert_eq!(NN1DParams::from_magnitude(3.0, 1.0).unwrap(), p3());
        assert!(NN1DParams::new(-2.0, 1.0).is_err());
        assert!(NN1DParams::new(-3.0, 0.0).is_err());
        assert!(NN1DParams::new(-3.0, -1.0).is_err());
        let a = NN1DParams::from_alpha(1.5, 1.0).unwrap();
        assert!((a.alpha() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn decay_rate_values() {
        let z = decay_rate(3.5).unwrap();
        assert!((z - (3.5 - 11.25f64.sqrt())).abs() < 1e-15);
        assert!((z - 0.145898).abs() < 1e-6);
        assert!((z * z - 7.0 * z + 1.0).abs() < 1e-15);
        assert!(decay_rate(1.0).is_err());
        assert!(decay_rate(0.5).is_err());
        assert!(decay_rate(1.0 + 1e-12).unwrap() > 0.999);
        let big = 1e8;
        assert!((decay_rate(big).unwrap() * 2.0 * big - 1.0).abs() < 1e-12);
    }

    #[test]
    fn folded_integral_symmetries() {
        let q = QuadratureConfig::gauss(48);
        let g10 = entry_quadrature(&p3(), 1, 0, q).unwrap();
        let g01 = entry_quadrature(&p3(), 0, 1, q).unwrap();
        let gm10 = entry_quadrature(&p3(), -1, 0, q).unwrap();
        assert!((g10 - g01).abs() < 1e-16);
        assert!((g10 - gm10).abs() < 1e-16);
    }

    #[test]
    fn weak_coupling_limit() {
        let params = NN1DParams::new(-3.0, 1e-9).unwrap();
        let q = QuadratureConfig::gauss(16);
        assert!((entry_quadrature(&params, 0, 0, q).unwrap() - 1.0 / 6.0).abs() < 1e-9);
        assert!(entry_quadrature(&params, 1, 2, q).unwrap().abs() < 1e-9);
        let (g00, g11) = diagonal_seeds(&params);
        assert!((g00 - 1.0 / 6.0).abs() < 1e-9);
        assert!(g11.abs() < 1e-9);
    }

    #[test]
    fn seed_g00_closed_form() {
        let (g00, _) = diagonal_seeds(&p3());
        let expected = elliptic_k(4.0 / 9.0).unwrap() / (3.0 * PI);
        assert_eq!(g00, expected);
    }

    #[test]
    fn contour_matches_real_axis_for_moderate_entries() {
        let q = QuadratureConfig::gauss(64);
        for (i, j) in [(0, 0), (1, 1), (2, 0), (3, 1), (4, 4)] {
            let real = entry_quadrature(&p3(), i, j, q).unwrap();
            let shifted = entry_contour(&p3(), i, j, ContourConfig::default()).unwrap();
            assert!((real - shifted).abs() < 1e-15, "({i},{j}): {real} vs {shifted}");
        }
    }

    #[test]
    fn recursion_step_formula() {
        let s = diagonal_recursion(&p3(), 2).unwrap();
        let expected = 4.0 / 3.0 * 3.5 * s.values[1] - s.values[0] / 3.0;
        assert!((s.values[2] / expected - 1.0).abs() < 1e-13);
    }

    #[test]
    fn recursion_needs_at_least_one_step() {
        assert!(diagonal_recursion(&p3(), 0).is_err());
    }

    #[test]
    fn f64_recursion_truncates_when_positivity_fails() {
        let params = NN1DParams::from_alpha(10.0, 1.0).unwrap();
        let s = diagonal_recursion_f64(&params, 40).unwrap();
        assert!(!s.is_complete());
        assert!(s.trusted_through < 20);
        assert!(diagonal_recursion(&params, 40).unwrap().is_complete());
    }

    #[test]
    fn asymptote_equals_calibration_value_at_anchor() {
        assert_eq!(asymptotic_diagonal(&p3(), 10, 2.5e-10, 10), 2.5e-10);
        let z = p3().decay_rate();
        assert!((asymptotic_diagonal(&p3(), 10, 1.0, 12) - z * z).abs() < 1e-17);
    }
}
