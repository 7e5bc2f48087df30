//! Complete elliptic integrals by the arithmetic–geometric mean.
//!
//! Both functions take the parameter `m` (so `K(m) = ∫ dθ / sqrt(1 - m sin²θ)`
//! over `[0, pi/2]`), not the modulus `k = sqrt(m)`.

use std::f64::consts::FRAC_PI_2;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

use crate::error::{Error, Result};

/// `K` is rejected above this parameter value.
pub const K_PARAMETER_LIMIT: f64 = 1.0 - 1e-12;

/// Binary arbitrary-precision float used for the diagonal recursion.
pub type BigFloat = FBig<HalfEven, 2>;

struct Agm {
    mean: f64,
    /// `sum_n 2^(n-1) c_n²` with `c_0² = m`.
    correction: f64,
}

fn agm(m: f64) -> Agm {
    let mut a = 1.0;
    let mut b = (1.0 - m).sqrt();
    let mut correction = 0.5 * m;
    let mut pow = 0.5;
    for _ in 0..64 {
        let c = 0.5 * (a - b);
        pow *= 2.0;
        correction += pow * c * c;
        let next_b = (a * b).sqrt();
        a = 0.5 * (a + b);
        b = next_b;
        if c.abs() <= f64::EPSILON * a {
            break;
        }
    }
    Agm { mean: a, correction }
}

/// Complete elliptic integral of the first kind, `0 <= m < 1`.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !(0.0..=K_PARAMETER_LIMIT).contains(&m) {
        return Err(Error::Domain {
            name: "m",
            value: m,
            domain: "[0, 1 - 1e-12]",
        });
    }
    Ok(FRAC_PI_2 / agm(m).mean)
}

/// Complete elliptic integral of the second kind, `0 <= m <= 1`.
pub fn elliptic_e(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(Error::Domain {
            name: "m",
            value: m,
            domain: "[0, 1]",
        });
    }
    if m == 1.0 {
        return Ok(1.0);
    }
    let g = agm(m);
    Ok(FRAC_PI_2 / g.mean * (1.0 - g.correction))
}

/// `K(m) / pi` and `E(m) / pi` at `precision` bits. Dividing by `pi` leaves
/// only the AGM, so no constant tables are needed.
pub fn elliptic_ke_over_pi(m: &BigFloat, precision: usize) -> (BigFloat, BigFloat) {
    let one = big(1.0, precision);
    let half = big(0.5, precision);
    let mut a = one.clone();
    let mut b = (&one - m).sqrt();
    let mut correction = &half * m;
    let mut pow = half.clone();
    let eps = 2f64.powi(4 - precision as i32);
    for _ in 0..(4 * precision) {
        let c = &half * (&a - &b);
        pow = &pow * big(2.0, precision);
        correction = &correction + &pow * &c * &c;
        let next_b = (&a * &b).sqrt();
        a = &half * (&a + &b);
        b = next_b;
        if to_f64(&(&c / &a)).abs() <= eps {
            break;
        }
    }
    let k_over_pi = &half / &a;
    let e_over_pi = &k_over_pi * (&one - &correction);
    (k_over_pi, e_over_pi)
}

/// Exact conversion of an `f64` at the given working precision.
pub fn big(x: f64, precision: usize) -> BigFloat {
    BigFloat::try_from(x)
        .expect("finite f64")
        .with_precision(precision)
        .value()
}

pub fn to_f64(x: &BigFloat) -> f64 {
    x.to_f64().value()
}
