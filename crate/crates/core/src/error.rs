use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lattice is not stable: max Re phi(k) = {max_re_phi:e} (must be < 0)")]
    Unstable { max_re_phi: f64 },

    #[error("singular integrand at quadrature node ihat={ihat:?}, jhat={jhat:?} (|sigma|+|omega| = {magnitude:e})")]
    SingularIntegrand {
        ihat: Vec<f64>,
        jhat: Vec<f64>,
        magnitude: f64,
    },

    #[error("non-finite integrand at quadrature node ihat={ihat:?}, jhat={jhat:?}")]
    NonFiniteIntegrand { ihat: Vec<f64>, jhat: Vec<f64> },

    #[error("target set is not output controllable: smallest eigenvalue {min_eigenvalue:e}")]
    OutputUncontrollable { min_eigenvalue: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("drift matrix is not Hurwitz: {detail}")]
    NotHurwitz { detail: String },

    #[error("node {0} lies outside the truncation window")]
    OutsideWindow(String),

    #[error("parameter {name} = {value} outside the domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("Lyapunov residual {residual:e} exceeds {tolerance:e}")]
    LyapunovResidual { residual: f64, tolerance: f64 },
}
