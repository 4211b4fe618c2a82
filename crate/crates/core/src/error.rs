use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid sector: {0}")]
    InvalidSector(String),
    #[error("configuration {0:#x} is not in the sector")]
    NotInSector(u64),
    #[error("sector dimension {dim} exceeds cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("eigensolver did not converge after {iterations} iterations (max residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("operators live on different sectors")]
    SectorMismatch,
    #[error("zero-norm state")]
    ZeroNorm,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("sign polynomial failed to reach tolerance: sup error {achieved:.3e} at degree {degree}")]
    PolynomialTolerance { degree: usize, achieved: f64 },
    #[error("empty hull")]
    EmptyHull,
    #[error("no code distance up to {max} meets the failure budget")]
    NoDistance { max: u32 },
    #[error("factory target {target:.3e} unreachable")]
    UnreachableTarget { target: f64 },
    #[error("extrapolated infidelity {0:.4} is out of range")]
    ExtrapolationRange(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
