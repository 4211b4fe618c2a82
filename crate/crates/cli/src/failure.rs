use std::fmt;

/// Process outcome other than success, with its exit status.
#[derive(Debug)]
pub enum Failure {
    /// Malformed or incomplete scenario.
    Schema(String),
    /// A computed result broke a stated invariant.
    Invariant(String),
    /// A problem larger than the configured caps.
    Resource(String),
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Schema(_) => 2,
            Failure::Invariant(_) => 3,
            Failure::Resource(_) => 4,
            Failure::Io(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Schema(m) => write!(f, "schema error: {m}"),
            Failure::Invariant(m) => write!(f, "invariant violation: {m}"),
            Failure::Resource(m) => write!(f, "resource cap: {m}"),
            Failure::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<dmd_core::Error> for Failure {
    fn from(e: dmd_core::Error) -> Self {
        use dmd_core::Error as E;
        match e {
            E::InvalidLattice(_) | E::InvalidSector(_) | E::InvalidArgument(_) | E::NotInSector(_) => Failure::Schema(e.to_string()),
            E::DimensionCap { .. } | E::NoConvergence { .. } | E::NoDistance { .. } => Failure::Resource(e.to_string()),
            _ => Failure::Invariant(e.to_string()),
        }
    }
}
