use std::fmt;

/// Machine-readable reason attached to every failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Reason {
    Unstable,
    IntegerC,
    OutOfRange,
    Domain,
    Pole,
    DegenerateSpectrum,
    Cancellation,
    Complex,
    Branch,
    Singular,
    NoConvergence,
    OutOfRegion,
    SlowConvergence,
}

impl Reason {
    pub fn code(self) -> &'static str {
        match self {
            Reason::Unstable => "UNSTABLE",
            Reason::IntegerC => "INTEGER_C",
            Reason::OutOfRange => "OUT_OF_RANGE",
            Reason::Domain => "DOMAIN",
            Reason::Pole => "POLE",
            Reason::DegenerateSpectrum => "DEGENERATE_SPECTRUM",
            Reason::Cancellation => "CANCELLATION",
            Reason::Complex => "COMPLEX",
            Reason::Branch => "BRANCH",
            Reason::Singular => "SINGULAR",
            Reason::NoConvergence => "NO_CONVERGENCE",
            Reason::OutOfRegion => "OUT_OF_REGION",
            Reason::SlowConvergence => "SLOW_CONVERGENCE",
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{reason}: {detail}")]
pub struct Error {
    pub reason: Reason,
    pub detail: String,
}

impl Error {
    pub fn new(reason: Reason, detail: impl Into<String>) -> Self {
        Error { reason, detail: detail.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn fail<T>(reason: Reason, detail: impl Into<String>) -> Result<T> {
    Err(Error::new(reason, detail))
}
