use alloc::string::String;
use core::fmt;

/// Errors shared across the crate. Every operation with a documented
/// failure mode reports it through one of these variants; internal
/// invariant violations panic instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// p-adic valuation requested for the zero rational.
    ValuationAtZero,
    /// A vector mentions a basis symbol the presentation does not carry.
    ForeignSymbol(String),
    /// A vector expected to lie in the presented group does not.
    NotAMember,
    /// A vector expected to lie in a designated rational span does not.
    OutsideSpan(&'static str),
    /// A branch family contains a repeated branch.
    FamilyNotDistinct,
    /// The prime scheme does not carry enough primes for the requested build.
    InsufficientPrimes(String),
    /// Two presentations being combined share a prime they must not share.
    PrimeCollision(u64),
    /// Two presentations being compared were built over different schemes.
    SchemeMismatch,
    /// The divisible-part chain did not stabilize within the depth cap.
    DivisibleChainUnstable { prime: u64, depth: u32 },
    /// A build-time structural invariant failed; the payload names it.
    InvariantViolation(String),
    /// A finite lattice index could not be factored over small primes.
    UnfactoredIndex,
    /// The operation needs construction metadata the presentation lacks.
    MissingMeta,
    /// A requested block index is out of range.
    NoSuchBlock(u32),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ValuationAtZero => write!(f, "valuation undefined at zero"),
            Error::ForeignSymbol(s) => write!(f, "foreign basis symbol: {s}"),
            Error::NotAMember => write!(f, "vector is not a member of the presented group"),
            Error::OutsideSpan(what) => write!(f, "vector lies outside the {what} span"),
            Error::FamilyNotDistinct => write!(f, "family not pairwise distinct"),
            Error::InsufficientPrimes(what) => write!(f, "insufficient primes in scheme: {what}"),
            Error::PrimeCollision(p) => write!(f, "prime collision between blocks: {p}"),
            Error::SchemeMismatch => write!(f, "presentations use different prime schemes"),
            Error::DivisibleChainUnstable { prime, depth } => write!(
                f,
                "divisible part at {prime} did not stabilize within depth {depth}"
            ),
            Error::InvariantViolation(clause) => write!(f, "invariant violated: {clause}"),
            Error::UnfactoredIndex => write!(f, "lattice index has a prime factor beyond the trial bound"),
            Error::MissingMeta => write!(f, "presentation carries no construction metadata"),
            Error::NoSuchBlock(b) => write!(f, "no such block: {b}"),
        }
    }
}
