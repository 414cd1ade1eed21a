use thiserror::Error;

/// Errors surfaced by the arithmetic and certification layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("characteristic {0} is not prime")]
    NonPrimeCharacteristic(u64),
    #[error("field size p^k exceeds the configured cap ({0}^{1})")]
    SizeCapExceeded(u64, usize),
    #[error("no embedding F_{{p^{0}}} -> F_{{p^{1}}}: {0} does not divide {1}")]
    IncompatibleDegrees(usize, usize),
    #[error("ambient field of degree {have} too small, need degree {need}")]
    AmbientTooSmall { have: usize, need: usize },
    #[error("operands live over different coefficient fields")]
    FieldMismatch,
    #[error("division by (approximate) zero")]
    DivisionByZero,
    #[error("insufficient series precision: {0}")]
    PrecisionExhausted(String),
    #[error("assigned series must have valuation >= 1")]
    NonPositiveValuation,
    #[error("u_h specializes to zero: point lies outside the open stratum")]
    OutsideOpenStratum,
    #[error("q = {q} is not a power of the working characteristic p = {p}")]
    CharacteristicMismatch { q: u64, p: u64 },
    #[error("polynomial is not certified irreducible (no coprime single-segment Newton polygon)")]
    NotCertified,
    #[error("refusing purely inseparable adjunction")]
    InseparableExtension,
    #[error("polynomial is not separable (gcd(f, f') nontrivial)")]
    Inseparable,
    #[error("Hensel dominance fails: residual root is not simple")]
    NotSimple,
    #[error("splitting recursion depth exceeded (bound {0})")]
    DepthExceeded(u64),
    #[error("root count {found} does not match expected rank q^mk = {expected}")]
    RankMismatch { found: usize, expected: u64 },
    #[error("element is not a torsion root")]
    NotARoot,
    #[error("root identification margin violated; retry at higher precision")]
    AmbiguousIdentification,
    #[error("identity check failed: {0}")]
    IdentityFailed(String),
    #[error("group closure exceeded cap of {0} elements")]
    ClosureCapExceeded(usize),
    #[error("enumeration cap exceeded (group order {0})")]
    CapExceeded(u64),
    #[error("group order overflows the 2^63 desk bound")]
    Overflow,
    #[error("splitting tower is not a single tame radical step")]
    NotSingleTameStep,
    #[error("soundness violation: specialization degree {d} does not divide group order {g}")]
    InternalSoundnessError { d: u64, g: u64 },
    #[error("splitting could not resolve all roots: {0}")]
    Unresolved(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures that a retry at doubled working precision may fix.
    pub fn is_precision_failure(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted(_) | Error::AmbiguousIdentification
        )
    }
}
