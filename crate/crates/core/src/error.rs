use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(String),
    #[error("{0} is not an odd prime")]
    NotOddPrime(String),
    #[error("character undefined: {x} is divisible by {p}")]
    CharacterUndefined { x: String, p: String },
    #[error("argument {value} outside domain {domain}")]
    Domain { value: String, domain: &'static str },
    #[error("singular curve (discriminant zero)")]
    SingularCurve,
    #[error("bad reduction at {0}; use tate_local for this prime")]
    BadReduction(String),
    #[error("curve has rational 2-torsion; the 2-division cubic is reducible")]
    RationalTwoTorsion,
    #[error("binary cubic form is reducible over Q")]
    ReducibleForm,
    #[error("form has zero discriminant")]
    ZeroDiscriminant,
    #[error("form vanishes identically modulo {0}")]
    FormVanishesMod(String),
    #[error("incomplete factorization: cofactor {0} remains")]
    IncompleteFactorization(String),
    #[error("missing local data at prime {0}")]
    MissingLocalData(String),
    #[error("prime cutoff {cutoff} exceeds budget {budget}; supply an a_p cache")]
    BudgetExceeded { cutoff: u64, budget: u64 },
    #[error("sieve region too large: {0}")]
    RegionTooLarge(String),
    #[error("no targeted relations over {p} found with |a| <= {a_limit}; enlarge the region")]
    TargetedNotFound { p: u64, a_limit: i64 },
    #[error("protected column {column} (norm {norm} <= {bound}) has weight {weight}")]
    UnsoundPrune { column: usize, norm: u64, bound: u64, weight: usize },
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
