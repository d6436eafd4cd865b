//! Rank bounds for elliptic curves over the rationals.
//!
//! Two independent routes are implemented:
//!
//! * the Brumer–Kramer bound `dim Sel2(E) <= g + u + n`, where `g` bounds the
//!   2-rank of the class group of the cubic subfield of `Q(E[2])`.  The
//!   2-rank is bounded above (under GRH) by an NFS-style relation sieve over
//!   degree-one primes and GF(2) linear algebra, and below (unconditionally)
//!   by quadratic characters on the field 2-Selmer group;
//! * the explicit formula for `L(E, s)` with the Fejér kernel, which bounds
//!   the analytic rank under GRH for `L(E, s)`.
//!
//! References:
//! J. Bober, Conditionally bounding analytic ranks of elliptic curves, ANTS X.
//! A. Brumer, K. Kramer, The rank of elliptic curves, Duke Math. J. 44 (1977).
//! J. Cremona, Reduction of binary cubic and quartic forms, LMS JCM 2 (1999).
//! B. Murphy, Polynomial selection for the number field sieve, thesis (1999).

pub mod analytic;
pub mod classgroup;
pub mod cubic;
pub mod elliptic;
pub mod error;
pub mod gf2;
pub mod io;
pub mod numeric;
pub mod planner;
pub mod rank;
pub mod sieve;

pub use error::{Error, Result};
