//! Arithmetic dynamics of quadratic polynomials over odd prime fields.
//!
//! * [`field`]: prime-field arithmetic and the quadratic character.
//! * [`poly`]: dense polynomials, symbolic iterates, irreducibility.
//! * [`dynamics`]: critical points, iteration, rho shape of the critical
//!   orbit.
//! * [`stability`]: the orbit-based stability test and its symbolic oracle.
//! * [`charsum`]: the sets `T_p(K)`, `W_p(K)` and the character sums that
//!   bound them.
//! * [`census`]: exhaustive/sampled enumeration of `(a, b, c)` triples.
//! * [`cli`]: the `qorbit` command-line front-end.
//!
//! ```
//! use qorbit::{FieldCtx, QuadPoly, stability::{stability_test, Status}};
//!
//! let ctx = FieldCtx::new(13).unwrap();
//! let f = QuadPoly::from_u64s(ctx, 1, 0, 1).unwrap();
//! assert_eq!(f.orbit_shape().t_f, 5);
//! assert_eq!(stability_test(&f).status, Status::NotStable);
//! ```

pub mod census;
pub mod charsum;
pub mod cli;
pub mod dynamics;
pub mod field;
pub mod poly;
pub mod primality;
pub mod stability;

pub use dynamics::{OrbitShape, QuadPoly};
pub use field::{FieldCtx, Fp};
pub use poly::Poly;
pub use stability::{StabilityVerdict, Status};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Field(#[from] field::FieldError),
    #[error(transparent)]
    Poly(#[from] poly::PolyError),
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error(transparent)]
    Charsum(#[from] charsum::CharsumError),
    #[error(transparent)]
    Census(#[from] census::CensusError),
    #[error("max t_f / p^(3/4) exceeds {bound} for p in {primes:?}")]
    ScalingBoundViolated { bound: f64, primes: Vec<u64> },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Name of the error case, as reported by the CLI.
    pub fn code(&self) -> &'static str {
        use census::CensusError as Ce;
        use charsum::CharsumError as Cs;
        use field::FieldError as Fe;
        let field = |e: &Fe| match e {
            Fe::CompositeModulus(_) => "CompositeModulus",
            Fe::EvenModulus => "EvenModulus",
            Fe::OutOfRange(_) => "OutOfRange",
            Fe::DivisionByZero => "DivisionByZero",
        };
        match self {
            Error::Field(e) => field(e),
            Error::Poly(poly::PolyError::IterateCapExceeded { .. }) => "IterateCapExceeded",
            Error::Poly(poly::PolyError::ConstantPolynomial) => "ConstantPolynomial",
            Error::Dynamics(dynamics::DynamicsError::ZeroLeadingCoefficient) => {
                "ZeroLeadingCoefficient"
            }
            Error::Charsum(e) => match e {
                Cs::WindowTooLarge(_) => "WindowTooLarge",
                Cs::EmptyWindow => "EmptyWindow",
                Cs::InvalidSubset(_) => "InvalidSubset",
                Cs::NotStableInput => "NotStableInput",
                Cs::DomainTooLarge(_) => "DomainTooLarge",
            },
            Error::Census(e) => match e {
                Ce::BudgetExceeded { .. } => "BudgetExceeded",
                Ce::Field(fe) => field(fe),
                Ce::Io(_) | Ce::Csv(_) => "IoError",
            },
            Error::ScalingBoundViolated { .. } => "ScalingBoundViolated",
            Error::Io(_) => "IoError",
        }
    }
}
