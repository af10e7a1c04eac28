//! Exact computations for the laws of intrinsic location functionals of
//! periodic stationary processes: densities and their variation
//! constraint, extreme-class membership, path constructions realizing a
//! target law, point-set oracles, simulation and joint-mixability
//! certificates.

pub mod construct;
pub mod density;
pub mod error;
pub mod io;
pub mod lp;
pub mod membership;
pub mod mixability;
pub mod paths;
pub mod poset;
pub mod rational;
pub mod simulate;

pub use density::{mix_laws, Affine, Block, BlockDecomposition, BlockKind, LocationLaw, PiecewiseDensity};
pub use error::{Error, Result};
pub use membership::{
    check_class, check_tv, check_tv_prime, hull_membership_lp, Condition, HullCertificate, HullOptions, HullOutcome,
    LawClass, MembershipReport, Verdict, Witness,
};
pub use rational::{format_rational, int, parse_rational, rat, Rational};
