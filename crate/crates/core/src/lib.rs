//! Fair allocation of indivisible goods under additive utilities.
//!
//! * [`model`]: profiles with exact rational utilities, allocations, enumeration.
//! * [`fairness`]: EF, EF1, and Pareto optimality with witnesses.
//! * [`welfarist`]: welfare functions and exact welfare maximization, including
//!   maximum Nash welfare with exact products.
//! * [`funcparse`]: the expression language for custom welfare functions.
//! * [`theoremlab`]: difference-constancy tests, log fits, and EF1
//!   counterexamples for non-logarithmic welfare functions.
//! * [`report`]: JSON forms of all results.

pub mod error;
pub mod fairness;
pub mod funcparse;
pub mod model;
pub mod report;
pub mod theoremlab;
pub mod welfarist;

pub use error::{Error, Result};
pub use fairness::{is_ef, is_ef1, is_pareto_optimal, Ef1Verdict, EfVerdict, ParetoVerdict};
pub use model::{bundle_utility, enumerate_allocations, load_profile, Allocation, Bundle, Profile};
pub use welfarist::{
    allocation_welfare, evaluate_f, maximize_welfare, mnw, ExtendedWelfare, SolveResult,
    WelfareFunction,
};
