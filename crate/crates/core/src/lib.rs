//! Revenue-optimal mechanisms for one additive bidder whose item values are
//! independent two-point distributions, computed and checked in exact
//! rational arithmetic.
//!
//! The pipeline runs [`OmdInstance`] → [`Lp2Params`] →
//! [`lattice::canonical_solution`] → [`mechanism::closed_form_mechanism`],
//! with [`exactlp`] providing the full revenue LP as an independent check.

pub mod budgeted;
pub mod error;
pub mod exactlp;
pub mod instance;
pub mod lattice;
pub mod mechanism;
pub mod rational;
pub mod reduction;
pub mod subset;

pub use budgeted::{BudgetedInstance, BudgetedMechanism};
pub use error::{Error, Result};
pub use exactlp::{solve_lp, Guards, LpProblem, LpSolution, LpStatus};
pub use instance::{Lp2Params, OmdInstance};
pub use lattice::{canonical_solution, FlowSolution};
pub use mechanism::{closed_form_mechanism, verify_bic_ir, Mechanism, VerificationReport};
pub use rational::Rational;
pub use reduction::{LexRankInstance, ReductionOutput, SubsetSumInstance};
pub use subset::Subset;
