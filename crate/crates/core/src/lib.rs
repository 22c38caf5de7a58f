//! Viscosity-solution solvers for Hamilton–Jacobi–Bellman equations,
//! entropy-solution solvers for degenerate convection–diffusion laws, and a
//! harness that checks the stability and contraction estimates relating them.

// `!(x > 0.0)` also rejects NaN, which is the intent everywhere it appears.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod claw;
pub mod config;
pub mod controls;
pub mod error;
pub mod field;
pub mod hjb;
pub mod linalg;
pub mod oracle;
pub mod quad;
pub mod record;
pub mod report;
pub mod sum;
pub mod verify;

pub use claw::{claw_evolve, ClawProblem, FluxModel};
pub use config::RunConfig;
pub use controls::{seminorm_conv, seminorm_diff, Control, ControlledOperator};
pub use error::{Error, Result};
pub use field::{norm_int, norm_triple, Boundary, GridField};
pub use hjb::{evolve, Hamiltonian, HjbProblem, SchemeConfig};
pub use linalg::Sym2;
pub use record::{TracePoint, Verdict, VerificationRecord};
pub use report::Report;
pub use verify::{Suite, Verifier, VerifyOptions};
