//! Conservative solutions of the nonlinear variational wave equation
//!
//! ```text
//! u_tt - c(u) (c(u) u_x)_x = 0
//! ```
//!
//! computed with the generalized method of characteristics: initial data
//! `(u, R, S, mu, nu)` is lifted to a curve in characteristic coordinates
//! `(xi, eta)`, the semilinear Lagrangian system is marched as a Goursat
//! problem, and Eulerian slices are read back off level sets of `t`.
//!
//! Alongside the solver live the a-priori wave-breaking predictors, the
//! Riccati comparison bounds they rest on, an independent upwind oracle for
//! the smooth regime, and the two worked examples (a cusped traveling wave
//! and a Dirac box that behaves like the linear wave equation).

// `!(x > 0.0)` is used on purpose: it rejects NaN along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod breaking;
pub mod cli;
pub mod error;
pub mod eulerian_data;
pub mod eulerian_extract;
pub mod goursat_solver;
pub mod lagrangian_init;
pub mod measures;
pub mod quad;
pub mod reference_oracle;
pub mod scenarios;
pub mod wave_speed;

pub use error::{Error, Result};
