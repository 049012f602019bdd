//! Hyperkähler geometry of `T*G^c` from Nahm's equations on `[0, 1]`.
//!
//! - [`liecore`]: matrices for U(n), SU(n) and their complexifications.
//! - [`nahm`]: sampled paths, the real and complex Nahm residuals, closed-form solutions.
//! - [`gaugefix`]: complex gauge fixing onto the real equation.
//! - [`moduli`]: moduli points, tangent representatives, metric and forms.
//! - [`twistor`]: patch transition and re-extraction from fiber data.
//! - [`verify`]: property suites used by the CLI and the acceptance run.

// NaN-rejecting guards are written as `!(x > bound)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaugefix;
pub mod liecore;
pub mod moduli;
pub mod nahm;
pub mod ode;
pub mod sample;
pub mod twistor;
pub mod verify;
