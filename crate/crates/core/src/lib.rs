//! Diagonal systems of hydrodynamic type `u^i_t = λ^i(u) u^i_x`.
//!
//! Speeds are symbolic ([`expr`]). [`system`] builds the rotation
//! coefficients and the integrability checks, [`laplace`] transforms and
//! searches for terminating sequences, [`integrate`] and [`hodograph`] turn an
//! integrable system into `u(x, t)` on a grid, and [`congruence`] treats
//! conservation laws as line congruences. [`cli`] drives it all from the
//! command line.

pub mod cli;
pub mod congruence;
pub mod expr;
pub mod hodograph;
pub mod integrate;
pub mod laplace;
pub mod system;
