//! Matrix inequalities for convex and concave functions of PSD matrices.
//!
//! * [`spectral`]: symmetric matrices, Jacobi eigensolver, `f(A)`, `|A|`, `A⁺`.
//! * [`scalar_fn`]: angle-function sums and closed forms with shape classification.
//! * [`majorization`]: `≺_w`, `≺_dw`, `≺`, Ky Fan norms.
//! * [`delta`]: the dominated majorisation vector `δ(C; A)` and its oracle.
//! * [`inequality_lab`]: one checker per inequality plus the reference counterexamples.
//! * [`fuzz`]: seeded random search for violations, with margin shrinking.
//! * [`cli`]: the `matineq` command line.

pub mod cli;
pub mod delta;
pub mod error;
pub mod fixtures;
pub mod fuzz;
pub mod inequality_lab;
pub mod majorization;
pub mod scalar_fn;
pub mod spectral;

pub use error::{Error, Result};
pub use majorization::{MajReport, Relation, Tolerance};
pub use scalar_fn::PiecewiseFn;
pub use spectral::{EigenSystem, SymMatrix};
