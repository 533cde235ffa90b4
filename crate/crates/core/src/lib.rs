//! Incremental-quotient calculus, singular-kernel nonlocal operators and
//! Gevrey norm ladders, with numerical verification suites.
//!
//! Modules:
//! - [`stencil`]: exact-rational incremental quotients and discrete identities.
//! - [`fields`]: manufactured test functions with jet access.
//! - [`kernel`]: kernels `K(x, y)`, their derivatives and structural checks.
//! - [`quad`]: evaluation of `∫ δu(x,y) K(x,y) dy` and exterior integrals.
//! - [`gevrey`]: norm ladders, Gevrey fits, a priori and induction checks.
//! - [`suites`]: batch verification suites with CSV/JSON reporting.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop)]

pub mod error;
pub mod fields;
pub mod gevrey;
pub mod jet;
pub mod kernel;
pub mod lsq;
pub mod quad;
pub mod sampling;
pub mod special;
pub mod stencil;
pub mod suites;

pub use error::{Error, Result};
pub use fields::{Decay, FieldKind, ScalarField};
pub use gevrey::{GevreyFit, InductionConstants, NormLadder};
pub use jet::{JetPoly, Scalar};
pub use kernel::{KernelCheckReport, KernelSpec};
pub use quad::{OperatorValue, QuadratureConfig};
pub use stencil::{MultiStencil, Stencil};
pub use suites::{run_suite, SuiteConfig, SuiteName, SuiteReport};

/// Library version embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
