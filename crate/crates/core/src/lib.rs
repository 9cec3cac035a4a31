// `!(x > 0.0)` is deliberate: it rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contour;
pub mod determinateness;
pub mod error;
pub mod io;
mod linalg;
pub mod matrices;
pub mod momentgen;
pub mod multi_index;
pub mod polynomial;
pub mod recovery;

/// Library version, echoed in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use matrices::{CoordinateVariant, MatrixFamily, MomentMatrix};
pub use momentgen::{MomentSequence, Provenance, RegionKind, RegionSpec};
pub use multi_index::{basis_size, enumerate_basis, Basis, MultiIndex};
pub use polynomial::DensePolynomial;
pub use recovery::RecoveryReport;
