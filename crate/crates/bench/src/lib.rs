//! Inputs shared by the pipeline benchmarks.

use momentshape::momentgen::{moments_indicator, MomentMethod};
use momentshape::{MomentSequence, RegionSpec};

/// Closed-form moments of the annulus `{2/3 < r^2 < 1}`.
pub fn annulus(order: usize) -> MomentSequence {
    let region = RegionSpec::annulus(2.0 / 3.0).expect("valid annulus");
    moments_indicator(&region, order, MomentMethod::ClosedForm).expect("closed form")
}

/// Closed-form moments of the unit disk.
pub fn disk(order: usize) -> MomentSequence {
    moments_indicator(&RegionSpec::disk(1.0), order, MomentMethod::ClosedForm).expect("closed form")
}
