//! Fixtures shared by the benchmarks.

use dbcomp::{AmbientSpace, NodeSequence, RestrictedSpace, Truncation, C64};

/// `ℤ` minus `exclude`, truncated at `radius`.
pub fn integers(exclude: &[i64], radius: i64) -> NodeSequence {
    let nodes = (-radius..=radius)
        .filter(|n| !exclude.contains(n))
        .map(|n| C64::new(n as f64, 0.0))
        .collect();
    NodeSequence::new(nodes, Truncation::Radius(radius as f64)).expect("integers are distinct")
}

/// `PW_π` restricted by `ℤ \ {−1, 0, 1}` up to `radius`.
pub fn three_gaps(radius: i64) -> RestrictedSpace {
    RestrictedSpace::build(AmbientSpace::paley_wiener(), integers(&[-1, 0, 1], radius)).expect("space builds")
}
