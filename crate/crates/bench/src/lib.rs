//! Shared fixtures for the criterion benchmarks.

use rknn_core::data::{gen_synthetic, split_facilities, Split, SplitSpec, SyntheticKind};
use rknn_core::{Point2, Rect};

/// Uniform points in the unit square split into facilities and users.
pub fn uniform_instance(points: usize, facilities: usize, seed: u64) -> Split {
    let rect = Rect::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).expect("unit square");
    let ds = gen_synthetic(SyntheticKind::Uniform, points, &rect, seed);
    split_facilities(&ds, SplitSpec { facility_count: facilities, seed: seed ^ 0x5eed })
        .expect("facility count within dataset")
}
