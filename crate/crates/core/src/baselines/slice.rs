//! Region-based pruning over twelve equal angular partitions around the query.
//!
//! In each partition a facility defines a lower arc (no point of the partition
//! closer to `q` than this can be pruned by it) and an upper arc (every point of
//! the partition farther than this is pruned by it). The k-th smallest upper arc
//! bounds the candidates; facilities whose lower arc falls below that bound form
//! the significant list walked during verification.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::parallel::{default_workers, par_map};

use super::{check_query, ids_from_mask};

pub const PARTITIONS: usize = 12;

/// Relative slack keeping arc-based filtering and early accepts conservative
/// against rounding in the arc radii.
const ARC_SLACK: f64 = 1e-9;

/// Angular sector `[start, end]` in radians, measured from the positive x-axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Wedge {
    pub start: f64,
    pub end: f64,
}

impl Wedge {
    pub fn partition(index: usize) -> Self {
        let width = TAU / PARTITIONS as f64;
        Self {
            start: index as f64 * width,
            end: (index + 1) as f64 * width,
        }
    }

    pub fn from_degrees(start: f64, end: f64) -> Self {
        Self {
            start: start.to_radians(),
            end: end.to_radians(),
        }
    }

    fn contains_angle(&self, angle: f64) -> bool {
        let rel = (angle - self.start).rem_euclid(TAU);
        rel <= self.end - self.start
    }
}

/// Distance from `q` along `angle` to the bisector of `(f, q)`; infinite when the
/// ray never crosses it.
fn bisector_distance(offset: Point2, half_norm2: f64, angle: f64) -> f64 {
    // cos(π/2) and friends are not exactly zero in floating point.
    let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
    let proj = offset.x * snap(angle.cos()) + offset.y * snap(angle.sin());
    if proj > 0.0 {
        half_norm2 / proj
    } else {
        f64::INFINITY
    }
}

/// Lower and upper arc radii of facility `f` within `wedge`.
pub fn slice_arcs(f: Point2, q: Point2, wedge: Wedge) -> Result<(f64, f64)> {
    if f == q {
        return Err(Error::CoincidentFacilities);
    }
    let offset = f.sub(q);
    let half_norm2 = 0.5 * offset.dot(offset);
    let t0 = bisector_distance(offset, half_norm2, wedge.start);
    let t1 = bisector_distance(offset, half_norm2, wedge.end);
    let upper = if t0.is_finite() && t1.is_finite() {
        t0.max(t1)
    } else {
        f64::INFINITY
    };
    let lower = if wedge.contains_angle(offset.y.atan2(offset.x)) {
        0.5 * offset.norm()
    } else {
        t0.min(t1)
    };
    Ok((lower, upper))
}

/// Partition index of direction `(dx, dy)`; half-open `[i·30°, (i+1)·30°)`.
pub fn partition_of(dx: f64, dy: f64) -> usize {
    let mut angle = dy.atan2(dx);
    if angle < 0.0 {
        angle += TAU;
    }
    let idx = (angle / (PI / 6.0)).floor() as usize;
    idx.min(PARTITIONS - 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlicePartitionState {
    pub index: usize,
    pub bounding_arc: f64,
    /// `(lower arc, facility index)`, ascending by lower arc.
    pub significant: Vec<(f64, usize)>,
}

/// Per-query SLICE structures.
#[derive(Clone, Debug)]
pub struct SliceIndex<'a> {
    facilities: &'a [Point2],
    q: Point2,
    k: usize,
    pub partitions: Vec<SlicePartitionState>,
}

impl<'a> SliceIndex<'a> {
    pub fn build(facilities: &'a [Point2], q_index: usize, k: u32) -> Result<Self> {
        check_query(facilities, q_index)?;
        if k == 0 {
            return Err(Error::InvalidK);
        }
        let q = facilities[q_index];
        let wedges: Vec<Wedge> = (0..PARTITIONS).map(Wedge::partition).collect();
        let mut uppers: Vec<Vec<f64>> = vec![Vec::new(); PARTITIONS];
        let mut lowers: Vec<Vec<(f64, usize)>> = vec![Vec::new(); PARTITIONS];
        for (i, &f) in facilities.iter().enumerate() {
            if i == q_index || f == q {
                continue;
            }
            for (p, wedge) in wedges.iter().enumerate() {
                let (lower, upper) = slice_arcs(f, q, *wedge)?;
                if upper.is_finite() {
                    uppers[p].push(upper);
                }
                if lower.is_finite() {
                    lowers[p].push((lower, i));
                }
            }
        }
        let k = k as usize;
        let partitions = (0..PARTITIONS)
            .map(|p| {
                let ups = &mut uppers[p];
                let bounding_arc = if ups.len() >= k {
                    *ups.select_nth_unstable_by(k - 1, f64::total_cmp).1
                } else {
                    f64::INFINITY
                };
                let limit = bounding_arc * (1.0 + ARC_SLACK);
                let mut significant: Vec<(f64, usize)> =
                    lowers[p].iter().copied().filter(|(l, _)| *l < limit).collect();
                significant.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                SlicePartitionState {
                    index: p,
                    bounding_arc,
                    significant,
                }
            })
            .collect();
        Ok(Self {
            facilities,
            q,
            k,
            partitions,
        })
    }

    fn partition_for(&self, u: Point2) -> &SlicePartitionState {
        &self.partitions[partition_of(u.x - self.q.x, u.y - self.q.y)]
    }

    /// True when the bounding arc alone rules `u` out.
    pub fn filtered(&self, u: Point2) -> bool {
        let d = u.dist(self.q);
        d > 0.0 && d > self.partition_for(u).bounding_arc * (1.0 + ARC_SLACK)
    }

    /// Walks the significant list for a candidate. With `early_accept` the walk
    /// stops at the first facility whose lower arc reaches `dist(u, q)`.
    pub fn verify(&self, u: Point2, early_accept: bool) -> bool {
        let dq2 = u.dist2(self.q);
        let d = dq2.sqrt();
        let mut count = 0;
        for &(lower, fi) in &self.partition_for(u).significant {
            if early_accept && lower >= d * (1.0 + ARC_SLACK) {
                return true;
            }
            if u.dist2(self.facilities[fi]) < dq2 {
                count += 1;
                if count >= self.k {
                    return false;
                }
            }
        }
        true
    }

    pub fn is_result(&self, u: Point2) -> bool {
        if u == self.q {
            return true;
        }
        !self.filtered(u) && self.verify(u, true)
    }
}

pub fn slice_rknn(facilities: &[Point2], users: &[Point2], q_index: usize, k: u32) -> Result<Vec<usize>> {
    slice_rknn_with(facilities, users, q_index, k, default_workers())
}

pub fn slice_rknn_with(
    facilities: &[Point2],
    users: &[Point2],
    q_index: usize,
    k: u32,
    workers: usize,
) -> Result<Vec<usize>> {
    let index = SliceIndex::build(facilities, q_index, k)?;
    let mask = par_map(users, workers, |u| index.is_result(*u));
    Ok(ids_from_mask(&mask))
}
