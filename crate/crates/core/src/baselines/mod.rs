//! Exact reference algorithms the ray-casting engine is checked against.

mod slice;

pub use slice::{
    partition_of, slice_arcs, slice_rknn, slice_rknn_with, SliceIndex, SlicePartitionState, Wedge,
    PARTITIONS,
};

use crate::engine::domain_rect;
use crate::error::{Error, Result};
use crate::geometry::{point_in_occluder, Occluder, Point2};
use crate::parallel::{default_workers, par_map};
use crate::raycast::HitReport;
use crate::zone::{select_facilities, PruningStrategy};

fn check_query(facilities: &[Point2], q_index: usize) -> Result<()> {
    if facilities.is_empty() {
        return Err(Error::EmptyFacilitySet);
    }
    if q_index >= facilities.len() {
        return Err(Error::InvalidQueryIndex {
            index: q_index,
            len: facilities.len(),
        });
    }
    Ok(())
}

/// Number of facilities other than `q_index` strictly closer to `u` than the
/// query, clipped at `limit`.
pub fn closer_count(facilities: &[Point2], q_index: usize, u: Point2, limit: usize) -> usize {
    let dq = u.dist2(facilities[q_index]);
    let mut count = 0;
    for (i, f) in facilities.iter().enumerate() {
        if i != q_index && u.dist2(*f) < dq {
            count += 1;
            if count >= limit {
                break;
            }
        }
    }
    count
}

/// Brute force over every (user, facility) pair.
pub fn oracle_rknn(facilities: &[Point2], users: &[Point2], q_index: usize, k: u32) -> Result<Vec<usize>> {
    oracle_rknn_with(facilities, users, q_index, k, default_workers())
}

pub fn oracle_rknn_with(
    facilities: &[Point2],
    users: &[Point2],
    q_index: usize,
    k: u32,
    workers: usize,
) -> Result<Vec<usize>> {
    check_query(facilities, q_index)?;
    if k == 0 {
        return Err(Error::InvalidK);
    }
    let k = k as usize;
    let mask = par_map(users, workers, |u| closer_count(facilities, q_index, *u, k) < k);
    Ok(ids_from_mask(&mask))
}

pub(crate) fn ids_from_mask(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| i)
        .collect()
}

/// Linear scan over occluders with the 2D membership test.
pub fn direct_count(occluders: &[Occluder], u: Point2, k: u32) -> HitReport {
    let mut count = 0;
    for o in occluders {
        if count >= k {
            break;
        }
        if point_in_occluder(o, u) {
            count += 1;
        }
    }
    HitReport {
        count,
        is_rknn: count < k,
    }
}

/// Influence-zone baseline: users inside the exact zone are the results.
pub fn infzone_rknn(facilities: &[Point2], users: &[Point2], q_index: usize, k: u32) -> Result<Vec<usize>> {
    infzone_rknn_with(facilities, users, q_index, k, 0.001, default_workers())
}

pub fn infzone_rknn_with(
    facilities: &[Point2],
    users: &[Point2],
    q_index: usize,
    k: u32,
    margin_fraction: f64,
    workers: usize,
) -> Result<Vec<usize>> {
    check_query(facilities, q_index)?;
    let rect = domain_rect(facilities, users, margin_fraction)?;
    let selection = select_facilities(facilities, q_index, k, &rect, PruningStrategy::Exact)?;
    let zone = selection.zone.expect("exact strategy keeps its zone");
    let index = zone.index()?;
    let mask = par_map(users, workers, |u| index.contains(*u));
    Ok(ids_from_mask(&mask))
}
