//! End-to-end query orchestration: domain setup, facility selection, scene and
//! BVH construction, then one ray per user.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};
use crate::raycast::{cast_counts, count_hits_linear};
use crate::parallel::{default_workers, par_map};
use crate::scene::{assemble_scene, build_bvh, Bvh, Scene};
use crate::zone::{select_facilities, PruningStrategy, Selection};

/// When a ray stops counting.
#[allow(clippy::manual_non_exhaustive)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EarlyTermination {
    /// Stop at the k-th hit.
    Enabled,
    /// Count every occluder under the user.
    Disabled,
    /// Deliberately wrong: stops one hit early. Negative control for `verify`.
    #[doc(hidden)]
    OffByOne,
}

/// How rays find candidate triangles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Traversal {
    Bvh,
    /// Test every triangle of the scene.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QueryConfig {
    pub k: u32,
    pub strategy: PruningStrategy,
    pub workers: usize,
    pub margin_fraction: f64,
    pub early_termination: EarlyTermination,
    pub traversal: Traversal,
}

impl QueryConfig {
    pub fn new(k: u32) -> Self {
        Self {
            k,
            strategy: PruningStrategy::Exact,
            workers: default_workers(),
            margin_fraction: 0.001,
            early_termination: EarlyTermination::Enabled,
            traversal: Traversal::Bvh,
        }
    }

    pub fn with_strategy(mut self, strategy: PruningStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_early_termination(mut self, mode: EarlyTermination) -> Self {
        self.early_termination = mode;
        self
    }

    pub fn with_traversal(mut self, traversal: Traversal) -> Self {
        self.traversal = traversal;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidK);
        }
        if self.workers == 0 {
            return Err(Error::InvalidWorkers);
        }
        Ok(())
    }
}

/// Per-stage wall-clock times in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Timings {
    pub occluder_build_ms: f64,
    pub bvh_build_ms: f64,
    pub raycast_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub result_user_ids: Vec<usize>,
    pub occluders_accepted: usize,
    pub timings: Timings,
}

/// Bounding box of `F ∪ U`, expanded by `margin_fraction` of its extent on
/// every side. A zero extent is first widened to `max(1, other extent)`.
pub fn domain_rect(facilities: &[Point2], users: &[Point2], margin_fraction: f64) -> Result<Rect> {
    let mut it = facilities.iter().chain(users);
    let first = *it.next().ok_or(Error::EmptyFacilitySet)?;
    let (mut lo, mut hi) = (first, first);
    for p in it {
        if !p.is_finite() {
            return Err(Error::NonFinite);
        }
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    if !first.is_finite() {
        return Err(Error::NonFinite);
    }
    let (w, h) = (hi.x - lo.x, hi.y - lo.y);
    let w2 = if w > 0.0 { w } else { h.max(1.0) };
    let h2 = if h > 0.0 { h } else { w.max(1.0) };
    let (cx, cy) = (0.5 * (lo.x + hi.x), 0.5 * (lo.y + hi.y));
    let half_w = 0.5 * w2 * (1.0 + 2.0 * margin_fraction);
    let half_h = 0.5 * h2 * (1.0 + 2.0 * margin_fraction);
    let (min_x, max_x) = if w > 0.0 {
        (lo.x - margin_fraction * w, hi.x + margin_fraction * w)
    } else {
        (cx - half_w, cx + half_w)
    };
    let (min_y, max_y) = if h > 0.0 {
        (lo.y - margin_fraction * h, hi.y + margin_fraction * h)
    } else {
        (cy - half_h, cy + half_h)
    };
    Rect::new(Point2::new(min_x, min_y), Point2::new(max_x, max_y))
}

/// Everything built for a query before any ray is cast.
#[derive(Clone, Debug)]
pub struct PreparedQuery {
    pub domain: Rect,
    pub selection: Selection,
    pub scene: Scene,
    pub bvh: Bvh,
    pub occluder_build_ms: f64,
    pub bvh_build_ms: f64,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

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

/// Scene construction phase: pruning, occluders, layering and the BVH.
/// `prune_k` is the coverage threshold used by the zone.
pub fn prepare_query(
    facilities: &[Point2],
    users: &[Point2],
    q_index: usize,
    prune_k: u32,
    cfg: &QueryConfig,
) -> Result<PreparedQuery> {
    cfg.validate()?;
    check_query(facilities, q_index)?;
    let t = Instant::now();
    let domain = domain_rect(facilities, users, cfg.margin_fraction)?;
    let selection = select_facilities(facilities, q_index, prune_k, &domain, cfg.strategy)?;
    let occluder_build_ms = ms(t);
    let t = Instant::now();
    let scene = assemble_scene(&selection.occluders, domain);
    let bvh = build_bvh(&scene);
    let bvh_build_ms = ms(t);
    Ok(PreparedQuery {
        domain,
        selection,
        scene,
        bvh,
        occluder_build_ms,
        bvh_build_ms,
    })
}

impl PreparedQuery {
    /// Hit budget for a result threshold of `k` under the given mode.
    pub fn budget(&self, k: u32, mode: EarlyTermination) -> u32 {
        match mode {
            EarlyTermination::Enabled => k,
            EarlyTermination::Disabled => self.scene.occluder_count() as u32 + 1,
            EarlyTermination::OffByOne => k.saturating_sub(1),
        }
    }

    /// Per-user hit counts clipped at `budget`.
    pub fn counts(&self, users: &[Point2], budget: u32, traversal: Traversal, workers: usize) -> Vec<u32> {
        match traversal {
            Traversal::Bvh => cast_counts(&self.bvh, users, budget, workers),
            Traversal::Linear => par_map(users, workers, |u| count_hits_linear(&self.scene, *u, budget)),
        }
    }
}

/// Bichromatic reverse k-nearest-neighbor query: the users for which fewer
/// than `k` facilities are strictly closer than `facilities[q_index]`.
pub fn rknn_query(
    facilities: &[Point2],
    users: &[Point2],
    q_index: usize,
    cfg: &QueryConfig,
) -> Result<QueryResult> {
    let start = Instant::now();
    let prepared = prepare_query(facilities, users, q_index, cfg.k, cfg)?;
    let t = Instant::now();
    let budget = prepared.budget(cfg.k, cfg.early_termination);
    let threshold = budget.min(cfg.k);
    let counts = prepared.counts(users, budget, cfg.traversal, cfg.workers);
    let raycast_ms = ms(t);
    let result_user_ids = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c < threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(QueryResult {
        result_user_ids,
        occluders_accepted: prepared.scene.occluder_count(),
        timings: Timings {
            occluder_build_ms: prepared.occluder_build_ms,
            bvh_build_ms: prepared.bvh_build_ms,
            raycast_ms,
            total_ms: ms(start),
        },
    })
}

/// Monochromatic variant over a single point set: the points `p ≠ q` for which
/// fewer than `k` other points (excluding `p` and `q`) are strictly closer to
/// `p` than `q` is.
///
/// Every point is both a facility and a user. A user always lies inside its own
/// occluder, so pruning and casting run with threshold `k + 1` and one hit is
/// discounted for users whose own occluder made it into the scene. Result ids
/// index into `points`.
pub fn mono_rknn_query(points: &[Point2], q_index: usize, cfg: &QueryConfig) -> Result<QueryResult> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints);
    }
    check_query(points, q_index)?;
    let start = Instant::now();
    let user_ids: Vec<usize> = (0..points.len()).filter(|&i| i != q_index).collect();
    let users: Vec<Point2> = user_ids.iter().map(|&i| points[i]).collect();
    let k1 = cfg.k.checked_add(1).ok_or(Error::InvalidK)?;
    let prepared = prepare_query(points, &users, q_index, k1, cfg)?;
    let mut in_scene = vec![false; points.len()];
    for &id in &prepared.scene.facility_ids {
        in_scene[id] = true;
    }
    let t = Instant::now();
    let budget = prepared.budget(k1, cfg.early_termination);
    let counts = prepared.counts(&users, budget, cfg.traversal, cfg.workers);
    let raycast_ms = ms(t);
    let result_user_ids = user_ids
        .iter()
        .zip(&counts)
        .filter(|(&id, &c)| {
            if c >= budget.min(k1) {
                return false;
            }
            let own = in_scene[id] as u32;
            c - own.min(c) < cfg.k
        })
        .map(|(&id, _)| id)
        .collect();
    Ok(QueryResult {
        result_user_ids,
        occluders_accepted: prepared.scene.occluder_count(),
        timings: Timings {
            occluder_build_ms: prepared.occluder_build_ms,
            bvh_build_ms: prepared.bvh_build_ms,
            raycast_ms,
            total_ms: ms(start),
        },
    })
}
