//! Influence-zone maintenance and facility pruning.
//!
//! The zone is kept as an arrangement of convex pieces, each tagged with the
//! number of accepted bisectors whose invalid side contains it. Inserting a
//! bisector splits every piece it crosses; pieces whose count reaches `k` are
//! discarded. The union of the remaining pieces is exactly the set of domain
//! points with fewer than `k` accepted competitors strictly closer than `q`.

use crate::error::{Error, Result};
use crate::geometry::{build_occluder_for, bisector, HalfPlane, Occluder, Point2, Rect};

/// Convex polygon (counter-clockwise) with its coverage count.
#[derive(Clone, Debug, PartialEq)]
pub struct ZonePiece {
    pub polygon: Vec<Point2>,
    pub coverage: u32,
}

impl ZonePiece {
    pub fn area(&self) -> f64 {
        polygon_area(&self.polygon)
    }

    /// Closed containment.
    pub fn contains(&self, p: Point2) -> bool {
        let n = self.polygon.len();
        (0..n).all(|i| {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= 0.0
        })
    }

    /// `Some(true)` when `p` is inside by more than `band`, `Some(false)` when
    /// outside by more than `band`, `None` otherwise.
    fn classify(&self, p: Point2, band: f64) -> Option<bool> {
        let n = self.polygon.len();
        let mut inside = true;
        for i in 0..n {
            let a = self.polygon[i];
            let b = self.polygon[(i + 1) % n];
            let e = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            let margin = band * (b.x - a.x).hypot(b.y - a.y);
            if e < -margin {
                return Some(false);
            }
            if e <= margin {
                inside = false;
            }
        }
        inside.then_some(true)
    }

    fn bounds(&self) -> (Point2, Point2) {
        let mut lo = self.polygon[0];
        let mut hi = self.polygon[0];
        for p in &self.polygon[1..] {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }
}

fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

fn point_segment_dist(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

/// Facility pruning strategy used while building a scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PruningStrategy {
    /// Full influence-zone pruning.
    Exact,
    /// Exact pruning for the first `exact_budget` accepted occluders, then
    /// only the radius filter against the frozen zone.
    Conservative { exact_budget: usize },
    /// Keep every facility.
    None,
}

impl PruningStrategy {
    pub const DEFAULT_EXACT_BUDGET: usize = 20;

    pub fn conservative() -> Self {
        Self::Conservative {
            exact_budget: Self::DEFAULT_EXACT_BUDGET,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Exact => "exact".to_string(),
            Self::Conservative { exact_budget } => format!("conservative:{exact_budget}"),
            Self::None => "none".to_string(),
        }
    }
}

impl std::str::FromStr for PruningStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Self::Exact),
            "none" => Ok(Self::None),
            "conservative" => Ok(Self::conservative()),
            _ => match s.strip_prefix("conservative:") {
                Some(n) => n
                    .parse()
                    .map(|exact_budget| Self::Conservative { exact_budget })
                    .map_err(|_| format!("bad conservative budget in {s:?}")),
                None => Err(format!("unknown strategy {s:?}")),
            },
        }
    }
}

/// Relative area below which split fragments are dropped.
const SLIVER_AREA: f64 = 1e-24;

/// Relative distance to a piece edge within which containment is decided by
/// counting the accepted half-planes instead.
const EDGE_BAND: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Zone {
    rect: Rect,
    k: u32,
    q: Point2,
    pieces: Vec<ZonePiece>,
    accepted: Vec<usize>,
    halfplanes: Vec<HalfPlane>,
    frozen: bool,
    max_vertex_dist: f64,
    min_edge_dist: f64,
}

impl Zone {
    pub fn new(rect: Rect, k: u32, q: Point2) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidK);
        }
        if !rect.contains(q) {
            return Err(Error::QueryOutsideDomain { x: q.x, y: q.y });
        }
        let mut zone = Self {
            rect,
            k,
            q,
            pieces: vec![ZonePiece {
                polygon: rect.corners().to_vec(),
                coverage: 0,
            }],
            accepted: Vec::new(),
            halfplanes: Vec::new(),
            frozen: false,
            max_vertex_dist: 0.0,
            min_edge_dist: 0.0,
        };
        zone.refresh_radii();
        Ok(zone)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn query(&self) -> Point2 {
        self.q
    }

    pub fn rect(&self) -> &Rect {
        &self.rect
    }

    pub fn pieces(&self) -> &[ZonePiece] {
        &self.pieces
    }

    pub fn accepted(&self) -> &[usize] {
        &self.accepted
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn area(&self) -> f64 {
        self.pieces.iter().map(ZonePiece::area).sum()
    }

    /// Largest distance from `q` to any piece vertex.
    pub fn max_vertex_dist(&self) -> f64 {
        self.max_vertex_dist
    }

    /// Smallest distance from `q` to any piece edge.
    pub fn min_edge_dist(&self) -> f64 {
        self.min_edge_dist
    }

    fn refresh_radii(&mut self) {
        let q = self.q;
        let mut max_v: f64 = 0.0;
        let mut min_e = f64::INFINITY;
        for piece in &self.pieces {
            let n = piece.polygon.len();
            for i in 0..n {
                let a = piece.polygon[i];
                max_v = max_v.max(a.dist(q));
                min_e = min_e.min(point_segment_dist(q, a, piece.polygon[(i + 1) % n]));
            }
        }
        self.max_vertex_dist = max_v;
        self.min_edge_dist = if self.pieces.is_empty() { 0.0 } else { min_e };
    }

    /// Stops tracking inserts; [`Zone::contains`] refuses to answer afterwards.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    /// `f`'s bisector cannot reach the zone.
    pub fn cheap_prune(&self, f: Point2) -> bool {
        f.dist(self.q) > 2.0 * self.max_vertex_dist
    }

    /// `f`'s bisector certainly crosses the zone.
    pub fn cheap_keep(&self, f: Point2) -> bool {
        f.dist(self.q) < 2.0 * self.min_edge_dist
    }

    /// True iff some piece reaches into the open invalid side of `h`.
    pub fn touches(&self, h: &HalfPlane) -> bool {
        self.pieces
            .iter()
            .any(|piece| piece.polygon.iter().any(|v| h.eval(*v) > 0.0))
    }

    /// Inserts the bisector if it reaches the zone; returns whether it did.
    pub fn insert(&mut self, facility_id: usize, h: &HalfPlane) -> bool {
        if !self.touches(h) {
            return false;
        }
        self.apply(facility_id, h);
        true
    }

    fn apply(&mut self, facility_id: usize, h: &HalfPlane) {
        let min_area = SLIVER_AREA * self.rect.area();
        let k = self.k;
        let mut next = Vec::with_capacity(self.pieces.len() + 8);
        for piece in self.pieces.drain(..) {
            let vals: Vec<f64> = piece.polygon.iter().map(|p| h.eval(*p)).collect();
            let any_pos = vals.iter().any(|&s| s > 0.0);
            let any_neg = vals.iter().any(|&s| s < 0.0);
            if !any_pos {
                next.push(piece);
                continue;
            }
            let coverage = piece.coverage + 1;
            if !any_neg {
                if coverage < k {
                    next.push(ZonePiece {
                        polygon: piece.polygon,
                        coverage,
                    });
                }
                continue;
            }
            let (inside, outside) = split_convex(&piece.polygon, &vals);
            if coverage < k && inside.len() >= 3 && polygon_area(&inside) > min_area {
                next.push(ZonePiece {
                    polygon: inside,
                    coverage,
                });
            }
            if outside.len() >= 3 && polygon_area(&outside) > min_area {
                next.push(ZonePiece {
                    polygon: outside,
                    coverage: piece.coverage,
                });
            }
        }
        self.pieces = next;
        self.accepted.push(facility_id);
        self.halfplanes.push(*h);
        self.refresh_radii();
    }

    /// Membership in the influence zone: fewer than `k` accepted competitors
    /// strictly closer than `q`.
    pub fn contains(&self, p: Point2) -> Result<bool> {
        if self.frozen {
            return Err(Error::StaleZone);
        }
        Ok(self.decide(p, self.pieces.iter()))
    }

    /// Piece lookup, falling back to the exact count when `p` is too close
    /// to a piece edge for the rounded vertices to be trusted.
    fn decide<'p>(&self, p: Point2, candidates: impl Iterator<Item = &'p ZonePiece>) -> bool {
        let band = EDGE_BAND * self.rect.diagonal();
        let mut unsure = false;
        for piece in candidates {
            match piece.classify(p, band) {
                Some(true) => return true,
                Some(false) => {}
                None => unsure = true,
            }
        }
        unsure && self.exact_contains(p)
    }

    fn exact_contains(&self, p: Point2) -> bool {
        let k = self.k as usize;
        self.halfplanes.iter().filter(|h| h.eval(p) > 0.0).take(k).count() < k
    }

    /// Grid-bucketed view for answering many containment queries.
    pub fn index(&self) -> Result<ZoneIndex<'_>> {
        if self.frozen {
            return Err(Error::StaleZone);
        }
        Ok(ZoneIndex::new(self))
    }
}

/// Splits a convex polygon by the line `vals == 0`; returns (invalid, valid).
fn split_convex(poly: &[Point2], vals: &[f64]) -> (Vec<Point2>, Vec<Point2>) {
    let n = poly.len();
    let mut pos = Vec::with_capacity(n + 1);
    let mut neg = Vec::with_capacity(n + 1);
    for i in 0..n {
        let j = (i + 1) % n;
        let (si, sj) = (vals[i], vals[j]);
        if si >= 0.0 {
            pos.push(poly[i]);
        }
        if si <= 0.0 {
            neg.push(poly[i]);
        }
        if (si > 0.0 && sj < 0.0) || (si < 0.0 && sj > 0.0) {
            let x = poly[i].lerp(poly[j], si / (si - sj));
            pos.push(x);
            neg.push(x);
        }
    }
    (pos, neg)
}

/// Uniform grid over the zone's domain listing the pieces overlapping each cell.
pub struct ZoneIndex<'a> {
    zone: &'a Zone,
    cells: Vec<Vec<u32>>,
    side: usize,
    origin: Point2,
    cell_w: f64,
    cell_h: f64,
}

impl<'a> ZoneIndex<'a> {
    fn new(zone: &'a Zone) -> Self {
        let side = ((zone.pieces.len() as f64).sqrt().ceil() as usize).clamp(1, 256);
        let rect = zone.rect;
        let cell_w = rect.width() / side as f64;
        let cell_h = rect.height() / side as f64;
        let mut cells = vec![Vec::new(); side * side];
        let clamp = |v: f64| (v.max(0.0) as usize).min(side - 1);
        for (idx, piece) in zone.pieces.iter().enumerate() {
            let (lo, hi) = piece.bounds();
            let x0 = clamp(((lo.x - rect.min.x) / cell_w).floor() - 1.0);
            let x1 = clamp(((hi.x - rect.min.x) / cell_w).floor() + 1.0);
            let y0 = clamp(((lo.y - rect.min.y) / cell_h).floor() - 1.0);
            let y1 = clamp(((hi.y - rect.min.y) / cell_h).floor() + 1.0);
            for cy in y0..=y1 {
                for cx in x0..=x1 {
                    cells[cy * side + cx].push(idx as u32);
                }
            }
        }
        Self {
            zone,
            cells,
            side,
            origin: rect.min,
            cell_w,
            cell_h,
        }
    }

    pub fn contains(&self, p: Point2) -> bool {
        let cx = ((p.x - self.origin.x) / self.cell_w).floor();
        let cy = ((p.y - self.origin.y) / self.cell_h).floor();
        let limit = self.side as f64;
        if !(cx >= 0.0 && cy >= 0.0 && cx < limit && cy < limit) {
            // Outside the bucketed area (domain boundary or beyond): scan.
            return self.zone.decide(p, self.zone.pieces.iter());
        }
        let cell = &self.cells[cy as usize * self.side + cx as usize];
        self.zone.decide(p, cell.iter().map(|&i| &self.zone.pieces[i as usize]))
    }
}

/// Occluders chosen for one query, plus the zone used to choose them.
#[derive(Clone, Debug)]
pub struct Selection {
    pub occluders: Vec<Occluder>,
    pub zone: Option<Zone>,
    /// Facilities skipped because they coincide with the query.
    pub coincident: usize,
}

/// Facility indices other than `q_index` sorted by distance to `q` (ties by index).
pub fn facilities_by_distance(facilities: &[Point2], q_index: usize) -> Vec<usize> {
    let q = facilities[q_index];
    let mut order: Vec<(f64, usize)> = facilities
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != q_index)
        .map(|(i, f)| (f.dist2(q), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.into_iter().map(|(_, i)| i).collect()
}

/// Chooses the facilities whose occluders enter the scene, in processing order.
pub fn select_facilities(
    facilities: &[Point2],
    q_index: usize,
    k: u32,
    rect: &Rect,
    strategy: PruningStrategy,
) -> Result<Selection> {
    if facilities.is_empty() {
        return Err(Error::EmptyFacilitySet);
    }
    if q_index >= facilities.len() {
        return Err(Error::InvalidQueryIndex {
            index: q_index,
            len: facilities.len(),
        });
    }
    let q = facilities[q_index];
    let mut zone = match strategy {
        PruningStrategy::None => {
            if k == 0 {
                return Err(Error::InvalidK);
            }
            None
        }
        _ => Some(Zone::new(*rect, k, q)?),
    };
    let budget = match strategy {
        PruningStrategy::Conservative { exact_budget } => exact_budget,
        _ => usize::MAX,
    };
    if let Some(z) = zone.as_mut() {
        if budget == 0 {
            z.freeze();
        }
    }

    let mut occluders = Vec::new();
    let mut coincident = 0;
    for idx in facilities_by_distance(facilities, q_index) {
        let f = facilities[idx];
        if f == q {
            coincident += 1;
            continue;
        }
        let h = bisector(f, q)?;
        let accept = match zone.as_mut() {
            None => true,
            Some(z) if z.is_frozen() => !z.cheap_prune(f),
            Some(z) => {
                if z.cheap_prune(f) {
                    false
                } else if z.cheap_keep(f) {
                    z.apply(idx, &h);
                    true
                } else {
                    z.insert(idx, &h)
                }
            }
        };
        if !accept {
            continue;
        }
        if let Some(o) = build_occluder_for(idx, f, q, rect)? {
            occluders.push(o);
        }
        if let Some(z) = zone.as_mut() {
            if !z.is_frozen() && occluders.len() >= budget {
                z.freeze();
            }
        }
    }
    Ok(Selection {
        occluders,
        zone,
        coincident,
    })
}
