//! Planar primitives: points, the domain rectangle, perpendicular bisectors and
//! the triangulated occluders that cover a bisector's invalid side.
//!
//! Every occluder triangle carries per-edge open/closed flags. The bisector edge
//! is always open (a user exactly on the bisector is equidistant and therefore
//! does not count against the query), and an edge shared by two triangles of the
//! same occluder is closed in the lower sub-index only. Edge functions are
//! evaluated with their endpoints in a canonical order, so a point on a shared
//! edge sees exactly opposite values from the two triangles and each occluder
//! contributes at most once.
//!
//! Triangle vertices on the bisector are computed in floating point, so each
//! occluder triangle also carries the exact half-plane: a point belongs to the
//! occluder only if it passes the triangle test and lies strictly on the
//! invalid side. Users exactly on a bisector are then never counted.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    #[inline]
    pub fn dist2(self, other: Point2) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(self, other: Point2) -> f64 {
        self.dist2(other).sqrt()
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn sub(self, other: Point2) -> Point2 {
        Point2::new(self.x - other.x, self.y - other.y)
    }

    #[inline]
    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }
}

/// Axis-aligned rectangle with strictly positive area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub fn new(min: Point2, max: Point2) -> Result<Self> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(Error::NonFinite);
        }
        if !(min.x < max.x && min.y < max.y) {
            return Err(Error::InvalidRect);
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Point2 {
        self.min.lerp(self.max, 0.5)
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed containment.
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Corners in counter-clockwise order starting at (min, min).
    pub fn corners(&self) -> [Point2; 4] {
        [
            self.min,
            Point2::new(self.max.x, self.min.y),
            self.max,
            Point2::new(self.min.x, self.max.y),
        ]
    }
}

/// Classification of a point against a [`HalfPlane`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    /// The competitor is strictly closer than the query.
    Invalid,
    Boundary,
    Valid,
}

/// `{ p : n·p > c }` is the invalid side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfPlane {
    pub n: Point2,
    pub c: f64,
}

impl HalfPlane {
    /// Signed value `n·p − c`; positive on the invalid side.
    #[inline]
    pub fn eval(&self, p: Point2) -> f64 {
        self.n.x * p.x + self.n.y * p.y - self.c
    }

    #[inline]
    pub fn side(&self, p: Point2) -> Side {
        let s = self.eval(p);
        if s > 0.0 {
            Side::Invalid
        } else if s < 0.0 {
            Side::Valid
        } else {
            Side::Boundary
        }
    }

    /// Euclidean distance from `p` to the boundary line.
    pub fn line_distance(&self, p: Point2) -> f64 {
        self.eval(p).abs() / self.n.norm()
    }
}

/// Perpendicular bisector of `a` and `q`, oriented so that the invalid side is
/// where `a` is strictly closer than `q`.
pub fn bisector(a: Point2, q: Point2) -> Result<HalfPlane> {
    if a == q {
        return Err(Error::CoincidentFacilities);
    }
    let n = a.sub(q);
    let mid = a.lerp(q, 0.5);
    Ok(HalfPlane { n, c: n.dot(mid) })
}

/// Free-function form of [`HalfPlane::side`].
pub fn side(h: &HalfPlane, p: Point2) -> Side {
    h.side(p)
}

#[inline]
fn orient(a: Point2, b: Point2, p: Point2) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}

/// Orientation of `p` against the directed edge `a → b`, evaluated with the
/// endpoints in lexicographic order so that `edge_function(a, b, p)` is exactly
/// `-edge_function(b, a, p)`.
#[inline]
pub fn edge_function(a: Point2, b: Point2, p: Point2) -> f64 {
    if (a.x, a.y) <= (b.x, b.y) {
        orient(a, b, p)
    } else {
        -orient(b, a, p)
    }
}

/// Triangle with per-edge inclusion flags. Edge `i` runs from `v[i]` to
/// `v[(i + 1) % 3]`; vertices are stored counter-clockwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle2 {
    pub v: [Point2; 3],
    /// Bit `i` set means points on edge `i` belong to the triangle.
    pub closed_edges: u8,
    /// Position of this triangle within its occluder.
    pub sub: u8,
    /// Half-plane a point must also lie strictly inside of, if any.
    pub cut: Option<HalfPlane>,
}

impl Triangle2 {
    /// Builds a triangle, reordering to counter-clockwise. `closed` refers to
    /// the edges of the vertex order as given. Returns `None` for zero area.
    pub fn new(v: [Point2; 3], closed: [bool; 3], sub: u8) -> Option<Self> {
        let area2 = orient(v[0], v[1], v[2]);
        if area2 == 0.0 || !area2.is_finite() {
            return None;
        }
        let (v, closed) = if area2 > 0.0 {
            (v, closed)
        } else {
            // Reversing v1/v2 maps edge 0 (v0v1) -> edge 2, edge 1 -> edge 1, edge 2 -> edge 0.
            ([v[0], v[2], v[1]], [closed[2], closed[1], closed[0]])
        };
        let mut bits = 0u8;
        for (i, c) in closed.iter().enumerate() {
            if *c {
                bits |= 1 << i;
            }
        }
        Some(Self {
            v,
            closed_edges: bits,
            sub,
            cut: None,
        })
    }

    pub fn with_cut(mut self, h: HalfPlane) -> Self {
        self.cut = Some(h);
        self
    }

    /// Strictly inside the cut, or `true` without one.
    #[inline]
    pub fn inside_cut(&self, p: Point2) -> bool {
        self.cut.is_none_or(|h| h.eval(p) > 0.0)
    }

    #[inline]
    pub fn edge_closed(&self, i: usize) -> bool {
        self.closed_edges & (1 << i) != 0
    }

    /// Twice the signed area (positive).
    pub fn area2(&self) -> f64 {
        orient(self.v[0], self.v[1], self.v[2])
    }

    /// Half-open membership test.
    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        for i in 0..3 {
            let e = edge_function(self.v[i], self.v[(i + 1) % 3], p);
            if e < 0.0 || (e == 0.0 && !self.edge_closed(i)) {
                return false;
            }
        }
        self.inside_cut(p)
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        let mut lo = self.v[0];
        let mut hi = self.v[0];
        for p in &self.v[1..] {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }
}

/// Precomputed form of one triangle edge, evaluating exactly the same
/// arithmetic as [`edge_function`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeTest {
    pub ax: f64,
    pub ay: f64,
    pub dx: f64,
    pub dy: f64,
    /// `1.0`, or `-1.0` when the endpoints were swapped into canonical order.
    pub sign: f64,
    pub closed: bool,
}

impl EdgeTest {
    pub fn new(a: Point2, b: Point2, closed: bool) -> Self {
        let (lo, hi, sign) = if (a.x, a.y) <= (b.x, b.y) {
            (a, b, 1.0)
        } else {
            (b, a, -1.0)
        };
        Self {
            ax: lo.x,
            ay: lo.y,
            dx: hi.x - lo.x,
            dy: hi.y - lo.y,
            sign,
            closed,
        }
    }

    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.sign * (self.dx * (y - self.ay) - self.dy * (x - self.ax))
    }

    #[inline]
    pub fn passes(&self, x: f64, y: f64) -> bool {
        let e = self.value(x, y);
        e > 0.0 || (e == 0.0 && self.closed)
    }
}

impl Triangle2 {
    pub fn edge_tests(&self) -> [EdgeTest; 3] {
        [0, 1, 2].map(|i| EdgeTest::new(self.v[i], self.v[(i + 1) % 3], self.edge_closed(i)))
    }
}

/// How an occluder's triangles were produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OccluderKind {
    /// Single triangle whose bisector edge ends inside (or on) the domain.
    Normal,
    /// Single triangle reaching beyond the domain along a supporting line.
    Extended,
    /// Two triangles covering a rectangular invalid region.
    AxisAligned,
    /// Exact fan triangulation, used when supporting-line intersections would
    /// land too far from the domain.
    Fan,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Occluder {
    pub facility_id: usize,
    pub triangles: Vec<Triangle2>,
    pub halfplane: HalfPlane,
    pub kind: OccluderKind,
}

/// Supporting-line intersections farther than this many diagonals from the
/// domain center switch to the exact triangulation.
pub const FAR_VERTEX_FACTOR: f64 = 1e3;

/// Axis along which a point is moved when nudged onto the closed invalid side.
#[derive(Clone, Copy)]
enum Axis {
    X,
    Y,
}

/// Moves `p` along `axis` until `h.eval(p) >= 0`, starting at one ulp and
/// doubling the step.
fn nudge_invalid(h: &HalfPlane, mut p: Point2, axis: Axis) -> Point2 {
    let grad = match axis {
        Axis::X => h.n.x,
        Axis::Y => h.n.y,
    };
    if grad == 0.0 {
        return p;
    }
    let mut step = 0.0f64;
    while h.eval(p) < 0.0 {
        let coord = match axis {
            Axis::X => &mut p.x,
            Axis::Y => &mut p.y,
        };
        let next = if grad > 0.0 {
            coord.next_up()
        } else {
            coord.next_down()
        };
        step = (2.0 * step).max((next - *coord).abs());
        *coord += step.copysign(grad);
    }
    p
}

/// Point on `h`'s boundary line with the given x (requires `n.y != 0`).
fn line_at_x(h: &HalfPlane, x: f64) -> Point2 {
    let p = Point2::new(x, (h.c - h.n.x * x) / h.n.y);
    nudge_invalid(h, p, Axis::Y)
}

/// Point on `h`'s boundary line with the given y (requires `n.x != 0`).
fn line_at_y(h: &HalfPlane, y: f64) -> Point2 {
    let p = Point2::new((h.c - h.n.y * y) / h.n.x, y);
    nudge_invalid(h, p, Axis::X)
}

/// Triangulated cover of the open invalid side of `bisector(a, q)` within `rect`.
///
/// Returns `Ok(None)` when no corner of `rect` is strictly invalid, i.e. the
/// open invalid side has no interior inside the domain.
pub fn build_occluder(a: Point2, q: Point2, rect: &Rect) -> Result<Option<Occluder>> {
    build_occluder_for(0, a, q, rect)
}

/// [`build_occluder`] with the facility id recorded on the result.
pub fn build_occluder_for(
    facility_id: usize,
    a: Point2,
    q: Point2,
    rect: &Rect,
) -> Result<Option<Occluder>> {
    let h = bisector(a, q)?;
    let corners = rect.corners();
    let values = corners.map(|c| h.eval(c));

    // First strict maximum in fixed corner order.
    let mut best = 0;
    for i in 1..4 {
        if values[i] > values[best] {
            best = i;
        }
    }
    if values[best] <= 0.0 {
        return Ok(None);
    }

    let axis_aligned = a.x == q.x || a.y == q.y;
    let (triangles, kind) = if axis_aligned {
        (axis_triangles(&h, rect, &corners, &values), OccluderKind::AxisAligned)
    } else {
        let v = corners[best];
        let p1 = line_at_x(&h, v.x);
        let p2 = line_at_y(&h, v.y);
        let center = rect.center();
        let limit = FAR_VERTEX_FACTOR * rect.diagonal();
        let far = !(p1.dist(center) <= limit && p2.dist(center) <= limit);
        if far {
            (fan_triangles(&h, rect), OccluderKind::Fan)
        } else {
            let kind = if rect.contains(p1) && rect.contains(p2) {
                OccluderKind::Normal
            } else {
                OccluderKind::Extended
            };
            let tri = Triangle2::new([v, p1, p2], [true, false, true], 0);
            (tri.into_iter().collect(), kind)
        }
    };

    if triangles.is_empty() {
        return Ok(None);
    }
    Ok(Some(Occluder {
        facility_id,
        triangles: triangles.into_iter().map(|t| t.with_cut(h)).collect(),
        halfplane: h,
        kind,
    }))
}

fn axis_triangles(h: &HalfPlane, rect: &Rect, corners: &[Point2; 4], values: &[f64; 4]) -> Vec<Triangle2> {
    // The two corners on the far side tie exactly; keep fixed corner order.
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap().then(i.cmp(&j)));
    let (v1, v2) = (corners[order[0]], corners[order[1]]);
    let (p1, p2) = if h.n.y == 0.0 {
        // Vertical bisector: project the far corners horizontally onto it.
        (line_at_y(h, v1.y), line_at_y(h, v2.y))
    } else {
        (line_at_x(h, v1.x), line_at_x(h, v2.x))
    };
    debug_assert!(rect.contains(v1) && rect.contains(v2));
    let mut out = Vec::with_capacity(2);
    // ∆(v1, p1, p2): edges v1p1 (domain side), p1p2 (bisector), p2v1 (shared).
    out.extend(Triangle2::new([v1, p1, p2], [true, false, true], 0));
    // ∆(v1, v2, p2): edges v1v2, v2p2 (domain sides), p2v1 (shared, open here).
    out.extend(Triangle2::new([v1, v2, p2], [true, true, false], 1));
    out
}

/// Fan triangulation of `rect ∩ { h.eval >= 0 }`.
fn fan_triangles(h: &HalfPlane, rect: &Rect) -> Vec<Triangle2> {
    let clipped = clip_closed_invalid(&rect.corners(), h);
    let mut poly: Vec<(Point2, bool)> = Vec::with_capacity(clipped.len());
    for (p, on_line) in clipped {
        let p = if on_line && h.eval(p) != 0.0 {
            // Re-solve on the domain edge through `p`, then slide along it.
            if (p.y == rect.min.y || p.y == rect.max.y) && h.n.x != 0.0 {
                let s = line_at_y(h, p.y);
                nudge_invalid(h, Point2::new(s.x.clamp(rect.min.x, rect.max.x), p.y), Axis::X)
            } else if h.n.y != 0.0 {
                let s = line_at_x(h, p.x);
                nudge_invalid(h, Point2::new(p.x, s.y.clamp(rect.min.y, rect.max.y)), Axis::Y)
            } else {
                nudge_invalid(h, p, Axis::X)
            }
        } else {
            p
        };
        if poly.last().map(|(q, _)| *q) != Some(p) {
            poly.push((p, on_line));
        }
    }
    while poly.len() > 1 && poly.first().map(|x| x.0) == poly.last().map(|x| x.0) {
        poly.pop();
    }
    let n = poly.len();
    let mut out = Vec::new();
    if n < 3 {
        return out;
    }
    let on_bisector = |i: usize, j: usize| poly[i].1 && poly[j].1;
    for i in 1..n - 1 {
        let e0 = if i == 1 { !on_bisector(0, 1) } else { false };
        let e1 = !on_bisector(i, i + 1);
        let e2 = if i == n - 2 { !on_bisector(i + 1, 0) } else { true };
        let sub = out.len() as u8;
        out.extend(Triangle2::new(
            [poly[0].0, poly[i].0, poly[i + 1].0],
            [e0, e1, e2],
            sub,
        ));
    }
    out
}

/// Clips a convex polygon to `{ h.eval >= 0 }`, flagging vertices that lie on
/// the boundary line (either exactly or as computed intersections).
fn clip_closed_invalid(poly: &[Point2], h: &HalfPlane) -> Vec<(Point2, bool)> {
    let n = poly.len();
    let vals: Vec<f64> = poly.iter().map(|p| h.eval(*p)).collect();
    let mut out = Vec::with_capacity(n + 2);
    for i in 0..n {
        let j = (i + 1) % n;
        let (si, sj) = (vals[i], vals[j]);
        if si >= 0.0 {
            out.push((poly[i], si == 0.0));
        }
        if (si > 0.0 && sj < 0.0) || (si < 0.0 && sj > 0.0) {
            let t = si / (si - sj);
            out.push((poly[i].lerp(poly[j], t), true));
        }
    }
    out
}

/// True iff `p` lies in the occluder under the half-open edge rules.
pub fn point_in_occluder(o: &Occluder, p: Point2) -> bool {
    o.triangles.iter().any(|t| t.contains(p))
}

/// Number of occluder triangles containing `p`; at most one by construction.
pub fn occluder_triangle_hits(o: &Occluder, p: Point2) -> usize {
    o.triangles.iter().filter(|t| t.contains(p)).count()
}
