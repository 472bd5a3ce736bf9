//! Layered 3D scene of occluder triangles and the bounding volume hierarchy
//! built over it.

use std::fmt::Write as _;

use wide::f64x4;

use crate::geometry::{HalfPlane, Occluder, Point2, Rect, Triangle2};

/// An occluder triangle lifted to its layer height.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle3 {
    pub tri: Triangle2,
    pub z: f64,
    /// 0-based position of the owning occluder in the scene.
    pub occluder: u32,
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub triangles: Vec<Triangle3>,
    /// Facility id of each occluder, indexed by layer position.
    pub facility_ids: Vec<usize>,
    pub origin_height: f64,
    pub domain: Rect,
}

impl Scene {
    pub fn occluder_count(&self) -> usize {
        self.facility_ids.len()
    }
}

/// Stacks occluders as horizontal layers: occluder `i` (1-based, in the given
/// order) sits at `z = i`; ray origins sit at `m + 1`.
pub fn assemble_scene(occluders: &[Occluder], domain: Rect) -> Scene {
    let mut triangles = Vec::with_capacity(occluders.len() * 2);
    for (i, o) in occluders.iter().enumerate() {
        let z = (i + 1) as f64;
        triangles.extend(o.triangles.iter().map(|tri| Triangle3 {
            tri: *tri,
            z,
            occluder: i as u32,
        }));
    }
    Scene {
        triangles,
        facility_ids: occluders.iter().map(|o| o.facility_id).collect(),
        origin_height: occluders.len() as f64 + 1.0,
        domain,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb3 {
    pub const EMPTY: Aabb3 = Aabb3 {
        min: [f64::INFINITY; 3],
        max: [f64::NEG_INFINITY; 3],
    };

    pub fn of_triangle(t: &Triangle3) -> Aabb3 {
        let (lo, hi) = t.tri.bounds();
        Aabb3 {
            min: [lo.x, lo.y, t.z],
            max: [hi.x, hi.y, t.z],
        }
    }

    pub fn union(&self, other: &Aabb3) -> Aabb3 {
        let mut out = *self;
        for a in 0..3 {
            out.min[a] = out.min[a].min(other.min[a]);
            out.max[a] = out.max[a].max(other.max[a]);
        }
        out
    }

    pub fn contains_box(&self, other: &Aabb3) -> bool {
        (0..3).all(|a| self.min[a] <= other.min[a] && other.max[a] <= self.max[a])
    }

    /// Does a vertical line through `(x, y)` cross the box's footprint?
    #[inline]
    pub fn covers_xy(&self, x: f64, y: f64) -> bool {
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }

    fn grow_point(&mut self, p: [f64; 3]) {
        for ((lo, hi), v) in self.min.iter_mut().zip(&mut self.max).zip(p) {
            *lo = lo.min(v);
            *hi = hi.max(v);
        }
    }
}

pub const LEAF_SIZE: usize = 8;
pub const MAX_DEPTH: usize = 64;

#[derive(Clone, Copy, Debug)]
pub struct BvhNode {
    pub bounds: Aabb3,
    /// Leaf: first entry in `Bvh::order`. Interior: index of the left child;
    /// the right child follows the left subtree.
    pub start: u32,
    /// Leaf: number of triangles. Interior: 0.
    pub count: u32,
    /// Interior: index of the right child. Leaf: index into `Bvh::packs`.
    pub right: u32,
}

impl BvhNode {
    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

const LANES: usize = 4;
const GROUPS: usize = LEAF_SIZE.div_ceil(LANES);

/// Four triangles in lane-parallel form. Each lane repeats the arithmetic of
/// [`crate::geometry::EdgeTest::value`] and [`HalfPlane::eval`], so results are
/// bit-identical to testing the triangles one at a time. Unused lanes never hit.
#[derive(Clone, Copy, Debug)]
struct LaneGroup {
    ax: [f64x4; 3],
    ay: [f64x4; 3],
    dx: [f64x4; 3],
    dy: [f64x4; 3],
    sign: [f64x4; 3],
    /// All-ones lanes where the edge is closed.
    closed: [f64x4; 3],
    nx: f64x4,
    ny: f64x4,
    c: f64x4,
}

impl LaneGroup {
    fn new(triangles: &[Triangle2]) -> Self {
        let mut ax = [[0.0; LANES]; 3];
        let mut ay = [[0.0; LANES]; 3];
        let mut dx = [[0.0; LANES]; 3];
        let mut dy = [[0.0; LANES]; 3];
        let mut sign = [[1.0; LANES]; 3];
        let mut closed = [[0.0; LANES]; 3];
        let (mut nx, mut ny, mut c) = ([0.0; LANES], [0.0; LANES], [f64::INFINITY; LANES]);
        for (lane, tri) in triangles.iter().enumerate() {
            for (e, t) in tri.edge_tests().iter().enumerate() {
                ax[e][lane] = t.ax;
                ay[e][lane] = t.ay;
                dx[e][lane] = t.dx;
                dy[e][lane] = t.dy;
                sign[e][lane] = t.sign;
                closed[e][lane] = if t.closed { 1.0 } else { 0.0 };
            }
            let cut = tri.cut.unwrap_or(HalfPlane {
                n: Point2::new(0.0, 0.0),
                c: -1.0,
            });
            nx[lane] = cut.n.x;
            ny[lane] = cut.n.y;
            c[lane] = cut.c;
        }
        let v = |a: [[f64; LANES]; 3]| a.map(f64x4::from);
        LaneGroup {
            ax: v(ax),
            ay: v(ay),
            dx: v(dx),
            dy: v(dy),
            sign: v(sign),
            closed: v(closed).map(|m| m.simd_gt(f64x4::ZERO)),
            nx: nx.into(),
            ny: ny.into(),
            c: c.into(),
        }
    }

    #[inline]
    fn hits(&self, x: f64x4, y: f64x4) -> u32 {
        let zero = f64x4::ZERO;
        let mut inside = self.nx * x + self.ny * y - self.c;
        inside = inside.simd_gt(zero);
        for e in 0..3 {
            let v = self.sign[e] * (self.dx[e] * (y - self.ay[e]) - self.dy[e] * (x - self.ax[e]));
            inside &= v.simd_gt(zero) | (v.simd_eq(zero) & self.closed[e]);
        }
        inside.to_bitmask().count_ones()
    }
}

/// The triangles of one leaf, packed for lane-parallel testing.
#[derive(Clone, Copy, Debug)]
pub struct LeafPack {
    groups: [LaneGroup; GROUPS],
    used: usize,
}

impl LeafPack {
    fn new(triangles: &[Triangle2]) -> Self {
        debug_assert!(triangles.len() <= LEAF_SIZE);
        let groups = std::array::from_fn(|g| {
            let lo = (g * LANES).min(triangles.len());
            let hi = ((g + 1) * LANES).min(triangles.len());
            LaneGroup::new(&triangles[lo..hi])
        });
        LeafPack {
            groups,
            used: triangles.len().div_ceil(LANES),
        }
    }

    /// Number of this leaf's triangles containing `(x, y)`.
    #[inline]
    pub fn hits(&self, x: f64, y: f64) -> u32 {
        let (x, y) = (f64x4::splat(x), f64x4::splat(y));
        self.groups[..self.used].iter().map(|g| g.hits(x, y)).sum()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Bvh {
    pub nodes: Vec<BvhNode>,
    /// Triangle indices into `Scene::triangles`, grouped by leaf.
    pub order: Vec<u32>,
    /// Packed triangles of each leaf, indexed by the leaf's `right` field.
    pub packs: Vec<LeafPack>,
}

struct BuildItem {
    index: u32,
    bounds: Aabb3,
    centroid: [f64; 3],
}

/// Median split along the longest horizontal axis of the centroid bounds.
///
/// All rays run along z, so a split in z never separates what a ray visits;
/// the split axis is chosen among x and y and falls back to z only when the
/// centroids share their footprint.
pub fn build_bvh(scene: &Scene) -> Bvh {
    let mut items: Vec<BuildItem> = scene
        .triangles
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let bounds = Aabb3::of_triangle(t);
            let v = t.tri.v;
            BuildItem {
                index: i as u32,
                bounds,
                centroid: [
                    (v[0].x + v[1].x + v[2].x) / 3.0,
                    (v[0].y + v[1].y + v[2].y) / 3.0,
                    t.z,
                ],
            }
        })
        .collect();
    let mut bvh = Bvh {
        nodes: Vec::with_capacity(2 * items.len() / LEAF_SIZE + 1),
        order: Vec::with_capacity(items.len()),
        packs: Vec::new(),
    };
    if !items.is_empty() {
        build_node(&mut bvh, &mut items, 1);
    }
    for node in bvh.nodes.iter_mut().filter(|n| n.is_leaf()) {
        let range = node.start as usize..(node.start + node.count) as usize;
        let tris: Vec<Triangle2> = bvh.order[range]
            .iter()
            .map(|&i| scene.triangles[i as usize].tri)
            .collect();
        node.right = bvh.packs.len() as u32;
        bvh.packs.push(LeafPack::new(&tris));
    }
    bvh
}

fn build_node(bvh: &mut Bvh, items: &mut [BuildItem], depth: usize) -> u32 {
    let bounds = items
        .iter()
        .fold(Aabb3::EMPTY, |acc, it| acc.union(&it.bounds));
    let node_index = bvh.nodes.len() as u32;
    bvh.nodes.push(BvhNode {
        bounds,
        start: 0,
        count: 0,
        right: 0,
    });
    if items.len() <= LEAF_SIZE || depth >= MAX_DEPTH {
        let node = &mut bvh.nodes[node_index as usize];
        node.start = bvh.order.len() as u32;
        node.count = items.len() as u32;
        bvh.order.extend(items.iter().map(|it| it.index));
        return node_index;
    }

    let mut cb = Aabb3::EMPTY;
    for it in items.iter() {
        cb.grow_point(it.centroid);
    }
    let ext = [cb.max[0] - cb.min[0], cb.max[1] - cb.min[1], cb.max[2] - cb.min[2]];
    let axis = if ext[0] == 0.0 && ext[1] == 0.0 {
        2
    } else if ext[0] >= ext[1] {
        0
    } else {
        1
    };
    // With all centroids equal the partition below is still an even index split.
    let mid = items.len() / 2;
    items.select_nth_unstable_by(mid, |a, b| {
        a.centroid[axis]
            .total_cmp(&b.centroid[axis])
            .then(a.index.cmp(&b.index))
    });
    let (left, right) = items.split_at_mut(mid);
    build_node(bvh, left, depth + 1);
    let right_index = build_node(bvh, right, depth + 1);
    let node = &mut bvh.nodes[node_index as usize];
    node.start = node_index + 1;
    node.right = right_index;
    node_index
}

impl Bvh {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn depth(&self) -> usize {
        fn go(bvh: &Bvh, i: usize) -> usize {
            let n = &bvh.nodes[i];
            if n.is_leaf() {
                1
            } else {
                1 + go(bvh, n.start as usize).max(go(bvh, n.right as usize))
            }
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(self, 0)
        }
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }
}

/// Line-oriented text dump: one primitive per line as `kind id coords...`.
pub fn debug_dump(scene: &Scene, bvh: &Bvh) -> String {
    let mut out = String::new();
    for (i, t) in scene.triangles.iter().enumerate() {
        let v = t.tri.v;
        let _ = writeln!(
            out,
            "tri {i} {} {} {} {} {} {} {} {}",
            t.occluder, t.z, v[0].x, v[0].y, v[1].x, v[1].y, v[2].x, v[2].y
        );
    }
    for (i, n) in bvh.nodes.iter().enumerate() {
        let kind = if n.is_leaf() { "leaf" } else { "node" };
        let b = n.bounds;
        let _ = writeln!(
            out,
            "{kind} {i} {} {} {} {} {} {}",
            b.min[0], b.min[1], b.min[2], b.max[0], b.max[1], b.max[2]
        );
    }
    out
}
