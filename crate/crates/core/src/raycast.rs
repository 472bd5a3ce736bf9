//! Vertical rays, ray–triangle intersection and BVH traversal with per-ray hit
//! counting and early termination.

use crate::geometry::Point2;
use crate::parallel::par_map;
use crate::scene::{Bvh, Scene, Triangle3, MAX_DEPTH};

/// Ray shot straight down from above every layer of a scene.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ray {
    pub origin: [f64; 3],
    pub t_max: f64,
}

impl Ray {
    pub const DIRECTION: [f64; 3] = [0.0, 0.0, -1.0];

    pub fn for_user(scene: &Scene, u: Point2) -> Self {
        Self {
            origin: [u.x, u.y, scene.origin_height],
            t_max: scene.origin_height,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct HitReport {
    /// Distinct occluders hit, clipped at the budget.
    pub count: u32,
    pub is_rknn: bool,
}

fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Möller–Trumbore intersection with the occluder edge rules applied to the
/// barycentric coordinates: a coordinate of exactly zero places the point on
/// the opposite edge, which must then be a closed edge.
pub fn intersect_ray_triangle(ray: &Ray, t: &Triangle3) -> Option<f64> {
    let v = t.tri.v.map(|p| [p.x, p.y, t.z]);
    let dir = Ray::DIRECTION;
    let e1 = sub3(v[1], v[0]);
    let e2 = sub3(v[2], v[0]);
    let pvec = cross(dir, e2);
    let det = dot3(e1, pvec);
    if det == 0.0 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = sub3(ray.origin, v[0]);
    let a = dot3(tvec, pvec) * inv;
    let qvec = cross(tvec, e1);
    let b = dot3(dir, qvec) * inv;
    let w = 1.0 - a - b;
    // a weights v1 (opposite edge 2), b weights v2 (opposite edge 0), w weights v0 (opposite edge 1).
    let ok = |coord: f64, edge: usize| coord > 0.0 || (coord == 0.0 && t.tri.edge_closed(edge));
    if !(ok(a, 2) && ok(b, 0) && ok(w, 1)) {
        return None;
    }
    if !t.tri.inside_cut(Point2::new(ray.origin[0], ray.origin[1])) {
        return None;
    }
    let tt = dot3(e2, qvec) * inv;
    (0.0..=ray.t_max).contains(&tt).then_some(tt)
}

/// Vertical-ray specialization: a 2D point-in-triangle test at the layer height.
#[inline]
pub fn intersect_vertical(ray: &Ray, t: &Triangle3) -> Option<f64> {
    let tt = ray.origin[2] - t.z;
    if !(0.0..=ray.t_max).contains(&tt) {
        return None;
    }
    t.tri
        .contains(Point2::new(ray.origin[0], ray.origin[1]))
        .then_some(tt)
}

/// Counts occluders under `u`, stopping once `budget` hits are found.
pub fn count_hits_up_to(bvh: &Bvh, u: Point2, budget: u32) -> u32 {
    if bvh.nodes.is_empty() || budget == 0 {
        return 0;
    }
    let (x, y) = (u.x, u.y);
    let mut stack = [0u32; MAX_DEPTH];
    let mut top = 1usize;
    let mut count = 0u32;
    while top > 0 {
        top -= 1;
        let node = &bvh.nodes[stack[top] as usize];
        if !node.bounds.covers_xy(x, y) {
            continue;
        }
        if node.is_leaf() {
            count += bvh.packs[node.right as usize].hits(x, y);
            if count >= budget {
                return budget;
            }
        } else {
            stack[top] = node.right;
            stack[top + 1] = node.start;
            top += 2;
        }
    }
    count
}

/// Hit report for one user with early termination at `k`.
pub fn count_hits(bvh: &Bvh, u: Point2, k: u32) -> HitReport {
    let count = count_hits_up_to(bvh, u, k);
    HitReport {
        count,
        is_rknn: count < k,
    }
}

/// One ray per user; `mask[i]` is whether user `i` has fewer than `k` hits.
pub fn cast_all(bvh: &Bvh, users: &[Point2], k: u32, workers: usize) -> Vec<bool> {
    par_map(users, workers, |u| count_hits(bvh, *u, k).is_rknn)
}

/// Per-user hit counts clipped at `budget`.
pub fn cast_counts(bvh: &Bvh, users: &[Point2], budget: u32, workers: usize) -> Vec<u32> {
    par_map(users, workers, |u| count_hits_up_to(bvh, *u, budget))
}

/// Reference counter: tests every triangle of the scene without the BVH.
pub fn count_hits_linear(scene: &Scene, u: Point2, budget: u32) -> u32 {
    let ray = Ray::for_user(scene, u);
    let mut count = 0;
    for t in &scene.triangles {
        if count >= budget {
            break;
        }
        if intersect_vertical(&ray, t).is_some() {
            count += 1;
        }
    }
    count
}
