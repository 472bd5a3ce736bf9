#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rknn_core::{HalfPlane, Point2, Rect};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn point_in(rng: &mut impl Rng, rect: &Rect) -> Point2 {
    Point2::new(
        rng.random_range(rect.min.x..=rect.max.x),
        rng.random_range(rect.min.y..=rect.max.y),
    )
}

pub fn points_in(rng: &mut impl Rng, rect: &Rect, n: usize) -> Vec<Point2> {
    (0..n).map(|_| point_in(rng, rect)).collect()
}

pub fn unit() -> Rect {
    Rect::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap()
}

/// Distance-based count of facilities strictly closer than `facilities[q]`.
pub fn closer(facilities: &[Point2], q: usize, u: Point2) -> usize {
    let dq = u.dist2(facilities[q]);
    facilities
        .iter()
        .enumerate()
        .filter(|&(i, f)| i != q && u.dist2(*f) < dq)
        .count()
}

/// Sorted ids of users with fewer than `k` closer facilities.
pub fn brute_rknn(facilities: &[Point2], users: &[Point2], q: usize, k: usize) -> Vec<usize> {
    (0..users.len())
        .filter(|&i| closer(facilities, q, users[i]) < k)
        .collect()
}

/// Whether `u` lies within `band` of any bisector between `q` and another facility.
pub fn near_any_bisector(facilities: &[Point2], q: usize, u: Point2, band: f64) -> bool {
    let fq = facilities[q];
    facilities.iter().enumerate().any(|(i, f)| {
        i != q && *f != fq && {
            let d = (u.dist(*f) - u.dist(fq)).abs();
            // |dist(u,a) - dist(u,q)| <= |a - q| * distance to the bisector.
            d <= band * f.dist(fq)
        }
    })
}

pub fn line_distance(h: &HalfPlane, p: Point2) -> f64 {
    h.line_distance(p)
}
