mod common;

use common::{brute_rknn, closer, near_any_bisector, point_in, points_in, rng, unit};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rknn_core::baselines::{direct_count, infzone_rknn_with, oracle_rknn_with, slice_rknn_with, SliceIndex};
use rknn_core::engine::prepare_query;
use rknn_core::raycast::{cast_counts, count_hits_linear, count_hits_up_to};
use rknn_core::scene::Aabb3;
use rknn_core::{
    assemble_scene, build_bvh, build_occluder, count_hits, mono_rknn_query, rknn_query, EarlyTermination,
    Point2, PruningStrategy, QueryConfig, Rect, Traversal,
};

const STRATEGIES: [PruningStrategy; 3] = [
    PruningStrategy::Exact,
    PruningStrategy::Conservative { exact_budget: 20 },
    PruningStrategy::None,
];

/// Random instance families: uniform reals, integer grid (many exact ties),
/// tight clusters, and sets with duplicated points.
fn instance(r: &mut ChaCha8Rng, family: usize, nf: usize, nu: usize) -> (Vec<Point2>, Vec<Point2>) {
    let rect = unit();
    let grid = |r: &mut ChaCha8Rng| {
        Point2::new(r.random_range(0..12) as f64, r.random_range(0..12) as f64)
    };
    match family % 4 {
        0 => (points_in(r, &rect, nf), points_in(r, &rect, nu)),
        1 => ((0..nf).map(|_| grid(r)).collect(), (0..nu).map(|_| grid(r)).collect()),
        2 => {
            let c = point_in(r, &rect);
            let near = |r: &mut ChaCha8Rng| {
                Point2::new(c.x + 1e-6 * r.random_range(-1.0..1.0), c.y + 1e-6 * r.random_range(-1.0..1.0))
            };
            let f = (0..nf).map(|_| near(r)).collect();
            let u = (0..nu).map(|i| if i % 2 == 0 { near(r) } else { point_in(r, &rect) }).collect();
            (f, u)
        }
        _ => {
            let mut f = points_in(r, &rect, nf.div_ceil(2));
            let copies: Vec<Point2> = f.iter().take(nf / 2).copied().collect();
            f.extend(copies);
            let mut u = points_in(r, &rect, nu / 2);
            u.extend(f.iter().copied().cycle().take(nu - nu / 2));
            (f, u)
        }
    }
}

#[test]
fn engine_and_baselines_match_brute_force() {
    let mut r = rng(20);
    for trial in 0..240 {
        let nf = [1, 2, 3, 10, 40, 150][trial % 6];
        let (f, u) = instance(&mut r, trial / 6, nf, 400);
        let q = r.random_range(0..f.len());
        for k in [1, 2, 5, 10] {
            let expected = brute_rknn(&f, &u, q, k);
            for s in STRATEGIES {
                for traversal in [Traversal::Bvh, Traversal::Linear] {
                    let cfg = QueryConfig::new(k as u32).with_strategy(s).with_traversal(traversal);
                    let got = rknn_query(&f, &u, q, &cfg).unwrap().result_user_ids;
                    assert_eq!(got, expected, "trial {trial} k {k} {s:?} {traversal:?}");
                }
            }
            assert_eq!(oracle_rknn_with(&f, &u, q, k as u32, 2).unwrap(), expected);
            assert_eq!(infzone_rknn_with(&f, &u, q, k as u32, 0.001, 2).unwrap(), expected, "infzone {trial}");
            assert_eq!(slice_rknn_with(&f, &u, q, k as u32, 2).unwrap(), expected, "slice {trial}");
        }
    }
}

#[test]
fn hit_counts_equal_closer_counts() {
    let mut r = rng(21);
    let mut pairs = 0;
    while pairs < 100_000 {
        let nf = r.random_range(2..60);
        let (f, u) = instance(&mut r, pairs % 2, nf, 500);
        let q = r.random_range(0..nf);
        let cfg = QueryConfig::new(1).with_strategy(PruningStrategy::None);
        let prepared = prepare_query(&f, &u, q, 1, &cfg).unwrap();
        let budget = prepared.budget(1, EarlyTermination::Disabled);
        assert!(budget as usize > prepared.scene.occluder_count());
        let counts = prepared.counts(&u, budget, Traversal::Bvh, 2);
        let band = 1e-9 * prepared.domain.diagonal();
        for (i, &c) in counts.iter().enumerate() {
            // Integer instances are exact, so no band is needed there.
            if pairs % 2 == 0 && near_any_bisector(&f, q, u[i], band) {
                continue;
            }
            assert_eq!(c as usize, closer(&f, q, u[i]), "user {:?}", u[i]);
            pairs += 1;
        }
    }
}

#[test]
fn early_termination_and_traversal_do_not_change_results() {
    let mut r = rng(22);
    for trial in 0..60 {
        let (f, u) = instance(&mut r, trial, 80, 2_000);
        let q = r.random_range(0..f.len());
        let k = r.random_range(1..=12);
        let base = QueryConfig::new(k);
        let a = rknn_query(&f, &u, q, &base).unwrap().result_user_ids;
        let b = rknn_query(&f, &u, q, &base.with_early_termination(EarlyTermination::Disabled))
            .unwrap()
            .result_user_ids;
        let c = rknn_query(&f, &u, q, &base.with_traversal(Traversal::Linear)).unwrap().result_user_ids;
        assert_eq!(a, b);
        assert_eq!(a, c);
    }
}

#[test]
fn off_by_one_budget_is_caught() {
    // Negative control: a budget of k - 1 must disagree with the oracle somewhere.
    let mut r = rng(23);
    let mut mismatches = 0;
    for _ in 0..20 {
        let (f, u) = instance(&mut r, 0, 30, 1_000);
        let cfg = QueryConfig::new(3).with_early_termination(EarlyTermination::OffByOne);
        let got = rknn_query(&f, &u, 0, &cfg).unwrap().result_user_ids;
        if got != brute_rknn(&f, &u, 0, 3) {
            mismatches += 1;
        }
    }
    assert!(mismatches > 0);
}

#[test]
fn bvh_matches_linear_scan_on_many_users() {
    let mut r = rng(24);
    let rect = unit();
    let f = points_in(&mut r, &rect, 300);
    let u = points_in(&mut r, &rect, 100_000);
    let cfg = QueryConfig::new(1).with_strategy(PruningStrategy::None);
    let prepared = prepare_query(&f, &u, 0, 1, &cfg).unwrap();
    let budget = prepared.budget(1, EarlyTermination::Disabled);
    let bvh = cast_counts(&prepared.bvh, &u, budget, 4);
    for (i, &c) in bvh.iter().enumerate() {
        assert_eq!(c, count_hits_linear(&prepared.scene, u[i], budget));
        assert_eq!(c, direct_count(&prepared.selection.occluders, u[i], budget).count);
    }
}

#[test]
fn bvh_structure_invariants() {
    let mut r = rng(25);
    let rect = Rect::new(Point2::new(-5.0, -5.0), Point2::new(5.0, 5.0)).unwrap();
    let mut occluders: Vec<rknn_core::Occluder> = Vec::new();
    let q = point_in(&mut r, &rect);
    while occluders.iter().map(|o| o.triangles.len()).sum::<usize>() < 1_000 {
        if let Some(o) = build_occluder(point_in(&mut r, &rect), q, &rect).unwrap() {
            occluders.push(o);
        }
    }
    let scene = assemble_scene(&occluders, rect);
    // Layer ordering: z follows the occluder index.
    for w in scene.triangles.windows(2) {
        assert!(w[0].z <= w[1].z);
        if w[0].z == w[1].z {
            assert_eq!(w[0].occluder, w[1].occluder);
        }
    }
    let bvh = build_bvh(&scene);
    let mut seen: Vec<u32> = bvh.order.clone();
    seen.sort();
    assert_eq!(seen, (0..scene.triangles.len() as u32).collect::<Vec<_>>());
    assert!(bvh.depth() <= 64);

    fn walk(bvh: &rknn_core::Bvh, scene: &rknn_core::Scene, i: usize, parent: Option<Aabb3>, leaves: &mut usize) {
        let n = &bvh.nodes[i];
        if let Some(p) = parent {
            assert!(p.contains_box(&n.bounds));
        }
        if n.is_leaf() {
            *leaves += 1;
            assert!(n.count as usize <= rknn_core::scene::LEAF_SIZE);
            for &t in &bvh.order[n.start as usize..(n.start + n.count) as usize] {
                assert!(n.bounds.contains_box(&Aabb3::of_triangle(&scene.triangles[t as usize])));
            }
        } else {
            walk(bvh, scene, n.start as usize, Some(n.bounds), leaves);
            walk(bvh, scene, n.right as usize, Some(n.bounds), leaves);
        }
    }
    let mut leaves = 0;
    walk(&bvh, &scene, 0, None, &mut leaves);
    assert_eq!(leaves, bvh.leaf_count());
}

#[test]
fn k_monotonicity_of_results() {
    let mut r = rng(26);
    for trial in 0..30 {
        let (f, u) = instance(&mut r, trial, 50, 1_000);
        let mut prev: Vec<usize> = Vec::new();
        for k in 1..=12 {
            let cur = rknn_query(&f, &u, 0, &QueryConfig::new(k)).unwrap().result_user_ids;
            assert!(prev.iter().all(|id| cur.binary_search(id).is_ok()), "k {k}");
            prev = cur;
        }
        // Per-user form on one scene.
        let prepared = prepare_query(&f, &u, 0, 12, &QueryConfig::new(12).with_strategy(PruningStrategy::None)).unwrap();
        for &p in u.iter().take(200) {
            let results: Vec<bool> = (1..=12).map(|k| count_hits(&prepared.bvh, p, k).is_rknn).collect();
            assert!(results.windows(2).all(|w| !w[0] || w[1]));
        }
    }
}

#[test]
fn results_independent_of_worker_count() {
    let mut r = rng(27);
    let (f, u) = instance(&mut r, 0, 200, 50_000);
    let runs: Vec<Vec<usize>> = [1, 2, 3, 8]
        .iter()
        .map(|&w| rknn_query(&f, &u, 5, &QueryConfig::new(4).with_workers(w)).unwrap().result_user_ids)
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn slice_filtering_and_early_accept_are_sound() {
    let mut r = rng(28);
    let mut filtered = 0;
    for trial in 0..60 {
        let (f, u) = instance(&mut r, trial, 60, 1_000);
        let k = r.random_range(1..=10);
        let q = r.random_range(0..f.len());
        let index = SliceIndex::build(&f, q, k).unwrap();
        for &p in &u {
            let truth = closer(&f, q, p) < k as usize;
            if index.filtered(p) {
                assert!(!truth);
                filtered += 1;
            }
            if p != f[q] && !index.filtered(p) {
                assert_eq!(index.verify(p, true), index.verify(p, false));
                assert_eq!(index.verify(p, false), truth);
            }
        }
    }
    assert!(filtered > 1_000);
}

fn mono_brute(p: &[Point2], q: usize, k: usize) -> Vec<usize> {
    (0..p.len())
        .filter(|&i| i != q)
        .filter(|&i| {
            let dq = p[i].dist2(p[q]);
            (0..p.len()).filter(|&j| j != i && j != q && p[i].dist2(p[j]) < dq).count() < k
        })
        .collect()
}

#[test]
fn monochromatic_matches_brute_force() {
    let mut r = rng(29);
    for trial in 0..80 {
        let n = [2, 3, 50, 200][trial % 4];
        let (p, _) = instance(&mut r, trial / 4, n, 0);
        let q = r.random_range(0..n);
        for k in [1, 2, 5] {
            for s in STRATEGIES {
                let cfg = QueryConfig::new(k).with_strategy(s);
                let got = mono_rknn_query(&p, q, &cfg).unwrap().result_user_ids;
                assert_eq!(got, mono_brute(&p, q, k as usize), "trial {trial} k {k} {s:?}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn strategies_agree(seed in any::<u64>(), nf in 1usize..80, k in 1u32..8, family in 0usize..4) {
        let mut r = rng(seed);
        let (f, u) = instance(&mut r, family, nf, 300);
        let q = r.random_range(0..f.len());
        let expected = brute_rknn(&f, &u, q, k as usize);
        for s in STRATEGIES {
            let got = rknn_query(&f, &u, q, &QueryConfig::new(k).with_strategy(s).with_workers(1)).unwrap();
            prop_assert_eq!(&got.result_user_ids, &expected);
        }
    }

    #[test]
    fn budgeted_count_is_clipped_total(seed in any::<u64>(), budget in 0u32..20) {
        let mut r = rng(seed);
        let (f, u) = instance(&mut r, 0, 30, 50);
        let prepared = prepare_query(&f, &u, 0, 1, &QueryConfig::new(1).with_strategy(PruningStrategy::None)).unwrap();
        for &p in &u {
            let full = count_hits_up_to(&prepared.bvh, p, u32::MAX);
            prop_assert_eq!(count_hits_up_to(&prepared.bvh, p, budget), full.min(budget));
        }
    }
}
