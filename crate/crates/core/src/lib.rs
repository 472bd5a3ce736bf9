//! Reverse k-nearest-neighbor queries answered by casting one vertical ray per
//! user through a stack of occluder layers.
//!
//! For a query facility `q`, every competitor `a` contributes the half-plane
//! where `a` is strictly closer than `q`. Each half-plane, clipped to the
//! domain, is triangulated into an occluder and lifted to its own height. A
//! user is a result exactly when the ray dropped through its location hits
//! fewer than `k` occluders. Influence-zone pruning keeps occluders that can
//! never change that decision out of the scene.
//!
//! ```
//! use rknn_core::{rknn_query, Point2, QueryConfig};
//!
//! let facilities = [Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.0, 2.0)];
//! let users = [Point2::new(1.5, 1.5), Point2::new(-1.0, -1.0)];
//! let result = rknn_query(&facilities, &users, 0, &QueryConfig::new(2)).unwrap();
//! assert_eq!(result.result_user_ids, vec![1]);
//! ```

pub mod baselines;
pub mod data;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod parallel;
pub mod raycast;
pub mod scene;
pub mod zone;

pub use baselines::{direct_count, infzone_rknn, oracle_rknn, slice_rknn};
pub use engine::{
    domain_rect, mono_rknn_query, prepare_query, rknn_query, EarlyTermination, PreparedQuery,
    QueryConfig, QueryResult, Timings, Traversal,
};
pub use error::{Error, Result};
pub use geometry::{
    bisector, build_occluder, point_in_occluder, HalfPlane, Occluder, OccluderKind, Point2, Rect,
    Side, Triangle2,
};
pub use raycast::{cast_all, count_hits, HitReport, Ray};
pub use scene::{assemble_scene, build_bvh, Bvh, Scene, Triangle3};
pub use zone::{select_facilities, PruningStrategy, Selection, Zone, ZonePiece};
