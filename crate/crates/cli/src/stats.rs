//! Per-query structural statistics: pruning outcome and BVH shape.

use std::fmt;

use anyhow::Result;
use rknn_core::scene::debug_dump;
use rknn_core::{prepare_query, PruningStrategy, QueryConfig};

use crate::instance::Instance;

#[derive(Clone, Debug, PartialEq)]
pub struct StrategyStats {
    pub strategy: String,
    pub occluders: usize,
    pub coincident: usize,
    /// None when the strategy keeps no zone.
    pub zone_pieces: Option<usize>,
    pub triangles: usize,
    pub bvh_nodes: usize,
    pub bvh_leaves: usize,
    pub bvh_depth: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatsReport {
    pub dataset: String,
    pub query_facility: usize,
    pub k: u32,
    pub facility_count: usize,
    pub user_count: usize,
    pub rows: Vec<StrategyStats>,
    /// Scene dump for the first strategy, when requested.
    pub dump: Option<String>,
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "dataset {} | query facility {} | k {} | |F| {} | |U| {}",
            self.dataset, self.query_facility, self.k, self.facility_count, self.user_count
        )?;
        writeln!(f, "strategy\toccluders\tcoincident\tzone_pieces\ttriangles\tbvh_nodes\tbvh_leaves\tbvh_depth")?;
        for r in &self.rows {
            let pieces = r.zone_pieces.map_or_else(|| "-".to_string(), |p| p.to_string());
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.strategy, r.occluders, r.coincident, pieces, r.triangles, r.bvh_nodes, r.bvh_leaves, r.bvh_depth
            )?;
        }
        if let Some(d) = &self.dump {
            f.write_str(d)?;
        }
        Ok(())
    }
}

/// Builds the scene for the instance's first query under each strategy.
pub fn run_stats(inst: &Instance, k: u32, strategies: &[PruningStrategy], dump: bool) -> Result<StatsReport> {
    let q = *inst.queries.first().ok_or_else(|| anyhow::anyhow!("--queries must be at least 1"))?;
    let mut rows = Vec::new();
    let mut text = None;
    for &s in strategies {
        let cfg = QueryConfig::new(k).with_strategy(s);
        let p = prepare_query(inst.facilities(), inst.users(), q, k, &cfg)?;
        if dump && text.is_none() {
            text = Some(debug_dump(&p.scene, &p.bvh));
        }
        rows.push(StrategyStats {
            strategy: s.label(),
            occluders: p.scene.occluder_count(),
            coincident: p.selection.coincident,
            zone_pieces: p.selection.zone.as_ref().map(|z| z.pieces().len()),
            triangles: p.scene.triangles.len(),
            bvh_nodes: p.bvh.nodes.len(),
            bvh_leaves: p.bvh.leaf_count(),
            bvh_depth: p.bvh.depth(),
        });
    }
    Ok(StatsReport {
        dataset: inst.label.clone(),
        query_facility: q,
        k,
        facility_count: inst.facilities().len(),
        user_count: inst.users().len(),
        rows,
        dump: text,
    })
}
