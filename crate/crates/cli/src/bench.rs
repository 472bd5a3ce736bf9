//! Benchmark runs and their CSV/JSON rows.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use anyhow::{bail, Result};
use rknn_core::baselines::{infzone_rknn_with, oracle_rknn_with, slice_rknn_with};
use rknn_core::{rknn_query, EarlyTermination, PruningStrategy, QueryConfig, Timings};
use serde::Serialize;

use crate::instance::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    Rtrknn,
    Infzone,
    Slice,
    Oracle,
}

impl Algo {
    pub const ALL: [Algo; 4] = [Algo::Rtrknn, Algo::Infzone, Algo::Slice, Algo::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Algo::Rtrknn => "rtrknn",
            Algo::Infzone => "infzone",
            Algo::Slice => "slice",
            Algo::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algo::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm {s:?}; expected one of rtrknn, infzone, slice, oracle"))
    }
}

/// One query's answer and cost.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub result_user_ids: Vec<usize>,
    pub occluders_accepted: usize,
    pub timings: Timings,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs one algorithm on query facility `q` of `inst`. Baselines report only
/// a total time and no occluders.
pub fn run_algo(
    algo: Algo,
    inst: &Instance,
    q: usize,
    k: u32,
    strategy: PruningStrategy,
    early_termination: EarlyTermination,
    workers: usize,
) -> Result<Outcome> {
    let (f, u) = (inst.facilities(), inst.users());
    if algo == Algo::Rtrknn {
        let cfg = QueryConfig::new(k)
            .with_strategy(strategy)
            .with_workers(workers)
            .with_early_termination(early_termination);
        let r = rknn_query(f, u, q, &cfg)?;
        return Ok(Outcome {
            result_user_ids: r.result_user_ids,
            occluders_accepted: r.occluders_accepted,
            timings: r.timings,
        });
    }
    let start = Instant::now();
    let ids = match algo {
        Algo::Infzone => infzone_rknn_with(f, u, q, k, QueryConfig::new(k).margin_fraction, workers)?,
        Algo::Slice => slice_rknn_with(f, u, q, k, workers)?,
        Algo::Oracle => oracle_rknn_with(f, u, q, k, workers)?,
        Algo::Rtrknn => unreachable!(),
    };
    Ok(Outcome {
        result_user_ids: ids,
        occluders_accepted: 0,
        timings: Timings {
            total_ms: ms(start),
            ..Timings::default()
        },
    })
}

/// Query position within the run, or the aggregate marker.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum QuerySeq {
    Index(usize),
    Label(&'static str),
}

/// A per-query count, or its mean on aggregate rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Stat {
    Count(usize),
    Mean(f64),
}

impl Stat {
    pub fn value(self) -> f64 {
        match self {
            Stat::Count(c) => c as f64,
            Stat::Mean(m) => m,
        }
    }
}

/// Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub dataset: String,
    pub algo: String,
    pub k: u32,
    pub facility_count: usize,
    pub user_count: usize,
    pub query_seq: QuerySeq,
    pub occluders_accepted: Stat,
    pub t_occluder_ms: f64,
    pub t_bvh_ms: f64,
    pub t_cast_ms: f64,
    pub t_transfer_ms: f64,
    pub t_total_ms: f64,
    pub result_count: Stat,
}

pub const CSV_HEADER: [&str; 13] = [
    "dataset",
    "algo",
    "k",
    "facility_count",
    "user_count",
    "query_seq",
    "occluders_accepted",
    "t_occluder_ms",
    "t_bvh_ms",
    "t_cast_ms",
    "t_transfer_ms",
    "t_total_ms",
    "result_count",
];

impl BenchRow {
    pub fn is_aggregate(&self) -> bool {
        matches!(self.query_seq, QuerySeq::Label(_))
    }
}

/// Milliseconds rounded to microsecond resolution.
fn micro(v: f64) -> f64 {
    (v * 1e3).round() / 1e3
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub ks: Vec<u32>,
    pub algos: Vec<Algo>,
    pub strategy: PruningStrategy,
    pub workers: usize,
    pub warmup: usize,
}

fn mean_row(rows: &[BenchRow]) -> BenchRow {
    let n = rows.len().max(1) as f64;
    let avg = |f: fn(&BenchRow) -> f64| micro(rows.iter().map(f).sum::<f64>() / n);
    let first = &rows[0];
    BenchRow {
        query_seq: QuerySeq::Label("mean"),
        occluders_accepted: Stat::Mean(rows.iter().map(|r| r.occluders_accepted.value()).sum::<f64>() / n),
        t_occluder_ms: avg(|r| r.t_occluder_ms),
        t_bvh_ms: avg(|r| r.t_bvh_ms),
        t_cast_ms: avg(|r| r.t_cast_ms),
        t_transfer_ms: 0.0,
        t_total_ms: avg(|r| r.t_total_ms),
        result_count: Stat::Mean(rows.iter().map(|r| r.result_count.value()).sum::<f64>() / n),
        ..first.clone()
    }
}

/// One detail row per (algo, k, query) followed by a mean row per (algo, k).
/// Fails if two algorithms disagree on any query's result count.
pub fn run_bench(inst: &Instance, cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if inst.queries.is_empty() {
        bail!("--queries must be at least 1");
    }
    let mut rows = Vec::new();
    let mut counts: BTreeMap<(u32, usize), (Algo, usize)> = BTreeMap::new();
    for &algo in &cfg.algos {
        for &k in &cfg.ks {
            for i in 0..cfg.warmup {
                let q = inst.queries[i % inst.queries.len()];
                run_algo(algo, inst, q, k, cfg.strategy, EarlyTermination::Enabled, cfg.workers)?;
            }
            let mut group = Vec::with_capacity(inst.queries.len());
            for (seq, &q) in inst.queries.iter().enumerate() {
                let out = run_algo(algo, inst, q, k, cfg.strategy, EarlyTermination::Enabled, cfg.workers)?;
                let count = out.result_user_ids.len();
                match counts.get(&(k, seq)) {
                    Some(&(other, c)) if c != count => bail!(
                        "result count mismatch at k={k} query {seq}: {other} found {c}, {algo} found {count}"
                    ),
                    Some(_) => {}
                    None => {
                        counts.insert((k, seq), (algo, count));
                    }
                }
                let t = out.timings;
                group.push(BenchRow {
                    dataset: inst.label.clone(),
                    algo: algo.name().to_string(),
                    k,
                    facility_count: inst.facilities().len(),
                    user_count: inst.users().len(),
                    query_seq: QuerySeq::Index(seq),
                    occluders_accepted: Stat::Count(out.occluders_accepted),
                    t_occluder_ms: micro(t.occluder_build_ms),
                    t_bvh_ms: micro(t.bvh_build_ms),
                    t_cast_ms: micro(t.raycast_ms),
                    t_transfer_ms: 0.0,
                    t_total_ms: micro(t.total_ms),
                    result_count: Stat::Count(count),
                });
            }
            let mean = mean_row(&group);
            rows.extend(group);
            rows.push(mean);
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(CSV_HEADER)?;
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[BenchRow], mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, rows)?;
    writeln!(w)?;
    Ok(())
}
