//! Checks every algorithm against the brute-force oracle, query by query.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use anyhow::Result;
use rknn_core::baselines::oracle_rknn_with;
use rknn_core::{EarlyTermination, PruningStrategy};

use crate::bench::{run_algo, Algo};
use crate::instance::Instance;

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub ks: Vec<u32>,
    /// Baselines checked alongside rtrknn; the oracle itself is always the reference.
    pub baselines: Vec<Algo>,
    pub workers: usize,
    pub early_termination: EarlyTermination,
}

/// First disagreement found, as (query position, facility index, user index).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub method: String,
    pub k: u32,
    pub query_seq: usize,
    pub facility: usize,
    pub user: usize,
    /// True when the oracle includes the user and the method does not.
    pub missing: bool,
}

#[derive(Clone, Debug, Default)]
pub struct VerifyReport {
    /// One line per (method, k, query).
    pub lines: Vec<String>,
    pub checks: usize,
    pub total_mismatches: usize,
    pub first: Option<Mismatch>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.total_mismatches == 0
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} checks, {} mismatches", self.checks, self.total_mismatches);
        if let Some(m) = &self.first {
            let side = if m.missing { "missing from" } else { "extra in" };
            let _ = write!(
                s,
                "\nfirst mismatch: {} k={} query {} (facility {}), user {} {side} result",
                m.method, m.k, m.query_seq, m.facility, m.user
            );
        }
        s
    }
}

fn methods(cfg: &VerifyConfig) -> Vec<(String, Algo, PruningStrategy)> {
    let mut out: Vec<(String, Algo, PruningStrategy)> =
        [PruningStrategy::Exact, PruningStrategy::conservative(), PruningStrategy::None]
            .into_iter()
            .map(|s| (format!("rtrknn/{}", s.label()), Algo::Rtrknn, s))
            .collect();
    for &b in &cfg.baselines {
        if b != Algo::Rtrknn && b != Algo::Oracle {
            out.push((b.name().to_string(), b, PruningStrategy::Exact));
        }
    }
    out
}

pub fn run_verify(inst: &Instance, cfg: &VerifyConfig) -> Result<VerifyReport> {
    let mut report = VerifyReport::default();
    let methods = methods(cfg);
    for &k in &cfg.ks {
        for (seq, &q) in inst.queries.iter().enumerate() {
            let truth = oracle_rknn_with(inst.facilities(), inst.users(), q, k, cfg.workers)?;
            let truth_set: BTreeSet<usize> = truth.iter().copied().collect();
            for (name, algo, strategy) in &methods {
                let got = run_algo(*algo, inst, q, k, *strategy, cfg.early_termination, cfg.workers)?;
                let got_set: BTreeSet<usize> = got.result_user_ids.iter().copied().collect();
                let missing: Vec<usize> = truth_set.difference(&got_set).copied().collect();
                let extra: Vec<usize> = got_set.difference(&truth_set).copied().collect();
                let diff = missing.len() + extra.len();
                report.checks += 1;
                report.total_mismatches += diff;
                report.lines.push(format!(
                    "{name} k={k} query {seq} (facility {q}): {} results, {diff} mismatches",
                    got_set.len()
                ));
                if report.first.is_none() && diff > 0 {
                    let (user, is_missing) = match (missing.first(), extra.first()) {
                        (Some(&m), Some(&e)) if e < m => (e, false),
                        (Some(&m), _) => (m, true),
                        (None, Some(&e)) => (e, false),
                        (None, None) => unreachable!(),
                    };
                    report.first = Some(Mismatch {
                        method: name.clone(),
                        k,
                        query_seq: seq,
                        facility: q,
                        user,
                        missing: is_missing,
                    });
                }
            }
        }
    }
    Ok(report)
}
