//! Turning flags into a concrete instance: points, facility split and the
//! facilities used as queries.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rknn_core::data::{gen_synthetic, load_path, split_facilities, Dataset, Split, SplitSpec, SyntheticKind};
use rknn_core::{Point2, Rect};

/// `uniform:N` or `clusters:N[:COUNT[:SPREAD]]`, generated in the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenSpec {
    pub kind: SyntheticKind,
    pub n: usize,
}

impl GenSpec {
    pub const DEFAULT_CLUSTERS: usize = 10;
    pub const DEFAULT_SPREAD: f64 = 0.02;

    pub fn generate(&self, seed: u64) -> Dataset {
        let unit = Rect::new(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).expect("unit square");
        let mut ds = gen_synthetic(self.kind, self.n, &unit, seed);
        ds.label = self.to_string();
        ds
    }
}

impl FromStr for GenSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let n = |p: &str| p.parse::<usize>().with_context(|| format!("bad point count in {s:?}"));
        match parts.as_slice() {
            ["uniform", count] => Ok(Self {
                kind: SyntheticKind::Uniform,
                n: n(count)?,
            }),
            ["clusters", count, rest @ ..] if rest.len() <= 2 => {
                let clusters = match rest.first() {
                    Some(c) => c.parse().with_context(|| format!("bad cluster count in {s:?}"))?,
                    None => Self::DEFAULT_CLUSTERS,
                };
                let spread = match rest.get(1) {
                    Some(v) => v.parse().with_context(|| format!("bad spread in {s:?}"))?,
                    None => Self::DEFAULT_SPREAD,
                };
                Ok(Self {
                    kind: SyntheticKind::Clusters { count: clusters, spread },
                    n: n(count)?,
                })
            }
            _ => bail!("unknown generator {s:?}; expected uniform:N or clusters:N[:COUNT[:SPREAD]]"),
        }
    }
}

impl fmt::Display for GenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SyntheticKind::Uniform => write!(f, "uniform:{}", self.n),
            SyntheticKind::Clusters { count, spread } => write!(f, "clusters:{}:{count}:{spread}", self.n),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Source {
    Path(PathBuf),
    Gen(GenSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceSpec {
    pub source: Source,
    pub gen_seed: u64,
    pub facilities: usize,
    pub facility_seed: u64,
    pub queries: usize,
    pub query_seed: u64,
}

impl InstanceSpec {
    pub const DEFAULT_GEN_SEED: u64 = 1;
    pub const DEFAULT_FACILITY_SEED: u64 = 42;
    pub const DEFAULT_QUERY_SEED: u64 = 7;

    pub fn generated(spec: GenSpec, facilities: usize, queries: usize) -> Self {
        Self {
            source: Source::Gen(spec),
            gen_seed: Self::DEFAULT_GEN_SEED,
            facilities,
            facility_seed: Self::DEFAULT_FACILITY_SEED,
            queries,
            query_seed: Self::DEFAULT_QUERY_SEED,
        }
    }
}

/// How query facilities were drawn from F.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    WithoutReplacement,
    WithReplacement,
}

impl fmt::Display for Sampling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::WithoutReplacement => "without_replacement",
            Self::WithReplacement => "with_replacement",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub label: String,
    pub split: Split,
    /// Indices into `split.facilities`, in query order.
    pub queries: Vec<usize>,
    pub sampling: Sampling,
}

impl Instance {
    pub fn facilities(&self) -> &[Point2] {
        &self.split.facilities
    }

    pub fn users(&self) -> &[Point2] {
        &self.split.users
    }
}

/// Draws `count` facility indices: without replacement when `count <= n`,
/// with replacement otherwise.
pub fn sample_queries(n: usize, count: usize, seed: u64) -> (Vec<usize>, Sampling) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if count <= n {
        (index::sample(&mut rng, n, count).into_vec(), Sampling::WithoutReplacement)
    } else {
        ((0..count).map(|_| rng.random_range(0..n)).collect(), Sampling::WithReplacement)
    }
}

pub fn load_instance(spec: &InstanceSpec) -> Result<Instance> {
    let ds = match &spec.source {
        Source::Path(path) => load_path(path).with_context(|| format!("reading {}", path.display()))?,
        Source::Gen(g) => g.generate(spec.gen_seed),
    };
    if spec.facilities == 0 {
        bail!("--facilities must be at least 1");
    }
    let split = split_facilities(
        &ds,
        SplitSpec {
            facility_count: spec.facilities,
            seed: spec.facility_seed,
        },
    )?;
    let (queries, sampling) = sample_queries(split.facilities.len(), spec.queries, spec.query_seed);
    Ok(Instance {
        label: ds.label,
        split,
        queries,
        sampling,
    })
}
