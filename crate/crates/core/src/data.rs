//! Dataset ingestion and instance generation.
//!
//! Coordinates are kept in the units of the source file. DIMACS `.co` files
//! store integer microdegrees; no projection is applied.
//!
//! Sampling uses ChaCha8 seeded from a 64-bit seed, so splits and synthetic
//! datasets are identical on every platform.

use std::io::{BufRead, Read, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub points: Vec<Point2>,
    pub label: String,
    pub declared_count: usize,
}

impl Dataset {
    pub fn new(label: impl Into<String>, points: Vec<Point2>) -> Self {
        Self {
            declared_count: points.len(),
            label: label.into(),
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn malformed(line: usize, content: &str) -> Error {
    Error::MalformedLine {
        line,
        content: content.to_string(),
    }
}

fn parse_coord(tok: &str, line: usize, content: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| malformed(line, content))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(malformed(line, content))
    }
}

/// Parses a DIMACS coordinate file (`p aux sp co N` header, `v id x y` lines).
pub fn parse_dimacs_co<R: BufRead>(reader: R, label: &str) -> Result<Dataset> {
    let mut points = Vec::new();
    let mut declared = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let content = line.trim_end_matches('\r');
        let mut toks = content.split_whitespace();
        match toks.next() {
            None | Some("c") => {}
            Some("p") => {
                let rest: Vec<&str> = toks.collect();
                match rest.as_slice() {
                    ["aux", "sp", "co", n] => {
                        declared = Some(n.parse().map_err(|_| malformed(lineno, content))?)
                    }
                    _ => return Err(malformed(lineno, content)),
                }
            }
            Some("v") => {
                let rest: Vec<&str> = toks.collect();
                let [_id, x, y] = rest.as_slice() else {
                    return Err(malformed(lineno, content));
                };
                points.push(Point2::new(
                    parse_coord(x, lineno, content)?,
                    parse_coord(y, lineno, content)?,
                ));
            }
            Some(tok) if tok.starts_with('c') => {}
            Some(_) => return Err(malformed(lineno, content)),
        }
    }
    if let Some(declared) = declared {
        if declared != points.len() {
            return Err(Error::CountMismatch {
                declared,
                found: points.len(),
            });
        }
    }
    Ok(Dataset {
        declared_count: declared.unwrap_or(points.len()),
        label: label.to_string(),
        points,
    })
}

/// Writes a dataset as a DIMACS coordinate file with 1-based vertex ids.
pub fn write_dimacs_co<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    writeln!(w, "c {}", ds.label)?;
    writeln!(w, "p aux sp co {}", ds.points.len())?;
    for (i, p) in ds.points.iter().enumerate() {
        writeln!(w, "v {} {} {}", i + 1, p.x, p.y)?;
    }
    Ok(())
}

pub const CACHE_MAGIC: &[u8; 8] = b"RKNNPT01";

/// Binary point cache: magic, little-endian u64 count, then `(x, y)` f64 pairs.
pub fn write_cache<W: Write>(points: &[Point2], mut w: W) -> Result<()> {
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&(points.len() as u64).to_le_bytes())?;
    for p in points {
        w.write_all(&p.x.to_le_bytes())?;
        w.write_all(&p.y.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_cache<R: Read>(mut r: R, label: &str) -> Result<Dataset> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::BadCacheMagic);
    }
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let n = u64::from_le_bytes(buf) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * 16 {
        return Err(Error::CountMismatch {
            declared: n,
            found: bytes.len() / 16,
        });
    }
    let f = |c: &[u8]| f64::from_le_bytes(c.try_into().expect("8-byte chunk"));
    let points: Vec<Point2> = bytes
        .chunks_exact(16)
        .map(|c| Point2::new(f(&c[..8]), f(&c[8..])))
        .collect();
    if points.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(Dataset::new(label, points))
}

/// Reads either format, detected by the cache magic.
pub fn load_path(path: &std::path::Path) -> Result<Dataset> {
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    let head = file.fill_buf()?;
    if head.starts_with(CACHE_MAGIC) {
        read_cache(file, &label)
    } else {
        parse_dimacs_co(file, &label)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub facility_count: usize,
    pub seed: u64,
}

/// Facilities sampled without replacement (in sampled order) and the remaining
/// points as users (in dataset order), plus the facilities' dataset indices.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub facilities: Vec<Point2>,
    pub users: Vec<Point2>,
    pub facility_indices: Vec<usize>,
}

pub fn split_facilities(ds: &Dataset, spec: SplitSpec) -> Result<Split> {
    let n = ds.points.len();
    if spec.facility_count > n {
        return Err(Error::SpecTooLarge {
            requested: spec.facility_count,
            available: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let facility_indices = index::sample(&mut rng, n, spec.facility_count).into_vec();
    let mut is_facility = vec![false; n];
    for &i in &facility_indices {
        is_facility[i] = true;
    }
    Ok(Split {
        facilities: facility_indices.iter().map(|&i| ds.points[i]).collect(),
        users: ds
            .points
            .iter()
            .zip(&is_facility)
            .filter(|(_, &f)| !f)
            .map(|(p, _)| *p)
            .collect(),
        facility_indices,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SyntheticKind {
    Uniform,
    Clusters { count: usize, spread: f64 },
}

/// Deterministic synthetic points inside `rect`. Cluster points are Gaussian
/// around uniformly placed centers, with `spread` relative to the rectangle's
/// larger side, and clamped to the rectangle.
pub fn gen_synthetic(kind: SyntheticKind, n: usize, rect: &Rect, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |rng: &mut ChaCha8Rng| {
        Point2::new(
            rng.random_range(rect.min.x..rect.max.x),
            rng.random_range(rect.min.y..rect.max.y),
        )
    };
    let (points, label) = match kind {
        SyntheticKind::Uniform => ((0..n).map(|_| uniform(&mut rng)).collect(), format!("uniform-{n}")),
        SyntheticKind::Clusters { count, spread } => {
            let count = count.max(1);
            let centers: Vec<Point2> = (0..count).map(|_| uniform(&mut rng)).collect();
            let sigma = spread.abs() * rect.width().max(rect.height());
            let normal = Normal::new(0.0, sigma).unwrap_or_else(|_| Normal::new(0.0, 0.0).unwrap());
            let points = (0..n)
                .map(|_| {
                    let c = centers[rng.random_range(0..count)];
                    Point2::new(
                        (c.x + normal.sample(&mut rng)).clamp(rect.min.x, rect.max.x),
                        (c.y + normal.sample(&mut rng)).clamp(rect.min.y, rect.max.y),
                    )
                })
                .collect();
            (points, format!("clusters{count}-{n}"))
        }
    };
    Dataset::new(label, points)
}
