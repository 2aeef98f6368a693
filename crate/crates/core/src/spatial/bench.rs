//! Timing harness comparing the search structures on the patch workload:
//! one range query of radius `delta_PU` per partition-of-unity center.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{block_count, build_pu_centers, BlockGrid, BruteForce, KdTree, PuCenters, RangeIndex};
use crate::error::{Error, Result};
use crate::geometry::{bounding_box, bounding_rect, convex_hull, BoundingBox, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Block,
    KdTree,
    Brute,
}

impl Structure {
    pub const ALL: [Structure; 3] = [Structure::Block, Structure::KdTree, Structure::Brute];

    pub fn as_str(self) -> &'static str {
        match self {
            Structure::Block => "block",
            Structure::KdTree => "kdtree",
            Structure::Brute => "brute",
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Structure {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "block" => Ok(Structure::Block),
            "kdtree" => Ok(Structure::KdTree),
            "brute" => Ok(Structure::Brute),
            other => Err(format!("unknown structure `{other}` (block, kdtree, brute)")),
        }
    }
}

/// Sites plus the patch queries a PUM build would issue on them.
#[derive(Debug, Clone)]
pub struct Workload {
    pub sites: Vec<Point2>,
    pub bbox: BoundingBox,
    pub centers: PuCenters,
    pub q: usize,
}

impl Workload {
    pub fn from_sites(sites: Vec<Point2>) -> Result<Self> {
        let rect = bounding_rect(&sites)?;
        let bbox = bounding_box(&rect)?;
        let hull = convex_hull(&sites)?;
        let centers = build_pu_centers(&hull, &rect, &bbox, sites.len())?;
        let q = block_count(&bbox, centers.delta_pu)?;
        Ok(Self { sites, bbox, centers, q })
    }

    /// `n` uniform random sites in the unit square.
    pub fn uniform(n: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sites = (0..n).map(|_| Point2::new(rng.gen(), rng.gen())).collect();
        Self::from_sites(sites)
    }

    pub fn query_count(&self) -> usize {
        self.centers.len()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub structure: Structure,
    #[serde(rename = "N")]
    pub n: usize,
    pub build_seconds: f64,
    pub total_query_seconds: f64,
    pub queries_per_second: f64,
}

impl BenchRow {
    pub fn total_seconds(&self) -> f64 {
        self.build_seconds + self.total_query_seconds
    }

    pub fn seconds_per_query(&self, queries: usize) -> f64 {
        self.total_query_seconds / queries.max(1) as f64
    }
}

enum Built<'a> {
    Block(BlockGrid),
    Kd(KdTree),
    Brute(BruteForce<'a>),
}

impl Built<'_> {
    fn index(&self) -> &dyn RangeIndex {
        match self {
            Built::Block(g) => g,
            Built::Kd(t) => t,
            Built::Brute(b) => b,
        }
    }
}

fn build(w: &Workload, s: Structure) -> Result<Built<'_>> {
    Ok(match s {
        Structure::Block => Built::Block(BlockGrid::build(&w.sites, w.bbox, w.q)?),
        Structure::KdTree => Built::Kd(KdTree::build(&w.sites)),
        Structure::Brute => Built::Brute(BruteForce { sites: &w.sites }),
    })
}

/// Checks that every structure returns the brute-force set on the first
/// `max_queries` patch queries.
pub fn verify_equivalence(w: &Workload, max_queries: usize) -> Result<()> {
    let block = BlockGrid::build(&w.sites, w.bbox, w.q)?;
    let kd = KdTree::build(&w.sites);
    let brute = BruteForce { sites: &w.sites };
    let radius = w.centers.delta_pu;
    for (j, &c) in w.centers.centers.iter().take(max_queries).enumerate() {
        let mut expected = brute.query(c, radius)?;
        expected.sort_unstable();
        for (name, idx) in [("block", &block as &dyn RangeIndex), ("kdtree", &kd)] {
            let mut got = idx.query(c, radius)?;
            got.sort_unstable();
            if got != expected {
                return Err(Error::OracleMismatch(format!(
                    "{name} differs from brute force on query {j} (N = {})",
                    w.sites.len()
                )));
            }
        }
    }
    Ok(())
}

/// Times one structure on the workload, keeping the fastest of `repeats`
/// runs for build and for the query sweep.
pub fn time_structure(w: &Workload, s: Structure, repeats: usize) -> Result<BenchRow> {
    let radius = w.centers.delta_pu;
    let mut best_build = f64::INFINITY;
    let mut best_query = f64::INFINITY;
    let mut buf = Vec::with_capacity(64);
    for _ in 0..repeats.max(1) {
        let t0 = Instant::now();
        let built = black_box(build(w, s)?);
        best_build = best_build.min(t0.elapsed().as_secs_f64());

        let index = built.index();
        let t1 = Instant::now();
        let mut found = 0usize;
        for &c in &w.centers.centers {
            buf.clear();
            index.query_into(black_box(c), radius, &mut buf)?;
            found += buf.len();
        }
        black_box(found);
        best_query = best_query.min(t1.elapsed().as_secs_f64());
    }
    let queries = w.query_count();
    Ok(BenchRow {
        structure: s,
        n: w.sites.len(),
        build_seconds: best_build,
        total_query_seconds: best_query,
        queries_per_second: queries as f64 / best_query.max(f64::MIN_POSITIVE),
    })
}

/// Runs the benchmark for every `n`, gating each size on the equivalence check.
pub fn run_benchmark(
    sizes: &[usize],
    seed: u64,
    structures: &[Structure],
    repeats: usize,
) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    for (k, &n) in sizes.iter().enumerate() {
        let w = Workload::uniform(n, seed.wrapping_add(k as u64))?;
        verify_equivalence(&w, 256)?;
        for &s in structures {
            rows.push(time_structure(&w, s, repeats)?);
        }
    }
    Ok(rows)
}
