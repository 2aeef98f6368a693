//! Block-based partitioning structure.

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, Point2};

use super::RangeIndex;

/// Widest stencil a query may use, in blocks on each side of the center block.
const MAX_REACH: usize = 2;

/// Row/column of a block, row along `y`, column along `x`.
pub type BlockId = (usize, usize);

/// The in-range blocks of the 3 x 3 stencil centered at `block`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub block: BlockId,
    pub member_blocks: Vec<BlockId>,
}

pub fn neighborhood_of(block: BlockId, q: usize) -> Neighborhood {
    stencil(block, q, 1)
}

fn stencil(block: BlockId, q: usize, reach: usize) -> Neighborhood {
    let (r, c) = block;
    let rows = r.saturating_sub(reach)..=(r + reach).min(q - 1);
    let mut member_blocks = Vec::with_capacity((2 * reach + 1).pow(2));
    for rr in rows {
        for cc in c.saturating_sub(reach)..=(c + reach).min(q - 1) {
            member_blocks.push((rr, cc));
        }
    }
    Neighborhood { block, member_blocks }
}

#[inline]
fn cell(v: f64, origin: f64, edge: f64, q: usize) -> usize {
    let k = ((v - origin) / edge).floor();
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(q - 1)
    }
}

/// Block coordinates of `p`; points on the top/right edge of the box are
/// clamped into the last row/column.
pub fn block_of(p: Point2, bbox: &BoundingBox, q: usize) -> Result<BlockId> {
    if !bbox.contains(p) {
        return Err(Error::OutOfDomain { x: p.x, y: p.y });
    }
    let edge = bbox.side / q as f64;
    Ok((
        cell(p.y, bbox.origin.y, edge, q),
        cell(p.x, bbox.origin.x, edge, q),
    ))
}

/// `q x q` buckets of point indices over a bounding box.
///
/// Storage is compressed: `indices` holds all point indices grouped by bucket
/// (row-major), `offsets[k]..offsets[k + 1]` delimits bucket `k`, and `points`
/// mirrors `indices` with the coordinates so a scan stays contiguous.
#[derive(Debug, Clone)]
pub struct BlockGrid {
    q: usize,
    bbox: BoundingBox,
    edge: f64,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    points: Vec<Point2>,
}

impl BlockGrid {
    pub fn build(sites: &[Point2], bbox: BoundingBox, q: usize) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("block count must be positive".into()));
        }
        let ids = sites
            .iter()
            .map(|&p| block_of(p, &bbox, q).map(|(r, c)| r * q + c))
            .collect::<Result<Vec<_>>>()?;

        // counting sort by bucket
        let mut offsets = vec![0usize; q * q + 1];
        for &k in &ids {
            offsets[k + 1] += 1;
        }
        for k in 0..q * q {
            offsets[k + 1] += offsets[k];
        }
        let mut cursor = offsets.clone();
        let mut indices = vec![0usize; sites.len()];
        for (i, &k) in ids.iter().enumerate() {
            indices[cursor[k]] = i;
            cursor[k] += 1;
        }
        let points = indices.iter().map(|&i| sites[i]).collect();
        Ok(Self {
            q,
            bbox,
            edge: bbox.side / q as f64,
            offsets,
            indices,
            points,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn bounding_box(&self) -> &BoundingBox {
        &self.bbox
    }

    pub fn block_edge(&self) -> f64 {
        self.edge
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn bucket(&self, (r, c): BlockId) -> &[usize] {
        let k = r * self.q + c;
        &self.indices[self.offsets[k]..self.offsets[k + 1]]
    }

    /// Stencil half-width needed for `radius`: 1 (the 3 x 3 neighborhood)
    /// while the radius fits in one block edge, 2 (5 x 5) up to two edges.
    pub fn reach_for(&self, radius: f64) -> Result<usize> {
        let needed = ((radius / self.edge).ceil() as usize).max(1);
        // on grids of at most 3 blocks a side the 5 x 5 stencil covers everything
        if needed > MAX_REACH && self.q > MAX_REACH + 1 {
            return Err(Error::RadiusExceedsBlock {
                radius,
                edge: self.edge,
            });
        }
        Ok(needed.min(MAX_REACH))
    }

    /// Indices within `radius` of `center`, scanning only the stencil around
    /// the center's block. Blocks of the stencil that lie entirely outside the
    /// square circumscribing the query disk are skipped.
    pub fn range_query(&self, center: Point2, radius: f64) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        self.query_into(center, radius, &mut out)?;
        Ok(out)
    }

    fn scan(&self, center: Point2, radius: f64, out: &mut Vec<usize>) -> Result<()> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidRadius(radius));
        }
        let reach = self.reach_for(radius)?;
        let q = self.q;
        let o = self.bbox.origin;
        // widen slightly so rounding in the subtraction never drops a candidate
        let pad = radius + 1e-12 * (radius + center.x.abs() + center.y.abs());
        let far = o.x + self.bbox.side;
        let top = o.y + self.bbox.side;
        if center.x + pad < o.x || center.x - pad > far || center.y + pad < o.y || center.y - pad > top {
            return Ok(());
        }
        // outside the box the clamped center is at least as close to every site
        // along each axis, so its stencil still holds all candidates
        let (r0, c0) = (cell(center.y, o.y, self.edge, q), cell(center.x, o.x, self.edge, q));
        let c_lo = cell(center.x - pad, o.x, self.edge, q).max(c0.saturating_sub(reach));
        let c_hi = cell(center.x + pad, o.x, self.edge, q).min(c0 + reach);
        let r_lo = cell(center.y - pad, o.y, self.edge, q).max(r0.saturating_sub(reach));
        let r_hi = cell(center.y + pad, o.y, self.edge, q).min(r0 + reach);
        let r2 = radius * radius;
        for r in r_lo..=r_hi {
            let row = r * q;
            let (start, end) = (self.offsets[row + c_lo], self.offsets[row + c_hi + 1]);
            for k in start..end {
                if self.points[k].dist2(center) <= r2 {
                    out.push(self.indices[k]);
                }
            }
        }
        Ok(())
    }
}

impl RangeIndex for BlockGrid {
    fn query_into(&self, center: Point2, radius: f64, out: &mut Vec<usize>) -> Result<()> {
        self.scan(center, radius, out)
    }
}
