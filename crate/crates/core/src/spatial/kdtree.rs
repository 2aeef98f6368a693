//! Static 2-d tree used as the comparison baseline for the block grid.
//!
//! Median split on the axis of widest spread, buckets of at most
//! [`LEAF_SIZE`] points.

use crate::error::Result;
use crate::geometry::Point2;

use super::RangeIndex;

pub const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: u8, value: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    nodes: Vec<Node>,
    indices: Vec<usize>,
    points: Vec<Point2>,
}

#[inline]
fn coord(p: &Point2, axis: u8) -> f64 {
    if axis == 0 {
        p.x
    } else {
        p.y
    }
}

impl KdTree {
    pub fn build(sites: &[Point2]) -> Self {
        let mut items: Vec<(Point2, usize)> =
            sites.iter().copied().zip(0..sites.len()).collect();
        let mut nodes = Vec::with_capacity(2 * sites.len() / LEAF_SIZE + 1);
        if !items.is_empty() {
            Self::build_node(&mut items, 0, &mut nodes);
        }
        let (points, indices) = items.into_iter().unzip();
        Self { nodes, indices, points }
    }

    fn build_node(items: &mut [(Point2, usize)], offset: usize, nodes: &mut Vec<Node>) -> u32 {
        let id = nodes.len() as u32;
        if items.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf {
                start: offset,
                end: offset + items.len(),
            });
            return id;
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for (p, _) in items.iter() {
            lo[0] = lo[0].min(p.x);
            hi[0] = hi[0].max(p.x);
            lo[1] = lo[1].min(p.y);
            hi[1] = hi[1].max(p.y);
        }
        let axis: u8 = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
        let mid = items.len() / 2;
        items.select_nth_unstable_by(mid, |a, b| coord(&a.0, axis).total_cmp(&coord(&b.0, axis)));
        let value = coord(&items[mid].0, axis);

        nodes.push(Node::Leaf { start: 0, end: 0 });
        let (left_items, right_items) = items.split_at_mut(mid);
        let left = Self::build_node(left_items, offset, nodes);
        let right = Self::build_node(right_items, offset + mid, nodes);
        nodes[id as usize] = Node::Split { axis, value, left, right };
        id
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn range_query(&self, center: Point2, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect(center, radius, &mut out);
        out
    }

    fn collect(&self, center: Point2, radius: f64, out: &mut Vec<usize>) {
        if self.nodes.is_empty() {
            return;
        }
        let r2 = radius * radius;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(id) = stack.pop() {
            match self.nodes[id as usize] {
                Node::Leaf { start, end } => {
                    for k in start..end {
                        if self.points[k].dist2(center) <= r2 {
                            out.push(self.indices[k]);
                        }
                    }
                }
                // left subtree holds coordinates <= value, right >= value
                Node::Split { axis, value, left, right } => {
                    let c = coord(&center, axis);
                    if c - radius <= value {
                        stack.push(left);
                    }
                    if c + radius >= value {
                        stack.push(right);
                    }
                }
            }
        }
    }
}

impl RangeIndex for KdTree {
    fn query_into(&self, center: Point2, radius: f64, out: &mut Vec<usize>) -> Result<()> {
        self.collect(center, radius, out);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::brute_force_query;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_site() {
        let t = KdTree::build(&[Point2::new(0.2, 0.4)]);
        assert_eq!(t.range_query(Point2::new(0.25, 0.4), 0.1), vec![0]);
        assert!(t.range_query(Point2::new(0.9, 0.9), 0.1).is_empty());
        assert!(KdTree::build(&[]).range_query(Point2::new(0.0, 0.0), 1.0).is_empty());
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut sites: Vec<Point2> = (0..1000)
            .map(|_| Point2::new(rng.gen(), rng.gen()))
            .collect();
        // duplicates and ties on split coordinates
        sites.extend(std::iter::repeat_n(Point2::new(0.5, 0.5), 40));
        let t = KdTree::build(&sites);
        assert_eq!(t.len(), sites.len());
        for _ in 0..200 {
            let c = Point2::new(rng.gen(), rng.gen());
            let radius = rng.gen_range(0.0..0.3);
            let mut a = t.range_query(c, radius);
            let mut b = brute_force_query(c, radius, &sites);
            a.sort_unstable();
            b.sort_unstable();
            assert_eq!(a, b);
        }
    }
}
