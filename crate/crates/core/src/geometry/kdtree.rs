//! Static 3D kd-tree for exact nearest-neighbour queries.

use super::pose::Vec3;

const LEAF_SIZE: usize = 8;

#[derive(Clone, Debug)]
struct Node {
    /// Tight bounding box of the node's points.
    lo: [f64; 3],
    hi: [f64; 3],
    start: usize,
    end: usize,
    /// Child node ids; `None` for a leaf.
    children: Option<(usize, usize)>,
}

impl Node {
    #[inline]
    fn box_sq_dist(&self, q: &[f64; 3]) -> f64 {
        q.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(q, (lo, hi))| (lo - q).max(q - hi).max(0.0).powi(2))
            .sum()
    }
}

#[derive(Clone, Debug)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    /// Original index of each entry in `points`.
    index: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::new();
        if !points.is_empty() {
            build_node(points, &mut order, 0, &mut nodes);
        }
        KdTree {
            points: order.iter().map(|&i| [points[i].x, points[i].y, points[i].z]).collect(),
            index: order,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index (into the slice given to `build`) and squared distance of the
    /// closest point. Among equidistant points the lowest index wins.
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let q = [q.x, q.y, q.z];
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, &q, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, q: &[f64; 3], best: &mut (usize, f64)) {
        let n = &self.nodes[node];
        match n.children {
            None => {
                for k in n.start..n.end {
                    let d = sq_dist(&self.points[k], q);
                    let idx = self.index[k];
                    if d < best.1 || (d == best.1 && idx < best.0) {
                        *best = (idx, d);
                    }
                }
            }
            Some((a, b)) => {
                let (da, db) = (self.nodes[a].box_sq_dist(q), self.nodes[b].box_sq_dist(q));
                let ((near, dn), (far, df)) = if da <= db { ((a, da), (b, db)) } else { ((b, db), (a, da)) };
                // `<=` so equidistant points with lower indices are still seen
                if dn <= best.1 {
                    self.search(near, q, best);
                }
                if df <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

#[inline]
fn sq_dist(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

// Nodes cover contiguous ranges of `order`; returns the node id.
fn build_node(points: &[Vec3], order: &mut [usize], offset: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for &i in order.iter() {
        lo = lo.inf(&points[i]);
        hi = hi.sup(&points[i]);
    }
    nodes.push(Node {
        lo: [lo.x, lo.y, lo.z],
        hi: [hi.x, hi.y, hi.z],
        start: offset,
        end: offset + order.len(),
        children: None,
    });
    if order.len() <= LEAF_SIZE {
        return id;
    }
    let dim = (hi - lo).imax();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| points[a][dim].total_cmp(&points[b][dim]));
    let (left_part, right_part) = order.split_at_mut(mid);
    let left = build_node(points, left_part, offset, nodes);
    let right = build_node(points, right_part, offset + mid, nodes);
    nodes[id].children = Some((left, right));
    id
}
