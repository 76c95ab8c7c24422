//! Static 2D kd-tree for radius and k-nearest queries.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::colloid::Vec2;

const LEAF: usize = 16;

struct Node {
    start: usize,
    end: usize,
    // split axis and value; children are stored implicitly when `left != usize::MAX`
    axis: usize,
    split: f64,
    left: usize,
    right: usize,
    lo: Vec2,
    hi: Vec2,
}

pub struct KdTree<'a> {
    points: &'a [Vec2],
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

fn dist2(a: Vec2, b: Vec2) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn box_dist2(p: Vec2, lo: Vec2, hi: Vec2) -> f64 {
    let dx = (lo[0] - p[0]).max(0.0).max(p[0] - hi[0]);
    let dy = (lo[1] - p[1]).max(0.0).max(p[1] - hi[1]);
    dx * dx + dy * dy
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [Vec2]) -> Self {
        let mut tree = KdTree {
            points,
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            tree.build(0, points.len());
        }
        tree
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &i in &self.order[start..end] {
            let p = self.points[i];
            for a in 0..2 {
                lo[a] = lo[a].min(p[a]);
                hi[a] = hi[a].max(p[a]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            axis: 0,
            split: 0.0,
            left: usize::MAX,
            right: usize::MAX,
            lo,
            hi,
        });
        if end - start > LEAF {
            let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
            let mid = (start + end) / 2;
            let pts = self.points;
            self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
            });
            let split = pts[self.order[mid]][axis];
            let left = self.build(start, mid);
            let right = self.build(mid, end);
            let node = &mut self.nodes[id];
            node.axis = axis;
            node.split = split;
            node.left = left;
            node.right = right;
        }
        id
    }

    /// Indices of all points with ‖p − x‖ < radius, in ascending index order.
    pub fn within(&self, x: Vec2, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if box_dist2(x, node.lo, node.hi) >= r2 {
                continue;
            }
            if node.left == usize::MAX {
                for &i in &self.order[node.start..node.end] {
                    if dist2(self.points[i], x) < r2 {
                        out.push(i);
                    }
                }
            } else {
                stack.push(node.left);
                stack.push(node.right);
            }
        }
        out.sort_unstable();
        out
    }

    /// The `k` nearest points to `x` as (distance, index), sorted by distance
    /// with ties broken by ascending index.
    pub fn nearest(&self, x: Vec2, k: usize) -> Vec<(f64, usize)> {
        let mut heap: BinaryHeap<HeapItem> = BinaryHeap::with_capacity(k + 1);
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            let bd = box_dist2(x, node.lo, node.hi);
            if heap.len() == k && bd > heap.peek().map(|h| h.0).unwrap_or(f64::INFINITY) {
                continue;
            }
            if node.left == usize::MAX {
                for &i in &self.order[node.start..node.end] {
                    let item = HeapItem(dist2(self.points[i], x), i);
                    if heap.len() < k {
                        heap.push(item);
                    } else if item < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(item);
                    }
                }
            } else {
                // visit the nearer child first
                let (near, far) = if x[node.axis] < node.split {
                    (node.left, node.right)
                } else {
                    (node.right, node.left)
                };
                stack.push(far);
                stack.push(near);
            }
        }
        let mut v: Vec<(f64, usize)> = heap.into_iter().map(|h| (h.0.sqrt(), h.1)).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v
    }
}
