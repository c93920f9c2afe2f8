//! Bounding-volume hierarchy over items with axis-aligned boxes.
//!
//! The tree knows only item boxes; exact item distances and predicates are
//! supplied by the caller, so the same structure indexes simplices, points,
//! balls and cubes.

use super::{Aabb, Point};

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug)]
struct Node<const D: usize> {
    bbox: Aabb<D>,
    /// Leaf: first item slot. Internal: index of the left child (right = left + 1).
    first: u32,
    /// Zero for internal nodes.
    count: u32,
}

#[derive(Clone, Debug, Default)]
pub struct Bvh<const D: usize> {
    nodes: Vec<Node<D>>,
    items: Vec<u32>,
    boxes: Vec<Aabb<D>>,
}

impl<const D: usize> Bvh<D> {
    pub fn build(boxes: &[Aabb<D>]) -> Self {
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * boxes.len() / LEAF_SIZE + 1),
            items: (0..boxes.len() as u32).collect(),
            boxes: boxes.to_vec(),
        };
        if boxes.is_empty() {
            return bvh;
        }
        let centers: Vec<Point<D>> = boxes.iter().map(|b| b.center()).collect();
        bvh.nodes.push(Node {
            bbox: Aabb::empty(),
            first: 0,
            count: 0,
        });
        let mut stack = vec![(0usize, 0usize, boxes.len())];
        while let Some((node, lo, hi)) = stack.pop() {
            let mut bbox = Aabb::empty();
            let mut cbox = Aabb::empty();
            for &it in &bvh.items[lo..hi] {
                bbox = bbox.union(&boxes[it as usize]);
                cbox.grow(&centers[it as usize]);
            }
            bvh.nodes[node].bbox = bbox;
            if hi - lo <= LEAF_SIZE {
                bvh.nodes[node].first = lo as u32;
                bvh.nodes[node].count = (hi - lo) as u32;
                continue;
            }
            let ext = cbox.extent();
            let axis = (0..D).fold(0, |a, i| if ext[i] > ext[a] { i } else { a });
            let mid = (lo + hi) / 2;
            bvh.items[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                centers[a as usize][axis]
                    .total_cmp(&centers[b as usize][axis])
                    .then(a.cmp(&b))
            });
            let left = bvh.nodes.len();
            for _ in 0..2 {
                bvh.nodes.push(Node {
                    bbox: Aabb::empty(),
                    first: 0,
                    count: 0,
                });
            }
            bvh.nodes[node].first = left as u32;
            stack.push((left, lo, mid));
            stack.push((left + 1, mid, hi));
        }
        bvh
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn bounds(&self) -> Aabb<D> {
        self.nodes.first().map(|n| n.bbox).unwrap_or_else(Aabb::empty)
    }

    /// Item minimizing `item_d2` (squared distance whose lower bound is the
    /// squared distance from `p` to the item's box), ties broken by lowest index.
    pub fn nearest<F: Fn(usize) -> f64>(&self, p: &Point<D>, item_d2: F) -> Option<(usize, f64)> {
        self.nearest_within(p, f64::INFINITY, item_d2)
    }

    /// As [`Bvh::nearest`], considering only items with `item_d2 <= max_d2`.
    pub fn nearest_within<F: Fn(usize) -> f64>(&self, p: &Point<D>, max_d2: f64, item_d2: F) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        let mut bound = max_d2;
        let mut stack: Vec<(u32, f64)> = vec![(0, self.nodes[0].bbox.dist2(p))];
        while let Some((ni, nd)) = stack.pop() {
            if nd > bound {
                continue;
            }
            let node = &self.nodes[ni as usize];
            if node.count > 0 {
                let s = node.first as usize;
                for &it in &self.items[s..s + node.count as usize] {
                    let it = it as usize;
                    if self.boxes[it].dist2(p) > bound {
                        continue;
                    }
                    let d2 = item_d2(it);
                    let better = match best {
                        None => d2 <= bound,
                        Some((bi, bd)) => d2 < bd || (d2 == bd && it < bi),
                    };
                    if better {
                        best = Some((it, d2));
                        bound = d2;
                    }
                }
            } else {
                let l = node.first;
                let dl = self.nodes[l as usize].bbox.dist2(p);
                let dr = self.nodes[l as usize + 1].bbox.dist2(p);
                if dl <= dr {
                    stack.push((l + 1, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((l + 1, dr));
                }
            }
        }
        best
    }

    /// Visits items whose node boxes pass `node_pred`. Traversal stops as soon
    /// as `visit` returns `false`; the return value says whether it completed.
    pub fn visit<P, V>(&self, node_pred: P, mut visit: V) -> bool
    where
        P: Fn(&Aabb<D>) -> bool,
        V: FnMut(usize) -> bool,
    {
        if self.nodes.is_empty() {
            return true;
        }
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node_pred(&node.bbox) {
                continue;
            }
            if node.count > 0 {
                let s = node.first as usize;
                for &it in &self.items[s..s + node.count as usize] {
                    if !visit(it as usize) {
                        return false;
                    }
                }
            } else {
                stack.push(node.first + 1);
                stack.push(node.first);
            }
        }
        true
    }

    /// Whether some item with box meeting `b` satisfies `pred`.
    pub fn any_in_box<F: Fn(usize) -> bool>(&self, b: &Aabb<D>, pred: F) -> bool {
        !self.visit(|nb| nb.intersects(b), |i| !(self.boxes[i].intersects(b) && pred(i)))
    }

    pub fn item_box(&self, i: usize) -> &Aabb<D> {
        &self.boxes[i]
    }

    /// Items whose boxes meet `b` (callers refine with exact tests), sorted.
    pub fn candidates_in_box(&self, b: &Aabb<D>) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(
            |nb| nb.intersects(b),
            |i| {
                if self.boxes[i].intersects(b) {
                    out.push(i);
                }
                true
            },
        );
        out.sort_unstable();
        out
    }
}
