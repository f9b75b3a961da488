use super::graph::Node;

const LEAF: usize = 16;

/// Static kd-tree over node positions for nearest-neighbour queries that
/// skip nodes on the query node's own road.
pub(crate) struct NodeTree<'a> {
    nodes: &'a [Node],
    order: Vec<u32>,
    /// Implicit tree over `order`: node `i` covers `spans[i]`, split on
    /// `axes[i]` at `cuts[i]`; leaves have `axes[i] == usize::MAX`.
    spans: Vec<(usize, usize)>,
    axes: Vec<usize>,
    cuts: Vec<f64>,
    children: Vec<(u32, u32)>,
}

impl<'a> NodeTree<'a> {
    pub(crate) fn new(nodes: &'a [Node]) -> Self {
        let mut tree = NodeTree {
            nodes,
            order: (0..nodes.len() as u32).collect(),
            spans: Vec::new(),
            axes: Vec::new(),
            cuts: Vec::new(),
            children: Vec::new(),
        };
        if !nodes.is_empty() {
            tree.split(0, nodes.len());
        }
        tree
    }

    fn coord(&self, id: u32, axis: usize) -> f64 {
        self.nodes[id as usize].pos[axis]
    }

    fn split(&mut self, lo: usize, hi: usize) -> u32 {
        let me = self.spans.len();
        self.spans.push((lo, hi));
        self.axes.push(usize::MAX);
        self.cuts.push(0.0);
        self.children.push((0, 0));
        if hi - lo <= LEAF {
            return me as u32;
        }
        let d = self.nodes[self.order[lo] as usize].pos.dim();
        let mut best = (0usize, -1.0f64);
        for axis in 0..d {
            let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
            for &id in &self.order[lo..hi] {
                let c = self.coord(id, axis);
                a = a.min(c);
                b = b.max(c);
            }
            if b - a > best.1 {
                best = (axis, b - a);
            }
        }
        let axis = best.0;
        if !(best.1 > 0.0) {
            return me as u32;
        }
        let mid = (lo + hi) / 2;
        let nodes = self.nodes;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
            nodes[a as usize].pos[axis].total_cmp(&nodes[b as usize].pos[axis])
        });
        let cut = self.coord(self.order[mid], axis);
        let left = self.split(lo, mid);
        let right = self.split(mid, hi);
        self.axes[me] = axis;
        self.cuts[me] = cut;
        self.children[me] = (left, right);
        me as u32
    }

    /// The `k` nearest nodes to node `id` not lying on its road, by
    /// increasing squared distance with ties broken by index.
    pub(crate) fn nearest_off_road(&self, id: usize, k: usize, out: &mut Vec<(f64, u32)>) {
        out.clear();
        if k == 0 || self.spans.is_empty() {
            return;
        }
        let own = self.nodes[id].road();
        let p = self.nodes[id].pos.coords();
        self.visit(0, id, own, p, k, out);
    }

    fn visit(
        &self,
        t: usize,
        id: usize,
        own: Option<usize>,
        p: &[f64],
        k: usize,
        out: &mut Vec<(f64, u32)>,
    ) {
        let axis = self.axes[t];
        if axis == usize::MAX {
            let (lo, hi) = self.spans[t];
            for &other in &self.order[lo..hi] {
                if other as usize == id {
                    continue;
                }
                let n = &self.nodes[other as usize];
                if own.is_some() && n.road() == own {
                    continue;
                }
                let d2: f64 = n
                    .pos
                    .coords()
                    .iter()
                    .zip(p)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                let key = (d2, other);
                if out.len() == k && !less(key, out[k - 1]) {
                    continue;
                }
                let at = out.partition_point(|&e| less(e, key));
                out.insert(at, key);
                out.truncate(k);
            }
            return;
        }
        let gap = p[axis] - self.cuts[t];
        let (near, far) = if gap < 0.0 {
            (self.children[t].0, self.children[t].1)
        } else {
            (self.children[t].1, self.children[t].0)
        };
        self.visit(near as usize, id, own, p, k, out);
        if out.len() < k || gap * gap <= out[k - 1].0 {
            self.visit(far as usize, id, own, p, k, out);
        }
    }
}

fn less(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}
