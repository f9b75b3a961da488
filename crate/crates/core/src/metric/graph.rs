//! Transfer graph: candidate junction points on roads, linked by road edges
//! (travel at the road's speed) and hop edges (straight travel at speed ε).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::knn::NodeTree;
use super::{LegMode, PathLeg, SolverConfig};
use crate::error::{check_dim, Result};
use crate::geom::{closest_pair, Vector, PARALLEL_TOL};
use crate::sampler::ProcessSample;

/// Relative tolerance under which two candidates on the same road merge.
const MERGE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeTag {
    /// On the sample road with this index.
    Road(usize),
    /// The i-th terminal point of the graph.
    Terminal(usize),
    /// Off-road junction point (ingested from an external path).
    Free,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub tag: NodeTag,
    pub pos: Vector,
    /// Arc-length parameter on the road's line (0 for off-road nodes).
    pub param: f64,
}

impl Node {
    pub fn road(&self) -> Option<usize> {
        match self.tag {
            NodeTag::Road(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeKind {
    Road { road: usize, speed: f64 },
    Hop,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub from: u32,
    pub to: u32,
    pub length: f64,
    pub kind: EdgeKind,
}

impl Edge {
    /// Traversal time with hop speed `epsilon`.
    pub fn cost(&self, epsilon: f64) -> f64 {
        match self.kind {
            EdgeKind::Road { speed, .. } => self.length / speed,
            EdgeKind::Hop => self.length / epsilon,
        }
    }
}

/// Off-road path to splice into a graph: consecutive points joined by legs.
#[derive(Clone, Debug, Default)]
pub struct Ingest {
    pub paths: Vec<Vec<PathLeg>>,
}

/// Finite search structure whose shortest paths are ε-paths through the sample.
#[derive(Clone, Debug)]
pub struct TransferGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    /// Node ids of the terminal points, in the order given at construction.
    pub terminals: Vec<usize>,
    /// Hop speed the graph was built for.
    pub epsilon: f64,
    /// Node ids on each sample road, sorted by parameter (empty for roads
    /// not used by the graph).
    pub road_nodes: Vec<Vec<u32>>,
    offsets: Vec<usize>,
    adjacency: Vec<(u32, u32)>,
}

/// Result of a single-source shortest path run.
#[derive(Clone, Debug)]
pub struct ShortestPaths {
    pub source: usize,
    pub dist: Vec<f64>,
    pub pred: Vec<u32>,
}

pub(crate) const NO_PRED: u32 = u32::MAX;

impl ShortestPaths {
    /// Node sequence from a seed to `target`, or None if unreachable.
    pub fn node_path(&self, target: usize) -> Option<Vec<usize>> {
        if !self.dist[target].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while self.pred[cur] != NO_PRED {
            cur = self.pred[cur] as usize;
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapItem {
    cost: f64,
    node: u32,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on cost, then on node index.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Candidate point before merging: parameter on its road and the slot that
/// receives the final node id.
struct Candidate {
    param: f64,
    slot: usize,
}

/// Refraction offset along a road of speed `v` for a hop of perpendicular
/// length `h` at speed `eps`.
fn refraction_offset(h: f64, v: f64, eps: f64) -> f64 {
    if v <= eps {
        0.0
    } else {
        h * eps / (v * v - eps * eps).sqrt()
    }
}

impl TransferGraph {
    /// Builds the graph for the given terminals. Roads not faster than ε are
    /// left out: any leg on them is dominated by the straight hop between its
    /// endpoints.
    pub fn build(
        sample: &ProcessSample,
        terminals: &[Vector],
        config: &SolverConfig,
        ingest: &Ingest,
    ) -> Result<TransferGraph> {
        config.validate()?;
        config.check_sample(sample)?;
        let d = sample.dim();
        for t in terminals {
            check_dim(d, t.dim())?;
        }
        let eps = config.epsilon;
        let roads = &sample.roads;
        let active: Vec<usize> = (0..roads.len()).filter(|&i| roads[i].speed > eps).collect();

        let mut per_road: Vec<Vec<Candidate>> = (0..roads.len()).map(|_| Vec::new()).collect();
        let mut slots: Vec<u32> = Vec::new();
        let new_slot = |slots: &mut Vec<u32>| {
            slots.push(u32::MAX);
            slots.len() - 1
        };
        let mut hop_slots: Vec<(usize, usize)> = Vec::new();
        let mut base: Vec<(usize, f64, f64)> = Vec::new();

        // Terminal projections.
        let mut terminal_proj: Vec<Vec<usize>> = vec![Vec::new(); terminals.len()];
        for (ti, t) in terminals.iter().enumerate() {
            for &i in &active {
                let line = &roads[i].line;
                let s = line.parameter_of(t);
                let slot = new_slot(&mut slots);
                per_road[i].push(Candidate { param: s, slot });
                terminal_proj[ti].push(slot);
                base.push((i, s, line.distance_to(t)));
            }
        }
        // Pairwise closest points.
        for (ai, &i) in active.iter().enumerate() {
            for &j in &active[ai + 1..] {
                let cp = closest_pair(&roads[i].line, &roads[j].line, PARALLEL_TOL)?;
                let si = new_slot(&mut slots);
                let sj = new_slot(&mut slots);
                per_road[i].push(Candidate {
                    param: cp.s,
                    slot: si,
                });
                per_road[j].push(Candidate {
                    param: cp.t,
                    slot: sj,
                });
                hop_slots.push((si, sj));
                base.push((i, cp.s, cp.gap));
                base.push((j, cp.t, cp.gap));
            }
        }
        // Dyadic refinements around each base candidate.
        if config.candidate_depth > 0 {
            for &(i, s, h) in &base {
                let delta = refraction_offset(h, roads[i].speed, eps);
                if !(delta > 0.0) {
                    continue;
                }
                for level in 0..config.candidate_depth {
                    let off = delta * 0.5f64.powi(level as i32);
                    for p in [s - off, s + off] {
                        let slot = new_slot(&mut slots);
                        per_road[i].push(Candidate { param: p, slot });
                    }
                }
            }
        }
        // Ingested paths: every leg endpoint becomes a node.
        let mut ingest_hops: Vec<(IngestRef, IngestRef)> = Vec::new();
        let mut free_points: Vec<Vector> = Vec::new();
        for path in &ingest.paths {
            let mut prev: Option<IngestRef> = None;
            for leg in path {
                let (start, end) = match leg.mode {
                    LegMode::Road(r) if roads.get(r).is_some_and(|rd| rd.speed > eps) => {
                        let line = &roads[r].line;
                        let a = new_slot(&mut slots);
                        let b = new_slot(&mut slots);
                        per_road[r].push(Candidate {
                            param: line.parameter_of(&leg.from),
                            slot: a,
                        });
                        per_road[r].push(Candidate {
                            param: line.parameter_of(&leg.to),
                            slot: b,
                        });
                        (IngestRef::Slot(a), IngestRef::Slot(b))
                    }
                    _ => {
                        let a = match_terminal(terminals, &leg.from).map_or_else(
                            || {
                                free_points.push(leg.from.clone());
                                IngestRef::Free(free_points.len() - 1)
                            },
                            IngestRef::Terminal,
                        );
                        let b = match_terminal(terminals, &leg.to).map_or_else(
                            || {
                                free_points.push(leg.to.clone());
                                IngestRef::Free(free_points.len() - 1)
                            },
                            IngestRef::Terminal,
                        );
                        ingest_hops.push((a, b));
                        (a, b)
                    }
                };
                if let Some(p) = prev {
                    ingest_hops.push((p, start));
                }
                prev = Some(end);
            }
        }

        // Merge candidates per road and assign node ids.
        let mut nodes: Vec<Node> = Vec::new();
        let mut road_nodes: Vec<Vec<u32>> = vec![Vec::new(); roads.len()];
        let mut edges: Vec<Edge> = Vec::new();
        for (i, cands) in per_road.iter_mut().enumerate() {
            if cands.is_empty() {
                continue;
            }
            cands.sort_by(|a, b| a.param.total_cmp(&b.param).then(a.slot.cmp(&b.slot)));
            let line = &roads[i].line;
            let mut last: Option<(f64, u32)> = None;
            for c in cands.iter() {
                match last {
                    Some((p, id)) if c.param - p <= MERGE_TOL * p.abs().max(1.0) => {
                        slots[c.slot] = id;
                    }
                    _ => {
                        let id = nodes.len() as u32;
                        nodes.push(Node {
                            tag: NodeTag::Road(i),
                            pos: line.point_at(c.param),
                            param: c.param,
                        });
                        if let Some((p, prev_id)) = last {
                            edges.push(Edge {
                                from: prev_id,
                                to: id,
                                length: c.param - p,
                                kind: EdgeKind::Road {
                                    road: i,
                                    speed: roads[i].speed,
                                },
                            });
                        }
                        road_nodes[i].push(id);
                        slots[c.slot] = id;
                        last = Some((c.param, id));
                    }
                }
            }
        }
        let mut terminal_ids = Vec::with_capacity(terminals.len());
        for (ti, t) in terminals.iter().enumerate() {
            terminal_ids.push(nodes.len());
            nodes.push(Node {
                tag: NodeTag::Terminal(ti),
                pos: t.clone(),
                param: 0.0,
            });
        }
        let free_base = nodes.len();
        for p in &free_points {
            nodes.push(Node {
                tag: NodeTag::Free,
                pos: p.clone(),
                param: 0.0,
            });
        }

        // Hop edges, collected as unordered pairs and deduplicated.
        let mut hops: Vec<(u32, u32)> = Vec::new();
        let mut push_hop = |a: u32, b: u32| {
            if a != b {
                hops.push((a.min(b), a.max(b)));
            }
        };
        for (ti, projs) in terminal_proj.iter().enumerate() {
            for &slot in projs {
                push_hop(terminal_ids[ti] as u32, slots[slot]);
            }
        }
        for a in 0..terminal_ids.len() {
            for b in a + 1..terminal_ids.len() {
                push_hop(terminal_ids[a] as u32, terminal_ids[b] as u32);
            }
        }
        for &(a, b) in &hop_slots {
            push_hop(slots[a], slots[b]);
        }
        let resolve = |r: IngestRef| -> u32 {
            match r {
                IngestRef::Slot(s) => slots[s],
                IngestRef::Terminal(t) => terminal_ids[t] as u32,
                IngestRef::Free(f) => (free_base + f) as u32,
            }
        };
        for &(a, b) in &ingest_hops {
            push_hop(resolve(a), resolve(b));
        }
        if config.hop_neighbors > 0 && nodes.len() > 1 {
            let tree = NodeTree::new(&nodes);
            let mut near = Vec::with_capacity(config.hop_neighbors);
            for id in 0..nodes.len() {
                tree.nearest_off_road(id, config.hop_neighbors, &mut near);
                for &(_, other) in &near {
                    push_hop(id as u32, other);
                }
            }
        }
        hops.sort_unstable();
        hops.dedup();
        for (a, b) in hops {
            edges.push(Edge {
                from: a,
                to: b,
                length: nodes[a as usize].pos.distance(&nodes[b as usize].pos),
                kind: EdgeKind::Hop,
            });
        }

        let (offsets, adjacency) = build_adjacency(nodes.len(), &edges);
        Ok(TransferGraph {
            nodes,
            edges,
            terminals: terminal_ids,
            epsilon: eps,
            road_nodes,
            offsets,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbours of `node` as (other node, edge index).
    pub fn neighbors(&self, node: usize) -> &[(u32, u32)] {
        &self.adjacency[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Dijkstra from `source` with hop speed `epsilon`; equal tentative
    /// distances are settled in increasing node order.
    pub fn shortest_paths(&self, source: usize, epsilon: f64) -> ShortestPaths {
        let mut sp = self.shortest_paths_seeded(&[(source, 0.0)], epsilon);
        sp.source = source;
        sp
    }

    /// Dijkstra from several nodes with given initial times.
    pub fn shortest_paths_seeded(&self, seeds: &[(usize, f64)], epsilon: f64) -> ShortestPaths {
        self.shortest_paths_bounded(seeds, epsilon, f64::INFINITY)
    }

    /// Seeded Dijkstra that leaves nodes farther than `bound` at infinity.
    pub fn shortest_paths_bounded(
        &self,
        seeds: &[(usize, f64)],
        epsilon: f64,
        bound: f64,
    ) -> ShortestPaths {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![NO_PRED; n];
        let mut done = vec![false; n];
        for &(s, t) in seeds {
            if t <= bound {
                dist[s] = dist[s].min(t);
            }
        }
        let start: Vec<HeapItem> = seeds
            .iter()
            .filter(|&&(s, t)| t == dist[s])
            .map(|&(s, t)| HeapItem {
                cost: t,
                node: s as u32,
            })
            .collect();
        let mut heap = BinaryHeap::from(start);
        let costs: Vec<f64> = self.edges.iter().map(|e| e.cost(epsilon)).collect();
        while let Some(HeapItem { cost, node }) = heap.pop() {
            let u = node as usize;
            if done[u] {
                continue;
            }
            done[u] = true;
            for &(v, e) in self.neighbors(u) {
                let v = v as usize;
                if done[v] {
                    continue;
                }
                let nd = cost + costs[e as usize];
                if nd < dist[v] && nd <= bound {
                    dist[v] = nd;
                    pred[v] = node;
                    heap.push(HeapItem {
                        cost: nd,
                        node: v as u32,
                    });
                }
            }
        }
        ShortestPaths {
            source: usize::MAX,
            dist,
            pred,
        }
    }

    /// Converts a node path into legs, merging consecutive road edges on the
    /// same road and dropping zero-length hops.
    pub fn legs_of(&self, node_path: &[usize], epsilon: f64) -> Vec<PathLeg> {
        let mut legs: Vec<PathLeg> = Vec::new();
        for w in node_path.windows(2) {
            let (a, b) = (w[0], w[1]);
            let edge = self.edge_between(a, b);
            let from = self.nodes[a].pos.clone();
            let to = self.nodes[b].pos.clone();
            match edge.kind {
                EdgeKind::Road { road, speed } => {
                    if let Some(last) = legs.last_mut() {
                        if last.mode == LegMode::Road(road) {
                            last.to = to;
                            last.duration += edge.length / speed;
                            continue;
                        }
                    }
                    legs.push(PathLeg {
                        from,
                        to,
                        mode: LegMode::Road(road),
                        duration: edge.length / speed,
                    });
                }
                EdgeKind::Hop => {
                    if edge.length == 0.0 {
                        continue;
                    }
                    legs.push(PathLeg {
                        from,
                        to,
                        mode: LegMode::Hop,
                        duration: edge.length / epsilon,
                    });
                }
            }
        }
        legs
    }

    fn edge_between(&self, a: usize, b: usize) -> &Edge {
        // Cheapest edge when several join the same pair.
        let mut best: Option<&Edge> = None;
        for &(v, e) in self.neighbors(a) {
            if v as usize == b {
                let edge = &self.edges[e as usize];
                if best.is_none_or(|bst| edge.length < bst.length) {
                    best = Some(edge);
                }
            }
        }
        best.expect("consecutive path nodes are adjacent")
    }
}

#[derive(Clone, Copy, Debug)]
enum IngestRef {
    Slot(usize),
    Terminal(usize),
    Free(usize),
}

fn match_terminal(terminals: &[Vector], p: &Vector) -> Option<usize> {
    terminals.iter().position(|t| t == p)
}

fn build_adjacency(n: usize, edges: &[Edge]) -> (Vec<usize>, Vec<(u32, u32)>) {
    let mut deg = vec![0usize; n + 1];
    for e in edges {
        deg[e.from as usize] += 1;
        deg[e.to as usize] += 1;
    }
    let mut offsets = vec![0usize; n + 1];
    for i in 0..n {
        offsets[i + 1] = offsets[i] + deg[i];
    }
    let mut fill = offsets.clone();
    let mut adjacency = vec![(0u32, 0u32); offsets[n]];
    for (k, e) in edges.iter().enumerate() {
        adjacency[fill[e.from as usize]] = (e.to, k as u32);
        fill[e.from as usize] += 1;
        adjacency[fill[e.to as usize]] = (e.from, k as u32);
        fill[e.to as usize] += 1;
    }
    (offsets, adjacency)
}
