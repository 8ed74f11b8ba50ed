//! Directed flow networks and an exact max-flow / min-cut solver.
//!
//! The solver is the Boykov-Kolmogorov search-tree algorithm: two trees grown
//! from the source and the sink are reused between augmentations, which suits
//! the short paths of grid graphs. Source and sink are ordinary nodes here,
//! so any network shape is accepted, not only pixel graphs.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// One arc pair: capacity `cap` from `from` to `to`, and `rev_cap` back.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cap: f64,
    pub rev_cap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    node_count: usize,
    source: usize,
    sink: usize,
    arcs: Vec<Arc>,
}

impl FlowNetwork {
    pub fn new(node_count: usize, source: usize, sink: usize) -> Result<Self> {
        if source >= node_count || sink >= node_count || source == sink {
            return Err(Error::InvalidNetwork(format!(
                "source {source} and sink {sink} must be distinct nodes of {node_count}"
            )));
        }
        Ok(Self {
            node_count,
            source,
            sink,
            arcs: Vec::new(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) -> Result<()> {
        self.add_edge(from, to, cap, 0.0)
    }

    /// Adds `from → to` with `cap` and `to → from` with `rev_cap`.
    pub fn add_edge(&mut self, from: usize, to: usize, cap: f64, rev_cap: f64) -> Result<()> {
        if from >= self.node_count || to >= self.node_count || from == to {
            return Err(Error::InvalidNetwork(format!(
                "bad arc endpoints {from} -> {to}"
            )));
        }
        if !(cap >= 0.0 && rev_cap >= 0.0 && cap.is_finite() && rev_cap.is_finite()) {
            return Err(Error::InvalidNetwork(format!(
                "capacities must be finite and non-negative, got {cap} / {rev_cap}"
            )));
        }
        let into_source =
            (cap > 0.0 && to == self.source) || (rev_cap > 0.0 && from == self.source);
        let out_of_sink = (cap > 0.0 && from == self.sink) || (rev_cap > 0.0 && to == self.sink);
        if into_source || out_of_sink {
            return Err(Error::InvalidNetwork(format!(
                "arc {from} <-> {to} would enter the source or leave the sink"
            )));
        }
        self.arcs.push(Arc {
            from,
            to,
            cap,
            rev_cap,
        });
        Ok(())
    }

    /// Total capacity of arcs leaving the node set `source_side`.
    pub fn cut_capacity(&self, source_side: &[bool]) -> f64 {
        self.arcs
            .iter()
            .map(|a| match (source_side[a.from], source_side[a.to]) {
                (true, false) => a.cap,
                (false, true) => a.rev_cap,
                _ => 0.0,
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinCut {
    pub flow_value: f64,
    /// Nodes reachable from the source in the final residual graph.
    pub source_side: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Tree {
    Free,
    Source,
    Sink,
}

const NO_PARENT: usize = usize::MAX;
const TERMINAL: usize = usize::MAX - 1;

/// Residual graph in compressed adjacency form; edge `e` and `e ^ 1` are
/// mutual reverses.
struct Residual {
    head: Vec<usize>,
    cap: Vec<f64>,
    /// `out[first[v]..first[v + 1]]` lists the edges leaving `v`.
    first: Vec<usize>,
    out: Vec<usize>,
}

impl Residual {
    fn build(net: &FlowNetwork) -> Self {
        let m = net.arcs.len() * 2;
        let mut head = Vec::with_capacity(m);
        let mut cap = Vec::with_capacity(m);
        let mut degree = vec![0usize; net.node_count + 1];
        for a in &net.arcs {
            head.push(a.to);
            cap.push(a.cap);
            head.push(a.from);
            cap.push(a.rev_cap);
            degree[a.from] += 1;
            degree[a.to] += 1;
        }
        let mut first = vec![0usize; net.node_count + 1];
        for v in 0..net.node_count {
            first[v + 1] = first[v] + degree[v];
        }
        let mut fill = first.clone();
        let mut out = vec![0usize; m];
        for (i, a) in net.arcs.iter().enumerate() {
            out[fill[a.from]] = 2 * i;
            fill[a.from] += 1;
            out[fill[a.to]] = 2 * i + 1;
            fill[a.to] += 1;
        }
        Self {
            head,
            cap,
            first,
            out,
        }
    }

    fn edges(&self, v: usize) -> &[usize] {
        &self.out[self.first[v]..self.first[v + 1]]
    }
}

struct Solver {
    g: Residual,
    tree: Vec<Tree>,
    /// Edge from the node to its tree parent, or `TERMINAL` / `NO_PARENT`.
    parent: Vec<usize>,
    timestamp: Vec<u64>,
    dist: Vec<usize>,
    active: VecDeque<usize>,
    queued: Vec<bool>,
    orphans: VecDeque<usize>,
    time: u64,
    flow: f64,
}

impl Solver {
    fn new(net: &FlowNetwork) -> Self {
        let n = net.node_count;
        let mut s = Self {
            g: Residual::build(net),
            tree: vec![Tree::Free; n],
            parent: vec![NO_PARENT; n],
            timestamp: vec![0; n],
            dist: vec![0; n],
            active: VecDeque::new(),
            queued: vec![false; n],
            orphans: VecDeque::new(),
            time: 0,
            flow: 0.0,
        };
        for (root, tree) in [(net.source, Tree::Source), (net.sink, Tree::Sink)] {
            s.tree[root] = tree;
            s.parent[root] = TERMINAL;
            s.activate(root);
        }
        s
    }

    fn activate(&mut self, v: usize) {
        if !self.queued[v] {
            self.queued[v] = true;
            self.active.push_back(v);
        }
    }

    /// Residual capacity along the tree direction of `e`, where `e` leaves a
    /// node of tree `t` towards a neighbour.
    fn tree_cap(&self, t: Tree, e: usize) -> f64 {
        match t {
            Tree::Source => self.g.cap[e ^ 1],
            _ => self.g.cap[e],
        }
    }

    fn run(&mut self) -> f64 {
        while let Some(p) = self.active.pop_front() {
            self.queued[p] = false;
            if self.tree[p] == Tree::Free {
                continue;
            }
            if let Some(bridge) = self.grow(p) {
                // p may still have unexplored neighbours
                self.queued[p] = true;
                self.active.push_front(p);
                self.time += 1;
                self.augment(bridge);
                self.adopt_orphans();
            }
        }
        self.flow
    }

    /// Expands the tree of `p` by one layer; returns a source-to-sink edge
    /// when the trees touch.
    fn grow(&mut self, p: usize) -> Option<usize> {
        let t = self.tree[p];
        for i in self.g.first[p]..self.g.first[p + 1] {
            let e = self.g.out[i];
            let q = self.g.head[e];
            // capacity in the direction away from the tree root
            let cap = if t == Tree::Source {
                self.g.cap[e]
            } else {
                self.g.cap[e ^ 1]
            };
            if cap <= 0.0 {
                continue;
            }
            match self.tree[q] {
                Tree::Free => {
                    self.tree[q] = t;
                    self.parent[q] = e ^ 1;
                    self.timestamp[q] = self.timestamp[p];
                    self.dist[q] = self.dist[p] + 1;
                    self.activate(q);
                }
                tq if tq != t => return Some(if t == Tree::Source { e } else { e ^ 1 }),
                _ => {
                    if self.timestamp[q] <= self.timestamp[p] && self.dist[q] > self.dist[p] {
                        self.parent[q] = e ^ 1;
                        self.timestamp[q] = self.timestamp[p];
                        self.dist[q] = self.dist[p] + 1;
                    }
                }
            }
        }
        None
    }

    fn augment(&mut self, bridge: usize) {
        let s_end = self.g.head[bridge ^ 1];
        let t_end = self.g.head[bridge];

        let mut bottleneck = self.g.cap[bridge];
        let mut v = s_end;
        while self.parent[v] != TERMINAL {
            let e = self.parent[v];
            bottleneck = bottleneck.min(self.g.cap[e ^ 1]);
            v = self.g.head[e];
        }
        let mut v = t_end;
        while self.parent[v] != TERMINAL {
            let e = self.parent[v];
            bottleneck = bottleneck.min(self.g.cap[e]);
            v = self.g.head[e];
        }

        self.g.cap[bridge] -= bottleneck;
        self.g.cap[bridge ^ 1] += bottleneck;
        let mut v = s_end;
        while self.parent[v] != TERMINAL {
            let e = self.parent[v];
            self.g.cap[e] += bottleneck;
            self.g.cap[e ^ 1] -= bottleneck;
            let next = self.g.head[e];
            if self.g.cap[e ^ 1] <= 0.0 {
                self.parent[v] = NO_PARENT;
                self.orphans.push_back(v);
            }
            v = next;
        }
        let mut v = t_end;
        while self.parent[v] != TERMINAL {
            let e = self.parent[v];
            self.g.cap[e] -= bottleneck;
            self.g.cap[e ^ 1] += bottleneck;
            let next = self.g.head[e];
            if self.g.cap[e] <= 0.0 {
                self.parent[v] = NO_PARENT;
                self.orphans.push_back(v);
            }
            v = next;
        }
        self.flow += bottleneck;
    }

    /// Distance of `v` to its tree root, or `None` if the path runs into an
    /// orphan.
    fn root_distance(&mut self, mut v: usize) -> Option<usize> {
        let mut d = 0;
        loop {
            if self.timestamp[v] == self.time {
                return Some(d + self.dist[v]);
            }
            match self.parent[v] {
                TERMINAL => {
                    self.timestamp[v] = self.time;
                    self.dist[v] = 0;
                    return Some(d);
                }
                NO_PARENT => return None,
                e => {
                    d += 1;
                    v = self.g.head[e];
                }
            }
        }
    }

    fn adopt_orphans(&mut self) {
        while let Some(v) = self.orphans.pop_front() {
            let t = self.tree[v];
            let mut best: Option<(usize, usize)> = None;
            for i in self.g.first[v]..self.g.first[v + 1] {
                let e = self.g.out[i];
                let q = self.g.head[e];
                if self.tree[q] != t || self.tree_cap(t, e) <= 0.0 {
                    continue;
                }
                if let Some(mut d) = self.root_distance(q) {
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((e, d));
                    }
                    // stamp the verified path so later searches stop early
                    let mut u = q;
                    while self.timestamp[u] != self.time {
                        self.timestamp[u] = self.time;
                        self.dist[u] = d;
                        d -= 1;
                        u = self.g.head[self.parent[u]];
                    }
                }
            }
            if let Some((e, d)) = best {
                self.parent[v] = e;
                self.timestamp[v] = self.time;
                self.dist[v] = d + 1;
                continue;
            }
            // no valid parent: v leaves its tree, its children become orphans
            for i in self.g.first[v]..self.g.first[v + 1] {
                let e = self.g.out[i];
                let q = self.g.head[e];
                if self.tree[q] != t {
                    continue;
                }
                if self.tree_cap(t, e) > 0.0 {
                    self.activate(q);
                }
                let pq = self.parent[q];
                if pq != TERMINAL && pq != NO_PARENT && self.g.head[pq] == v {
                    self.parent[q] = NO_PARENT;
                    self.orphans.push_back(q);
                }
            }
            self.tree[v] = Tree::Free;
        }
    }
}

/// Maximum flow value and the minimum cut it certifies.
pub fn max_flow_min_cut(net: &FlowNetwork) -> MinCut {
    let mut solver = Solver::new(net);
    let flow_value = solver.run();
    let g = &solver.g;

    let mut source_side = vec![false; net.node_count];
    let mut queue = VecDeque::from([net.source]);
    source_side[net.source] = true;
    while let Some(v) = queue.pop_front() {
        for &e in g.edges(v) {
            let q = g.head[e];
            if !source_side[q] && g.cap[e] > 0.0 {
                source_side[q] = true;
                queue.push_back(q);
            }
        }
    }
    MinCut {
        flow_value,
        source_side,
    }
}
