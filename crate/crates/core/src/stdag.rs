//! Time-expanded graph construction and topological sorting.
//!
//! Every spatial vertex is duplicated once per time layer; a directed edge
//! connects (i, u) to (j, s) exactly when the spatial edge (i, j) exists and
//! the layer gap s - u equals the travel time rounded to whole intervals.
//! All edges advance time, so the result is a DAG by construction.

use crate::error::{Error, Result};
use crate::instance::Instance;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

/// Travel time in whole layers: nearest multiple of `dt`, ties away from
/// zero, floored at one layer so every edge strictly advances time.
pub fn round_travel_layers(tau: f64, dt: f64) -> usize {
    debug_assert!(tau > 0.0 && dt > 0.0);
    ((tau / dt).round() as usize).max(1)
}

/// Membership set over spatial ids carried by each DP label. A single word
/// covers instances with up to 64 vertices; wider instances fall back to a
/// boxed word slice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VisitSet {
    Small(u64),
    Wide(Box<[u64]>),
}

impl VisitSet {
    pub fn empty(n_spatial: usize) -> VisitSet {
        if n_spatial <= 64 {
            VisitSet::Small(0)
        } else {
            VisitSet::Wide(vec![0u64; n_spatial.div_ceil(64)].into_boxed_slice())
        }
    }

    pub fn contains(&self, id: usize) -> bool {
        match self {
            VisitSet::Small(bits) => bits & (1u64 << id) != 0,
            VisitSet::Wide(words) => words[id / 64] & (1u64 << (id % 64)) != 0,
        }
    }

    pub fn insert(&mut self, id: usize) {
        match self {
            VisitSet::Small(bits) => *bits |= 1u64 << id,
            VisitSet::Wide(words) => words[id / 64] |= 1u64 << (id % 64),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            VisitSet::Small(bits) => bits.count_ones() as usize,
            VisitSet::Wide(words) => words.iter().map(|w| w.count_ones() as usize).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub const NO_PARENT: u32 = u32::MAX;

/// The time-expanded DAG with its per-state DP labels.
///
/// States are addressed by a flat index in layer-major order, so ascending
/// index order equals ascending (time_layer, spatial_id) order. Successors
/// are derived from the per-spatial adjacency (neighbor, layer gap) lists
/// rather than materialized per state; the edge set is identical.
pub struct StGraph {
    n_spatial: usize,
    n_layers: usize,
    dt: f64,
    /// Profit of each state, `profit[idx(layer, spatial)] = f_i(layer * dt)`.
    profit: Vec<f64>,
    /// Per spatial vertex: out-neighbors as (target id, layer gap), ascending by id.
    pub(crate) adj: Vec<Vec<(u32, u32)>>,
    indegree: Vec<u32>,
    edge_count: usize,
    // DP labels, reset by `reset_labels`, owned by one solver run at a time.
    pub(crate) sum: Vec<f64>,
    pub(crate) parent: Vec<u32>,
    pub(crate) visited: Vec<VisitSet>,
}

impl StGraph {
    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn max_layer(&self) -> usize {
        self.n_layers - 1
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn vertex_count(&self) -> usize {
        self.n_spatial * self.n_layers
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn index_of(&self, spatial: usize, layer: usize) -> usize {
        debug_assert!(spatial < self.n_spatial && layer < self.n_layers);
        layer * self.n_spatial + spatial
    }

    #[inline]
    pub fn spatial_of(&self, idx: usize) -> usize {
        idx % self.n_spatial
    }

    #[inline]
    pub fn layer_of(&self, idx: usize) -> usize {
        idx / self.n_spatial
    }

    #[inline]
    pub fn profit_of(&self, idx: usize) -> f64 {
        self.profit[idx]
    }

    /// DP accumulator of a state (`-inf` until a path reaches it).
    pub fn label_sum(&self, spatial: usize, layer: usize) -> f64 {
        self.sum[self.index_of(spatial, layer)]
    }

    pub fn indegree_of(&self, idx: usize) -> u32 {
        self.indegree[idx]
    }

    /// Successor states of `idx`, ascending by target spatial id.
    pub fn successors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let layer = self.layer_of(idx);
        let spatial = self.spatial_of(idx);
        self.adj[spatial].iter().filter_map(move |&(j, gap)| {
            let s = layer + gap as usize;
            if s < self.n_layers {
                Some(s * self.n_spatial + j as usize)
            } else {
                None
            }
        })
    }

    /// Whether the edge (i, u) -> (j, s) is part of the graph.
    pub fn edge_exists(&self, i: usize, u: usize, j: usize, s: usize) -> bool {
        if i >= self.n_spatial || j >= self.n_spatial || u >= self.n_layers || s >= self.n_layers {
            return false;
        }
        self.adj[i]
            .binary_search_by_key(&(j as u32), |&(t, _)| t)
            .map(|pos| u + self.adj[i][pos].1 as usize == s)
            .unwrap_or(false)
    }

    /// Rounded layer gap of the spatial edge (i, j), if it exists.
    pub fn layer_gap(&self, i: usize, j: usize) -> Option<usize> {
        self.adj.get(i).and_then(|row| {
            row.binary_search_by_key(&(j as u32), |&(t, _)| t)
                .ok()
                .map(|pos| row[pos].1 as usize)
        })
    }

    /// Restore the freshly-built label state: all sums at -inf except the
    /// start state at 0, no parents, start marked visited.
    pub fn reset_labels(&mut self) {
        self.sum.fill(f64::NEG_INFINITY);
        self.parent.fill(NO_PARENT);
        for set in &mut self.visited {
            *set = VisitSet::empty(self.n_spatial);
        }
        let start = self.index_of(0, 0);
        self.sum[start] = 0.0;
        self.visited[start].insert(0);
    }

    /// Edge list as text lines `i,u -> j,s`, for diffing against independent
    /// enumerations.
    pub fn dump_edges(&self) -> String {
        let mut out = String::new();
        for v in 0..self.vertex_count() {
            for w in self.successors(v) {
                writeln!(
                    out,
                    "{},{} -> {},{}",
                    self.spatial_of(v),
                    self.layer_of(v),
                    self.spatial_of(w),
                    self.layer_of(w)
                )
                .unwrap();
            }
        }
        out
    }
}

/// Expand an instance into its time-expanded DAG.
pub fn build_st_graph(instance: &Instance) -> Result<StGraph> {
    instance.validate()?;
    let n_spatial = instance.graph.len();
    let n_layers = instance.layer_count();
    let states = n_spatial * n_layers;

    let mut profit = vec![0.0; states];
    for layer in 0..n_layers {
        for spatial in 0..n_spatial {
            profit[layer * n_spatial + spatial] = instance.profit_at_layer(spatial, layer);
        }
    }

    let mut adj: Vec<Vec<(u32, u32)>> = Vec::with_capacity(n_spatial);
    for i in 0..n_spatial {
        let row = instance
            .graph
            .neighbors(i)
            .into_iter()
            .map(|(j, tau)| (j as u32, round_travel_layers(tau, instance.dt()) as u32))
            .collect();
        adj.push(row);
    }

    let mut indegree = vec![0u32; states];
    let mut edge_count = 0usize;
    for row in adj.iter() {
        for &(j, gap) in row {
            let gap = gap as usize;
            if gap >= n_layers {
                continue;
            }
            // source layers 0..n_layers-gap reach (j, layer+gap)
            for s in gap..n_layers {
                indegree[s * n_spatial + j as usize] += 1;
            }
            edge_count += n_layers - gap;
        }
    }

    let mut g = StGraph {
        n_spatial,
        n_layers,
        dt: instance.dt(),
        profit,
        adj,
        indegree,
        edge_count,
        sum: vec![f64::NEG_INFINITY; states],
        parent: vec![NO_PARENT; states],
        visited: vec![VisitSet::empty(n_spatial); states],
    };
    let start = g.index_of(0, 0);
    g.sum[start] = 0.0;
    g.visited[start].insert(0);
    Ok(g)
}

/// Kahn's algorithm over the time-expanded DAG. Zero-indegree states are
/// popped lowest (time_layer, spatial_id) first, which makes the order
/// deterministic. Fails if any state keeps a positive indegree after the
/// queue drains, which would mean the builder produced a cycle.
pub fn topological_sort(g: &StGraph) -> Result<Vec<usize>> {
    let states = g.vertex_count();
    let mut indegree = g.indegree.clone();
    let mut ready: BinaryHeap<Reverse<usize>> = BinaryHeap::new();
    for (v, &d) in indegree.iter().enumerate() {
        if d == 0 {
            ready.push(Reverse(v));
        }
    }

    let mut order = Vec::with_capacity(states);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for w in g.successors(v) {
            indegree[w] -= 1;
            if indegree[w] == 0 {
                ready.push(Reverse(w));
            }
        }
    }

    if order.len() != states {
        return Err(Error::CycleDetected);
    }
    Ok(order)
}
