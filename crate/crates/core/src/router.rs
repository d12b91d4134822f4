//! Maximal-profit routing over the sorted time-expanded DAG.
//!
//! One label (sum, parent, visited set) is kept per state. A successor label
//! is replaced only when the candidate sum strictly improves and the
//! successor's spatial vertex is not already on the incumbent path, which
//! prevents subtours at the price of possible suboptimality.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::stdag::{build_st_graph, topological_sort, StGraph, NO_PARENT};
use serde::{Deserialize, Serialize};

/// One visited state of a route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stop {
    pub vertex: usize,
    pub layer: usize,
}

/// A feasible walk through the time-expanded graph, starting at the start
/// state (0, 0) and visiting each spatial vertex at most once.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub stops: Vec<Stop>,
    pub total_profit: f64,
    pub finish_layer: usize,
}

impl Route {
    /// The profit-0 route that never leaves the start vertex.
    pub fn trivial() -> Route {
        Route {
            stops: vec![Stop { vertex: 0, layer: 0 }],
            total_profit: 0.0,
            finish_layer: 0,
        }
    }

    pub fn finish_time(&self, dt: f64) -> f64 {
        dt * self.finish_layer as f64
    }

    /// Spatial vertices in visiting order.
    pub fn visited_vertices(&self) -> Vec<usize> {
        self.stops.iter().map(|s| s.vertex).collect()
    }

    /// Re-derive the collected profit from the instance's profit functions.
    pub fn recompute_profit(&self, instance: &Instance) -> f64 {
        self.stops
            .iter()
            .map(|s| instance.profit_at_layer(s.vertex, s.layer))
            .sum()
    }
}

/// Whether a candidate label beats the incumbent. Strict comparison with no
/// epsilon: on exact equality the incumbent wins, so the first writer under
/// the deterministic sweep order decides ties.
#[inline]
pub fn strictly_improves(candidate_sum: f64, incumbent_sum: f64) -> bool {
    candidate_sum > incumbent_sum
}

/// Run the DP sweep over `order` (a topological order of `g`) and extract the
/// best route. With a destination, the best state among all layers of that
/// vertex wins; otherwise the best state overall wins, scanning states in
/// (spatial_id, layer) order and keeping the first maximum.
///
/// Labels in `g` must be fresh (see [`StGraph::reset_labels`]); the sweep
/// owns them for its duration.
pub fn max_profit_path(
    g: &mut StGraph,
    order: &[usize],
    destination: Option<usize>,
) -> Result<Route> {
    let n_spatial = g.n_spatial();
    for &v in order {
        let v_sum = g.sum[v];
        if v_sum == f64::NEG_INFINITY {
            continue;
        }
        let layer = g.layer_of(v);
        let spatial = g.spatial_of(v);
        let v_set = g.visited[v].clone();
        // Inlined successor walk so labels can be written while the adjacency
        // row is borrowed.
        let row_len = g.adj[spatial].len();
        for k in 0..row_len {
            let (j, gap) = g.adj[spatial][k];
            let (j, gap) = (j as usize, gap as usize);
            let s = layer + gap;
            if s >= g.n_layers() {
                continue;
            }
            if v_set.contains(j) {
                continue;
            }
            let w = s * n_spatial + j;
            let candidate = v_sum + g.profit_of(w);
            if strictly_improves(candidate, g.sum[w]) {
                g.sum[w] = candidate;
                g.parent[w] = v as u32;
                let mut set = v_set.clone();
                set.insert(j);
                g.visited[w] = set;
            }
        }
    }

    let best = match destination {
        Some(d) => {
            if d >= n_spatial {
                return Err(Error::UnknownVertex(d));
            }
            let mut best: Option<usize> = None;
            for layer in 0..g.n_layers() {
                let idx = g.index_of(d, layer);
                if g.sum[idx] == f64::NEG_INFINITY {
                    continue;
                }
                if best.is_none_or(|b| strictly_improves(g.sum[idx], g.sum[b])) {
                    best = Some(idx);
                }
            }
            best.ok_or(Error::NoRoute(d))?
        }
        None => {
            let mut best = g.index_of(0, 0);
            for spatial in 0..n_spatial {
                for layer in 0..g.n_layers() {
                    let idx = g.index_of(spatial, layer);
                    if strictly_improves(g.sum[idx], g.sum[best]) {
                        best = idx;
                    }
                }
            }
            best
        }
    };

    // Backtrack parents to the start state.
    let mut stops = Vec::new();
    let mut cursor = best;
    loop {
        stops.push(Stop {
            vertex: g.spatial_of(cursor),
            layer: g.layer_of(cursor),
        });
        let p = g.parent[cursor];
        if p == NO_PARENT {
            break;
        }
        cursor = p as usize;
    }
    stops.reverse();
    debug_assert_eq!(stops[0], Stop { vertex: 0, layer: 0 });

    Ok(Route {
        stops,
        total_profit: g.sum[best],
        finish_layer: g.layer_of(best),
    })
}

/// Full pipeline: expand, sort, sweep. The instance's stored destination is
/// used unless `destination` overrides it.
pub fn solve(instance: &Instance, destination: Option<usize>) -> Result<Route> {
    let mut g = build_st_graph(instance)?;
    let order = topological_sort(&g)?;
    max_profit_path(&mut g, &order, destination.or(instance.destination))
}

/// Materialize a spatial visiting sequence (starting at vertex 0) as a route
/// by accumulating rounded layer gaps, the way the expanded graph would.
pub fn route_from_sequence(instance: &Instance, sequence: &[usize]) -> Result<Route> {
    if sequence.first() != Some(&0) {
        return Err(Error::Document("sequence must start at vertex 0".into()));
    }
    let mut stops = vec![Stop { vertex: 0, layer: 0 }];
    let mut layer = 0usize;
    for hop in sequence.windows(2) {
        let tau = instance.travel_time(hop[0], hop[1])?;
        layer += crate::stdag::round_travel_layers(tau, instance.dt());
        if layer > instance.max_layer() {
            return Err(Error::NoRoute(hop[1]));
        }
        stops.push(Stop {
            vertex: hop[1],
            layer,
        });
    }
    let total_profit = stops
        .iter()
        .map(|s| instance.profit_at_layer(s.vertex, s.layer))
        .sum();
    Ok(Route {
        stops,
        total_profit,
        finish_layer: layer,
    })
}

// ---------------------------------------------------------------------------
// Route document format
// ---------------------------------------------------------------------------

pub const ROUTE_DOC_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteDoc {
    pub version: u32,
    /// Which solver produced the route (`dp`, `cog-baseline`, `oracle-discrete`,
    /// `oracle-continuous`).
    pub solver: String,
    pub stops: Vec<StopDoc>,
    pub total_profit: f64,
    pub finish_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopDoc {
    pub vertex: usize,
    pub t: f64,
}

impl RouteDoc {
    pub fn from_route(route: &Route, solver: &str, dt: f64) -> RouteDoc {
        RouteDoc {
            version: ROUTE_DOC_VERSION,
            solver: solver.to_string(),
            stops: route
                .stops
                .iter()
                .map(|s| StopDoc {
                    vertex: s.vertex,
                    t: dt * s.layer as f64,
                })
                .collect(),
            total_profit: route.total_profit,
            finish_time: dt * route.finish_layer as f64,
        }
    }

    /// Map the document back onto time layers. Fails when any stop time is
    /// not a whole number of intervals, as with continuous-oracle routes.
    pub fn to_route(&self, dt: f64) -> Result<Route> {
        let mut stops = Vec::with_capacity(self.stops.len());
        for s in &self.stops {
            let (layer, rounded) = crate::instance::layers_in(s.t.max(0.0), dt);
            if rounded || s.t < 0.0 {
                return Err(Error::Document(format!(
                    "stop time {} is not a multiple of dt = {}",
                    s.t, dt
                )));
            }
            stops.push(Stop {
                vertex: s.vertex,
                layer,
            });
        }
        if stops.is_empty() {
            return Err(Error::Document("route has no stops".into()));
        }
        let finish_layer = stops.last().unwrap().layer;
        Ok(Route {
            stops,
            total_profit: self.total_profit,
            finish_layer,
        })
    }
}

pub fn save_route(doc: &RouteDoc) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("route serialization cannot fail");
    s.push('\n');
    s
}

pub fn load_route(text: &str) -> Result<RouteDoc> {
    let doc: RouteDoc = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    if doc.version != ROUTE_DOC_VERSION {
        return Err(Error::Document(format!(
            "unsupported route document version {}",
            doc.version
        )));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{
        generate_random, GenerateConfig, ProfitFunction, ProfitKind, SpatialGraph, SpatialVertex,
    };

    fn vertex(id: usize, x: f64, y: f64, weight: f64) -> SpatialVertex {
        SpatialVertex { id, x, y, weight }
    }

    fn instance_with_matrix(
        weights: &[f64],
        matrix: Vec<Vec<Option<f64>>>,
        profits: Vec<ProfitFunction>,
        t: f64,
    ) -> Instance {
        let vertices = weights
            .iter()
            .enumerate()
            .map(|(id, &w)| vertex(id, id as f64, 0.0, w))
            .collect();
        Instance::new(
            SpatialGraph::with_travel_matrix(vertices, matrix),
            profits,
            t,
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_feasible_extension() {
        let inst = instance_with_matrix(
            &[0.0, 7.0],
            vec![vec![None, Some(3.0)], vec![Some(3.0), None]],
            vec![ProfitFunction::ZERO, ProfitFunction::Constant { w: 7.0 }],
            5.0,
        );
        let route = solve(&inst, None).unwrap();
        assert_eq!(
            route.stops,
            vec![Stop { vertex: 0, layer: 0 }, Stop { vertex: 1, layer: 3 }]
        );
        assert_eq!(route.total_profit, 7.0);
    }

    #[test]
    fn dominant_vertex_wins_when_mutually_exclusive() {
        // both vertices reachable from the start, but not one after the other
        let matrix = vec![
            vec![None, Some(3.0), Some(3.0)],
            vec![Some(3.0), None, Some(5.0)],
            vec![Some(3.0), Some(5.0), None],
        ];
        let inst = instance_with_matrix(
            &[0.0, 10.0, 1.0],
            matrix,
            vec![
                ProfitFunction::ZERO,
                ProfitFunction::Constant { w: 10.0 },
                ProfitFunction::Constant { w: 1.0 },
            ],
            5.0,
        );
        let route = solve(&inst, None).unwrap();
        assert_eq!(route.visited_vertices(), vec![0, 1]);
        assert_eq!(route.total_profit, 10.0);
    }

    #[test]
    fn nothing_reachable_gives_trivial_route() {
        let inst = instance_with_matrix(
            &[0.0, 5.0],
            vec![vec![None, Some(9.0)], vec![Some(9.0), None]],
            vec![ProfitFunction::ZERO, ProfitFunction::Constant { w: 5.0 }],
            4.0,
        );
        let route = solve(&inst, None).unwrap();
        assert_eq!(route, Route::trivial());
    }

    #[test]
    fn destination_scan_matches_label_inspection() {
        let inst =
            generate_random(&GenerateConfig::new(6, ProfitKind::Linear, 120.0, 1.0, 17)).unwrap();
        let mut g = build_st_graph(&inst).unwrap();
        let order = topological_sort(&g).unwrap();
        let route = max_profit_path(&mut g, &order, Some(3)).unwrap();
        assert_eq!(route.stops.last().unwrap().vertex, 3);

        // label-scan oracle: best finite sum among all layers of vertex 3
        let best = (0..g.n_layers())
            .map(|l| g.label_sum(3, l))
            .filter(|s| s.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(route.total_profit, best);
    }

    #[test]
    fn unreachable_destination_is_reported() {
        let inst = instance_with_matrix(
            &[0.0, 5.0],
            vec![vec![None, Some(9.0)], vec![Some(9.0), None]],
            vec![ProfitFunction::ZERO, ProfitFunction::Constant { w: 5.0 }],
            4.0,
        );
        assert!(matches!(solve(&inst, Some(1)), Err(Error::NoRoute(1))));
    }

    #[test]
    fn tie_break_is_strict() {
        assert!(strictly_improves(5.0, f64::NEG_INFINITY));
        assert!(!strictly_improves(5.0, 5.0));
        assert!(strictly_improves(5.0 + 1e-14, 5.0));
    }

    #[test]
    fn route_profit_matches_recomputation() {
        for seed in 0..20 {
            let inst =
                generate_random(&GenerateConfig::new(15, ProfitKind::Linear, 150.0, 1.0, seed))
                    .unwrap();
            let route = solve(&inst, None).unwrap();
            assert!((route.total_profit - route.recompute_profit(&inst)).abs() < 1e-9);
        }
    }

    #[test]
    fn no_spatial_revisits() {
        for seed in 0..20 {
            let inst =
                generate_random(&GenerateConfig::new(25, ProfitKind::Quadratic, 200.0, 1.0, seed))
                    .unwrap();
            let route = solve(&inst, None).unwrap();
            let mut seen = std::collections::HashSet::new();
            for s in &route.stops {
                assert!(seen.insert(s.vertex), "vertex {} revisited", s.vertex);
            }
            assert!(route.finish_layer <= inst.max_layer());
        }
    }

    #[test]
    fn deterministic_routes() {
        let inst =
            generate_random(&GenerateConfig::new(40, ProfitKind::Linear, 150.0, 1.0, 5)).unwrap();
        let a = solve(&inst, None).unwrap();
        let b = solve(&inst, None).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn skewed_profits_pull_the_route_into_the_rich_corner() {
        // upper-right vertices carry an order of magnitude more weight
        let mut inst =
            generate_random(&GenerateConfig::new(200, ProfitKind::Linear, 200.0, 1.0, 7)).unwrap();
        let mut weights: Vec<f64> = Vec::new();
        for v in inst.graph.vertices.iter_mut().skip(1) {
            if v.x > 0.0 && v.y > 0.0 {
                v.weight *= 10.0;
            }
            weights.push(v.weight);
        }
        for (v, p) in inst.graph.vertices.iter().zip(inst.profits.iter_mut()).skip(1) {
            *p = ProfitFunction::Linear { w: v.weight };
        }
        let inst = Instance::new(
            inst.graph.clone(),
            inst.profits.clone(),
            inst.horizon(),
            inst.dt(),
            None,
        )
        .unwrap();

        weights.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let quartile = weights[(weights.len() * 3) / 4];
        let route = solve(&inst, None).unwrap();
        let visited: Vec<usize> = route
            .visited_vertices()
            .into_iter()
            .filter(|&v| v != 0)
            .collect();
        assert!(!visited.is_empty());
        let rich = visited
            .iter()
            .filter(|&&v| inst.graph.vertices[v].weight >= quartile)
            .count();
        assert!(
            rich as f64 >= 0.6 * visited.len() as f64,
            "only {rich} of {} visited vertices are in the top-profit quartile",
            visited.len()
        );
    }

    #[test]
    fn budget_monotonicity_small() {
        // logarithmic profits do not depend on the horizon, so extending the
        // budget only adds layers and the best route can never get worse
        for seed in 0..10 {
            let inst = generate_random(&GenerateConfig::new(
                10,
                ProfitKind::Logarithmic,
                60.0,
                1.0,
                seed,
            ))
            .unwrap();
            let base = solve(&inst, None).unwrap().total_profit;
            let longer = solve(&inst.with_extra_layers(1).unwrap(), None)
                .unwrap()
                .total_profit;
            assert!(longer >= base - 1e-9);
        }
    }

    #[test]
    fn route_document_round_trip() {
        let inst =
            generate_random(&GenerateConfig::new(8, ProfitKind::Linear, 80.0, 0.5, 3)).unwrap();
        let route = solve(&inst, None).unwrap();
        let doc = RouteDoc::from_route(&route, "dp", inst.dt());
        let text = save_route(&doc);
        let parsed = load_route(&text).unwrap();
        assert_eq!(parsed, doc);
        assert_eq!(parsed.to_route(inst.dt()).unwrap(), route);
    }
}
