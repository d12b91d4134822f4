//! Classic orienteering baseline: center-of-gravity construction.
//!
//! The heuristic is frozen as the following three-step scheme so comparison
//! numbers stay reproducible:
//!
//! 1. compute the profit-weighted centroid of the unrouted vertices;
//! 2. score each unrouted vertex as w / (1 + distance to the centroid) and
//!    rank by score, higher first (ties: lower id);
//! 3. take the best-ranked vertex whose cheapest insertion keeps the route
//!    within the budget, insert it there, recompute the centroid and repeat;
//!    stop when no vertex fits.
//!
//! Scores use the static weights w only: the baseline plans as if profits
//! never changed. Its route is then evaluated twice, once under the frozen
//! weights and once honestly under the true time-varying profits at the
//! actual arrival times.

use crate::error::Result;
use crate::instance::Instance;
use crate::router::{Route, Stop};
use crate::stdag::round_travel_layers;

/// A baseline route with the two profit readings.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineRoute {
    pub route: Route,
    /// Sum of static weights over the visited vertices.
    pub static_profit: f64,
    /// Profit re-evaluated with the time-varying functions at arrival times.
    pub dynamic_profit: f64,
}

/// Route doc tag for baseline outputs.
pub const COG_SOLVER_TAG: &str = "cog-baseline";

fn centroid(instance: &Instance, unrouted: &[usize]) -> (f64, f64) {
    let mut wx = 0.0;
    let mut wy = 0.0;
    let mut total = 0.0;
    for &v in unrouted {
        let vert = &instance.graph.vertices[v];
        wx += vert.weight * vert.x;
        wy += vert.weight * vert.y;
        total += vert.weight;
    }
    if total > 0.0 {
        (wx / total, wy / total)
    } else {
        // all-zero weights: plain mean
        let n = unrouted.len() as f64;
        let sx: f64 = unrouted.iter().map(|&v| instance.graph.vertices[v].x).sum();
        let sy: f64 = unrouted.iter().map(|&v| instance.graph.vertices[v].y).sum();
        (sx / n, sy / n)
    }
}

/// Layer gaps of a vertex sequence, or None when some hop has no edge.
fn sequence_layers(instance: &Instance, seq: &[usize]) -> Option<Vec<usize>> {
    let mut layers = Vec::with_capacity(seq.len());
    let mut layer = 0usize;
    layers.push(0);
    for hop in seq.windows(2) {
        let tau = instance.travel_time(hop[0], hop[1]).ok()?;
        layer += round_travel_layers(tau, instance.dt());
        layers.push(layer);
    }
    Some(layers)
}

/// Construct a route with the center-of-gravity heuristic. Falls back to the
/// trivial route when nothing fits the budget.
pub fn center_of_gravity_route(instance: &Instance) -> Result<BaselineRoute> {
    instance.validate()?;
    let n = instance.graph.len();
    let mut seq: Vec<usize> = vec![0];
    let mut unrouted: Vec<usize> = (1..n).collect();

    loop {
        if unrouted.is_empty() {
            break;
        }
        let center = centroid(instance, &unrouted);
        let mut ranked: Vec<(f64, usize)> = unrouted
            .iter()
            .map(|&v| {
                let vert = &instance.graph.vertices[v];
                let d = (vert.x - center.0).hypot(vert.y - center.1);
                (vert.weight / (1.0 + d), v)
            })
            .collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));

        let mut inserted = None;
        'candidates: for &(_, cand) in &ranked {
            // cheapest insertion: position minimizing the added layer detour
            let mut best_pos = None;
            let mut best_added = usize::MAX;
            for pos in 1..=seq.len() {
                let prev = seq[pos - 1];
                let Ok(tau_in) = instance.travel_time(prev, cand) else {
                    continue;
                };
                let mut added = round_travel_layers(tau_in, instance.dt());
                if pos < seq.len() {
                    let next = seq[pos];
                    let Ok(tau_out) = instance.travel_time(cand, next) else {
                        continue;
                    };
                    let Ok(tau_skip) = instance.travel_time(prev, next) else {
                        continue;
                    };
                    added += round_travel_layers(tau_out, instance.dt());
                    added -= round_travel_layers(tau_skip, instance.dt()).min(added);
                }
                if added < best_added {
                    best_added = added;
                    best_pos = Some(pos);
                }
            }
            let Some(pos) = best_pos else { continue };
            let mut trial = seq.clone();
            trial.insert(pos, cand);
            if let Some(layers) = sequence_layers(instance, &trial) {
                if *layers.last().unwrap() <= instance.max_layer() {
                    seq = trial;
                    inserted = Some(cand);
                    break 'candidates;
                }
            }
        }

        match inserted {
            Some(v) => unrouted.retain(|&u| u != v),
            None => break,
        }
    }

    let layers = sequence_layers(instance, &seq).expect("constructed hops always have edges");
    let stops: Vec<Stop> = seq
        .iter()
        .zip(layers.iter())
        .map(|(&vertex, &layer)| Stop { vertex, layer })
        .collect();
    let dynamic_profit: f64 = stops
        .iter()
        .map(|s| instance.profit_at_layer(s.vertex, s.layer))
        .sum();
    let static_profit: f64 = seq
        .iter()
        .skip(1)
        .map(|&v| instance.graph.vertices[v].weight)
        .sum();
    let finish_layer = *layers.last().unwrap();

    Ok(BaselineRoute {
        route: Route {
            stops,
            total_profit: dynamic_profit,
            finish_layer,
        },
        static_profit,
        dynamic_profit,
    })
}
