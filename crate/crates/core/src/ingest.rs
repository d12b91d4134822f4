//! Turning spatio-temporal event logs into solvable instances.
//!
//! Events are clustered into regions with k-means, call counts are binned
//! over time per region, and the binned counts become piecewise-constant
//! profit tables on one vertex per region.

use crate::error::{Error, Result};
use crate::instance::{Instance, ProfitFunction, SpatialGraph, SpatialVertex, TableBin};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EventSet {
    pub events: Vec<Event>,
}

impl EventSet {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Parse the `x,y,t` CSV format: header row, one event per row, decimal
/// point, no quoting. Malformed rows are rejected with their line number.
pub fn load_events(text: &str) -> Result<EventSet> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .ok_or_else(|| Error::Ingest("empty file, expected `x,y,t` header".into()))?;
    if header.1.trim() != "x,y,t" {
        return Err(Error::Ingest(format!(
            "line 1: expected header `x,y,t`, found `{}`",
            header.1.trim()
        )));
    }
    let mut events = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::Ingest(format!(
                "line {lineno}: expected 3 fields, found {}",
                fields.len()
            )));
        }
        let parse = |name: &str, field: &str| -> Result<f64> {
            field.trim().parse::<f64>().map_err(|_| {
                Error::Ingest(format!("line {lineno}: bad {name} value `{}`", field.trim()))
            })
        };
        let event = Event {
            x: parse("x", fields[0])?,
            y: parse("y", fields[1])?,
            t: parse("t", fields[2])?,
        };
        if !(event.x.is_finite() && event.y.is_finite()) {
            return Err(Error::Ingest(format!("line {lineno}: non-finite coordinates")));
        }
        if !event.t.is_finite() || event.t < 0.0 {
            return Err(Error::Ingest(format!(
                "line {lineno}: timestamp must be >= 0, found {}",
                event.t
            )));
        }
        events.push(event);
    }
    Ok(EventSet { events })
}

pub fn save_events(set: &EventSet) -> String {
    let mut out = String::from("x,y,t\n");
    for e in &set.events {
        out.push_str(&format!("{},{},{}\n", e.x, e.y, e.t));
    }
    out
}

/// Output of [`kmeans`]: centers, per-event assignment, and the clustering
/// objective (sum of squared distances) recorded after each update step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub centers: Vec<(f64, f64)>,
    pub assignment: Vec<usize>,
    pub objective_trace: Vec<f64>,
}

fn sq_dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    dx * dx + dy * dy
}

fn nearest_center(centers: &[(f64, f64)], p: (f64, f64)) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &center) in centers.iter().enumerate() {
        let d = sq_dist(center, p);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn objective(events: &[Event], centers: &[(f64, f64)], assignment: &[usize]) -> f64 {
    events
        .iter()
        .zip(assignment)
        .map(|(e, &c)| sq_dist((e.x, e.y), centers[c]))
        .sum()
}

/// Lloyd iteration with seeded farthest-point initialization: the first
/// center is a seeded uniform pick, each further center is the event
/// farthest from its nearest chosen center (ties: lowest index). Empty
/// clusters keep their previous center. Deterministic per seed.
pub fn kmeans(events: &EventSet, k: usize, seed: u64, max_iters: usize) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::Ingest("k must be at least 1".into()));
    }
    if events.len() < k {
        return Err(Error::Ingest(format!(
            "{} events cannot form {k} clusters",
            events.len()
        )));
    }
    let pts: Vec<(f64, f64)> = events.events.iter().map(|e| (e.x, e.y)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![pts[rng.random_range(0..pts.len())]];
    while centers.len() < k {
        let mut far_idx = 0;
        let mut far_d = -1.0;
        for (i, &p) in pts.iter().enumerate() {
            let d = centers
                .iter()
                .map(|&c| sq_dist(c, p))
                .fold(f64::INFINITY, f64::min);
            if d > far_d {
                far_d = d;
                far_idx = i;
            }
        }
        centers.push(pts[far_idx]);
    }

    let mut assignment: Vec<usize> = pts.iter().map(|&p| nearest_center(&centers, p)).collect();
    let mut trace = vec![objective(&events.events, &centers, &assignment)];

    for _ in 0..max_iters {
        // update step
        let mut sums = vec![(0.0f64, 0.0f64, 0usize); k];
        for (&p, &c) in pts.iter().zip(&assignment) {
            sums[c].0 += p.0;
            sums[c].1 += p.1;
            sums[c].2 += 1;
        }
        for (c, &(sx, sy, count)) in sums.iter().enumerate() {
            if count > 0 {
                centers[c] = (sx / count as f64, sy / count as f64);
            }
        }
        // assignment step
        let next: Vec<usize> = pts.iter().map(|&p| nearest_center(&centers, p)).collect();
        trace.push(objective(&events.events, &centers, &next));
        let converged = next == assignment;
        assignment = next;
        if converged {
            break;
        }
    }

    Ok(Clustering {
        centers,
        assignment,
        objective_trace: trace,
    })
}

/// Regions plus their binned event counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionModel {
    pub k: usize,
    pub centers: Vec<(f64, f64)>,
    pub assignment: Vec<usize>,
    /// `counts[region][bin]` counts the events assigned to the region whose
    /// timestamp falls in `[bin * bin_width, (bin + 1) * bin_width)`.
    pub counts: Vec<Vec<u64>>,
    pub bin_width: f64,
}

impl RegionModel {
    pub fn build(events: &EventSet, clustering: Clustering, bin_width: f64) -> Result<RegionModel> {
        if !bin_width.is_finite() || bin_width <= 0.0 {
            return Err(Error::Ingest(format!("bin width must be > 0, got {bin_width}")));
        }
        let k = clustering.centers.len();
        let n_bins = events
            .events
            .iter()
            .map(|e| (e.t / bin_width).floor() as usize + 1)
            .max()
            .unwrap_or(0);
        let mut counts = vec![vec![0u64; n_bins]; k];
        for (e, &region) in events.events.iter().zip(&clustering.assignment) {
            let bin = (e.t / bin_width).floor() as usize;
            counts[region][bin] += 1;
        }
        Ok(RegionModel {
            k,
            centers: clustering.centers,
            assignment: clustering.assignment,
            counts,
            bin_width,
        })
    }

    pub fn total_count(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn save_region_model(model: &RegionModel) -> String {
    let mut s = serde_json::to_string_pretty(model).expect("region model serialization cannot fail");
    s.push('\n');
    s
}

pub fn load_region_model(text: &str) -> Result<RegionModel> {
    serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
}

/// Build a solvable instance from a region model: one vertex per region
/// center plus the start vertex, complete Euclidean travel, and a
/// piecewise-constant profit table per region whose values are the counts.
/// The bin width must be a whole number of intervals.
pub fn build_region_instance(
    model: &RegionModel,
    t_budget: f64,
    dt: f64,
    start: (f64, f64),
) -> Result<Instance> {
    if model.centers.is_empty() || model.counts.iter().all(|c| c.is_empty()) {
        return Err(Error::Ingest("region model has no regions or no bins".into()));
    }
    let ratio = model.bin_width / dt;
    if (ratio - ratio.round()).abs() > 1e-9 * ratio.abs().max(1.0) || ratio < 1.0 - 1e-9 {
        return Err(Error::Ingest(format!(
            "bin width {} is not a whole number of intervals (dt = {dt})",
            model.bin_width
        )));
    }

    let mut vertices = vec![SpatialVertex {
        id: 0,
        x: start.0,
        y: start.1,
        weight: 0.0,
    }];
    let mut profits = vec![ProfitFunction::ZERO];
    for (r, &(x, y)) in model.centers.iter().enumerate() {
        let total: u64 = model.counts[r].iter().sum();
        vertices.push(SpatialVertex {
            id: r + 1,
            x,
            y,
            weight: total as f64,
        });
        let mut bins: Vec<TableBin> = model.counts[r]
            .iter()
            .enumerate()
            .map(|(b, &count)| TableBin {
                t_start: b as f64 * model.bin_width,
                value: count as f64,
            })
            .collect();
        // beyond the recorded window there are no events
        let coverage = model.counts[r].len() as f64 * model.bin_width;
        if coverage < t_budget {
            bins.push(TableBin {
                t_start: coverage,
                value: 0.0,
            });
        }
        profits.push(ProfitFunction::Table { bins });
    }

    Instance::new(
        SpatialGraph::euclidean(vertices),
        profits,
        t_budget,
        dt,
        None,
    )
}
