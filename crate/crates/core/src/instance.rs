//! Problem input: spatial graph, time-varying profit functions, budgets,
//! plus random generation and the on-disk document format.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Absolute float slack used when deciding whether a budget or a bin width is
/// an exact multiple of the time interval.
const MULTIPLE_EPS: f64 = 1e-9;

/// A depot on the plane. Vertex 0 is the start; its weight is pinned to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialVertex {
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

impl SpatialVertex {
    pub fn distance_to(&self, other: &SpatialVertex) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Travel times between depots. Euclidean graphs are complete with distances
/// derived from positions; explicit matrices allow arbitrary positive times
/// (entry `[i][j]` is the time from i to j, `None` means no edge).
#[derive(Debug, Clone, PartialEq)]
enum TravelTimes {
    Euclidean,
    Explicit(Vec<Vec<Option<f64>>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGraph {
    pub vertices: Vec<SpatialVertex>,
    travel: TravelTimes,
}

impl SpatialGraph {
    /// Complete graph with Euclidean travel times from positions.
    pub fn euclidean(vertices: Vec<SpatialVertex>) -> SpatialGraph {
        SpatialGraph {
            vertices,
            travel: TravelTimes::Euclidean,
        }
    }

    /// Graph with an explicit travel-time matrix; `matrix[i][j]` is the time
    /// from vertex i to vertex j.
    pub fn with_travel_matrix(
        vertices: Vec<SpatialVertex>,
        matrix: Vec<Vec<Option<f64>>>,
    ) -> SpatialGraph {
        SpatialGraph {
            vertices,
            travel: TravelTimes::Explicit(matrix),
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.travel, TravelTimes::Euclidean)
    }

    /// Travel time of the directed edge (i, j).
    pub fn travel_time(&self, i: usize, j: usize) -> Result<f64> {
        let n = self.len();
        if i >= n {
            return Err(Error::UnknownVertex(i));
        }
        if j >= n {
            return Err(Error::UnknownVertex(j));
        }
        match &self.travel {
            TravelTimes::Euclidean => {
                if i == j {
                    Err(Error::MissingEdge(i, j))
                } else {
                    Ok(self.vertices[i].distance_to(&self.vertices[j]))
                }
            }
            TravelTimes::Explicit(m) => m[i][j].ok_or(Error::MissingEdge(i, j)),
        }
    }

    /// Out-neighbours of vertex i with their travel times, ascending by id.
    pub fn neighbors(&self, i: usize) -> Vec<(usize, f64)> {
        let n = self.len();
        let mut out = Vec::with_capacity(n.saturating_sub(1));
        for j in 0..n {
            if j == i {
                continue;
            }
            match &self.travel {
                TravelTimes::Euclidean => {
                    out.push((j, self.vertices[i].distance_to(&self.vertices[j])));
                }
                TravelTimes::Explicit(m) => {
                    if let Some(tau) = m[i][j] {
                        out.push((j, tau));
                    }
                }
            }
        }
        out
    }

    fn matrix(&self) -> Option<&Vec<Vec<Option<f64>>>> {
        match &self.travel {
            TravelTimes::Euclidean => None,
            TravelTimes::Explicit(m) => Some(m),
        }
    }
}

/// Plane quadrant of a vertex position, used by the step profit family.
/// Axis points (x = 0 or y = 0) belong to the quadrant with non-negative
/// coordinates first: I for x >= 0, y >= 0; II for x < 0, y >= 0;
/// III for x < 0, y < 0; IV for x >= 0, y < 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrant {
    I,
    II,
    III,
    IV,
}

impl Quadrant {
    pub fn of(x: f64, y: f64) -> Quadrant {
        match (x >= 0.0, y >= 0.0) {
            (true, true) => Quadrant::I,
            (false, true) => Quadrant::II,
            (false, false) => Quadrant::III,
            (true, false) => Quadrant::IV,
        }
    }

    /// Multiplier on the vertex weight and whether it applies in the first
    /// half of the horizon (true) or the second half (false).
    fn step(self) -> (f64, bool) {
        match self {
            Quadrant::I => (5.0, true),
            Quadrant::II => (10.0, true),
            Quadrant::III => (5.0, false),
            Quadrant::IV => (10.0, false),
        }
    }
}

/// One piece of a piecewise-constant profit table. A bin runs from its
/// `t_start` to the next bin's start; the last bin extends to the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableBin {
    pub t_start: f64,
    pub value: f64,
}

/// Time-varying profit of one vertex, evaluated on [0, T].
///
/// The quadratic family is the concave arc w·(−t² + tT + T²)/T², which equals
/// w at both ends of the horizon and peaks at 1.25·w at T/2, keeping profits
/// non-negative for non-negative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfitFunction {
    Constant { w: f64 },
    Linear { w: f64 },
    Quadratic { w: f64 },
    Logarithmic { w: f64 },
    QuadrantStep { w: f64, region: Quadrant },
    Table { bins: Vec<TableBin> },
}

impl ProfitFunction {
    pub const ZERO: ProfitFunction = ProfitFunction::Constant { w: 0.0 };

    /// Evaluate at time `t` with planning horizon `horizon`. Callers are
    /// expected to keep `t` within [0, horizon].
    pub fn eval(&self, t: f64, horizon: f64) -> f64 {
        match self {
            ProfitFunction::Constant { w } => *w,
            ProfitFunction::Linear { w } => w * t / horizon,
            ProfitFunction::Quadratic { w } => {
                w * (-t * t + t * horizon + horizon * horizon) / (horizon * horizon)
            }
            ProfitFunction::Logarithmic { w } => w * (t + 1.0).ln(),
            ProfitFunction::QuadrantStep { w, region } => {
                let (mult, first_half) = region.step();
                if (t <= horizon / 2.0) == first_half {
                    mult * w
                } else {
                    0.0
                }
            }
            ProfitFunction::Table { bins } => {
                // last bin whose start is <= t
                let pos = bins.partition_point(|b| b.t_start <= t);
                if pos == 0 {
                    0.0
                } else {
                    bins[pos - 1].value
                }
            }
        }
    }

    /// Construct the family member for a vertex of the given weight and
    /// position (the position only matters for the quadrant step family).
    pub fn for_vertex(kind: ProfitKind, weight: f64, x: f64, y: f64) -> ProfitFunction {
        match kind {
            ProfitKind::Constant => ProfitFunction::Constant { w: weight },
            ProfitKind::Linear => ProfitFunction::Linear { w: weight },
            ProfitKind::Quadratic => ProfitFunction::Quadratic { w: weight },
            ProfitKind::Logarithmic => ProfitFunction::Logarithmic { w: weight },
            ProfitKind::QuadrantStep => ProfitFunction::QuadrantStep {
                w: weight,
                region: Quadrant::of(x, y),
            },
        }
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        match self {
            ProfitFunction::Constant { w }
            | ProfitFunction::Linear { w }
            | ProfitFunction::Quadratic { w }
            | ProfitFunction::Logarithmic { w }
            | ProfitFunction::QuadrantStep { w, .. } => {
                if !w.is_finite() || *w < 0.0 {
                    return bad(format!("vertex {idx}: profit parameter w must be >= 0"));
                }
            }
            ProfitFunction::Table { bins } => {
                if bins.is_empty() {
                    return bad(format!("vertex {idx}: profit table has no bins"));
                }
                if bins[0].t_start.abs() > MULTIPLE_EPS {
                    return bad(format!("vertex {idx}: profit table must start at t = 0"));
                }
                for pair in bins.windows(2) {
                    if pair[1].t_start <= pair[0].t_start {
                        return bad(format!("vertex {idx}: profit table bins must be sorted"));
                    }
                }
                for b in bins {
                    if !b.value.is_finite() || b.value < 0.0 {
                        return bad(format!("vertex {idx}: profit table values must be >= 0"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parametric profit family selector for generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfitKind {
    Constant,
    Linear,
    Quadratic,
    Logarithmic,
    QuadrantStep,
}

impl std::str::FromStr for ProfitKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "constant" => Ok(ProfitKind::Constant),
            "linear" => Ok(ProfitKind::Linear),
            "quadratic" => Ok(ProfitKind::Quadratic),
            "logarithmic" => Ok(ProfitKind::Logarithmic),
            "quadrant-step" => Ok(ProfitKind::QuadrantStep),
            other => Err(format!(
                "unknown profit kind `{other}` (expected constant, linear, quadratic, logarithmic or quadrant-step)"
            )),
        }
    }
}

impl std::fmt::Display for ProfitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ProfitKind::Constant => "constant",
            ProfitKind::Linear => "linear",
            ProfitKind::Quadratic => "quadratic",
            ProfitKind::Logarithmic => "logarithmic",
            ProfitKind::QuadrantStep => "quadrant-step",
        };
        f.write_str(s)
    }
}

/// Number of whole intervals in the budget, and whether rounding down lost
/// a fractional remainder.
pub fn layers_in(t_budget: f64, dt: f64) -> (usize, bool) {
    let q = t_budget / dt;
    let r = q.round();
    if (q - r).abs() <= MULTIPLE_EPS * r.abs().max(1.0) {
        (r as usize, false)
    } else {
        (q.floor() as usize, true)
    }
}

/// A complete problem instance. The budget is normalized on construction so
/// the horizon is always an exact number of intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: SpatialGraph,
    pub profits: Vec<ProfitFunction>,
    horizon: f64,
    dt: f64,
    max_layer: usize,
    pub destination: Option<usize>,
}

impl Instance {
    /// Build and validate an instance. A budget that is not an exact multiple
    /// of `dt` is rounded down to the nearest multiple; use
    /// [`layers_in`] beforehand if the caller wants to warn about it.
    pub fn new(
        graph: SpatialGraph,
        profits: Vec<ProfitFunction>,
        t_budget: f64,
        dt: f64,
        destination: Option<usize>,
    ) -> Result<Instance> {
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::InvalidInstance(format!(
                "time interval dt must be > 0, got {dt}"
            )));
        }
        if !t_budget.is_finite() || t_budget < dt {
            return Err(Error::InvalidInstance(format!(
                "time budget T must be at least one interval (T = {t_budget}, dt = {dt})"
            )));
        }
        let (max_layer, _) = layers_in(t_budget, dt);
        let inst = Instance {
            graph,
            profits,
            horizon: dt * max_layer as f64,
            dt,
            max_layer,
            destination,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Same spatial data and budget under a different interval.
    pub fn with_dt(&self, dt: f64) -> Result<Instance> {
        Instance::new(
            self.graph.clone(),
            self.profits.clone(),
            self.horizon,
            dt,
            self.destination,
        )
    }

    /// Same instance with the budget extended by `extra` intervals.
    pub fn with_extra_layers(&self, extra: usize) -> Result<Instance> {
        Instance::new(
            self.graph.clone(),
            self.profits.clone(),
            self.dt * (self.max_layer + extra) as f64,
            self.dt,
            self.destination,
        )
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Highest time layer; the horizon equals `max_layer() * dt()`.
    pub fn max_layer(&self) -> usize {
        self.max_layer
    }

    pub fn layer_count(&self) -> usize {
        self.max_layer + 1
    }

    pub fn time_at(&self, layer: usize) -> f64 {
        self.dt * layer as f64
    }

    /// Number of collectible (non-start) vertices.
    pub fn n_collectible(&self) -> usize {
        self.graph.len() - 1
    }

    /// Profit of `vertex` when visited at time `t`.
    pub fn evaluate_profit(&self, vertex: usize, t: f64) -> Result<f64> {
        if vertex >= self.graph.len() {
            return Err(Error::UnknownVertex(vertex));
        }
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(self.profits[vertex].eval(t, self.horizon))
    }

    /// Profit of `vertex` at a layer time; layers are valid by construction.
    pub fn profit_at_layer(&self, vertex: usize, layer: usize) -> f64 {
        debug_assert!(layer <= self.max_layer);
        self.profits[vertex].eval(self.time_at(layer), self.horizon)
    }

    pub fn travel_time(&self, i: usize, j: usize) -> Result<f64> {
        self.graph.travel_time(i, j)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        let n = self.graph.len();
        if n == 0 {
            return bad("instance has no vertices".into());
        }
        for (i, v) in self.graph.vertices.iter().enumerate() {
            if v.id != i {
                return bad(format!("vertex ids must be 0..{} in order, found {}", n - 1, v.id));
            }
            if !(v.x.is_finite() && v.y.is_finite()) {
                return bad(format!("vertex {i}: non-finite position"));
            }
            if !v.weight.is_finite() || v.weight < 0.0 {
                return bad(format!("vertex {i}: weight must be >= 0"));
            }
        }
        if self.graph.vertices[0].weight != 0.0 {
            return bad("start vertex 0 must have weight 0".into());
        }
        if self.profits.len() != n {
            return bad(format!(
                "profit list length {} does not match vertex count {}",
                self.profits.len(),
                n
            ));
        }
        if self.profits[0] != ProfitFunction::ZERO {
            return bad("start vertex 0 must carry the constant-zero profit".into());
        }
        for (i, p) in self.profits.iter().enumerate() {
            p.validate(i)?;
        }
        if let Some(m) = self.graph.matrix() {
            if m.len() != n || m.iter().any(|row| row.len() != n) {
                return bad(format!("travel matrix must be {n}x{n}"));
            }
            for (i, row) in m.iter().enumerate() {
                for (j, entry) in row.iter().enumerate() {
                    if let Some(tau) = entry {
                        if i == j {
                            return bad(format!("travel matrix diagonal ({i},{i}) must be empty"));
                        }
                        if !tau.is_finite() || *tau <= 0.0 {
                            return bad(format!("travel time ({i},{j}) must be > 0, got {tau}"));
                        }
                    }
                }
            }
        } else {
            // Euclidean graphs are complete; coincident vertices would give a
            // zero-time edge.
            for i in 0..n {
                for j in (i + 1)..n {
                    if self.graph.vertices[i].distance_to(&self.graph.vertices[j]) <= 0.0 {
                        return bad(format!("vertices {i} and {j} coincide (zero travel time)"));
                    }
                }
            }
        }
        if let Some(d) = self.destination {
            if d >= n {
                return Err(Error::UnknownVertex(d));
            }
        }
        Ok(())
    }
}

/// Axis-aligned sampling box for generated vertex positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Bounds {
    pub fn square(lo: f64, hi: f64) -> Bounds {
        Bounds {
            x_min: lo,
            x_max: hi,
            y_min: lo,
            y_max: hi,
        }
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds::square(-50.0, 50.0)
    }
}

/// Parameters for [`generate_random`]. Weights are drawn uniformly from
/// `weight_range` (default [1, 10)); the start vertex defaults to (-49, 0).
#[derive(Debug, Clone, PartialEq)]
pub struct GenerateConfig {
    pub n: usize,
    pub bounds: Bounds,
    pub profit_kind: ProfitKind,
    pub t_budget: f64,
    pub dt: f64,
    pub seed: u64,
    pub start: (f64, f64),
    pub weight_range: (f64, f64),
    pub destination: Option<usize>,
}

impl GenerateConfig {
    pub fn new(n: usize, profit_kind: ProfitKind, t_budget: f64, dt: f64, seed: u64) -> Self {
        GenerateConfig {
            n,
            bounds: Bounds::default(),
            profit_kind,
            t_budget,
            dt,
            seed,
            start: (-49.0, 0.0),
            weight_range: (1.0, 10.0),
            destination: None,
        }
    }
}

/// Generate a random complete Euclidean instance; deterministic per seed.
pub fn generate_random(cfg: &GenerateConfig) -> Result<Instance> {
    if cfg.n == 0 {
        return Err(Error::InvalidInstance(
            "at least one collectible vertex is required".into(),
        ));
    }
    let b = cfg.bounds;
    if !(b.x_max > b.x_min && b.y_max > b.y_min) {
        return Err(Error::InvalidInstance(format!(
            "bounds must have positive extent, got x [{}, {}], y [{}, {}]",
            b.x_min, b.x_max, b.y_min, b.y_max
        )));
    }
    if cfg.weight_range.1 <= cfg.weight_range.0 || cfg.weight_range.0 < 0.0 {
        return Err(Error::InvalidInstance(
            "weight range must be non-negative with positive extent".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut vertices = Vec::with_capacity(cfg.n + 1);
    vertices.push(SpatialVertex {
        id: 0,
        x: cfg.start.0,
        y: cfg.start.1,
        weight: 0.0,
    });
    for id in 1..=cfg.n {
        let x = rng.random_range(b.x_min..b.x_max);
        let y = rng.random_range(b.y_min..b.y_max);
        let weight = rng.random_range(cfg.weight_range.0..cfg.weight_range.1);
        vertices.push(SpatialVertex { id, x, y, weight });
    }

    let profits = vertices
        .iter()
        .map(|v| {
            if v.id == 0 {
                ProfitFunction::ZERO
            } else {
                ProfitFunction::for_vertex(cfg.profit_kind, v.weight, v.x, v.y)
            }
        })
        .collect();

    Instance::new(
        SpatialGraph::euclidean(vertices),
        profits,
        cfg.t_budget,
        cfg.dt,
        cfg.destination,
    )
}

// ---------------------------------------------------------------------------
// Document format
// ---------------------------------------------------------------------------

pub const INSTANCE_DOC_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    version: u32,
    vertices: Vec<SpatialVertex>,
    profit: ProfitDoc,
    #[serde(rename = "T")]
    t_budget: f64,
    dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    destination: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tau: Option<Vec<Vec<Option<f64>>>>,
}

/// Profit section: either one entry per vertex, or a shared family that is
/// expanded using each vertex's weight (and position for the step family).
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ProfitDoc {
    PerVertex(Vec<ProfitFunction>),
    Shared(SharedProfit),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum SharedProfit {
    Constant,
    Linear,
    Quadratic,
    Logarithmic,
    QuadrantStep,
    Table { bins: Vec<TableBin> },
}

/// Serialize an instance to its document form (pretty JSON).
pub fn save_instance(inst: &Instance) -> String {
    let doc = InstanceDoc {
        version: INSTANCE_DOC_VERSION,
        vertices: inst.graph.vertices.clone(),
        profit: ProfitDoc::PerVertex(inst.profits.clone()),
        t_budget: inst.horizon(),
        dt: inst.dt(),
        destination: inst.destination,
        tau: inst.graph.matrix().cloned(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("instance serialization cannot fail");
    s.push('\n');
    s
}

/// Parse and validate an instance document.
pub fn load_instance(text: &str) -> Result<Instance> {
    let doc: InstanceDoc =
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
    if doc.version != INSTANCE_DOC_VERSION {
        return Err(Error::Document(format!(
            "unsupported document version {} (expected {INSTANCE_DOC_VERSION})",
            doc.version
        )));
    }
    let profits = match doc.profit {
        ProfitDoc::PerVertex(list) => list,
        ProfitDoc::Shared(shared) => doc
            .vertices
            .iter()
            .map(|v| {
                if v.id == 0 {
                    return ProfitFunction::ZERO;
                }
                match &shared {
                    SharedProfit::Constant => ProfitFunction::Constant { w: v.weight },
                    SharedProfit::Linear => ProfitFunction::Linear { w: v.weight },
                    SharedProfit::Quadratic => ProfitFunction::Quadratic { w: v.weight },
                    SharedProfit::Logarithmic => ProfitFunction::Logarithmic { w: v.weight },
                    SharedProfit::QuadrantStep => ProfitFunction::QuadrantStep {
                        w: v.weight,
                        region: Quadrant::of(v.x, v.y),
                    },
                    SharedProfit::Table { bins } => ProfitFunction::Table { bins: bins.clone() },
                }
            })
            .collect(),
    };
    let graph = match doc.tau {
        Some(matrix) => SpatialGraph::with_travel_matrix(doc.vertices, matrix),
        None => SpatialGraph::euclidean(doc.vertices),
    };
    Instance::new(graph, profits, doc.t_budget, doc.dt, doc.destination)
}
