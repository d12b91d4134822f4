//! Integer-program emission and route feasibility checking.
//!
//! The model is the time-expanded linearization of the routing problem: one
//! binary per expanded edge and one visit binary per (vertex, layer) state.
//! Layers already encode arrival times and make subtours across time
//! impossible, so the budget and the ordering constraints of the native
//! formulation reduce to flow, linkage, and one-visit-per-vertex rows.
//! Emission targets the LP text dialect pinned by [`parse_lp`]; solving is
//! delegated to external tools.

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::router::Route;
use crate::stdag::{build_st_graph, StGraph};
use std::collections::HashMap;
use std::fmt::Write as _;

pub const DEFAULT_VARIABLE_CAP: usize = 1_000_000;

/// One failed feasibility check. The display form starts with a stable
/// machine-parsable code.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Route does not begin at the start state (0, 0).
    Start { found: Option<(usize, usize)> },
    /// A spatial vertex appears more than once.
    Revisit { vertex: usize },
    /// A hop is not an edge of the expanded graph.
    Edge { from: (usize, usize), to: (usize, usize) },
    /// The route runs past the last layer, or the finish field disagrees
    /// with the last stop.
    Budget { finish_layer: usize, max_layer: usize },
    /// Reported profit does not match recomputation.
    Profit { reported: f64, recomputed: f64 },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Start { found: Some((v, l)) } => {
                write!(f, "START: route begins at ({v}, {l}) instead of (0, 0)")
            }
            Violation::Start { found: None } => write!(f, "START: route has no stops"),
            Violation::Revisit { vertex } => {
                write!(f, "REVISIT: vertex {vertex} visited more than once")
            }
            Violation::Edge { from, to } => write!(
                f,
                "EDGE: no expanded edge ({},{}) -> ({},{})",
                from.0, from.1, to.0, to.1
            ),
            Violation::Budget { finish_layer, max_layer } => write!(
                f,
                "BUDGET: finish layer {finish_layer} exceeds horizon layer {max_layer}"
            ),
            Violation::Profit { reported, recomputed } => write!(
                f,
                "PROFIT: reported {reported} but stops sum to {recomputed}"
            ),
        }
    }
}

/// Verify a route against the instance: starts at (0, 0), every hop is an
/// expanded edge, no spatial revisits, finish within the horizon, reported
/// profit within 1e-9 of recomputation. Empty vec means the route passes.
pub fn check_feasible(route: &Route, instance: &Instance) -> Vec<Violation> {
    let mut violations = Vec::new();
    let g = match build_st_graph(instance) {
        Ok(g) => g,
        Err(_) => {
            return vec![Violation::Start { found: None }];
        }
    };

    match route.stops.first() {
        None => {
            violations.push(Violation::Start { found: None });
            return violations;
        }
        Some(first) if (first.vertex, first.layer) != (0, 0) => {
            violations.push(Violation::Start {
                found: Some((first.vertex, first.layer)),
            });
        }
        _ => {}
    }

    let mut seen = std::collections::HashSet::new();
    for s in &route.stops {
        if !seen.insert(s.vertex) {
            violations.push(Violation::Revisit { vertex: s.vertex });
        }
    }

    for hop in route.stops.windows(2) {
        let (a, b) = (hop[0], hop[1]);
        if !g.edge_exists(a.vertex, a.layer, b.vertex, b.layer) {
            violations.push(Violation::Edge {
                from: (a.vertex, a.layer),
                to: (b.vertex, b.layer),
            });
        }
    }

    let last_layer = route.stops.last().map(|s| s.layer).unwrap_or(0);
    if last_layer > instance.max_layer()
        || route.finish_layer > instance.max_layer()
        || route.finish_layer != last_layer
    {
        violations.push(Violation::Budget {
            finish_layer: route.finish_layer.max(last_layer),
            max_layer: instance.max_layer(),
        });
    }

    let recomputed: f64 = route
        .stops
        .iter()
        .filter(|s| s.layer <= instance.max_layer() && s.vertex < instance.graph.len())
        .map(|s| instance.profit_at_layer(s.vertex, s.layer))
        .sum();
    if (recomputed - route.total_profit).abs() > 1e-9 {
        violations.push(Violation::Profit {
            reported: route.total_profit,
            recomputed,
        });
    }

    violations
}

pub fn edge_var(i: usize, u: usize, j: usize, s: usize) -> String {
    format!("y_{i}_{u}_{j}_{s}")
}

pub fn visit_var(i: usize, u: usize) -> String {
    format!("z_{i}_{u}")
}

fn push_terms(out: &mut String, terms: &[(f64, String)]) {
    for (pos, (coef, var)) in terms.iter().enumerate() {
        if pos == 0 {
            if *coef < 0.0 {
                write!(out, "- ").unwrap();
            }
        } else if *coef < 0.0 {
            write!(out, " - ").unwrap();
        } else {
            write!(out, " + ").unwrap();
        }
        let mag = coef.abs();
        if mag == 1.0 {
            write!(out, "{var}").unwrap();
        } else {
            write!(out, "{mag} {var}").unwrap();
        }
    }
}

/// Emit the instance's model in LP text form.
pub fn emit_mip(instance: &Instance) -> Result<String> {
    emit_mip_with_cap(instance, DEFAULT_VARIABLE_CAP)
}

pub fn emit_mip_with_cap(instance: &Instance, var_cap: usize) -> Result<String> {
    let g = build_st_graph(instance)?;
    let vars = g.edge_count() + g.vertex_count();
    if vars > var_cap {
        return Err(Error::ModelTooLarge { vars, cap: var_cap });
    }

    let n_spatial = g.n_spatial();
    let n_layers = g.n_layers();
    let mut out = String::new();
    out.push_str("\\ time-expanded orienteering model\n");
    out.push_str("\\ objective: profit collected over visited (vertex, layer) states\n");
    out.push_str("\\ s0:    at most one unit of flow leaves the start state\n");
    out.push_str("\\ c_i_u: flow out of a state never exceeds flow in (path may end anywhere)\n");
    out.push_str("\\ v_i_u: visit variable equals inbound flow; v_0_0 pins the start visit\n");
    out.push_str("\\ o_i:   each spatial vertex is visited at most once across all layers\n");
    out.push_str("\\ the time budget needs no row: edges only exist between layers inside\n");
    out.push_str("\\ the horizon, and layer gaps equal rounded travel times by construction\n");
    out.push_str("Maximize\n obj: ");
    let objective: Vec<(f64, String)> = (0..g.vertex_count())
        .map(|idx| {
            (
                g.profit_of(idx),
                visit_var(g.spatial_of(idx), g.layer_of(idx)),
            )
        })
        .collect();
    push_terms(&mut out, &objective);
    out.push('\n');

    out.push_str("Subject To\n");

    // start flow
    let start_out: Vec<(f64, String)> = g
        .successors(g.index_of(0, 0))
        .map(|w| (1.0, edge_var(0, 0, g.spatial_of(w), g.layer_of(w))))
        .collect();
    if !start_out.is_empty() {
        out.push_str(" s0: ");
        push_terms(&mut out, &start_out);
        out.push_str(" <= 1\n");
    }

    // conservation and visit linkage per state
    let mut inbound: Vec<Vec<(usize, usize)>> = vec![Vec::new(); g.vertex_count()];
    for v in 0..g.vertex_count() {
        for w in g.successors(v) {
            inbound[w].push((g.spatial_of(v), g.layer_of(v)));
        }
    }
    for idx in 0..g.vertex_count() {
        let (i, u) = (g.spatial_of(idx), g.layer_of(idx));
        if (i, u) == (0, 0) {
            writeln!(out, " v_0_0: {} = 1", visit_var(0, 0)).unwrap();
            continue;
        }
        let outgoing: Vec<(f64, String)> = g
            .successors(idx)
            .map(|w| (1.0, edge_var(i, u, g.spatial_of(w), g.layer_of(w))))
            .collect();
        let incoming: Vec<(f64, String)> = inbound[idx]
            .iter()
            .map(|&(pi, pu)| (1.0, edge_var(pi, pu, i, u)))
            .collect();

        if !outgoing.is_empty() {
            // out - in <= 0
            let mut terms = outgoing.clone();
            terms.extend(incoming.iter().map(|(_, v)| (-1.0, v.clone())));
            write!(out, " c_{i}_{u}: ").unwrap();
            push_terms(&mut out, &terms);
            out.push_str(" <= 0\n");
        }

        // z - in = 0
        let mut terms = vec![(1.0, visit_var(i, u))];
        terms.extend(incoming.iter().map(|(_, v)| (-1.0, v.clone())));
        write!(out, " v_{i}_{u}: ").unwrap();
        push_terms(&mut out, &terms);
        out.push_str(" = 0\n");
    }

    // one visit per spatial vertex
    for i in 0..n_spatial {
        let terms: Vec<(f64, String)> = (0..n_layers).map(|u| (1.0, visit_var(i, u))).collect();
        write!(out, " o_{i}: ").unwrap();
        push_terms(&mut out, &terms);
        out.push_str(" <= 1\n");
    }

    out.push_str("Binary\n");
    for idx in 0..g.vertex_count() {
        writeln!(out, " {}", visit_var(g.spatial_of(idx), g.layer_of(idx))).unwrap();
    }
    for v in 0..g.vertex_count() {
        for w in g.successors(v) {
            writeln!(
                out,
                " {}",
                edge_var(g.spatial_of(v), g.layer_of(v), g.spatial_of(w), g.layer_of(w))
            )
            .unwrap();
        }
    }
    out.push_str("End\n");
    Ok(out)
}

// ---------------------------------------------------------------------------
// LP text parsing (the grammar check for emitted models)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpConstraint {
    pub name: String,
    pub terms: Vec<(f64, String)>,
    pub op: CmpOp,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpModel {
    pub objective: Vec<(f64, String)>,
    pub constraints: Vec<LpConstraint>,
    pub binaries: Vec<String>,
}

impl LpModel {
    /// Objective value of a 0/1 assignment; absent variables count as 0.
    pub fn objective_value(&self, assignment: &HashMap<String, bool>) -> f64 {
        self.objective
            .iter()
            .map(|(c, v)| if assignment.get(v).copied().unwrap_or(false) { *c } else { 0.0 })
            .sum()
    }

    /// Names of constraints the assignment violates (1e-9 slack).
    pub fn violated_constraints(&self, assignment: &HashMap<String, bool>) -> Vec<String> {
        let mut out = Vec::new();
        for c in &self.constraints {
            let lhs: f64 = c
                .terms
                .iter()
                .map(|(k, v)| if assignment.get(v).copied().unwrap_or(false) { *k } else { 0.0 })
                .sum();
            let ok = match c.op {
                CmpOp::Le => lhs <= c.rhs + 1e-9,
                CmpOp::Ge => lhs >= c.rhs - 1e-9,
                CmpOp::Eq => (lhs - c.rhs).abs() <= 1e-9,
            };
            if !ok {
                out.push(c.name.clone());
            }
        }
        out
    }
}

fn is_var_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn parse_terms(tokens: &[&str], what: &str) -> Result<Vec<(f64, String)>> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => {
                if coef.is_some() {
                    return Err(Error::Document(format!("{what}: dangling coefficient")));
                }
                sign = 1.0;
            }
            "-" => {
                if coef.is_some() {
                    return Err(Error::Document(format!("{what}: dangling coefficient")));
                }
                sign = -1.0;
            }
            _ if tok.starts_with(is_var_start) => {
                terms.push((sign * coef.take().unwrap_or(1.0), tok.to_string()));
                sign = 1.0;
            }
            _ => {
                let value: f64 = tok
                    .parse()
                    .map_err(|_| Error::Document(format!("{what}: bad token `{tok}`")))?;
                if coef.is_some() {
                    return Err(Error::Document(format!("{what}: two coefficients in a row")));
                }
                coef = Some(value);
            }
        }
    }
    if coef.is_some() {
        return Err(Error::Document(format!("{what}: trailing coefficient")));
    }
    Ok(terms)
}

/// Parse the LP dialect produced by [`emit_mip`]: an objective under
/// `Maximize`, rows under `Subject To`, names under `Binary`, and a final
/// `End`. Backslash comments are ignored.
pub fn parse_lp(text: &str) -> Result<LpModel> {
    #[derive(PartialEq)]
    enum Section {
        Preamble,
        Objective,
        Constraints,
        Binaries,
        Done,
    }

    let mut section = Section::Preamble;
    let mut objective = None;
    let mut constraints = Vec::new();
    let mut binaries = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('\\') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        match lower.as_str() {
            "maximize" => {
                section = Section::Objective;
                continue;
            }
            "subject to" => {
                section = Section::Constraints;
                continue;
            }
            "binary" => {
                section = Section::Binaries;
                continue;
            }
            "end" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        let err = |msg: String| Error::Document(format!("line {}: {msg}", lineno + 1));
        match section {
            Section::Preamble => return Err(err(format!("unexpected `{line}` before Maximize"))),
            Section::Done => return Err(err(format!("unexpected `{line}` after End"))),
            Section::Objective => {
                let body = line
                    .split_once(':')
                    .ok_or_else(|| err("objective must be `name: terms`".into()))?
                    .1;
                let tokens: Vec<&str> = body.split_whitespace().collect();
                if objective.is_some() {
                    return Err(err("second objective row".into()));
                }
                objective = Some(parse_terms(&tokens, "objective")?);
            }
            Section::Constraints => {
                let (name, body) = line
                    .split_once(':')
                    .ok_or_else(|| err("constraint must be `name: terms op rhs`".into()))?;
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let op_pos = tokens
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "="))
                    .ok_or_else(|| err("constraint has no comparison operator".into()))?;
                if op_pos + 2 != tokens.len() {
                    return Err(err("constraint must end with a single rhs value".into()));
                }
                let op = match tokens[op_pos] {
                    "<=" => CmpOp::Le,
                    ">=" => CmpOp::Ge,
                    _ => CmpOp::Eq,
                };
                let rhs: f64 = tokens[op_pos + 1]
                    .parse()
                    .map_err(|_| err(format!("bad rhs `{}`", tokens[op_pos + 1])))?;
                constraints.push(LpConstraint {
                    name: name.trim().to_string(),
                    terms: parse_terms(&tokens[..op_pos], name.trim())?,
                    op,
                    rhs,
                });
            }
            Section::Binaries => {
                for tok in line.split_whitespace() {
                    if !tok.starts_with(is_var_start) {
                        return Err(err(format!("bad variable name `{tok}`")));
                    }
                    binaries.push(tok.to_string());
                }
            }
        }
    }

    if section != Section::Done {
        return Err(Error::Document("missing End marker".into()));
    }
    Ok(LpModel {
        objective: objective.ok_or_else(|| Error::Document("missing objective".into()))?,
        constraints,
        binaries,
    })
}

/// The 0/1 assignment corresponding to a route: its hop edges and visit
/// states set, everything else implicitly 0.
pub fn route_assignment(route: &Route) -> HashMap<String, bool> {
    let mut assignment = HashMap::new();
    for s in &route.stops {
        assignment.insert(visit_var(s.vertex, s.layer), true);
    }
    for hop in route.stops.windows(2) {
        assignment.insert(
            edge_var(hop[0].vertex, hop[0].layer, hop[1].vertex, hop[1].layer),
            true,
        );
    }
    assignment
}

/// Recover the route stops encoded by an assignment, following the selected
/// edges from the start state.
pub fn decode_assignment(assignment: &HashMap<String, bool>, g: &StGraph) -> Vec<(usize, usize)> {
    let mut stops = vec![(0usize, 0usize)];
    let mut at = g.index_of(0, 0);
    'walk: loop {
        for w in g.successors(at) {
            let var = edge_var(
                g.spatial_of(at),
                g.layer_of(at),
                g.spatial_of(w),
                g.layer_of(w),
            );
            if assignment.get(&var).copied().unwrap_or(false) {
                stops.push((g.spatial_of(w), g.layer_of(w)));
                at = w;
                continue 'walk;
            }
        }
        break;
    }
    stops
}
