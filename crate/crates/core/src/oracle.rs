//! Exact brute-force solvers and the discretization error-bound checker.
//!
//! Both enumerators walk every simple vertex sequence from the start, pruned
//! only by the remaining budget: time-varying profits admit no cheap
//! admissible bound, so correctness is bought with factorial time and the
//! vertex cap. The continuous solver accumulates exact travel times, the
//! discrete one accumulates rounded layer gaps over the expanded graph.

use crate::error::{Error, Result};
use crate::instance::{Instance, ProfitFunction};
use crate::router::solve;
use crate::stdag::round_travel_layers;
use serde::{Deserialize, Serialize};

/// Default cap on collectible vertices; full enumeration beyond ~a dozen
/// vertices takes minutes to hours.
pub const DEFAULT_ORACLE_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    pub value: f64,
    /// Optimal visiting sequence including the start vertex.
    pub sequence: Vec<usize>,
}

fn check_cap(instance: &Instance, cap: usize) -> Result<()> {
    let n = instance.n_collectible();
    if n > cap {
        return Err(Error::OracleCap { n, cap });
    }
    Ok(())
}

/// Exact optimum with real-valued arrival times.
pub fn brute_force_continuous(instance: &Instance) -> Result<BruteForceResult> {
    brute_force_continuous_with_cap(instance, DEFAULT_ORACLE_CAP)
}

pub fn brute_force_continuous_with_cap(
    instance: &Instance,
    cap: usize,
) -> Result<BruteForceResult> {
    check_cap(instance, cap)?;
    let mut best = BruteForceResult {
        value: 0.0,
        sequence: vec![0],
    };
    let mut seq = vec![0usize];
    let mut visited = vec![false; instance.graph.len()];
    visited[0] = true;
    continuous_dfs(instance, 0, 0.0, 0.0, &mut visited, &mut seq, &mut best);
    Ok(best)
}

fn continuous_dfs(
    inst: &Instance,
    at: usize,
    t: f64,
    collected: f64,
    visited: &mut [bool],
    seq: &mut Vec<usize>,
    best: &mut BruteForceResult,
) {
    if collected > best.value {
        best.value = collected;
        best.sequence = seq.clone();
    }
    for next in 1..inst.graph.len() {
        if visited[next] {
            continue;
        }
        let Ok(tau) = inst.travel_time(at, next) else {
            continue;
        };
        let arrival = t + tau;
        if arrival > inst.horizon() {
            continue;
        }
        visited[next] = true;
        seq.push(next);
        let gain = inst.profits[next].eval(arrival, inst.horizon());
        continuous_dfs(inst, next, arrival, collected + gain, visited, seq, best);
        seq.pop();
        visited[next] = false;
    }
}

/// Exact optimum over the time-expanded graph (arrival layers accumulate
/// rounded travel gaps, profits are evaluated at layer times).
pub fn brute_force_discrete(instance: &Instance) -> Result<BruteForceResult> {
    brute_force_discrete_with_cap(instance, DEFAULT_ORACLE_CAP)
}

pub fn brute_force_discrete_with_cap(instance: &Instance, cap: usize) -> Result<BruteForceResult> {
    check_cap(instance, cap)?;
    let mut best = BruteForceResult {
        value: 0.0,
        sequence: vec![0],
    };
    let mut seq = vec![0usize];
    let mut visited = vec![false; instance.graph.len()];
    visited[0] = true;
    discrete_dfs(instance, 0, 0, 0.0, &mut visited, &mut seq, &mut best);
    Ok(best)
}

fn discrete_dfs(
    inst: &Instance,
    at: usize,
    layer: usize,
    collected: f64,
    visited: &mut [bool],
    seq: &mut Vec<usize>,
    best: &mut BruteForceResult,
) {
    if collected > best.value {
        best.value = collected;
        best.sequence = seq.clone();
    }
    for next in 1..inst.graph.len() {
        if visited[next] {
            continue;
        }
        let Ok(tau) = inst.travel_time(at, next) else {
            continue;
        };
        let arrival = layer + round_travel_layers(tau, inst.dt());
        if arrival > inst.max_layer() {
            continue;
        }
        visited[next] = true;
        seq.push(next);
        let gain = inst.profit_at_layer(next, arrival);
        discrete_dfs(inst, next, arrival, collected + gain, visited, seq, best);
        seq.pop();
        visited[next] = false;
    }
}

/// Tight per-family slope bound over the planning horizon, maximized over
/// vertices. Step and table profits are discontinuous and have no finite
/// bound; use [`lipschitz_sampled`] for an approximate figure.
pub fn lipschitz_constant(instance: &Instance) -> Result<f64> {
    let horizon = instance.horizon();
    let mut k: f64 = 0.0;
    for p in &instance.profits {
        let this = match p {
            ProfitFunction::Constant { .. } => 0.0,
            // slope w/T at both families: linear everywhere, quadratic at the
            // endpoints where |f'| = w(2t - T)/T^2 peaks
            ProfitFunction::Linear { w } | ProfitFunction::Quadratic { w } => w / horizon,
            // derivative w/(t+1) peaks at t = 0
            ProfitFunction::Logarithmic { w } => *w,
            ProfitFunction::QuadrantStep { .. } => {
                return Err(Error::NoLipschitz("quadrant-step"))
            }
            ProfitFunction::Table { .. } => return Err(Error::NoLipschitz("table")),
        };
        k = k.max(this);
    }
    Ok(k)
}

/// Approximate slope bound: max finite-difference slope over a grid of
/// 10 * max_layer points. Works for any profit kind but is not tight enough
/// for bound verification.
pub fn lipschitz_sampled(instance: &Instance) -> f64 {
    let steps = 10 * instance.max_layer().max(1);
    let h = instance.horizon() / steps as f64;
    let mut k: f64 = 0.0;
    for p in &instance.profits {
        for g in 0..steps {
            let a = p.eval(h * g as f64, instance.horizon());
            let b = p.eval(h * (g + 1) as f64, instance.horizon());
            k = k.max(((b - a) / h).abs());
        }
    }
    k
}

/// Everything the bound verification produces in one record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    /// Optimum with exact travel times.
    pub z_continuous: f64,
    /// Optimum over the time-expanded graph.
    pub z_discrete: f64,
    /// Profit of the DP route.
    pub dp_value: f64,
    /// Uniform profit slope bound K.
    pub lipschitz: f64,
    /// n(n+1)/2 * K * dt, with n the collectible vertex count.
    pub bound: f64,
    pub bound_holds: bool,
    pub optimal_sequence: Vec<usize>,
    pub optimal_sequence_discrete: Vec<usize>,
}

/// Run both brute forces and the DP, and verify the discretization gap
/// |z - z'| against the n(n+1)/2 * K * dt bound (1e-9 float slack).
pub fn check_error_bound(instance: &Instance) -> Result<OracleReport> {
    check_error_bound_with_cap(instance, DEFAULT_ORACLE_CAP)
}

pub fn check_error_bound_with_cap(instance: &Instance, cap: usize) -> Result<OracleReport> {
    let continuous = brute_force_continuous_with_cap(instance, cap)?;
    let discrete = brute_force_discrete_with_cap(instance, cap)?;
    let dp = solve(instance, None)?;
    let k = lipschitz_constant(instance)?;
    let n = instance.n_collectible() as f64;
    let bound = n * (n + 1.0) / 2.0 * k * instance.dt();
    let gap = (continuous.value - discrete.value).abs();
    Ok(OracleReport {
        z_continuous: continuous.value,
        z_discrete: discrete.value,
        dp_value: dp.total_profit,
        lipschitz: k,
        bound,
        bound_holds: gap <= bound + 1e-9,
        optimal_sequence: continuous.sequence,
        optimal_sequence_discrete: discrete.sequence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{
        generate_random, GenerateConfig, ProfitKind, SpatialGraph, SpatialVertex,
    };

    fn vertex(id: usize, x: f64, y: f64, weight: f64) -> SpatialVertex {
        SpatialVertex { id, x, y, weight }
    }

    fn two_vertex_linear(tau: f64, t_budget: f64) -> Instance {
        // f_1(t) = t, expressed as the linear family with w = T
        let vertices = vec![vertex(0, 0.0, 0.0, 0.0), vertex(1, 1.0, 0.0, t_budget)];
        let matrix = vec![vec![None, Some(tau)], vec![Some(tau), None]];
        Instance::new(
            SpatialGraph::with_travel_matrix(vertices, matrix),
            vec![
                ProfitFunction::ZERO,
                ProfitFunction::Linear { w: t_budget },
            ],
            t_budget,
            1.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn continuous_single_vertex_visits_late() {
        let inst = two_vertex_linear(3.7, 5.0);
        let res = brute_force_continuous(&inst).unwrap();
        assert!((res.value - 3.7).abs() < 1e-12);
        assert_eq!(res.sequence, vec![0, 1]);
    }

    #[test]
    fn continuous_nothing_reachable() {
        let inst = two_vertex_linear(9.0, 5.0);
        let res = brute_force_continuous(&inst).unwrap();
        assert_eq!(res.value, 0.0);
        assert_eq!(res.sequence, vec![0]);
    }

    #[test]
    fn cap_is_enforced() {
        let inst =
            generate_random(&GenerateConfig::new(20, ProfitKind::Linear, 50.0, 1.0, 1)).unwrap();
        assert!(matches!(
            brute_force_continuous(&inst),
            Err(Error::OracleCap { n: 20, cap: 10 })
        ));
        assert!(matches!(
            brute_force_discrete(&inst),
            Err(Error::OracleCap { n: 20, cap: 10 })
        ));
    }

    /// Independent second implementation: enumerate subsets as bitmasks and
    /// all permutations of each subset via Heap's algorithm, evaluating every
    /// complete ordering from scratch.
    fn permutation_oracle_continuous(inst: &Instance) -> f64 {
        fn heaps(items: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
            if k <= 1 {
                out.push(items.clone());
                return;
            }
            for i in 0..k {
                heaps(items, k - 1, out);
                if k % 2 == 0 {
                    items.swap(i, k - 1);
                } else {
                    items.swap(0, k - 1);
                }
            }
        }

        let n = inst.n_collectible();
        let mut best = 0.0f64;
        for mask in 0u32..(1 << n) {
            let mut subset: Vec<usize> =
                (1..=n).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            let k = subset.len();
            let mut perms = Vec::new();
            heaps(&mut subset, k.max(1), &mut perms);
            for perm in perms {
                let mut t = 0.0;
                let mut at = 0usize;
                let mut total = 0.0;
                let mut feasible = true;
                for &v in &perm {
                    t += inst.travel_time(at, v).unwrap();
                    if t > inst.horizon() {
                        feasible = false;
                        break;
                    }
                    total += inst.profits[v].eval(t, inst.horizon());
                    at = v;
                }
                if feasible && total > best {
                    best = total;
                }
            }
        }
        best
    }

    #[test]
    fn continuous_matches_independent_permutation_enumerator() {
        for seed in 0..12 {
            let inst =
                generate_random(&GenerateConfig::new(6, ProfitKind::Linear, 120.0, 1.0, seed))
                    .unwrap();
            let dfs = brute_force_continuous(&inst).unwrap().value;
            let perm = permutation_oracle_continuous(&inst);
            assert!(
                (dfs - perm).abs() < 1e-9,
                "seed {seed}: dfs {dfs} vs permutation {perm}"
            );
        }
    }

    #[test]
    fn discrete_equals_continuous_on_exact_multiples() {
        // all travel times are whole numbers of dt
        let vertices = vec![
            vertex(0, 0.0, 0.0, 0.0),
            vertex(1, 3.0, 0.0, 4.0),
            vertex(2, 0.0, 4.0, 6.0),
        ];
        let matrix = vec![
            vec![None, Some(3.0), Some(4.0)],
            vec![Some(3.0), None, Some(5.0)],
            vec![Some(4.0), Some(5.0), None],
        ];
        let inst = Instance::new(
            SpatialGraph::with_travel_matrix(vertices, matrix),
            vec![
                ProfitFunction::ZERO,
                ProfitFunction::Linear { w: 4.0 },
                ProfitFunction::Linear { w: 6.0 },
            ],
            10.0,
            1.0,
            None,
        )
        .unwrap();
        let c = brute_force_continuous(&inst).unwrap();
        let d = brute_force_discrete(&inst).unwrap();
        assert_eq!(c.value, d.value);
        assert_eq!(c.sequence, d.sequence);
    }

    #[test]
    fn dp_never_beats_discrete_oracle() {
        for seed in 0..100 {
            let inst =
                generate_random(&GenerateConfig::new(8, ProfitKind::Linear, 150.0, 1.0, seed))
                    .unwrap();
            let z = brute_force_discrete(&inst).unwrap().value;
            let dp = solve(&inst, None).unwrap().total_profit;
            assert!(dp <= z + 1e-9, "seed {seed}: dp {dp} above oracle {z}");
        }
    }

    #[test]
    fn hand_computable_bound_example() {
        let inst = two_vertex_linear(2.4, 5.0);
        // K = w/T = 1, n = 1, dt = 1  =>  bound = 1
        let report = check_error_bound(&inst).unwrap();
        assert_eq!(report.lipschitz, 1.0);
        assert_eq!(report.bound, 1.0);
        // continuous picks the single vertex at t = 2.4 with f = 2.4; the
        // discrete graph rounds the hop to layer 2, collecting f(2) = 2
        assert!((report.z_continuous - 2.4).abs() < 1e-12);
        assert!((report.z_discrete - 2.0).abs() < 1e-12);
        assert!(report.bound_holds);
    }

    #[test]
    fn constant_profits_have_zero_bound() {
        let inst =
            generate_random(&GenerateConfig::new(5, ProfitKind::Constant, 80.0, 1.0, 4)).unwrap();
        let report = check_error_bound(&inst).unwrap();
        assert_eq!(report.lipschitz, 0.0);
        assert_eq!(report.bound, 0.0);
        assert_eq!(report.z_continuous, report.z_discrete);
        assert!(report.bound_holds);
    }

    #[test]
    fn lipschitz_families() {
        let mk = |profits: Vec<ProfitFunction>, weights: Vec<f64>| {
            let vertices: Vec<SpatialVertex> = weights
                .iter()
                .enumerate()
                .map(|(id, &w)| vertex(id, id as f64 * 3.0, 0.0, w))
                .collect();
            Instance::new(SpatialGraph::euclidean(vertices), profits, 100.0, 1.0, None).unwrap()
        };
        let linear = mk(
            vec![
                ProfitFunction::ZERO,
                ProfitFunction::Linear { w: 10.0 },
                ProfitFunction::Linear { w: 4.0 },
            ],
            vec![0.0, 10.0, 4.0],
        );
        assert_eq!(lipschitz_constant(&linear).unwrap(), 0.1);

        let constant = mk(
            vec![
                ProfitFunction::ZERO,
                ProfitFunction::Constant { w: 9.0 },
            ],
            vec![0.0, 9.0],
        );
        assert_eq!(lipschitz_constant(&constant).unwrap(), 0.0);

        let log = mk(
            vec![
                ProfitFunction::ZERO,
                ProfitFunction::Logarithmic { w: 2.0 },
            ],
            vec![0.0, 2.0],
        );
        assert_eq!(lipschitz_constant(&log).unwrap(), 2.0);

        let table = mk(
            vec![
                ProfitFunction::ZERO,
                ProfitFunction::Table {
                    bins: vec![crate::instance::TableBin { t_start: 0.0, value: 2.0 }],
                },
            ],
            vec![0.0, 1.0],
        );
        assert!(matches!(
            lipschitz_constant(&table),
            Err(Error::NoLipschitz("table"))
        ));
    }

    #[test]
    fn sampled_lipschitz_close_to_tight_for_linear() {
        let inst =
            generate_random(&GenerateConfig::new(6, ProfitKind::Linear, 100.0, 1.0, 2)).unwrap();
        let tight = lipschitz_constant(&inst).unwrap();
        let sampled = lipschitz_sampled(&inst);
        assert!((tight - sampled).abs() < 1e-9);
    }

    #[test]
    fn exact_multiples_have_zero_gap() {
        let vertices = vec![
            vertex(0, 0.0, 0.0, 0.0),
            vertex(1, 3.0, 4.0, 5.0),
            vertex(2, 6.0, 8.0, 2.0),
        ];
        let matrix = vec![
            vec![None, Some(5.0), Some(10.0)],
            vec![Some(5.0), None, Some(5.0)],
            vec![Some(10.0), Some(5.0), None],
        ];
        let inst = Instance::new(
            SpatialGraph::with_travel_matrix(vertices, matrix),
            vec![
                ProfitFunction::ZERO,
                ProfitFunction::Linear { w: 5.0 },
                ProfitFunction::Linear { w: 2.0 },
            ],
            20.0,
            1.0,
            None,
        )
        .unwrap();
        let report = check_error_bound(&inst).unwrap();
        assert_eq!(report.z_continuous, report.z_discrete);
        assert!(report.bound_holds);
    }

    #[test]
    fn oracles_invariant_under_relabeling() {
        let inst =
            generate_random(&GenerateConfig::new(6, ProfitKind::Logarithmic, 100.0, 1.0, 31))
                .unwrap();
        // swap collectible vertices 1 and 4 wholesale
        let mut vertices = inst.graph.vertices.clone();
        let mut profits = inst.profits.clone();
        vertices.swap(1, 4);
        profits.swap(1, 4);
        for (id, v) in vertices.iter_mut().enumerate() {
            v.id = id;
        }
        let permuted = Instance::new(
            SpatialGraph::euclidean(vertices),
            profits,
            inst.horizon(),
            inst.dt(),
            None,
        )
        .unwrap();
        let a = brute_force_continuous(&inst).unwrap().value;
        let b = brute_force_continuous(&permuted).unwrap().value;
        assert!((a - b).abs() < 1e-9);
        let a = brute_force_discrete(&inst).unwrap().value;
        let b = brute_force_discrete(&permuted).unwrap().value;
        assert!((a - b).abs() < 1e-9);
    }
}
