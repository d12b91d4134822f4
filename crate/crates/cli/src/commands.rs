//! Subcommand arguments and implementations.

use clap::Args;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;
use tvop_core::baselines::{center_of_gravity_route, COG_SOLVER_TAG};
use tvop_core::instance::{layers_in, load_instance, save_instance, GenerateConfig};
use tvop_core::mip::{check_feasible, emit_mip_with_cap, parse_lp};
use tvop_core::oracle::{
    brute_force_continuous_with_cap, brute_force_discrete_with_cap, check_error_bound_with_cap,
    lipschitz_constant,
};
use tvop_core::router::{
    load_route, route_from_sequence, save_route, RouteDoc, ROUTE_DOC_VERSION,
};
use tvop_core::stdag::build_st_graph;
use tvop_core::{Bounds, Error, Instance, ProfitKind, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Dp,
    Cog,
    OracleDiscrete,
    OracleContinuous,
}

impl std::str::FromStr for Solver {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dp" => Ok(Solver::Dp),
            "cog" => Ok(Solver::Cog),
            "oracle-discrete" => Ok(Solver::OracleDiscrete),
            "oracle-continuous" => Ok(Solver::OracleContinuous),
            other => Err(format!(
                "unknown solver `{other}` (expected dp, cog, oracle-discrete or oracle-continuous)"
            )),
        }
    }
}

impl Solver {
    fn tag(self) -> &'static str {
        match self {
            Solver::Dp => "dp",
            Solver::Cog => COG_SOLVER_TAG,
            Solver::OracleDiscrete => "oracle-discrete",
            Solver::OracleContinuous => "oracle-continuous",
        }
    }
}

#[derive(Args)]
pub struct GenerateArgs {
    /// Number of collectible vertices (the start vertex is added on top).
    #[arg(long)]
    pub n: usize,
    /// Time budget.
    #[arg(long = "T")]
    pub t_budget: f64,
    /// Time interval.
    #[arg(long)]
    pub dt: f64,
    /// Profit family: constant, linear, quadratic, logarithmic, quadrant-step.
    #[arg(long, default_value = "linear")]
    pub profit: ProfitKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Sampling box as x_min,x_max,y_min,y_max.
    #[arg(long, value_parser = parse_bounds, default_value = "-50,50,-50,50", allow_hyphen_values = true)]
    pub bounds: Bounds,
    /// Start vertex position as x,y.
    #[arg(long, value_parser = parse_point, default_value = "-49,0", allow_hyphen_values = true)]
    pub start: (f64, f64),
    /// Fixed destination vertex id (leave unset for a free destination).
    #[arg(long)]
    pub dest: Option<usize>,
    /// Output file, or a directory to receive a generated file name.
    #[arg(long, default_value = "instance.json")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// dp, cog, oracle-discrete or oracle-continuous.
    #[arg(long, default_value = "dp")]
    pub solver: Solver,
    /// Destination override (dp solver only).
    #[arg(long)]
    pub dest: Option<usize>,
    #[arg(long, default_value = "route.json")]
    pub out: PathBuf,
    /// Collectible-vertex cap for the oracle solvers.
    #[arg(long, default_value_t = tvop_core::oracle::DEFAULT_ORACLE_CAP)]
    pub oracle_cap: usize,
    /// Also dump the expanded edge list (`i,u -> j,s` lines) to this file.
    #[arg(long)]
    pub dump_edges: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub n: usize,
    /// Seed range A..B (half-open) or a single seed.
    #[arg(long, value_parser = parse_seed_range)]
    pub seeds: (u64, u64),
    #[arg(long = "T")]
    pub t_budget: f64,
    #[arg(long)]
    pub dt: f64,
    #[arg(long, default_value = "linear")]
    pub profit: ProfitKind,
    /// Skip the brute-force oracles (needed above the cap).
    #[arg(long)]
    pub no_oracles: bool,
    #[arg(long, default_value_t = tvop_core::oracle::DEFAULT_ORACLE_CAP)]
    pub oracle_cap: usize,
    /// Directory for compare.csv (the stdout table is printed regardless).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepArgs {
    /// Comma-separated list of vertex counts.
    #[arg(long, value_parser = parse_usize_list, default_value = "50,100,150,200")]
    pub n_list: std::vec::Vec<usize>,
    /// Comma-separated list of intervals.
    #[arg(long, value_parser = parse_f64_list, default_value = "0.1,0.5,1,2,5,10")]
    pub dt_list: std::vec::Vec<f64>,
    #[arg(long = "T", default_value_t = 150.0)]
    pub t_budget: f64,
    #[arg(long, default_value = "linear")]
    pub profit: ProfitKind,
    /// Base seed; the instance for row n uses seed base + n.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV file (defaults to stdout only).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PlotdataArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub route: PathBuf,
    #[arg(long, default_value = "plot.csv")]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EmitMipArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long, default_value = "model.lp")]
    pub out: PathBuf,
    #[arg(long, default_value_t = tvop_core::mip::DEFAULT_VARIABLE_CAP)]
    pub var_cap: usize,
}

#[derive(Args)]
pub struct IngestArgs {
    /// Event CSV with an `x,y,t` header.
    #[arg(long)]
    pub events: PathBuf,
    /// Number of regions to cluster into.
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Width of the time bins used for call counts.
    #[arg(long)]
    pub bin_width: f64,
    #[arg(long = "T")]
    pub t_budget: f64,
    #[arg(long)]
    pub dt: f64,
    /// Start vertex position as x,y.
    #[arg(long, value_parser = parse_point, default_value = "0,0", allow_hyphen_values = true)]
    pub start: (f64, f64),
    #[arg(long, default_value = "instance.json")]
    pub out: PathBuf,
    /// Also write the region model (centers + counts table) here.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

fn parse_point(s: &str) -> std::result::Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected x,y".into());
    }
    let x = parts[0].trim().parse().map_err(|_| format!("bad x `{}`", parts[0]))?;
    let y = parts[1].trim().parse().map_err(|_| format!("bad y `{}`", parts[1]))?;
    Ok((x, y))
}

fn parse_bounds(s: &str) -> std::result::Result<Bounds, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("expected x_min,x_max,y_min,y_max".into());
    }
    let mut v = [0.0f64; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| format!("bad bound `{part}`"))?;
    }
    Ok(Bounds {
        x_min: v[0],
        x_max: v[1],
        y_min: v[2],
        y_max: v[3],
    })
}

fn parse_seed_range(s: &str) -> std::result::Result<(u64, u64), String> {
    if let Some((a, b)) = s.split_once("..") {
        let lo: u64 = a.trim().parse().map_err(|_| format!("bad seed `{a}`"))?;
        let hi: u64 = b.trim().parse().map_err(|_| format!("bad seed `{b}`"))?;
        if hi <= lo {
            return Err("empty seed range".into());
        }
        Ok((lo, hi))
    } else {
        let seed: u64 = s.trim().parse().map_err(|_| format!("bad seed `{s}`"))?;
        Ok((seed, seed + 1))
    }
}

fn parse_usize_list(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad count `{p}`")))
        .collect()
}

fn parse_f64_list(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| format!("bad value `{p}`")))
        .collect()
}

fn read_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    load_instance(&text)
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content)?;
    Ok(())
}

fn warn_if_rounded(t_budget: f64, dt: f64) {
    let (layers, rounded) = layers_in(t_budget, dt);
    if rounded {
        eprintln!(
            "warning: budget {t_budget} is not a multiple of dt = {dt}; using T = {}",
            dt * layers as f64
        );
    }
}

pub fn generate(args: GenerateArgs, quiet: bool) -> Result<()> {
    warn_if_rounded(args.t_budget, args.dt);
    let cfg = GenerateConfig {
        n: args.n,
        bounds: args.bounds,
        profit_kind: args.profit,
        t_budget: args.t_budget,
        dt: args.dt,
        seed: args.seed,
        start: args.start,
        weight_range: (1.0, 10.0),
        destination: args.dest,
    };
    let inst = tvop_core::generate_random(&cfg)?;
    let path = if args.out.is_dir() {
        args.out.join(format!("instance-n{}-seed{}.json", args.n, args.seed))
    } else {
        args.out
    };
    write_file(&path, &save_instance(&inst))?;
    if !quiet {
        println!(
            "wrote {} (n = {}, T = {}, dt = {}, profit = {})",
            path.display(),
            args.n,
            inst.horizon(),
            inst.dt(),
            args.profit
        );
    }
    Ok(())
}

pub fn solve(args: SolveArgs, quiet: bool) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    if args.dest.is_some() && args.solver != Solver::Dp {
        return Err(Error::InvalidInstance(
            "--dest is only supported by the dp solver".into(),
        ));
    }
    if let Some(path) = &args.dump_edges {
        let g = build_st_graph(&inst)?;
        write_file(path, &g.dump_edges())?;
    }

    let started = Instant::now();
    let doc = match args.solver {
        Solver::Dp => {
            let route = tvop_core::solve(&inst, args.dest)?;
            RouteDoc::from_route(&route, args.solver.tag(), inst.dt())
        }
        Solver::Cog => {
            let baseline = center_of_gravity_route(&inst)?;
            RouteDoc::from_route(&baseline.route, args.solver.tag(), inst.dt())
        }
        Solver::OracleDiscrete => {
            let best = brute_force_discrete_with_cap(&inst, args.oracle_cap)?;
            let route = route_from_sequence(&inst, &best.sequence)?;
            RouteDoc::from_route(&route, args.solver.tag(), inst.dt())
        }
        Solver::OracleContinuous => {
            let best = brute_force_continuous_with_cap(&inst, args.oracle_cap)?;
            continuous_route_doc(&inst, &best.sequence, best.value)
        }
    };
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;

    write_file(&args.out, &save_route(&doc))?;
    if !quiet {
        println!(
            "solver {} profit {:.6} stops {} finish {:.3} wall_ms {:.1} route {}",
            doc.solver,
            doc.total_profit,
            doc.stops.len(),
            doc.finish_time,
            wall_ms,
            args.out.display()
        );
    }
    Ok(())
}

/// Route document for a continuous-oracle sequence: stop times are the exact
/// arrival times, which generally sit between layers.
fn continuous_route_doc(inst: &Instance, sequence: &[usize], value: f64) -> RouteDoc {
    let mut stops = vec![tvop_core::router::StopDoc { vertex: 0, t: 0.0 }];
    let mut t = 0.0;
    for hop in sequence.windows(2) {
        t += inst.travel_time(hop[0], hop[1]).expect("oracle hops exist");
        stops.push(tvop_core::router::StopDoc { vertex: hop[1], t });
    }
    RouteDoc {
        version: ROUTE_DOC_VERSION,
        solver: "oracle-continuous".into(),
        stops,
        total_profit: value,
        finish_time: t,
    }
}

pub fn compare(args: CompareArgs, quiet: bool) -> Result<()> {
    if !args.no_oracles && args.n > args.oracle_cap {
        return Err(Error::OracleCap {
            n: args.n,
            cap: args.oracle_cap,
        });
    }

    struct Row {
        seed: u64,
        dp: f64,
        cog: f64,
        z_discrete: Option<f64>,
        z_continuous: Option<f64>,
        bound: Option<f64>,
        bound_holds: Option<bool>,
    }

    let seeds: Vec<u64> = (args.seeds.0..args.seeds.1).collect();
    let rows: Vec<Row> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = GenerateConfig::new(args.n, args.profit, args.t_budget, args.dt, seed);
            let inst = tvop_core::generate_random(&cfg)?;
            let dp = tvop_core::solve(&inst, None)?.total_profit;
            let cog = center_of_gravity_route(&inst)?.dynamic_profit;
            if args.no_oracles {
                return Ok(Row {
                    seed,
                    dp,
                    cog,
                    z_discrete: None,
                    z_continuous: None,
                    bound: None,
                    bound_holds: None,
                });
            }
            // bound columns only exist for families with a finite slope bound
            if lipschitz_constant(&inst).is_ok() {
                let report = check_error_bound_with_cap(&inst, args.oracle_cap)?;
                Ok(Row {
                    seed,
                    dp,
                    cog,
                    z_discrete: Some(report.z_discrete),
                    z_continuous: Some(report.z_continuous),
                    bound: Some(report.bound),
                    bound_holds: Some(report.bound_holds),
                })
            } else {
                let zd = brute_force_discrete_with_cap(&inst, args.oracle_cap)?.value;
                let zc = brute_force_continuous_with_cap(&inst, args.oracle_cap)?.value;
                Ok(Row {
                    seed,
                    dp,
                    cog,
                    z_discrete: Some(zd),
                    z_continuous: Some(zc),
                    bound: None,
                    bound_holds: None,
                })
            }
        })
        .collect::<Result<Vec<Row>>>()?;

    let ratio = |a: f64, b: f64| if b <= 0.0 { 1.0 } else { a / b };
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();

    let mut csv = String::from("seed,dp,z_discrete,z_continuous,cog_dynamic,dp_over_discrete,dp_over_continuous,bound,bound_holds\n");
    let mut sums = [0.0f64; 4];
    let mut holds_all = true;
    for row in &rows {
        let rd = row.z_discrete.map(|z| ratio(row.dp, z));
        let rc = row.z_continuous.map(|z| ratio(row.dp, z));
        writeln!(
            csv,
            "{},{:.6},{},{},{:.6},{},{},{},{}",
            row.seed,
            row.dp,
            fmt_opt(row.z_discrete),
            fmt_opt(row.z_continuous),
            row.cog,
            fmt_opt(rd),
            fmt_opt(rc),
            fmt_opt(row.bound),
            row.bound_holds.map(|b| b.to_string()).unwrap_or_default()
        )
        .unwrap();
        sums[0] += row.dp;
        sums[1] += row.z_discrete.unwrap_or(0.0);
        sums[2] += row.z_continuous.unwrap_or(0.0);
        sums[3] += row.cog;
        holds_all &= row.bound_holds.unwrap_or(true);
    }
    let count = rows.len() as f64;

    if !quiet {
        print!("{csv}");
        println!(
            "means: dp {:.6} z_discrete {:.6} z_continuous {:.6} cog {:.6} bound_holds_all {}",
            sums[0] / count,
            sums[1] / count,
            sums[2] / count,
            sums[3] / count,
            holds_all
        );
    }
    if let Some(dir) = args.out {
        let path = if dir.extension().is_some() { dir } else { dir.join("compare.csv") };
        write_file(&path, &csv)?;
        if !quiet {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn sweep_dt(args: SweepArgs, quiet: bool) -> Result<()> {
    // one instance per row, generated at the finest interval so the budget
    // keeps its full resolution, then re-discretized per cell
    let finest = args
        .dt_list
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let cells: Vec<(usize, f64)> = args
        .n_list
        .iter()
        .flat_map(|&n| args.dt_list.iter().map(move |&dt| (n, dt)))
        .collect();
    let profits: Vec<((usize, f64), f64)> = cells
        .par_iter()
        .map(|&(n, dt)| {
            let cfg =
                GenerateConfig::new(n, args.profit, args.t_budget, finest, args.seed + n as u64);
            let inst = tvop_core::generate_random(&cfg)?.with_dt(dt)?;
            Ok(((n, dt), tvop_core::solve(&inst, None)?.total_profit))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut csv = String::from("n");
    for dt in &args.dt_list {
        write!(csv, ",{dt}").unwrap();
    }
    csv.push('\n');
    for &n in &args.n_list {
        write!(csv, "{n}").unwrap();
        for &dt in &args.dt_list {
            let value = profits
                .iter()
                .find(|((rn, rdt), _)| *rn == n && *rdt == dt)
                .map(|(_, p)| *p)
                .unwrap();
            write!(csv, ",{value:.6}").unwrap();
        }
        csv.push('\n');
    }

    if !quiet {
        print!("{csv}");
    }
    if let Some(path) = args.out {
        write_file(&path, &csv)?;
        if !quiet {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn plotdata(args: PlotdataArgs, quiet: bool) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    let text = std::fs::read_to_string(&args.route)?;
    let doc = load_route(&text)?;

    for stop in &doc.stops {
        if stop.vertex >= inst.graph.len() {
            return Err(Error::Document(format!(
                "route stop vertex {} does not exist in the instance ({} vertices)",
                stop.vertex,
                inst.graph.len()
            )));
        }
    }

    // gate: layered routes go through the feasibility checker, continuous
    // oracle routes through an exact-time replay
    match doc.to_route(inst.dt()) {
        Ok(route) => {
            let violations = check_feasible(&route, &inst);
            if !violations.is_empty() {
                let mut msg = String::from("route fails feasibility checks:\n");
                for v in &violations {
                    writeln!(msg, "  {v}").unwrap();
                }
                return Err(Error::Document(msg));
            }
        }
        Err(_) if doc.solver == "oracle-continuous" => check_continuous_doc(&doc, &inst)?,
        Err(e) => return Err(e),
    }

    let order_of = |vertex: usize| doc.stops.iter().position(|s| s.vertex == vertex);
    let mut csv = String::from("id,x,y,weight,order\n");
    for v in &inst.graph.vertices {
        let order = order_of(v.id).map(|p| (p + 1).to_string()).unwrap_or_default();
        writeln!(csv, "{},{},{},{},{}", v.id, v.x, v.y, v.weight, order).unwrap();
    }
    write_file(&args.out, &csv)?;
    if !quiet {
        println!(
            "wrote {} ({} vertices, {} visited)",
            args.out.display(),
            inst.graph.len(),
            doc.stops.len()
        );
    }
    Ok(())
}

/// Replay a continuous-time route document: stops must start at the start
/// vertex, never repeat, match exact travel-time accumulation, and finish
/// within the horizon with the stated profit.
fn check_continuous_doc(doc: &RouteDoc, inst: &Instance) -> Result<()> {
    let bad = |msg: String| Err(Error::Document(msg));
    let Some(first) = doc.stops.first() else {
        return bad("route has no stops".into());
    };
    if first.vertex != 0 || first.t != 0.0 {
        return bad("continuous route must start at vertex 0 at time 0".into());
    }
    let mut seen = std::collections::HashSet::new();
    let mut t = 0.0;
    let mut profit = 0.0;
    for (i, stop) in doc.stops.iter().enumerate() {
        if !seen.insert(stop.vertex) {
            return bad(format!("vertex {} visited twice", stop.vertex));
        }
        if i > 0 {
            t += inst.travel_time(doc.stops[i - 1].vertex, stop.vertex)?;
            if (t - stop.t).abs() > 1e-6 {
                return bad(format!(
                    "stop {} arrival {} disagrees with travel-time accumulation {}",
                    stop.vertex, stop.t, t
                ));
            }
            if t > inst.horizon() + 1e-9 {
                return bad(format!("arrival {} exceeds horizon {}", t, inst.horizon()));
            }
            profit += inst.evaluate_profit(stop.vertex, t.min(inst.horizon()))?;
        }
    }
    if (profit - doc.total_profit).abs() > 1e-9 {
        return bad(format!(
            "stated profit {} disagrees with recomputation {}",
            doc.total_profit, profit
        ));
    }
    Ok(())
}

pub fn emit_mip(args: EmitMipArgs, quiet: bool) -> Result<()> {
    let inst = read_instance(&args.instance)?;
    let text = emit_mip_with_cap(&inst, args.var_cap)?;
    let model = parse_lp(&text).expect("emitted model must parse");
    write_file(&args.out, &text)?;
    if !quiet {
        println!(
            "wrote {} ({} variables, {} constraints)",
            args.out.display(),
            model.binaries.len(),
            model.constraints.len()
        );
    }
    Ok(())
}

pub fn ingest(args: IngestArgs, quiet: bool) -> Result<()> {
    use tvop_core::ingest::{
        build_region_instance, kmeans, load_events, save_region_model, RegionModel,
    };

    warn_if_rounded(args.t_budget, args.dt);
    let text = std::fs::read_to_string(&args.events)?;
    let events = load_events(&text)?;
    let clustering = kmeans(&events, args.k, args.seed, args.max_iters)?;
    let model = RegionModel::build(&events, clustering, args.bin_width)?;
    let inst = build_region_instance(&model, args.t_budget, args.dt, args.start)?;

    if let Some(path) = &args.model_out {
        write_file(path, &save_region_model(&model))?;
    }
    write_file(&args.out, &save_instance(&inst))?;
    if !quiet {
        println!(
            "wrote {} ({} events, {} regions, {} bins of width {})",
            args.out.display(),
            events.len(),
            model.k,
            model.counts.first().map(|c| c.len()).unwrap_or(0),
            model.bin_width
        );
    }
    Ok(())
}
