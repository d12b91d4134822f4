//! Routing for the orienteering problem with time-varying vertex profits.
//!
//! The solver expands the spatial graph over a discretized time horizon into
//! a vertex-weighted DAG, sorts it topologically and runs a dynamic program
//! that accumulates profits while preventing spatial revisits. Around that
//! core sit exact brute-force oracles with a discretization error-bound
//! checker, a classic center-of-gravity baseline, an LP-format model emitter
//! with a route feasibility checker, and an event-data ingestion pipeline
//! that turns spatio-temporal event logs into solvable instances.

pub mod baselines;
pub mod error;
pub mod ingest;
pub mod instance;
pub mod mip;
pub mod oracle;
pub mod router;
pub mod stdag;

pub use error::{Error, Result};
pub use instance::{
    generate_random, load_instance, save_instance, Bounds, GenerateConfig, Instance,
    ProfitFunction, ProfitKind, Quadrant, SpatialGraph, SpatialVertex, TableBin,
};
pub use router::{solve, Route, Stop};
pub use stdag::{build_st_graph, round_travel_layers, topological_sort, StGraph};
