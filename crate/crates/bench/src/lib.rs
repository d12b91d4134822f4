//! Benchmark helpers shared by the criterion targets.

use tvop_core::instance::{generate_random, GenerateConfig, Instance, ProfitKind};

/// Standard benchmark instance: linear profits on the usual box.
pub fn bench_instance(n: usize, t_budget: f64, dt: f64) -> Instance {
    generate_random(&GenerateConfig::new(n, ProfitKind::Linear, t_budget, dt, 42))
        .expect("benchmark instance generates")
}
