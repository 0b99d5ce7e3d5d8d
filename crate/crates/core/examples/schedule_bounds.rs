//! Compare the analytic memory-cost bounds with a greedy schedule of the
//! same random eDAG for several issue widths.

use edag::edag::{build_from_str, BuildOptions, CostModel};
use edag::metrics::memory_cost_bounds;
use edag::oracle::{simulate_greedy_memory_by, Priority};
use edag::synth::{generate, Pattern, SynthSpec};
use edag::CacheConfig;

fn main() {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(22);
    let alpha = 200;
    let trace = generate(&SynthSpec::new(Pattern::RandomDag, 120).with_seed(seed)).unwrap();
    let cost = CostModel {
        miss_cost: alpha,
        unit_cost: 0,
    };
    let out = build_from_str(
        &trace.text,
        CacheConfig::disabled(),
        cost,
        BuildOptions::materialized(),
    )
    .unwrap();
    let (s, g) = (out.summary, out.graph.unwrap());
    println!(
        "seed {seed}: W = {}, D = {}, layers {:?}",
        s.w, s.d, s.layer_counts
    );
    println!(
        "{:>3} {:>8} {:>10} {:>10} {:>9} {:>9}",
        "m", "lower", "by-layer", "by-id", "layered", "closed"
    );
    for m in [1, 2, 4, 8, 16] {
        let b = memory_cost_bounds(s.w, s.d, &s.layer_counts, m, alpha).unwrap();
        let layer =
            simulate_greedy_memory_by(&g, m, alpha, 0, 10_000, Priority::LayerThenId).unwrap();
        let by_id = simulate_greedy_memory_by(&g, m, alpha, 0, 10_000, Priority::Id).unwrap();
        println!(
            "{m:>3} {:>8} {:>10} {:>10} {:>9} {:>9}",
            b.lower.to_string(),
            layer.makespan,
            by_id.makespan,
            b.layered_upper.to_string(),
            b.closed_upper.to_string()
        );
    }
}
