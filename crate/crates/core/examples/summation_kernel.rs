//! Memory work, depth and cost bounds of an array summation loop.
//!
//! Run with `cargo run --example summation_kernel -- 64`.

use edag::edag::{build_from_str, BuildOptions, CostModel};
use edag::metrics::{compute_metrics, ModelParams};
use edag::synth::{generate, Pattern, SynthSpec};
use edag::CacheConfig;

fn main() {
    let n: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(16);
    let trace = generate(
        &SynthSpec::new(Pattern::Sum, n)
            .with_base(0x4008_0290)
            .with_stride(4),
    )
    .unwrap();
    println!(
        "first iteration:\n{}",
        trace.text.lines().take(6).collect::<Vec<_>>().join("\n")
    );

    for cache in [CacheConfig::disabled(), CacheConfig::l1_32k()] {
        let s = build_from_str(
            &trace.text,
            cache,
            CostModel::default(),
            BuildOptions::default(),
        )
        .unwrap()
        .summary;
        let r = compute_metrics(&s, cache, CostModel::default(), ModelParams::default()).unwrap();
        println!("\ncache {cache}");
        println!(
            "  W = {}, D = {}, C = {}, T1 = {}, Tinf = {}",
            s.w, s.d, s.c, s.t1, s.tinf
        );
        println!(
            "  memory cost in [{}, {}] cycles (layered bound {})",
            r.memory.lower, r.memory.closed_upper, r.memory.layered_upper
        );
        println!("  lambda = {}", r.lambda);
    }
}
