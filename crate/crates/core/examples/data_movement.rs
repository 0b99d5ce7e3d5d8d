//! Bytes in flight over time for a pointer chase and for independent loads.

use edag::edag::{build_from_str, BuildOptions, CostModel};
use edag::metrics::{bandwidth, decimal, movement_series};
use edag::synth::{generate, Pattern, SynthSpec};
use edag::CacheConfig;

fn main() {
    let tau = 200;
    for pattern in [Pattern::PtrChase, Pattern::Fanout] {
        let trace = generate(&SynthSpec::new(pattern, 6).with_seed(1)).unwrap();
        let opts = BuildOptions {
            tau: Some(tau),
            ..Default::default()
        };
        let s = build_from_str(
            &trace.text,
            CacheConfig::disabled(),
            CostModel::default(),
            opts,
        )
        .unwrap()
        .summary;
        let rows = movement_series(s.movement.as_ref().unwrap(), tau, 1_000_000_000).unwrap();
        let gbs = bandwidth(s.bytes_total, s.tinf, 1_000_000_000).unwrap();
        println!(
            "{pattern}: Tinf = {} cycles, at most {} GB/s on average",
            s.tinf,
            decimal(gbs, 4)
        );
        println!("  time_cycles,bytes");
        for r in rows {
            println!("  {},{}", r.time_cycles, r.bytes);
        }
    }
}
