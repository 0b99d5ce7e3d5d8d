//! Memory work and latency sensitivity of a loop that sums the same array
//! twice, as the cache grows. The second pass only hits once the whole
//! working set fits.

use edag::edag::{build_from_str, BuildOptions, CostModel};
use edag::metrics::{compute_metrics, ModelParams};
use edag::synth::{generate, Pattern, SynthSpec};
use edag::CacheConfig;

fn main() {
    // 4096 elements, 8 bytes apart: a 32 KiB working set
    let pass = generate(&SynthSpec::new(Pattern::Sum, 4096).with_stride(8))
        .unwrap()
        .text;
    let text = pass.repeat(2);
    let mut configs = vec![CacheConfig::disabled()];
    for kib in [1, 4, 16, 32, 64] {
        configs.push(CacheConfig::new(kib * 1024, 64, 2).unwrap());
    }
    println!(
        "{:>12} {:>8} {:>6} {:>10} {:>12}",
        "cache", "W", "D", "lambda", "misses"
    );
    for cache in configs {
        let s = build_from_str(&text, cache, CostModel::default(), BuildOptions::default())
            .unwrap()
            .summary;
        let r = compute_metrics(&s, cache, CostModel::default(), ModelParams::default()).unwrap();
        println!(
            "{:>12} {:>8} {:>6} {:>10.2} {:>12}",
            cache.to_string(),
            s.w,
            s.d,
            r.lambda.to_f64(),
            s.cache.misses()
        );
    }
}
