//! Rank synthetic kernels by absolute and relative latency sensitivity.

use edag::edag::{build_from_str, BuildOptions, CostModel};
use edag::metrics::{compute_metrics, rank_traces, ModelParams, RankMetric};
use edag::synth::{generate, Pattern, SynthSpec};
use edag::CacheConfig;

fn main() {
    let cache = CacheConfig::l1_32k();
    let kernels = [
        ("ptr-chase", SynthSpec::new(Pattern::PtrChase, 200)),
        ("fanout", SynthSpec::new(Pattern::Fanout, 200)),
        ("sum-sparse", SynthSpec::new(Pattern::Sum, 200)),
        (
            "sum-dense",
            SynthSpec::new(Pattern::Sum, 200).with_stride(4),
        ),
        ("chain", SynthSpec::new(Pattern::Chain, 50)),
    ];
    let reports: Vec<_> = kernels
        .iter()
        .map(|(name, spec)| {
            let text = generate(spec).unwrap().text;
            let s = build_from_str(&text, cache, CostModel::default(), BuildOptions::default())
                .unwrap()
                .summary;
            let r =
                compute_metrics(&s, cache, CostModel::default(), ModelParams::default()).unwrap();
            (name.to_string(), r)
        })
        .collect();
    for metric in [RankMetric::Lambda, RankMetric::BigLambda] {
        println!("by {metric}:");
        for r in rank_traces(&reports, metric).unwrap() {
            let value = r.value.map_or("undefined".to_string(), |v| v.to_string());
            println!(
                "  {}. {:<11} {:>12}  {}",
                r.rank,
                r.name,
                value,
                r.warnings.join("; ")
            );
        }
    }
}
